#include "fbv/cli.hpp"

#include <iostream>

int main(int argc, char** argv) { return fbv::cli::run(argc, argv, std::cout, std::cerr); }
