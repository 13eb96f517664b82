#include "fbv/io.hpp"

#include "fbv/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>

namespace fbv {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::vector<std::string> split_csv(const std::string& line) {
  std::vector<std::string> out;
  std::string cell;
  std::istringstream in(line);
  while (std::getline(in, cell, ',')) {
    const auto a = cell.find_first_not_of(" \t\r");
    const auto b = cell.find_last_not_of(" \t\r");
    out.push_back(a == std::string::npos ? "" : cell.substr(a, b - a + 1));
  }
  return out;
}

std::string fixed4(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

}  // namespace

std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.9g", v == 0.0 ? 0.0 : v);
  return buf;
}

void write_curve_csv(const Curve& curve, double period_log, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "r,neg_ln_r,phase,N_lo,N_hi,width\n";
  const double z0 = curve.samples.empty() ? 0.0 : -std::log(curve.samples.front().x);
  for (const auto& s : curve.samples) {
    const double z = -std::log(s.x);
    double phase = 0.0;
    if (period_log > 0.0) {
      phase = std::fmod(z - z0, period_log);
      if (phase < 0.0) phase += period_log;
      if (period_log - phase < 1e-9 * period_log) phase = 0.0;
    }
    out << format_number(s.x) << ',' << format_number(z) << ',' << format_number(phase) << ','
        << format_number(s.lo) << ',' << format_number(s.hi) << ',' << format_number(s.width()) << '\n';
  }
  finish(out, path);
}

void write_heat_csv(const HeatCurve& curve, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t,neg_ln_t,k_steps,value,rescaled_value\n";
  for (const auto& s : curve.samples)
    out << format_number(s.t) << ',' << format_number(-std::log(s.t)) << ',' << s.steps << ','
        << format_number(s.value) << ',' << format_number(s.rescaled) << '\n';
  finish(out, path);
}

void write_hitting_csv(const HittingTail& tail, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "t,neg_ln_t,k_steps,value,rescaled_value,exits,samples,ci_lo,ci_hi\n";
  for (std::size_t i = 0; i < tail.points.size(); ++i) {
    const auto& p = tail.points[i];
    out << format_number(p.t) << ',' << format_number(-std::log(p.t)) << ',' << p.steps << ','
        << format_number(p.probability) << ',' << format_number(tail.scaled_distance[i]) << ',' << p.exits << ','
        << p.samples << ',' << format_number(p.ci_lo) << ',' << format_number(p.ci_hi) << '\n';
  }
  finish(out, path);
}

void write_fold_csv(const PhaseProfile& profile, const std::filesystem::path& path) {
  auto out = open_out(path);
  out << "phase,mean,spread,n_samples\n";
  for (const auto& b : profile.bins)
    out << format_number(b.phase) << ',' << format_number(b.mean) << ',' << format_number(b.spread) << ','
        << b.n_samples << '\n';
  finish(out, path);
}

Curve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  std::string line;
  if (!std::getline(in, line)) throw IoError("empty file " + path.string());
  const auto header = split_csv(line);
  auto col = [&](const std::string& name) {
    const auto it = std::find(header.begin(), header.end(), name);
    return it == header.end() ? -1 : static_cast<int>(it - header.begin());
  };
  Curve curve;
  int cx = -1, clo = -1, chi = -1;
  if (col("N_lo") >= 0 && col("N_hi") >= 0 && col("r") >= 0) {
    cx = col("r");
    clo = col("N_lo");
    chi = col("N_hi");
    curve.scale = Abscissa::radius;
  } else if (col("rescaled_value") >= 0 && col("t") >= 0 && col("exits") < 0) {
    cx = col("t");
    clo = chi = col("rescaled_value");
    curve.scale = Abscissa::time;
  } else if (header.size() == 2) {
    cx = 0;
    clo = chi = 1;
  } else {
    throw IoError(path.string() + ": unrecognised CSV header '" + line + "'");
  }
  int line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const auto cells = split_csv(line);
    const int need = std::max({cx, clo, chi});
    if (static_cast<int>(cells.size()) <= need)
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": too few columns");
    try {
      curve.samples.push_back({std::stod(cells[cx]), std::stod(cells[clo]), std::stod(cells[chi])});
    } catch (const std::exception&) {
      throw IoError(path.string() + ":" + std::to_string(line_no) + ": not a number");
    }
  }
  return curve;
}

void write_svg(const Curve& curve, const std::filesystem::path& path, const std::string& title) {
  constexpr double W = 640, H = 400, pad = 48;
  auto out = open_out(path);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"640\" height=\"400\" viewBox=\"0 0 640 400\">\n";
  out << "<rect width=\"640\" height=\"400\" fill=\"white\"/>\n";
  if (!title.empty()) out << "<text x=\"48\" y=\"24\" font-family=\"monospace\" font-size=\"14\">" << title << "</text>\n";
  double x0 = std::numeric_limits<double>::infinity(), x1 = -x0, y0 = x0, y1 = -x0;
  const bool log_x = curve.scale != Abscissa::log;
  auto xof = [&](const CurveSample& s) { return log_x ? -std::log(s.x) : s.x; };
  for (const auto& s : curve.samples) {
    x0 = std::min(x0, xof(s));
    x1 = std::max(x1, xof(s));
    y0 = std::min(y0, s.lo);
    y1 = std::max(y1, s.hi);
  }
  out << "<rect x=\"48\" y=\"48\" width=\"544\" height=\"304\" fill=\"none\" stroke=\"black\"/>\n";
  if (!curve.samples.empty()) {
    if (x1 == x0) x1 = x0 + 1.0;
    if (y1 == y0) {
      y0 -= 0.5;
      y1 += 0.5;
    }
    auto px = [&](double x) { return pad + (x - x0) / (x1 - x0) * (W - 2 * pad); };
    auto py = [&](double y) { return H - pad - (y - y0) / (y1 - y0) * (H - 2 * pad); };
    const bool interval = std::any_of(curve.samples.begin(), curve.samples.end(),
                                      [](const CurveSample& s) { return s.hi != s.lo; });
    auto polyline = [&](bool upper, const char* colour) {
      out << "<polyline fill=\"none\" stroke=\"" << colour << "\" stroke-width=\"1.5\" points=\"";
      for (std::size_t i = 0; i < curve.samples.size(); ++i) {
        const auto& s = curve.samples[i];
        out << (i ? " " : "") << fixed4(px(xof(s))) << ',' << fixed4(py(upper ? s.hi : s.lo));
      }
      out << "\"/>\n";
    };
    polyline(false, "steelblue");
    if (interval) polyline(true, "firebrick");
    out << "<text x=\"48\" y=\"372\" font-family=\"monospace\" font-size=\"11\">" << (log_x ? "-ln x: " : "z: ")
        << format_number(x0) << " .. " << format_number(x1) << "</text>\n";
    out << "<text x=\"300\" y=\"372\" font-family=\"monospace\" font-size=\"11\">y: " << format_number(y0) << " .. "
        << format_number(y1) << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, path);
}

Summary& Summary::add(const std::string& key, const std::string& value) {
  items_.emplace_back(key, value);
  return *this;
}
Summary& Summary::add(const std::string& key, double value) { return add(key, format_number(value)); }
Summary& Summary::add(const std::string& key, long long value) { return add(key, std::to_string(value)); }
Summary& Summary::add(const std::string& key, bool value) { return add(key, std::string(value ? "true" : "false")); }

std::string Summary::str() const {
  std::string s;
  for (const auto& [k, v] : items_) {
    if (!s.empty()) s += ' ';
    s += k + '=' + v;
  }
  return s;
}

}  // namespace fbv
