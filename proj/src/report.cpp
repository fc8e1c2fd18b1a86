#include "blockfa/experiment.hpp"

#include <json.hpp>

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

#include <omp.h>

namespace blockfa {

std::string format_real(Real x) {
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), x);
  if (ec != std::errc()) return "nan";
  return std::string(buf.data(), ptr);
}

// ---------------------------------------------------------------- CSV

namespace {

void csv_header(std::ostringstream& os, const std::vector<std::string>& cols) {
  for (std::size_t i = 0; i < cols.size(); ++i) os << (i ? "," : "") << cols[i];
  os << '\n';
}

void csv_rows(std::ostringstream& os, const PointResult& p) {
  for (const auto& row : p.rows) {
    for (const auto& v : row.values) {
      if (v) os << format_real(*v);
      os << ',';
    }
    os << row.status << '\n';
  }
}

std::string point_csv_name(const ExperimentResult& r, const PointResult& p) {
  return r.config.name + ".p" + std::to_string(p.point.index) + ".csv";
}

}  // namespace

std::string to_csv(const ExperimentResult& r) {
  std::ostringstream os;
  csv_header(os, r.columns);
  for (const auto& p : r.points) csv_rows(os, p);
  return os.str();
}

std::string to_csv(const ExperimentResult& r, const PointResult& p) {
  std::ostringstream os;
  csv_header(os, r.columns);
  csv_rows(os, p);
  return os.str();
}

// ---------------------------------------------------------------- JSON

std::string to_json(const ExperimentResult& r) {
  using nlohmann::ordered_json;
  ordered_json j;
  const auto& c = r.config;
  j["name"] = c.name;
  j["description"] = c.description;
  j["kind"] = to_string(c.kind);
  j["status"] = !r.skipped.empty() ? "skipped" : r.numerical_failure() ? "numerical_failure" : "ok";
  if (!r.skipped.empty()) j["skipped"] = r.skipped;
  ordered_json cfg = ordered_json::object();
  for (const auto& [k, v] : c.source.entries()) cfg[k] = v;
  j["config"] = cfg;

  if (r.skipped.empty()) {
    ordered_json prob;
    prob["description"] = r.problem.description;
    prob["n"] = r.problem.n;
    prob["lambda_min"] = r.problem.lambda_min;
    prob["lambda_max"] = r.problem.lambda_max;
    prob["w"] = r.problem.w;
    prob["origin"] = r.problem.origin;
    ordered_json sets = ordered_json::array();
    for (const auto& s : r.problem.spectrum) sets.push_back({s.lo, s.hi});
    prob["spectrum"] = sets;
    if (!r.problem.substitution.empty()) prob["substitution"] = r.problem.substitution;
    j["problem"] = prob;
  }

  ordered_json env;
#ifdef __VERSION__
  env["compiler"] = __VERSION__;
#endif
  env["cplusplus"] = __cplusplus;
  env["eigen"] = std::to_string(EIGEN_WORLD_VERSION) + "." + std::to_string(EIGEN_MAJOR_VERSION) + "." +
                 std::to_string(EIGEN_MINOR_VERSION);
  env["openmp_max_threads"] = omp_get_max_threads();
  env["exec"] = default_exec() == Exec::parallel ? "parallel" : "serial";
  j["environment"] = env;

  j["columns"] = r.columns;
  ordered_json pts = ordered_json::array();
  for (const auto& p : r.points) {
    ordered_json o;
    o["index"] = p.point.index;
    o["b"] = p.point.b;
    o["reorth"] = p.point.reorth;
    o["radius"] = p.point.radius;
    o["theta"] = p.point.theta;
    o["radius_value"] = p.radius;
    o["theta_value"] = p.theta;
    o["lookahead"] = p.point.lookahead;
    o["rows"] = p.rows.size();
    o["final_k"] = p.final_k;
    o["final_true_error"] = p.final_true_error ? ordered_json(*p.final_true_error) : ordered_json(nullptr);
    o["converged"] = p.converged;
    o["errors"] = p.errors;
    o["seconds"] = p.seconds;
    if (r.points.size() > 1) o["csv"] = point_csv_name(r, p);
    pts.push_back(std::move(o));
  }
  j["points"] = pts;
  return j.dump(2) + "\n";
}

// ---------------------------------------------------------------- SVG

namespace {

std::string fmt(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", x);
  return buf;
}

std::string short_num(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", x);
  return buf;
}

std::string escape(const std::string& s) {
  std::string o;
  for (char ch : s) {
    switch (ch) {
      case '&': o += "&amp;"; break;
      case '<': o += "&lt;"; break;
      case '>': o += "&gt;"; break;
      case '"': o += "&quot;"; break;
      default: o += ch;
    }
  }
  return o;
}

struct Rgb {
  double r, g, b;
};

std::string hex(const Rgb& c) {
  char buf[8];
  auto ch = [](double v) { return static_cast<int>(std::lround(std::clamp(v, 0.0, 1.0) * 255)); };
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", ch(c.r), ch(c.g), ch(c.b));
  return buf;
}

Rgb lerp(const std::vector<Rgb>& anchors, double t) {
  t = std::clamp(t, 0.0, 1.0) * static_cast<double>(anchors.size() - 1);
  const std::size_t i = std::min(anchors.size() - 2, static_cast<std::size_t>(t));
  const double u = t - static_cast<double>(i);
  const auto& a = anchors[i];
  const auto& b = anchors[i + 1];
  return {a.r + u * (b.r - a.r), a.g + u * (b.g - a.g), a.b + u * (b.b - a.b)};
}

// Sequential map (viridis anchors) and diverging map (blue, white, red).
Rgb sequential(double t) {
  static const std::vector<Rgb> a = {{0.267, 0.005, 0.329}, {0.231, 0.322, 0.545}, {0.129, 0.569, 0.549},
                                     {0.369, 0.788, 0.384}, {0.992, 0.906, 0.145}};
  return lerp(a, t);
}
Rgb diverging(double t) {
  static const std::vector<Rgb> a = {{0.129, 0.400, 0.675}, {0.969, 0.969, 0.969}, {0.698, 0.094, 0.169}};
  return lerp(a, t);
}

const std::array<const char*, 8> palette = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                            "#9467bd", "#8c564b", "#e377c2", "#17becf"};

struct Frame {
  double x = 0, y = 0, w = 360, h = 280;
  double left = 62, right = 12, top = 28, bottom = 38;
  double px0() const { return x + left; }
  double px1() const { return x + w - right; }
  double py0() const { return y + h - bottom; }
  double py1() const { return y + top; }
};

class Svg {
 public:
  Svg(double w, double h) : w_(w), h_(h) {}
  void raw(const std::string& s) { body_ << s << '\n'; }
  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 11) {
    body_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-size=\"" << size << "\" text-anchor=\""
          << anchor << "\">" << escape(s) << "</text>\n";
  }
  void line(double x0, double y0, double x1, double y1, const char* stroke = "#000", double width = 1) {
    body_ << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\"" << fmt(y1)
          << "\" stroke=\"" << stroke << "\" stroke-width=\"" << fmt(width) << "\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill, const char* stroke = nullptr) {
    body_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\"" << fmt(h)
          << "\" fill=\"" << fill << "\"";
    if (stroke) body_ << " stroke=\"" << stroke << "\"";
    body_ << "/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* stroke, const char* dash) {
    if (pts.size() < 2) return;
    body_ << "<polyline fill=\"none\" stroke=\"" << stroke << "\" stroke-width=\"1.5\"";
    if (dash && *dash) body_ << " stroke-dasharray=\"" << dash << "\"";
    body_ << " points=\"";
    for (const auto& [x, y] : pts) body_ << fmt(x) << ',' << fmt(y) << ' ';
    body_ << "\"/>\n";
  }
  std::string str() const {
    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << fmt(w_) << "\" height=\"" << fmt(h_)
       << "\" font-family=\"sans-serif\">\n";
    os << "<rect width=\"100%\" height=\"100%\" fill=\"#fff\"/>\n" << body_.str() << "</svg>\n";
    return os.str();
  }

 private:
  double w_, h_;
  std::ostringstream body_;
};

struct Series {
  std::string label;
  std::vector<std::pair<double, double>> pts;  // (x, value)
  const char* color;
  const char* dash;
};

std::string point_label(const ExperimentResult& r, const PointResult& p) {
  const auto& c = r.config;
  std::string s = "b=" + std::to_string(p.point.b);
  if (c.reorth.size() > 1) s += p.point.reorth ? " reorth" : " no reorth";
  if (c.radius.size() > 1) s += " R=" + p.point.radius;
  if (c.theta.size() > 1) s += " theta=" + p.point.theta;
  if (c.lookahead.size() > 1 || c.kind == ExperimentKind::cg_estimate) s += " d=" + std::to_string(p.point.lookahead);
  return s;
}

int column(const ExperimentResult& r, const std::string& name) {
  const auto it = std::find(r.columns.begin(), r.columns.end(), name);
  return it == r.columns.end() ? -1 : static_cast<int>(it - r.columns.begin());
}

// Log-y chart of several series against x in one frame.
void log_chart(Svg& svg, const Frame& f, const std::string& title, const std::string& xlabel,
               const std::vector<Series>& series) {
  double xmin = INFINITY, xmax = -INFINITY, lmin = INFINITY, lmax = -INFINITY;
  for (const auto& s : series)
    for (const auto& [x, v] : s.pts) {
      if (!(v > 0) || !std::isfinite(v)) continue;
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      lmin = std::min(lmin, std::log10(v));
      lmax = std::max(lmax, std::log10(v));
    }
  svg.text(f.x + f.w / 2, f.y + 16, title);
  svg.rect(f.px0(), f.py1(), f.px1() - f.px0(), f.py0() - f.py1(), "none", "#000");
  if (!std::isfinite(xmin)) return;
  lmin = std::floor(lmin);
  lmax = std::ceil(lmax);
  if (lmax <= lmin) lmax = lmin + 1;
  if (xmax <= xmin) xmax = xmin + 1;
  auto sx = [&](double x) { return f.px0() + (x - xmin) / (xmax - xmin) * (f.px1() - f.px0()); };
  auto sy = [&](double l) { return f.py0() - (l - lmin) / (lmax - lmin) * (f.py0() - f.py1()); };
  const int step = std::max(1, static_cast<int>(std::ceil((lmax - lmin) / 8)));
  for (int e = static_cast<int>(lmin); e <= static_cast<int>(lmax); e += step) {
    svg.line(f.px0(), sy(e), f.px1(), sy(e), "#ddd", 0.5);
    svg.text(f.px0() - 4, sy(e) + 4, "1e" + std::to_string(e), "end", 9);
  }
  for (int i = 0; i <= 4; ++i) {
    const double x = xmin + (xmax - xmin) * i / 4;
    svg.text(sx(x), f.py0() + 13, short_num(x), "middle", 9);
  }
  svg.text(f.x + f.w / 2, f.py0() + 30, xlabel, "middle", 10);
  for (const auto& s : series) {
    std::vector<std::pair<double, double>> pts;
    for (const auto& [x, v] : s.pts)
      if (v > 0 && std::isfinite(v)) pts.emplace_back(sx(x), sy(std::log10(v)));
    svg.polyline(pts, s.color, s.dash);
  }
}

void legend(Svg& svg, double x, double y, const std::vector<Series>& series) {
  for (std::size_t i = 0; i < series.size(); ++i) {
    const double yy = y + 14 * static_cast<double>(i);
    svg.polyline({{x, yy}, {x + 24, yy}}, series[i].color, series[i].dash);
    svg.text(x + 30, yy + 4, series[i].label, "start", 10);
  }
}

std::vector<Series> line_series(const ExperimentResult& r, const PointResult& p, const char* color_override) {
  struct Spec {
    const char* col;
    const char* label;
    const char* dash;
  };
  std::vector<Spec> specs;
  if (r.config.kind == ExperimentKind::cg_estimate) {
    specs = {{"true_error", "error", ""}, {"cg_estimate", "estimate", "6,3"}};
  } else {
    specs = {{"true_error", "error", ""},
             {"triangle_integral", "triangle inequality", "6,3"},
             {"computable_bound", "computable bound", "2,2"},
             {"fp_extra_term", "fp term", "8,3,2,3"}};
  }
  const int kc = column(r, "k");
  std::vector<Series> out;
  for (std::size_t s = 0; s < specs.size(); ++s) {
    const int c = column(r, specs[s].col);
    Series ser{specs[s].label, {}, color_override ? color_override : palette[s % palette.size()], specs[s].dash};
    for (const auto& row : p.rows)
      if (row.values[c] && row.values[kc]) ser.pts.emplace_back(*row.values[kc], *row.values[c]);
    if (!ser.pts.empty()) out.push_back(std::move(ser));
  }
  return out;
}

std::pair<int, int> grid_shape(std::size_t panels) {
  const int cols = std::max(1, static_cast<int>(std::ceil(std::sqrt(static_cast<double>(panels)))));
  const int rows = static_cast<int>((panels + cols - 1) / cols);
  return {cols, rows};
}

std::string lines_svg(const ExperimentResult& r) {
  const bool panels = r.config.plot == "panels";
  if (!panels) {
    Frame f;
    f.w = 520;
    f.h = 360;
    const double legend_h = 16.0 * static_cast<double>(r.points.size() * 4);
    Svg svg(f.w + 240, std::max(f.h, legend_h + 40));
    std::vector<Series> all;
    for (std::size_t i = 0; i < r.points.size(); ++i) {
      auto ss = line_series(r, r.points[i], palette[i % palette.size()]);
      for (auto& s : ss) {
        s.label = point_label(r, r.points[i]) + " " + s.label;
        all.push_back(std::move(s));
      }
    }
    log_chart(svg, f, r.config.name, "k", all);
    legend(svg, f.w + 10, 30, all);
    return svg.str();
  }
  const auto [cols, rows] = grid_shape(r.points.size());
  Frame base;
  Svg svg(base.w * cols + 180, base.h * rows);
  std::vector<Series> keys;
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    Frame f = base;
    f.x = base.w * static_cast<double>(static_cast<int>(i) % cols);
    f.y = base.h * static_cast<double>(static_cast<int>(i) / cols);
    auto ss = line_series(r, r.points[i], nullptr);
    if (ss.size() > keys.size()) keys = ss;
    log_chart(svg, f, point_label(r, r.points[i]), "k", ss);
  }
  legend(svg, base.w * cols + 10, 30, keys);
  return svg.str();
}

// Raster of one panel; t in [0,1] per cell, NaN drawn grey.
void raster(Svg& svg, const Frame& f, const std::string& title, const std::vector<double>& xs,
            const std::vector<double>& ys, const std::map<std::pair<double, double>, double>& t, bool div) {
  svg.text(f.x + f.w / 2, f.y + 16, title);
  const double cw = (f.px1() - f.px0()) / static_cast<double>(xs.size());
  const double ch = (f.py0() - f.py1()) / static_cast<double>(ys.size());
  for (std::size_t i = 0; i < xs.size(); ++i)
    for (std::size_t j = 0; j < ys.size(); ++j) {
      const auto it = t.find({xs[i], ys[j]});
      const bool ok = it != t.end() && std::isfinite(it->second);
      const std::string color = ok ? hex(div ? diverging(it->second) : sequential(it->second)) : "#bbbbbb";
      svg.rect(f.px0() + cw * static_cast<double>(i), f.py0() - ch * static_cast<double>(j + 1), cw + 0.3, ch + 0.3,
               color);
    }
  svg.rect(f.px0(), f.py1(), f.px1() - f.px0(), f.py0() - f.py1(), "none", "#000");
  svg.text(f.px0(), f.py0() + 13, short_num(xs.front()), "start", 9);
  svg.text(f.px1(), f.py0() + 13, short_num(xs.back()), "end", 9);
  svg.text(f.px0() - 4, f.py0(), short_num(ys.front()), "end", 9);
  svg.text(f.px0() - 4, f.py1() + 8, short_num(ys.back()), "end", 9);
}

std::vector<double> sorted_unique(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  v.erase(std::unique(v.begin(), v.end()), v.end());
  return v;
}

std::string field_svg(const ExperimentResult& r) {
  const bool slack = r.config.kind == ExperimentKind::field_slack;
  const auto [cols, rows] = grid_shape(r.points.size());
  Frame base;
  Svg svg(base.w * cols, base.h * rows + 30);
  const int cre = column(r, "re"), cim = column(r, "im"), cv = column(r, "value");
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    Frame f = base;
    f.x = base.w * static_cast<double>(static_cast<int>(i) % cols);
    f.y = base.h * static_cast<double>(static_cast<int>(i) / cols);
    std::vector<double> xs, ys, mags;
    for (const auto& row : p.rows) {
      xs.push_back(*row.values[cre]);
      ys.push_back(*row.values[cim]);
      if (row.values[cv]) mags.push_back(std::abs(*row.values[cv]));
    }
    double tau = 1, vmax = 1;
    if (!mags.empty()) {
      std::vector<double> m = mags;
      std::nth_element(m.begin(), m.begin() + static_cast<long>(m.size() / 2), m.end());
      tau = m[m.size() / 2] > 0 ? m[m.size() / 2] : 1;
      vmax = *std::max_element(mags.begin(), mags.end());
    }
    std::map<std::pair<double, double>, double> t;
    for (const auto& row : p.rows) {
      if (!row.values[cv]) continue;
      const double v = *row.values[cv];
      double s;
      if (slack) {
        s = std::log10(std::max(v, 1.0)) / 3;
      } else {
        s = 0.5 + 0.5 * std::asinh(v / tau) / std::asinh(std::max(vmax / tau, 1e-300));
      }
      t[{*row.values[cre], *row.values[cim]}] = s;
    }
    raster(svg, f, point_label(r, p), sorted_unique(xs), sorted_unique(ys), t, !slack);
  }
  svg.text(10, base.h * rows + 20,
           slack ? "color: log10 T(z) from 0 to 3" : "color: asinh(v/tau)/asinh(max|v|/tau), tau = median |v|",
           "start", 10);
  return svg.str();
}

std::string ratio_heatmap_svg(const ExperimentResult& r) {
  const int cb = column(r, "computable_bound"), ct = column(r, "triangle_integral"), ce = column(r, "true_error");
  Frame base;
  Svg svg(base.w * 2, base.h + 30);
  std::vector<double> xs, ys;
  std::map<std::pair<double, double>, double> tb, tt;
  for (const auto& p : r.points) {
    xs.push_back(p.radius);
    ys.push_back(p.theta);
    if (p.rows.empty()) continue;
    const auto& row = p.rows.back();
    if (row.values[ce] && row.values[cb]) tb[{p.radius, p.theta}] = std::log10(*row.values[cb] / *row.values[ce]) / 3;
    if (row.values[ce] && row.values[ct]) tt[{p.radius, p.theta}] = std::log10(*row.values[ct] / *row.values[ce]) / 3;
  }
  xs = sorted_unique(xs);
  ys = sorted_unique(ys);
  Frame f = base;
  raster(svg, f, "computable bound / error", xs, ys, tb, false);
  f.x = base.w;
  raster(svg, f, "triangle inequality / error", xs, ys, tt, false);
  svg.text(10, base.h + 20, "x: radius, y: theta, color: log10 ratio from 0 to 3", "start", 10);
  return svg.str();
}

std::string contour_svg(const ExperimentResult& r) {
  const auto [cols, rows] = grid_shape(r.points.size());
  Frame base;
  base.left = base.right = base.bottom = 20;
  Svg svg(base.w * cols, base.h * rows);
  const int cc = column(r, "curve"), cre = column(r, "re"), cim = column(r, "im");
  for (std::size_t i = 0; i < r.points.size(); ++i) {
    const auto& p = r.points[i];
    Frame f = base;
    f.x = base.w * static_cast<double>(static_cast<int>(i) % cols);
    f.y = base.h * static_cast<double>(static_cast<int>(i) / cols);
    double x0 = INFINITY, x1 = -INFINITY, y0 = INFINITY, y1 = -INFINITY;
    for (const auto& row : p.rows) {
      x0 = std::min(x0, *row.values[cre]);
      x1 = std::max(x1, *row.values[cre]);
      y0 = std::min(y0, *row.values[cim]);
      y1 = std::max(y1, *row.values[cim]);
    }
    for (const auto& s : r.problem.spectrum) {
      x0 = std::min(x0, s.lo);
      x1 = std::max(x1, s.hi);
    }
    const double scale = std::min((f.px1() - f.px0()) / (x1 - x0), (f.py0() - f.py1()) / (y1 - y0));
    auto sx = [&](double x) { return f.px0() + (x - x0) * scale; };
    auto sy = [&](double y) { return f.py0() - (y - y0) * scale; };
    svg.text(f.x + f.w / 2, f.y + 16, "R=" + p.point.radius + " theta=" + p.point.theta);
    svg.line(sx(x0), sy(0), sx(x1), sy(0), "#bbb", 0.5);
    for (const auto& s : r.problem.spectrum) svg.line(sx(s.lo), sy(0), sx(s.hi), sy(0), "#d62728", 3);
    std::vector<std::pair<double, double>> pts;
    double curve = -1;
    for (const auto& row : p.rows) {
      if (*row.values[cc] != curve) {
        svg.polyline(pts, curve == 0 ? palette[0] : "#999", curve == 0 ? "" : "4,3");
        pts.clear();
        curve = *row.values[cc];
      }
      pts.emplace_back(sx(*row.values[cre]), sy(*row.values[cim]));
    }
    svg.polyline(pts, curve == 0 ? palette[0] : "#999", curve == 0 ? "" : "4,3");
  }
  return svg.str();
}

}  // namespace

std::string to_svg(const ExperimentResult& r) {
  if (!r.skipped.empty()) {
    Svg svg(420, 60);
    svg.text(10, 30, r.config.name + " skipped: " + r.skipped, "start", 12);
    return svg.str();
  }
  switch (r.config.kind) {
    case ExperimentKind::field_im:
    case ExperimentKind::field_slack: return field_svg(r);
    case ExperimentKind::contour: return contour_svg(r);
    default: return r.config.plot == "heatmap" ? ratio_heatmap_svg(r) : lines_svg(r);
  }
}

// ---------------------------------------------------------------- files

namespace {

void write_atomic(const std::filesystem::path& path, const std::string& text) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error(ErrorKind::InvalidArgument, "cannot write " + tmp.string());
    out << text;
    if (!out) throw Error(ErrorKind::InvalidArgument, "write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace

std::vector<std::filesystem::path> write_outputs(const ExperimentResult& r, const std::filesystem::path& outdir) {
  std::filesystem::create_directories(outdir);
  std::vector<std::filesystem::path> written;
  const std::string& name = r.config.name;
  if (r.points.size() > 1) {
    for (const auto& p : r.points) {
      written.push_back(outdir / point_csv_name(r, p));
      write_atomic(written.back(), to_csv(r, p));
    }
  }
  written.push_back(outdir / (name + ".csv"));
  write_atomic(written.back(), to_csv(r));
  written.push_back(outdir / (name + ".json"));
  write_atomic(written.back(), to_json(r));
  written.push_back(outdir / (name + ".svg"));
  write_atomic(written.back(), to_svg(r));
  return written;
}

}  // namespace blockfa
