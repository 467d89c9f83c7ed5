#include "apnn/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>

#include "apnn/errors.hpp"

namespace apnn {

std::size_t CsvTable::column(const std::string& name) const {
  auto it = std::find(header.begin(), header.end(), name);
  if (it == header.end()) throw ConfigError("csv", "missing column '" + name + "'");
  return static_cast<std::size_t>(it - header.begin());
}

namespace {

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::stringstream ss(line);
  std::string cell;
  while (std::getline(ss, cell, ',')) {
    while (!cell.empty() && (cell.back() == '\r' || cell.back() == ' ')) cell.pop_back();
    out.push_back(cell);
  }
  return out;
}

std::string join(const std::vector<std::string>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) s += (i ? "," : "") + v[i];
  return s;
}

}  // namespace

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path.string());
  CsvTable t;
  std::string line;
  if (!std::getline(in, line)) throw ConfigError("csv", path.string() + " is empty");
  t.header = split(line);
  long lineno = 1;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line == "\r") continue;
    const auto cells = split(line);
    if (cells.size() != t.header.size()) {
      throw ConfigError("csv", "line " + std::to_string(lineno) + " has " +
                                   std::to_string(cells.size()) + " cells, header has " +
                                   std::to_string(t.header.size()));
    }
    std::vector<double> row;
    for (const auto& c : cells) {
      try {
        std::size_t used = 0;
        row.push_back(std::stod(c, &used));
        if (used != c.size()) throw std::invalid_argument(c);
      } catch (const std::exception&) {
        throw ConfigError("csv", "line " + std::to_string(lineno) + ": '" + c + "' is not a number");
      }
    }
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string format_csv(const CsvTable& table) {
  std::string out = join(table.header) + "\n";
  char buf[32];
  for (const auto& row : table.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      std::snprintf(buf, sizeof buf, "%.17g", row[i]);
      if (i) out += ',';
      out += buf;
    }
    out += '\n';
  }
  return out;
}

PlotKind parse_plot_kind(const std::string& s) {
  if (s == "loss") return PlotKind::kLoss;
  if (s == "error") return PlotKind::kError;
  if (s == "profile") return PlotKind::kProfile;
  if (s == "field") return PlotKind::kField;
  if (s == "sweep") return PlotKind::kSweep;
  throw ConfigError("kind", "expected loss, error, profile, field or sweep, got '" + s + "'");
}

std::vector<std::string> expected_columns(PlotKind kind) {
  switch (kind) {
    case PlotKind::kLoss: return {"iter", "total", "residual", "initial", "boundary"};
    case PlotKind::kError: return {"iter", "rel_l2"};
    case PlotKind::kProfile: return {"x", "t", "rho_pred", "rho_ref"};
    case PlotKind::kField: return {"x", "y", "t", "rho_pred", "rho_ref"};
    case PlotKind::kSweep: return {"epsilon", "rel_l2", "loss", "loss_over_eps", "loss_plus_eps2"};
  }
  return {};
}

namespace {

constexpr double kWidth = 720, kHeight = 450;
constexpr double kLeft = 80, kRight = 20, kTop = 36, kBottom = 56;
const char* const kColors[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#8c564b"};

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

struct Axis {
  double lo = 0, hi = 1;
  bool log = false;

  double map(double v) const {
    const double a = log ? std::log10(v) : v;
    return (a - lo) / (hi - lo);
  }
};

Axis make_axis(const std::vector<double>& values, bool log) {
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (double v : values) {
    if (!std::isfinite(v) || (log && v <= 0)) continue;
    const double a = log ? std::log10(v) : v;
    lo = std::min(lo, a);
    hi = std::max(hi, a);
  }
  if (!std::isfinite(lo)) lo = 0, hi = 1;
  if (log) {
    lo = std::floor(lo);
    hi = std::ceil(hi);
    if (hi <= lo) hi = lo + 1;
  } else {
    if (hi - lo < 1e-12 * std::max(1.0, std::abs(hi))) {
      lo -= 0.5;
      hi += 0.5;
    }
    const double pad = 0.04 * (hi - lo);
    lo -= pad;
    hi += pad;
  }
  return {lo, hi, log};
}

class Svg {
 public:
  Svg() {
    out_ << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
         << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\">\n"
         << "<rect x=\"0\" y=\"0\" width=\"" << kWidth << "\" height=\"" << kHeight
         << "\" fill=\"white\"/>\n";
  }

  void text(double x, double y, const std::string& s, const char* anchor = "middle", int size = 12) {
    out_ << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" font-family=\"sans-serif\" font-size=\""
         << size << "\" text-anchor=\"" << anchor << "\">" << s << "</text>\n";
  }
  void line(double x1, double y1, double x2, double y2, const char* stroke = "#333") {
    out_ << "<line x1=\"" << fmt(x1) << "\" y1=\"" << fmt(y1) << "\" x2=\"" << fmt(x2) << "\" y2=\""
         << fmt(y2) << "\" stroke=\"" << stroke << "\" stroke-width=\"1\"/>\n";
  }
  void rect(double x, double y, double w, double h, const std::string& fill) {
    out_ << "<rect x=\"" << fmt(x) << "\" y=\"" << fmt(y) << "\" width=\"" << fmt(w) << "\" height=\""
         << fmt(h) << "\" fill=\"" << fill << "\"/>\n";
  }
  void polyline(const std::vector<std::pair<double, double>>& pts, const char* color, bool dashed) {
    out_ << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\"";
    if (dashed) out_ << " stroke-dasharray=\"6 3\"";
    out_ << " points=\"";
    for (std::size_t i = 0; i < pts.size(); ++i) {
      out_ << (i ? " " : "") << fmt(pts[i].first) << ',' << fmt(pts[i].second);
    }
    out_ << "\"/>\n";
  }
  void circle(double x, double y, const char* color) {
    out_ << "<circle cx=\"" << fmt(x) << "\" cy=\"" << fmt(y) << "\" r=\"3\" fill=\"" << color << "\"/>\n";
  }
  std::string finish() {
    out_ << "</svg>\n";
    return out_.str();
  }

 private:
  std::ostringstream out_;
};

struct Frame {
  double x0, y0, w, h;  // plot area in pixels
  Axis ax, ay;

  double px(double v) const { return x0 + ax.map(v) * w; }
  double py(double v) const { return y0 + h - ay.map(v) * h; }
};

void draw_axes(Svg& svg, const Frame& f, const std::string& xlabel, const std::string& ylabel,
               const std::string& title) {
  svg.line(f.x0, f.y0 + f.h, f.x0 + f.w, f.y0 + f.h);
  svg.line(f.x0, f.y0, f.x0, f.y0 + f.h);
  auto ticks = [](const Axis& a) {
    std::vector<double> t;
    if (a.log) {
      const int step = std::max(1, static_cast<int>(std::ceil((a.hi - a.lo) / 8)));
      for (int e = static_cast<int>(a.lo); e <= static_cast<int>(a.hi); e += step) t.push_back(std::pow(10.0, e));
    } else {
      for (int i = 0; i <= 4; ++i) t.push_back(a.lo + (a.hi - a.lo) * i / 4.0);
    }
    return t;
  };
  for (double v : ticks(f.ax)) {
    const double x = f.px(v);
    svg.line(x, f.y0 + f.h, x, f.y0 + f.h + 5);
    svg.text(x, f.y0 + f.h + 18, label(v));
  }
  for (double v : ticks(f.ay)) {
    const double y = f.py(v);
    svg.line(f.x0 - 5, y, f.x0, y);
    svg.text(f.x0 - 8, y + 4, label(v), "end");
  }
  svg.text(f.x0 + f.w / 2, kHeight - 14, xlabel);
  svg.text(f.x0 + f.w / 2, 22, title, "middle", 14);
  svg.text(16, f.y0 + f.h / 2, ylabel, "middle");
}

void legend(Svg& svg, const Frame& f, int slot, const char* color, const std::string& name) {
  const double x = f.x0 + f.w - 150, y = f.y0 + 8 + 16 * slot;
  svg.rect(x, y, 14, 4, color);
  svg.text(x + 20, y + 6, name, "start", 11);
}

Frame frame(const Axis& ax, const Axis& ay) {
  return {kLeft, kTop, kWidth - kLeft - kRight, kHeight - kTop - kBottom, ax, ay};
}

std::vector<double> column_values(const CsvTable& t, std::size_t c) {
  std::vector<double> v;
  v.reserve(t.rows.size());
  for (const auto& r : t.rows) v.push_back(r[c]);
  return v;
}

std::string render_history(const CsvTable& t, const std::vector<std::string>& series,
                           const std::string& title) {
  const std::size_t it = t.column("iter");
  std::vector<double> ys;
  for (const auto& s : series) {
    const auto v = column_values(t, t.column(s));
    ys.insert(ys.end(), v.begin(), v.end());
  }
  const Frame f = frame(make_axis(column_values(t, it), false), make_axis(ys, true));
  Svg svg;
  draw_axes(svg, f, "iteration", title, title);
  for (std::size_t k = 0; k < series.size(); ++k) {
    const std::size_t c = t.column(series[k]);
    std::vector<std::pair<double, double>> pts;
    for (const auto& r : t.rows) {
      if (r[c] > 0 && std::isfinite(r[c])) pts.emplace_back(f.px(r[it]), f.py(r[c]));
    }
    if (pts.empty()) continue;
    svg.polyline(pts, kColors[k % 6], false);
    legend(svg, f, static_cast<int>(k), kColors[k % 6], series[k]);
  }
  return svg.finish();
}

std::string render_profile(const CsvTable& t) {
  const std::size_t cx = t.column("x"), ct = t.column("t"), cp = t.column("rho_pred"),
                    cr = t.column("rho_ref");
  std::vector<double> times;
  for (const auto& r : t.rows) {
    if (std::find(times.begin(), times.end(), r[ct]) == times.end()) times.push_back(r[ct]);
  }
  std::vector<double> ys = column_values(t, cp), yr = column_values(t, cr);
  ys.insert(ys.end(), yr.begin(), yr.end());
  const Frame f = frame(make_axis(column_values(t, cx), false), make_axis(ys, false));
  Svg svg;
  draw_axes(svg, f, "x", "rho", "density profiles (solid: network, dashed: reference)");
  for (std::size_t k = 0; k < times.size(); ++k) {
    std::vector<std::pair<double, double>> pred, ref;
    for (const auto& r : t.rows) {
      if (r[ct] != times[k]) continue;
      pred.emplace_back(f.px(r[cx]), f.py(r[cp]));
      ref.emplace_back(f.px(r[cx]), f.py(r[cr]));
    }
    svg.polyline(pred, kColors[k % 6], false);
    svg.polyline(ref, kColors[k % 6], true);
    legend(svg, f, static_cast<int>(k), kColors[k % 6], "t = " + label(times[k]));
  }
  return svg.finish();
}

std::string heat_color(double s) {
  // Blue -> white -> red.
  s = std::clamp(s, 0.0, 1.0);
  int r, g, b;
  if (s < 0.5) {
    const double u = s / 0.5;
    r = static_cast<int>(std::lround(59 + u * (245 - 59)));
    g = static_cast<int>(std::lround(76 + u * (245 - 76)));
    b = static_cast<int>(std::lround(192 + u * (245 - 192)));
  } else {
    const double u = (s - 0.5) / 0.5;
    r = static_cast<int>(std::lround(245 + u * (180 - 245)));
    g = static_cast<int>(std::lround(245 + u * (4 - 245)));
    b = static_cast<int>(std::lround(245 + u * (38 - 245)));
  }
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", r, g, b);
  return buf;
}

std::string render_field(const CsvTable& t) {
  const std::size_t cx = t.column("x"), cy = t.column("y"), ct = t.column("t"),
                    cp = t.column("rho_pred"), cr = t.column("rho_ref");
  if (t.rows.empty()) throw ConfigError("csv", "field table has no rows");
  double last = t.rows.front()[ct];
  for (const auto& r : t.rows) last = std::max(last, r[ct]);
  std::vector<double> xs, ys;
  double lo = std::numeric_limits<double>::infinity(), hi = -lo;
  for (const auto& r : t.rows) {
    if (r[ct] != last) continue;
    xs.push_back(r[cx]);
    ys.push_back(r[cy]);
    lo = std::min({lo, r[cp], r[cr]});
    hi = std::max({hi, r[cp], r[cr]});
  }
  std::sort(xs.begin(), xs.end());
  xs.erase(std::unique(xs.begin(), xs.end()), xs.end());
  std::sort(ys.begin(), ys.end());
  ys.erase(std::unique(ys.begin(), ys.end()), ys.end());
  if (hi <= lo) hi = lo + 1.0;

  Svg svg;
  svg.text(kWidth / 2, 22, "density at t = " + label(last) + " (left: network, right: reference)",
           "middle", 14);
  const double size = std::min((kWidth - 3 * 30) / 2, kHeight - kTop - kBottom);
  const double cw = size / static_cast<double>(xs.size()), ch = size / static_cast<double>(ys.size());
  for (int panel = 0; panel < 2; ++panel) {
    const double x0 = 30 + panel * (size + 30);
    const std::size_t cv = panel == 0 ? cp : cr;
    for (const auto& r : t.rows) {
      if (r[ct] != last) continue;
      const auto ix = std::lower_bound(xs.begin(), xs.end(), r[cx]) - xs.begin();
      const auto iy = std::lower_bound(ys.begin(), ys.end(), r[cy]) - ys.begin();
      // Slight overlap hides antialiasing seams between cells.
      svg.rect(x0 + ix * cw, kTop + size - (iy + 1) * ch, cw + 0.3, ch + 0.3,
               heat_color((r[cv] - lo) / (hi - lo)));
    }
  }
  svg.text(kWidth / 2, kHeight - 14, "color range " + label(lo) + " .. " + label(hi));
  return svg.finish();
}

std::string render_sweep(const CsvTable& t) {
  const std::size_t ce = t.column("epsilon"), cr = t.column("rel_l2");
  const Frame f = frame(make_axis(column_values(t, ce), true), make_axis(column_values(t, cr), true));
  Svg svg;
  draw_axes(svg, f, "epsilon", "relative l2 error", "final error against epsilon");
  std::vector<std::pair<double, double>> pts;
  for (const auto& r : t.rows) {
    if (r[ce] > 0 && r[cr] > 0) pts.emplace_back(f.px(r[ce]), f.py(r[cr]));
  }
  svg.polyline(pts, kColors[0], false);
  for (const auto& [x, y] : pts) svg.circle(x, y, kColors[0]);
  return svg.finish();
}

}  // namespace

std::string render_svg(const CsvTable& table, PlotKind kind) {
  const auto want = expected_columns(kind);
  if (table.header != want) {
    throw ConfigError("csv", "expected columns '" + join(want) + "', found '" + join(table.header) + "'");
  }
  switch (kind) {
    case PlotKind::kLoss: return render_history(table, {"total", "residual", "initial", "boundary"}, "loss");
    case PlotKind::kError: return render_history(table, {"rel_l2"}, "relative l2 error");
    case PlotKind::kProfile: return render_profile(table);
    case PlotKind::kField: return render_field(table);
    case PlotKind::kSweep: return render_sweep(table);
  }
  return {};
}

}  // namespace apnn
