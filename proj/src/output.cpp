#include "agepop/output.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <system_error>

#include "agepop/config.hpp"
#include "agepop/errors.hpp"

namespace agepop {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 480.0;
constexpr double kLeft = 80.0;
constexpr double kRight = 150.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 60.0;

std::ofstream open_for_write(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  return out;
}

void finish(std::ofstream& out, const std::filesystem::path& path) {
  out.flush();
  if (!out) throw IoError("write failed for " + path.string());
}

std::string escape_xml(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

// XML comments may not contain "--".
std::string svg_comment(std::string_view comment) {
  std::string body(comment);
  for (std::size_t p = body.find("--"); p != std::string::npos; p = body.find("--", p)) {
    body.replace(p, 2, "- -");
  }
  return "<!--\n" + body + "-->\n";
}

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

std::string coord(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.2f", v);
  return buf;
}

std::string tick_label(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::array<unsigned char, 3> colormap(double s) {
  static constexpr std::array<std::array<double, 3>, 5> stops = {{
      {68, 1, 84}, {59, 82, 139}, {33, 145, 140}, {94, 201, 98}, {253, 231, 37},
  }};
  s = std::clamp(std::isfinite(s) ? s : 0.0, 0.0, 1.0);
  const double p = s * static_cast<double>(stops.size() - 1);
  const auto i = std::min(static_cast<std::size_t>(p), stops.size() - 2);
  const double w = p - static_cast<double>(i);
  std::array<unsigned char, 3> out{};
  for (std::size_t c = 0; c < 3; ++c) {
    out[c] = static_cast<unsigned char>(
        std::lround((1.0 - w) * stops[i][c] + w * stops[i + 1][c]));
  }
  return out;
}

std::string hex(const std::array<unsigned char, 3>& rgb) {
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", rgb[0], rgb[1], rgb[2]);
  return buf;
}

void open_svg(std::ostream& out, std::string_view comment, const PlotLabels& labels) {
  out << svg_comment(comment);
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
      << kHeight << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight
      << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out << "<text x=\"" << coord(kWidth / 2) << "\" y=\"24\" text-anchor=\"middle\" "
      << "font-size=\"15\">" << escape_xml(labels.title) << "</text>\n";
  out << "<text x=\"" << coord(kLeft + (kWidth - kLeft - kRight) / 2) << "\" y=\""
      << coord(kHeight - 15) << "\" text-anchor=\"middle\">" << escape_xml(labels.x)
      << "</text>\n";
  const double yc = kTop + (kHeight - kTop - kBottom) / 2;
  out << "<text x=\"20\" y=\"" << coord(yc) << "\" text-anchor=\"middle\" transform=\"rotate(-90 20 "
      << coord(yc) << ")\">" << escape_xml(labels.y) << "</text>\n";
}

struct Axis {
  double lo = 0.0;
  double hi = 1.0;
  bool log = false;

  double map(double v, double from, double to) const {
    double a = lo, b = hi, x = v;
    if (log) {
      a = std::log10(lo);
      b = std::log10(hi);
      x = std::log10(std::max(v, lo));
    }
    return from + (x - a) / (b - a) * (to - from);
  }
};

void draw_axes(std::ostream& out, const Axis& ax, const Axis& ay) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<rect x=\"" << coord(x0) << "\" y=\"" << coord(y1) << "\" width=\"" << coord(x1 - x0)
      << "\" height=\"" << coord(y0 - y1) << "\" fill=\"none\" stroke=\"black\"/>\n";
  for (int i = 0; i <= 5; ++i) {
    const double v = ax.lo + (ax.hi - ax.lo) * i / 5.0;
    const double px = ax.map(v, x0, x1);
    out << "<line x1=\"" << coord(px) << "\" y1=\"" << coord(y0) << "\" x2=\"" << coord(px)
        << "\" y2=\"" << coord(y0 + 5) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(px) << "\" y=\"" << coord(y0 + 18)
        << "\" text-anchor=\"middle\">" << tick_label(v) << "</text>\n";
  }
  for (int i = 0; i <= 5; ++i) {
    double v = ay.lo + (ay.hi - ay.lo) * i / 5.0;
    if (ay.log) v = std::pow(10.0, std::log10(ay.lo) + (std::log10(ay.hi) - std::log10(ay.lo)) * i / 5.0);
    const double py = ay.map(v, y0, y1);
    out << "<line x1=\"" << coord(x0 - 5) << "\" y1=\"" << coord(py) << "\" x2=\"" << coord(x0)
        << "\" y2=\"" << coord(py) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << coord(x0 - 8) << "\" y=\"" << coord(py + 4)
        << "\" text-anchor=\"end\">" << tick_label(v) << "</text>\n";
  }
}

Axis span(double lo, double hi) {
  if (!std::isfinite(lo) || !std::isfinite(hi)) return {};
  if (hi <= lo) {
    const double pad = lo == 0.0 ? 1.0 : std::abs(lo) * 0.5;
    return {lo - pad, hi + pad, false};
  }
  return {lo, hi, false};
}

}  // namespace

// ------------------------------------------------------------------- CSV

CsvWriter::CsvWriter(const std::filesystem::path& path, std::string_view comment,
                     const std::vector<std::string>& columns)
    : path_(path), out_(open_for_write(path)), columns_(columns.size()) {
  out_ << comment;
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
  if (!out_) throw IoError("write failed for " + path_.string());
}

void CsvWriter::row(const std::vector<std::string>& cells) {
  if (cells.size() != columns_) throw ShapeError("csv row width differs from header");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i > 0) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  std::vector<std::string> cells;
  cells.reserve(values.size());
  for (double v : values) cells.push_back(format_number(v));
  row(cells);
}

void CsvWriter::close() {
  finish(out_, path_);
  out_.close();
}

// ------------------------------------------------------------------- SVG

void write_line_plot(const std::filesystem::path& path, std::string_view comment,
                     const PlotLabels& labels, const std::vector<PlotSeries>& series,
                     bool log_y) {
  static constexpr std::array<const char*, 6> palette = {
      "#1f77b4", "#d62728", "#2ca02c", "#9467bd", "#ff7f0e", "#17becf"};
  double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo;
  double ylo = xlo, yhi = -xlo;
  for (const auto& s : series) {
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      xlo = std::min(xlo, s.x[i]);
      xhi = std::max(xhi, s.x[i]);
      if (log_y && !(s.y[i] > 0.0)) continue;
      ylo = std::min(ylo, s.y[i]);
      yhi = std::max(yhi, s.y[i]);
    }
  }
  Axis ax = span(xlo, xhi);
  Axis ay = span(ylo, yhi);
  if (log_y && std::isfinite(ylo) && ylo > 0.0) {
    ay = {ylo, yhi > ylo ? yhi : ylo * 10.0, true};
  } else {
    log_y = false;
  }

  std::ofstream out = open_for_write(path);
  open_svg(out, comment, labels);
  draw_axes(out, ax, ay);
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const char* color = palette[k % palette.size()];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\""
        << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << " points=\"";
    bool first = true;
    for (std::size_t i = 0; i < s.x.size() && i < s.y.size(); ++i) {
      if (log_y && !(s.y[i] > 0.0)) continue;
      if (!std::isfinite(s.y[i])) continue;
      if (!first) out << ' ';
      out << coord(ax.map(s.x[i], x0, x1)) << ',' << coord(ay.map(s.y[i], y0, y1));
      first = false;
    }
    out << "\"/>\n";
    const double ly = kTop + 16.0 * static_cast<double>(k) + 10.0;
    out << "<line x1=\"" << coord(x1 + 10) << "\" y1=\"" << coord(ly) << "\" x2=\""
        << coord(x1 + 30) << "\" y2=\"" << coord(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"" << (s.dashed ? " stroke-dasharray=\"6 4\"" : "") << "/>\n";
    out << "<text x=\"" << coord(x1 + 35) << "\" y=\"" << coord(ly + 4) << "\">"
        << escape_xml(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  finish(out, path);
}

void write_heatmap(const std::filesystem::path& path, std::string_view comment,
                   const PlotLabels& labels, const Eigen::VectorXd& xs,
                   const Eigen::VectorXd& ys, const Eigen::MatrixXd& values) {
  if (values.rows() != ys.size() || values.cols() != xs.size() || xs.size() == 0 ||
      ys.size() == 0) {
    throw ShapeError("heatmap: value grid does not match the axes");
  }
  const double vlo = values.minCoeff();
  const double vhi = values.maxCoeff();
  const double range = vhi > vlo ? vhi - vlo : 1.0;

  // Cell edges halfway between nodes.
  auto edges = [](const Eigen::VectorXd& v) {
    std::vector<double> e(static_cast<std::size_t>(v.size()) + 1);
    if (v.size() == 1) {
      e[0] = v(0) - 0.5;
      e[1] = v(0) + 0.5;
      return e;
    }
    e[0] = v(0) - 0.5 * (v(1) - v(0));
    for (Eigen::Index i = 1; i < v.size(); ++i) e[static_cast<std::size_t>(i)] = 0.5 * (v(i - 1) + v(i));
    const auto n = v.size();
    e[static_cast<std::size_t>(n)] = v(n - 1) + 0.5 * (v(n - 1) - v(n - 2));
    return e;
  };
  const auto ex = edges(xs);
  const auto ey = edges(ys);
  const Axis ax = span(ex.front(), ex.back());
  const Axis ay = span(ey.front(), ey.back());
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;

  std::ofstream out = open_for_write(path);
  open_svg(out, comment, labels);
  out << "<g shape-rendering=\"crispEdges\">\n";
  for (Eigen::Index i = 0; i < values.rows(); ++i) {
    const double top = ay.map(ey[static_cast<std::size_t>(i) + 1], y0, y1);
    const double bottom = ay.map(ey[static_cast<std::size_t>(i)], y0, y1);
    for (Eigen::Index j = 0; j < values.cols(); ++j) {
      const double left = ax.map(ex[static_cast<std::size_t>(j)], x0, x1);
      const double right = ax.map(ex[static_cast<std::size_t>(j) + 1], x0, x1);
      out << "<rect x=\"" << coord(left) << "\" y=\"" << coord(top) << "\" width=\""
          << coord(right - left) << "\" height=\"" << coord(bottom - top) << "\" fill=\""
          << hex(colormap((values(i, j) - vlo) / range)) << "\"/>\n";
    }
  }
  out << "</g>\n";
  draw_axes(out, ax, ay);
  // Color bar.
  const int bands = 32;
  const double bx = x1 + 20, bw = 18;
  for (int b = 0; b < bands; ++b) {
    const double t0 = y0 - (y0 - y1) * (b + 1) / bands;
    out << "<rect x=\"" << coord(bx) << "\" y=\"" << coord(t0) << "\" width=\"" << coord(bw)
        << "\" height=\"" << coord((y0 - y1) / bands + 0.5) << "\" fill=\""
        << hex(colormap((b + 0.5) / bands)) << "\"/>\n";
  }
  out << "<text x=\"" << coord(bx + bw + 4) << "\" y=\"" << coord(y1 + 10) << "\">"
      << fmt(vhi) << "</text>\n";
  out << "<text x=\"" << coord(bx + bw + 4) << "\" y=\"" << coord(y0) << "\">" << fmt(vlo)
      << "</text>\n";
  out << "</svg>\n";
  finish(out, path);
}

void write_text(const std::filesystem::path& path, std::string_view comment,
                std::string_view body) {
  std::ofstream out = open_for_write(path);
  out << comment << body;
  finish(out, path);
}

void ensure_directory(const std::filesystem::path& dir) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec || !std::filesystem::is_directory(dir)) {
    throw IoError("cannot create output directory " + dir.string() +
                  (ec ? ": " + ec.message() : std::string()));
  }
}

}  // namespace agepop
