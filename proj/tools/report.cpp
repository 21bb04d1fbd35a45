#include "report.hpp"

#include <openssl/sha.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace rlop::report {

namespace {

constexpr double kWidth = 720.0;
constexpr double kHeight = 420.0;
constexpr double kLeft = 70.0;
constexpr double kRight = 160.0;
constexpr double kTop = 40.0;
constexpr double kBottom = 50.0;

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#17becf", "#7f7f7f"};

std::string num(double v, const char* format = "%.2f") {
  char buf[32];
  std::snprintf(buf, sizeof buf, format, v);
  return buf;
}

std::string escape(const std::string& text) {
  std::string out;
  for (char c : text) {
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

struct Range {
  double lo = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();

  void add(double v) {
    if (!std::isfinite(v)) return;
    lo = std::min(lo, v);
    hi = std::max(hi, v);
  }
  void finish() {
    if (!std::isfinite(lo)) lo = 0.0, hi = 1.0;
    if (hi - lo < 1e-12) {
      const double pad = std::max(std::abs(lo) * 0.05, 1e-6);
      lo -= pad;
      hi += pad;
    }
  }
};

struct Frame {
  Range x, y;
  double px(double v) const { return kLeft + (v - x.lo) / (x.hi - x.lo) * (kWidth - kLeft - kRight); }
  double py(double v) const {
    return kHeight - kBottom - (v - y.lo) / (y.hi - y.lo) * (kHeight - kTop - kBottom);
  }
};

void open_svg(std::ostringstream& out, const std::string& title) {
  out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\"" << kHeight
      << "\" viewBox=\"0 0 " << kWidth << ' ' << kHeight << "\" font-family=\"sans-serif\" font-size=\"12\">\n"
      << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n"
      << "<text x=\"" << num(kWidth / 2) << "\" y=\"22\" text-anchor=\"middle\" font-size=\"15\">"
      << escape(title) << "</text>\n";
}

void draw_axes(std::ostringstream& out, const Frame& f, const std::string& x_label,
               const std::string& y_label, bool x_ticks) {
  const double x0 = kLeft, x1 = kWidth - kRight, y0 = kHeight - kBottom, y1 = kTop;
  out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x1) << "\" y2=\""
      << num(y0) << "\" stroke=\"black\"/>\n";
  out << "<line x1=\"" << num(x0) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(x0) << "\" y2=\""
      << num(y1) << "\" stroke=\"black\"/>\n";
  for (int k = 0; k <= 4; ++k) {
    const double yv = f.y.lo + (f.y.hi - f.y.lo) * k / 4.0;
    out << "<line x1=\"" << num(x0 - 4) << "\" y1=\"" << num(f.py(yv)) << "\" x2=\"" << num(x0)
        << "\" y2=\"" << num(f.py(yv)) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(x0 - 6) << "\" y=\"" << num(f.py(yv) + 4)
        << "\" text-anchor=\"end\">" << num(yv, "%.4g") << "</text>\n";
    if (!x_ticks) continue;
    const double xv = f.x.lo + (f.x.hi - f.x.lo) * k / 4.0;
    out << "<line x1=\"" << num(f.px(xv)) << "\" y1=\"" << num(y0) << "\" x2=\"" << num(f.px(xv))
        << "\" y2=\"" << num(y0 + 4) << "\" stroke=\"black\"/>"
        << "<text x=\"" << num(f.px(xv)) << "\" y=\"" << num(y0 + 18)
        << "\" text-anchor=\"middle\">" << num(xv, "%.4g") << "</text>\n";
  }
  out << "<text x=\"" << num((x0 + x1) / 2) << "\" y=\"" << num(kHeight - 12)
      << "\" text-anchor=\"middle\">" << escape(x_label) << "</text>\n";
  out << "<text x=\"16\" y=\"" << num((y0 + y1) / 2) << "\" text-anchor=\"middle\" transform=\"rotate(-90 16 "
      << num((y0 + y1) / 2) << ")\">" << escape(y_label) << "</text>\n";
}

}  // namespace

std::string render_svg(const LinePlot& plot) {
  Frame f;
  for (const auto& s : plot.series) {
    for (double v : s.x) f.x.add(v);
    for (double v : s.y) f.y.add(v);
  }
  f.x.finish();
  f.y.finish();

  std::ostringstream out;
  open_svg(out, plot.title);
  draw_axes(out, f, plot.x_label, plot.y_label, true);
  for (double m : plot.markers) {
    out << "<line x1=\"" << num(f.px(m)) << "\" y1=\"" << num(kTop) << "\" x2=\"" << num(f.px(m))
        << "\" y2=\"" << num(kHeight - kBottom) << "\" stroke=\"purple\" stroke-opacity=\"0.6\"/>\n";
  }
  for (std::size_t k = 0; k < plot.series.size(); ++k) {
    const auto& s = plot.series[k];
    const char* color = kPalette[k % std::size(kPalette)];
    out << "<polyline fill=\"none\" stroke=\"" << color << "\" stroke-width=\"1.5\" points=\"";
    for (std::size_t i = 0; i < std::min(s.x.size(), s.y.size()); ++i) {
      if (!std::isfinite(s.y[i])) continue;
      out << num(f.px(s.x[i])) << ',' << num(f.py(s.y[i])) << ' ';
    }
    out << "\"/>\n";
    const double ly = kTop + 10 + 18.0 * static_cast<double>(k);
    out << "<line x1=\"" << num(kWidth - kRight + 10) << "\" y1=\"" << num(ly) << "\" x2=\""
        << num(kWidth - kRight + 30) << "\" y2=\"" << num(ly) << "\" stroke=\"" << color
        << "\" stroke-width=\"2\"/><text x=\"" << num(kWidth - kRight + 34) << "\" y=\""
        << num(ly + 4) << "\">" << escape(s.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

std::string render_svg(const BarPlot& plot) {
  Frame f;
  f.x.lo = 0.0;
  f.x.hi = static_cast<double>(std::max<std::size_t>(plot.bars.size(), 1));
  f.y.add(0.0);
  for (const auto& b : plot.bars) {
    f.y.add(b.low);
    f.y.add(b.high);
    f.y.add(b.value);
  }
  f.y.finish();

  std::ostringstream out;
  open_svg(out, plot.title);
  draw_axes(out, f, "", plot.y_label, false);
  for (std::size_t k = 0; k < plot.bars.size(); ++k) {
    const auto& b = plot.bars[k];
    const double left = f.px(static_cast<double>(k) + 0.15);
    const double right = f.px(static_cast<double>(k) + 0.85);
    const double top = f.py(std::max(b.value, 0.0));
    const double bottom = f.py(std::min(b.value, 0.0));
    const double mid = 0.5 * (left + right);
    out << "<rect x=\"" << num(left) << "\" y=\"" << num(top) << "\" width=\"" << num(right - left)
        << "\" height=\"" << num(bottom - top) << "\" fill=\"" << kPalette[0] << "\"/>\n"
        << "<line x1=\"" << num(mid) << "\" y1=\"" << num(f.py(b.low)) << "\" x2=\"" << num(mid)
        << "\" y2=\"" << num(f.py(b.high)) << "\" stroke=\"black\"/>\n"
        << "<text x=\"" << num(mid) << "\" y=\"" << num(kHeight - kBottom + 18)
        << "\" text-anchor=\"middle\">" << escape(b.label) << "</text>\n";
  }
  out << "</svg>\n";
  return out.str();
}

void write_file(const std::filesystem::path& path, const std::string& content) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::filesystem::path tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot open " + tmp.string() + " for writing");
    out << content;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

std::string git_blob_hash(const std::string& content) {
  const std::string blob = "blob " + std::to_string(content.size()) + std::string(1, '\0') + content;
  unsigned char digest[SHA_DIGEST_LENGTH];
  SHA1(reinterpret_cast<const unsigned char*>(blob.data()), blob.size(), digest);
  std::string hex;
  for (unsigned char byte : digest) {
    char buf[3];
    std::snprintf(buf, sizeof buf, "%02x", static_cast<unsigned>(byte));
    hex += buf;
  }
  return hex;
}

}  // namespace rlop::report
