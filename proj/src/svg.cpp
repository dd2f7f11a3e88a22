#include "klgeo/svg.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <limits>

#include "klgeo/distribution.hpp"
#include "klgeo/output.hpp"

namespace klgeo {

namespace {

constexpr const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#ff7f0e",
                                    "#9467bd", "#8c564b", "#e377c2", "#17becf"};

// Fixed-point coordinates, two decimals, independent of locale.
std::string num(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::fixed, 2);
  if (ec != std::errc{}) return "0";
  std::string s(buf, end);
  if (s == "-0.00") s = "0.00";
  return s;
}

std::string tick(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), v, std::chars_format::general, 4);
  if (ec != std::errc{}) return "?";
  return std::string(buf, end);
}

std::string escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

}  // namespace

std::string render_svg(const std::vector<SvgSeries>& series, const SvgOptions& opt) {
  if (series.empty()) throw StructuralError("render_svg: no series");
  double xmin = std::numeric_limits<double>::infinity();
  double xmax = -xmin;
  double ymin = xmin;
  double ymax = -xmin;
  bool omitted = false;
  for (const auto& s : series) {
    if (s.x.size() != s.y.size()) {
      throw StructuralError("render_svg: series '" + s.name + "' has mismatched x/y lengths");
    }
    if (s.x.empty()) throw StructuralError("render_svg: series '" + s.name + "' is empty");
    if (!std::is_sorted(s.x.begin(), s.x.end())) {
      throw DomainError("render_svg: x values of '" + s.name + "' are not sorted");
    }
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (opt.log_x && !(s.x[i] > 0.0)) throw DomainError("render_svg: log-x needs positive x");
      if (std::isinf(s.y[i])) {
        omitted = true;
        continue;
      }
      const double x = opt.log_x ? std::log10(s.x[i]) : s.x[i];
      xmin = std::min(xmin, x);
      xmax = std::max(xmax, x);
      ymin = std::min(ymin, s.y[i]);
      ymax = std::max(ymax, s.y[i]);
    }
  }
  if (!std::isfinite(xmin)) {
    xmin = 0.0;
    xmax = 1.0;
    ymin = 0.0;
    ymax = 1.0;
  }
  if (xmax == xmin) xmax = xmin + 1.0;
  if (ymax == ymin) {
    ymin -= 0.5;
    ymax += 0.5;
  }

  const double left = 70.0;
  const double right = 150.0;
  const double top = 40.0;
  const double bottom = 50.0;
  const double pw = opt.width - left - right;
  const double ph = opt.height - top - bottom;
  auto px = [&](double x) {
    const double v = opt.log_x ? std::log10(x) : x;
    return left + (v - xmin) / (xmax - xmin) * pw;
  };
  auto py = [&](double y) { return top + (1.0 - (y - ymin) / (ymax - ymin)) * ph; };

  std::string out;
  out += "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n";
  if (!opt.provenance.empty()) out += "<!-- " + escape(opt.provenance) + " -->\n";
  out += "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" + std::to_string(opt.width) +
         "\" height=\"" + std::to_string(opt.height) + "\" viewBox=\"0 0 " +
         std::to_string(opt.width) + " " + std::to_string(opt.height) + "\">\n";
  out += "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  out += "<text x=\"" + num(opt.width / 2.0) + "\" y=\"22\" text-anchor=\"middle\" "
         "font-family=\"sans-serif\" font-size=\"14\">" + escape(opt.title) + "</text>\n";
  out += "<g stroke=\"black\" stroke-width=\"1\">\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top + ph) + "\" x2=\"" + num(left + pw) +
         "\" y2=\"" + num(top + ph) + "\"/>\n";
  out += "<line x1=\"" + num(left) + "\" y1=\"" + num(top) + "\" x2=\"" + num(left) +
         "\" y2=\"" + num(top + ph) + "\"/>\n";
  out += "</g>\n<g font-family=\"sans-serif\" font-size=\"10\">\n";
  for (int i = 0; i <= 4; ++i) {
    const double fx = xmin + (xmax - xmin) * i / 4.0;
    const double xv = opt.log_x ? std::pow(10.0, fx) : fx;
    const double sx = left + pw * i / 4.0;
    out += "<text x=\"" + num(sx) + "\" y=\"" + num(top + ph + 15) +
           "\" text-anchor=\"middle\">" + tick(xv) + "</text>\n";
    const double yv = ymin + (ymax - ymin) * i / 4.0;
    out += "<text x=\"" + num(left - 5) + "\" y=\"" + num(py(yv) + 3) +
           "\" text-anchor=\"end\">" + tick(yv) + "</text>\n";
  }
  out += "<text x=\"" + num(left + pw / 2) + "\" y=\"" + num(opt.height - 12.0) +
         "\" text-anchor=\"middle\">" + escape(opt.x_label) + (opt.log_x ? " (log)" : "") +
         "</text>\n";
  out += "<text x=\"15\" y=\"" + num(top + ph / 2) + "\" text-anchor=\"middle\" transform=\"rotate(-90 15 " +
         num(top + ph / 2) + ")\">" + escape(opt.y_label) + "</text>\n";
  out += "</g>\n";

  for (std::size_t k = 0; k < series.size(); ++k) {
    const auto& s = series[k];
    const std::string color = kPalette[k % std::size(kPalette)];
    std::string points;
    for (std::size_t i = 0; i < s.x.size(); ++i) {
      if (std::isinf(s.y[i])) continue;
      if (!points.empty()) points += ' ';
      points += num(px(s.x[i])) + "," + num(py(s.y[i]));
    }
    out += "<polyline fill=\"none\" stroke=\"" + color + "\" stroke-width=\"1.5\" points=\"" +
           points + "\"/>\n";
    const double ly = top + 12.0 + 16.0 * static_cast<double>(k);
    out += "<line x1=\"" + num(left + pw + 10) + "\" y1=\"" + num(ly) + "\" x2=\"" +
           num(left + pw + 30) + "\" y2=\"" + num(ly) + "\" stroke=\"" + color +
           "\" stroke-width=\"2\"/>\n";
    out += "<text x=\"" + num(left + pw + 35) + "\" y=\"" + num(ly + 4) +
           "\" font-family=\"sans-serif\" font-size=\"11\">" + escape(s.name) + "</text>\n";
  }
  if (omitted) {
    out += "<text x=\"" + num(left + pw + 10) + "\" y=\"" + num(top + ph) +
           "\" font-family=\"sans-serif\" font-size=\"11\">∞ (omitted)</text>\n";
  }
  out += "</svg>\n";
  return out;
}

void emit_svg(const std::vector<SvgSeries>& series, const SvgOptions& options,
              const std::string& path) {
  write_text_file(path, render_svg(series, options));
}

}  // namespace klgeo
