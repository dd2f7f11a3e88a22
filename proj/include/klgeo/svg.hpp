// Minimal deterministic line charts.
#pragma once

#include <string>
#include <vector>

namespace klgeo {

/// y = +inf marks a point that cannot be drawn; it is skipped and the chart
/// carries an "∞ (omitted)" note.
struct SvgSeries {
  std::string name;
  std::vector<double> x;
  std::vector<double> y;
};

struct SvgOptions {
  std::string title;
  std::string x_label = "lambda";
  std::string y_label;
  bool log_x = false;
  int width = 640;
  int height = 400;
  /// Written as an XML comment at the top of the file.
  std::string provenance;
};

/// Throws StructuralError on empty input or x/y length mismatch, DomainError
/// on unsorted x or non-positive x with log_x.
std::string render_svg(const std::vector<SvgSeries>& series, const SvgOptions& options);

/// render_svg written to `path`; throws IoError when the file cannot be written.
void emit_svg(const std::vector<SvgSeries>& series, const SvgOptions& options,
              const std::string& path);

}  // namespace klgeo
