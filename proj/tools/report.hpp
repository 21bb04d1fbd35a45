#pragma once

#include <filesystem>
#include <string>
#include <vector>

// Plain-text artifacts for the CLI: SVG plots, atomic file writes, content hashes.
namespace rlop::report {

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
};

struct LinePlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<Series> series;
  std::vector<double> markers;  // x positions drawn as purple vertical lines
};

struct Bar {
  std::string label;
  double value;
  double low;
  double high;
};

struct BarPlot {
  std::string title;
  std::string y_label;
  std::vector<Bar> bars;
};

std::string render_svg(const LinePlot& plot);
std::string render_svg(const BarPlot& plot);

// Writes to `<path>.tmp` then renames, so a failed run never leaves a
// truncated artifact behind. Throws std::runtime_error on failure.
void write_file(const std::filesystem::path& path, const std::string& content);

// SHA-1 of "blob <size>\0<content>", as `git hash-object` prints it.
std::string git_blob_hash(const std::string& content);

}  // namespace rlop::report
