#pragma once

// File emission for the command-line tool: CSV tables and self-contained SVG
// line plots and heatmaps. Every file opens with a comment block.

#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace agepop {

// Comma-separated table. `comment` lines are written first, each prefixed
// with '#', then the header row. Throws IoError with the path on failure.
class CsvWriter {
 public:
  CsvWriter(const std::filesystem::path& path, std::string_view comment,
            const std::vector<std::string>& columns);

  // Cells are written verbatim; use format_number for doubles.
  void row(const std::vector<std::string>& cells);
  void row(const std::vector<double>& values);
  void close();

  const std::filesystem::path& path() const { return path_; }

 private:
  std::filesystem::path path_;
  std::ofstream out_;
  std::size_t columns_;
};

struct PlotSeries {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

struct PlotLabels {
  std::string title;
  std::string x;
  std::string y;
};

void write_line_plot(const std::filesystem::path& path, std::string_view comment,
                     const PlotLabels& labels, const std::vector<PlotSeries>& series,
                     bool log_y = false);

// values(i, j) is drawn at (xs(j), ys(i)) as one rect per cell.
void write_heatmap(const std::filesystem::path& path, std::string_view comment,
                   const PlotLabels& labels, const Eigen::VectorXd& xs,
                   const Eigen::VectorXd& ys, const Eigen::MatrixXd& values);

// Plain text file holding `comment` followed by `body`.
void write_text(const std::filesystem::path& path, std::string_view comment,
                std::string_view body);

void ensure_directory(const std::filesystem::path& dir);

}  // namespace agepop
