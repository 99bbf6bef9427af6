#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "dvgait/featnet/training.hpp"

namespace dvgait::evalproto {

using featnet::Embedding;

enum class Metric { euclidean, cosine };

Metric parse_metric(std::string_view text);
std::string_view metric_name(Metric metric);

/// Rows are gallery views, columns probe views, cells rank-1 accuracy in percent.
struct RecognitionMatrix {
  std::vector<double> gallery_views;
  std::vector<double> probe_views;
  std::vector<double> cells;

  double at(std::size_t row, std::size_t col) const { return cells.at(row * probe_views.size() + col); }
  double& at(std::size_t row, std::size_t col) { return cells.at(row * probe_views.size() + col); }
};

double distance(std::span<const float> a, std::span<const float> b, Metric metric);

/// For each (gallery view, probe view) cell, every probe at that view takes
/// the subject of its nearest gallery item at the gallery view; ties go to
/// the lowest gallery index.
RecognitionMatrix rank1_matrix(const std::vector<Embedding>& gallery, const std::vector<Embedding>& probe,
                               Metric metric = Metric::euclidean);

/// Column means with the same-view cell left out.
std::vector<double> mean_excluding_identical(const RecognitionMatrix& matrix);
/// Mean of the same-view cells.
double diagonal_mean(const RecognitionMatrix& matrix);
double row_mean(const std::vector<double>& values);

struct DeltaReport {
  std::vector<double> views;
  /// DV minus OG, row-major like the matrices.
  std::vector<double> cells;
  /// Per probe view, difference of the cross-view column means.
  std::vector<double> per_probe;
  double dv_mean = 0, og_mean = 0, overall = 0;
  /// (gallery view, probe view) cells where OG >= DV.
  std::vector<std::pair<double, double>> og_not_worse;
};

DeltaReport compare_runs(const RecognitionMatrix& dv, const RecognitionMatrix& og);

/// `gallery\probe,<view>,...` then `<view>,<pct>,...`, two decimals.
void write_matrix_csv(const std::filesystem::path& path, const RecognitionMatrix& matrix);
RecognitionMatrix read_matrix_csv(const std::filesystem::path& path);
/// Per-probe cross-view means and their mean, one decimal.
void write_summary_csv(const std::filesystem::path& path, const std::string& label, const RecognitionMatrix& matrix);
/// Delta cells in matrix layout, then per-probe and summary lines.
void write_delta_csv(const std::filesystem::path& path, const DeltaReport& report);

}  // namespace dvgait::evalproto
