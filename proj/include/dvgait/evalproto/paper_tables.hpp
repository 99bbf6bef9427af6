#pragma once

#include <string>
#include <vector>

#include "dvgait/evalproto/recognition.hpp"

namespace dvgait::evalproto {

/// Published cross-view matrix of the DV-trained model with 62 training
/// subjects (gallery rows, probe columns, 0..180 step 18).
RecognitionMatrix published_dv_matrix();
/// Published per-probe-view cross-view means and overall mean for the same run.
std::vector<double> published_dv_probe_means();
double published_dv_mean();

struct ReplayReport {
  std::vector<double> computed;
  std::vector<double> published;
  double computed_mean = 0;
  double published_mean = 0;
  double max_abs_error = 0;
  bool passed = false;
};

/// Recomputes the per-probe means from `matrix` and compares with the
/// published row to within `tolerance`.
ReplayReport replay_published(const RecognitionMatrix& matrix, double tolerance = 0.05);

/// Header plus computed and published rows, one decimal.
std::string replay_csv(const ReplayReport& report);

}  // namespace dvgait::evalproto
