#pragma once

#include <string>
#include <utility>
#include <vector>

#include "rdm/dynamics.hpp"
#include "rdm/types.hpp"

namespace rdm {

// Floats are written with 17 significant digits so files re-parse to the
// exact double.
std::string format_float(double v);

// Trajectory CSV: header
//   step,loss,erank_online,erank_target,alignment,ev_online_1..r,ev_target_1..r
std::string trajectory_csv(const TrajectoryRecord& record);

// One row per eigen-index: index,eigenvalue.
std::string spectrum_csv(const Spectrum& spectrum);

// Dense matrix, one row per line.
std::string matrix_csv(const Eigen::MatrixXd& m);

// Extracted filter pairs: index,eigenvalue,filter_value.
std::string filter_pairs_csv(
    const std::vector<std::pair<double, double>>& pairs);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rdm
