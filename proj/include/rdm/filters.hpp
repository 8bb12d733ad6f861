#pragma once

#include <functional>
#include <string>
#include <utility>
#include <vector>

#include "rdm/types.hpp"

namespace rdm {

// Scalar filters on singular values are floored here before evaluation;
// log and negative powers are singular at zero.
inline constexpr double kFloorSigma = 1e-6;
// Differences at or below this count as flat when classifying.
inline constexpr double kMonoTol = 1e-9;

// A named scalar map on singular values. Online filters are expected to be
// monotonically increasing (low-pass), target filters decreasing
// (high-pass); classify() checks which one holds on a grid.
struct SpectralFilter {
  std::string name;
  std::vector<double> params;
  std::function<double(double)> map;

  double operator()(double sigma) const { return map(sigma); }
};

SpectralFilter identity_filter();            // g(s) = 1
SpectralFilter directpred_filter();          // g(s) = s
SpectralFilter log_filter();                 // g(s) = log s
SpectralFilter log1p_filter();               // g(s) = log(1 + s)
SpectralFilter log1p_sq_filter();            // g(s) = log(1 + s^2)
SpectralFilter power_filter(double p);       // h(s) = s^p
SpectralFilter constant_filter(double c);

enum class FilterKind { LowPass, HighPass, Constant, NonMonotone };

std::string to_string(FilterKind kind);

struct FilterClass {
  FilterKind kind;
  Eigen::VectorXd grid;  // sample points behind the verdict
};

// 64 log-spaced points spanning [0.05, 20].
Eigen::VectorXd default_sigma_grid();

// Monotonicity verdict from consecutive finite differences on an ascending
// grid (length >= 3, all entries above the sigma floor).
FilterClass classify(const SpectralFilter& filter, const Eigen::VectorXd& grid);

// Symmetric matrix V g(S) V^T from the batch's thin SVD, extended as the
// identity on the orthogonal complement of the right-singular span.
struct FilterMatrix {
  Eigen::MatrixXd matrix;
  std::string source;
};

FilterMatrix filter_matrix(const FeatureBatch& batch,
                           const SpectralFilter& filter);

// batch * filter_matrix(batch). The matrix is built from the current batch
// and treated as a constant (no gradient flows through it). Filters that do
// not classify LowPass or Constant record a warning; misuse is allowed for
// ablations.
FeatureBatch apply_online_filter(const FeatureBatch& batch,
                                 const SpectralFilter& filter,
                                 WarningLog* warnings = nullptr);

// U diag(s * h(s)) V^T from the batch's thin SVD (the target branch carries
// no gradient). Filters that do not classify HighPass or Constant record a
// warning.
FeatureBatch apply_target_filter(const FeatureBatch& batch,
                                 const SpectralFilter& filter,
                                 WarningLog* warnings = nullptr);

// Marginal residuals observed after each half-step, for invariant checks.
struct SinkhornDiag {
  std::vector<double> column_residuals;  // max |colsum - 1/k| after column step
  std::vector<double> row_residuals;     // max |rowsum - 1/n| after row step
};

// Q = exp(scores / eps), then `iters` full (column, row) normalization
// rounds targeting uniform marginals (columns 1/k, rows 1/n); rows of the
// result are rescaled to sum 1.
FeatureBatch sinkhorn_knopp(const FeatureBatch& scores, int iters, double eps,
                            SinkhornDiag* diag = nullptr);

// Row-wise softmax((z - center) / temperature).
FeatureBatch center_sharpen(const FeatureBatch& batch,
                            const Eigen::VectorXd& center, double temperature);

// Rank-paired target filter h_i = sqrt(lam_z_i / lam_p_i) between the
// spectra of two branch outputs, plus a trend verdict from the Spearman
// rank correlation of (lam_p_i, h_i): below -0.5 reports HighPass, above
// +0.5 LowPass. Pairs are sorted by lam_p ascending.
std::pair<FilterClass, std::vector<std::pair<double, double>>>
extract_transformation_filter(const FeatureBatch& online,
                              const FeatureBatch& target);

// CLI/config grammar: id | directpred | log | log1p | log1psq | pow:<p> |
// sinkhorn:<iters>:<eps> | centersharp:<t>. Case-insensitive.
struct FilterSpec {
  enum class Kind { Scalar, Sinkhorn, CenterSharpen };
  Kind kind = Kind::Scalar;
  std::string text;
  SpectralFilter scalar;
  int sinkhorn_iters = 1;
  double sinkhorn_eps = 0.05;
  double temperature = 0.1;
};

FilterSpec parse_filter_spec(const std::string& text);

}  // namespace rdm
