#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "rdm/errors.hpp"

namespace rdm {

// Eigenvalues closer to zero than this (from below) are treated as round-off
// from a matrix that is PSD in exact arithmetic.
inline constexpr double kClampTol = 1e-10;

// Non-fatal diagnostics (misused filter classes, degenerate alignment
// directions). Callers that do not care pass nullptr.
struct WarningLog {
  std::vector<std::string> messages;
  void add(std::string msg) { messages.push_back(std::move(msg)); }
  bool empty() const { return messages.empty(); }
};

inline void warn(WarningLog* log, std::string msg) {
  if (log != nullptr) log->add(std::move(msg));
}

// A batch of feature vectors, one sample per row (n x k).
class FeatureBatch {
 public:
  explicit FeatureBatch(Eigen::MatrixXd data) : data_(std::move(data)) {
    if (data_.rows() < 1 || data_.cols() < 1)
      throw InvalidInput("FeatureBatch: need at least one row and column");
    if (!data_.allFinite())
      throw InvalidInput("FeatureBatch: non-finite entries");
  }

  Eigen::Index rows() const { return data_.rows(); }
  Eigen::Index cols() const { return data_.cols(); }
  const Eigen::MatrixXd& matrix() const { return data_; }

 private:
  Eigen::MatrixXd data_;
};

// Descending eigenvalue list of a correlation matrix. Values in
// (-clamp_tol, 0) are clamped to zero on construction; anything more
// negative is rejected.
class Spectrum {
 public:
  explicit Spectrum(Eigen::VectorXd values, double clamp_tol = kClampTol)
      : values_(std::move(values)), clamp_tol_(clamp_tol) {
    if (values_.size() == 0) throw InvalidInput("Spectrum: empty");
    if (!values_.allFinite()) throw InvalidInput("Spectrum: non-finite");
    for (Eigen::Index i = 0; i < values_.size(); ++i) {
      if (values_[i] < -clamp_tol_)
        throw InvalidInput("Spectrum: eigenvalue " + std::to_string(values_[i]) +
                           " below -clamp_tol");
      if (values_[i] < 0.0) values_[i] = 0.0;
      if (i > 0 && values_[i] > values_[i - 1])
        throw InvalidInput("Spectrum: values not sorted non-increasing");
    }
  }

  Eigen::Index size() const { return values_.size(); }
  double operator[](Eigen::Index i) const { return values_[i]; }
  const Eigen::VectorXd& values() const { return values_; }
  double clamp_tol() const { return clamp_tol_; }
  double sum() const { return values_.sum(); }

 private:
  Eigen::VectorXd values_;
  double clamp_tol_;
};

// Orthonormal eigenvector matrix, columns ordered to match a Spectrum.
class EigenBasis {
 public:
  explicit EigenBasis(Eigen::MatrixXd vectors) : vectors_(std::move(vectors)) {
    if (vectors_.rows() != vectors_.cols())
      throw InvalidInput("EigenBasis: must be square");
    const Eigen::MatrixXd gram = vectors_.transpose() * vectors_;
    const double dev = (gram - Eigen::MatrixXd::Identity(vectors_.cols(),
                                                         vectors_.cols()))
                           .cwiseAbs()
                           .maxCoeff();
    if (dev > 1e-8)
      throw InvalidInput("EigenBasis: columns not orthonormal (dev=" +
                         std::to_string(dev) + ")");
  }

  Eigen::Index size() const { return vectors_.cols(); }
  const Eigen::MatrixXd& matrix() const { return vectors_; }
  Eigen::VectorXd column(Eigen::Index i) const { return vectors_.col(i); }

 private:
  Eigen::MatrixXd vectors_;
};

// Symmetric k x k correlation matrix. sample_count == 0 marks an exact
// (analytic or fully enumerated) estimate. Cross-correlations of positive
// pairs are symmetric by the symmetry of the pair distribution but need not
// be PSD, so no PSD check happens here.
class CorrelationEstimate {
 public:
  CorrelationEstimate(Eigen::MatrixXd matrix, std::int64_t sample_count)
      : matrix_(std::move(matrix)), sample_count_(sample_count) {
    if (matrix_.rows() != matrix_.cols())
      throw InvalidInput("CorrelationEstimate: must be square");
    if (!matrix_.allFinite())
      throw InvalidInput("CorrelationEstimate: non-finite entries");
    const double asym = (matrix_ - matrix_.transpose()).cwiseAbs().maxCoeff();
    if (asym > 1e-10)
      throw InvalidInput("CorrelationEstimate: asymmetry " +
                         std::to_string(asym) + " exceeds 1e-10");
    matrix_ = 0.5 * (matrix_ + matrix_.transpose()).eval();
  }

  Eigen::Index size() const { return matrix_.rows(); }
  const Eigen::MatrixXd& matrix() const { return matrix_; }
  std::int64_t sample_count() const { return sample_count_; }
  bool exact() const { return sample_count_ == 0; }

 private:
  Eigen::MatrixXd matrix_;
  std::int64_t sample_count_;
};

}  // namespace rdm
