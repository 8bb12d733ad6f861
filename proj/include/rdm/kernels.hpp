#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace rdm::kernels {

// Row-blocked second-moment kernels. Work is split into fixed blocks that
// depend only on the problem shape, each block is accumulated serially, and
// the per-block partials are merged in block order. The result is therefore
// bitwise identical for any thread count, and the OpenMP kernels agree
// bitwise with their serial references.

// Deterministic block partition: a function of (n, k) only. Partial storage
// is capped so large k falls back to fewer, larger blocks.
Eigen::Index block_rows(Eigen::Index n, Eigen::Index k);

// (1/n) * X^T X, parallel over row blocks.
Eigen::MatrixXd mean_outer(const Eigen::MatrixXd& x);
// Identical block schedule, no OpenMP. Kept as the reference for tests and
// the benchmark.
Eigen::MatrixXd mean_outer_serial(const Eigen::MatrixXd& x);

// (1/n) * A^T B for row-paired batches, parallel over row blocks.
Eigen::MatrixXd mean_cross(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b);
Eigen::MatrixXd mean_cross_serial(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b);

}  // namespace rdm::kernels
