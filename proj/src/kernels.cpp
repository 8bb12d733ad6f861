#include "rdm/kernels.hpp"

#include <algorithm>
#include <vector>

namespace rdm::kernels {

namespace {

constexpr Eigen::Index kBaseBlockRows = 1024;
// Cap on total partial-matrix storage (bytes); beyond it the block count is
// reduced so memory stays flat while determinism is preserved.
constexpr std::int64_t kPartialBudget = 64ll << 20;

template <typename BlockFn>
Eigen::MatrixXd blocked_mean(Eigen::Index n, Eigen::Index k, BlockFn block_fn,
                             bool parallel) {
  const Eigen::Index rows_per_block = block_rows(n, k);
  const Eigen::Index nblocks = (n + rows_per_block - 1) / rows_per_block;

  std::vector<Eigen::MatrixXd> partials(
      static_cast<std::size_t>(nblocks));

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (Eigen::Index b = 0; b < nblocks; ++b) {
      const Eigen::Index lo = b * rows_per_block;
      const Eigen::Index len = std::min(rows_per_block, n - lo);
      partials[static_cast<std::size_t>(b)] = block_fn(lo, len);
    }
  } else {
    for (Eigen::Index b = 0; b < nblocks; ++b) {
      const Eigen::Index lo = b * rows_per_block;
      const Eigen::Index len = std::min(rows_per_block, n - lo);
      partials[static_cast<std::size_t>(b)] = block_fn(lo, len);
    }
  }

  // Merge in block order: the reduction order never depends on threads.
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(k, k);
  for (const auto& p : partials) acc += p;
  return acc / static_cast<double>(n);
}

}  // namespace

Eigen::Index block_rows(Eigen::Index n, Eigen::Index k) {
  Eigen::Index rows = kBaseBlockRows;
  const std::int64_t partial_bytes = static_cast<std::int64_t>(k) * k * 8;
  if (partial_bytes > 0) {
    const std::int64_t max_blocks = std::max<std::int64_t>(
        1, kPartialBudget / partial_bytes);
    const Eigen::Index min_rows = (n + max_blocks - 1) / max_blocks;
    rows = std::max(rows, min_rows);
  }
  return std::min(rows, std::max<Eigen::Index>(n, 1));
}

Eigen::MatrixXd mean_outer(const Eigen::MatrixXd& x) {
  return blocked_mean(
      x.rows(), x.cols(),
      [&](Eigen::Index lo, Eigen::Index len) -> Eigen::MatrixXd {
        const auto rows = x.middleRows(lo, len);
        return rows.transpose() * rows;
      },
      /*parallel=*/true);
}

Eigen::MatrixXd mean_outer_serial(const Eigen::MatrixXd& x) {
  return blocked_mean(
      x.rows(), x.cols(),
      [&](Eigen::Index lo, Eigen::Index len) -> Eigen::MatrixXd {
        const auto rows = x.middleRows(lo, len);
        return rows.transpose() * rows;
      },
      /*parallel=*/false);
}

Eigen::MatrixXd mean_cross(const Eigen::MatrixXd& a,
                           const Eigen::MatrixXd& b) {
  return blocked_mean(
      a.rows(), a.cols(),
      [&](Eigen::Index lo, Eigen::Index len) -> Eigen::MatrixXd {
        return a.middleRows(lo, len).transpose() * b.middleRows(lo, len);
      },
      /*parallel=*/true);
}

Eigen::MatrixXd mean_cross_serial(const Eigen::MatrixXd& a,
                                  const Eigen::MatrixXd& b) {
  return blocked_mean(
      a.rows(), a.cols(),
      [&](Eigen::Index lo, Eigen::Index len) -> Eigen::MatrixXd {
        return a.middleRows(lo, len).transpose() * b.middleRows(lo, len);
      },
      /*parallel=*/false);
}

}  // namespace rdm::kernels
