#include <doctest.h>

#include <Eigen/Dense>

#include "rdm/kernels.hpp"
#include "rdm/rng.hpp"

using namespace rdm;

namespace {

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index k,
                              std::uint64_t seed) {
  RngStream rng(seed, "kernel-test");
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rng.normal();
  return m;
}

// The obvious one-row-at-a-time oracle, independent of the block schedule.
Eigen::MatrixXd naive_mean_outer(const Eigen::MatrixXd& x) {
  Eigen::MatrixXd acc = Eigen::MatrixXd::Zero(x.cols(), x.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i)
    acc += x.row(i).transpose() * x.row(i);
  return acc / static_cast<double>(x.rows());
}

}  // namespace

TEST_CASE("parallel and serial kernels agree bitwise") {
  for (const Eigen::Index n : {1, 5, 1023, 1024, 1025, 5000}) {
    for (const Eigen::Index k : {1, 3, 16}) {
      const Eigen::MatrixXd x = random_matrix(n, k, 100 + n + k);
      const Eigen::MatrixXd y = random_matrix(n, k, 200 + n + k);
      CHECK(kernels::mean_outer(x) == kernels::mean_outer_serial(x));
      CHECK(kernels::mean_cross(x, y) == kernels::mean_cross_serial(x, y));
    }
  }
}

TEST_CASE("blocked kernels match the naive oracle") {
  const Eigen::MatrixXd x = random_matrix(4097, 8, 7);
  const Eigen::MatrixXd got = kernels::mean_outer(x);
  const Eigen::MatrixXd want = naive_mean_outer(x);
  CHECK((got - want).cwiseAbs().maxCoeff() < 1e-13 * want.cwiseAbs().maxCoeff());
}

TEST_CASE("cross kernel matches direct product") {
  const Eigen::MatrixXd a = random_matrix(513, 6, 8);
  const Eigen::MatrixXd b = random_matrix(513, 6, 9);
  const Eigen::MatrixXd want = a.transpose() * b / 513.0;
  CHECK((kernels::mean_cross(a, b) - want).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("block partition caps partial storage") {
  // Moderate k: the block count shrinks until the partials fit the budget.
  const Eigen::Index rows = kernels::block_rows(1 << 20, 512);
  const Eigen::Index nblocks = ((1 << 20) + rows - 1) / rows;
  CHECK(nblocks * 512 * 512 * 8 <= (64ll << 20));
  // A single partial larger than the budget degenerates to one block.
  CHECK(kernels::block_rows(1 << 20, 4096) == (1 << 20));
  CHECK(kernels::block_rows(100, 4) == 100);
  CHECK(kernels::block_rows(5000, 4) == 1024);
}
