// Timing comparison of the OpenMP kernels against their serial references.
// Not part of the test suite; build target rdm_bench.

#include <chrono>
#include <cstdio>
#include <functional>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "rdm/kernels.hpp"
#include "rdm/rng.hpp"
#include "rdm/synth.hpp"

using namespace rdm;

namespace {

double time_seconds(const std::function<void()>& fn, int reps) {
  fn();  // warm up
  const auto start = std::chrono::steady_clock::now();
  for (int i = 0; i < reps; ++i) fn();
  return std::chrono::duration<double>(std::chrono::steady_clock::now() -
                                       start)
             .count() /
         reps;
}

Eigen::MatrixXd random_matrix(Eigen::Index n, Eigen::Index k) {
  RngStream rng(1, "bench");
  Eigen::MatrixXd m(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) m(i, j) = rng.normal();
  return m;
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP threads: %d\n", omp_get_max_threads());
#else
  std::printf("OpenMP: disabled\n");
#endif
  std::printf("%-34s %12s %12s %8s\n", "kernel", "serial (ms)", "parallel (ms)",
              "speedup");

  for (const Eigen::Index n : {1 << 14, 1 << 17}) {
    for (const Eigen::Index k : {16, 64}) {
      const Eigen::MatrixXd x = random_matrix(n, k);
      const double ts =
          time_seconds([&] { kernels::mean_outer_serial(x); }, 5);
      const double tp = time_seconds([&] { kernels::mean_outer(x); }, 5);
      std::printf("mean_outer n=%-8td k=%-12td %12.3f %12.3f %8.2f\n", n, k,
                  1e3 * ts, 1e3 * tp, ts / tp);
    }
  }

  const IsotropicAugModel model = random_isotropic_model(32, 16, 0.5, 1);
  for (const std::int64_t samples : {100000, 400000}) {
    const double ts = time_seconds(
        [&] { monte_carlo_correlations_serial(model, samples); }, 3);
    const double tp =
        time_seconds([&] { monte_carlo_correlations(model, samples); }, 3);
    std::printf("mc_correlations samples=%-11lld %12.3f %12.3f %8.2f\n",
                static_cast<long long>(samples), 1e3 * ts, 1e3 * tp, ts / tp);
  }
  return 0;
}
