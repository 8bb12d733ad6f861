// Acceptance suite: end-to-end checks of the laboratory's headline claims on
// synthetic data, one pass/fail line per criterion. Exits nonzero if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

#include "rdm/config.hpp"
#include "rdm/dynamics.hpp"
#include "rdm/experiments.hpp"
#include "rdm/filters.hpp"
#include "rdm/io.hpp"
#include "rdm/rng.hpp"
#include "rdm/spectral.hpp"
#include "rdm/synth.hpp"
#include "rdm/verify.hpp"

using namespace rdm;
namespace fs = std::filesystem;

namespace {

constexpr std::uint64_t kSeed = 20240801;

struct Criterion {
  std::string description;
  double budget_seconds;
  std::function<bool(std::string&)> run;
};

bool verify_subset(std::vector<std::string> only, std::int64_t instances,
                   std::string& detail) {
  VerifyOptions opt;
  opt.seed = kSeed;
  opt.instances = instances;
  opt.only = std::move(only);
  const VerifyReport report = verify_all(opt);
  bool ok = true;
  for (const auto& p : report.properties) {
    detail += p.name + ": " + std::to_string(p.instances) + " instances, " +
              std::to_string(p.failures) + " failures, worst margin " +
              format_float(p.worst_margin) + "; ";
    ok = ok && p.failures == 0;
  }
  return ok;
}

// 1. Strict rank difference under non-constant increasing filters; equality
//    for constant ones.
bool criterion_rank_difference(std::string& detail) {
  return verify_subset({"rank_reduction_strict", "rank_reduction_constant"},
                       1000, detail);
}

// 2. One-step recursion equivalence on aligned instances plus 200-step
//    strict erank growth under perfect alignment or an optimal predictor.
bool criterion_recursion(std::string& detail) {
  return verify_subset({"gd_recursion_equivalence", "gd_erank_growth"}, 250,
                       detail);
}

// 3. Closed-form-gradient descent reaches the regularized optimum; the
//    gradient matches finite differences.
bool criterion_predictor_convergence(std::string& detail) {
  const IsotropicAugModel data = random_isotropic_model(16, 8, 0.5, kSeed);
  const LinearModel model = random_linear_model(data, 0.01, 0.1);
  LinearRunOptions opt;
  opt.steps = 4000;
  opt.record_stride = 1000;
  const LinearRunResult run = linear_training_run(model, opt);
  detail = "predictor relative error " + format_float(run.predictor_rel_error);
  bool ok = run.predictor_rel_error <= 1e-4;
  ok = verify_subset({"gradient_stationarity"}, 200, detail) && ok;
  return ok;
}

// 4. Variance decomposition identities by exact enumeration.
bool criterion_variance_decomposition(std::string& detail) {
  return verify_subset({"variance_decomposition"}, 200, detail);
}

// 5. Centering identity at the exact pooled mean.
bool criterion_centering_identity(std::string& detail) {
  return verify_subset({"centering_identity"}, 200, detail);
}

ExperimentConfig desk_dynamics_config(bool stop_gradient,
                                      const std::string& out_dir) {
  ExperimentConfig c;
  c.kind = "dynamics";
  c.d = 32;
  c.k = 16;
  c.aug_std = 0.5;
  c.seed = kSeed;
  c.filter = "directpred";
  c.alpha = 0.05;
  c.steps = 500;
  c.stop_gradient = stop_gradient;
  c.samples = 2048;
  c.record_stride = 1;
  c.out_dir = out_dir;
  return c;
}

// 6. Desk-scale rank-gap trajectory: the target stays above the online
//    branch and the online erank grows by at least 10%.
bool criterion_rank_gap_trajectory(std::string& detail) {
  const std::string dir = "acceptance_tmp/dynamics_on";
  fs::remove_all(dir);
  const ExperimentConfig c = desk_dynamics_config(true, dir);
  run_experiment(c);
  const std::string csv = read_text_file(dir + "/trajectory.csv");

  // Parse the erank columns back out of the CSV.
  std::vector<double> online, target;
  std::size_t pos = csv.find('\n') + 1;
  while (pos < csv.size()) {
    const std::size_t end = csv.find('\n', pos);
    const std::string line = csv.substr(pos, end - pos);
    pos = end + 1;
    std::size_t c1 = line.find(',');
    std::size_t c2 = line.find(',', c1 + 1);
    std::size_t c3 = line.find(',', c2 + 1);
    std::size_t c4 = line.find(',', c3 + 1);
    online.push_back(std::stod(line.substr(c2 + 1, c3 - c2 - 1)));
    target.push_back(std::stod(line.substr(c3 + 1, c4 - c3 - 1)));
  }

  bool gap_holds = online.size() == 501;
  for (std::size_t i = 0; i < online.size(); ++i)
    gap_holds = gap_holds && target[i] >= online[i];
  const double growth = online.back() / online.front();
  double min_gap = 1e300;
  for (std::size_t i = 0; i < online.size(); ++i)
    min_gap = std::min(min_gap, target[i] - online[i]);
  detail = "rows " + std::to_string(online.size()) + ", erank_online " +
           format_float(online.front()) + " -> " + format_float(online.back()) +
           " (x" + format_float(growth) + "), min gap " + format_float(min_gap);
  return gap_holds && growth >= 1.1;
}

// 7. Stop-gradient ablation: without it the target erank sinks strictly
//    below its start; with it the target erank never moves.
bool criterion_stop_gradient_ablation(std::string& detail) {
  const std::string dir_on = "acceptance_tmp/ablation_on";
  const std::string dir_off = "acceptance_tmp/ablation_off";
  fs::remove_all(dir_on);
  fs::remove_all(dir_off);
  run_experiment(desk_dynamics_config(true, dir_on));
  run_experiment(desk_dynamics_config(false, dir_off));

  const auto target_column = [](const std::string& path) {
    const std::string csv = read_text_file(path);
    std::vector<double> out;
    std::size_t pos = csv.find('\n') + 1;
    while (pos < csv.size()) {
      const std::size_t end = csv.find('\n', pos);
      const std::string line = csv.substr(pos, end - pos);
      pos = end + 1;
      std::size_t c1 = line.find(',');
      std::size_t c2 = line.find(',', c1 + 1);
      std::size_t c3 = line.find(',', c2 + 1);
      std::size_t c4 = line.find(',', c3 + 1);
      out.push_back(std::stod(line.substr(c3 + 1, c4 - c3 - 1)));
    }
    return out;
  };

  const std::vector<double> on = target_column(dir_on + "/trajectory.csv");
  const std::vector<double> off = target_column(dir_off + "/trajectory.csv");

  bool on_constant = true;
  for (const double v : on) on_constant = on_constant && v == on.front();
  const bool off_sinks = off.back() < off.front();
  detail = "with stop-gradient: target erank stays " + format_float(on.front()) +
           "; without: " + format_float(off.front()) + " -> " +
           format_float(off.back());
  return on_constant && off_sinks;
}

// 8. Filter-zoo classification and target-filter round trips.
bool criterion_filter_zoo(std::string& detail) {
  const Eigen::VectorXd grid = default_sigma_grid();
  bool ok = classify(directpred_filter(), grid).kind == FilterKind::LowPass &&
            classify(log_filter(), grid).kind == FilterKind::LowPass &&
            classify(log1p_filter(), grid).kind == FilterKind::LowPass &&
            classify(log1p_sq_filter(), grid).kind == FilterKind::LowPass;
  for (const double p : {-0.3, -0.5, -0.7, -1.0})
    ok = ok && classify(power_filter(p), grid).kind == FilterKind::HighPass;
  detail = "classification " + std::string(ok ? "ok" : "wrong");

  RngStream rng(kSeed, "acceptance-roundtrip");
  Eigen::MatrixXd z(192, 12);
  for (Eigen::Index i = 0; i < z.rows(); ++i)
    for (Eigen::Index j = 0; j < z.cols(); ++j) z(i, j) = rng.normal();
  const double n = static_cast<double>(z.rows());

  double worst = 0.0;
  for (const double p : {-0.3, -0.5, -0.7, -1.0}) {
    const FeatureBatch target =
        apply_target_filter(FeatureBatch(z), power_filter(p));
    const auto [cls, pairs] =
        extract_transformation_filter(FeatureBatch(z), target);
    ok = ok && cls.kind == FilterKind::HighPass;
    for (const auto& [lam_p, h] : pairs) {
      const double sigma = std::sqrt(n * lam_p);
      worst = std::max(worst, std::abs(h - std::pow(sigma, p)));
    }
  }
  detail += ", worst round-trip error " + format_float(worst);
  return ok && worst <= 1e-6;
}

// 9. Balanced-assignment iterations act as a high-pass target filter on a
//    rank-skewed softmax batch, stable across 1, 3, 5 iterations.
bool criterion_assignment_highpass(std::string& detail) {
  RngStream rng(kSeed, "acceptance-assignment");
  const Eigen::Index n = 512, k = 16;
  Eigen::MatrixXd base(n, k);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < k; ++j) base(i, j) = rng.normal();
  Eigen::VectorXd decay(k);
  for (Eigen::Index j = 0; j < k; ++j) decay[j] = std::pow(0.70, j);
  const Eigen::MatrixXd scores = 2.0 * base * decay.asDiagonal();

  const FeatureBatch online =
      center_sharpen(FeatureBatch(scores), Eigen::VectorXd::Zero(k), 1.0);

  bool ok = true;
  for (const int iters : {1, 3, 5}) {
    const FeatureBatch target =
        sinkhorn_knopp(FeatureBatch(scores), iters, 0.05);
    const auto [cls, pairs] = extract_transformation_filter(online, target);
    Eigen::VectorXd lam(static_cast<Eigen::Index>(pairs.size())),
        h(static_cast<Eigen::Index>(pairs.size()));
    for (std::size_t i = 0; i < pairs.size(); ++i) {
      lam[static_cast<Eigen::Index>(i)] = pairs[i].first;
      h[static_cast<Eigen::Index>(i)] = pairs[i].second;
    }
    const double rho = spearman_rank_correlation(lam, h);
    detail += "iters " + std::to_string(iters) + ": spearman " +
              format_float(rho) + " " + to_string(cls.kind) + "; ";
    ok = ok && cls.kind == FilterKind::HighPass && rho < -0.5;
  }
  return ok;
}

// 10. Identical config and seed reproduce byte-identical outputs.
bool criterion_reproducibility(std::string& detail) {
  unsetenv("RDM_OUT_DIR");
  ExperimentConfig c = desk_dynamics_config(true, "acceptance_tmp/repro_a");
  c.steps = 50;
  c.samples = 512;
  fs::remove_all(c.out_dir);
  run_experiment(c);
  const std::string csv_a = read_text_file(c.out_dir + "/trajectory.csv");
  const std::string sum_a = read_text_file(c.out_dir + "/summary.json");

  fs::remove_all(c.out_dir);
  run_experiment(c);
  const std::string csv_b = read_text_file(c.out_dir + "/trajectory.csv");
  const std::string sum_b = read_text_file(c.out_dir + "/summary.json");

  const bool ok = csv_a == csv_b && sum_a == sum_b;
  detail = "trajectory bytes " + std::to_string(csv_a.size()) +
           ", summaries " + (ok ? "identical" : "DIFFER");
  return ok;
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"strict rank difference under monotone filters", 10.0,
       criterion_rank_difference},
      {"gradient-descent recursion equivalence and erank growth", 30.0,
       criterion_recursion},
      {"closed-form predictor optimality and gradient check", 10.0,
       criterion_predictor_convergence},
      {"variance decomposition identities by enumeration", 5.0,
       criterion_variance_decomposition},
      {"centering identity at the exact pooled mean", 2.0,
       criterion_centering_identity},
      {"desk-scale rank-gap trajectory", 60.0, criterion_rank_gap_trajectory},
      {"stop-gradient ablation ordering", 60.0,
       criterion_stop_gradient_ablation},
      {"filter zoo classification and round trip", 5.0, criterion_filter_zoo},
      {"balanced assignment acts as a high-pass target filter", 10.0,
       criterion_assignment_highpass},
      {"byte-identical reproducibility", 60.0, criterion_reproducibility},
  };

  int failures = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    const auto& c = criteria[i];
    std::string detail;
    bool ok = false;
    const auto start = std::chrono::steady_clock::now();
    try {
      ok = c.run(detail);
    } catch (const std::exception& e) {
      detail = std::string("exception: ") + e.what();
      ok = false;
    }
    const double seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start)
            .count();
    if (seconds > c.budget_seconds) {
      detail += " [over time budget " + std::to_string(c.budget_seconds) + "s]";
      ok = false;
    }
    std::printf("[%s] criterion %zu: %s (%.2fs) %s\n", ok ? "PASS" : "FAIL",
                i + 1, c.description.c_str(), seconds, detail.c_str());
    if (!ok) ++failures;
  }

  fs::remove_all("acceptance_tmp");
  if (failures > 0) {
    std::printf("%d criterion(s) failed\n", failures);
    return 1;
  }
  std::printf("all %zu criteria passed\n", criteria.size());
  return 0;
}
