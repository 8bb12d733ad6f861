#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "rdm/rng.hpp"
#include "rdm/types.hpp"

namespace rdm {

// Positive-pair generators and exact/empirical correlation bundles for the
// two data settings: isotropic natural data with a linear encoder, and a
// fully enumerated finite sample space.

struct IsotropicAugModel {
  Eigen::Index d = 0;          // ambient dimension
  Eigen::Index k = 0;          // feature dimension
  double aug_std = 0.0;        // augmentation noise scale
  Eigen::MatrixXd encoder;     // k x d
  std::uint64_t seed = 0;
};

// Gaussian encoder with entries scaled by 1/sqrt(d), drawn from the model's
// "init" stream.
IsotropicAugModel random_isotropic_model(Eigen::Index d, Eigen::Index k,
                                         double aug_std, std::uint64_t seed);

// Natural point plus two independent augmentations of it, in ambient space.
struct PairSample {
  Eigen::VectorXd natural;
  Eigen::VectorXd x;
  Eigen::VectorXd x_plus;
};

PairSample sample_triple(const IsotropicAugModel& model, RngStream& rng);
std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(
    const IsotropicAugModel& model, RngStream& rng);

// Finite sample space: natural points with probabilities, each with a finite
// conditional augmentation distribution mapped straight to feature vectors.
struct AugmentedPoint {
  double prob = 0.0;
  Eigen::VectorXd feature;
};

struct NaturalPoint {
  double prob = 0.0;
  std::vector<AugmentedPoint> augmentations;
};

struct FinitePopulation {
  std::vector<NaturalPoint> naturals;

  Eigen::Index feature_dim() const;
  // Probabilities non-negative, naturals and each conditional summing to 1
  // within 1e-12.
  void validate() const;
};

// Strict schema: {"naturals": [{"prob": p, "augmentations": [{"prob": q,
// "feature": [..]}]}]}. "prob" may be omitted everywhere at one level to get
// uniform weights; unknown keys are rejected.
FinitePopulation load_population_json(const std::string& json_text);
FinitePopulation load_population_file(const std::string& path);

FinitePopulation random_population(Eigen::Index n_naturals,
                                   Eigen::Index max_augmentations,
                                   Eigen::Index k, RngStream& rng);

// Per-entry standard errors from contiguous batch means.
struct MonteCarloError {
  Eigen::MatrixXd se_z;
  Eigen::MatrixXd se_plus;
  int batches = 0;
};

// The four correlations of one data model. Exact bundles (sample_count 0)
// satisfy c_plus == c_bar and c_z == c_bar + v_cond within 1e-10, checked on
// construction.
struct CorrelationBundle {
  CorrelationEstimate c_z;
  CorrelationEstimate c_plus;
  CorrelationEstimate c_bar;
  CorrelationEstimate v_cond;
  std::optional<MonteCarloError> mc_error;

  static CorrelationBundle exact(Eigen::MatrixXd c_z, Eigen::MatrixXd c_plus,
                                 Eigen::MatrixXd c_bar, Eigen::MatrixXd v_cond);
};

// Closed forms for the isotropic linear-encoder setting:
// c_z = (1 + aug_std^2) W W^T, c_plus = c_bar = W W^T, v_cond = aug_std^2 W W^T.
CorrelationBundle exact_correlations_linear(const IsotropicAugModel& model);

// Exact enumeration over the finite joint distribution.
CorrelationBundle empirical_correlations(const FinitePopulation& pop);

// Sampled estimate through the linear encoder. Blocked and deterministic:
// each fixed-size block draws from its own child stream, so the result is
// independent of thread count. The serial variant runs the same blocks
// without OpenMP and is bitwise identical.
CorrelationBundle monte_carlo_correlations(const IsotropicAugModel& model,
                                           std::int64_t samples);
CorrelationBundle monte_carlo_correlations_serial(
    const IsotropicAugModel& model, std::int64_t samples);

}  // namespace rdm
