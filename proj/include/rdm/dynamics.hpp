#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "rdm/filters.hpp"
#include "rdm/synth.hpp"
#include "rdm/types.hpp"

namespace rdm {

// Training dynamics: closed-form predictor optimization, feature-space
// gradient descent with and without stop-gradient, the per-eigenvalue
// update recursion, and the symmetric centering loop.

// Linear encoder + linear predictor in the isotropic-data setting; aug_std
// is the augmentation noise the closed-form gradient depends on.
struct LinearModel {
  Eigen::MatrixXd encoder;    // k x d
  Eigen::MatrixXd predictor;  // k x k
  double aug_std = 0.0;
  double eta = 0.0;           // weight decay
  double alpha = 0.1;         // step size, in (0,1)

  void validate() const;
};

// Predictor drawn from the model's "predictor-init" stream so the encoder
// matches random_isotropic_model for the same seed.
LinearModel random_linear_model(const IsotropicAugModel& data, double eta,
                                double alpha);

// (1/n) sum_x 0.5 ||p_x - z_x||^2. The target batch carries no gradient;
// callers differentiate with respect to p only.
double alignment_loss_mse(const FeatureBatch& p, const FeatureBatch& z_target);

// Closed-form objective and gradient for the isotropic setting, including
// the weight-decay term.
double predictor_loss(const LinearModel& model);
Eigen::MatrixXd predictor_gradient(const LinearModel& model);

// c_plus * (c_z + eta I)^{-1}. Refuses near-singular c_z at eta = 0 rather
// than silently pseudo-inverting. When the inputs commute (shared
// eigenbasis), the predictor's eigenvalues are checked to lie in [0, 1].
Eigen::MatrixXd optimal_predictor(const CorrelationEstimate& c_plus,
                                  const CorrelationEstimate& c_z,
                                  double eta = 0.0);

enum class PredictorMode { Refit, Fixed };
PredictorMode parse_predictor_mode(const std::string& text);
std::string to_string(PredictorMode mode);

// Eigenvalue triple evolved by the per-index update recursion. Index order
// pairs the three spectra; lam_p may lose its descending order under strong
// frozen predictors, so it is stored raw and sorted only when read as a
// Spectrum.
struct UnconstrainedState {
  Eigen::VectorXd lam_p;
  Eigen::VectorXd lam_z;
  Eigen::VectorXd lam_plus;
  SpectralFilter filter_h;  // provenance: the high-pass companion 1/g that
                            // produced lam_p, when one did
  Eigen::VectorXd frozen_h;  // per-index h captured at the first Fixed step

  UnconstrainedState(Eigen::VectorXd p, Eigen::VectorXd z,
                     Eigen::VectorXd plus, SpectralFilter h)
      : lam_p(std::move(p)),
        lam_z(std::move(z)),
        lam_plus(std::move(plus)),
        filter_h(std::move(h)) {}

  void validate() const;
  Spectrum online_spectrum() const;  // sorted copy of lam_p
  Spectrum target_spectrum() const;
};

// One step of
//   lam_p <- lam_p ((1-a)^2 + a^2 h^2 + 2a(1-a) h lam_plus/lam_z)
// with lam_z, lam_plus held fixed. Refit mode recomputes
// h = sqrt(lam_z/lam_p) from the current state each step (the predictor is
// re-fit to the spectra); Fixed mode freezes h at its first-step values and
// never re-fits.
UnconstrainedState unconstrained_step(const UnconstrainedState& state,
                                      double alpha,
                                      PredictorMode mode = PredictorMode::Refit);

struct TrajectoryPoint {
  std::int64_t step = 0;
  double loss = 0.0;
  double erank_online = 0.0;
  double erank_target = 0.0;
  double alignment = 0.0;
  Eigen::VectorXd ev_online;  // top eigenvalues, descending
  Eigen::VectorXd ev_target;
};

struct TrajectoryRecord {
  std::vector<TrajectoryPoint> points;
  Eigen::Index top_count = 8;
};

struct FeatureGdOptions {
  double alpha = 0.1;
  std::int64_t steps = 500;
  bool stop_gradient = true;
  std::int64_t record_stride = 1;
  Eigen::Index top_count = 8;
};

// Full-batch gradient descent directly on the online features against the
// paired target batch. With stop_gradient the target is constant; without
// it the gradient also flows into the target features and both batches
// co-update. Row i of z and z_pair are positive pairs; the online batch
// aligns to z_pair. Step 0 of the record is the pre-update state.
TrajectoryRecord simulate_feature_gd(const FeatureBatch& p0,
                                     const FeatureBatch& z,
                                     const FeatureBatch& z_pair,
                                     const FeatureGdOptions& options);

// Trajectory of the eigenvalue recursion itself (no sample batches). The
// loss column is the analytic alignment loss of the aligned setting and the
// alignment column is exactly 1.
TrajectoryRecord recursion_trajectory(const UnconstrainedState& initial,
                                      double alpha, std::int64_t steps,
                                      PredictorMode mode,
                                      std::int64_t record_stride,
                                      Eigen::Index top_count);

// Exponential-moving-average feature center.
struct CenterState {
  Eigen::VectorXd center;
  double momentum = 0.9;

  void validate() const;
};

// One step of the symmetric centering loop: the center moves by EMA over
// the concatenated batch mean, then both (row-normalized) batches are
// centered and scored with the negative mean inner product.
std::pair<double, CenterState> symsimsiam_step(const FeatureBatch& batch1,
                                               const FeatureBatch& batch2,
                                               const CenterState& cs);

// Residual |LHS - RHS| of the centered-alignment identity
//   -E (f(x)-mu)^T (f(x+)-mu) = -E f(x)^T f(x+) - (1 - ||mu||^2) + 1,
// which holds exactly when mu is the exact pooled mean of normalized rows.
double verify_centering_identity(const FeatureBatch& batch1,
                                 const FeatureBatch& batch2,
                                 const Eigen::VectorXd& mu);

struct LinearRunOptions {
  std::int64_t steps = 500;
  std::int64_t record_stride = 1;
  Eigen::Index top_count = 8;
};

struct LinearRunResult {
  TrajectoryRecord record;
  Eigen::MatrixXd final_predictor;
  Eigen::MatrixXd optimal;
  double predictor_rel_error = 0.0;  // ||W - W*||_F / ||W*||_F
};

// Gradient descent on the predictor with the closed-form gradient, recording
// erank and eigenspace alignment of the implied online/target correlations.
LinearRunResult linear_training_run(const LinearModel& model,
                                    const LinearRunOptions& options);

}  // namespace rdm
