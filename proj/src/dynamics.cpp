#include "rdm/dynamics.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>

#include "rdm/spectral.hpp"

namespace rdm {

namespace {

Spectrum sorted_spectrum(const Eigen::VectorXd& raw) {
  Eigen::VectorXd v = raw;
  std::sort(v.data(), v.data() + v.size(), std::greater<double>());
  return Spectrum(std::move(v));
}

Eigen::VectorXd top_values(const Spectrum& s, Eigen::Index r) {
  const Eigen::Index n = std::min(r, s.size());
  return s.values().head(n);
}

}  // namespace

void LinearModel::validate() const {
  if (encoder.rows() < 1 || encoder.cols() < 1)
    throw InvalidInput("LinearModel: empty encoder");
  if (predictor.rows() != encoder.rows() ||
      predictor.cols() != encoder.rows())
    throw InvalidInput("LinearModel: predictor must be k x k");
  if (!encoder.allFinite() || !predictor.allFinite())
    throw InvalidInput("LinearModel: non-finite entries");
  if (aug_std < 0.0) throw InvalidInput("LinearModel: aug_std must be >= 0");
  if (eta < 0.0) throw InvalidInput("LinearModel: eta must be >= 0");
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInput("LinearModel: alpha must lie in (0,1)");
}

LinearModel random_linear_model(const IsotropicAugModel& data, double eta,
                                double alpha) {
  RngStream rng(data.seed, "predictor-init");
  Eigen::MatrixXd w(data.k, data.k);
  const double scale = 0.1 / std::sqrt(static_cast<double>(data.k));
  for (Eigen::Index i = 0; i < data.k; ++i)
    for (Eigen::Index j = 0; j < data.k; ++j) w(i, j) = scale * rng.normal();
  LinearModel model{data.encoder, std::move(w), data.aug_std, eta, alpha};
  model.validate();
  return model;
}

double alignment_loss_mse(const FeatureBatch& p,
                          const FeatureBatch& z_target) {
  if (p.rows() != z_target.rows() || p.cols() != z_target.cols())
    throw InvalidInput("alignment_loss_mse: shape mismatch");
  return 0.5 * (p.matrix() - z_target.matrix()).squaredNorm() /
         static_cast<double>(p.rows());
}

double predictor_loss(const LinearModel& model) {
  model.validate();
  const Eigen::MatrixXd gram = model.encoder * model.encoder.transpose();
  const double s2 = 1.0 + model.aug_std * model.aug_std;
  const Eigen::MatrixXd& w = model.predictor;
  const double align =
      0.5 * (s2 * (w.transpose() * w * gram).trace() -
             2.0 * (w * gram).trace() + s2 * gram.trace());
  return align + 0.5 * model.eta * w.squaredNorm();
}

Eigen::MatrixXd predictor_gradient(const LinearModel& model) {
  model.validate();
  const Eigen::MatrixXd gram = model.encoder * model.encoder.transpose();
  const double s2 = 1.0 + model.aug_std * model.aug_std;
  return s2 * model.predictor * gram - gram + model.eta * model.predictor;
}

Eigen::MatrixXd optimal_predictor(const CorrelationEstimate& c_plus,
                                  const CorrelationEstimate& c_z,
                                  double eta) {
  if (c_plus.size() != c_z.size())
    throw InvalidInput("optimal_predictor: size mismatch");
  if (eta < 0.0) throw InvalidInput("optimal_predictor: eta must be >= 0");

  const Eigen::Index k = c_z.size();
  const Eigen::MatrixXd m =
      c_z.matrix() + eta * Eigen::MatrixXd::Identity(k, k);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m);
  if (es.eigenvalues().minCoeff() <= 1e-10)
    throw SingularMatrix(
        "optimal_predictor: target correlation is singular; pass eta > 0 for "
        "the regularized form");

  // w = c_plus m^{-1}; both are symmetric, so solve on the transpose.
  const Eigen::MatrixXd w = m.ldlt().solve(c_plus.matrix()).transpose();

  // When the inputs commute they share an eigenbasis and the predictor's
  // eigenvalues are the ratios lam_plus/lam_z, which must lie in [0,1].
  const double scale = std::max(1.0, c_plus.matrix().cwiseAbs().maxCoeff() *
                                         c_z.matrix().cwiseAbs().maxCoeff());
  const Eigen::MatrixXd comm = c_plus.matrix() * c_z.matrix() -
                               c_z.matrix() * c_plus.matrix();
  if (comm.cwiseAbs().maxCoeff() <= 1e-10 * scale && eta == 0.0) {
    const EigenDecomposition dz = eigh(c_z);
    const Eigen::VectorXd omega =
        (dz.basis.matrix().transpose() * w * dz.basis.matrix()).diagonal();
    if (omega.minCoeff() < -1e-9 || omega.maxCoeff() > 1.0 + 1e-9)
      throw InvalidInput(
          "optimal_predictor: shared-basis predictor spectrum escapes [0,1]");
  }
  return w;
}

PredictorMode parse_predictor_mode(const std::string& text) {
  if (text == "refit") return PredictorMode::Refit;
  if (text == "fixed") return PredictorMode::Fixed;
  throw ConfigError("predictor_mode must be 'refit' or 'fixed', got '" + text +
                    "'");
}

std::string to_string(PredictorMode mode) {
  return mode == PredictorMode::Refit ? "refit" : "fixed";
}

void UnconstrainedState::validate() const {
  const Eigen::Index k = lam_p.size();
  if (k == 0 || lam_z.size() != k || lam_plus.size() != k)
    throw InvalidInput("UnconstrainedState: spectra must share a length >= 1");
  for (Eigen::Index i = 0; i < k; ++i) {
    if (!(lam_p[i] > 0.0))
      throw InvalidInput("UnconstrainedState: lam_p must be positive");
    if (lam_plus[i] < 0.0 || lam_z[i] < lam_plus[i] - 1e-12)
      throw InvalidInput(
          "UnconstrainedState: needs lam_z >= lam_plus >= 0 per index");
    if (i > 0 && lam_z[i] > lam_z[i - 1])
      throw InvalidInput("UnconstrainedState: lam_z must be non-increasing");
  }
}

Spectrum UnconstrainedState::online_spectrum() const {
  return sorted_spectrum(lam_p);
}

Spectrum UnconstrainedState::target_spectrum() const {
  return sorted_spectrum(lam_z);
}

namespace {

Eigen::VectorXd fitted_h(const UnconstrainedState& state) {
  Eigen::VectorXd h(state.lam_p.size());
  for (Eigen::Index i = 0; i < h.size(); ++i)
    h[i] = std::sqrt(std::max(state.lam_z[i], 0.0) /
                     std::max(state.lam_p[i], kFloorSigma));
  return h;
}

}  // namespace

UnconstrainedState unconstrained_step(const UnconstrainedState& state,
                                      double alpha, PredictorMode mode) {
  if (!(alpha > 0.0 && alpha < 1.0))
    throw InvalidInput("unconstrained_step: alpha must lie in (0,1)");
  state.validate();

  UnconstrainedState next = state;
  if (mode == PredictorMode::Fixed && next.frozen_h.size() == 0)
    next.frozen_h = fitted_h(state);
  const Eigen::VectorXd h =
      mode == PredictorMode::Fixed ? next.frozen_h : fitted_h(state);
  if (h.size() != state.lam_p.size())
    throw InvalidInput("unconstrained_step: frozen h has the wrong length");

  for (Eigen::Index i = 0; i < state.lam_p.size(); ++i) {
    const double lz = state.lam_z[i];
    const double ratio = lz > 0.0 ? state.lam_plus[i] / lz : 0.0;
    const double factor = (1.0 - alpha) * (1.0 - alpha) +
                          alpha * alpha * h[i] * h[i] +
                          2.0 * alpha * (1.0 - alpha) * h[i] * ratio;
    next.lam_p[i] = state.lam_p[i] * factor;
  }
  return next;
}

namespace {

TrajectoryPoint record_batch_point(std::int64_t step, double loss,
                                   const Eigen::MatrixXd& online,
                                   const Eigen::MatrixXd& target,
                                   Eigen::Index top_count) {
  const CorrelationEstimate c_p = correlation(FeatureBatch(online));
  const CorrelationEstimate c_z = correlation(FeatureBatch(target));
  const Spectrum sp = eigh(c_p).spectrum;
  const Spectrum sz = eigh(c_z).spectrum;
  TrajectoryPoint pt;
  pt.step = step;
  pt.loss = loss;
  pt.erank_online = effective_rank(sp);
  pt.erank_target = effective_rank(sz);
  pt.alignment = eigenspace_alignment(c_p, c_z);
  pt.ev_online = top_values(sp, top_count);
  pt.ev_target = top_values(sz, top_count);
  return pt;
}

bool should_record(std::int64_t step, std::int64_t steps,
                   std::int64_t stride) {
  return step % stride == 0 || step == steps;
}

}  // namespace

TrajectoryRecord simulate_feature_gd(const FeatureBatch& p0,
                                     const FeatureBatch& z,
                                     const FeatureBatch& z_pair,
                                     const FeatureGdOptions& options) {
  if (p0.rows() != z.rows() || p0.cols() != z.cols() ||
      z.rows() != z_pair.rows() || z.cols() != z_pair.cols())
    throw InvalidInput("simulate_feature_gd: shape mismatch");
  if (!(options.alpha > 0.0 && options.alpha < 1.0))
    throw InvalidInput("simulate_feature_gd: alpha must lie in (0,1)");
  if (options.steps < 0 || options.record_stride < 1)
    throw InvalidInput("simulate_feature_gd: bad step/stride counts");

  Eigen::MatrixXd online = p0.matrix();
  Eigen::MatrixXd target = z_pair.matrix();
  const double a = options.alpha;

  TrajectoryRecord record;
  record.top_count = std::min<Eigen::Index>(options.top_count, p0.cols());

  for (std::int64_t step = 0;; ++step) {
    if (!online.allFinite() || !target.allFinite())
      throw DivergenceError("simulate_feature_gd: non-finite values at step " +
                            std::to_string(step));
    if (should_record(step, options.steps, options.record_stride)) {
      const double loss =
          0.5 * (online - target).squaredNorm() / static_cast<double>(online.rows());
      record.points.push_back(
          record_batch_point(step, loss, online, target, record.top_count));
    }
    if (step == options.steps) break;

    if (options.stop_gradient) {
      online = ((1.0 - a) * online + a * target).eval();
    } else {
      // Both batches receive the gradient; simultaneous update.
      const Eigen::MatrixXd next_online = (1.0 - a) * online + a * target;
      target = ((1.0 - a) * target + a * online).eval();
      online = next_online;
    }
  }
  return record;
}

TrajectoryRecord recursion_trajectory(const UnconstrainedState& initial,
                                      double alpha, std::int64_t steps,
                                      PredictorMode mode,
                                      std::int64_t record_stride,
                                      Eigen::Index top_count) {
  if (steps < 0 || record_stride < 1)
    throw InvalidInput("recursion_trajectory: bad step/stride counts");
  initial.validate();

  UnconstrainedState state = initial;
  if (mode == PredictorMode::Fixed && state.frozen_h.size() == 0)
    state.frozen_h = fitted_h(state);

  TrajectoryRecord record;
  record.top_count = std::min<Eigen::Index>(top_count, initial.lam_p.size());

  const Spectrum sz = state.target_spectrum();
  const double erank_target = effective_rank(sz);

  for (std::int64_t step = 0;; ++step) {
    if (!state.lam_p.allFinite())
      throw DivergenceError("recursion_trajectory: non-finite values at step " +
                            std::to_string(step));
    if (should_record(step, steps, record_stride)) {
      TrajectoryPoint pt;
      pt.step = step;
      double cross = 0.0;
      for (Eigen::Index i = 0; i < state.lam_p.size(); ++i) {
        const double lp = std::max(state.lam_p[i], kFloorSigma);
        // Predictor eigenvalue w = 1/h: re-fit to the current spectra or
        // frozen at its initial fit.
        const double w =
            mode == PredictorMode::Refit
                ? std::sqrt(lp / std::max(state.lam_z[i], kFloorSigma))
                : 1.0 / std::max(state.frozen_h[i], 1e-300);
        cross += w * state.lam_plus[i];
      }
      pt.loss = 0.5 * (state.lam_p.sum() + state.lam_z.sum() - 2.0 * cross);
      const Spectrum sp = state.online_spectrum();
      pt.erank_online = effective_rank(sp);
      pt.erank_target = erank_target;
      pt.alignment = 1.0;  // shared eigenbasis by construction
      pt.ev_online = sp.values().head(record.top_count);
      pt.ev_target = sz.values().head(record.top_count);
      record.points.push_back(std::move(pt));
    }
    if (step == steps) break;
    state = unconstrained_step(state, alpha, mode);
  }
  return record;
}

void CenterState::validate() const {
  if (center.size() < 1) throw InvalidInput("CenterState: empty center");
  if (!center.allFinite()) throw InvalidInput("CenterState: non-finite center");
  if (!(momentum >= 0.0 && momentum < 1.0))
    throw InvalidInput("CenterState: momentum must lie in [0,1)");
}

namespace {

Eigen::MatrixXd normalized_rows(const Eigen::MatrixXd& m) {
  Eigen::MatrixXd out = m;
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    const double norm = out.row(i).norm();
    if (norm == 0.0)
      throw InvalidInput("row normalization: zero row " + std::to_string(i));
    if (std::abs(norm - 1.0) > 1e-9) out.row(i) /= norm;
  }
  return out;
}

}  // namespace

std::pair<double, CenterState> symsimsiam_step(const FeatureBatch& batch1,
                                               const FeatureBatch& batch2,
                                               const CenterState& cs) {
  if (batch1.rows() != batch2.rows() || batch1.cols() != batch2.cols())
    throw InvalidInput("symsimsiam_step: shape mismatch");
  cs.validate();
  if (cs.center.size() != batch1.cols())
    throw InvalidInput("symsimsiam_step: center dimension mismatch");

  const Eigen::MatrixXd z1 = normalized_rows(batch1.matrix());
  const Eigen::MatrixXd z2 = normalized_rows(batch2.matrix());

  const Eigen::VectorXd batch_mean =
      0.5 * (z1.colwise().mean() + z2.colwise().mean()).transpose();
  CenterState next = cs;
  next.center =
      cs.momentum * cs.center + (1.0 - cs.momentum) * batch_mean;

  const Eigen::MatrixXd c1 = z1.rowwise() - next.center.transpose();
  const Eigen::MatrixXd c2 = z2.rowwise() - next.center.transpose();
  const double loss =
      -(c1.array() * c2.array()).rowwise().sum().mean();
  return {loss, std::move(next)};
}

double verify_centering_identity(const FeatureBatch& batch1,
                                 const FeatureBatch& batch2,
                                 const Eigen::VectorXd& mu) {
  if (batch1.rows() != batch2.rows() || batch1.cols() != batch2.cols())
    throw InvalidInput("verify_centering_identity: shape mismatch");
  if (mu.size() != batch1.cols())
    throw InvalidInput("verify_centering_identity: mu dimension mismatch");
  for (Eigen::Index i = 0; i < batch1.rows(); ++i) {
    if (std::abs(batch1.matrix().row(i).norm() - 1.0) > 1e-9 ||
        std::abs(batch2.matrix().row(i).norm() - 1.0) > 1e-9)
      throw InvalidInput("verify_centering_identity: rows must be normalized");
  }

  const Eigen::MatrixXd c1 = batch1.matrix().rowwise() - mu.transpose();
  const Eigen::MatrixXd c2 = batch2.matrix().rowwise() - mu.transpose();
  const double lhs = -(c1.array() * c2.array()).rowwise().sum().mean();
  const double inner =
      (batch1.matrix().array() * batch2.matrix().array()).rowwise().sum().mean();
  const double rhs = -inner - (1.0 - mu.squaredNorm()) + 1.0;
  return std::abs(lhs - rhs);
}

LinearRunResult linear_training_run(const LinearModel& model,
                                    const LinearRunOptions& options) {
  model.validate();
  if (options.steps < 0 || options.record_stride < 1)
    throw InvalidInput("linear_training_run: bad step/stride counts");

  const Eigen::MatrixXd gram = model.encoder * model.encoder.transpose();
  const double s2 = 1.0 + model.aug_std * model.aug_std;
  const Eigen::MatrixXd c_z_mat = s2 * gram;
  const CorrelationEstimate c_z(c_z_mat, 0);
  const CorrelationEstimate c_bar(gram, 0);
  const Spectrum sz = eigh(c_z).spectrum;
  const double erank_target = effective_rank(sz);

  LinearModel current = model;
  TrajectoryRecord record;
  record.top_count = std::min<Eigen::Index>(8, gram.rows());

  for (std::int64_t step = 0;; ++step) {
    // The optimum has spectral norm at most 1, so a predictor past 1e6 is
    // divergence in all but name; fail before the recorded spectra degrade
    // into rounding garbage.
    if (!current.predictor.allFinite() ||
        current.predictor.cwiseAbs().maxCoeff() > 1e6)
      throw DivergenceError("linear_training_run: diverged at step " +
                            std::to_string(step));
    if (should_record(step, options.steps, options.record_stride)) {
      const Eigen::MatrixXd c_p_mat =
          current.predictor * c_z_mat * current.predictor.transpose();
      const CorrelationEstimate c_p(0.5 * (c_p_mat + c_p_mat.transpose()), 0);
      const Spectrum sp = eigh(c_p).spectrum;
      TrajectoryPoint pt;
      pt.step = step;
      pt.loss = predictor_loss(current) -
                0.5 * current.eta * current.predictor.squaredNorm();
      pt.erank_online = effective_rank(sp);
      pt.erank_target = erank_target;
      pt.alignment = eigenspace_alignment(c_p, c_z);
      pt.ev_online = sp.values().head(record.top_count);
      pt.ev_target = sz.values().head(record.top_count);
      record.points.push_back(std::move(pt));
    }
    if (step == options.steps) break;
    current.predictor -= current.alpha * predictor_gradient(current);
  }

  LinearRunResult result;
  result.record = std::move(record);
  result.final_predictor = current.predictor;
  result.optimal = optimal_predictor(c_bar, c_z, model.eta);
  const double denom = result.optimal.norm();
  result.predictor_rel_error =
      denom > 0.0 ? (current.predictor - result.optimal).norm() / denom : 0.0;
  return result;
}

}  // namespace rdm
