#include "rdm/filters.hpp"

#include <Eigen/SVD>
#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <sstream>

#include "rdm/spectral.hpp"

namespace rdm {

namespace {

double checked_eval(const SpectralFilter& filter, double sigma) {
  const double v = filter(sigma);
  if (!std::isfinite(v)) {
    std::ostringstream msg;
    msg << "filter '" << filter.name << "' is non-finite at sigma=" << sigma;
    throw FilterDomainError(msg.str());
  }
  return v;
}

struct ThinSvd {
  Eigen::MatrixXd u;          // n x r
  Eigen::VectorXd sigma;      // r, floored at kFloorSigma
  Eigen::MatrixXd v;          // k x r
};

ThinSvd floored_thin_svd(const FeatureBatch& batch) {
  Eigen::BDCSVD<Eigen::MatrixXd> svd(batch.matrix(),
                                     Eigen::ComputeThinU | Eigen::ComputeThinV);
  ThinSvd out{svd.matrixU(), svd.singularValues(), svd.matrixV()};
  for (Eigen::Index i = 0; i < out.sigma.size(); ++i)
    out.sigma[i] = std::max(out.sigma[i], kFloorSigma);
  return out;
}

}  // namespace

SpectralFilter identity_filter() {
  return {"id", {}, [](double) { return 1.0; }};
}

SpectralFilter directpred_filter() {
  return {"directpred", {}, [](double s) { return s; }};
}

SpectralFilter log_filter() {
  return {"log", {}, [](double s) { return std::log(s); }};
}

SpectralFilter log1p_filter() {
  return {"log1p", {}, [](double s) { return std::log1p(s); }};
}

SpectralFilter log1p_sq_filter() {
  return {"log1psq", {}, [](double s) { return std::log1p(s * s); }};
}

SpectralFilter power_filter(double p) {
  return {"pow", {p}, [p](double s) { return std::pow(s, p); }};
}

SpectralFilter constant_filter(double c) {
  return {"const", {c}, [c](double) { return c; }};
}

std::string to_string(FilterKind kind) {
  switch (kind) {
    case FilterKind::LowPass: return "LowPass";
    case FilterKind::HighPass: return "HighPass";
    case FilterKind::Constant: return "Constant";
    case FilterKind::NonMonotone: return "NonMonotone";
  }
  return "NonMonotone";
}

Eigen::VectorXd default_sigma_grid() {
  const int n = 64;
  const double lo = std::log(0.05), hi = std::log(20.0);
  Eigen::VectorXd grid(n);
  for (int i = 0; i < n; ++i)
    grid[i] = std::exp(lo + (hi - lo) * i / (n - 1));
  return grid;
}

FilterClass classify(const SpectralFilter& filter,
                     const Eigen::VectorXd& grid) {
  if (grid.size() < 3) throw InvalidInput("classify: grid too short");
  for (Eigen::Index i = 0; i < grid.size(); ++i) {
    if (grid[i] <= kFloorSigma)
      throw InvalidInput("classify: grid point at or below sigma floor");
    if (i > 0 && grid[i] <= grid[i - 1])
      throw InvalidInput("classify: grid not strictly ascending");
  }

  bool all_up = true, all_down = true, all_flat = true;
  double prev = checked_eval(filter, grid[0]);
  for (Eigen::Index i = 1; i < grid.size(); ++i) {
    const double cur = checked_eval(filter, grid[i]);
    const double d = cur - prev;
    if (!(d > kMonoTol)) all_up = false;
    if (!(d < -kMonoTol)) all_down = false;
    if (std::abs(d) > kMonoTol) all_flat = false;
    prev = cur;
  }

  FilterKind kind = FilterKind::NonMonotone;
  if (all_flat)
    kind = FilterKind::Constant;
  else if (all_up)
    kind = FilterKind::LowPass;
  else if (all_down)
    kind = FilterKind::HighPass;
  return FilterClass{kind, grid};
}

FilterMatrix filter_matrix(const FeatureBatch& batch,
                           const SpectralFilter& filter) {
  const ThinSvd svd = floored_thin_svd(batch);
  Eigen::VectorXd g(svd.sigma.size());
  for (Eigen::Index i = 0; i < svd.sigma.size(); ++i)
    g[i] = checked_eval(filter, svd.sigma[i]);

  const Eigen::Index k = batch.cols();
  Eigen::MatrixXd w = svd.v * g.asDiagonal() * svd.v.transpose();
  // Identity on directions the batch carries no evidence about.
  w += Eigen::MatrixXd::Identity(k, k) - svd.v * svd.v.transpose();
  w = 0.5 * (w + w.transpose()).eval();
  return FilterMatrix{std::move(w), filter.name};
}

FeatureBatch apply_online_filter(const FeatureBatch& batch,
                                 const SpectralFilter& filter,
                                 WarningLog* warnings) {
  const FilterClass cls = classify(filter, default_sigma_grid());
  if (cls.kind != FilterKind::LowPass && cls.kind != FilterKind::Constant)
    warn(warnings, "apply_online_filter: filter '" + filter.name +
                       "' classifies " + to_string(cls.kind) +
                       ", expected LowPass or Constant");
  const FilterMatrix w = filter_matrix(batch, filter);
  return FeatureBatch(batch.matrix() * w.matrix);
}

FeatureBatch apply_target_filter(const FeatureBatch& batch,
                                 const SpectralFilter& filter,
                                 WarningLog* warnings) {
  const FilterClass cls = classify(filter, default_sigma_grid());
  if (cls.kind != FilterKind::HighPass && cls.kind != FilterKind::Constant)
    warn(warnings, "apply_target_filter: filter '" + filter.name +
                       "' classifies " + to_string(cls.kind) +
                       ", expected HighPass or Constant");
  const ThinSvd svd = floored_thin_svd(batch);
  Eigen::VectorXd scaled(svd.sigma.size());
  for (Eigen::Index i = 0; i < svd.sigma.size(); ++i)
    scaled[i] = svd.sigma[i] * checked_eval(filter, svd.sigma[i]);
  return FeatureBatch(svd.u * scaled.asDiagonal() * svd.v.transpose());
}

FeatureBatch sinkhorn_knopp(const FeatureBatch& scores, int iters, double eps,
                            SinkhornDiag* diag) {
  if (iters < 0) throw InvalidInput("sinkhorn_knopp: iters must be >= 0");
  if (!(eps > 0.0)) throw InvalidInput("sinkhorn_knopp: eps must be > 0");

  const Eigen::Index n = scores.rows(), k = scores.cols();
  Eigen::MatrixXd q = (scores.matrix() / eps).array().exp();
  if (!q.allFinite())
    throw InvalidInput(
        "sinkhorn_knopp: exp(scores/eps) overflowed; use a larger eps");

  const double col_target = 1.0 / static_cast<double>(k);
  const double row_target = 1.0 / static_cast<double>(n);

  for (int it = 0; it < iters; ++it) {
    Eigen::RowVectorXd colsum = q.colwise().sum();
    if ((colsum.array() <= 0.0).any())
      throw InvalidInput(
          "sinkhorn_knopp: a column underflowed to zero; use a larger eps");
    q.array().rowwise() *= (col_target / colsum.array());
    if (diag != nullptr)
      diag->column_residuals.push_back(
          (q.colwise().sum().array() - col_target).abs().maxCoeff());

    Eigen::VectorXd rowsum = q.rowwise().sum();
    if ((rowsum.array() <= 0.0).any())
      throw InvalidInput(
          "sinkhorn_knopp: a row underflowed to zero; use a larger eps");
    q.array().colwise() *= (row_target / rowsum.array());
    if (diag != nullptr)
      diag->row_residuals.push_back(
          (q.rowwise().sum().array() - row_target).abs().maxCoeff());
  }

  Eigen::VectorXd rowsum = q.rowwise().sum();
  if ((rowsum.array() <= 0.0).any())
    throw InvalidInput(
        "sinkhorn_knopp: a row underflowed to zero; use a larger eps");
  q.array().colwise() /= rowsum.array();
  return FeatureBatch(std::move(q));
}

FeatureBatch center_sharpen(const FeatureBatch& batch,
                            const Eigen::VectorXd& center,
                            double temperature) {
  if (!(temperature > 0.0))
    throw InvalidInput("center_sharpen: temperature must be > 0");
  if (center.size() != batch.cols())
    throw InvalidInput("center_sharpen: center size mismatch");

  Eigen::MatrixXd logits =
      (batch.matrix().rowwise() - center.transpose()) / temperature;
  for (Eigen::Index i = 0; i < logits.rows(); ++i) {
    const double m = logits.row(i).maxCoeff();
    Eigen::ArrayXd e = (logits.row(i).array() - m).exp();
    logits.row(i) = (e / e.sum()).matrix();
  }
  return FeatureBatch(std::move(logits));
}

std::pair<FilterClass, std::vector<std::pair<double, double>>>
extract_transformation_filter(const FeatureBatch& online,
                              const FeatureBatch& target) {
  if (online.rows() != target.rows() || online.cols() != target.cols())
    throw InvalidInput("extract_transformation_filter: shape mismatch");

  const Spectrum spec_p = eigh(correlation(online)).spectrum;
  const Spectrum spec_z = eigh(correlation(target)).spectrum;

  std::vector<std::pair<double, double>> pairs;
  for (Eigen::Index i = 0; i < spec_p.size(); ++i) {
    if (spec_p[i] <= spec_p.clamp_tol() || spec_z[i] <= spec_z.clamp_tol())
      continue;
    pairs.emplace_back(spec_p[i], std::sqrt(spec_z[i] / spec_p[i]));
  }
  if (pairs.size() < 2)
    throw DegenerateSpectrum(
        "extract_transformation_filter: fewer than two usable eigenvalues");
  std::sort(pairs.begin(), pairs.end());

  Eigen::VectorXd lam(static_cast<Eigen::Index>(pairs.size()));
  Eigen::VectorXd h(static_cast<Eigen::Index>(pairs.size()));
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    lam[static_cast<Eigen::Index>(i)] = pairs[i].first;
    h[static_cast<Eigen::Index>(i)] = pairs[i].second;
  }

  FilterKind kind;
  if (h.maxCoeff() - h.minCoeff() <= kMonoTol) {
    kind = FilterKind::Constant;
  } else {
    const double rho = spearman_rank_correlation(lam, h);
    if (rho < -0.5)
      kind = FilterKind::HighPass;
    else if (rho > 0.5)
      kind = FilterKind::LowPass;
    else
      kind = FilterKind::NonMonotone;
  }
  return {FilterClass{kind, lam}, std::move(pairs)};
}

namespace {

std::string to_lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return s;
}

double parse_double(const std::string& s, const std::string& what) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v))
    throw ConfigError("filter spec: bad " + what + " '" + s + "'");
  return v;
}

int parse_int(const std::string& s, const std::string& what) {
  int v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size())
    throw ConfigError("filter spec: bad " + what + " '" + s + "'");
  return v;
}

}  // namespace

FilterSpec parse_filter_spec(const std::string& text) {
  std::vector<std::string> parts;
  std::string cur;
  for (char c : text) {
    if (c == ':') {
      parts.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(c);
    }
  }
  parts.push_back(cur);
  const std::string name = to_lower(parts[0]);

  FilterSpec spec;
  spec.text = to_lower(text);

  const auto expect_parts = [&](std::size_t want) {
    if (parts.size() != want)
      throw ConfigError("filter spec '" + text + "': wrong argument count");
  };

  if (name == "id") {
    expect_parts(1);
    spec.scalar = identity_filter();
  } else if (name == "directpred") {
    expect_parts(1);
    spec.scalar = directpred_filter();
  } else if (name == "log") {
    expect_parts(1);
    spec.scalar = log_filter();
  } else if (name == "log1p") {
    expect_parts(1);
    spec.scalar = log1p_filter();
  } else if (name == "log1psq") {
    expect_parts(1);
    spec.scalar = log1p_sq_filter();
  } else if (name == "pow") {
    expect_parts(2);
    spec.scalar = power_filter(parse_double(parts[1], "exponent"));
  } else if (name == "sinkhorn") {
    expect_parts(3);
    spec.kind = FilterSpec::Kind::Sinkhorn;
    spec.sinkhorn_iters = parse_int(parts[1], "iteration count");
    spec.sinkhorn_eps = parse_double(parts[2], "eps");
    if (spec.sinkhorn_iters < 0)
      throw ConfigError("filter spec: sinkhorn iters must be >= 0");
    if (!(spec.sinkhorn_eps > 0.0))
      throw ConfigError("filter spec: sinkhorn eps must be > 0");
  } else if (name == "centersharp") {
    expect_parts(2);
    spec.kind = FilterSpec::Kind::CenterSharpen;
    spec.temperature = parse_double(parts[1], "temperature");
    if (!(spec.temperature > 0.0))
      throw ConfigError("filter spec: temperature must be > 0");
  } else {
    throw ConfigError("filter spec: unknown filter '" + text + "'");
  }
  return spec;
}

}  // namespace rdm
