#include "rdm/spectral.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "rdm/kernels.hpp"

namespace rdm {

namespace {

constexpr double kTieGap = 1e-9;

// Flip sign so the largest-magnitude component is positive; ties broken by
// lowest index (strict > keeps the first maximum).
void fix_sign(Eigen::Ref<Eigen::VectorXd> v) {
  Eigen::Index arg = 0;
  double best = std::abs(v[0]);
  for (Eigen::Index i = 1; i < v.size(); ++i) {
    if (std::abs(v[i]) > best) {
      best = std::abs(v[i]);
      arg = i;
    }
  }
  if (v[arg] < 0.0) v = -v;
}

bool lex_less(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    if (a[i] < b[i]) return true;
    if (a[i] > b[i]) return false;
  }
  return false;
}

}  // namespace

CorrelationEstimate correlation(const FeatureBatch& batch) {
  return CorrelationEstimate(kernels::mean_outer(batch.matrix()),
                             batch.rows());
}

CorrelationEstimate cross_correlation(const FeatureBatch& a,
                                      const FeatureBatch& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols())
    throw InvalidInput("cross_correlation: shape mismatch");
  const Eigen::MatrixXd m = kernels::mean_cross(a.matrix(), b.matrix());
  return CorrelationEstimate(0.5 * (m + m.transpose()), a.rows());
}

EigenDecomposition eigh(const CorrelationEstimate& c, double clamp_tol) {
  const Eigen::Index k = c.size();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(c.matrix());
  if (solver.info() != Eigen::Success)
    throw InvalidInput("eigh: eigendecomposition failed");

  // Solver returns ascending order; reverse to descending.
  Eigen::VectorXd values(k);
  Eigen::MatrixXd vectors(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    values[i] = solver.eigenvalues()[k - 1 - i];
    vectors.col(i) = solver.eigenvectors().col(k - 1 - i);
  }

  for (Eigen::Index i = 0; i < k; ++i) fix_sign(vectors.col(i));

  // Within clusters of near-equal eigenvalues, order the sign-fixed vectors
  // lexicographically. Eigenvalues keep their descending order; pairings
  // inside a cluster differ by less than the tie gap.
  Eigen::Index lo = 0;
  while (lo < k) {
    Eigen::Index hi = lo + 1;
    while (hi < k && values[hi - 1] - values[hi] < kTieGap) ++hi;
    if (hi - lo > 1) {
      std::vector<Eigen::Index> order(static_cast<std::size_t>(hi - lo));
      std::iota(order.begin(), order.end(), lo);
      std::sort(order.begin(), order.end(),
                [&](Eigen::Index a, Eigen::Index b) {
                  return lex_less(vectors.col(a), vectors.col(b));
                });
      Eigen::MatrixXd cluster(k, hi - lo);
      for (Eigen::Index j = 0; j < hi - lo; ++j)
        cluster.col(j) = vectors.col(order[static_cast<std::size_t>(j)]);
      vectors.middleCols(lo, hi - lo) = cluster;
    }
    lo = hi;
  }

  return EigenDecomposition{Spectrum(std::move(values), clamp_tol),
                            EigenBasis(std::move(vectors))};
}

double effective_rank(const Spectrum& s) {
  const double total = s.sum();
  if (total <= 0.0)
    throw DegenerateSpectrum("effective_rank: spectrum sums to zero");
  double entropy = 0.0;
  for (Eigen::Index i = 0; i < s.size(); ++i) {
    const double q = s[i] / total;
    if (q > 0.0) entropy -= q * std::log(q);
  }
  return std::exp(entropy);
}

double eigenspace_alignment(const CorrelationEstimate& c_p,
                            const CorrelationEstimate& c_z, double coverage,
                            WarningLog* warnings) {
  if (c_p.size() != c_z.size())
    throw InvalidInput("eigenspace_alignment: size mismatch");
  if (!(coverage > 0.0 && coverage <= 1.0))
    throw InvalidInput("eigenspace_alignment: coverage must be in (0,1]");

  const EigenDecomposition dz = eigh(c_z);
  const double total = dz.spectrum.sum();
  if (total <= 0.0)
    throw DegenerateSpectrum("eigenspace_alignment: target spectrum is zero");

  Eigen::Index m = dz.spectrum.size();
  double mass = 0.0;
  for (Eigen::Index i = 0; i < dz.spectrum.size(); ++i) {
    mass += dz.spectrum[i];
    if (mass >= coverage * total) {
      m = i + 1;
      break;
    }
  }

  double acc = 0.0;
  for (Eigen::Index i = 0; i < m; ++i) {
    const Eigen::VectorXd u = dz.basis.column(i);
    const Eigen::VectorXd pu = c_p.matrix() * u;
    const double norm = pu.norm();
    if (norm == 0.0) {
      warn(warnings, "eigenspace_alignment: direction " + std::to_string(i) +
                         " annihilated by c_p");
      continue;
    }
    acc += u.dot(pu) / norm;
  }
  return acc / static_cast<double>(m);
}

std::vector<std::pair<double, double>> empirical_filter(
    const Spectrum& spec_p, const Spectrum& spec_z) {
  if (spec_p.size() != spec_z.size())
    throw InvalidInput("empirical_filter: length mismatch");
  std::vector<std::pair<double, double>> pairs;
  pairs.reserve(static_cast<std::size_t>(spec_z.size()));
  for (Eigen::Index i = 0; i < spec_z.size(); ++i) {
    if (spec_z[i] <= spec_z.clamp_tol()) continue;
    pairs.emplace_back(spec_z[i], std::sqrt(spec_p[i] / spec_z[i]));
  }
  std::sort(pairs.begin(), pairs.end());
  return pairs;
}

double spearman_rank_correlation(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b) {
  if (a.size() != b.size() || a.size() < 2)
    throw InvalidInput("spearman: need two same-length vectors of size >= 2");

  const auto ranks = [](const Eigen::VectorXd& v) {
    const Eigen::Index n = v.size();
    std::vector<Eigen::Index> order(static_cast<std::size_t>(n));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](Eigen::Index i, Eigen::Index j) { return v[i] < v[j]; });
    Eigen::VectorXd r(n);
    Eigen::Index i = 0;
    while (i < n) {
      Eigen::Index j = i + 1;
      while (j < n && v[order[static_cast<std::size_t>(j)]] ==
                          v[order[static_cast<std::size_t>(i)]])
        ++j;
      const double avg = 0.5 * static_cast<double>(i + j - 1);
      for (Eigen::Index t = i; t < j; ++t)
        r[order[static_cast<std::size_t>(t)]] = avg;
      i = j;
    }
    return r;
  };

  const Eigen::VectorXd ra = ranks(a);
  const Eigen::VectorXd rb = ranks(b);
  const Eigen::VectorXd da = ra.array() - ra.mean();
  const Eigen::VectorXd db = rb.array() - rb.mean();
  const double denom = std::sqrt(da.squaredNorm() * db.squaredNorm());
  if (denom == 0.0) return 0.0;  // one side constant: no trend
  return da.dot(db) / denom;
}

}  // namespace rdm
