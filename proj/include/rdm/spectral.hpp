#pragma once

#include <utility>
#include <vector>

#include "rdm/types.hpp"

namespace rdm {

// Dense symmetric spectral analysis: correlation estimation, ordered
// eigendecomposition, effective rank, eigenspace alignment, and empirical
// filter extraction from paired spectra.

// Uncentered second moment (1/n) sum_x f(x) f(x)^T.
CorrelationEstimate correlation(const FeatureBatch& batch);

// Symmetrized positive-pair correlation (1/2n) sum_i (a_i b_i^T + b_i a_i^T).
// Rows of the two batches are positive pairs.
CorrelationEstimate cross_correlation(const FeatureBatch& a,
                                      const FeatureBatch& b);

struct EigenDecomposition {
  Spectrum spectrum;
  EigenBasis basis;
};

// Eigendecomposition with descending eigenvalues and a deterministic basis:
// each eigenvector's largest-magnitude component is made positive (ties
// broken by lowest index), and eigenvectors of near-equal eigenvalues
// (gap < 1e-9) are ordered lexicographically. clamp_tol bounds how negative
// an eigenvalue may be before the input stops being a correlation matrix;
// sampled cross-correlations may need a looser value than the default.
EigenDecomposition eigh(const CorrelationEstimate& c,
                        double clamp_tol = kClampTol);

// exp of the Shannon entropy of the normalized eigenvalues; in [1, k] and
// invariant to uniform scaling of the spectrum.
double effective_rank(const Spectrum& s);

inline constexpr double kDefaultAlignmentCoverage = 0.9999;

// Mean cosine between the top eigenvectors u_i of c_z and c_p * u_i, where
// the count m is the smallest prefix of c_z's spectrum whose mass reaches
// coverage * trace. Directions annihilated by c_p contribute 0 and record a
// warning.
double eigenspace_alignment(const CorrelationEstimate& c_p,
                            const CorrelationEstimate& c_z,
                            double coverage = kDefaultAlignmentCoverage,
                            WarningLog* warnings = nullptr);

// Pointwise online filter implied by two rank-paired spectra:
// g_i = sqrt(lam_p_i / lam_z_i), returned sorted by lam_z ascending.
// Indices with lam_z at or below the clamp tolerance are omitted.
std::vector<std::pair<double, double>> empirical_filter(const Spectrum& spec_p,
                                                        const Spectrum& spec_z);

// Spearman rank correlation with average ranks for ties.
double spearman_rank_correlation(const Eigen::VectorXd& a,
                                 const Eigen::VectorXd& b);

}  // namespace rdm
