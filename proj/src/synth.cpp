#include "rdm/synth.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

namespace rdm {

namespace {

constexpr double kProbTol = 1e-12;
constexpr double kBundleTol = 1e-10;
constexpr Eigen::Index kMcBlock = 1024;

Eigen::VectorXd draw_normal(Eigen::Index n, RngStream& rng) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v[i] = rng.normal();
  return v;
}

}  // namespace

IsotropicAugModel random_isotropic_model(Eigen::Index d, Eigen::Index k,
                                         double aug_std, std::uint64_t seed) {
  if (d < 1 || k < 1)
    throw InvalidInput("random_isotropic_model: d and k must be >= 1");
  if (aug_std < 0.0)
    throw InvalidInput("random_isotropic_model: aug_std must be >= 0");
  RngStream rng(seed, "init");
  Eigen::MatrixXd w(k, d);
  const double scale = 1.0 / std::sqrt(static_cast<double>(d));
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = 0; j < d; ++j) w(i, j) = scale * rng.normal();
  return IsotropicAugModel{d, k, aug_std, std::move(w), seed};
}

PairSample sample_triple(const IsotropicAugModel& model, RngStream& rng) {
  PairSample s;
  s.natural = draw_normal(model.d, rng);
  s.x = s.natural + model.aug_std * draw_normal(model.d, rng);
  s.x_plus = s.natural + model.aug_std * draw_normal(model.d, rng);
  return s;
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> sample_pair(
    const IsotropicAugModel& model, RngStream& rng) {
  PairSample s = sample_triple(model, rng);
  return {std::move(s.x), std::move(s.x_plus)};
}

Eigen::Index FinitePopulation::feature_dim() const {
  if (naturals.empty() || naturals.front().augmentations.empty()) return 0;
  return naturals.front().augmentations.front().feature.size();
}

void FinitePopulation::validate() const {
  if (naturals.empty())
    throw InvalidInput("FinitePopulation: no natural points");
  const Eigen::Index k = feature_dim();
  if (k < 1) throw InvalidInput("FinitePopulation: empty feature vectors");

  double total = 0.0;
  for (const auto& nat : naturals) {
    if (nat.prob < 0.0)
      throw InvalidInput("FinitePopulation: negative natural probability");
    total += nat.prob;
    if (nat.augmentations.empty())
      throw InvalidInput("FinitePopulation: natural point without augmentations");
    double cond = 0.0;
    for (const auto& aug : nat.augmentations) {
      if (aug.prob < 0.0)
        throw InvalidInput("FinitePopulation: negative augmentation probability");
      if (aug.feature.size() != k)
        throw InvalidInput("FinitePopulation: inconsistent feature dimension");
      if (!aug.feature.allFinite())
        throw InvalidInput("FinitePopulation: non-finite feature");
      cond += aug.prob;
    }
    if (std::abs(cond - 1.0) > kProbTol)
      throw InvalidInput("FinitePopulation: conditional probabilities sum to " +
                         std::to_string(cond));
  }
  if (std::abs(total - 1.0) > kProbTol)
    throw InvalidInput("FinitePopulation: natural probabilities sum to " +
                       std::to_string(total));
}

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& obj, std::initializer_list<const char*> allowed,
                         const std::string& where) {
  for (const auto& item : obj.items()) {
    bool ok = false;
    for (const char* key : allowed)
      if (item.key() == key) ok = true;
    if (!ok)
      throw InvalidInput("population: unknown key '" + item.key() + "' in " +
                         where);
  }
}

// "prob" must be present on all entries of a list or on none.
template <typename List>
bool probs_given(const List& list, const std::string& where) {
  std::size_t with = 0;
  for (const auto& e : list)
    if (e.contains("prob")) ++with;
  if (with != 0 && with != list.size())
    throw InvalidInput("population: mixed explicit/implicit prob in " + where);
  return with != 0;
}

}  // namespace

FinitePopulation load_population_json(const std::string& json_text) {
  json doc;
  try {
    doc = json::parse(json_text);
  } catch (const json::parse_error& e) {
    throw InvalidInput(std::string("population: JSON parse error: ") + e.what());
  }
  if (!doc.is_object()) throw InvalidInput("population: root must be an object");
  reject_unknown_keys(doc, {"naturals"}, "root");
  if (!doc.contains("naturals") || !doc["naturals"].is_array() ||
      doc["naturals"].empty())
    throw InvalidInput("population: 'naturals' must be a non-empty array");

  const auto& nats = doc["naturals"];
  const bool nat_probs = probs_given(nats, "naturals");

  FinitePopulation pop;
  for (const auto& nat : nats) {
    if (!nat.is_object())
      throw InvalidInput("population: natural entries must be objects");
    reject_unknown_keys(nat, {"prob", "augmentations"}, "natural");
    if (!nat.contains("augmentations") || !nat["augmentations"].is_array() ||
        nat["augmentations"].empty())
      throw InvalidInput("population: 'augmentations' must be a non-empty array");

    NaturalPoint np;
    np.prob = nat_probs ? nat["prob"].get<double>()
                        : 1.0 / static_cast<double>(nats.size());

    const auto& augs = nat["augmentations"];
    const bool aug_probs = probs_given(augs, "augmentations");
    for (const auto& aug : augs) {
      if (!aug.is_object())
        throw InvalidInput("population: augmentation entries must be objects");
      reject_unknown_keys(aug, {"prob", "feature"}, "augmentation");
      if (!aug.contains("feature") || !aug["feature"].is_array() ||
          aug["feature"].empty())
        throw InvalidInput("population: 'feature' must be a non-empty array");
      AugmentedPoint ap;
      ap.prob = aug_probs ? aug["prob"].get<double>()
                          : 1.0 / static_cast<double>(augs.size());
      ap.feature.resize(static_cast<Eigen::Index>(aug["feature"].size()));
      Eigen::Index i = 0;
      for (const auto& v : aug["feature"]) {
        if (!v.is_number())
          throw InvalidInput("population: feature entries must be numbers");
        ap.feature[i++] = v.get<double>();
      }
      np.augmentations.push_back(std::move(ap));
    }
    pop.naturals.push_back(std::move(np));
  }
  pop.validate();
  return pop;
}

FinitePopulation load_population_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw InvalidInput("population: cannot open '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return load_population_json(buf.str());
}

FinitePopulation random_population(Eigen::Index n_naturals,
                                   Eigen::Index max_augmentations,
                                   Eigen::Index k, RngStream& rng) {
  if (n_naturals < 1 || max_augmentations < 1 || k < 1)
    throw InvalidInput("random_population: sizes must be >= 1");

  FinitePopulation pop;
  std::vector<double> nat_weights(static_cast<std::size_t>(n_naturals));
  double nat_total = 0.0;
  for (auto& w : nat_weights) {
    w = 0.1 + rng.uniform01();
    nat_total += w;
  }

  for (Eigen::Index j = 0; j < n_naturals; ++j) {
    NaturalPoint np;
    np.prob = nat_weights[static_cast<std::size_t>(j)] / nat_total;
    const Eigen::Index m =
        1 + static_cast<Eigen::Index>(rng.uniform_index(
                static_cast<std::uint64_t>(max_augmentations)));
    std::vector<double> weights(static_cast<std::size_t>(m));
    double total = 0.0;
    for (auto& w : weights) {
      w = 0.1 + rng.uniform01();
      total += w;
    }
    for (Eigen::Index a = 0; a < m; ++a) {
      AugmentedPoint ap;
      ap.prob = weights[static_cast<std::size_t>(a)] / total;
      ap.feature = draw_normal(k, rng);
      np.augmentations.push_back(std::move(ap));
    }
    pop.naturals.push_back(std::move(np));
  }
  pop.validate();
  return pop;
}

CorrelationBundle CorrelationBundle::exact(Eigen::MatrixXd c_z,
                                           Eigen::MatrixXd c_plus,
                                           Eigen::MatrixXd c_bar,
                                           Eigen::MatrixXd v_cond) {
  CorrelationBundle b{CorrelationEstimate(std::move(c_z), 0),
                      CorrelationEstimate(std::move(c_plus), 0),
                      CorrelationEstimate(std::move(c_bar), 0),
                      CorrelationEstimate(std::move(v_cond), 0),
                      std::nullopt};
  const double gap1 =
      (b.c_plus.matrix() - b.c_bar.matrix()).cwiseAbs().maxCoeff();
  const double gap2 = (b.c_z.matrix() - b.c_bar.matrix() - b.v_cond.matrix())
                          .cwiseAbs()
                          .maxCoeff();
  if (gap1 > kBundleTol || gap2 > kBundleTol)
    throw InvalidInput("CorrelationBundle: exact bundle violates the "
                       "variance decomposition identities");
  return b;
}

CorrelationBundle exact_correlations_linear(const IsotropicAugModel& model) {
  const Eigen::MatrixXd gram = model.encoder * model.encoder.transpose();
  const double s2 = model.aug_std * model.aug_std;
  return CorrelationBundle::exact((1.0 + s2) * gram, gram, gram, s2 * gram);
}

CorrelationBundle empirical_correlations(const FinitePopulation& pop) {
  pop.validate();
  const Eigen::Index k = pop.feature_dim();
  Eigen::MatrixXd c_z = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd c_plus = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd c_bar = Eigen::MatrixXd::Zero(k, k);
  Eigen::MatrixXd v_cond = Eigen::MatrixXd::Zero(k, k);

  for (const auto& nat : pop.naturals) {
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(k);
    for (const auto& aug : nat.augmentations) mean += aug.prob * aug.feature;

    for (const auto& aug : nat.augmentations) {
      c_z += nat.prob * aug.prob * aug.feature * aug.feature.transpose();
      const Eigen::VectorXd centered = aug.feature - mean;
      v_cond += nat.prob * aug.prob * centered * centered.transpose();
      // Positive-pair correlation by direct double enumeration of the
      // conditional; the mean-outer-product route below is the identity
      // being checked, not the definition.
      for (const auto& aug2 : nat.augmentations)
        c_plus += nat.prob * aug.prob * aug2.prob * aug.feature *
                  aug2.feature.transpose();
    }
    c_bar += nat.prob * mean * mean.transpose();
  }

  return CorrelationBundle::exact(std::move(c_z), std::move(c_plus),
                                  std::move(c_bar), std::move(v_cond));
}

namespace {

struct McPartial {
  Eigen::MatrixXd sum_z;     // z z^T + z+ z+^T
  Eigen::MatrixXd sum_plus;  // z z+^T + z+ z^T
  Eigen::MatrixXd sum_bar;   // zbar zbar^T
  Eigen::MatrixXd sum_cond;  // (z - zbar)(.)^T over both pair members
};

McPartial mc_block(const IsotropicAugModel& model, std::int64_t block_index,
                   Eigen::Index count) {
  const Eigen::Index k = model.k;
  McPartial p{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k),
              Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k)};
  RngStream rng(model.seed, "mc-pairs",
                static_cast<std::uint64_t>(block_index));
  for (Eigen::Index i = 0; i < count; ++i) {
    const PairSample s = sample_triple(model, rng);
    const Eigen::VectorXd z = model.encoder * s.x;
    const Eigen::VectorXd zp = model.encoder * s.x_plus;
    const Eigen::VectorXd zbar = model.encoder * s.natural;
    p.sum_z += z * z.transpose() + zp * zp.transpose();
    p.sum_plus += z * zp.transpose() + zp * z.transpose();
    p.sum_bar += zbar * zbar.transpose();
    const Eigen::VectorXd dz = z - zbar;
    const Eigen::VectorXd dzp = zp - zbar;
    p.sum_cond += dz * dz.transpose() + dzp * dzp.transpose();
  }
  return p;
}

CorrelationBundle mc_reduce(const IsotropicAugModel& model,
                            std::int64_t samples, bool parallel) {
  if (samples < 1)
    throw InvalidInput("monte_carlo_correlations: samples must be >= 1");
  const Eigen::Index k = model.k;
  const std::int64_t nblocks = (samples + kMcBlock - 1) / kMcBlock;
  std::vector<McPartial> partials(static_cast<std::size_t>(nblocks));

  if (parallel) {
#pragma omp parallel for schedule(static)
    for (std::int64_t b = 0; b < nblocks; ++b) {
      const std::int64_t lo = b * kMcBlock;
      const Eigen::Index len =
          static_cast<Eigen::Index>(std::min<std::int64_t>(kMcBlock, samples - lo));
      partials[static_cast<std::size_t>(b)] = mc_block(model, b, len);
    }
  } else {
    for (std::int64_t b = 0; b < nblocks; ++b) {
      const std::int64_t lo = b * kMcBlock;
      const Eigen::Index len =
          static_cast<Eigen::Index>(std::min<std::int64_t>(kMcBlock, samples - lo));
      partials[static_cast<std::size_t>(b)] = mc_block(model, b, len);
    }
  }

  McPartial total{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k),
                  Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k)};
  for (const auto& p : partials) {
    total.sum_z += p.sum_z;
    total.sum_plus += p.sum_plus;
    total.sum_bar += p.sum_bar;
    total.sum_cond += p.sum_cond;
  }

  const double n = static_cast<double>(samples);
  Eigen::MatrixXd m_z = total.sum_z / (2.0 * n);
  Eigen::MatrixXd m_plus = total.sum_plus / (2.0 * n);
  Eigen::MatrixXd m_bar = total.sum_bar / n;
  Eigen::MatrixXd m_cond = total.sum_cond / (2.0 * n);

  // Standard errors by contiguous batch means over block groups.
  const int groups = static_cast<int>(std::min<std::int64_t>(10, nblocks));
  MonteCarloError err{Eigen::MatrixXd::Zero(k, k), Eigen::MatrixXd::Zero(k, k),
                      groups};
  if (groups > 1) {
    std::vector<Eigen::MatrixXd> gz, gp;
    for (int g = 0; g < groups; ++g) {
      const std::int64_t b0 = g * nblocks / groups;
      const std::int64_t b1 = (g + 1) * nblocks / groups;
      Eigen::MatrixXd sz = Eigen::MatrixXd::Zero(k, k);
      Eigen::MatrixXd sp = Eigen::MatrixXd::Zero(k, k);
      double count = 0.0;
      for (std::int64_t b = b0; b < b1; ++b) {
        sz += partials[static_cast<std::size_t>(b)].sum_z;
        sp += partials[static_cast<std::size_t>(b)].sum_plus;
        count += static_cast<double>(
            std::min<std::int64_t>(kMcBlock, samples - b * kMcBlock));
      }
      gz.push_back(sz / (2.0 * count));
      gp.push_back(sp / (2.0 * count));
    }
    Eigen::MatrixXd mean_z = Eigen::MatrixXd::Zero(k, k);
    Eigen::MatrixXd mean_p = Eigen::MatrixXd::Zero(k, k);
    for (int g = 0; g < groups; ++g) {
      mean_z += gz[static_cast<std::size_t>(g)];
      mean_p += gp[static_cast<std::size_t>(g)];
    }
    mean_z /= groups;
    mean_p /= groups;
    for (int g = 0; g < groups; ++g) {
      err.se_z.array() +=
          (gz[static_cast<std::size_t>(g)] - mean_z).array().square();
      err.se_plus.array() +=
          (gp[static_cast<std::size_t>(g)] - mean_p).array().square();
    }
    err.se_z = (err.se_z / (groups - 1)).array().sqrt() /
               std::sqrt(static_cast<double>(groups));
    err.se_plus = (err.se_plus / (groups - 1)).array().sqrt() /
                  std::sqrt(static_cast<double>(groups));
  }

  CorrelationBundle bundle{
      CorrelationEstimate(0.5 * (m_z + m_z.transpose()), samples),
      CorrelationEstimate(0.5 * (m_plus + m_plus.transpose()), samples),
      CorrelationEstimate(0.5 * (m_bar + m_bar.transpose()), samples),
      CorrelationEstimate(0.5 * (m_cond + m_cond.transpose()), samples),
      std::move(err)};
  return bundle;
}

}  // namespace

CorrelationBundle monte_carlo_correlations(const IsotropicAugModel& model,
                                           std::int64_t samples) {
  return mc_reduce(model, samples, /*parallel=*/true);
}

CorrelationBundle monte_carlo_correlations_serial(
    const IsotropicAugModel& model, std::int64_t samples) {
  return mc_reduce(model, samples, /*parallel=*/false);
}

}  // namespace rdm
