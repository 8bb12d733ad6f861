#include <doctest.h>

#include <cmath>

#include "rdm/dynamics.hpp"
#include "rdm/spectral.hpp"
#include "rdm/synth.hpp"

using namespace rdm;

TEST_CASE("noiseless augmentation duplicates the pair") {
  const IsotropicAugModel model = random_isotropic_model(4, 3, 0.0, 9);
  RngStream rng(model.seed, "data");
  const auto [x, xp] = sample_pair(model, rng);
  CHECK(x == xp);
}

TEST_CASE("closed-form correlations of the linear setting") {
  SUBCASE("identity encoder, unit noise") {
    IsotropicAugModel model{2, 2, 1.0, Eigen::MatrixXd::Identity(2, 2), 0};
    const CorrelationBundle b = exact_correlations_linear(model);
    CHECK((b.c_z.matrix() - 2.0 * Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
    CHECK((b.c_plus.matrix() - Eigen::MatrixXd::Identity(2, 2))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }
  SUBCASE("zero noise collapses the gap") {
    IsotropicAugModel model{3, 2, 0.0, Eigen::MatrixXd::Random(2, 3), 1};
    const CorrelationBundle b = exact_correlations_linear(model);
    CHECK(b.c_z.matrix() == b.c_plus.matrix());
  }
  SUBCASE("diagonal encoder") {
    IsotropicAugModel model{2, 2, 0.5,
                            Eigen::Vector2d(2.0, 1.0).asDiagonal(), 2};
    const CorrelationBundle b = exact_correlations_linear(model);
    CHECK(b.c_z.matrix()(0, 0) == doctest::Approx(5.0));
    CHECK(b.c_z.matrix()(1, 1) == doctest::Approx(1.25));
    CHECK(b.c_plus.matrix()(0, 0) == doctest::Approx(4.0));
    CHECK(b.c_plus.matrix()(1, 1) == doctest::Approx(1.0));
  }
}

TEST_CASE("finite population enumeration") {
  SUBCASE("single natural with two equiprobable augmentations") {
    FinitePopulation pop;
    NaturalPoint nat;
    nat.prob = 1.0;
    nat.augmentations.push_back({0.5, Eigen::Vector2d(1, 0)});
    nat.augmentations.push_back({0.5, Eigen::Vector2d(0, 1)});
    pop.naturals.push_back(nat);

    const CorrelationBundle b = empirical_correlations(pop);
    CHECK((b.c_plus.matrix().array() - 0.25).abs().maxCoeff() < 1e-15);
    Eigen::MatrixXd want_cz = Eigen::Vector2d(0.5, 0.5).asDiagonal();
    CHECK((b.c_z.matrix() - want_cz).cwiseAbs().maxCoeff() < 1e-15);
    CHECK((b.v_cond.matrix() - (want_cz - b.c_plus.matrix()))
              .cwiseAbs()
              .maxCoeff() < 1e-15);
  }
  SUBCASE("deterministic augmentation means zero conditional variance") {
    RngStream rng(1, "pop");
    const FinitePopulation pop = random_population(4, 1, 3, rng);
    const CorrelationBundle b = empirical_correlations(pop);
    CHECK(b.v_cond.matrix().cwiseAbs().maxCoeff() < 1e-15);
    CHECK((b.c_z.matrix() - b.c_plus.matrix()).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("identities on random populations") {
    RngStream rng(2, "pop");
    for (int t = 0; t < 50; ++t) {
      const FinitePopulation pop = random_population(5, 3, 4, rng);
      const CorrelationBundle b = empirical_correlations(pop);
      CHECK((b.c_plus.matrix() - b.c_bar.matrix()).cwiseAbs().maxCoeff() <
            1e-12);
      CHECK((b.c_z.matrix() - b.c_bar.matrix() - b.v_cond.matrix())
                .cwiseAbs()
                .maxCoeff() < 1e-12);
      // Conditional covariance stays PSD to clamp tolerance.
      CHECK_NOTHROW(eigh(b.v_cond));
    }
  }
  SUBCASE("bad probabilities are rejected") {
    FinitePopulation pop;
    NaturalPoint nat;
    nat.prob = 0.7;
    nat.augmentations.push_back({1.0, Eigen::Vector2d(1, 0)});
    pop.naturals.push_back(nat);
    CHECK_THROWS_AS(empirical_correlations(pop), InvalidInput);
  }
}

TEST_CASE("optimal predictor spectrum stays in [0,1] on exact bundles") {
  RngStream rng(3, "bundle");
  for (int t = 0; t < 25; ++t) {
    const FinitePopulation pop = random_population(5, 3, 3, rng);
    const CorrelationBundle b = empirical_correlations(pop);
    const Spectrum sz = eigh(b.c_z).spectrum;
    if (sz[sz.size() - 1] <= 1e-8) continue;  // singular instances skipped
    const Eigen::MatrixXd w = b.c_plus.matrix() * b.c_z.matrix().inverse();
    const Eigen::VectorXcd ev = w.eigenvalues();
    for (Eigen::Index i = 0; i < ev.size(); ++i) {
      CHECK(ev[i].real() >= -1e-9);
      CHECK(ev[i].real() <= 1.0 + 1e-9);
      CHECK(std::abs(ev[i].imag()) < 1e-9);
    }
  }
}

TEST_CASE("population JSON loading") {
  SUBCASE("well-formed document") {
    const FinitePopulation pop = load_population_json(R"({
      "naturals": [
        {"prob": 0.5, "augmentations": [
          {"prob": 1.0, "feature": [1.0, 0.0]}
        ]},
        {"prob": 0.5, "augmentations": [
          {"prob": 0.25, "feature": [0.0, 1.0]},
          {"prob": 0.75, "feature": [1.0, 1.0]}
        ]}
      ]
    })");
    CHECK(pop.naturals.size() == 2);
    CHECK(pop.feature_dim() == 2);
    CHECK(pop.naturals[1].augmentations[1].prob == doctest::Approx(0.75));
  }
  SUBCASE("omitted probabilities default to uniform") {
    const FinitePopulation pop = load_population_json(R"({
      "naturals": [
        {"augmentations": [{"feature": [1.0]}, {"feature": [2.0]}]},
        {"augmentations": [{"feature": [3.0]}]}
      ]
    })");
    CHECK(pop.naturals[0].prob == doctest::Approx(0.5));
    CHECK(pop.naturals[0].augmentations[0].prob == doctest::Approx(0.5));
  }
  SUBCASE("strict validation") {
    CHECK_THROWS_AS(load_population_json("{}"), InvalidInput);
    CHECK_THROWS_AS(load_population_json(R"({"naturals": [], "x": 1})"),
                    InvalidInput);
    CHECK_THROWS_AS(load_population_json(R"({
      "naturals": [{"prob": 1.0, "augmentations": [
        {"prob": 0.9, "feature": [1.0]}
      ]}]
    })"),
                    InvalidInput);
    CHECK_THROWS_AS(load_population_json(R"({
      "naturals": [{"prob": 1.0, "augmentations": [
        {"prob": 1.0, "feature": [1.0], "extra": 2}
      ]}]
    })"),
                    InvalidInput);
    CHECK_THROWS_AS(load_population_json("not json"), InvalidInput);
  }
}

TEST_CASE("monte carlo estimation") {
  SUBCASE("large samples approach the exact bundle within one percent") {
    const IsotropicAugModel model{2, 2, 1.0, Eigen::MatrixXd::Identity(2, 2),
                                  12345};
    const CorrelationBundle exact = exact_correlations_linear(model);
    const CorrelationBundle mc = monte_carlo_correlations(model, 1000000);
    const double rel_z = (mc.c_z.matrix() - exact.c_z.matrix()).norm() /
                         exact.c_z.matrix().norm();
    const double rel_plus =
        (mc.c_plus.matrix() - exact.c_plus.matrix()).norm() /
        exact.c_plus.matrix().norm();
    CHECK(rel_z < 0.01);
    CHECK(rel_plus < 0.01);
    // The variance-decomposition identities hold within Monte-Carlo error.
    CHECK((mc.c_plus.matrix() - mc.c_bar.matrix()).cwiseAbs().maxCoeff() <
          0.01);
    CHECK((mc.c_z.matrix() - mc.c_bar.matrix() - mc.v_cond.matrix())
              .cwiseAbs()
              .maxCoeff() < 0.01);
    REQUIRE(mc.mc_error.has_value());
    CHECK(mc.mc_error->batches == 10);
    CHECK(mc.mc_error->se_z.maxCoeff() < 0.02);
  }
  SUBCASE("single sample reproduces that pair's outer products") {
    const IsotropicAugModel model = random_isotropic_model(3, 2, 0.7, 77);
    const CorrelationBundle mc = monte_carlo_correlations(model, 1);
    RngStream rng(model.seed, "mc-pairs", 0);
    const PairSample s = sample_triple(model, rng);
    const Eigen::VectorXd z = model.encoder * s.x;
    const Eigen::VectorXd zp = model.encoder * s.x_plus;
    const Eigen::MatrixXd want_z =
        0.5 * (z * z.transpose() + zp * zp.transpose());
    CHECK((mc.c_z.matrix() - want_z).cwiseAbs().maxCoeff() < 1e-15);
  }
  SUBCASE("zero noise makes both estimates identical at any count") {
    const IsotropicAugModel model = random_isotropic_model(3, 2, 0.0, 5);
    const CorrelationBundle mc = monte_carlo_correlations(model, 333);
    CHECK(mc.c_z.matrix() == mc.c_plus.matrix());
  }
  SUBCASE("parallel equals serial bitwise") {
    const IsotropicAugModel model = random_isotropic_model(4, 3, 0.5, 42);
    const CorrelationBundle a = monte_carlo_correlations(model, 5000);
    const CorrelationBundle b = monte_carlo_correlations_serial(model, 5000);
    CHECK(a.c_z.matrix() == b.c_z.matrix());
    CHECK(a.c_plus.matrix() == b.c_plus.matrix());
    CHECK(a.c_bar.matrix() == b.c_bar.matrix());
    CHECK(a.v_cond.matrix() == b.v_cond.matrix());
  }
  CHECK_THROWS_AS(
      monte_carlo_correlations(random_isotropic_model(2, 2, 0.1, 1), 0),
      InvalidInput);
}

TEST_CASE("ambient second moments match the augmentation model") {
  // E[x x^T] = (1 + sigma^2) I and E[x x+^T] = I for independent noise.
  const double sigma = 0.8;
  const IsotropicAugModel model{3, 3, sigma, Eigen::MatrixXd::Identity(3, 3),
                                2024};
  const CorrelationBundle mc = monte_carlo_correlations(model, 400000);
  const Eigen::MatrixXd want_z =
      (1.0 + sigma * sigma) * Eigen::MatrixXd::Identity(3, 3);
  CHECK((mc.c_z.matrix() - want_z).norm() / want_z.norm() < 0.01);
  CHECK((mc.c_plus.matrix() - Eigen::MatrixXd::Identity(3, 3)).norm() /
            std::sqrt(3.0) <
        0.01);
}
