#include <doctest.h>

#include <charconv>
#include <filesystem>

#include "rdm/config.hpp"
#include "rdm/io.hpp"
#include "rdm/rng.hpp"

using namespace rdm;

TEST_CASE("config defaults validate and round-trip") {
  ExperimentConfig c;
  CHECK_NOTHROW(validate_config(c));
  CHECK(config_from_json(config_to_json(c)) == c);

  c.kind = "filters";
  c.filter = "pow:-0.5";
  c.seed = 123456789012345ull;
  c.alpha = 0.25;
  c.stop_gradient = false;
  CHECK(config_from_json(config_to_json(c)) == c);
}

TEST_CASE("config parsing is strict") {
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"mystery", 1}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", "fast"}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"alpha", 0.0}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"kind", "mcmc"}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"record_stride", 0}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"filter", "band:1"}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json{{"predictor_mode", "other"}}),
                  ConfigError);
  CHECK_THROWS_AS(config_from_json(nlohmann::json::array()), ConfigError);
}

TEST_CASE("overrides") {
  ExperimentConfig c;
  apply_override(c, "alpha=0.2");
  CHECK(c.alpha == doctest::Approx(0.2));
  apply_override(c, "steps=10");
  CHECK(c.steps == 10);
  apply_override(c, "stop_gradient=false");
  CHECK(c.stop_gradient == false);
  apply_override(c, "filter=pow:-0.5");
  CHECK(c.filter == "pow:-0.5");
  CHECK_THROWS_AS(apply_override(c, "unknown=3"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "alpha=zero"), ConfigError);
  CHECK_THROWS_AS(apply_override(c, "noequals"), ConfigError);
}

TEST_CASE("float formatting survives a round trip") {
  RngStream rng(9, "fmt");
  for (int i = 0; i < 200; ++i) {
    const double v = std::exp(20.0 * (rng.uniform01() - 0.5)) *
                     (rng.uniform01() < 0.5 ? -1.0 : 1.0);
    const std::string s = format_float(v);
    double back = 0.0;
    std::from_chars(s.data(), s.data() + s.size(), back);
    CHECK(back == v);
  }
}

TEST_CASE("trajectory csv schema") {
  TrajectoryRecord rec;
  rec.top_count = 3;
  TrajectoryPoint pt;
  pt.step = 0;
  pt.loss = 1.5;
  pt.erank_online = 2.0;
  pt.erank_target = 3.0;
  pt.alignment = 0.75;
  pt.ev_online = Eigen::Vector3d(3, 2, 1);
  pt.ev_target = Eigen::Vector3d(6, 5, 4);
  rec.points.push_back(pt);

  const std::string csv = trajectory_csv(rec);
  const std::string header = csv.substr(0, csv.find('\n'));
  CHECK(header ==
        "step,loss,erank_online,erank_target,alignment,ev_online_1,"
        "ev_online_2,ev_online_3,ev_target_1,ev_target_2,ev_target_3");
  CHECK(csv.find("\n0,1.5,2,3,0.75,3,2,1,6,5,4\n") != std::string::npos);
}

TEST_CASE("spectrum and matrix csv") {
  const std::string s = spectrum_csv(Spectrum(Eigen::Vector2d(2, 1)));
  CHECK(s == "index,eigenvalue\n0,2\n1,1\n");

  Eigen::MatrixXd m(2, 2);
  m << 1, 2, 3, 4;
  CHECK(matrix_csv(m) == "1,2\n3,4\n");
}

TEST_CASE("text file round trip") {
  const std::string dir = "io_test_tmp";
  const std::string path = dir + "/nested/file.txt";
  write_text_file(path, "payload\n");
  CHECK(read_text_file(path) == "payload\n");
  std::filesystem::remove_all(dir);
  CHECK_THROWS_AS(read_text_file(path), InvalidInput);
}
