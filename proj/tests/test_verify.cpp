#include <doctest.h>

#include "rdm/verify.hpp"

using namespace rdm;

TEST_CASE("the property suite passes on a small budget") {
  VerifyOptions opt;
  opt.seed = 7;
  opt.instances = 60;
  const VerifyReport report = verify_all(opt);
  CHECK(report.pass());
  CHECK(report.properties.size() == 9);
  for (const auto& p : report.properties) {
    CAPTURE(p.name);
    CHECK(p.failures == 0);
    CHECK(p.instances == 60);
    CHECK(p.worst_margin > 0.0);
  }
}

TEST_CASE("one instance per property is honored") {
  VerifyOptions opt;
  opt.instances = 1;
  const VerifyReport report = verify_all(opt);
  for (const auto& p : report.properties) CHECK(p.instances == 1);
}

TEST_CASE("property subsets run alone") {
  VerifyOptions opt;
  opt.instances = 5;
  opt.only = {"centering_identity", "variance_decomposition"};
  const VerifyReport report = verify_all(opt);
  REQUIRE(report.properties.size() == 2);
  CHECK(report.properties[0].name == "centering_identity");
  CHECK(report.properties[1].name == "variance_decomposition");
}

TEST_CASE("a corrupted non-monotone filter is caught") {
  VerifyOptions opt;
  opt.seed = 11;
  opt.instances = 100;
  opt.inject_nonmonotone_filter = true;
  const VerifyReport report = verify_all(opt);
  CHECK_FALSE(report.pass());
  for (const auto& p : report.properties) {
    if (p.name == "rank_reduction_strict") CHECK(p.failures > 0);
  }
}

TEST_CASE("reports are deterministic") {
  VerifyOptions opt;
  opt.seed = 5;
  opt.instances = 25;
  const VerifyReport a = verify_all(opt);
  const VerifyReport b = verify_all(opt);
  CHECK(a.to_json().dump() == b.to_json().dump());
}
