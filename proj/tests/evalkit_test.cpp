#include <cmath>
#include <vector>

#include "doctest.h"
#include "gp3/evalkit.hpp"
#include "gp3/rng.hpp"

using namespace gp3;

namespace {

std::vector<double> uniform_fixture(int bins) {
  std::vector<double> d(bins);
  for (int j = 0; j < bins; ++j) d[j] = -1.0 + 2.0 * (j + 0.5) / bins;
  return d;
}

}  // namespace

TEST_CASE("histogram counts and entropy basics") {
  auto h = DepthHistogram::build({-1.0, -1.0, 1.0, 1.0}, 2);
  CHECK(h.counts[0] == 2);
  CHECK(h.counts[1] == 2);
  CHECK(h.total == 4);
  CHECK(h.entropy() == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  // Out-of-range values clamp into the edge bins.
  auto hc = DepthHistogram::build({-5.0, 5.0}, 4);
  CHECK(hc.counts[0] == 1);
  CHECK(hc.counts[3] == 1);
  CHECK_THROWS_AS(DepthHistogram::build({}, 4), Error);
  CHECK_THROWS_AS(DepthHistogram::build({0.0}, 1), Error);
}

TEST_CASE("nfs of a single-bin fixture is exactly one") {
  auto sampler = [](int) { return std::vector<double>(50, 0.123); };
  CHECK(nfs(sampler, 8, 64) == 1.0);
}

TEST_CASE("nfs of the uniform fixture saturates at the bin count") {
  auto sampler = [](int) { return uniform_fixture(64); };
  CHECK(std::abs(nfs(sampler, 4, 64) - 64.0) < 1e-9);
}

TEST_CASE("nfs of a two-bin split is two") {
  auto sampler = [](int) {
    std::vector<double> d(10, -0.99);
    for (int i = 5; i < 10; ++i) d[i] = 0.31;
    return d;
  };
  CHECK(nfs(sampler, 3, 64) == doctest::Approx(2.0).epsilon(1e-12));
}

TEST_CASE("nfs averages over maps and stays inside its bounds") {
  auto mixed = [](int i) {
    // Alternate flat and uniform maps: mean of 1 and 64.
    return i % 2 == 0 ? std::vector<double>(64, 0.0) : uniform_fixture(64);
  };
  CHECK(nfs(mixed, 2, 64) == doctest::Approx(32.5).epsilon(1e-9));

  Rng rng(120);
  auto random_maps = [&rng](int) {
    std::vector<double> d(100);
    for (auto& v : d) v = rng.uniform(-1.0, 1.0);
    return d;
  };
  for (int rep = 0; rep < 10; ++rep) {
    const double s = nfs(random_maps, 4, 64);
    CHECK(s >= 1.0);
    CHECK(s <= 64.0);
  }
  CHECK_THROWS_AS(nfs(random_maps, 0, 64), Error);
}

TEST_CASE("feature stats carry the sample mean and regularized covariance") {
  std::vector<std::vector<double>> feats{{1.0, 2.0}, {3.0, 6.0}};
  FeatureStats s = FeatureStats::fit(feats, 1e-6);
  CHECK(s.dim == 2);
  CHECK(s.mean[0] == doctest::Approx(2.0).epsilon(1e-12));
  CHECK(s.mean[1] == doctest::Approx(4.0).epsilon(1e-12));
  // Unbiased covariance of two points plus the diagonal regularizer.
  CHECK(s.cov[0] == doctest::Approx(2.0 + 1e-6).epsilon(1e-9));
  CHECK(s.cov[3] == doctest::Approx(8.0 + 1e-6).epsilon(1e-9));
  CHECK(s.cov[1] == doctest::Approx(4.0).epsilon(1e-9));
  CHECK_THROWS_AS(FeatureStats::fit({}), Error);
  CHECK_THROWS_AS(FeatureStats::fit({{1.0}, {1.0, 2.0}}), Error);
}

TEST_CASE("frechet distance of identical statistics is zero") {
  Rng rng(121);
  std::vector<std::vector<double>> feats(20, std::vector<double>(4));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  FeatureStats s = FeatureStats::fit(feats);
  CHECK(std::abs(frechet_distance(s, s)) < 1e-9);
}

TEST_CASE("frechet distance reduces to the squared mean shift for equal covariances") {
  Rng rng(122);
  std::vector<std::vector<double>> feats(30, std::vector<double>(3));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  FeatureStats a = FeatureStats::fit(feats);
  FeatureStats b = a;
  const std::vector<double> shift{0.5, -1.0, 2.0};
  double expect = 0.0;
  for (int i = 0; i < 3; ++i) {
    b.mean[i] += shift[i];
    expect += shift[i] * shift[i];
  }
  CHECK(frechet_distance(a, b) == doctest::Approx(expect).epsilon(1e-9));
}

TEST_CASE("frechet distance matches the univariate closed form") {
  FeatureStats a, b;
  a.dim = b.dim = 1;
  a.mean = {1.0};
  b.mean = {3.5};
  a.cov = {4.0};  // sigma 2
  b.cov = {9.0};  // sigma 3
  const double expect = 2.5 * 2.5 + 4.0 + 9.0 - 2.0 * 2.0 * 3.0;
  CHECK(frechet_distance(a, b) == doctest::Approx(expect).epsilon(1e-12));
}

TEST_CASE("frechet distance is symmetric and nonnegative") {
  Rng rng(123);
  for (int rep = 0; rep < 5; ++rep) {
    std::vector<std::vector<double>> fa(25, std::vector<double>(3)),
        fb(25, std::vector<double>(3));
    for (auto& f : fa)
      for (auto& v : f) v = rng.normal(0.0, 1.0 + rep * 0.3);
    for (auto& f : fb)
      for (auto& v : f) v = rng.normal(0.5, 1.5);
    FeatureStats a = FeatureStats::fit(fa), b = FeatureStats::fit(fb);
    const double ab = frechet_distance(a, b);
    const double ba = frechet_distance(b, a);
    CHECK(ab >= -1e-9);
    CHECK(ab == doctest::Approx(ba).epsilon(1e-8));
  }
  FeatureStats a, b;
  a.dim = 2;
  b.dim = 3;
  CHECK_THROWS_AS(frechet_distance(a, b), Error);
}

TEST_CASE("instance selection keeps everything at full fraction") {
  Rng rng(124);
  std::vector<std::vector<double>> feats(12, std::vector<double>(3));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  auto idx = instance_select(feats, 1.0);
  REQUIRE(idx.size() == feats.size());
  for (size_t i = 0; i < idx.size(); ++i) CHECK(idx[i] == static_cast<int>(i));
}

TEST_CASE("instance selection drops a planted outlier") {
  Rng rng(125);
  std::vector<std::vector<double>> feats(40, std::vector<double>(4));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  feats[17] = {50.0, -50.0, 50.0, -50.0};
  auto idx = instance_select(feats, 0.9);
  CHECK(idx.size() == 36);
  for (int i : idx) CHECK(i != 17);
}

TEST_CASE("instance selection is invariant to positive affine feature maps") {
  Rng rng(126);
  std::vector<std::vector<double>> feats(30, std::vector<double>(3));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  auto base = instance_select(feats, 0.5, 1e-12);
  std::vector<std::vector<double>> mapped = feats;
  for (auto& f : mapped)
    for (int j = 0; j < 3; ++j) f[j] = 2.5 * f[j] + (j + 1.0);
  auto same = instance_select(mapped, 0.5, 1e-12);
  CHECK(base == same);
}

TEST_CASE("instance selection rejects bad fractions") {
  std::vector<std::vector<double>> feats(5, std::vector<double>(2, 1.0));
  CHECK_THROWS_AS(instance_select(feats, 0.0), Error);
  CHECK_THROWS_AS(instance_select(feats, 1.5), Error);
  CHECK_THROWS_AS(instance_select({}, 0.5), Error);
}
