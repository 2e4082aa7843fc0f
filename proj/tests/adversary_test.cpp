#include <cmath>
#include <cstdio>
#include <fstream>
#include <vector>

#include "doctest.h"
#include "gp3/adversary.hpp"

using namespace gp3;

namespace {

Tensor rand_tensor(const std::vector<int>& shape, Rng& rng, double lo = -1.0,
                   double hi = 1.0) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.mutable_values()) v = rng.uniform(lo, hi);
  return t;
}

std::vector<std::array<double, 3>> unit_psi(int b) {
  return std::vector<std::array<double, 3>>(b, {1.0, 0.0, 0.0});
}

const double kLn2 = std::log(2.0);

}  // namespace

TEST_CASE("loss weight defaults follow the lambda table") {
  LossWeights w;
  CHECK(w.pos == 0.3);
  CHECK(w.fov == 0.03);
  CHECK(w.lookat == 0.003);
  CHECK(w.dist == 1.0);
  CHECK(w.r1 == 0.1);
  const auto per = w.per_camera_param();
  CHECK(per == std::array<double, 6>{0.3, 0.3, 0.03, 0.003, 0.003, 0.003});
}

TEST_CASE("teacher features are deterministic and carry no graph") {
  Rng rng(100);
  TeacherExtractor t(8, rng);
  CHECK(t.feat_dim() == 8);
  Tensor rgb = rand_tensor({2, 3, 8, 8}, rng, 0.0, 1.0);
  rgb.set_requires_grad(true);
  Tensor f1 = t.forward(rgb);
  Tensor f2 = t.forward(rgb);
  CHECK(f1.shape() == std::vector<int>{2, 8});
  CHECK(f1.values() == f2.values());
  CHECK_FALSE(f1.requires_grad());
  CHECK_THROWS_AS(t.forward(Tensor::zeros({2, 4, 8, 8})), Error);
}

TEST_CASE("teacher weights never change") {
  Rng rng(101);
  TeacherExtractor t(4, rng);
  const auto before = t.weights_snapshot();
  Tensor rgb = rand_tensor({3, 3, 10, 10}, rng, 0.0, 1.0);
  for (int k = 0; k < 5; ++k) t.forward(rgb);
  const auto after = t.weights_snapshot();
  REQUIRE(before.size() == after.size());
  for (size_t i = 0; i < before.size(); ++i) CHECK(before[i] == after[i]);
}

TEST_CASE("feature files round-trip bit exactly and reject junk") {
  Rng rng(102);
  std::vector<std::vector<double>> feats(5, std::vector<double>(7));
  for (auto& f : feats)
    for (auto& v : f) v = rng.normal();
  const std::string path = "/tmp/gp3_feat_test.bin";
  write_feature_file(path, feats);
  const auto back = read_feature_file(path);
  REQUIRE(back.size() == feats.size());
  for (size_t i = 0; i < feats.size(); ++i) CHECK(back[i] == feats[i]);

  CHECK_THROWS_AS(write_feature_file(path, {}), Error);
  std::vector<std::vector<double>> ragged{{1.0, 2.0}, {3.0}};
  CHECK_THROWS_AS(write_feature_file(path, ragged), Error);

  {
    std::ofstream os("/tmp/gp3_feat_bad.bin", std::ios::binary);
    os << "NOTMAGIC junk";
  }
  CHECK_THROWS_AS(read_feature_file("/tmp/gp3_feat_bad.bin"), Error);
  CHECK_THROWS_AS(read_feature_file("/tmp/gp3_feat_missing.bin"), Error);
  write_feature_file(path, feats);
  {
    // Truncate mid-payload.
    std::ifstream is(path, std::ios::binary);
    std::vector<char> bytes((std::istreambuf_iterator<char>(is)),
                            std::istreambuf_iterator<char>());
    bytes.resize(bytes.size() / 2);
    std::ofstream os("/tmp/gp3_feat_trunc.bin", std::ios::binary);
    os.write(bytes.data(), bytes.size());
  }
  CHECK_THROWS_AS(read_feature_file("/tmp/gp3_feat_trunc.bin"), Error);
  std::remove(path.c_str());
  std::remove("/tmp/gp3_feat_bad.bin");
  std::remove("/tmp/gp3_feat_trunc.bin");
}

TEST_CASE("discriminator validates its inputs") {
  Rng rng(103);
  Discriminator d(4, 2, 8, 4, 8, rng);
  CHECK(d.in_channels() == 4);
  Tensor x = rand_tensor({2, 4, 8, 8}, rng);
  auto out = d.forward(x, {0, 1}, unit_psi(2));
  CHECK(out.score.shape() == std::vector<int>{2});
  CHECK(out.feat.shape() == std::vector<int>{2, 8});

  CHECK_THROWS_AS(d.forward(rand_tensor({2, 3, 8, 8}, rng), {0, 1},
                            unit_psi(2)),
                  Error);
  CHECK_THROWS_AS(d.forward(x, {0}, unit_psi(2)), Error);
  CHECK_THROWS_AS(d.forward(x, {0, 2}, unit_psi(2)), Error);
  Tensor bad = rand_tensor({2, 4, 8, 8}, rng);
  bad.mutable_values()[0] = std::nan("");
  CHECK_THROWS_AS(d.forward(bad, {0, 1}, unit_psi(2)), Error);
}

TEST_CASE("class conditioning changes the score") {
  Rng rng(104);
  Discriminator d(4, 3, 4, 4, 8, rng);
  Tensor x = rand_tensor({1, 4, 8, 8}, rng);
  const double s0 = d.forward(x, {0}, unit_psi(1)).score.values()[0];
  const double s1 = d.forward(x, {1}, unit_psi(1)).score.values()[0];
  CHECK(s0 != s1);
}

TEST_CASE("non-saturating losses at zero scores give log 2 terms") {
  Tensor zeros = Tensor::zeros({4});
  CHECK(adv_loss_gen(zeros).item() == doctest::Approx(kLn2).epsilon(1e-12));
  CHECK(adv_loss_disc(zeros, zeros).item() ==
        doctest::Approx(2 * kLn2).epsilon(1e-12));
}

TEST_CASE("loss limits for confident scores") {
  Tensor big = Tensor::full({3}, 40.0);
  Tensor small = Tensor::full({3}, -40.0);
  CHECK(adv_loss_gen(big).item() < 1e-12);          // confident fakes: no loss
  CHECK(adv_loss_gen(small).item() ==
        doctest::Approx(40.0).epsilon(1e-9));        // softplus linear tail
  CHECK(adv_loss_disc(big, small).item() < 1e-12);  // perfect discriminator
}

TEST_CASE("generator loss derivative at unit score") {
  Tensor s = Tensor::from({1}, {1.0});
  s.set_requires_grad(true);
  adv_loss_gen(s).backward();
  const double expect = -1.0 / (1.0 + std::exp(1.0));  // -sigmoid(-1)
  CHECK(s.grad()[0] == doctest::Approx(expect).epsilon(1e-12));
  CHECK(s.grad()[0] == doctest::Approx(-0.2689414).epsilon(1e-6));
}

TEST_CASE("full discriminator loss matches finite differences in the input") {
  Rng rng(105);
  Discriminator d(4, 2, 4, 2, 8, rng);
  Tensor fake = rand_tensor({1, 4, 8, 8}, rng).detach();
  Tensor x = rand_tensor({1, 4, 8, 8}, rng);
  x.set_requires_grad(true);
  auto fn = [&](const Tensor& t) {
    Tensor sr = d.forward(t, {0}, unit_psi(1)).score;
    Tensor sf = d.forward(fake, {1}, unit_psi(1)).score;
    return adv_loss_disc(sr, sf);
  };
  CHECK(finite_diff_check(fn, x) < 1e-3);
}

TEST_CASE("r1 of a constant-score discriminator is zero") {
  Rng rng(106);
  Discriminator d(4, 2, 4, 2, 8, rng);
  ParamMap pm;
  d.collect(pm, "d");
  for (auto& [n, t] : pm.items)
    for (auto& v : t.mutable_values()) v = 0.0;
  Tensor x = rand_tensor({2, 4, 8, 8}, rng);
  CHECK(r1_penalty_value(d, x, {0, 1}, unit_psi(2)) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("r1 definition on a linear score: half of 4 times slope squared") {
  // D(x) = 2*sum(x) on a 4-element input: grad = 2 everywhere,
  // R1 = 0.5 * ||grad||^2 = 0.5 * 4 * 4 = 8.
  Tensor x = Tensor::from({4}, {0.1, -0.2, 0.3, 0.4});
  x.set_requires_grad(true);
  mul(sum(x), 2.0).backward();
  double n2 = 0.0;
  for (double g : x.grad()) n2 += g * g;
  CHECK(0.5 * n2 == doctest::Approx(8.0).epsilon(1e-12));
}

TEST_CASE("r1 matches a numeric input-gradient oracle") {
  Rng rng(107);
  Discriminator d(4, 2, 4, 2, 6, rng);
  Tensor x = rand_tensor({1, 4, 6, 6}, rng);
  const auto psi = unit_psi(1);
  const double got = r1_penalty_value(d, x, {0}, psi);

  const double h = 1e-5;
  double n2 = 0.0;
  for (int i = 0; i < x.size(); ++i) {
    Tensor xp = Tensor::from(x.shape(), x.values());
    xp.mutable_values()[i] += h;
    Tensor xm = Tensor::from(x.shape(), x.values());
    xm.mutable_values()[i] -= h;
    const double g = (d.forward(xp, {0}, psi).score.values()[0] -
                      d.forward(xm, {0}, psi).score.values()[0]) /
                     (2 * h);
    n2 += g * g;
  }
  CHECK(got == doctest::Approx(0.5 * n2).epsilon(1e-3));
}

TEST_CASE("r1 probes leave discriminator parameter gradients untouched") {
  Rng rng(108);
  Discriminator d(4, 2, 4, 2, 6, rng);
  ParamMap pm;
  d.collect(pm, "d");
  Tensor x = rand_tensor({2, 4, 6, 6}, rng);
  r1_penalty_value(d, x, {0, 1}, unit_psi(2));
  for (const auto& [n, t] : pm.items) {
    CHECK(t.requires_grad());
    for (double g : t.impl()->grad) CHECK(g == 0.0);
  }
}

TEST_CASE("r1 surrogate parameter gradient matches finite differences") {
  Rng rng(109);
  Discriminator d(4, 2, 4, 2, 6, rng);
  ParamMap pm;
  d.collect(pm, "d");
  Tensor x = rand_tensor({2, 4, 6, 6}, rng);
  const std::vector<int> cls{0, 1};
  const auto psi = unit_psi(2);

  for (auto& [n, t] : pm.items) t.zero_grad();
  r1_surrogate(d, x, cls, psi).backward();

  const double h = 1e-4;
  int checked = 0;
  for (auto& [n, t] : pm.items) {
    auto& vals = t.mutable_values();
    const auto& g = t.impl()->grad;
    for (size_t j = 0; j < vals.size();
         j += std::max<size_t>(1, vals.size() / 4)) {
      const double orig = vals[j];
      vals[j] = orig + h;
      const double fp = r1_penalty_value(d, x, cls, psi);
      vals[j] = orig - h;
      const double fm = r1_penalty_value(d, x, cls, psi);
      vals[j] = orig;
      const double fd = (fp - fm) / (2 * h);
      INFO(n << "[" << j << "]");
      CHECK(g[j] == doctest::Approx(fd).epsilon(5e-3).scale(1e-4));
      ++checked;
    }
  }
  CHECK(checked >= 30);
}

TEST_CASE("distillation loss oracle values") {
  Tensor a = Tensor::from({2, 3}, {1.0, 2.0, 3.0, 4.0, 5.0, 6.0});
  CHECK(distill_loss(a, a).item() == doctest::Approx(0.0).epsilon(1e-12));

  Tensor e = Tensor::from({1, 2}, {1.0, 0.0});
  Tensor z = Tensor::zeros({1, 2});
  CHECK(distill_loss(e, z).item() == doctest::Approx(1.0).epsilon(1e-12));

  Rng rng(110);
  Tensor t1 = rand_tensor({3, 16}, rng);
  Tensor t2 = rand_tensor({3, 16}, rng);
  double manual = 0.0;
  for (int b = 0; b < 3; ++b)
    for (int k = 0; k < 16; ++k) {
      const double dlt = t1.values()[b * 16 + k] - t2.values()[b * 16 + k];
      manual += dlt * dlt;
    }
  manual /= 3.0;
  CHECK(distill_loss(t1, t2).item() == doctest::Approx(manual).epsilon(1e-12));

  CHECK_THROWS_AS(distill_loss(Tensor::zeros({2, 3}), Tensor::zeros({2, 4})),
                  Error);
}

TEST_CASE("empty real batch contributes zero distillation") {
  Tensor empty_a = Tensor::zeros({0, 8});
  Tensor empty_b = Tensor::zeros({0, 8});
  CHECK(distill_loss(empty_a, empty_b).item() == 0.0);
}

TEST_CASE("generator total composes adversarial and camera terms") {
  LossWeights w;
  const std::array<double, 6> cams{2.0, 2.0, 2.0, 3.0, 3.0, 3.0};
  const double expect =
      kLn2 + 0.3 * 2 + 0.3 * 2 + 0.03 * 2 + 3 * (0.003 * 3);
  CHECK(generator_loss(kLn2, cams, w) ==
        doctest::Approx(expect).epsilon(1e-15));

  LossWeights zero;
  zero.pos = zero.fov = zero.lookat = 0.0;
  CHECK(generator_loss(0.7, cams, zero) == doctest::Approx(0.7).epsilon(1e-15));

  // Monotone in every camera term.
  std::array<double, 6> bigger = cams;
  bigger[0] += 1.0;
  CHECK(generator_loss(kLn2, bigger, w) > generator_loss(kLn2, cams, w));
}

TEST_CASE("discriminator total composes adversarial, distill and r1 terms") {
  LossWeights w;
  CHECK(discriminator_loss(2 * kLn2, 0.5, 3.0, w) ==
        doctest::Approx(2 * kLn2 + 1.0 * 0.5 + 0.1 * 3.0).epsilon(1e-15));
  LossWeights zero;
  zero.dist = zero.r1 = 0.0;
  CHECK(discriminator_loss(1.1, 9.0, 9.0, zero) ==
        doctest::Approx(1.1).epsilon(1e-15));
  CHECK(discriminator_loss(1.0, 1.0, 1.0, w) >
        discriminator_loss(1.0, 0.5, 1.0, w));
}
