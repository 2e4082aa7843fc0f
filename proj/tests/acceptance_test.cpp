// Acceptance gate: one pass/fail line per criterion, nonzero exit on any
// failure. The ablation criteria train real (reduced-budget) runs, so the
// whole binary takes on the order of twenty minutes on one core.

#include <algorithm>
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <functional>
#include <iostream>
#include <string>
#include <vector>

#include "gp3/evalkit.hpp"
#include "gp3/experiments.hpp"
#include "gp3/synthetic.hpp"

using namespace gp3;

namespace {

constexpr double kPi = 3.14159265358979323846;

int g_failures = 0;

void report(int id, const std::string& desc, bool ok,
            const std::string& detail) {
  std::printf("criterion %2d: %s - %s (%s)\n", id, ok ? "PASS" : "FAIL",
              desc.c_str(), detail.c_str());
  std::fflush(stdout);
  if (!ok) ++g_failures;
}

double now_s() {
  using clock = std::chrono::steady_clock;
  static const auto t0 = clock::now();
  return std::chrono::duration<double>(clock::now() - t0).count();
}

Tensor rand_leaf(const std::vector<int>& shape, Rng& rng, double lo,
                 double hi) {
  Tensor t = Tensor::zeros(shape);
  for (auto& v : t.mutable_values()) v = rng.uniform(lo, hi);
  t.set_requires_grad(true);
  return t;
}

// ---------------------------------------------------------------------------
// 1. gradient suite

bool criterion1(std::string& detail) {
  const double start = now_s();
  Rng rng(4001);
  int cases = 0;
  double worst_elem = 0.0, worst_comp = 0.0;

  struct ElemOp {
    const char* name;
    std::function<Tensor(const Tensor&)> fn;
    double lo, hi;
  };
  const std::vector<ElemOp> ops{
      {"exp", [](const Tensor& x) { return sum(exp(x)); }, -1.0, 1.0},
      {"log", [](const Tensor& x) { return sum(log(x)); }, 0.5, 2.0},
      {"sqrt", [](const Tensor& x) { return sum(sqrt(x)); }, 0.5, 2.0},
      {"square", [](const Tensor& x) { return sum(square(x)); }, 0.5, 1.5},
      {"abs", [](const Tensor& x) { return sum(abs(x)); }, 0.5, 1.5},
      {"sin", [](const Tensor& x) { return sum(sin(x)); }, -1.0, 1.0},
      {"cos", [](const Tensor& x) { return sum(cos(x)); }, -1.0, 1.0},
      {"tan", [](const Tensor& x) { return sum(tan(x)); }, -1.0, 1.0},
      {"tanh", [](const Tensor& x) { return sum(tanh(x)); }, -1.5, 1.5},
      {"sigmoid", [](const Tensor& x) { return sum(sigmoid(x)); }, -2.0, 2.0},
      {"softplus", [](const Tensor& x) { return sum(softplus(x)); }, -2.0,
       2.0},
      {"leaky", [](const Tensor& x) { return sum(leaky_relu(x)); }, 0.3, 1.5},
      {"mean", [](const Tensor& x) { return mean(square(x)); }, -1.0, 1.0},
      {"cumsum",
       [](const Tensor& x) { return sum(square(cumsum_exclusive_lastdim(x))); },
       -1.0, 1.0},
  };
  for (const auto& op : ops)
    for (int rep = 0; rep < 8; ++rep) {
      Tensor x = rand_leaf({5}, rng, op.lo, op.hi);
      worst_elem = std::max(worst_elem, finite_diff_check(op.fn, x));
      ++cases;
    }

  // Composite paths.
  SceneDecoder dec(4, 16, rng);
  dec.set_density_bias(-1.0);
  TriPlane tp{rand_leaf({4, 5, 5}, rng, -1.0, 1.0).detach(),
              rand_leaf({4, 5, 5}, rng, -1.0, 1.0).detach(),
              rand_leaf({4, 5, 5}, rng, -1.0, 1.0).detach()};
  DepthAdaptor adaptor(4, rng);
  Discriminator disc(4, 2, 8, 4, 8, rng);
  TeacherExtractor teacher(8, rng);
  CameraGenerator cam(CameraPrior::wide_default(), 6, 2, 12, rng);

  std::vector<std::pair<const char*, double>> comps;
  {
    Tensor x = rand_leaf({6, 4}, rng, -1.0, 1.0);
    comps.emplace_back("decode", finite_diff_check([&](const Tensor& f) {
                         return sum(dec.forward(f));
                       }, x));
  }
  {
    Tensor cx = rand_leaf({8}, rng, -0.8, 0.8).detach();
    Tensor cy = rand_leaf({8}, rng, -0.8, 0.8).detach();
    Tensor cz = rand_leaf({8}, rng, -0.8, 0.8).detach();
    Tensor x = rand_leaf({4, 5, 5}, rng, -1.0, 1.0);
    comps.emplace_back("lookup", finite_diff_check([&](const Tensor& p) {
                         TriPlane t{p, tp.yz, tp.xz};
                         return sum(square(lookup(t, cx, cy, cz)));
                       }, x));
  }
  {
    CameraParams phi;
    phi.v = {0.3, kPi / 2 - 0.2, 0.6, 0.4, kPi / 2 + 0.1, 0.1};
    ViewT view = build_view_t(
        Tensor::from({6}, {phi.v.begin(), phi.v.end()}), 1.0);
    PatchSpec patch;
    patch.h = patch.w = 2;
    patch.scale = 0.5;
    patch.dx = patch.dy = 0.25;
    RayBatchT rays = gen_rays(view, Tensor::scalar(phi.fov()), patch, 0.75,
                              1.25);
    RenderConfig rc;
    rc.n_steps = 8;
    rc.stratified = false;
    Tensor x = rand_leaf({4, 5, 5}, rng, -0.5, 0.5);
    comps.emplace_back(
        "render-depth", finite_diff_check([&](const Tensor& p) {
          TriPlane t{p, tp.yz, tp.xz};
          FieldFn field = [&](const Tensor& xs, const Tensor& ys,
                              const Tensor& zs) {
            Tensor out = dec.forward(lookup(t, xs, ys, zs));
            return std::make_pair(cols(out, 0, 3), col(out, 3));
          };
          RenderOutT r = volume_render(field, rays, rc, nullptr);
          return sum(r.depth);
        }, x, 1e-3));
  }
  {
    Tensor x = rand_leaf({1, 1, 6, 6}, rng, -0.8, 0.8);
    comps.emplace_back("adaptor", finite_diff_check([&](const Tensor& d) {
                         return sum(adaptor.forward(d)[2]);
                       }, x, 1e-3));
  }
  {
    std::vector<std::array<double, 3>> psi{{1, 0, 0}, {0.7, 0.1, 0.2}};
    std::vector<int> cls{0, 1};
    Tensor x = rand_leaf({2, 4, 8, 8}, rng, -0.5, 0.5);
    comps.emplace_back("disc-score", finite_diff_check([&](const Tensor& b) {
                         return sum(disc.forward(b, cls, psi).score);
                       }, x, 1e-3));
  }
  {
    Tensor x = rand_leaf({6}, rng, -1.0, 1.0);
    comps.emplace_back("adv-gen", finite_diff_check([&](const Tensor& s) {
                         return adv_loss_gen(s);
                       }, x));
    Tensor fake = rand_leaf({6}, rng, -1.0, 1.0).detach();
    Tensor y = rand_leaf({6}, rng, -1.0, 1.0);
    comps.emplace_back("adv-disc", finite_diff_check([&](const Tensor& s) {
                         return adv_loss_disc(s, fake);
                       }, y));
  }
  {
    Tensor e = rand_leaf({3, 8}, rng, -1.0, 1.0).detach();
    Tensor x = rand_leaf({3, 8}, rng, -1.0, 1.0);
    comps.emplace_back("distill", finite_diff_check([&](const Tensor& f) {
                         return distill_loss(e, f);
                       }, x));
  }
  {
    // Well separated samples keep the sort order stable under FD probes.
    Tensor x = Tensor::zeros({16});
    for (int i = 0; i < 16; ++i)
      x.mutable_values()[i] = (i + 0.5) / 16 + rng.uniform(-0.01, 0.01);
    x.set_requires_grad(true);
    comps.emplace_back("emd", finite_diff_check([&](const Tensor& s) {
                         return emd_to_uniform(s, 0.0, 1.0);
                       }, x));
  }
  {
    Tensor b = Tensor::scalar(0.1).set_requires_grad(false);
    Tensor x = rand_leaf({5}, rng, 0.8, 1.2);
    comps.emplace_back("norm-depth", finite_diff_check([&](const Tensor& d) {
                         return sum(square(normalize_depth(d, 0.75, 1.25, b)));
                       }, x));
  }
  {
    CameraParams pp = cam.prior().sample(rng);
    Tensor z = rand_leaf({6}, rng, -1.0, 1.0).detach();
    Tensor x = Tensor::from({6}, {pp.v.begin(), pp.v.end()});
    x.set_requires_grad(true);
    comps.emplace_back("camera-gen", finite_diff_check([&](const Tensor& p) {
                         return sum(cam.forward(p, z, 1));
                       }, x, 1e-5));
  }
  for (const auto& [name, err] : comps) {
    (void)name;
    worst_comp = std::max(worst_comp, err);
    ++cases;
  }

  const double elapsed = now_s() - start;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "%d cases, worst elementwise %.2e, worst composite %.2e, "
                "%.1fs",
                cases, worst_elem, worst_comp, elapsed);
  detail = buf;
  return cases >= 100 && worst_elem < 1e-4 && worst_comp < 1e-3 &&
         elapsed < 120.0;
}

// ---------------------------------------------------------------------------
// 2. rendering oracle

bool criterion2(std::string& detail) {
  const double tn = 0.5, tf = 1.5, sigma = 3.0;
  const double closed =
      tn + 1.0 / sigma - std::exp(-sigma * (tf - tn)) * (tf + 1.0 / sigma);
  RayBatchT rays;
  rays.origins = Tensor::from({1, 3}, {-2.0, 0.0, 0.0});
  rays.dirs = Tensor::from({1, 3}, {1.0, 0.0, 0.0});
  rays.t_near = tn;
  rays.t_far = tf;
  rays.h = rays.w = 1;
  FieldFn field = [](const Tensor& x, const Tensor&, const Tensor&) {
    const int n = x.size();
    return std::make_pair(Tensor::full({n, 3}, 0.5), Tensor::full({n}, 3.0));
  };
  std::vector<double> errs;
  for (int n : {32, 64, 128, 256}) {
    RenderConfig rc;
    rc.t_near = tn;
    rc.t_far = tf;
    rc.n_steps = n;
    rc.stratified = false;
    RenderOutT out = volume_render(field, rays, rc, nullptr);
    errs.push_back(std::abs(out.depth.values()[0] - closed));
  }
  const bool monotone = errs[0] > errs[1] && errs[1] > errs[2] &&
                        errs[2] > errs[3];
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "errors %.2e/%.2e/%.2e/%.2e at 32/64/128/256 steps",
                errs[0], errs[1], errs[2], errs[3]);
  detail = buf;
  return monotone && errs[3] < 1e-3;
}

// ---------------------------------------------------------------------------
// 3. camera gradient penalty

bool criterion3(std::string& detail) {
  Tensor phi = Tensor::from({6}, {0.1, 1.4, 0.6, -0.2, 1.7, 0.15});
  CameraPenalty ident = camera_gradient_penalty(
      [](const Tensor& x) { return x; }, phi);
  bool ok = !ident.collapsed;
  for (double v : ident.loss) ok = ok && v == 2.0;

  const std::vector<double> slopes{2.0, 0.5, 1.0, 1.0, 1.0, 1.0};
  Tensor st = Tensor::from({6}, slopes);
  CameraPenalty sloped = camera_gradient_penalty(
      [&](const Tensor& x) { return mul(x, st); }, phi);
  ok = ok && std::abs(sloped.loss[0] - 2.5) < 1e-12 &&
       std::abs(sloped.loss[1] - 2.5) < 1e-12 &&
       std::abs(sloped.loss[2] - 2.0) < 1e-12;

  CameraPenalty flat = camera_gradient_penalty(
      [&](const Tensor& x) { return mul(x, 0.0); }, phi);
  ok = ok && flat.collapsed && flat.loss[0] == 1e6;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "identity %.1f, slope-2 head %.3f, constant head %.0e "
                "collapsed=%d",
                ident.loss[0], sloped.loss[0], flat.loss[0],
                flat.collapsed ? 1 : 0);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 4. EMD oracle

bool criterion4(std::string& detail) {
  Rng rng(4004);
  int exact = 0;
  const int sets = 1000;
  for (int rep = 0; rep < sets; ++rep) {
    const double lo = rng.uniform(-2.0, 0.0);
    const double hi = lo + rng.uniform(0.5, 3.0);
    std::vector<double> xs(64);
    for (auto& v : xs) v = rng.uniform(lo - 0.3, hi + 0.3);
    Tensor t = Tensor::from({64}, xs);
    const double got = emd_to_uniform(t, lo, hi).item();
    std::sort(xs.begin(), xs.end());
    double brute = 0.0;
    for (int i = 0; i < 64; ++i)
      brute += std::abs(xs[i] - (lo + (hi - lo) * (i + 0.5) / 64));
    brute /= 64;
    if (got == brute) ++exact;
  }
  std::vector<double> mid(64, 0.5);
  const double point = emd_to_uniform(Tensor::from({64}, mid), 0.0, 1.0).item();
  char buf[120];
  std::snprintf(buf, sizeof buf, "%d/%d sets exact, midpoint mass %.12f",
                exact, sets, point);
  detail = buf;
  return exact == sets && std::abs(point - 0.25) < 1e-9;
}

// ---------------------------------------------------------------------------
// 5. NFS bounds and fixtures

std::array<double, 3> pinhole_dir(double u, double v) {
  const double n = std::sqrt(1.0 + u * u + v * v);
  return {-1.0 / n, u / n, v / n};
}

bool criterion5(std::string& detail) {
  bool ok = true;
  Rng rng(4005);
  auto random_maps = [&rng](int) {
    std::vector<double> d(200);
    for (auto& v : d) v = rng.uniform(-1.2, 1.2);
    return d;
  };
  for (int rep = 0; rep < 20; ++rep) {
    const double s = nfs(random_maps, 3, 64);
    ok = ok && s >= 1.0 && s <= 64.0;
  }
  ok = ok && nfs([](int) { return std::vector<double>(40, 0.2); }, 4, 64) ==
                 1.0;
  auto uniform = [](int) {
    std::vector<double> d(64);
    for (int j = 0; j < 64; ++j) d[j] = -1.0 + 2.0 * (j + 0.5) / 64;
    return d;
  };
  ok = ok && std::abs(nfs(uniform, 4, 64) - 64.0) < 1e-9;

  // Flat fixture: a cube face fills a narrow frustum, so every ray lands in
  // the same normalized-depth bin.
  SyntheticScene flat;
  Primitive wall;
  wall.type = Primitive::kBox;
  wall.center = {0.0, 0.0, 0.0};
  wall.size = 0.12;
  flat.prims.push_back(wall);
  flat.validate();
  const std::array<double, 3> eye{1.0, 0.0, 0.0};
  std::vector<double> flat_map;
  const int res = 32;
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      const double u = (2.0 * (j + 0.5) / res - 1.0) * 0.05;
      const double v = (2.0 * (i + 0.5) / res - 1.0) * 0.05;
      const double t = flat.first_hit(eye, pinhole_dir(u, v), 0.5, 1.5);
      flat_map.push_back(4.0 * (t - 1.0));  // fixed-range normalization
    }
  const double flat_score = nfs([&](int) { return flat_map; }, 1, 64);
  ok = ok && flat_score < 1.5;

  // Spanning fixture: one tiny sphere per ray, placed so the analytic hits
  // tile the depth range uniformly.
  SyntheticScene span;
  std::vector<std::array<double, 3>> dirs;
  for (int i = 0; i < res; ++i)
    for (int j = 0; j < res; ++j) {
      const double u = (2.0 * (j + 0.5) / res - 1.0) * 0.3;
      const double v = (2.0 * (i + 0.5) / res - 1.0) * 0.3;
      dirs.push_back(pinhole_dir(u, v));
    }
  const int n_rays = res * res;
  for (int k = 0; k < n_rays; ++k) {
    const double t = 0.7 + 0.5 * (k + 0.5) / n_rays;
    Primitive p;
    p.type = Primitive::kSphere;
    p.size = 0.002;
    for (int a = 0; a < 3; ++a)
      p.center[a] = eye[a] + (t + p.size) * dirs[k][a];
    span.prims.push_back(p);
  }
  span.validate();
  std::vector<double> span_map;
  for (int k = 0; k < n_rays; ++k) {
    const double t = span.first_hit(eye, dirs[k], 0.6, 1.3);
    span_map.push_back(4.0 * (t - 0.95));
  }
  const double span_score = nfs([&](int) { return span_map; }, 1, 64);
  ok = ok && span_score > 32.0;

  char buf[120];
  std::snprintf(buf, sizeof buf, "flat scene %.3f, spanning scene %.2f",
                flat_score, span_score);
  detail = buf;
  return ok;
}

// ---------------------------------------------------------------------------
// 6 + 7. ablation trends (trained, reduced budget)

ExperimentConfig ablation_config() {
  ExperimentConfig cfg;
  cfg.seed = 5;
  return cfg;
}

Dataset ablation_dataset() {
  const std::string dir = "/tmp/gp3_acceptance_ds";
  std::filesystem::remove_all(dir);
  gen_dataset(ablation_config(), dir);
  return load_dataset(dir);
}

AblationBudget acceptance_budget() {
  AblationBudget b;
  b.steps = 1200;
  b.seeds = {1, 2, 3};
  return b;
}

bool criterion6(const Dataset& data, std::string& detail) {
  const double start = now_s();
  auto rows = ablate_depth(ablation_config(), data, acceptance_budget(),
                           nullptr);
  double p_half = 0.0, p_zero = 0.0, no_ads = 0.0;
  for (const auto& r : rows) {
    if (r.name == "P=0.50") p_half = r.median_nfs;
    if (r.name == "P=0.00") p_zero = r.median_nfs;
    if (r.name == "no-ADS") no_ads = r.median_nfs;
  }
  const double elapsed = now_s() - start;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "median NFS: P=0.5 %.3f, P=0 %.3f, no-ADS %.3f, %.0fs",
                p_half, p_zero, no_ads, elapsed);
  detail = buf;
  return p_half > p_zero && p_half > no_ads && elapsed < 1800.0;
}

bool criterion7(const Dataset& data, std::string& detail) {
  auto rows = ablate_camera(ablation_config(), data, acceptance_budget(),
                            nullptr);
  // Position-group retention: worse (larger) of the two position parameters.
  auto pos_ratio = [](const CameraAblationRow& r) {
    return std::max(r.ratio[CameraParams::kPosYaw],
                    r.ratio[CameraParams::kPosPitch]);
  };
  double none = 0, residual = 0, gradpen = 0, emd = 0;
  for (const auto& r : rows) {
    if (r.reg == "none") none = pos_ratio(r);
    if (r.reg == "residual") residual = pos_ratio(r);
    if (r.reg == "gradpen") gradpen = pos_ratio(r);
    if (r.reg == "emd") emd = pos_ratio(r);
  }
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "pos std ratio: none %.3f, residual %.3f, gradpen %.3f, "
                "emd %.3f",
                none, residual, gradpen, emd);
  detail = buf;
  return none < 0.10 && residual < 0.10 && gradpen > 0.30 && emd > 0.30;
}

// ---------------------------------------------------------------------------
// 8. loss composition

bool criterion8(std::string& detail) {
  LossWeights w;
  bool ok = w.pos == 0.3 && w.fov == 0.03 && w.lookat == 0.003 &&
            w.dist == 1.0 && w.r1 == 0.1;
  const std::array<double, 6> lambdas{0.3, 0.3, 0.03, 0.003, 0.003, 0.003};
  ok = ok && w.per_camera_param() == lambdas;
  Rng rng(4008);
  double worst = 0.0;
  for (int rep = 0; rep < 100; ++rep) {
    std::array<double, 6> cam{};
    for (auto& v : cam) v = rng.uniform(0.0, 5.0);
    const double adv_g = rng.uniform(-2.0, 2.0);
    double manual_g = adv_g;
    for (int i = 0; i < 6; ++i) manual_g += lambdas[i] * cam[i];
    worst = std::max(worst,
                     std::abs(generator_loss(adv_g, cam, w) - manual_g));
    const double adv_d = rng.uniform(-2.0, 2.0);
    const double dist = rng.uniform(0.0, 3.0), r1 = rng.uniform(0.0, 3.0);
    worst = std::max(worst, std::abs(discriminator_loss(adv_d, dist, r1, w) -
                                     (adv_d + 1.0 * dist + 0.1 * r1)));
  }
  char buf[120];
  std::snprintf(buf, sizeof buf, "lambda table verified, worst residual %.1e",
                worst);
  detail = buf;
  return ok && worst < 1e-12;
}

// ---------------------------------------------------------------------------
// 9 + 10. determinism, persistence, distillation

ExperimentConfig probe_config() {
  ExperimentConfig cfg;
  cfg.seed = 7;
  cfg.z_dim = 8;
  cfg.w_dim = 16;
  cfg.map_hidden = 32;
  cfg.c_feat = 4;
  cfg.plane_res = 16;
  cfg.decoder_hidden = 32;
  cfg.camera_hidden = 16;
  cfg.n_steps = 8;
  cfg.patch_res = 8;
  cfg.adaptor_filters = 8;
  cfg.disc_base_ch = 8;
  cfg.teacher_dim = 8;
  cfg.batch_size = 2;
  cfg.n_scenes = 16;
  cfg.img_res = 16;
  return cfg;
}

Dataset probe_dataset() {
  const std::string dir = "/tmp/gp3_acceptance_probe_ds";
  std::filesystem::remove_all(dir);
  gen_dataset(probe_config(), dir);
  return load_dataset(dir);
}

bool criterion9(const Dataset& data, std::string& detail) {
  const ExperimentConfig cfg = probe_config();
  Trainer a(cfg, data), b(cfg, data);
  bool replay_ok = true;
  std::vector<std::string> lines;
  for (int k = 0; k < 8; ++k) {
    lines.push_back(a.train_step().to_line());
    replay_ok = replay_ok && lines.back() == b.train_step().to_line();
  }
  Trainer first(cfg, data);
  for (int k = 0; k < 4; ++k) first.train_step();
  const std::string ck = "/tmp/gp3_acceptance.ckpt";
  first.save_checkpoint(ck);
  Trainer resumed(cfg, data);
  resumed.load_checkpoint(ck);
  bool resume_ok = true;
  for (int k = 0; k < 4; ++k)
    resume_ok = resume_ok && resumed.train_step().to_line() == lines[4 + k];
  for (size_t i = 0; i < a.g_params().items.size(); ++i)
    resume_ok = resume_ok && a.g_params().items[i].second.values() ==
                                 resumed.g_params().items[i].second.values();
  for (size_t i = 0; i < a.d_params().items.size(); ++i)
    resume_ok = resume_ok && a.d_params().items[i].second.values() ==
                                 resumed.d_params().items[i].second.values();
  std::remove(ck.c_str());
  char buf[120];
  std::snprintf(buf, sizeof buf, "replay %s, checkpoint resume %s",
                replay_ok ? "bitwise" : "DIVERGED",
                resume_ok ? "bitwise" : "DIVERGED");
  detail = buf;
  return replay_ok && resume_ok;
}

bool criterion10(const Dataset& data, std::string& detail) {
  Trainer t(probe_config(), data);
  const auto before = t.teacher().weights_snapshot();
  const double initial = t.d_only_step();
  double best = initial;
  int steps_used = 1;
  for (int k = 1; k < 2000 && best > initial / 10.0; ++k) {
    best = std::min(best, t.d_only_step());
    ++steps_used;
  }
  const bool frozen = t.teacher().weights_snapshot() == before;
  char buf[160];
  std::snprintf(buf, sizeof buf,
                "distill %.4f -> %.4f (%.0fx) in %d steps, teacher %s",
                initial, best, initial / best, steps_used,
                frozen ? "unchanged" : "CHANGED");
  detail = buf;
  return best <= initial / 10.0 && frozen;
}

}  // namespace

int main() {
  std::string d;
  report(1, "gradient suite vs central finite differences", criterion1(d), d);
  report(2, "constant-density depth closed form", criterion2(d), d);
  report(3, "camera gradient penalty fixtures", criterion3(d), d);
  report(4, "EMD sorted-transport oracle", criterion4(d), d);
  report(5, "NFS bounds and synthetic fixtures", criterion5(d), d);

  report(8, "loss composition with the lambda table", criterion8(d), d);

  const Dataset probe = probe_dataset();
  report(9, "fixed-seed determinism and checkpoint resume",
         criterion9(probe, d), d);
  report(10, "distillation decrease with a frozen teacher",
         criterion10(probe, d), d);

  const Dataset data = ablation_dataset();
  report(6, "depth-supervision ablation trend", criterion6(data, d), d);
  report(7, "camera-collapse reproduction", criterion7(data, d), d);

  if (g_failures == 0) {
    std::printf("acceptance: all criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", g_failures);
  return 1;
}
