#include "gp3/trainer.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <numeric>
#include <sstream>

#include "gp3/checkpoint.hpp"
#include "gp3/evalkit.hpp"
#include "gp3/synthetic.hpp"

namespace gp3 {

ResidualCameraGenerator::ResidualCameraGenerator(const CameraPrior& prior,
                                                 int z_dim, int n_classes,
                                                 int hidden, Rng& rng)
    : prior_(prior), z_dim_(z_dim), n_classes_(n_classes) {
  const int in = CameraParams::kDim + z_dim + n_classes;
  net_[0] = Linear::create(in, hidden, rng);
  net_[1] = Linear::create(hidden, hidden, rng);
  // Small output gain: phi starts close to phi'.
  net_[2] = Linear::create(hidden, CameraParams::kDim, rng, 0.1);
}

Tensor ResidualCameraGenerator::forward(const Tensor& phi_prime,
                                        const Tensor& z, int c) const {
  if (phi_prime.size() != CameraParams::kDim)
    throw Error("ResidualCameraGenerator: phi_prime must have 6 components");
  if (c < 0 || c >= n_classes_)
    throw Error("ResidualCameraGenerator: class index out of range");
  Tensor onehot = Tensor::zeros({n_classes_});
  onehot.mutable_values()[c] = 1.0;
  Tensor in = reshape(concat(concat(phi_prime, z), onehot),
                      {1, CameraParams::kDim + z_dim_ + n_classes_});
  Tensor h = softplus(net_[0].forward(in));
  h = softplus(net_[1].forward(h));
  Tensor delta = reshape(net_[2].forward(h), {CameraParams::kDim});
  std::vector<double> lo(CameraParams::kDim), hi(CameraParams::kDim);
  for (int i = 0; i < CameraParams::kDim; ++i) {
    lo[i] = prior_.range_lo(i);
    hi[i] = prior_.range_hi(i);
  }
  return clamp(add(phi_prime, delta), lo, hi);
}

void ResidualCameraGenerator::collect(ParamMap& pm,
                                      const std::string& prefix) const {
  for (int i = 0; i < 3; ++i)
    net_[i].collect(pm, prefix + ".l" + std::to_string(i));
}

CameraReg camera_reg_from_string(const std::string& s) {
  if (s == "none") return CameraReg::kNone;
  if (s == "residual") return CameraReg::kResidual;
  if (s == "gradpen") return CameraReg::kGradPen;
  if (s == "emd") return CameraReg::kEmd;
  throw Error("unknown camera regularizer \"" + s + "\"");
}

std::string StepMetrics::to_line() const {
  std::ostringstream os;
  os << std::setprecision(17);
  os << "step=" << step << " loss_g=" << loss_g << " loss_g_adv=" << loss_g_adv;
  for (int i = 0; i < 6; ++i) os << " cam" << i << "=" << cam_loss[i];
  os << " collapsed=" << (cam_collapsed ? 1 : 0) << " loss_d=" << loss_d
     << " loss_d_adv=" << loss_d_adv << " dist=" << loss_dist << " r1=" << r1
     << " sel=" << selection_counts[0] << "/" << selection_counts[1] << "/"
     << selection_counts[2] << "/" << selection_counts[3]
     << " b_shift=" << b_shift;
  return os.str();
}

namespace {

void check_finite(double v, const char* term, long step) {
  if (!std::isfinite(v))
    throw Error(std::string("train_step: non-finite ") + term + " at step " +
                std::to_string(step) + " (value " + std::to_string(v) + ")");
}

// Soft clamp into [-1,1]: identity inside, slope 0.1 outside, so depth pixels
// that land outside the normalized range still carry gradient.
Tensor soft_clamp_unit(const Tensor& x) {
  std::vector<double> lo(x.size(), -1.0), hi(x.size(), 1.0);
  return add(mul(x, 0.1), mul(clamp(x, lo, hi), 0.9));
}

}  // namespace

struct Trainer::Fake {
  Tensor rgb;        // (N,3), graph
  Tensor d_bar;      // (N), graph, soft-clamped into [-1,1]
  Tensor z;          // (z_dim), constant
  Tensor phi_prime;  // (6), constant
  int c = 0;
  PatchSpec patch;
  std::array<double, 3> psi{};
};

Trainer::Trainer(const ExperimentConfig& cfg, Dataset dataset)
    : cfg_(cfg),
      data_(std::move(dataset)),
      reg_(camera_reg_from_string(cfg.camera_reg)),
      rng_(cfg.seed) {
  if (data_.items.empty()) throw Error("Trainer: empty dataset");
  rc_.t_near = cfg_.t_near;
  rc_.t_far = cfg_.t_far;
  rc_.n_steps = cfg_.n_steps;
  rc_.background = cfg_.background;
  rc_.stratified = true;

  Rng init = rng_.split();
  map_ = MappingNetwork(cfg_.z_dim, cfg_.n_classes, cfg_.map_hidden,
                        cfg_.w_dim, init);
  synth_ = SynthesisNetwork(cfg_.w_dim, cfg_.c_feat, cfg_.plane_res, init);
  dec_ = SceneDecoder(cfg_.c_feat, cfg_.decoder_hidden, init);
  dec_.set_density_bias(cfg_.density_bias);
  b_raw_ = Tensor::scalar(0.0);
  b_raw_.set_requires_grad(true);
  cam_ = CameraGenerator(cfg_.camera_prior, cfg_.z_dim, cfg_.n_classes,
                         cfg_.camera_hidden, init);
  cam_res_ = ResidualCameraGenerator(cfg_.camera_prior, cfg_.z_dim,
                                     cfg_.n_classes, cfg_.camera_hidden, init);
  adaptor_ = DepthAdaptor(cfg_.adaptor_filters, init);
  disc_ = Discriminator(cfg_.ads ? 4 : 3, cfg_.n_classes, cfg_.teacher_dim,
                        cfg_.disc_base_ch, cfg_.patch_res, init);
  teacher_ = TeacherExtractor(cfg_.teacher_dim, init);

  map_.collect(g_params_, "g.map");
  synth_.collect(g_params_, "g.synth");
  dec_.collect(g_params_, "g.dec");
  g_params_.add("g.b_raw", b_raw_);
  if (reg_ == CameraReg::kResidual)
    cam_res_.collect(c_params_, "c");
  else
    cam_.collect(c_params_, "c");
  adaptor_.collect(a_params_, "a");
  disc_.collect(d_params_, "d");

  opt_g_ = AdamOpt(g_params_, cfg_.lr, cfg_.beta1, cfg_.beta2);
  opt_c_ = AdamOpt(c_params_, cfg_.lr, cfg_.beta1, cfg_.beta2);
  opt_a_ = AdamOpt(a_params_, cfg_.lr, cfg_.beta1, cfg_.beta2);
  opt_d_ = AdamOpt(d_params_, cfg_.lr, cfg_.beta1, cfg_.beta2);
  ema_ = EmaTracker(g_params_, cfg_.ema_half_life);

  Rng dummy(0);
  map_ema_ = MappingNetwork(cfg_.z_dim, cfg_.n_classes, cfg_.map_hidden,
                            cfg_.w_dim, dummy);
  synth_ema_ = SynthesisNetwork(cfg_.w_dim, cfg_.c_feat, cfg_.plane_res, dummy);
  dec_ema_ = SceneDecoder(cfg_.c_feat, cfg_.decoder_hidden, dummy);
  dec_ema_.set_density_bias(cfg_.density_bias);
  b_raw_ema_ = Tensor::scalar(0.0);
  map_ema_.collect(ema_dst_, "g.map");
  synth_ema_.collect(ema_dst_, "g.synth");
  dec_ema_.collect(ema_dst_, "g.dec");
  ema_dst_.add("g.b_raw", b_raw_ema_);
  for (auto& [n, t] : ema_dst_.items) t.set_requires_grad(false);
}

Tensor Trainer::cam_forward(const Tensor& phi_prime, const Tensor& z,
                            int c) const {
  return reg_ == CameraReg::kResidual ? cam_res_.forward(phi_prime, z, c)
                                      : cam_.forward(phi_prime, z, c);
}

Trainer::Fake Trainer::render_fake(Rng& rng) {
  Fake f;
  std::vector<double> zv(cfg_.z_dim);
  for (auto& v : zv) v = rng.normal();
  f.z = Tensor::from({cfg_.z_dim}, std::move(zv));
  f.c = static_cast<int>(rng.uniform_index(cfg_.n_classes));
  const CameraParams pp = cfg_.camera_prior.sample(rng);
  f.phi_prime =
      Tensor::from({CameraParams::kDim}, {pp.v.begin(), pp.v.end()});
  Tensor phi = cam_forward(f.phi_prime, f.z, f.c);
  f.patch = PatchSpec::sample(cfg_.patch_res, cfg_.patch_res,
                              cfg_.patch_s_min, rng);
  f.psi = {f.patch.scale, f.patch.dx, f.patch.dy};

  ViewT view = build_view_t(phi, cfg_.r_outer);
  RayBatchT rays = gen_rays(view, at(phi, CameraParams::kFov), f.patch,
                            rc_.t_near, rc_.t_far);
  Tensor w = map_.forward(f.z, f.c);
  TriPlane planes = synth_.forward(w);
  FieldFn field = [this, &planes](const Tensor& x, const Tensor& y,
                                  const Tensor& z) {
    Tensor out = dec_.forward(lookup(planes, x, y, z));
    return std::make_pair(cols(out, 0, 3), col(out, 3));
  };
  RenderOutT ro = volume_render(field, rays, rc_, &rng);
  f.rgb = ro.rgb;
  Tensor b = shift_from_raw(b_raw_, rc_.t_near, rc_.t_far);
  f.d_bar =
      soft_clamp_unit(normalize_depth(ro.depth, rc_.t_near, rc_.t_far, b));
  return f;
}

Tensor Trainer::real_patch_rgbd(int item, const PatchSpec& patch) const {
  const DatasetItem& it = data_.items[item];
  const int H = it.rgb.h, W = it.rgb.w;
  const int ph = patch.h, pw = patch.w;
  const int channels = cfg_.ads ? 4 : 3;
  std::vector<double> out(static_cast<size_t>(channels) * ph * pw);
  for (int i = 0; i < ph; ++i) {
    for (int j = 0; j < pw; ++j) {
      const double u = patch.dx + patch.scale * (j + 0.5) / pw;
      const double v = patch.dy + patch.scale * (i + 0.5) / ph;
      double x = std::clamp(u * W - 0.5, 0.0, W - 1.0);
      double y = std::clamp(v * H - 0.5, 0.0, H - 1.0);
      const int x0 = std::min(static_cast<int>(x), W - 2);
      const int y0 = std::min(static_cast<int>(y), H - 2);
      const double fx = x - x0, fy = y - y0;
      const auto bil = [&](auto&& get) {
        return (1 - fy) * ((1 - fx) * get(y0, x0) + fx * get(y0, x0 + 1)) +
               fy * ((1 - fx) * get(y0 + 1, x0) + fx * get(y0 + 1, x0 + 1));
      };
      const size_t pix = static_cast<size_t>(i) * pw + j;
      for (int a = 0; a < 3; ++a)
        out[a * ph * pw + pix] = bil([&](int yy, int xx) {
          return it.rgb.rgb[(static_cast<size_t>(yy) * W + xx) * 3 + a];
        });
      if (channels == 4)
        out[3 * ph * pw + pix] = bil([&](int yy, int xx) {
          return it.depth_norm[static_cast<size_t>(yy) * W + xx];
        });
    }
  }
  return Tensor::from({channels * ph * pw}, std::move(out));
}

namespace {

// Per-sample (rgb (N,3), depth (N)) -> flat (C*N) channel-major.
Tensor flatten_sample(const Tensor& rgb, const Tensor* depth) {
  Tensor flat = concat(concat(col(rgb, 0), col(rgb, 1)), col(rgb, 2));
  if (depth) flat = concat(flat, *depth);
  return flat;
}

}  // namespace

StepMetrics Trainer::train_step() {
  const int B = cfg_.batch_size;
  const int N = cfg_.patch_res * cfg_.patch_res;
  StepMetrics m;
  m.step = step_;

  // One fake batch serves both phases: the D phase scores it detached, the
  // G phase re-scores it through the updated discriminator.
  std::vector<Fake> fakes;
  fakes.reserve(B);
  for (int b = 0; b < B; ++b) fakes.push_back(render_fake(rng_));

  SelectionPolicy policy{cfg_.p_raw};
  policy.validate();
  std::vector<Tensor> fake_rows;
  std::vector<int> fake_classes;
  std::vector<std::array<double, 3>> fake_psi;
  if (cfg_.ads) {
    std::vector<Tensor> dbar_rows;
    for (const auto& f : fakes) dbar_rows.push_back(f.d_bar);
    Tensor dbar_batch = reshape(stack_rows(dbar_rows),
                                {B, 1, cfg_.patch_res, cfg_.patch_res});
    const auto adapted = adaptor_.forward(dbar_batch);
    for (int b = 0; b < B; ++b) {
      const int choice = policy.draw(rng_);
      ++m.selection_counts[choice];
      Tensor depth = choice == 0
                         ? fakes[b].d_bar
                         : row(reshape(adapted[choice - 1], {B, N}), b);
      fake_rows.push_back(flatten_sample(fakes[b].rgb, &depth));
    }
  } else {
    for (const auto& f : fakes)
      fake_rows.push_back(flatten_sample(f.rgb, nullptr));
  }
  const int C = cfg_.ads ? 4 : 3;
  Tensor fake_batch = reshape(stack_rows(fake_rows),
                              {B, C, cfg_.patch_res, cfg_.patch_res});
  for (const auto& f : fakes) {
    fake_classes.push_back(f.c);
    fake_psi.push_back(f.psi);
  }

  std::vector<Tensor> real_rows;
  std::vector<int> real_classes;
  std::vector<std::array<double, 3>> real_psi;
  for (int b = 0; b < B; ++b) {
    const int item = static_cast<int>(rng_.uniform_index(data_.items.size()));
    const PatchSpec patch = PatchSpec::sample(cfg_.patch_res, cfg_.patch_res,
                                              cfg_.patch_s_min, rng_);
    real_rows.push_back(real_patch_rgbd(item, patch));
    real_classes.push_back(data_.items[item].label);
    real_psi.push_back({patch.scale, patch.dx, patch.dy});
  }
  Tensor real_batch = reshape(stack_rows(real_rows),
                              {B, C, cfg_.patch_res, cfg_.patch_res});

  // -- discriminator phase --
  opt_d_.zero_grad();
  Tensor fake_det = fake_batch.detach();
  auto out_real = disc_.forward(real_batch, real_classes, real_psi);
  auto out_fake = disc_.forward(fake_det, fake_classes, fake_psi);
  Tensor adv_d = adv_loss_disc(out_real.score, out_fake.score);
  Tensor e = teacher_.forward(channels(real_batch, 0, 3));
  Tensor dist = distill_loss(e, out_real.feat);
  m.loss_d_adv = adv_d.item();
  m.loss_dist = dist.item();
  const bool apply_r1 = cfg_.r1_interval > 0 && step_ % cfg_.r1_interval == 0;
  if (apply_r1)
    m.r1 = r1_penalty_value(disc_, real_batch, real_classes, real_psi);

  add(adv_d, mul(dist, cfg_.weights.dist)).backward();
  if (apply_r1) {
    Tensor sur = r1_surrogate(disc_, real_batch, real_classes, real_psi);
    mul(sur, cfg_.weights.r1 * cfg_.r1_interval).backward();
  }
  opt_d_.step();
  m.loss_d = discriminator_loss(m.loss_d_adv, m.loss_dist, m.r1, cfg_.weights);

  // -- generator phase --
  opt_g_.zero_grad();
  opt_c_.zero_grad();
  if (cfg_.ads) opt_a_.zero_grad();
  auto out_fake_g = disc_.forward(fake_batch, fake_classes, fake_psi);
  Tensor adv_g = adv_loss_gen(out_fake_g.score);
  m.loss_g_adv = adv_g.item();

  std::vector<Tensor> pps, zs;
  std::vector<int> cs;
  for (const auto& f : fakes) {
    pps.push_back(f.phi_prime);
    zs.push_back(f.z);
    cs.push_back(f.c);
  }
  const auto lambdas = cfg_.weights.per_camera_param();
  Tensor g_obj = adv_g;
  if (reg_ == CameraReg::kGradPen) {
    CameraPenalty p = camera_gradient_penalty(cam_, pps, zs, cs);
    m.cam_loss = p.loss;
    m.cam_collapsed = p.collapsed;
  } else if (reg_ == CameraReg::kEmd) {
    const auto reg = emd_entropy_reg(cam_, cfg_.camera_prior, zs, cs, rng_,
                                     cfg_.emd_samples);
    for (int i = 0; i < 6; ++i) {
      m.cam_loss[i] = reg[i].item();
      g_obj = add(g_obj, mul(reg[i], lambdas[i]));
    }
  }
  g_obj.backward();
  if (reg_ == CameraReg::kGradPen)
    camera_penalty_surrogate(cam_, pps, zs, cs, lambdas).backward();
  opt_g_.step();
  opt_c_.step();
  if (cfg_.ads) opt_a_.step();
  ema_.update();

  m.loss_g = generator_loss(m.loss_g_adv, m.cam_loss, cfg_.weights);
  const double b_max =
      std::min((rc_.t_near + rc_.t_far) / 2.0, 0.8 * (rc_.t_far - rc_.t_near));
  m.b_shift = b_max / (1.0 + std::exp(-b_raw_.values()[0]));

  check_finite(m.loss_g_adv, "generator adversarial loss", step_);
  check_finite(m.loss_d_adv, "discriminator adversarial loss", step_);
  check_finite(m.loss_dist, "distillation loss", step_);
  check_finite(m.r1, "R1 penalty", step_);
  for (int i = 0; i < 6; ++i)
    check_finite(m.cam_loss[i], "camera penalty", step_);
  check_finite(m.loss_g, "generator total", step_);
  check_finite(m.loss_d, "discriminator total", step_);

  ++step_;
  return m;
}

double Trainer::d_only_step() {
  const int B = 8;
  if (!dfix_fakes_.defined()) {
    Rng frng(cfg_.seed ^ 0xD15711D15711ULL);
    std::vector<Tensor> rows;
    for (int b = 0; b < B; ++b) {
      Fake f = render_fake(frng);
      Tensor depth = f.d_bar;
      rows.push_back(
          flatten_sample(f.rgb, cfg_.ads ? &depth : nullptr).detach());
      dfix_fake_classes_.push_back(f.c);
      dfix_psi_.push_back(f.psi);
      dfix_real_items_.push_back(
          static_cast<int>(frng.uniform_index(data_.items.size())));
      PatchSpec p;
      p.h = p.w = cfg_.patch_res;
      dfix_patches_.push_back(p);
    }
    dfix_fakes_ = reshape(stack_rows(rows), {B, cfg_.ads ? 4 : 3,
                                             cfg_.patch_res, cfg_.patch_res});
  }
  std::vector<Tensor> real_rows;
  std::vector<int> real_classes;
  std::vector<std::array<double, 3>> real_psi;
  for (int b = 0; b < B; ++b) {
    real_rows.push_back(real_patch_rgbd(dfix_real_items_[b], dfix_patches_[b]));
    real_classes.push_back(data_.items[dfix_real_items_[b]].label);
    real_psi.push_back({1.0, 0.0, 0.0});
  }
  Tensor real_batch = reshape(stack_rows(real_rows),
                              {B, cfg_.ads ? 4 : 3, cfg_.patch_res,
                               cfg_.patch_res});
  opt_d_.zero_grad();
  auto out_real = disc_.forward(real_batch, real_classes, real_psi);
  auto out_fake = disc_.forward(dfix_fakes_, dfix_fake_classes_, dfix_psi_);
  Tensor adv_d = adv_loss_disc(out_real.score, out_fake.score);
  Tensor e = teacher_.forward(channels(real_batch, 0, 3));
  Tensor dist = distill_loss(e, out_real.feat);
  const double dist_val = dist.item();
  add(adv_d, mul(dist, cfg_.weights.dist)).backward();
  opt_d_.step();
  return dist_val;
}

void Trainer::write_ema() const {
  ema_.write_to(ema_dst_);
}

namespace {

struct EvalMap {
  std::vector<double> rgb;    // res*res*3
  std::vector<double> depth;  // raw, res*res
};

}  // namespace

// Numeric full-image midpoint render of one EMA sample. When `cull`, the
// lowest half of the density samples is zeroed before integration.
static EvalMap render_ema_map(const MappingNetwork& map,
                              const SynthesisNetwork& synth,
                              const SceneDecoder& dec, const View& view,
                              double fov, int res, const RenderConfig& rc,
                              const Tensor& z, int c, bool cull) {
  Tensor w = map.forward(z, c);
  TriPlane planes = synth.forward(w);

  const int N = res * res;
  const int S = rc.n_steps;
  const double th = std::tan(fov / 2.0);
  const double dt = (rc.t_far - rc.t_near) / S;
  std::vector<double> dirs(static_cast<size_t>(N) * 3);
  for (int i = 0; i < res; ++i) {
    for (int j = 0; j < res; ++j) {
      const double u = 2.0 * (j + 0.5) / res - 1.0;
      const double v = 1.0 - 2.0 * (i + 0.5) / res;
      double d[3], norm = 0.0;
      for (int a = 0; a < 3; ++a) {
        d[a] = u * th * view.right[a] + v * th * view.up[a] + view.forward[a];
        norm += d[a] * d[a];
      }
      norm = std::sqrt(norm);
      for (int a = 0; a < 3; ++a)
        dirs[(static_cast<size_t>(i) * res + j) * 3 + a] = d[a] / norm;
    }
  }
  const size_t M = static_cast<size_t>(N) * S;
  std::vector<double> xs(M), ys(M), zs(M);
  for (int r = 0; r < N; ++r) {
    for (int k = 0; k < S; ++k) {
      const double t = rc.t_near + (k + 0.5) * dt;
      const size_t idx = static_cast<size_t>(r) * S + k;
      xs[idx] = view.origin[0] + t * dirs[r * 3 + 0];
      ys[idx] = view.origin[1] + t * dirs[r * 3 + 1];
      zs[idx] = view.origin[2] + t * dirs[r * 3 + 2];
    }
  }
  Tensor feat = lookup(planes, Tensor::from({static_cast<int>(M)}, xs),
                       Tensor::from({static_cast<int>(M)}, ys),
                       Tensor::from({static_cast<int>(M)}, zs));
  Tensor out = dec.forward(feat);  // (M,4)
  std::vector<double> sigma(M), rgbv(M * 3);
  for (size_t i = 0; i < M; ++i) {
    sigma[i] = out.values()[i * 4 + 3];
    for (int a = 0; a < 3; ++a) rgbv[i * 3 + a] = out.values()[i * 4 + a];
  }
  if (cull) {
    std::vector<size_t> order(M);
    std::iota(order.begin(), order.end(), size_t{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](size_t a, size_t b) { return sigma[a] < sigma[b]; });
    for (size_t i = 0; i < M / 2; ++i) sigma[order[i]] = 0.0;
  }
  EvalMap em;
  em.rgb.assign(static_cast<size_t>(N) * 3, 0.0);
  em.depth.assign(N, 0.0);
  for (int r = 0; r < N; ++r) {
    double trans = 1.0, wsum = 0.0, depth = 0.0, acc[3] = {0, 0, 0};
    for (int k = 0; k < S; ++k) {
      const size_t idx = static_cast<size_t>(r) * S + k;
      const double alpha = 1.0 - std::exp(-sigma[idx] * dt);
      const double wk = trans * alpha;
      const double t = rc.t_near + (k + 0.5) * dt;
      for (int a = 0; a < 3; ++a) acc[a] += wk * rgbv[idx * 3 + a];
      depth += wk * t;
      wsum += wk;
      trans *= 1.0 - alpha;
    }
    for (int a = 0; a < 3; ++a)
      em.rgb[static_cast<size_t>(r) * 3 + a] =
          acc[a] + (1.0 - wsum) * rc.background[a];
    em.depth[r] = depth;
  }
  return em;
}

double Trainer::eval_nfs(int n_maps, int bins, int res,
                         std::uint64_t eval_seed) {
  write_ema();
  Rng erng(eval_seed);
  const CameraParams mean = cfg_.camera_prior.mean_camera();
  const View view = build_view(mean, cfg_.r_outer);
  const double b_max =
      std::min((rc_.t_near + rc_.t_far) / 2.0, 0.8 * (rc_.t_far - rc_.t_near));
  const double b = b_max / (1.0 + std::exp(-b_raw_ema_.values()[0]));

  std::vector<std::vector<double>> maps;
  maps.reserve(n_maps);
  for (int i = 0; i < n_maps; ++i) {
    std::vector<double> zv(cfg_.z_dim);
    for (auto& v : zv) v = erng.normal();
    Tensor z = Tensor::from({cfg_.z_dim}, std::move(zv));
    const int c = static_cast<int>(erng.uniform_index(cfg_.n_classes));
    EvalMap em = render_ema_map(map_ema_, synth_ema_, dec_ema_, view,
                                mean.fov(), res, rc_, z, c, true);
    std::vector<double> norm(em.depth.size());
    for (size_t k = 0; k < norm.size(); ++k)
      norm[k] = 2.0 * (em.depth[k] - (rc_.t_near + rc_.t_far + b) / 2.0) /
                (rc_.t_far - rc_.t_near - b);
    maps.push_back(std::move(norm));
  }
  return nfs([&maps](int i) { return maps[i]; }, n_maps, bins);
}

std::array<double, 6> Trainer::camera_posterior_std(int n_draws,
                                                    std::uint64_t eval_seed) {
  Rng erng(eval_seed);
  std::array<double, 6> mean{}, m2{};
  for (int k = 0; k < n_draws; ++k) {
    const CameraParams pp = cfg_.camera_prior.sample(erng);
    std::vector<double> zv(cfg_.z_dim);
    for (auto& v : zv) v = erng.normal();
    const int c = static_cast<int>(erng.uniform_index(cfg_.n_classes));
    Tensor ppt =
        Tensor::from({CameraParams::kDim}, {pp.v.begin(), pp.v.end()});
    Tensor phi = cam_forward(ppt, Tensor::from({cfg_.z_dim}, zv), c);
    for (int i = 0; i < 6; ++i) {
      const double x = phi.values()[i];
      const double d = x - mean[i];
      mean[i] += d / (k + 1);
      m2[i] += d * (x - mean[i]);
    }
  }
  std::array<double, 6> out{};
  for (int i = 0; i < 6; ++i)
    out[i] = n_draws > 1 ? std::sqrt(m2[i] / (n_draws - 1)) : 0.0;
  return out;
}

std::array<double, 6> Trainer::camera_prior_std(int n_draws,
                                                std::uint64_t eval_seed) const {
  Rng erng(eval_seed);
  std::array<double, 6> mean{}, m2{};
  for (int k = 0; k < n_draws; ++k) {
    const CameraParams pp = cfg_.camera_prior.sample(erng);
    for (int i = 0; i < 6; ++i) {
      const double d = pp.v[i] - mean[i];
      mean[i] += d / (k + 1);
      m2[i] += d * (pp.v[i] - mean[i]);
    }
  }
  std::array<double, 6> out{};
  for (int i = 0; i < 6; ++i)
    out[i] = n_draws > 1 ? std::sqrt(m2[i] / (n_draws - 1)) : 0.0;
  return out;
}

void Trainer::render_sample(std::uint64_t sample_seed, int res, Image* rgb,
                            DepthGrid* depth) {
  write_ema();
  Rng srng(sample_seed);
  std::vector<double> zv(cfg_.z_dim);
  for (auto& v : zv) v = srng.normal();
  Tensor z = Tensor::from({cfg_.z_dim}, std::move(zv));
  const int c = static_cast<int>(srng.uniform_index(cfg_.n_classes));
  const CameraParams mean = cfg_.camera_prior.mean_camera();
  const View view = build_view(mean, cfg_.r_outer);
  EvalMap em = render_ema_map(map_ema_, synth_ema_, dec_ema_, view, mean.fov(),
                              res, rc_, z, c, false);
  if (rgb) {
    rgb->h = rgb->w = res;
    rgb->rgb = em.rgb;
    for (auto& v : rgb->rgb) v = std::clamp(v, 0.0, 1.0);
  }
  if (depth) {
    depth->h = depth->w = res;
    depth->d = em.depth;
  }
}

namespace {

void dump_params(Checkpoint& ck, const ParamMap& pm, const AdamOpt& opt) {
  const auto& states = const_cast<AdamOpt&>(opt).slots();
  for (size_t i = 0; i < pm.items.size(); ++i) {
    const auto& [name, t] = pm.items[i];
    ck.arrays.emplace_back(name, t.values());
    ck.arrays.emplace_back("adam." + name + ".m", states[i].m);
    ck.arrays.emplace_back("adam." + name + ".v", states[i].v);
    ck.ints.emplace_back("adam." + name + ".t", states[i].t);
  }
}

void restore_params(const Checkpoint& ck, const ParamMap& pm, AdamOpt& opt) {
  for (size_t i = 0; i < pm.items.size(); ++i) {
    const auto& [name, t] = pm.items[i];
    const auto& vals = ck.array(name);
    if (vals.size() != t.values().size())
      throw Error("checkpoint: size mismatch for " + name);
    const_cast<Tensor&>(t).mutable_values() = vals;
    opt.slots()[i].m = ck.array("adam." + name + ".m");
    opt.slots()[i].v = ck.array("adam." + name + ".v");
    opt.slots()[i].t = ck.integer("adam." + name + ".t");
  }
}

}  // namespace

void Trainer::save_checkpoint(const std::string& path) const {
  Checkpoint ck;
  ck.step = static_cast<std::uint64_t>(step_);
  ck.config_hash = cfg_.hash();
  ck.rngs.emplace_back("train", rng_.state());
  dump_params(ck, g_params_, opt_g_);
  dump_params(ck, c_params_, opt_c_);
  dump_params(ck, a_params_, opt_a_);
  dump_params(ck, d_params_, opt_d_);
  const auto& shadows = const_cast<EmaTracker&>(ema_).shadows();
  for (size_t i = 0; i < g_params_.items.size(); ++i)
    ck.arrays.emplace_back("ema." + g_params_.items[i].first, shadows[i]);
  ck.save(path);
}

void Trainer::load_checkpoint(const std::string& path) {
  // The stored config hash is provenance, not a compatibility key: overriding
  // run-length or logging fields must not invalidate a checkpoint. Mismatched
  // architectures still fail below on array sizes.
  Checkpoint ck = Checkpoint::load(path);
  restore_params(ck, g_params_, opt_g_);
  restore_params(ck, c_params_, opt_c_);
  restore_params(ck, a_params_, opt_a_);
  restore_params(ck, d_params_, opt_d_);
  auto& shadows = ema_.shadows();
  for (size_t i = 0; i < g_params_.items.size(); ++i) {
    const auto& s = ck.array("ema." + g_params_.items[i].first);
    if (s.size() != shadows[i].size())
      throw Error("checkpoint: EMA size mismatch for " +
                  g_params_.items[i].first);
    shadows[i] = s;
  }
  rng_.set_state(ck.rng("train"));
  step_ = static_cast<long>(ck.step);
}

}  // namespace gp3
