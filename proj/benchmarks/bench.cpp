#include <benchmark/benchmark.h>

#include "gp3/camera.hpp"
#include "gp3/nn.hpp"
#include "gp3/render.hpp"
#include "gp3/scene.hpp"

using namespace gp3;

static void BM_Conv2d(benchmark::State& state) {
  Rng rng(7);
  auto conv = Conv2dLayer::create(8, 16, 3, 2, 1, rng);
  Tensor x = Tensor::zeros({1, 8, 32, 32});
  for (auto& v : x.mutable_values()) v = rng.normal();
  for (auto _ : state) benchmark::DoNotOptimize(conv.forward(x));
}
BENCHMARK(BM_Conv2d);

static void BM_GridLookup(benchmark::State& state) {
  Rng rng(7);
  Tensor plane = Tensor::zeros({8, 32, 32});
  for (auto& v : plane.mutable_values()) v = rng.normal();
  const int n = static_cast<int>(state.range(0));
  std::vector<double> uv(n);
  for (auto& v : uv) v = rng.uniform(-1.0, 1.0);
  Tensor u = Tensor::from({n}, uv), v = Tensor::from({n}, uv);
  for (auto _ : state) benchmark::DoNotOptimize(grid_lookup(plane, u, v));
}
BENCHMARK(BM_GridLookup)->Arg(1 << 10)->Arg(1 << 14);

static void BM_PatchRenderBackward(benchmark::State& state) {
  Rng rng(7);
  SynthesisNetwork synth(32, 8, 32, rng);
  SceneDecoder dec(8, 64, rng);
  dec.set_density_bias(-4.0);
  Tensor w = Tensor::zeros({32});
  for (auto& v : w.mutable_values()) v = rng.normal();
  w.set_requires_grad(true);
  CameraPrior prior = CameraPrior::wide_default();
  RenderConfig rc;
  rc.n_steps = 16;
  rc.stratified = false;
  PatchSpec patch;
  patch.h = patch.w = 12;
  for (auto _ : state) {
    Tensor phi = Tensor::from({6}, {prior.mean_camera().v.begin(),
                                    prior.mean_camera().v.end()});
    ViewT view = build_view_t(phi, 1.0);
    RayBatchT rays =
        gen_rays(view, at(phi, CameraParams::kFov), patch, 0.75, 1.25);
    TriPlane planes = synth.forward(w);
    FieldFn field = [&](const Tensor& x, const Tensor& y, const Tensor& z) {
      Tensor out = dec.forward(lookup(planes, x, y, z));
      return std::make_pair(cols(out, 0, 3), col(out, 3));
    };
    RenderOutT ro = volume_render(field, rays, rc);
    mean(ro.rgb).backward();
    benchmark::DoNotOptimize(ro);
  }
}
BENCHMARK(BM_PatchRenderBackward);

BENCHMARK_MAIN();
