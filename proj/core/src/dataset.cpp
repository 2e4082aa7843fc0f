#include "gp3/dataset.hpp"

#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>

#include "gp3/depthsup.hpp"
#include "gp3/synthetic.hpp"

namespace gp3 {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

std::string idx_name(const char* stem, int i, const char* ext) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s_%04d.%s", stem, i, ext);
  return buf;
}

}  // namespace

void gen_dataset(const ExperimentConfig& cfg, const std::string& dir,
                 bool overwrite) {
  fs::path root(dir);
  if (fs::exists(root) && !fs::is_empty(root) && !overwrite)
    throw Error("gen_dataset: " + dir +
                " exists and is not empty (pass overwrite to replace)");
  fs::create_directories(root);

  RenderConfig rc;
  rc.t_near = cfg.t_near;
  rc.t_far = cfg.t_far;
  rc.n_steps = 96;  // dataset renders are offline, so spend extra quadrature
  rc.background = cfg.background;
  rc.stratified = false;

  std::ofstream labels(root / "labels.txt");
  json cams = json::array();
  for (int i = 0; i < cfg.n_scenes; ++i) {
    // Independent per-scene stream so scenes could be generated in parallel.
    Rng rng(cfg.seed ^ (0x9E3779B97F4A7C15ULL * (i + 1)));
    const int label = static_cast<int>(rng.uniform_index(cfg.n_classes));
    SyntheticScene scene = SyntheticScene::random(label % 2, rng);
    const CameraParams phi = sample_gt_camera(rng);
    const View view = build_view(phi, cfg.r_outer);
    SyntheticRender r =
        render_synthetic(scene, view, phi.fov(), cfg.img_res, rc);
    DepthGrid est = simulate_estimated_depth(r.depth_true, cfg.corruption, rng);

    write_ppm((root / idx_name("img", i, "ppm")).string(), r.rgb);
    write_depth((root / idx_name("depth_true", i, "dpt")).string(),
                r.depth_true);
    write_depth((root / idx_name("depth_est", i, "dpt")).string(), est);
    labels << label << "\n";
    cams.push_back(std::vector<double>(phi.v.begin(), phi.v.end()));
  }
  labels.close();

  // Recorded for offline analysis only; training never reads this file.
  std::ofstream(root / "cameras_gt.json") << cams.dump() << "\n";

  json manifest;
  manifest["seed"] = cfg.seed;
  manifest["config_hash"] = cfg.hash();
  manifest["n_scenes"] = cfg.n_scenes;
  manifest["img_res"] = cfg.img_res;
  manifest["n_classes"] = cfg.n_classes;
  std::ofstream(root / "manifest.json") << manifest.dump(2) << "\n";
}

Dataset load_dataset(const std::string& dir) {
  fs::path root(dir);
  std::ifstream mf(root / "manifest.json");
  if (!mf) throw Error("load_dataset: missing manifest in " + dir);
  json manifest;
  mf >> manifest;
  const int n = manifest.at("n_scenes").get<int>();

  Dataset ds;
  ds.img_res = manifest.at("img_res").get<int>();
  ds.n_classes = manifest.at("n_classes").get<int>();

  std::ifstream labels(root / "labels.txt");
  if (!labels) throw Error("load_dataset: missing labels.txt in " + dir);
  for (int i = 0; i < n; ++i) {
    DatasetItem item;
    if (!(labels >> item.label))
      throw Error("load_dataset: labels.txt shorter than manifest count");
    item.rgb = read_ppm((root / idx_name("img", i, "ppm")).string());
    item.depth_est =
        read_depth((root / idx_name("depth_est", i, "dpt")).string());
    if (item.rgb.h != ds.img_res || item.depth_est.h != ds.img_res)
      throw Error("load_dataset: resolution mismatch at item " +
                  std::to_string(i));
    item.depth_norm = normalize_real_depth(item.depth_est.d);
    ds.items.push_back(std::move(item));
  }
  return ds;
}

}  // namespace gp3
