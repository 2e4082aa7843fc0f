#include "gp3/config.hpp"

#include <json.hpp>

#include <fstream>
#include <set>
#include <sstream>

namespace gp3 {

using nlohmann::json;

namespace {

void check_keys(const json& j, const std::string& scope,
                const std::set<std::string>& known) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!known.count(it.key()))
      throw Error("config: unknown key \"" + scope + it.key() + "\"");
  }
}

template <typename T>
void get(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).template get<T>();
}

json to_json_obj(const ExperimentConfig& c) {
  json j;
  j["seed"] = c.seed;
  j["scene"] = {{"z_dim", c.z_dim},
                {"w_dim", c.w_dim},
                {"map_hidden", c.map_hidden},
                {"c_feat", c.c_feat},
                {"plane_res", c.plane_res},
                {"decoder_hidden", c.decoder_hidden},
                {"density_bias", c.density_bias}};
  j["camera"] = {{"r_outer", c.r_outer},
                 {"hidden", c.camera_hidden},
                 {"reg", c.camera_reg},
                 {"emd_samples", c.emd_samples}};
  j["render"] = {{"t_near", c.t_near},
                 {"t_far", c.t_far},
                 {"n_steps", c.n_steps},
                 {"patch_res", c.patch_res},
                 {"patch_s_min", c.patch_s_min},
                 {"background", c.background}};
  j["depth"] = {{"ads", c.ads},
                {"p_raw", c.p_raw},
                {"adaptor_filters", c.adaptor_filters},
                {"blur_sigma", c.corruption.blur_sigma},
                {"noise_std", c.corruption.noise_std},
                {"remap_strength", c.corruption.remap_strength}};
  j["disc"] = {{"base_ch", c.disc_base_ch}, {"teacher_dim", c.teacher_dim}};
  j["train"] = {{"batch_size", c.batch_size},
                {"steps", c.steps},
                {"lr", c.lr},
                {"beta1", c.beta1},
                {"beta2", c.beta2},
                {"ema_half_life", c.ema_half_life},
                {"r1_interval", c.r1_interval}};
  j["loss"] = {{"pos", c.weights.pos},
               {"fov", c.weights.fov},
               {"lookat", c.weights.lookat},
               {"dist", c.weights.dist},
               {"r1", c.weights.r1}};
  j["data"] = {{"n_scenes", c.n_scenes},
               {"img_res", c.img_res},
               {"n_classes", c.n_classes}};
  return j;
}

void from_json_obj(const json& j, ExperimentConfig& c) {
  check_keys(j, "", {"seed", "scene", "camera", "render", "depth", "disc",
                     "train", "loss", "data"});
  get(j, "seed", c.seed);
  if (j.contains("scene")) {
    const json& s = j.at("scene");
    check_keys(s, "scene.",
               {"z_dim", "w_dim", "map_hidden", "c_feat", "plane_res",
                "decoder_hidden", "density_bias"});
    get(s, "z_dim", c.z_dim);
    get(s, "w_dim", c.w_dim);
    get(s, "map_hidden", c.map_hidden);
    get(s, "c_feat", c.c_feat);
    get(s, "plane_res", c.plane_res);
    get(s, "decoder_hidden", c.decoder_hidden);
    get(s, "density_bias", c.density_bias);
  }
  if (j.contains("camera")) {
    const json& s = j.at("camera");
    check_keys(s, "camera.", {"r_outer", "hidden", "reg", "emd_samples"});
    get(s, "r_outer", c.r_outer);
    get(s, "hidden", c.camera_hidden);
    get(s, "reg", c.camera_reg);
    get(s, "emd_samples", c.emd_samples);
  }
  if (j.contains("render")) {
    const json& s = j.at("render");
    check_keys(s, "render.", {"t_near", "t_far", "n_steps", "patch_res",
                              "patch_s_min", "background"});
    get(s, "t_near", c.t_near);
    get(s, "t_far", c.t_far);
    get(s, "n_steps", c.n_steps);
    get(s, "patch_res", c.patch_res);
    get(s, "patch_s_min", c.patch_s_min);
    get(s, "background", c.background);
  }
  if (j.contains("depth")) {
    const json& s = j.at("depth");
    check_keys(s, "depth.", {"ads", "p_raw", "adaptor_filters", "blur_sigma",
                             "noise_std", "remap_strength"});
    get(s, "ads", c.ads);
    get(s, "p_raw", c.p_raw);
    get(s, "adaptor_filters", c.adaptor_filters);
    get(s, "blur_sigma", c.corruption.blur_sigma);
    get(s, "noise_std", c.corruption.noise_std);
    get(s, "remap_strength", c.corruption.remap_strength);
  }
  if (j.contains("disc")) {
    const json& s = j.at("disc");
    check_keys(s, "disc.", {"base_ch", "teacher_dim"});
    get(s, "base_ch", c.disc_base_ch);
    get(s, "teacher_dim", c.teacher_dim);
  }
  if (j.contains("train")) {
    const json& s = j.at("train");
    check_keys(s, "train.", {"batch_size", "steps", "lr", "beta1", "beta2",
                             "ema_half_life", "r1_interval"});
    get(s, "batch_size", c.batch_size);
    get(s, "steps", c.steps);
    get(s, "lr", c.lr);
    get(s, "beta1", c.beta1);
    get(s, "beta2", c.beta2);
    get(s, "ema_half_life", c.ema_half_life);
    get(s, "r1_interval", c.r1_interval);
  }
  if (j.contains("loss")) {
    const json& s = j.at("loss");
    check_keys(s, "loss.", {"pos", "fov", "lookat", "dist", "r1"});
    get(s, "pos", c.weights.pos);
    get(s, "fov", c.weights.fov);
    get(s, "lookat", c.weights.lookat);
    get(s, "dist", c.weights.dist);
    get(s, "r1", c.weights.r1);
  }
  if (j.contains("data")) {
    const json& s = j.at("data");
    check_keys(s, "data.", {"n_scenes", "img_res", "n_classes"});
    get(s, "n_scenes", c.n_scenes);
    get(s, "img_res", c.img_res);
    get(s, "n_classes", c.n_classes);
  }
  if (c.camera_reg != "none" && c.camera_reg != "residual" &&
      c.camera_reg != "gradpen" && c.camera_reg != "emd")
    throw Error("config: camera.reg must be none|residual|gradpen|emd");
}

}  // namespace

ExperimentConfig ExperimentConfig::load(const std::string& path) {
  std::ifstream is(path);
  if (!is) throw Error("config: cannot open " + path);
  json j;
  try {
    is >> j;
  } catch (const json::exception& e) {
    throw Error("config: parse error in " + path + ": " + e.what());
  }
  ExperimentConfig c;
  from_json_obj(j, c);
  return c;
}

void ExperimentConfig::save(const std::string& path) const {
  std::ofstream os(path);
  if (!os) throw Error("config: cannot write " + path);
  os << to_json() << "\n";
}

std::string ExperimentConfig::to_json() const {
  return to_json_obj(*this).dump(2);
}

void ExperimentConfig::apply_override(const std::string& key,
                                      const std::string& value) {
  json j = to_json_obj(*this);
  json* node = &j;
  std::stringstream ss(key);
  std::string part, last;
  std::vector<std::string> parts;
  while (std::getline(ss, part, '.')) parts.push_back(part);
  if (parts.empty()) throw Error("config: empty override key");
  for (size_t i = 0; i + 1 < parts.size(); ++i) {
    if (!node->contains(parts[i]))
      throw Error("config: unknown key \"" + key + "\"");
    node = &(*node)[parts[i]];
  }
  last = parts.back();
  if (!node->contains(last)) throw Error("config: unknown key \"" + key + "\"");
  json& leaf = (*node)[last];
  try {
    if (leaf.is_string())
      leaf = value;
    else
      leaf = json::parse(value);
  } catch (const json::exception& e) {
    throw Error("config: bad value for \"" + key + "\": " + e.what());
  }
  from_json_obj(j, *this);
}

std::uint64_t ExperimentConfig::hash() const {
  // FNV-1a over the canonical dump.
  const std::string s = to_json();
  std::uint64_t h = 1469598103934665603ULL;
  for (unsigned char ch : s) {
    h ^= ch;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace gp3
