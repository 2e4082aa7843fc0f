// Command-line front end: dataset generation, training, evaluation and the
// two ablation sweeps. Every run prints its config hash and seed so any
// reported number can be regenerated from the log alone.

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>

#include "gp3/dataset.hpp"
#include "gp3/experiments.hpp"
#include "gp3/trainer.hpp"

namespace fs = std::filesystem;
using namespace gp3;

namespace {

int log_every() {
  const char* v = std::getenv("GP3_VERBOSE");
  if (v && std::atoi(v) != 0) return 1;
  return 100;
}

struct CommonOpts {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::optional<long> steps;
  std::optional<double> p_depth;
  std::optional<std::string> reg;
};

void add_common(CLI::App* cmd, CommonOpts* o) {
  cmd->add_option("--config", o->config_path, "JSON config file");
  cmd->add_option("--seed", o->seed, "RNG seed override");
  cmd->add_option("--steps", o->steps, "training step override");
  cmd->add_option("--p-depth", o->p_depth, "P(raw depth) override");
  cmd->add_option("--reg", o->reg,
                  "camera regularizer: none|residual|gradpen|emd");
}

ExperimentConfig make_config(const CommonOpts& o) {
  ExperimentConfig cfg;
  if (!o.config_path.empty()) cfg = ExperimentConfig::load(o.config_path);
  if (o.seed) cfg.seed = *o.seed;
  if (o.steps) cfg.steps = *o.steps;
  if (o.p_depth) cfg.p_raw = *o.p_depth;
  if (o.reg) cfg.camera_reg = *o.reg;
  camera_reg_from_string(cfg.camera_reg);  // validate
  if (cfg.p_raw < 0.0 || cfg.p_raw > 1.0)
    throw Error("p-depth must lie in [0,1]");
  return cfg;
}

void banner(const ExperimentConfig& cfg, std::ostream& os) {
  os << "# config_hash=" << cfg.hash() << " seed=" << cfg.seed << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"desk-scale 3D GAN with adversarial depth supervision"};
  app.require_subcommand(1);

  CommonOpts opts;
  std::string data_dir, out_dir, checkpoint_path;
  bool overwrite = false;
  int nfs_maps = 48, nfs_res = 16, render_res = 32;
  std::vector<std::uint64_t> seed_list{1, 2, 3};

  auto* gen = app.add_subcommand("gen-data", "generate the synthetic dataset");
  add_common(gen, &opts);
  gen->add_option("--out", out_dir, "output directory")->required();
  gen->add_flag("--overwrite", overwrite, "replace an existing dataset");

  auto* train = app.add_subcommand("train", "run the training loop");
  add_common(train, &opts);
  train->add_option("--data", data_dir, "dataset directory")->required();
  train->add_option("--out", out_dir, "checkpoint/log directory")->required();
  train->add_option("--resume", checkpoint_path, "checkpoint to resume from");

  auto* evalnfs = app.add_subcommand(
      "eval-nfs", "Non-Flatness Score of a checkpoint or of dataset depth");
  add_common(evalnfs, &opts);
  evalnfs->add_option("--data", data_dir, "dataset directory")->required();
  evalnfs->add_option("--checkpoint", checkpoint_path,
                      "trained checkpoint (omit to score true depth maps)");
  evalnfs->add_option("--nfs-maps", nfs_maps, "depth maps to average");
  evalnfs->add_option("--nfs-res", nfs_res, "render resolution");

  auto* render = app.add_subcommand("render", "render one sample to disk");
  add_common(render, &opts);
  render->add_option("--data", data_dir, "dataset directory")->required();
  render->add_option("--out", out_dir, "output directory")->required();
  render->add_option("--checkpoint", checkpoint_path, "checkpoint to load");
  render->add_option("--res", render_res, "image resolution");

  auto* abd = app.add_subcommand("ablate-depth",
                                 "NFS sweep over the depth-selection rate");
  add_common(abd, &opts);
  abd->add_option("--data", data_dir, "dataset directory")->required();
  abd->add_option("--seeds", seed_list, "seed list for the median");
  abd->add_option("--nfs-maps", nfs_maps, "depth maps to average");
  abd->add_option("--nfs-res", nfs_res, "render resolution");

  auto* abc = app.add_subcommand("ablate-camera",
                                 "posterior-spread sweep over regularizers");
  add_common(abc, &opts);
  abc->add_option("--data", data_dir, "dataset directory")->required();
  abc->add_option("--seeds", seed_list, "seed list for the median");

  CLI11_PARSE(app, argc, argv);

  try {
    ExperimentConfig cfg = make_config(opts);

    if (gen->parsed()) {
      banner(cfg, std::cout);
      gen_dataset(cfg, out_dir, overwrite);
      std::cout << "wrote " << cfg.n_scenes << " scenes to " << out_dir
                << "\n";
      return 0;
    }

    if (train->parsed()) {
      fs::create_directories(out_dir);
      Dataset data = load_dataset(data_dir);
      Trainer t(cfg, std::move(data));
      if (!checkpoint_path.empty()) t.load_checkpoint(checkpoint_path);
      std::ofstream log(fs::path(out_dir) / "metrics.log",
                        std::ios::app);
      banner(cfg, log);
      banner(cfg, std::cout);
      const int every = log_every();
      while (t.step() < cfg.steps) {
        StepMetrics m = t.train_step();
        if (m.step % every == 0 || t.step() == cfg.steps) {
          log << m.to_line() << "\n";
          std::cout << m.to_line() << "\n";
        }
      }
      const std::string ck = (fs::path(out_dir) / "ckpt_final.bin").string();
      t.save_checkpoint(ck);
      std::cout << "checkpoint written to " << ck << "\n";
      return 0;
    }

    if (evalnfs->parsed()) {
      banner(cfg, std::cout);
      if (checkpoint_path.empty()) {
        std::cout << "nfs=" << dataset_true_depth_nfs(data_dir) << "\n";
      } else {
        Dataset data = load_dataset(data_dir);
        Trainer t(cfg, std::move(data));
        t.load_checkpoint(checkpoint_path);
        std::cout << "nfs="
                  << t.eval_nfs(nfs_maps, 64, nfs_res, cfg.seed ^ 0xEFA1ULL)
                  << "\n";
      }
      return 0;
    }

    if (render->parsed()) {
      banner(cfg, std::cout);
      fs::create_directories(out_dir);
      Dataset data = load_dataset(data_dir);
      Trainer t(cfg, std::move(data));
      if (!checkpoint_path.empty()) t.load_checkpoint(checkpoint_path);
      Image img;
      DepthGrid depth;
      t.render_sample(cfg.seed, render_res, &img, &depth);
      write_ppm((fs::path(out_dir) / "sample.ppm").string(), img);
      write_depth((fs::path(out_dir) / "sample.dpt").string(), depth);
      std::cout << "wrote sample.ppm and sample.dpt to " << out_dir << "\n";
      return 0;
    }

    if (abd->parsed() || abc->parsed()) {
      Dataset data = load_dataset(data_dir);
      AblationBudget budget;
      budget.steps = cfg.steps;
      budget.seeds = seed_list;
      budget.nfs_maps = nfs_maps;
      budget.nfs_res = nfs_res;
      if (abd->parsed()) {
        auto rows = ablate_depth(cfg, data, budget, &std::cout);
        std::cout << "\ncell      median_nfs\n";
        for (const auto& r : rows)
          std::cout << r.name << (r.name.size() < 8 ? "\t\t" : "\t")
                    << r.median_nfs << "\n";
      } else {
        auto rows = ablate_camera(cfg, data, budget, &std::cout);
        std::cout << "\nreg       posterior/prior std per camera parameter\n";
        for (const auto& r : rows) {
          std::cout << r.reg << "\t";
          for (int i = 0; i < 6; ++i)
            std::cout << (i ? "," : "") << r.ratio[i];
          std::cout << "\n";
        }
      }
      return 0;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
