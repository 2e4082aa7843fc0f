#include "gp3/experiments.hpp"

#include <json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <ostream>

#include "gp3/depthsup.hpp"
#include "gp3/evalkit.hpp"

namespace gp3 {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) throw Error("median: empty");
  std::sort(v.begin(), v.end());
  const size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

double run_one_nfs(const ExperimentConfig& cfg, const Dataset& data,
                   const AblationBudget& budget, std::uint64_t seed,
                   std::ostream* log) {
  ExperimentConfig c = cfg;
  c.seed = seed;
  Trainer t(c, data);
  for (long s = 0; s < budget.steps; ++s) {
    StepMetrics m = t.train_step();
    if (log && (s % 200 == 0 || s + 1 == budget.steps))
      *log << m.to_line() << "\n";
  }
  return t.eval_nfs(budget.nfs_maps, budget.nfs_bins, budget.nfs_res,
                    seed ^ 0xEFA15EEDULL);
}

}  // namespace

std::vector<DepthAblationRow> ablate_depth(const ExperimentConfig& base,
                                           const Dataset& data,
                                           const AblationBudget& budget,
                                           std::ostream* log) {
  std::vector<DepthAblationRow> rows;
  const double ps[] = {0.0, 0.25, 0.5, 1.0};
  for (double p : ps) {
    DepthAblationRow r;
    char buf[32];
    std::snprintf(buf, sizeof(buf), "P=%.2f", p);
    r.name = buf;
    r.ads = true;
    r.p_raw = p;
    rows.push_back(r);
  }
  rows.push_back({"no-ADS", false, 0.5, {}, 0.0});

  for (auto& r : rows) {
    ExperimentConfig cfg = base;
    cfg.ads = r.ads;
    cfg.p_raw = r.p_raw;
    for (std::uint64_t seed : budget.seeds) {
      if (log)
        *log << "# config_hash=" << cfg.hash() << " seed=" << seed
             << " cell=" << r.name << "\n";
      r.nfs_per_seed.push_back(run_one_nfs(cfg, data, budget, seed, log));
    }
    r.median_nfs = median(r.nfs_per_seed);
    if (log) *log << r.name << " median_nfs=" << r.median_nfs << "\n";
  }
  return rows;
}

std::vector<CameraAblationRow> ablate_camera(const ExperimentConfig& base,
                                             const Dataset& data,
                                             const AblationBudget& budget,
                                             std::ostream* log) {
  std::vector<CameraAblationRow> rows;
  for (const char* reg : {"none", "residual", "gradpen", "emd"}) {
    CameraAblationRow row;
    row.reg = reg;
    std::array<std::vector<double>, 6> ratios;
    for (std::uint64_t seed : budget.seeds) {
      ExperimentConfig cfg = base;
      cfg.camera_reg = reg;
      cfg.seed = seed;
      if (log)
        *log << "# config_hash=" << cfg.hash() << " seed=" << seed
             << " reg=" << reg << "\n";
      Trainer t(cfg, data);
      for (long s = 0; s < budget.steps; ++s) {
        StepMetrics m = t.train_step();
        if (log && (s % 200 == 0 || s + 1 == budget.steps))
          *log << m.to_line() << "\n";
      }
      const auto post =
          t.camera_posterior_std(budget.posterior_draws, seed ^ 0xCA11ULL);
      const auto prior =
          t.camera_prior_std(budget.posterior_draws, seed ^ 0xCA12ULL);
      row.posterior_std = post;
      row.prior_std = prior;
      for (int i = 0; i < 6; ++i)
        ratios[i].push_back(prior[i] > 0 ? post[i] / prior[i] : 0.0);
    }
    for (int i = 0; i < 6; ++i) row.ratio[i] = median(ratios[i]);
    if (log) {
      *log << row.reg << " std_ratio=";
      for (int i = 0; i < 6; ++i) *log << (i ? "," : "") << row.ratio[i];
      *log << "\n";
    }
    rows.push_back(row);
  }
  return rows;
}

double dataset_true_depth_nfs(const std::string& dir, int bins) {
  namespace fs = std::filesystem;
  std::ifstream mf(fs::path(dir) / "manifest.json");
  if (!mf) throw Error("dataset_true_depth_nfs: missing manifest in " + dir);
  nlohmann::json manifest;
  mf >> manifest;
  const int n = manifest.at("n_scenes").get<int>();
  std::vector<std::vector<double>> maps;
  maps.reserve(n);
  for (int i = 0; i < n; ++i) {
    char buf[64];
    std::snprintf(buf, sizeof(buf), "depth_true_%04d.dpt", i);
    DepthGrid g = read_depth((fs::path(dir) / buf).string());
    maps.push_back(normalize_real_depth(g.d));
  }
  return nfs([&maps](int i) { return maps[i]; }, n, bins);
}

}  // namespace gp3
