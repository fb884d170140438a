// Scaled simulation-replication acceptance suite. Fits the desk-scale
// scenarios with fixed seeds and checks the headline study patterns.

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "stcar/diagnostics.hpp"
#include "stcar/io.hpp"
#include "stcar/sampler.hpp"
#include "stcar/simulate.hpp"

using namespace stcar;
namespace fs = std::filesystem;

namespace {

int failures = 0;

void report(int number, const char* name, bool pass,
            const std::string& detail) {
  std::printf("criterion %d [%s]: %s (%s)\n", number, name,
              pass ? "PASS" : "FAIL", detail.c_str());
  std::fflush(stdout);
  if (!pass) ++failures;
}

std::string fmt(double v) {
  char buf[32];
  std::snprintf(buf, sizeof(buf), "%.4f", v);
  return buf;
}

const StudyRow& row_of(const StudyResult& res, const std::string& model) {
  for (const auto& row : res.rows)
    if (row.model == model) return row;
  throw std::runtime_error("missing study row " + model);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

}  // namespace

int main() {
  Scenario a2;
  a2.periods = 5;
  a2.risk_ratio = 2.0;
  a2.expected_size = 75.0;
  a2.nrow = 10;
  a2.ncol = 10;
  a2.high_blocks = {{1, 3, 1, 3}, {6, 8, 6, 8}};
  a2.replicates = 5;
  a2.seed = 20240810;

  Scenario a1 = a2;
  a1.risk_ratio = 1.0;
  a1.high_blocks.clear();

  ChainConfig cfg;
  cfg.n_sample = 6000;
  cfg.burnin = 2000;
  cfg.thin = 4;

  std::printf("running the A=2 scenario: 5 replicates x 3 models ...\n");
  std::fflush(stdout);
  const StudyResult res_a2 =
      run_study({{"a2", a2}},
                {ModelVariant::AdaptiveIndependent, ModelVariant::GlobalAR,
                 ModelVariant::AdaptiveClustered},
                cfg, 4);
  std::printf("running the A=1 scenario: 5 replicates x 1 model ...\n");
  std::fflush(stdout);
  const StudyResult res_a1 =
      run_study({{"a1", a1}}, {ModelVariant::AdaptiveIndependent}, cfg, 4);

  const StudyRow& adaptive = row_of(res_a2, "adaptive");
  const StudyRow& global = row_of(res_a2, "global");
  const StudyRow& clustered = row_of(res_a2, "adaptive-clustered");
  const StudyRow& flat = row_of(res_a1, "adaptive");

  // 8: boundary recovery
  report(8, "boundary recovery AUC",
         adaptive.n_ok == 5 && adaptive.boundary_metric_is_auc &&
             adaptive.boundary_median >= 0.90,
         "median AUC " + fmt(adaptive.boundary_median) + " (q10 " +
             fmt(adaptive.boundary_q10) + ") over " +
             std::to_string(adaptive.n_ok) + " replicates");

  // 9: adaptive beats global on RMSE, and on DIC in >= 4 of 5 replicates
  {
    int dic_wins = 0, pairs = 0;
    for (const auto& ra : res_a2.replicates) {
      if (ra.model != "adaptive" || !ra.score.ok) continue;
      for (const auto& rg : res_a2.replicates) {
        if (rg.model != "global" || rg.replicate != ra.replicate ||
            !rg.score.ok)
          continue;
        ++pairs;
        if (ra.score.dic <= rg.score.dic) ++dic_wins;
      }
    }
    const bool pass = adaptive.rmse_median <= global.rmse_median &&
                      dic_wins >= 4 && pairs == 5;
    report(9, "adaptive beats global", pass,
           "RMSE " + fmt(adaptive.rmse_median) + " vs " +
               fmt(global.rmse_median) + "; DIC wins " +
               std::to_string(dic_wins) + "/" + std::to_string(pairs));
  }

  // 10: no-boundary specificity
  report(10, "no-boundary specificity",
         flat.n_ok == 5 && !flat.boundary_metric_is_auc &&
             flat.boundary_median >= 0.90,
         "median specificity " + fmt(flat.boundary_median) + " (q10 " +
             fmt(flat.boundary_q10) + ")");

  // 11: clustered prior degrades boundary recovery
  report(11, "clustered-prior degradation",
         clustered.boundary_metric_is_auc &&
             clustered.boundary_median < adaptive.boundary_median,
         "clustered AUC " + fmt(clustered.boundary_median) +
             " < independent AUC " + fmt(adaptive.boundary_median));

  // 12: coverage stays in the widened desk-scale band
  report(12, "coverage sanity",
         adaptive.coverage_median >= 0.85 && adaptive.coverage_median <= 1.0,
         "median coverage " + fmt(adaptive.coverage_median) + " (q10 " +
             fmt(adaptive.coverage_q10) + ")");

  // 13: byte-identical sample files on rerun with the same seed
  {
    const auto [d, truth] = generate_dataset(a2, replicate_data_seed(a2, 0));
    ChainConfig ccfg = cfg;
    ccfg.rng_seed = replicate_chain_seed(a2, 0, 0);
    ModelSpec spec;
    spec.variant = ModelVariant::AdaptiveIndependent;
    const fs::path base =
        fs::temp_directory_path() / "stcar_acceptance_determinism";
    fs::remove_all(base);
    fs::create_directories(base / "run1");
    fs::create_directories(base / "run2");
    const Provenance prov{"acceptance", ccfg.rng_seed, "fixed"};
    write_samples(base / "run1", run_chain(d, spec, ccfg), SampleFormat::Csv,
                  prov);
    write_samples(base / "run2", run_chain(d, spec, ccfg), SampleFormat::Csv,
                  prov);
    bool identical = true;
    std::string first_diff;
    for (const auto& entry : fs::directory_iterator(base / "run1")) {
      const auto name = entry.path().filename();
      if (slurp(entry.path()) != slurp(base / "run2" / name)) {
        identical = false;
        first_diff = name.string();
      }
    }
    report(13, "determinism", identical,
           identical ? "all sample files byte-identical on rerun"
                     : "first differing file: " + first_diff);
  }

  if (failures > 0) {
    std::printf("%d criterion(s) FAILED\n", failures);
    return 1;
  }
  std::printf("all scaled-replication criteria passed\n");
  return 0;
}
