#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "stcar/diagnostics.hpp"
#include "stcar/graph.hpp"
#include "stcar/model.hpp"
#include "stcar/sampler.hpp"
#include "stcar/simulate.hpp"

namespace stcar {

namespace fs = std::filesystem;

// ---------------------------------------------------------------- csv ----

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;

  int col(const std::string& name) const;  // -1 when absent
  int require(const std::string& name) const;
};

// Reads a numeric CSV with a mandatory header line; '#' lines are comments.
CsvTable read_csv(const fs::path& path);

std::string format_double(double v);  // round-trip exact "%.17g"

// ---------------------------------------------------------- provenance ----

struct Provenance {
  std::string version;
  std::uint64_t seed = 0;
  std::string inputs_digest;  // FNV-1a over the input files
};

std::string digest_files(const std::vector<fs::path>& paths);
std::string provenance_line(const Provenance& p);

// ------------------------------------------------------------- writing ----

// Collects content in memory and renames into place on commit, so failed
// runs never leave partial outputs.
class AtomicFile {
 public:
  explicit AtomicFile(fs::path target);
  ~AtomicFile();
  void write(const std::string& chunk) { buffer_ += chunk; }
  void commit();

 private:
  fs::path target_;
  std::string buffer_;
  bool committed_ = false;
};

// create the directory; refuse non-empty existing ones without overwrite
void prepare_output_dir(const fs::path& dir, bool overwrite);

// ----------------------------------------------------------- ingestion ----

// Edge-list CSV (header area_i,area_k) or dense 0/1 matrix CSV, detected
// from the header.
AreaGraph read_adjacency(const fs::path& path);
void write_adjacency_csv(const fs::path& path, const AreaGraph& g,
                         const Provenance& prov);

// Optional explicit border adjacency, header edge_a,edge_b over canonical
// edge indices.
EdgeGraph read_edge_adjacency(const fs::path& path, int n_edges);

// Data CSV with header area,time,observed,expected[,cov1..covp]; areas and
// times must form the complete grid {0..N-1} x {0..T-1}.
Dataset read_dataset_csv(const fs::path& path, AreaGraph graph);
void write_dataset_csv(const fs::path& path, const Dataset& d,
                       const Provenance& prov);

// -------------------------------------------------------- sample files ----

enum class SampleFormat { Csv, Binary };
const char* sample_format_name(SampleFormat f);
SampleFormat sample_format_from_name(const std::string& name);

// One CSV per parameter family (iter + canonical-order columns), or a
// single packed binary file with a versioned 16-byte header.
void write_samples(const fs::path& dir, const McmcSamples& samples,
                   SampleFormat format, const Provenance& prov);
McmcSamples read_samples(const fs::path& dir);

// run manifest: everything needed to reload and re-summarize a run
struct RunManifest {
  std::string version;
  std::uint64_t seed = 0;
  std::string inputs_digest;
  ModelVariant variant = ModelVariant::AdaptiveIndependent;
  SampleFormat format = SampleFormat::Csv;
  int n_kept = 0, n_areas = 0, n_periods = 0, n_covariates = 0, n_edges = 0;
  double mu = 15.0, epsilon = 1e-7;
  std::map<std::string, AcceptanceStats> acceptance;

  Provenance provenance() const { return {version, seed, inputs_digest}; }
};

void write_manifest(const fs::path& path, const RunManifest& m);
RunManifest read_manifest(const fs::path& path);

// ------------------------------------------------------------- reports ----

void write_boundary_report_csv(const fs::path& path, const BoundaryReport& r,
                               const Provenance& prov);
void write_fit_report_csv(const fs::path& path, const FitReport& r,
                          const Provenance& prov);
void write_fit_report_json(const fs::path& path, const FitReport& r,
                           const Provenance& prov);
void write_risk_summary_csv(const fs::path& path, const FitReport& r,
                            int n_areas, int n_periods,
                            const Provenance& prov);
void write_roc_csv(const fs::path& path, const RocCurve& roc,
                   const Provenance& prov);
void write_prior_curve_csv(const fs::path& path,
                           const std::vector<double>& zetas, double mu,
                           int n_grid, const Provenance& prov);
void write_matrix_market(const fs::path& path, const SparseSymMatrix& q);

// --------------------------------------------------- scenarios, config ----

// flat key = value file; keys mirror the scenario fields
Scenario read_scenario_file(const fs::path& path);
NamedScenario read_named_scenario(const fs::path& path);

// INI-style config: "key = value", optional [section] headers (sections are
// flattened; keys must be unique). '#' and ';' start comments.
std::map<std::string, std::string> read_config_file(const fs::path& path);

// ------------------------------------------------------- study outputs ----

void write_study_tables(const fs::path& dir, const StudyResult& res,
                        const Provenance& prov);

}  // namespace stcar
