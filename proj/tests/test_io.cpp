#include <filesystem>
#include <fstream>

#include "doctest.h"
#include "stcar/error.hpp"
#include "stcar/io.hpp"
#include "stcar/version.hpp"

using namespace stcar;

namespace {

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("stcar_io_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

void write_text(const fs::path& p, const std::string& text) {
  std::ofstream out(p);
  out << text;
}

std::string read_text(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return std::string(std::istreambuf_iterator<char>(in), {});
}

McmcSamples tiny_run() {
  const AreaGraph g = build_lattice(2, 2);
  std::vector<double> y{3, 5, 2, 7, 4, 1, 6, 2};
  std::vector<double> e(8, 4.0);
  Dataset d = make_dataset(4, 2, y, e, {}, 0, g);
  ModelSpec spec;
  spec.variant = ModelVariant::AdaptiveIndependent;
  ChainConfig cfg;
  cfg.n_sample = 60;
  cfg.burnin = 20;
  cfg.thin = 2;
  cfg.rng_seed = 9;
  return run_chain(d, spec, cfg);
}

}  // namespace

TEST_CASE("csv parsing") {
  const fs::path dir = fresh_dir("csv");
  write_text(dir / "t.csv", "# comment\na,b\n1,2\n3.5,-4\n");
  const CsvTable t = read_csv(dir / "t.csv");
  CHECK(t.header == std::vector<std::string>{"a", "b"});
  REQUIRE(t.rows.size() == 2);
  CHECK(t.rows[1][0] == 3.5);
  CHECK(t.require("a") == 0);
  CHECK_THROWS_WITH_AS(t.require("missing"),
                       doctest::Contains("missing column 'missing'"), Error);
  write_text(dir / "bad.csv", "a,b\n1\n");
  CHECK_THROWS_AS(read_csv(dir / "bad.csv"), Error);
  write_text(dir / "alpha.csv", "a\nnotanumber\n");
  CHECK_THROWS_AS(read_csv(dir / "alpha.csv"), Error);
}

TEST_CASE("format_double round trips") {
  for (double v : {1.0, -0.1, 3.141592653589793, 1e-300, 75.0, 0.9999997}) {
    const std::string s = format_double(v);
    CHECK(std::stod(s) == v);
  }
}

TEST_CASE("adjacency ingestion") {
  const fs::path dir = fresh_dir("adj");

  SUBCASE("edge list") {
    write_text(dir / "w.csv", "area_i,area_k\n0,1\n1,2\n");
    const AreaGraph g = read_adjacency(dir / "w.csv");
    CHECK(g.n_areas == 3);
    CHECK(g.degree(1) == 2);
  }
  SUBCASE("dense matrix") {
    write_text(dir / "w.csv", "0,1,0\n1,0,1\n0,1,0\n");
    const AreaGraph g = read_adjacency(dir / "w.csv");
    CHECK(g.n_areas == 3);
    CHECK(g.degree(1) == 2);
  }
  SUBCASE("dense matrix validation") {
    write_text(dir / "asym.csv", "0,1\n0,0\n");
    CHECK_THROWS_AS(read_adjacency(dir / "asym.csv"), Error);
    write_text(dir / "diag.csv", "1,1\n1,0\n");
    CHECK_THROWS_AS(read_adjacency(dir / "diag.csv"), Error);
    write_text(dir / "frac.csv", "0,0.5\n0.5,0\n");
    CHECK_THROWS_AS(read_adjacency(dir / "frac.csv"), Error);
  }
  SUBCASE("round trip through the writer") {
    const AreaGraph g = build_lattice(3, 4);
    write_adjacency_csv(dir / "out.csv", g, {kVersion, 7, "deadbeef"});
    const AreaGraph back = read_adjacency(dir / "out.csv");
    CHECK(back.neighbors == g.neighbors);
  }
  SUBCASE("edge adjacency file") {
    write_text(dir / "e.csv", "edge_a,edge_b\n0,1\n");
    const EdgeGraph eg = read_edge_adjacency(dir / "e.csv", 3);
    CHECK(eg.degree(0) == 1);
    CHECK(eg.degree(2) == 0);
  }
}

TEST_CASE("dataset csv round trip and validation") {
  const fs::path dir = fresh_dir("data");
  const AreaGraph g = build_lattice(2, 2);
  std::vector<double> y{1, 2, 3, 4, 5, 6, 7, 8};
  std::vector<double> e{1, 1, 2, 2, 3, 3, 4, 4};
  std::vector<double> x{0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8};
  Dataset d = make_dataset(4, 2, y, e, x, 1, g);
  write_dataset_csv(dir / "d.csv", d, {kVersion, 1, "0"});
  const Dataset back = read_dataset_csv(dir / "d.csv", g);
  CHECK(back.counts == d.counts);
  CHECK(back.expected == d.expected);
  CHECK(back.design == d.design);
  CHECK(back.n_covariates == 1);

  SUBCASE("missing column is a schema error naming it") {
    write_text(dir / "bad.csv", "area,time,observed\n0,0,1\n");
    CHECK_THROWS_WITH_AS(read_dataset_csv(dir / "bad.csv", g),
                         doctest::Contains("expected"), Error);
  }
  SUBCASE("incomplete grid is rejected") {
    write_text(dir / "gap.csv",
               "area,time,observed,expected\n0,0,1,1\n1,0,1,1\n2,0,1,1\n");
    CHECK_THROWS_AS(read_dataset_csv(dir / "gap.csv", g), Error);
  }
  SUBCASE("duplicate cell is rejected") {
    write_text(dir / "dup.csv",
               "area,time,observed,expected\n0,0,1,1\n0,0,1,1\n1,0,1,1\n"
               "3,0,1,1\n");
    CHECK_THROWS_AS(read_dataset_csv(dir / "dup.csv", g), Error);
  }
}

TEST_CASE("sample persistence round trips bitwise") {
  const McmcSamples samples = tiny_run();
  const Provenance prov{kVersion, 9, "cafe"};
  RunManifest m;
  m.version = kVersion;
  m.seed = 9;
  m.inputs_digest = "cafe";
  m.variant = samples.variant;
  m.n_kept = samples.n_kept;
  m.n_areas = samples.n_areas;
  m.n_periods = samples.n_periods;
  m.n_covariates = samples.n_covariates;
  m.n_edges = samples.n_edges;
  m.acceptance = samples.acceptance;

  for (SampleFormat fmt : {SampleFormat::Csv, SampleFormat::Binary}) {
    CAPTURE(sample_format_name(fmt));
    const fs::path dir =
        fresh_dir(std::string("samples_") + sample_format_name(fmt));
    m.format = fmt;
    write_manifest(dir / "manifest.json", m);
    write_samples(dir, samples, fmt, prov);
    const McmcSamples back = read_samples(dir);
    CHECK(back.n_kept == samples.n_kept);
    CHECK(back.variant == samples.variant);
    CHECK(back.tau2 == samples.tau2);
    CHECK(back.alpha == samples.alpha);
    CHECK(back.zeta2 == samples.zeta2);
    CHECK(back.w == samples.w);
    CHECK(back.phi == samples.phi);
    CHECK(back.deviance == samples.deviance);
    CHECK(back.acceptance.at("phi").attempts ==
          samples.acceptance.at("phi").attempts);
  }
}

TEST_CASE("truncated sample files fail cleanly") {
  const McmcSamples samples = tiny_run();
  const Provenance prov{kVersion, 9, "cafe"};
  RunManifest m;
  m.version = kVersion;
  m.seed = 9;
  m.inputs_digest = "cafe";
  m.variant = samples.variant;
  m.format = SampleFormat::Csv;
  m.n_kept = samples.n_kept;
  m.n_areas = samples.n_areas;
  m.n_periods = samples.n_periods;
  m.n_covariates = samples.n_covariates;
  m.n_edges = samples.n_edges;

  const fs::path dir = fresh_dir("truncated");
  write_manifest(dir / "manifest.json", m);
  write_samples(dir, samples, SampleFormat::Csv, prov);
  // chop the phi file in half
  std::string contents = read_text(dir / "samples_phi.csv");
  contents.resize(contents.size() / 2);
  while (!contents.empty() && contents.back() != '\n') contents.pop_back();
  write_text(dir / "samples_phi.csv", contents);
  CHECK_THROWS_AS(read_samples(dir), Error);

  // binary too
  const fs::path bdir = fresh_dir("truncated_bin");
  m.format = SampleFormat::Binary;
  write_manifest(bdir / "manifest.json", m);
  write_samples(bdir, samples, SampleFormat::Binary, prov);
  std::string raw = read_text(bdir / "samples.bin");
  raw.resize(raw.size() - 37);
  std::ofstream(bdir / "samples.bin", std::ios::binary) << raw;
  CHECK_THROWS_AS(read_samples(bdir), Error);
}

TEST_CASE("scenario files") {
  const fs::path dir = fresh_dir("scenario");
  write_text(dir / "s.cfg",
             "# desk scale\nT = 5\nA = 2\nE = 75\nnrow = 10\nncol = 10\n"
             "high_blocks = 1-3:1-3;6-8:6-8\nreplicates = 5\nseed = 123\n");
  const NamedScenario ns = read_named_scenario(dir / "s.cfg");
  CHECK(ns.name == "s");
  CHECK(ns.scenario.periods == 5);
  CHECK(ns.scenario.risk_ratio == 2.0);
  CHECK(ns.scenario.expected_size == 75.0);
  CHECK(ns.scenario.high_blocks.size() == 2);
  CHECK(ns.scenario.high_blocks[1].r0 == 6);
  CHECK(ns.scenario.seed == 123);

  write_text(dir / "bad.cfg", "T = 5\nbogus_key = 1\n");
  CHECK_THROWS_WITH_AS(read_scenario_file(dir / "bad.cfg"),
                       doctest::Contains("invalid scenario key"), Error);

  write_text(dir / "flat.cfg", "A = 1\nT = 2\n");
  const Scenario flat = read_scenario_file(dir / "flat.cfg");
  CHECK(flat.high_blocks.empty());
}

TEST_CASE("config files") {
  const fs::path dir = fresh_dir("config");
  write_text(dir / "c.ini",
             "[chain]\nn-sample = 5000\n# comment\nburnin = 100\n[model]\n"
             "mu = 12\n");
  const auto kv = read_config_file(dir / "c.ini");
  CHECK(kv.at("n-sample") == "5000");
  CHECK(kv.at("mu") == "12");
  write_text(dir / "dup.ini", "a = 1\na = 2\n");
  CHECK_THROWS_AS(read_config_file(dir / "dup.ini"), Error);
}

TEST_CASE("output directory guard") {
  const fs::path dir = fresh_dir("outguard") / "sub";
  prepare_output_dir(dir, false);  // creates
  prepare_output_dir(dir, false);  // empty, fine
  write_text(dir / "x.txt", "x");
  CHECK_THROWS_AS(prepare_output_dir(dir, false), Error);
  prepare_output_dir(dir, true);  // overwrite allowed
}

TEST_CASE("provenance digest is deterministic and content sensitive") {
  const fs::path dir = fresh_dir("digest");
  write_text(dir / "a.txt", "hello");
  write_text(dir / "b.txt", "world");
  const std::string d1 = digest_files({dir / "a.txt", dir / "b.txt"});
  const std::string d2 = digest_files({dir / "a.txt", dir / "b.txt"});
  CHECK(d1 == d2);
  write_text(dir / "b.txt", "world!");
  CHECK(digest_files({dir / "a.txt", dir / "b.txt"}) != d1);
  const Provenance p{kVersion, 42, d1};
  CHECK(provenance_line(p).substr(0, 8) == "# stcar ");
}

TEST_CASE("matrix market dump") {
  const fs::path dir = fresh_dir("mm");
  const AreaGraph g = build_area_graph({{0, 1}}, 2);
  const EdgeSet es = build_edge_set(g);
  const SparseSymMatrix q =
      adaptive_precision(g, es, std::vector<double>{0.5}, 0.1);
  write_matrix_market(dir / "q.mtx", q);
  const std::string text = read_text(dir / "q.mtx");
  CHECK(text.find("%%MatrixMarket matrix coordinate real symmetric") == 0);
  CHECK(text.find("2 2 3") != std::string::npos);
}
