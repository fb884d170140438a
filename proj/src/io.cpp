#include "stcar/io.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "stcar/error.hpp"
#include "stcar/version.hpp"

namespace stcar {

using nlohmann::json;

// ---------------------------------------------------------------- csv ----

namespace {

std::string trim(const std::string& s) {
  std::size_t a = 0, b = s.size();
  while (a < b && std::isspace(static_cast<unsigned char>(s[a]))) ++a;
  while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1]))) --b;
  return s.substr(a, b - a);
}

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == sep) {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur += c;
    }
  }
  out.push_back(trim(cur));
  return out;
}

double parse_number(const std::string& tok, const fs::path& path) {
  if (tok.empty()) throw_schema(path.string() + ": empty numeric cell");
  char* end = nullptr;
  const double v = std::strtod(tok.c_str(), &end);
  if (end != tok.c_str() + tok.size())
    throw_schema(path.string() + ": non-numeric cell '" + tok + "'");
  return v;
}

}  // namespace

int CsvTable::col(const std::string& name) const {
  for (std::size_t i = 0; i < header.size(); ++i)
    if (header[i] == name) return static_cast<int>(i);
  return -1;
}

int CsvTable::require(const std::string& name) const {
  const int c = col(name);
  if (c < 0) throw_schema("missing column '" + name + "'");
  return c;
}

CsvTable read_csv(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  CsvTable t;
  std::string line;
  bool have_header = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    if (!have_header) {
      t.header = split(stripped, ',');
      have_header = true;
      continue;
    }
    const auto cells = split(stripped, ',');
    if (cells.size() != t.header.size())
      throw_schema(path.string() + ": row with " +
                   std::to_string(cells.size()) + " cells, expected " +
                   std::to_string(t.header.size()));
    std::vector<double> row(cells.size());
    for (std::size_t c = 0; c < cells.size(); ++c)
      row[c] = parse_number(cells[c], path);
    t.rows.push_back(std::move(row));
  }
  if (!have_header) throw_schema(path.string() + ": missing header line");
  return t;
}

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

// ---------------------------------------------------------- provenance ----

std::string digest_files(const std::vector<fs::path>& paths) {
  std::uint64_t h = 1469598103934665603ULL;
  auto mix = [&h](const char* data, std::size_t n) {
    for (std::size_t i = 0; i < n; ++i) {
      h ^= static_cast<unsigned char>(data[i]);
      h *= 1099511628211ULL;
    }
  };
  for (const auto& p : paths) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw_io("cannot open " + p.string() + " for digest");
    char buf[65536];
    while (in.read(buf, sizeof(buf)) || in.gcount() > 0)
      mix(buf, static_cast<std::size_t>(in.gcount()));
  }
  char out[17];
  std::snprintf(out, sizeof(out), "%016llx",
                static_cast<unsigned long long>(h));
  return out;
}

std::string provenance_line(const Provenance& p) {
  return "# stcar " + p.version + " seed=" + std::to_string(p.seed) +
         " inputs=" + p.inputs_digest + "\n";
}

// ------------------------------------------------------------- writing ----

AtomicFile::AtomicFile(fs::path target) : target_(std::move(target)) {}

AtomicFile::~AtomicFile() = default;

void AtomicFile::commit() {
  if (committed_) return;
  const fs::path tmp = target_.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary);
    if (!out) throw_io("cannot write " + tmp.string());
    out.write(buffer_.data(), static_cast<std::streamsize>(buffer_.size()));
    if (!out) throw_io("short write to " + tmp.string());
  }
  std::error_code ec;
  fs::rename(tmp, target_, ec);
  if (ec) throw_io("cannot rename " + tmp.string() + ": " + ec.message());
  committed_ = true;
}

void prepare_output_dir(const fs::path& dir, bool overwrite) {
  std::error_code ec;
  if (fs::exists(dir)) {
    if (!fs::is_directory(dir))
      throw_io(dir.string() + " exists and is not a directory");
    if (!fs::is_empty(dir) && !overwrite)
      throw_io(dir.string() +
               " is not empty; pass --overwrite to reuse it");
  } else {
    fs::create_directories(dir, ec);
    if (ec) throw_io("cannot create " + dir.string() + ": " + ec.message());
  }
}

// ----------------------------------------------------------- ingestion ----

AreaGraph read_adjacency(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  std::vector<std::string> lines;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    const std::string stripped = trim(line);
    if (stripped.empty() || stripped[0] == '#') continue;
    lines.push_back(stripped);
  }
  if (lines.empty()) throw_schema(path.string() + ": empty adjacency file");

  std::string head = lines[0];
  head.erase(std::remove_if(head.begin(), head.end(), ::isspace), head.end());
  if (head == "area_i,area_k") {
    std::vector<std::pair<int, int>> pairs;
    int max_area = 0;
    for (std::size_t r = 1; r < lines.size(); ++r) {
      const auto cells = split(lines[r], ',');
      if (cells.size() != 2)
        throw_schema(path.string() + ": edge row needs two cells");
      const double a = parse_number(cells[0], path);
      const double b = parse_number(cells[1], path);
      if (a != std::floor(a) || b != std::floor(b))
        throw_schema(path.string() + ": non-integer area index");
      pairs.emplace_back(static_cast<int>(a), static_cast<int>(b));
      max_area = std::max({max_area, static_cast<int>(a), static_cast<int>(b)});
    }
    return build_area_graph(pairs, max_area + 1);
  }

  // dense 0/1 matrix, no header
  const int n = static_cast<int>(lines.size());
  std::vector<std::vector<double>> m;
  for (const auto& l : lines) {
    const auto cells = split(l, ',');
    if (static_cast<int>(cells.size()) != n)
      throw_schema(path.string() + ": dense adjacency must be square");
    std::vector<double> row(n);
    for (int c = 0; c < n; ++c) row[c] = parse_number(cells[c], path);
    m.push_back(std::move(row));
  }
  std::vector<std::pair<int, int>> pairs;
  for (int i = 0; i < n; ++i)
    for (int k = 0; k < n; ++k) {
      const double v = m[i][k];
      if (v != 0.0 && v != 1.0)
        throw_value(path.string() + ": adjacency entries must be 0 or 1");
      if (v != m[k][i])
        throw_value(path.string() + ": adjacency matrix must be symmetric");
      if (i == k && v != 0.0)
        throw_value(path.string() + ": adjacency diagonal must be zero");
      if (i < k && v == 1.0) pairs.emplace_back(i, k);
    }
  return build_area_graph(pairs, n);
}

void write_adjacency_csv(const fs::path& path, const AreaGraph& g,
                         const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("area_i,area_k\n");
  for (int i = 0; i < g.n_areas; ++i)
    for (int k : g.neighbors[i])
      if (i < k)
        f.write(std::to_string(i) + "," + std::to_string(k) + "\n");
  f.commit();
}

EdgeGraph read_edge_adjacency(const fs::path& path, int n_edges) {
  const CsvTable t = read_csv(path);
  const int ca = t.require("edge_a");
  const int cb = t.require("edge_b");
  std::vector<std::pair<int, int>> pairs;
  for (const auto& row : t.rows) {
    if (row[ca] != std::floor(row[ca]) || row[cb] != std::floor(row[cb]))
      throw_schema(path.string() + ": non-integer edge index");
    pairs.emplace_back(static_cast<int>(row[ca]), static_cast<int>(row[cb]));
  }
  return build_edge_graph_from_pairs(pairs, n_edges);
}

Dataset read_dataset_csv(const fs::path& path, AreaGraph graph) {
  const CsvTable t = read_csv(path);
  const int ca = t.require("area");
  const int ct = t.require("time");
  const int cy = t.require("observed");
  const int ce = t.require("expected");
  std::vector<int> cov_cols;
  for (std::size_t c = 0; c < t.header.size(); ++c)
    if (static_cast<int>(c) != ca && static_cast<int>(c) != ct &&
        static_cast<int>(c) != cy && static_cast<int>(c) != ce)
      cov_cols.push_back(static_cast<int>(c));
  const int p = static_cast<int>(cov_cols.size());

  int n_areas = 0, n_periods = 0;
  for (const auto& row : t.rows) {
    if (row[ca] != std::floor(row[ca]) || row[ct] != std::floor(row[ct]))
      throw_schema(path.string() + ": non-integer area or time label");
    n_areas = std::max(n_areas, static_cast<int>(row[ca]) + 1);
    n_periods = std::max(n_periods, static_cast<int>(row[ct]) + 1);
  }
  if (n_areas < 1 || n_periods < 1)
    throw_schema(path.string() + ": no data rows");
  const std::size_t cells =
      static_cast<std::size_t>(n_areas) * n_periods;
  if (t.rows.size() != cells)
    throw_schema(path.string() + ": expected complete grid of " +
                 std::to_string(cells) + " cells (areas 0.." +
                 std::to_string(n_areas - 1) + " x times 0.." +
                 std::to_string(n_periods - 1) + "), found " +
                 std::to_string(t.rows.size()) + " rows");
  std::vector<char> seen(cells, 0);
  std::vector<double> y(cells), e(cells), x(cells * p);
  for (const auto& row : t.rows) {
    const int a = static_cast<int>(row[ca]);
    const int j = static_cast<int>(row[ct]);
    if (a < 0 || j < 0)
      throw_schema(path.string() + ": negative area or time label");
    const std::size_t cell = static_cast<std::size_t>(j) * n_areas + a;
    if (seen[cell])
      throw_schema(path.string() + ": duplicate cell area=" +
                   std::to_string(a) + " time=" + std::to_string(j));
    seen[cell] = 1;
    y[cell] = row[cy];
    e[cell] = row[ce];
    for (int r = 0; r < p; ++r) x[cell * p + r] = row[cov_cols[r]];
  }
  return make_dataset(n_areas, n_periods, std::move(y), std::move(e),
                      std::move(x), p, std::move(graph));
}

void write_dataset_csv(const fs::path& path, const Dataset& d,
                       const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  std::string header = "area,time,observed,expected";
  for (int r = 0; r < d.n_covariates; ++r)
    header += ",cov" + std::to_string(r + 1);
  f.write(header + "\n");
  for (int a = 0; a < d.n_areas; ++a)
    for (int j = 0; j < d.n_periods; ++j) {
      const std::size_t cell = static_cast<std::size_t>(j) * d.n_areas + a;
      std::string row = std::to_string(a) + "," + std::to_string(j) + "," +
                        format_double(d.counts[cell]) + "," +
                        format_double(d.expected[cell]);
      for (int r = 0; r < d.n_covariates; ++r)
        row += "," + format_double(d.design[cell * d.n_covariates + r]);
      f.write(row + "\n");
    }
  f.commit();
}

// -------------------------------------------------------- sample files ----

const char* sample_format_name(SampleFormat f) {
  return f == SampleFormat::Csv ? "csv" : "bin";
}

SampleFormat sample_format_from_name(const std::string& name) {
  if (name == "csv") return SampleFormat::Csv;
  if (name == "bin") return SampleFormat::Binary;
  throw_value("unknown sample format '" + name + "' (expected csv|bin)");
}

namespace {

struct Section {
  std::string name;
  std::size_t rows, cols;
  const std::vector<double>* data;
};

std::vector<Section> sample_sections(const McmcSamples& s) {
  std::vector<Section> out;
  const std::size_t kept = static_cast<std::size_t>(s.n_kept);
  if (s.n_covariates > 0)
    out.push_back({"beta", kept, static_cast<std::size_t>(s.n_covariates),
                   &s.beta});
  out.push_back({"tau2", kept, 1, &s.tau2});
  out.push_back({"alpha", kept, 1, &s.alpha});
  if (!s.zeta2.empty()) out.push_back({"zeta2", kept, 1, &s.zeta2});
  if (!s.rho.empty()) out.push_back({"rho", kept, 1, &s.rho});
  if (!s.w.empty())
    out.push_back({"w", kept, static_cast<std::size_t>(s.n_edges), &s.w});
  out.push_back(
      {"phi", kept, static_cast<std::size_t>(s.n_cells()), &s.phi});
  out.push_back({"deviance", kept, 1, &s.deviance});
  return out;
}

std::vector<double>* section_target(McmcSamples& s, const std::string& name) {
  if (name == "beta") return &s.beta;
  if (name == "tau2") return &s.tau2;
  if (name == "alpha") return &s.alpha;
  if (name == "zeta2") return &s.zeta2;
  if (name == "rho") return &s.rho;
  if (name == "w") return &s.w;
  if (name == "phi") return &s.phi;
  if (name == "deviance") return &s.deviance;
  return nullptr;
}

void write_sample_csv(const fs::path& path, const Section& sec,
                      const std::vector<std::string>& colnames,
                      const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  std::string header = "iter";
  for (const auto& c : colnames) header += "," + c;
  f.write(header + "\n");
  for (std::size_t t = 0; t < sec.rows; ++t) {
    std::string row = std::to_string(t);
    for (std::size_t c = 0; c < sec.cols; ++c)
      row += "," + format_double((*sec.data)[t * sec.cols + c]);
    f.write(row + "\n");
  }
  f.commit();
}

constexpr char kBinaryMagic[8] = {'S', 'T', 'C', 'A', 'R', 'B', '0', '1'};

template <typename T>
void append_raw(std::string& buf, const T& v) {
  buf.append(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <typename T>
T read_raw(std::ifstream& in, const fs::path& path) {
  T v;
  in.read(reinterpret_cast<char*>(&v), sizeof(T));
  if (!in) throw_io(path.string() + ": truncated sample file");
  return v;
}

}  // namespace

void write_samples(const fs::path& dir, const McmcSamples& samples,
                   SampleFormat format, const Provenance& prov) {
  const auto sections = sample_sections(samples);
  if (format == SampleFormat::Csv) {
    for (const auto& sec : sections) {
      std::vector<std::string> cols;
      if (sec.cols == 1) {
        cols.push_back(sec.name);
      } else {
        for (std::size_t c = 0; c < sec.cols; ++c)
          cols.push_back(sec.name + std::to_string(c));
      }
      write_sample_csv(dir / ("samples_" + sec.name + ".csv"), sec, cols,
                       prov);
    }
    return;
  }
  std::string buf;
  buf.append(kBinaryMagic, sizeof(kBinaryMagic));
  append_raw<std::uint16_t>(buf, 1);       // format version
  append_raw<std::uint16_t>(buf, 0xFEFF);  // byte-order tag
  append_raw<std::uint32_t>(buf, static_cast<std::uint32_t>(sections.size()));
  const std::string prov_str = provenance_line(prov);
  append_raw<std::uint32_t>(buf, static_cast<std::uint32_t>(prov_str.size()));
  buf.append(prov_str);
  for (const auto& sec : sections) {
    append_raw<std::uint32_t>(buf, static_cast<std::uint32_t>(sec.name.size()));
    buf.append(sec.name);
    append_raw<std::uint64_t>(buf, sec.rows);
    append_raw<std::uint64_t>(buf, sec.cols);
    buf.append(reinterpret_cast<const char*>(sec.data->data()),
               sec.data->size() * sizeof(double));
  }
  AtomicFile f(dir / "samples.bin");
  f.write(buf);
  f.commit();
}

McmcSamples read_samples(const fs::path& dir) {
  const RunManifest m = read_manifest(dir / "manifest.json");
  McmcSamples s;
  s.n_kept = m.n_kept;
  s.n_areas = m.n_areas;
  s.n_periods = m.n_periods;
  s.n_covariates = m.n_covariates;
  s.n_edges = m.n_edges;
  s.variant = m.variant;
  s.acceptance = m.acceptance;

  auto expected_sections = [&]() {
    McmcSamples shape;
    shape.n_kept = m.n_kept;
    shape.n_areas = m.n_areas;
    shape.n_periods = m.n_periods;
    shape.n_covariates = m.n_covariates;
    shape.n_edges = m.n_edges;
    shape.variant = m.variant;
    shape.beta.resize(m.n_covariates > 0 ? 1 : 0);
    shape.zeta2.resize(m.variant != ModelVariant::GlobalAR ? 1 : 0);
    shape.w.resize(m.variant != ModelVariant::GlobalAR ? 1 : 0);
    shape.rho.resize(m.variant != ModelVariant::AdaptiveIndependent ? 1 : 0);
    shape.tau2.resize(1);
    shape.alpha.resize(1);
    shape.phi.resize(1);
    shape.deviance.resize(1);
    return sample_sections(shape);
  }();

  if (m.format == SampleFormat::Csv) {
    for (const auto& sec : expected_sections) {
      const fs::path path = dir / ("samples_" + sec.name + ".csv");
      const CsvTable t = read_csv(path);
      const std::size_t want_cols =
          sec.name == "beta" ? static_cast<std::size_t>(m.n_covariates)
          : sec.name == "w"  ? static_cast<std::size_t>(m.n_edges)
          : sec.name == "phi"
              ? static_cast<std::size_t>(m.n_areas) * m.n_periods
              : 1;
      if (t.rows.size() != static_cast<std::size_t>(m.n_kept) ||
          t.header.size() != want_cols + 1)
        throw_io(path.string() + ": sample file shape does not match the "
                                 "manifest (truncated or corrupt)");
      std::vector<double>* target = section_target(s, sec.name);
      target->resize(static_cast<std::size_t>(m.n_kept) * want_cols);
      for (std::size_t t_row = 0; t_row < t.rows.size(); ++t_row)
        for (std::size_t c = 0; c < want_cols; ++c)
          (*target)[t_row * want_cols + c] = t.rows[t_row][c + 1];
    }
    return s;
  }

  const fs::path path = dir / "samples.bin";
  std::ifstream in(path, std::ios::binary);
  if (!in) throw_io("cannot open " + path.string());
  char magic[8];
  in.read(magic, 8);
  if (!in || std::memcmp(magic, kBinaryMagic, 8) != 0)
    throw_io(path.string() + ": bad magic header");
  const auto version = read_raw<std::uint16_t>(in, path);
  const auto endian = read_raw<std::uint16_t>(in, path);
  if (version != 1 || endian != 0xFEFF)
    throw_io(path.string() + ": unsupported sample file version");
  const auto n_sections = read_raw<std::uint32_t>(in, path);
  const auto prov_len = read_raw<std::uint32_t>(in, path);
  in.ignore(prov_len);  // provenance line, informational
  if (!in) throw_io(path.string() + ": truncated sample file");
  for (std::uint32_t k = 0; k < n_sections; ++k) {
    const auto name_len = read_raw<std::uint32_t>(in, path);
    std::string name(name_len, '\0');
    in.read(name.data(), name_len);
    if (!in) throw_io(path.string() + ": truncated sample file");
    const auto rows = read_raw<std::uint64_t>(in, path);
    const auto cols = read_raw<std::uint64_t>(in, path);
    std::vector<double>* target = section_target(s, name);
    if (target == nullptr)
      throw_io(path.string() + ": unknown section '" + name + "'");
    if (rows != static_cast<std::uint64_t>(m.n_kept))
      throw_io(path.string() + ": section '" + name +
               "' row count does not match the manifest");
    target->resize(rows * cols);
    in.read(reinterpret_cast<char*>(target->data()),
            static_cast<std::streamsize>(rows * cols * sizeof(double)));
    if (!in) throw_io(path.string() + ": truncated sample file");
  }
  return s;
}

void write_manifest(const fs::path& path, const RunManifest& m) {
  json j;
  j["version"] = m.version;
  j["seed"] = m.seed;
  j["inputs_digest"] = m.inputs_digest;
  j["variant"] = variant_name(m.variant);
  j["format"] = sample_format_name(m.format);
  j["n_kept"] = m.n_kept;
  j["n_areas"] = m.n_areas;
  j["n_periods"] = m.n_periods;
  j["n_covariates"] = m.n_covariates;
  j["n_edges"] = m.n_edges;
  j["mu"] = m.mu;
  j["epsilon"] = m.epsilon;
  json acc = json::object();
  for (const auto& [family, stats] : m.acceptance)
    acc[family] = {{"attempts", stats.attempts}, {"accepts", stats.accepts}};
  j["acceptance"] = acc;
  AtomicFile f(path);
  f.write(j.dump(2));
  f.write("\n");
  f.commit();
}

RunManifest read_manifest(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  json j;
  try {
    in >> j;
  } catch (const json::exception& ex) {
    throw_io(path.string() + ": invalid manifest: " + ex.what());
  }
  RunManifest m;
  try {
    m.version = j.at("version").get<std::string>();
    m.seed = j.at("seed").get<std::uint64_t>();
    m.inputs_digest = j.at("inputs_digest").get<std::string>();
    m.variant = variant_from_name(j.at("variant").get<std::string>());
    m.format = sample_format_from_name(j.at("format").get<std::string>());
    m.n_kept = j.at("n_kept").get<int>();
    m.n_areas = j.at("n_areas").get<int>();
    m.n_periods = j.at("n_periods").get<int>();
    m.n_covariates = j.at("n_covariates").get<int>();
    m.n_edges = j.at("n_edges").get<int>();
    m.mu = j.at("mu").get<double>();
    m.epsilon = j.at("epsilon").get<double>();
    for (const auto& [family, stats] : j.at("acceptance").items()) {
      AcceptanceStats a;
      a.attempts = stats.at("attempts").get<long long>();
      a.accepts = stats.at("accepts").get<long long>();
      m.acceptance[family] = a;
    }
  } catch (const json::exception& ex) {
    throw_io(path.string() + ": manifest missing fields: " + ex.what());
  }
  return m;
}

// ------------------------------------------------------------- reports ----

void write_boundary_report_csv(const fs::path& path, const BoundaryReport& r,
                               const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("edge_i,edge_k,mean_w,p_ik,flag75,flag99\n");
  for (int e = 0; e < r.count(); ++e)
    f.write(std::to_string(r.edges[e].first) + "," +
            std::to_string(r.edges[e].second) + "," +
            format_double(r.mean_w[e]) + "," + format_double(r.p_ik[e]) +
            "," + std::to_string(static_cast<int>(r.flag75[e])) + "," +
            std::to_string(static_cast<int>(r.flag99[e])) + "\n");
  f.commit();
}

void write_fit_report_csv(const fs::path& path, const FitReport& r,
                          const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("name,value,lo95,hi95\n");
  f.write("dic," + format_double(r.dic) + ",,\n");
  f.write("pd," + format_double(r.pd) + ",,\n");
  f.write("mean_deviance," + format_double(r.mean_deviance) + ",,\n");
  for (const auto& [name, s] : r.params)
    f.write(name + "," + format_double(s.median) + "," +
            format_double(s.lo95) + "," + format_double(s.hi95) + "\n");
  f.commit();
}

void write_fit_report_json(const fs::path& path, const FitReport& r,
                           const Provenance& prov) {
  json j;
  j["provenance"] = {{"version", prov.version},
                     {"seed", prov.seed},
                     {"inputs", prov.inputs_digest}};
  j["dic"] = r.dic;
  j["pd"] = r.pd;
  j["mean_deviance"] = r.mean_deviance;
  json params = json::object();
  for (const auto& [name, s] : r.params)
    params[name] = {{"median", s.median}, {"lo95", s.lo95}, {"hi95", s.hi95}};
  j["params"] = params;
  j["acceptance_rates"] = r.acceptance_rates;
  AtomicFile f(path);
  f.write(j.dump(2));
  f.write("\n");
  f.commit();
}

void write_risk_summary_csv(const fs::path& path, const FitReport& r,
                            int n_areas, int n_periods,
                            const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("area,time,risk_median,risk_lo95,risk_hi95\n");
  for (int a = 0; a < n_areas; ++a)
    for (int j = 0; j < n_periods; ++j) {
      const std::size_t cell = static_cast<std::size_t>(j) * n_areas + a;
      f.write(std::to_string(a) + "," + std::to_string(j) + "," +
              format_double(r.risk_median[cell]) + "," +
              format_double(r.risk_lo95[cell]) + "," +
              format_double(r.risk_hi95[cell]) + "\n");
    }
  f.commit();
}

void write_roc_csv(const fs::path& path, const RocCurve& roc,
                   const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("threshold,sensitivity,specificity\n");
  for (std::size_t k = 0; k < roc.threshold.size(); ++k)
    f.write(format_double(roc.threshold[k]) + "," +
            format_double(roc.sensitivity[k]) + "," +
            format_double(roc.specificity[k]) + "\n");
  f.write("# auc," + format_double(roc.auc) + "\n");
  f.commit();
}

void write_prior_curve_csv(const fs::path& path,
                           const std::vector<double>& zetas, double mu,
                           int n_grid, const Provenance& prov) {
  AtomicFile f(path);
  f.write(provenance_line(prov));
  f.write("zeta,w,density\n");
  for (double zeta : zetas) {
    const auto curve = weight_prior_curve(mu, zeta, n_grid);
    for (const auto& [w, dens] : curve)
      f.write(format_double(zeta) + "," + format_double(w) + "," +
              format_double(dens) + "\n");
  }
  f.commit();
}

void write_matrix_market(const fs::path& path, const SparseSymMatrix& q) {
  AtomicFile f(path);
  f.write("%%MatrixMarket matrix coordinate real symmetric\n");
  const auto trips = q.triplets();
  f.write(std::to_string(q.n) + " " + std::to_string(q.n) + " " +
          std::to_string(trips.size()) + "\n");
  for (const auto& [r, c, v] : trips)
    f.write(std::to_string(r + 1) + " " + std::to_string(c + 1) + " " +
            format_double(v) + "\n");
  f.commit();
}

// --------------------------------------------------- scenarios, config ----

std::map<std::string, std::string> read_config_file(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw_io("cannot open " + path.string());
  std::map<std::string, std::string> kv;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    std::string s = line;
    const auto hash = s.find('#');
    if (hash != std::string::npos) s = s.substr(0, hash);
    s = trim(s);
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']') continue;  // section header
    const auto eq = s.find('=');
    if (eq == std::string::npos)
      throw_schema(path.string() + ": expected 'key = value', got '" + s +
                   "'");
    const std::string key = trim(s.substr(0, eq));
    const std::string value = trim(s.substr(eq + 1));
    if (key.empty()) throw_schema(path.string() + ": empty key");
    if (!kv.emplace(key, value).second)
      throw_schema(path.string() + ": duplicate key '" + key + "'");
  }
  return kv;
}

namespace {

double to_double(const std::string& v, const std::string& key) {
  char* end = nullptr;
  const double d = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size())
    throw_value("scenario key '" + key + "': non-numeric value '" + v + "'");
  return d;
}

int to_int(const std::string& v, const std::string& key) {
  const double d = to_double(v, key);
  if (d != std::floor(d))
    throw_value("scenario key '" + key + "': expected an integer");
  return static_cast<int>(d);
}

// "r0-r1:c0-c1;r0-r1:c0-c1"
std::vector<HighBlock> parse_blocks(const std::string& v) {
  std::vector<HighBlock> blocks;
  for (const std::string& part : split(v, ';')) {
    if (part.empty()) continue;
    const auto halves = split(part, ':');
    if (halves.size() != 2)
      throw_value("high_blocks: expected 'r0-r1:c0-c1', got '" + part + "'");
    const auto rr = split(halves[0], '-');
    const auto cc = split(halves[1], '-');
    if (rr.size() != 2 || cc.size() != 2)
      throw_value("high_blocks: expected 'r0-r1:c0-c1', got '" + part + "'");
    blocks.push_back({to_int(rr[0], "high_blocks"), to_int(rr[1], "high_blocks"),
                      to_int(cc[0], "high_blocks"), to_int(cc[1], "high_blocks")});
  }
  return blocks;
}

}  // namespace

Scenario read_scenario_file(const fs::path& path) {
  return read_named_scenario(path).scenario;
}

NamedScenario read_named_scenario(const fs::path& path) {
  const auto kv = read_config_file(path);
  NamedScenario out;
  out.name = path.stem().string();
  Scenario sc = default_scenario();
  bool blocks_given = false;
  for (const auto& [key, value] : kv) {
    if (key == "name") out.name = value;
    else if (key == "T") sc.periods = to_int(value, key);
    else if (key == "A") sc.risk_ratio = to_double(value, key);
    else if (key == "E") sc.expected_size = to_double(value, key);
    else if (key == "nrow") sc.nrow = to_int(value, key);
    else if (key == "ncol") sc.ncol = to_int(value, key);
    else if (key == "noise_sd") sc.noise_sd = to_double(value, key);
    else if (key == "field_tau2") sc.field_tau2 = to_double(value, key);
    else if (key == "eps_sim") sc.eps_sim = to_double(value, key);
    else if (key == "replicates") sc.replicates = to_int(value, key);
    else if (key == "seed")
      sc.seed = static_cast<std::uint64_t>(to_double(value, key));
    else if (key == "high_blocks") {
      sc.high_blocks = parse_blocks(value);
      blocks_given = true;
    } else {
      throw_value(path.string() + ": invalid scenario key '" + key + "'");
    }
  }
  if (sc.risk_ratio == 1.0 && !blocks_given) sc.high_blocks.clear();
  sc.validate();
  out.scenario = sc;
  return out;
}

// ------------------------------------------------------- study outputs ----

void write_study_tables(const fs::path& dir, const StudyResult& res,
                        const Provenance& prov) {
  {
    AtomicFile f(dir / "study_fit.csv");
    f.write(provenance_line(prov));
    f.write("scenario,model,n_ok,rmse_median,rmse_q10,dic_median,dic_q10,"
            "pd_median,pd_q10,coverage_median,coverage_q10\n");
    for (const auto& row : res.rows)
      f.write(row.scenario + "," + row.model + "," +
              std::to_string(row.n_ok) + "," + format_double(row.rmse_median) +
              "," + format_double(row.rmse_q10) + "," +
              format_double(row.dic_median) + "," +
              format_double(row.dic_q10) + "," + format_double(row.pd_median) +
              "," + format_double(row.pd_q10) + "," +
              format_double(row.coverage_median) + "," +
              format_double(row.coverage_q10) + "\n");
    f.commit();
  }
  {
    AtomicFile f(dir / "study_boundary.csv");
    f.write(provenance_line(prov));
    f.write("scenario,model,metric,median,q10\n");
    for (const auto& row : res.rows) {
      if (!row.has_boundary_metric) continue;
      f.write(row.scenario + "," + row.model + "," +
              (row.boundary_metric_is_auc ? std::string("auc")
                                          : std::string("specificity")) +
              "," + format_double(row.boundary_median) + "," +
              format_double(row.boundary_q10) + "\n");
    }
    f.commit();
  }
  {
    AtomicFile f(dir / "study_replicates.csv");
    f.write(provenance_line(prov));
    f.write("scenario,model,replicate,data_seed,chain_seed,ok,rmse,dic,pd,"
            "coverage,metric,metric_value\n");
    for (const auto& rep : res.replicates) {
      std::string metric = "none", value = "";
      if (rep.score.has_boundary_metric) {
        metric = rep.score.boundary_metric_is_auc ? "auc" : "specificity";
        value = format_double(rep.score.boundary_metric);
      }
      f.write(rep.scenario + "," + rep.model + "," +
              std::to_string(rep.replicate) + "," +
              std::to_string(rep.data_seed) + "," +
              std::to_string(rep.chain_seed) + "," +
              (rep.score.ok ? "1" : "0") + "," +
              (rep.score.ok ? format_double(rep.score.rmse) : "") + "," +
              (rep.score.ok ? format_double(rep.score.dic) : "") + "," +
              (rep.score.ok ? format_double(rep.score.pd) : "") + "," +
              (rep.score.ok ? format_double(rep.score.coverage) : "") + "," +
              metric + "," + value + "\n");
    }
    f.commit();
  }
  {
    json j;
    j["version"] = prov.version;
    j["inputs_digest"] = prov.inputs_digest;
    j["base_seed"] = prov.seed;
    json reps = json::array();
    for (const auto& rep : res.replicates) {
      reps.push_back({{"scenario", rep.scenario},
                      {"model", rep.model},
                      {"replicate", rep.replicate},
                      {"data_seed", rep.data_seed},
                      {"chain_seed", rep.chain_seed},
                      {"ok", rep.score.ok},
                      {"error", rep.score.error}});
    }
    j["replicates"] = reps;
    AtomicFile f(dir / "study_manifest.json");
    f.write(j.dump(2));
    f.write("\n");
    f.commit();
  }
}

}  // namespace stcar
