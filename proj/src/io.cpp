#include "wfr/io.hpp"

#include "json.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>

namespace wfr {

namespace fs = std::filesystem;
using nlohmann::json;

std::string format_full(double x) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

std::string format_sig6(double x) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.6g", x);
  return buf;
}

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw validation_error("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file(const fs::path& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw validation_error("cannot write " + path.string());
  out << content;
  if (!out) throw validation_error("short write to " + path.string());
}

namespace {

// Split one line into cells; surrounding quotes are stripped.  No embedded
// separators or newlines, which the files written here never contain.
std::vector<std::string> split_line(const std::string& line) {
  std::vector<std::string> cells;
  std::size_t start = 0;
  for (;;) {
    std::size_t comma = line.find(',', start);
    std::string cell = line.substr(start, comma == std::string::npos ? comma : comma - start);
    if (cell.size() >= 2 && cell.front() == '"' && cell.back() == '"')
      cell = cell.substr(1, cell.size() - 2);
    cells.push_back(std::move(cell));
    if (comma == std::string::npos) return cells;
    start = comma + 1;
  }
}

std::vector<std::vector<std::string>> read_raw_csv(const fs::path& path) {
  const std::string text = read_file(path);
  std::vector<std::vector<std::string>> rows;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t nl = text.find('\n', pos);
    std::string line = text.substr(pos, nl == std::string::npos ? nl : nl - pos);
    pos = nl == std::string::npos ? text.size() : nl + 1;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty() && pos >= text.size()) break;  // trailing newline
    rows.push_back(split_line(line));
  }
  if (rows.empty()) throw validation_error(path.string() + ": empty file");
  return rows;
}

double parse_cell(const std::string& cell, const fs::path& path, std::size_t line,
                  std::size_t col) {
  double v = 0;
  auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
  if (res.ec != std::errc{} || res.ptr != cell.data() + cell.size())
    throw validation_error(path.string() + ":" + std::to_string(line) + ": cell " +
                           std::to_string(col + 1) + " is not a number: '" + cell + "'");
  return v;
}

void append_row(std::string& out, const std::vector<std::string>& cells) {
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out += ',';
    out += cells[i];
  }
  out += "\r\n";
}

std::string matrix_csv(const MatrixXd& m, const std::string& col_prefix) {
  std::string out;
  std::vector<std::string> cells;
  for (int j = 0; j < m.cols(); ++j) cells.push_back(col_prefix + std::to_string(j + 1));
  append_row(out, cells);
  for (int i = 0; i < m.rows(); ++i) {
    cells.clear();
    for (int j = 0; j < m.cols(); ++j) cells.push_back(format_full(m(i, j)));
    append_row(out, cells);
  }
  return out;
}

}  // namespace

CsvTable read_csv(const fs::path& path) {
  const auto raw = read_raw_csv(path);
  CsvTable table;
  table.header = raw[0];
  const std::size_t width = table.header.size();
  for (std::size_t i = 1; i < raw.size(); ++i) {
    if (raw[i].size() != width)
      throw validation_error(path.string() + ":" + std::to_string(i + 1) + ": expected " +
                             std::to_string(width) + " cells, got " +
                             std::to_string(raw[i].size()));
    std::vector<double> row(width);
    for (std::size_t j = 0; j < width; ++j) row[j] = parse_cell(raw[i][j], path, i + 1, j);
    table.rows.push_back(std::move(row));
  }
  return table;
}

void write_dataset(const Dataset& ds, const fs::path& dir, const DgpConfig* cfg) {
  fs::create_directories(dir);
  write_file(dir / "X.csv", matrix_csv(ds.X, "x"));

  std::string yw;
  std::vector<std::string> cells = {"y"};
  for (int j = 0; j < ds.W.cols(); ++j) cells.push_back("w" + std::to_string(j + 1));
  append_row(yw, cells);
  for (int t = 0; t < ds.y.size(); ++t) {
    cells.clear();
    cells.push_back(format_full(ds.y(t)));
    for (int j = 0; j < ds.W.cols(); ++j) cells.push_back(format_full(ds.W(t, j)));
    append_row(yw, cells);
  }
  write_file(dir / "yW.csv", yw);

  if (ds.truth) {
    const GroundTruth& g = *ds.truth;
    std::string out = "object,i,j,value\r\n";
    auto emit = [&out](const std::string& name, const MatrixXd& m) {
      for (int i = 0; i < m.rows(); ++i)
        for (int j = 0; j < m.cols(); ++j)
          out += name + "," + std::to_string(i + 1) + "," + std::to_string(j + 1) + "," +
                 format_full(m(i, j)) + "\r\n";
    };
    emit("F0", g.F0);
    emit("B0", g.B0);
    emit("Fstar", g.Fstar);
    emit("Bstar", g.Bstar);
    emit("H", g.Hmat);
    emit("gamma0", g.gamma0);
    emit("gamma_star", g.gamma_star);
    emit("beta", g.beta);
    emit("E", g.E);
    emit("eps", g.eps);
    emit("Lambda", g.Lambda);
    write_file(dir / "truth.csv", out);
  }

  if (cfg) write_file(dir / "config.json", dump_dgp_config(*cfg));
}

Dataset load_dataset(const fs::path& dir) {
  Dataset ds;
  {
    const CsvTable x = read_csv(dir / "X.csv");
    ds.X = MatrixXd(x.rows.size(), x.header.size());
    for (std::size_t i = 0; i < x.rows.size(); ++i)
      for (std::size_t j = 0; j < x.header.size(); ++j) ds.X(i, j) = x.rows[i][j];
  }
  {
    const CsvTable yw = read_csv(dir / "yW.csv");
    if (yw.header.empty() || yw.header[0] != "y")
      throw validation_error((dir / "yW.csv").string() + ": first column must be y");
    const int T = int(yw.rows.size());
    const int p = int(yw.header.size()) - 1;
    ds.y = VectorXd(T);
    ds.W = MatrixXd(T, p);
    for (int t = 0; t < T; ++t) {
      ds.y(t) = yw.rows[t][0];
      for (int j = 0; j < p; ++j) ds.W(t, j) = yw.rows[t][j + 1];
    }
    if (ds.X.rows() != T)
      throw validation_error(dir.string() + ": X.csv and yW.csv row counts differ");
  }

  const fs::path truth_path = dir / "truth.csv";
  if (fs::exists(truth_path)) {
    const auto raw = read_raw_csv(truth_path);
    if (raw[0] != std::vector<std::string>{"object", "i", "j", "value"})
      throw validation_error(truth_path.string() + ": expected header object,i,j,value");
    struct Entry {
      int i, j;
      double v;
    };
    std::map<std::string, std::vector<Entry>> entries;
    std::map<std::string, std::pair<int, int>> dims;
    for (std::size_t k = 1; k < raw.size(); ++k) {
      if (raw[k].size() != 4)
        throw validation_error(truth_path.string() + ":" + std::to_string(k + 1) +
                               ": expected 4 cells");
      Entry e;
      e.i = int(parse_cell(raw[k][1], truth_path, k + 1, 1));
      e.j = int(parse_cell(raw[k][2], truth_path, k + 1, 2));
      e.v = parse_cell(raw[k][3], truth_path, k + 1, 3);
      auto& dim = dims[raw[k][0]];
      dim.first = std::max(dim.first, e.i);
      dim.second = std::max(dim.second, e.j);
      entries[raw[k][0]].push_back(e);
    }
    auto fetch = [&](const std::string& name) {
      auto it = entries.find(name);
      if (it == entries.end())
        throw validation_error(truth_path.string() + ": missing object '" + name + "'");
      MatrixXd m = MatrixXd::Zero(dims[name].first, dims[name].second);
      for (const Entry& e : it->second) m(e.i - 1, e.j - 1) = e.v;
      return m;
    };
    GroundTruth g;
    g.F0 = fetch("F0");
    g.B0 = fetch("B0");
    g.Fstar = fetch("Fstar");
    g.Bstar = fetch("Bstar");
    g.Hmat = fetch("H");
    g.gamma0 = fetch("gamma0");
    g.gamma_star = fetch("gamma_star");
    g.beta = fetch("beta");
    g.E = fetch("E");
    g.eps = fetch("eps");
    g.Lambda = fetch("Lambda");
    ds.truth = std::move(g);
  }
  return ds;
}

namespace {

const json& need(const json& j, const char* key, const std::string& ctx) {
  auto it = j.find(key);
  if (it == j.end()) throw validation_error(ctx + ": missing field '" + key + "'");
  return *it;
}

double num_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number()) throw validation_error(ctx + ": field '" + key + "' must be a number");
  return v.get<double>();
}

int int_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_integer())
    throw validation_error(ctx + ": field '" + key + "' must be an integer");
  return v.get<int>();
}

std::uint64_t seed_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_number_unsigned() && !v.is_number_integer())
    throw validation_error(ctx + ": field '" + key + "' must be a nonnegative integer");
  if (v.is_number_integer() && v.get<std::int64_t>() < 0)
    throw validation_error(ctx + ": field '" + key + "' must be a nonnegative integer");
  return v.get<std::uint64_t>();
}

VectorXd vec_value(const json& v, const char* key, const std::string& ctx) {
  if (!v.is_array()) throw validation_error(ctx + ": field '" + key + "' must be an array");
  VectorXd out(v.size());
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_number())
      throw validation_error(ctx + ": field '" + key + "' must hold numbers");
    out(int(i)) = v[i].get<double>();
  }
  return out;
}

VectorXd vec_field(const json& j, const char* key, const std::string& ctx) {
  return vec_value(need(j, key, ctx), key, ctx);
}

MatrixXd mat_field(const json& j, const char* key, const std::string& ctx) {
  const json& v = need(j, key, ctx);
  if (!v.is_array() || v.empty())
    throw validation_error(ctx + ": field '" + key + "' must be an array of rows");
  const std::size_t cols = v[0].is_array() ? v[0].size() : 0;
  MatrixXd out(v.size(), cols);
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!v[i].is_array() || v[i].size() != cols)
      throw validation_error(ctx + ": field '" + key + "' rows must have equal length");
    for (std::size_t jj = 0; jj < cols; ++jj) {
      if (!v[i][jj].is_number())
        throw validation_error(ctx + ": field '" + key + "' must hold numbers");
      out(int(i), int(jj)) = v[i][jj].get<double>();
    }
  }
  return out;
}

json parse_json(const std::string& text, const std::string& ctx) {
  json j = json::parse(text, nullptr, false);
  if (j.is_discarded()) throw validation_error(ctx + ": malformed JSON");
  if (!j.is_object()) throw validation_error(ctx + ": top level must be an object");
  return j;
}

// cell_fields: when false the per-cell fields (N, T, alpha, d, rho_fw) are
// optional; an experiment overwrites them from its sizes/designs/rho_fw lists.
DgpConfig dgp_from_json(const json& j, const std::string& ctx, bool cell_fields) {
  DgpConfig cfg;
  cfg.r = int_field(j, "r", ctx);
  cfg.p = int_field(j, "p", ctx);
  if (cell_fields) {
    cfg.N = int_field(j, "N", ctx);
    cfg.T = int_field(j, "T", ctx);
    cfg.alpha = vec_field(j, "alpha", ctx);
    cfg.d = vec_field(j, "d", ctx);
    cfg.rho_fw = num_field(j, "rho_fw", ctx);
  } else {
    if (j.contains("N")) cfg.N = int_field(j, "N", ctx);
    if (j.contains("T")) cfg.T = int_field(j, "T", ctx);
    if (j.contains("alpha")) cfg.alpha = vec_field(j, "alpha", ctx);
    if (j.contains("d")) cfg.d = vec_field(j, "d", ctx);
    if (j.contains("rho_fw")) cfg.rho_fw = num_field(j, "rho_fw", ctx);
  }
  cfg.H = j.contains("H") ? mat_field(j, "H", ctx)
                          : MatrixXd(MatrixXd::Identity(cfg.r, cfg.r));
  cfg.rho_e = num_field(j, "rho_e", ctx);
  cfg.sigma_e = num_field(j, "sigma_e", ctx);
  cfg.theta = num_field(j, "theta", ctx);
  cfg.s_order = int_field(j, "s_order", ctx);
  cfg.sigma_w = num_field(j, "sigma_w", ctx);
  cfg.sigma_eps = num_field(j, "sigma_eps", ctx);
  cfg.gamma0 = vec_field(j, "gamma0", ctx);
  cfg.beta = vec_field(j, "beta", ctx);
  cfg.seed = j.contains("seed") ? seed_field(j, "seed", ctx) : 1;
  return cfg;
}

json vec_json(const VectorXd& v) {
  json a = json::array();
  for (int i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

json mat_json(const MatrixXd& m) {
  json a = json::array();
  for (int i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (int j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    a.push_back(std::move(row));
  }
  return a;
}

}  // namespace

DgpConfig parse_dgp_config(const std::string& json_text) {
  const json j = parse_json(json_text, "config");
  DgpConfig cfg = dgp_from_json(j, "config", true);
  cfg.validate();
  return cfg;
}

std::string dump_dgp_config(const DgpConfig& cfg) {
  json j;
  j["N"] = cfg.N;
  j["T"] = cfg.T;
  j["r"] = cfg.r;
  j["p"] = cfg.p;
  j["alpha"] = vec_json(cfg.alpha);
  j["d"] = vec_json(cfg.d);
  j["H"] = mat_json(cfg.H);
  j["rho_e"] = cfg.rho_e;
  j["sigma_e"] = cfg.sigma_e;
  j["theta"] = cfg.theta;
  j["s_order"] = cfg.s_order;
  j["rho_fw"] = cfg.rho_fw;
  j["sigma_w"] = cfg.sigma_w;
  j["sigma_eps"] = cfg.sigma_eps;
  j["gamma0"] = vec_json(cfg.gamma0);
  j["beta"] = vec_json(cfg.beta);
  j["seed"] = cfg.seed;
  return j.dump(2) + "\n";
}

ExperimentSpec parse_experiment_spec(const std::string& json_text) {
  const std::string ctx = "experiment";
  const json j = parse_json(json_text, ctx);

  ExperimentSpec spec;
  const json& base = need(j, "base", ctx);
  if (!base.is_object()) throw validation_error(ctx + ": field 'base' must be an object");
  spec.base = dgp_from_json(base, ctx + ".base", false);
  if (j.contains("seed")) spec.base.seed = seed_field(j, "seed", ctx);

  const json& sizes = need(j, "sizes", ctx);
  if (!sizes.is_array() || sizes.empty())
    throw validation_error(ctx + ": field 'sizes' must be a nonempty array");
  for (const auto& s : sizes) {
    if (!s.is_number_integer())
      throw validation_error(ctx + ": field 'sizes' must hold integers");
    spec.sizes.push_back(s.get<int>());
  }

  const json& designs = need(j, "designs", ctx);
  if (!designs.is_array() || designs.empty())
    throw validation_error(ctx + ": field 'designs' must be a nonempty array");
  for (std::size_t i = 0; i < designs.size(); ++i) {
    const std::string dctx = ctx + ".designs[" + std::to_string(i) + "]";
    if (!designs[i].is_object()) throw validation_error(dctx + ": must be an object");
    Design design;
    design.alpha = vec_field(designs[i], "alpha", dctx);
    design.d = vec_field(designs[i], "d", dctx);
    spec.designs.push_back(std::move(design));
  }

  const VectorXd rho = vec_field(j, "rho_fw", ctx);
  for (int i = 0; i < rho.size(); ++i) spec.rho_fw_values.push_back(rho(i));

  if (j.contains("nrep")) spec.nrep = int_field(j, "nrep", ctx);
  if (j.contains("use_mw")) {
    if (!j["use_mw"].is_boolean())
      throw validation_error(ctx + ": field 'use_mw' must be a boolean");
    spec.use_Mw = j["use_mw"].get<bool>();
  }

  auto string_list = [&](const char* key, std::vector<std::string>& out) {
    if (!j.contains(key)) return;
    if (!j[key].is_array())
      throw validation_error(ctx + ": field '" + key + "' must be an array");
    out.clear();
    for (const auto& s : j[key]) {
      if (!s.is_string())
        throw validation_error(ctx + ": field '" + key + "' must hold strings");
      out.push_back(s.get<std::string>());
    }
  };
  spec.estimators = {"ls", "bcjk", "bcHhatq", "bcHhat"};
  spec.targets = {"delta0", "delta_Hhat", "delta_Hhatq"};
  string_list("estimators", spec.estimators);
  string_list("targets", spec.targets);

  if (j.contains("power")) {
    const json& pw = j["power"];
    const std::string pctx = ctx + ".power";
    if (!pw.is_object()) throw validation_error(pctx + ": must be an object");
    PowerSpec ps;
    ps.coef = int_field(pw, "coef", pctx);
    const VectorXd grid = vec_field(pw, "grid", pctx);
    for (int i = 0; i < grid.size(); ++i) ps.grid.push_back(grid(i));
    spec.power = std::move(ps);
  }

  if (j.contains("options")) {
    const json& op = j["options"];
    const std::string octx = ctx + ".options";
    if (!op.is_object()) throw validation_error(octx + ": must be an object");
    if (op.contains("poet_c")) spec.options.poet.threshold_const = num_field(op, "poet_c", octx);
    if (op.contains("poet_kind")) {
      const std::string kind = op["poet_kind"].is_string() ? op["poet_kind"].get<std::string>() : "";
      if (kind == "hard") spec.options.poet.kind = ThresholdKind::hard;
      else if (kind == "soft") spec.options.poet.kind = ThresholdKind::soft;
      else throw validation_error(octx + ": field 'poet_kind' must be 'hard' or 'soft'");
    }
    if (op.contains("jk_R")) spec.options.jk_R = int_field(op, "jk_R", octx);
    if (op.contains("hac_bw")) spec.options.hac_bandwidth = int_field(op, "hac_bw", octx);
    if (op.contains("cov")) {
      const std::string cov = op["cov"].is_string() ? op["cov"].get<std::string>() : "";
      if (cov == "homo") spec.options.cov_kind = CovKind::homoskedastic;
      else if (cov == "hetero") spec.options.cov_kind = CovKind::heteroskedastic;
      else if (cov == "hac") spec.options.cov_kind = CovKind::hac;
      else throw validation_error(octx + ": field 'cov' must be homo, hetero or hac");
    }
  }

  spec.validate();
  return spec;
}

namespace {

std::string join_values(const VectorXd& v) {
  std::string out;
  for (int i = 0; i < v.size(); ++i) {
    if (i) out += ';';
    out += format_sig6(v(i));
  }
  return out;
}

std::vector<std::string> cell_cells(const CellKey& cell) {
  return {std::to_string(cell.N),      std::to_string(cell.T),
          "\"" + join_values(cell.alpha) + "\"", "\"" + join_values(cell.d) + "\"",
          format_sig6(cell.rho_fw),    cell.use_Mw ? "1" : "0"};
}

}  // namespace

void write_summary_csv(const McSummary& summary, const fs::path& path) {
  int max_coef = 0;
  int r = 0;
  for (const auto& row : summary.rows) {
    max_coef = std::max(max_coef, row.coef);
    r = int(row.cell.alpha.size());
  }
  const int p = max_coef + 1 - r;

  std::string out;
  append_row(out, {"kind", "N", "T", "alpha", "d", "rho_fw", "use_mw", "estimator", "target",
                   "coef", "mean", "bias", "sd", "mc_se", "size_5pct", "q95_abs_t",
                   "nrep_effective"});
  for (const auto& row : summary.rows) {
    std::vector<std::string> cells = {"estimate"};
    for (auto& c : cell_cells(row.cell)) cells.push_back(c);
    cells.push_back(row.estimator);
    cells.push_back(row.target);
    cells.push_back(coef_label(row.coef, r, p));
    cells.push_back(format_sig6(row.mean));
    cells.push_back(format_sig6(row.bias));
    cells.push_back(format_sig6(row.sd));
    cells.push_back(format_sig6(row.mc_se));
    cells.push_back(format_sig6(row.size_5pct));
    cells.push_back(format_sig6(row.q95_abs_t));
    cells.push_back(std::to_string(row.nrep_effective));
    append_row(out, cells);
  }
  for (const auto& row : summary.params) {
    std::vector<std::string> cells = {"param"};
    for (auto& c : cell_cells(row.cell)) cells.push_back(c);
    cells.push_back(row.param);
    cells.push_back("");
    cells.push_back(coef_label(row.coef, int(row.cell.alpha.size()), p));
    cells.push_back(format_sig6(row.mean));
    cells.push_back("");
    cells.push_back(format_sig6(row.sd));
    cells.push_back("");
    cells.push_back("");
    cells.push_back("");
    cells.push_back(std::to_string(row.nrep_effective));
    append_row(out, cells);
  }
  write_file(path, out);
}

void write_power_csv(const std::vector<PowerRow>& rows, const fs::path& path) {
  std::string out;
  append_row(out, {"N", "T", "alpha", "d", "rho_fw", "use_mw", "estimator", "coef",
                   "grid_value", "reject_raw", "reject_adjusted", "crit_value",
                   "nrep_effective"});
  for (const auto& row : rows) {
    std::vector<std::string> cells;
    for (auto& c : cell_cells(row.cell)) cells.push_back(c);
    cells.push_back(row.estimator);
    cells.push_back(std::to_string(row.coef + 1));
    cells.push_back(format_sig6(row.grid_value));
    cells.push_back(format_sig6(row.reject_raw));
    cells.push_back(format_sig6(row.reject_adjusted));
    cells.push_back(format_sig6(row.crit_value));
    cells.push_back(std::to_string(row.nrep_effective));
    append_row(out, cells);
  }
  write_file(path, out);
}

std::uint64_t fnv1a(const std::string& bytes) {
  std::uint64_t h = 14695981039346656037ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string manifest_json(const std::string& command, const std::string& config_bytes,
                          std::uint64_t seed) {
  char digest[32];
  std::snprintf(digest, sizeof(digest), "%016llx",
                static_cast<unsigned long long>(fnv1a(config_bytes)));
  const auto now = std::chrono::system_clock::now();
  const std::time_t tt = std::chrono::system_clock::to_time_t(now);
  char stamp[32];
  std::tm tm_utc{};
  gmtime_r(&tt, &tm_utc);
  std::strftime(stamp, sizeof(stamp), "%Y-%m-%dT%H:%M:%SZ", &tm_utc);

  json j;
  j["command"] = command;
  j["config_fnv1a"] = digest;
  j["seed"] = seed;
  j["timestamp"] = stamp;
  j["tool"] = "wfr";
  j["version"] = "1.0.0";
  return j.dump(2) + "\n";
}

}  // namespace wfr
