#include "bicausal/cli_io.hpp"

#include "bicausal/errors.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <sstream>

namespace bicausal {

using nlohmann::json;
using nlohmann::ordered_json;

// ===========================================================================
// CSV
// ===========================================================================

void ColumnSchema::validate() const {
  const std::vector<std::string> roles{x_column, y_column, z_column, w_column};
  std::set<std::string> seen;
  for (const auto& c : roles) {
    if (c.empty()) throw Error(ErrorCode::Configuration, "role column name is empty");
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::Configuration, "column '" + c + "' is assigned two roles");
    }
  }
  for (const auto& c : covariate_columns) {
    if (!seen.insert(c).second) {
      throw Error(ErrorCode::Configuration, "covariate '" + c + "' repeats a used column");
    }
  }
}

std::vector<std::string> ColumnSchema::used_columns() const {
  std::vector<std::string> cols{x_column, y_column, z_column, w_column};
  cols.insert(cols.end(), covariate_columns.begin(), covariate_columns.end());
  return cols;
}

ColumnSchema heart_disease_schema() {
  ColumnSchema s;
  s.x_column = "HeartDisease";
  s.y_column = "Diabetic";
  s.z_column = "Stroke";
  s.w_column = "BMI";
  s.standardize_columns = {"BMI"};
  s.column_recodings["Diabetic"] = {{"Yes", 1.0},
                                    {"No", 0.0},
                                    {"No, borderline diabetes", 0.0},
                                    {"Yes (during pregnancy)", 1.0}};
  return s;
}

bool is_missing_literal(const std::string& s) {
  return s.empty() || s == "NA" || s == "NaN" || s == ".";
}

std::vector<std::string> split_csv_record(const std::string& line) {
  std::vector<std::string> fields;
  std::string field;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          field += '"';
          ++i;
        } else {
          quoted = false;
        }
      } else {
        field += ch;
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else {
      field += ch;
    }
  }
  fields.push_back(std::move(field));
  return fields;
}

namespace {

bool read_record(std::istream& in, std::string& record) {
  record.clear();
  std::string line;
  bool any = false;
  while (std::getline(in, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (any) record += '\n';
    record += line;
    any = true;
    if (std::count(record.begin(), record.end(), '"') % 2 == 0) return true;
  }
  return any;
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t");
  return s.substr(b, e - b + 1);
}

std::optional<double> parse_numeric(const std::string& s) {
  if (s.empty()) return std::nullopt;
  char* end = nullptr;
  const double v = std::strtod(s.c_str(), &end);
  if (end != s.c_str() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

}  // namespace

Dataset read_csv(std::istream& in, const ColumnSchema& schema, const std::string& source_name) {
  schema.validate();
  std::string record;
  if (!read_record(in, record)) {
    throw Error(ErrorCode::Io, source_name + ": missing header row");
  }
  std::vector<std::string> header = split_csv_record(record);
  for (auto& h : header) h = trim(h);
  if (!header.empty() && header[0].rfind("\xEF\xBB\xBF", 0) == 0) header[0].erase(0, 3);

  const std::vector<std::string> used = schema.used_columns();
  std::vector<std::size_t> index;
  for (const auto& name : used) {
    const auto it = std::find(header.begin(), header.end(), name);
    if (it == header.end()) {
      throw Error(ErrorCode::MissingColumn, source_name + ": column '" + name + "' not found");
    }
    index.push_back(static_cast<std::size_t>(it - header.begin()));
  }
  for (const auto& name : schema.standardize_columns) {
    if (std::find(used.begin(), used.end(), name) == used.end()) {
      throw Error(ErrorCode::Configuration,
                  "standardised column '" + name + "' has no role in the schema");
    }
  }

  std::vector<std::vector<double>> columns(used.size());
  std::size_t rows_read = 0, rows_dropped = 0, line_no = 1;
  while (read_record(in, record)) {
    ++line_no;
    if (trim(record).empty()) continue;
    ++rows_read;
    const std::vector<std::string> fields = split_csv_record(record);
    std::vector<double> values(used.size());
    bool missing = false;
    for (std::size_t k = 0; k < used.size(); ++k) {
      const std::string raw = index[k] < fields.size() ? trim(fields[index[k]]) : std::string();
      if (is_missing_literal(raw)) {
        missing = true;
        break;
      }
      const auto col_map = schema.column_recodings.find(used[k]);
      if (col_map != schema.column_recodings.end()) {
        const auto hit = col_map->second.find(raw);
        if (hit != col_map->second.end()) {
          values[k] = hit->second;
          continue;
        }
      }
      if (const auto num = parse_numeric(raw)) {
        values[k] = *num;
        continue;
      }
      const auto hit = schema.binary_recodings.find(raw);
      if (hit == schema.binary_recodings.end()) {
        throw Error(ErrorCode::UnmappedLiteral, source_name + ": column '" + used[k] +
                                                    "' has unmapped literal '" + raw +
                                                    "' (line " + std::to_string(line_no) + ")");
      }
      values[k] = hit->second;
    }
    if (missing) {
      ++rows_dropped;
      continue;
    }
    for (std::size_t k = 0; k < used.size(); ++k) columns[k].push_back(values[k]);
  }

  const std::size_t kept = columns[0].size();
  if (kept == 0) {
    throw Error(ErrorCode::EmptyAfterFiltering,
                source_name + ": no complete rows (" + std::to_string(rows_dropped) + " dropped)");
  }

  Dataset d;
  d.provenance.rows_read = rows_read;
  d.provenance.rows_dropped = rows_dropped;
  std::vector<Vector> vecs;
  for (std::size_t k = 0; k < used.size(); ++k) {
    Vector v = Eigen::Map<const Vector>(columns[k].data(), static_cast<Eigen::Index>(kept));
    const double mean = v.mean();
    const double sd = kept > 1 ? std::sqrt((v.array() - mean).square().sum() /
                                           static_cast<double>(kept - 1))
                               : 0.0;
    d.provenance.raw_means[used[k]] = mean;
    d.provenance.raw_sds[used[k]] = sd;
    const bool standardise = std::find(schema.standardize_columns.begin(),
                                       schema.standardize_columns.end(),
                                       used[k]) != schema.standardize_columns.end();
    if (standardise) {
      if (!(sd > 0.0)) {
        throw Error(ErrorCode::Domain, "column '" + used[k] + "' is constant; cannot standardise");
      }
      v = (v.array() - mean) / sd;
    }
    vecs.push_back(std::move(v));
  }
  d.x = vecs[0];
  d.y = vecs[1];
  d.z = vecs[2];
  d.w = vecs[3];
  d.x_name = schema.x_column;
  d.y_name = schema.y_column;
  d.z_name = schema.z_column;
  d.w_name = schema.w_column;
  d.q_names = schema.covariate_columns;
  d.q.resize(d.q_names.empty() ? 0 : static_cast<Eigen::Index>(kept),
             static_cast<Eigen::Index>(d.q_names.size()));
  for (std::size_t j = 0; j < d.q_names.size(); ++j) {
    d.q.col(static_cast<Eigen::Index>(j)) = vecs[4 + j];
  }
  d.validate();
  return d;
}

Dataset load_csv(const std::string& path, const ColumnSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::Io, "cannot open '" + path + "'");
  return read_csv(in, schema, path);
}

std::string format_double(double v) {
  if (std::isnan(v)) return "nan";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_dataset_csv(std::ostream& out, const Dataset& d) {
  out << "x,y,z,w";
  for (const auto& name : d.q_names) out << ',' << name;
  out << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    out << format_double(d.x(i)) << ',' << format_double(d.y(i)) << ',' << format_double(d.z(i))
        << ',' << format_double(d.w(i));
    for (Eigen::Index j = 0; j < d.q.cols(); ++j) out << ',' << format_double(d.q(i, j));
    out << '\n';
  }
}

// ===========================================================================
// Configuration
// ===========================================================================

void RunConfig::validate() const {
  static const std::set<std::string> commands{"simulate", "estimate", "sweep", "bootstrap"};
  if (!commands.count(command)) {
    throw Error(ErrorCode::Configuration, "unknown command '" + command + "'");
  }
  parse_scenario(scenario);
  if (method != "iv" && method != "naive" && method != "both") {
    throw Error(ErrorCode::Configuration, "--method must be iv, naive or both");
  }
  if (!(level > 0.0 && level < 1.0)) {
    throw Error(ErrorCode::Configuration, "--level must lie in (0, 1)");
  }
  if (bootstrap == 1) {
    throw Error(ErrorCode::Configuration, "--bootstrap needs at least 2 replicates");
  }
  if (command == "bootstrap" && bootstrap < 2) {
    throw Error(ErrorCode::Configuration, "bootstrap needs --bootstrap B with B >= 2");
  }
  if (n == 0 && input.empty()) throw Error(ErrorCode::Configuration, "--n must be positive");
  if (reps == 0) throw Error(ErrorCode::Configuration, "--reps must be positive");
  if (branch != "lt1" && branch != "gt1") {
    throw Error(ErrorCode::Configuration, "--branch must be lt1 or gt1");
  }
  if (!preset.empty() && preset != "heart") {
    throw Error(ErrorCode::Configuration, "unknown preset '" + preset + "'");
  }
  parse_solver(solver);
  if (command == "sweep") sweep_plan().validate();
}

SweepPlan RunConfig::sweep_plan() const {
  SweepPlan plan;
  for (const auto& g : grids) plan.axes.push_back(parse_axis(g));
  plan.solver.kind = parse_solver(solver);
  plan.solver.branch = branch == "gt1" ? ProductBranch::GtOne : ProductBranch::LtOne;
  plan.solver.general.bound = general_bound;
  plan.solver.general.grid_points = general_grid_points;
  plan.base = {gamma1, gamma2, eta0, delta0, solver_mode(plan.solver.kind)};
  return plan;
}

ColumnSchema RunConfig::effective_schema() const {
  return preset == "heart" ? heart_disease_schema() : schema;
}

ordered_json to_json(const StructuralParams& p) {
  return {{"mu_x0", p.mu_x0}, {"mu_y0", p.mu_y0}, {"beta_xy", p.beta_xy},
          {"beta_yx", p.beta_yx}, {"mu_xz", p.mu_xz}, {"mu_yw", p.mu_yw},
          {"sigma", p.sigma}, {"gamma1", p.gamma1}, {"gamma2", p.gamma2},
          {"eta", p.eta}, {"delta", p.delta}, {"mu_xq", p.mu_xq}, {"mu_yq", p.mu_yq}};
}

namespace {

StructuralParams params_from_json(const json& j) {
  StructuralParams p = StructuralParams::simulation_baseline();
  p.mu_x0 = j.value("mu_x0", p.mu_x0);
  p.mu_y0 = j.value("mu_y0", p.mu_y0);
  p.beta_xy = j.value("beta_xy", p.beta_xy);
  p.beta_yx = j.value("beta_yx", p.beta_yx);
  p.mu_xz = j.value("mu_xz", p.mu_xz);
  p.mu_yw = j.value("mu_yw", p.mu_yw);
  p.sigma = j.value("sigma", p.sigma);
  p.gamma1 = j.value("gamma1", p.gamma1);
  p.gamma2 = j.value("gamma2", p.gamma2);
  p.eta = j.value("eta", p.eta);
  p.delta = j.value("delta", p.delta);
  p.mu_xq = j.value("mu_xq", p.mu_xq);
  p.mu_yq = j.value("mu_yq", p.mu_yq);
  return p;
}

ordered_json schema_json(const ColumnSchema& s) {
  ordered_json j;
  j["x_column"] = s.x_column;
  j["y_column"] = s.y_column;
  j["z_column"] = s.z_column;
  j["w_column"] = s.w_column;
  j["covariate_columns"] = s.covariate_columns;
  j["binary_recodings"] = s.binary_recodings;
  j["column_recodings"] = s.column_recodings;
  j["standardize_columns"] = s.standardize_columns;
  return j;
}

ColumnSchema schema_from_json(const json& j) {
  ColumnSchema s;
  s.x_column = j.value("x_column", s.x_column);
  s.y_column = j.value("y_column", s.y_column);
  s.z_column = j.value("z_column", s.z_column);
  s.w_column = j.value("w_column", s.w_column);
  s.covariate_columns = j.value("covariate_columns", s.covariate_columns);
  s.binary_recodings = j.value("binary_recodings", s.binary_recodings);
  s.column_recodings = j.value("column_recodings", s.column_recodings);
  s.standardize_columns = j.value("standardize_columns", s.standardize_columns);
  return s;
}

ordered_json optional_number(const std::optional<double>& v) {
  return v ? ordered_json(*v) : ordered_json(nullptr);
}

ordered_json interval_json(const std::optional<Interval>& v) {
  if (!v) return nullptr;
  return ordered_json::array({v->lo, v->hi});
}

}  // namespace

ordered_json to_json(const RunConfig& cfg) {
  ordered_json j;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["n"] = cfg.n;
  j["scenario"] = cfg.scenario;
  j["truth"] = to_json(cfg.truth);
  j["input"] = cfg.input;
  j["preset"] = cfg.preset;
  j["schema"] = schema_json(cfg.schema);
  j["method"] = cfg.method;
  j["delta"] = cfg.delta;
  j["bootstrap"] = cfg.bootstrap;
  j["level"] = cfg.level;
  j["include_q"] = cfg.include_q;
  j["reps"] = cfg.reps;
  j["solver"] = cfg.solver;
  j["branch"] = cfg.branch;
  j["grids"] = cfg.grids;
  j["gamma1"] = cfg.gamma1;
  j["gamma2"] = cfg.gamma2;
  j["eta0"] = cfg.eta0;
  j["delta0"] = cfg.delta0;
  j["general_bound"] = cfg.general_bound;
  j["general_grid_points"] = cfg.general_grid_points;
  return j;
}

RunConfig config_from_json(const json& j) {
  if (!j.is_object()) throw Error(ErrorCode::Configuration, "configuration must be an object");
  RunConfig c;
  try {
    c.command = j.value("command", c.command);
    c.seed = j.value("seed", c.seed);
    c.n = j.value("n", c.n);
    c.scenario = j.value("scenario", c.scenario);
    if (j.contains("truth")) c.truth = params_from_json(j.at("truth"));
    c.input = j.value("input", c.input);
    c.output = j.value("output", c.output);
    c.preset = j.value("preset", c.preset);
    if (j.contains("schema")) c.schema = schema_from_json(j.at("schema"));
    c.method = j.value("method", c.method);
    c.delta = j.value("delta", c.delta);
    c.bootstrap = j.value("bootstrap", c.bootstrap);
    c.level = j.value("level", c.level);
    c.include_q = j.value("include_q", c.include_q);
    c.reps = j.value("reps", c.reps);
    c.solver = j.value("solver", c.solver);
    c.branch = j.value("branch", c.branch);
    c.grids = j.value("grids", c.grids);
    c.gamma1 = j.value("gamma1", c.gamma1);
    c.gamma2 = j.value("gamma2", c.gamma2);
    c.eta0 = j.value("eta0", c.eta0);
    c.delta0 = j.value("delta0", c.delta0);
    c.general_bound = j.value("general_bound", c.general_bound);
    c.general_grid_points = j.value("general_grid_points", c.general_grid_points);
  } catch (const json::exception& e) {
    throw Error(ErrorCode::Configuration, std::string("configuration: ") + e.what());
  }
  return c;
}

ordered_json manifest(const RunConfig& cfg) {
  ordered_json j;
  j["tool"] = kToolName;
  j["version"] = kVersion;
  j["command"] = cfg.command;
  j["seed"] = cfg.seed;
  j["config"] = to_json(cfg);
  return j;
}

RunConfig config_from_manifest(const json& j) {
  if (!j.is_object() || !j.contains("config")) {
    throw Error(ErrorCode::Configuration, "manifest has no 'config' object");
  }
  return config_from_json(j.at("config"));
}

ordered_json to_json(const EffectEstimate& e) {
  ordered_json j;
  j["method"] = method_name(e.method);
  j["method_detail"] = e.method_detail;
  j["beta_xy"] = e.beta_xy;
  j["beta_yx"] = e.beta_yx;
  j["se_xy"] = optional_number(e.se_xy);
  j["se_yx"] = optional_number(e.se_yx);
  j["ci_xy"] = interval_json(e.ci_xy);
  j["ci_yx"] = interval_json(e.ci_yx);
  ordered_json diag;
  diag["sqrt_argument_xy"] = optional_number(e.diagnostics.sqrt_argument_xy);
  diag["sqrt_argument_yx"] = optional_number(e.diagnostics.sqrt_argument_yx);
  diag["fit_x_converged"] = e.diagnostics.fit_x_converged;
  diag["fit_y_converged"] = e.diagnostics.fit_y_converged;
  diag["fit_x_iterations"] = e.diagnostics.fit_x_iterations;
  diag["fit_y_iterations"] = e.diagnostics.fit_y_iterations;
  j["diagnostics"] = diag;
  return j;
}

ordered_json to_json(const BootstrapResult& b) {
  ordered_json j;
  j["replicates"] = b.replicates;
  j["successes"] = b.successes;
  j["level"] = b.level;
  j["sd_xy"] = b.sd_xy;
  j["sd_yx"] = b.sd_yx;
  j["ci_xy"] = ordered_json::array({b.ci_xy.lo, b.ci_xy.hi});
  j["ci_yx"] = ordered_json::array({b.ci_yx.lo, b.ci_yx.hi});
  j["failure_reasons"] = b.failure_reasons;
  return j;
}

void write_sweep_csv(std::ostream& out, const SweepTable& table) {
  for (const auto& a : table.axes) out << axis_label(a) << ',';
  out << "beta_xy,beta_yx,bias_xy,bias_yx,sd_xy,sd_yx,ci_lo_xy,ci_hi_xy,ci_lo_yx,ci_hi_yx,"
         "n_success,n_fail\n";
  auto opt = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string(); };
  for (const auto& r : table.rows) {
    for (double v : r.axis_values) out << format_double(v) << ',';
    out << format_double(r.beta_xy) << ',' << format_double(r.beta_yx) << ',' << opt(r.bias_xy)
        << ',' << opt(r.bias_yx) << ',' << opt(r.sd_xy) << ',' << opt(r.sd_yx) << ','
        << (r.ci_xy ? format_double(r.ci_xy->lo) : "") << ','
        << (r.ci_xy ? format_double(r.ci_xy->hi) : "") << ','
        << (r.ci_yx ? format_double(r.ci_yx->lo) : "") << ','
        << (r.ci_yx ? format_double(r.ci_yx->hi) : "") << ',' << r.n_success << ','
        << r.n_fail << '\n';
  }
}

// ===========================================================================
// Commands
// ===========================================================================

namespace {

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string pad(const std::string& s, std::size_t width) {
  return s.size() >= width ? s : s + std::string(width - s.size(), ' ');
}

EstimationOptions estimation_options(const RunConfig& cfg) {
  EstimationOptions o;
  o.include_q = cfg.include_q;
  return o;
}

ordered_json data_json(const Dataset& d, const RunConfig& cfg) {
  ordered_json j;
  j["source"] = cfg.input.empty() ? "simulated" : cfg.input;
  j["n"] = d.n();
  j["rows_read"] = d.provenance.rows_read;
  j["rows_dropped"] = d.provenance.rows_dropped;
  j["raw_means"] = d.provenance.raw_means;
  j["raw_sds"] = d.provenance.raw_sds;
  return j;
}

std::string estimate_row(const std::string& label, const EffectEstimate& e) {
  auto cell = [](double b, const std::optional<double>& se, const std::optional<Interval>& ci) {
    std::string s = fixed(b);
    if (se) s += " (" + fixed(*se) + ")";
    if (ci) s += " [" + fixed(ci->lo) + ", " + fixed(ci->hi) + "]";
    return s;
  };
  return pad(label, 8) + pad(cell(e.beta_xy, e.se_xy, e.ci_xy), 36) +
         cell(e.beta_yx, e.se_yx, e.ci_yx) + "\n";
}

}  // namespace

Dataset command_dataset(const RunConfig& cfg) {
  if (!cfg.input.empty()) return load_csv(cfg.input, cfg.effective_schema());
  const IVScenario scenario{parse_scenario(cfg.scenario), {}, {}};
  return simulate(cfg.truth, scenario, cfg.n, RngStream(cfg.seed).derive(0));
}

CommandResult cmd_simulate(const RunConfig& cfg) {
  cfg.validate();
  RunConfig sim = cfg;
  sim.input.clear();
  const Dataset d = command_dataset(sim);
  std::ostringstream csv;
  write_dataset_csv(csv, d);
  CommandResult r;
  r.artifact = csv.str();
  r.manifest = manifest(cfg).dump(2) + "\n";
  r.summary = "simulated " + std::to_string(d.n()) + " rows (scenario " + cfg.scenario +
              ", seed " + std::to_string(cfg.seed) + "); mean x = " + fixed(d.x.mean()) +
              ", mean y = " + fixed(d.y.mean()) + "\n";
  return r;
}

CommandResult cmd_estimate(const RunConfig& cfg) {
  cfg.validate();
  const Dataset d = command_dataset(cfg);
  const EstimationOptions opts = estimation_options(cfg);

  ordered_json report = manifest(cfg);
  report["data"] = data_json(d, cfg);
  ordered_json estimates = ordered_json::array();
  std::string table = pad("method", 8) + pad("beta_xy", 36) + "beta_yx\n";

  if (cfg.method == "iv" || cfg.method == "both") {
    const ReducedFormFits fits = fit_reduced_form(d, opts);
    EffectEstimate iv = estimate_from_fits(fits);
    if (cfg.delta) {
      const StandardErrors se = delta_method_prop1(fits);
      iv.se_xy = se.se_xy;
      iv.se_yx = se.se_yx;
    }
    std::optional<BootstrapResult> boot;
    if (cfg.bootstrap >= 2) {
      BootstrapOptions bo;
      bo.replicates = cfg.bootstrap;
      bo.level = cfg.level;
      bo.threads = cfg.threads;
      boot = bootstrap(d, [&](const Dataset& s) { return estimate_alg1(s, opts).pair(); }, bo,
                       RngStream(cfg.seed).derive(1));
      iv.ci_xy = boot->ci_xy;
      iv.ci_yx = boot->ci_yx;
      if (!cfg.delta) {
        iv.se_xy = boot->sd_xy;
        iv.se_yx = boot->sd_yx;
      }
    }
    ordered_json j = to_json(iv);
    j["se_source"] = cfg.delta ? "delta" : (boot ? "bootstrap" : "none");
    if (boot) j["bootstrap"] = to_json(*boot);
    estimates.push_back(j);
    table += estimate_row("iv", iv);
  }
  if (cfg.method == "naive" || cfg.method == "both") {
    const EffectEstimate naive = estimate_naive(d, opts);
    ordered_json j = to_json(naive);
    j["se_source"] = "probit";
    estimates.push_back(j);
    table += estimate_row("naive", naive);
  }
  report["estimates"] = estimates;

  CommandResult r;
  r.artifact = report.dump(2) + "\n";
  r.summary = "n = " + std::to_string(d.n()) + " (dropped " +
              std::to_string(d.provenance.rows_dropped) + ")\n" + table;
  return r;
}

CommandResult cmd_sweep(const RunConfig& cfg) {
  cfg.validate();
  const SweepPlan plan = cfg.sweep_plan();
  SweepOptions so;
  so.replicates = cfg.reps;
  so.level = cfg.level;
  so.threads = cfg.threads;
  so.estimation = estimation_options(cfg);

  SweepSource source;
  if (!cfg.input.empty()) {
    source = load_csv(cfg.input, cfg.effective_schema());
  } else {
    source = SimulationDesign{cfg.truth, IVScenario{parse_scenario(cfg.scenario), {}, {}}, cfg.n};
  }
  const SweepTable table = sweep(source, plan, so, RngStream(cfg.seed).derive(2));

  std::ostringstream csv;
  write_sweep_csv(csv, table);
  std::size_t fails = 0;
  std::map<std::string, std::size_t> reasons;
  for (const auto& row : table.rows) {
    fails += row.n_fail;
    for (const auto& [k, v] : row.failure_reasons) reasons[k] += v;
  }
  ordered_json m = manifest(cfg);
  m["failure_reasons"] = reasons;

  CommandResult r;
  r.artifact = csv.str();
  r.manifest = m.dump(2) + "\n";
  r.summary = std::to_string(table.rows.size()) + " cells, solver " + cfg.solver + ", " +
              std::to_string(fails) + " failed evaluations\n";
  return r;
}

CommandResult cmd_bootstrap(const RunConfig& cfg) {
  cfg.validate();
  const Dataset d = command_dataset(cfg);
  const EstimationOptions opts = estimation_options(cfg);
  const EffectEstimate point = estimate_alg1(d, opts);
  BootstrapOptions bo;
  bo.replicates = cfg.bootstrap;
  bo.level = cfg.level;
  bo.threads = cfg.threads;
  const BootstrapResult b =
      bootstrap(d, [&](const Dataset& s) { return estimate_alg1(s, opts).pair(); }, bo,
                RngStream(cfg.seed).derive(1));

  ordered_json report = manifest(cfg);
  report["data"] = data_json(d, cfg);
  report["estimate"] = to_json(point);
  report["bootstrap"] = to_json(b);

  CommandResult r;
  r.artifact = report.dump(2) + "\n";
  r.summary = "beta_xy = " + fixed(point.beta_xy) + " sd " + fixed(b.sd_xy) + " [" +
              fixed(b.ci_xy.lo) + ", " + fixed(b.ci_xy.hi) + "]\n" +
              "beta_yx = " + fixed(point.beta_yx) + " sd " + fixed(b.sd_yx) + " [" +
              fixed(b.ci_yx.lo) + ", " + fixed(b.ci_yx.hi) + "]\n" + std::to_string(b.successes) +
              "/" + std::to_string(b.replicates) + " replicates succeeded\n";
  return r;
}

CommandResult run_command(const RunConfig& cfg) {
  if (cfg.command == "simulate") return cmd_simulate(cfg);
  if (cfg.command == "estimate") return cmd_estimate(cfg);
  if (cfg.command == "sweep") return cmd_sweep(cfg);
  if (cfg.command == "bootstrap") return cmd_bootstrap(cfg);
  throw Error(ErrorCode::Configuration, "unknown command '" + cfg.command + "'");
}

void write_result(const RunConfig& cfg, const CommandResult& result, std::ostream& out) {
  if (cfg.output.empty()) {
    out << result.artifact;
    return;
  }
  auto write_file = [](const std::string& path, const std::string& text) {
    std::ofstream f(path, std::ios::binary | std::ios::trunc);
    if (!f) throw Error(ErrorCode::Io, "cannot write '" + path + "'");
    f << text;
    if (!f) throw Error(ErrorCode::Io, "write to '" + path + "' failed");
  };
  write_file(cfg.output, result.artifact);
  if (result.manifest) write_file(cfg.output + ".manifest.json", *result.manifest);
}

std::string error_document(const Error& e) {
  ordered_json j;
  j["error"]["code"] = std::string(error_code_name(e.code()));
  j["error"]["exit_status"] = exit_status(e.code());
  j["error"]["message"] = e.what();
  return j.dump() + "\n";
}

}  // namespace bicausal
