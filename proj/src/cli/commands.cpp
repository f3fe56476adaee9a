#include <fmt/format.h>
#include <openssl/evp.h>

#include <CLI11.hpp>
#include <array>
#include <cmath>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>

#include "json.hpp"
#include "usocost/cli.hpp"
#include "usocost/csv.hpp"
#include "usocost/error.hpp"
#include "usocost/exchange.hpp"
#include "usocost/loop_cost.hpp"
#include "usocost/nusc.hpp"
#include "usocost/sdca.hpp"
#include "usocost/trading.hpp"

#ifndef USOCOST_VERSION
#define USOCOST_VERSION "0.0.0"
#endif

namespace usocost::cli {
namespace {

using nlohmann::json;

// Input problems that should map to exit code 2 but are not already one of
// the library's error types.
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Four significant digits, locale independent.
std::string g4(double v) { return fmt::format("{:.4g}", v); }

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw InputError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

json parse_json(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw InputError(what + ": " + e.what());
  }
}

struct Globals {
  std::string json_path;
  std::string csv_path;
  std::optional<std::uint64_t> seed;
  std::string manifest_path;
  std::string currency = "INR thousand";
};

// Collects everything needed to reproduce one invocation.
class Run {
 public:
  Run(std::string command, const Globals& g) : command_(std::move(command)), globals_(g) {}

  std::string input(const std::string& given) {
    const auto path = resolve_input(given);
    std::string bytes = read_file(path);
    inputs_.push_back({{"path", given}, {"sha256", sha256_hex(bytes)}});
    return bytes;
  }

  void param(const std::string& key, json value) { params_[key] = std::move(value); }

  void output(const std::string& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write '" + path + "'");
    out << content;
    outputs_.push_back({{"path", path}, {"sha256", sha256_hex(content)}});
  }

  std::ostringstream& text() { return text_; }

  void finish(std::ostream& out) {
    const std::string report = text_.str();
    out << report;
    if (globals_.manifest_path.empty()) return;
    json manifest{{"command", command_},
                  {"tool_version", USOCOST_VERSION},
                  {"inputs", inputs_},
                  {"parameters", params_},
                  {"outputs", outputs_},
                  {"stdout_sha256", sha256_hex(report)}};
    std::ofstream m(globals_.manifest_path, std::ios::binary);
    if (!m) throw InputError("cannot write '" + globals_.manifest_path + "'");
    m << manifest.dump(2) << '\n';
  }

 private:
  std::string command_;
  const Globals& globals_;
  json inputs_ = json::array();
  json params_ = json::object();
  json outputs_ = json::array();
  std::ostringstream text_;
};

std::vector<ExchangeRecord> records_from(Run& run, const std::string& path) {
  std::istringstream in(run.input(path));
  return parse_exchange_csv(in);
}

// A model file may hold a bare loop cost model, or an object with
// "loop_cost" and/or "density_size" members.
void load_models(Run& run, const std::string& path, LoopCostModel& lcm, DensitySizeModel& dsm) {
  const json j = parse_json(run.input(path), path);
  if (j.contains("loop_cost") || j.contains("density_size")) {
    if (j.contains("loop_cost")) lcm = j.at("loop_cost").get<LoopCostModel>();
    if (j.contains("density_size")) dsm = j.at("density_size").get<DensitySizeModel>();
  } else {
    lcm = j.get<LoopCostModel>();
  }
}

std::string plot_data_csv(std::span<const ExchangeRecord> records) {
  std::ostringstream out;
  out << "series,name,x,y\n";
  const auto row = [&](const char* series, const ExchangeRecord& r, double x, double y) {
    out << series << ',' << csv::escape(r.name) << ',' << csv::format_double(x) << ',' << csv::format_double(y)
        << '\n';
  };
  for (const auto& r : records) row("size_vs_cost", r, static_cast<double>(r.equipped_capacity), r.cost_per_line);
  for (const auto& r : records) row("density_vs_cost", r, r.subscriber_density, r.cost_per_line);
  for (const auto& r : records)
    row("size_vs_density", r, static_cast<double>(r.equipped_capacity), r.subscriber_density);
  return out.str();
}

void report_validation_failures(const ValidationReport& report, std::ostream& err) {
  for (const auto& rr : report.records) {
    for (const auto& c : rr.checks) {
      if (c.mandatory && !c.passed) {
        err << fmt::format("row {} ({}): {} relative error {:.2f}% exceeds {:.2f}%\n", rr.index + 1, rr.name,
                           to_string(c.kind), 100.0 * c.relative_error, 100.0 * c.tolerance);
      }
    }
  }
}

// ---------------------------------------------------------------------------

struct FitOptions {
  std::string csv;
  double cap = 50.0;
  bool no_validate = false;
  std::string plot_data;
};

int cmd_fit(const FitOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("fit", g);
  run.param("csv", o.csv);
  run.param("density_cap", o.cap);
  run.param("validate", !o.no_validate);
  const auto records = records_from(run, o.csv);
  if (records.size() < 3) {
    err << "error: need ≥3 rows to fit the loop cost model (got " << records.size() << ")\n";
    return kExitInput;
  }
  if (!o.no_validate) {
    const auto report = validate_records(records);
    if (!report.passed) {
      report_validation_failures(report, err);
      return kExitInput;
    }
  }
  const auto points = cost_points(records);
  const LoopCostModel m = fit_loglog(points, o.cap);

  auto& t = run.text();
  t << fmt::format("loop cost model, n = {}, density cap {}\n", m.n, g4(m.density_cap));
  t << fmt::format("  ln(cost per line) = {} {} {} ln(subscriber density)\n", g4(m.intercept),
                   m.slope < 0 ? "-" : "+", g4(std::abs(m.slope)));
  t << fmt::format("  intercept {:>10}   t = {}\n", g4(m.intercept), g4(m.t_intercept));
  t << fmt::format("  slope     {:>10}   t = {}\n", g4(m.slope), g4(m.t_slope));
  t << fmt::format("  R^2       {:>10}\n", g4(m.r_squared));

  if (!g.json_path.empty()) run.output(g.json_path, json(m).dump(2) + "\n");
  if (!g.csv_path.empty()) {
    std::ostringstream c;
    c << "name,density,observed_cost,fitted_cost,relative_residual\n";
    for (const auto& r : records) {
      const double fitted = predict_cost(m, r.subscriber_density);
      c << csv::escape(r.name) << ',' << csv::format_double(r.subscriber_density) << ','
        << csv::format_double(r.cost_per_line) << ',' << csv::format_double(fitted) << ','
        << csv::format_double((fitted - r.cost_per_line) / r.cost_per_line) << '\n';
    }
    run.output(g.csv_path, c.str());
  }
  if (!o.plot_data.empty()) run.output(o.plot_data, plot_data_csv(records));
  run.finish(out);
  return kExitOk;
}

struct PredictOptions {
  std::string model;
  std::string size_model;
  std::optional<double> density;
  std::optional<double> size;
  std::optional<double> cap;
};

int cmd_predict(const PredictOptions& o, const Globals& g, std::ostream& out, std::ostream&) {
  Run run("predict", g);
  LoopCostModel lcm = LoopCostModel::published();
  DensitySizeModel dsm;
  if (!o.model.empty()) {
    load_models(run, o.model, lcm, dsm);
    run.param("model", o.model);
  }
  if (!o.size_model.empty()) {
    dsm = parse_json(run.input(o.size_model), o.size_model).get<DensitySizeModel>();
    run.param("size_model", o.size_model);
  }
  if (o.cap) lcm.density_cap = *o.cap;
  if (o.density.has_value() == o.size.has_value()) throw InputError("give exactly one of --density or --size");

  double density = 0.0;
  json result;
  auto& t = run.text();
  if (o.size) {
    if (!(*o.size > 0.0)) throw DomainError("exchange size must be positive");
    run.param("size", *o.size);
    density = density_from_size(dsm, *o.size);
    result["size"] = *o.size;
    t << fmt::format("size {} lines -> density {} per km2\n", g4(*o.size), g4(density));
  } else {
    density = *o.density;
    run.param("density", density);
  }
  const double cost = predict_cost(lcm, density);
  result["density"] = density;
  result["cost_per_line"] = cost;
  result["density_band"] = to_string(classify_density_band(density));
  t << fmt::format("density {} per km2 -> cost per line {} {}\n", g4(density), g4(cost), g.currency);

  if (!g.json_path.empty()) run.output(g.json_path, result.dump(2) + "\n");
  if (!g.csv_path.empty()) {
    run.output(g.csv_path, "size,density,cost_per_line\n" + (o.size ? csv::format_double(*o.size) : std::string()) +
                               "," + csv::format_double(density) + "," + csv::format_double(cost) + "\n");
  }
  run.finish(out);
  return kExitOk;
}

struct AggregateOptions {
  std::string input;
  std::string models;
  std::vector<std::string> group_by;
  std::string plot_data;
};

int cmd_aggregate(const AggregateOptions& o, const Globals& g, std::ostream& out, std::ostream&) {
  Run run("aggregate", g);
  run.param("input", o.input);
  auto& t = run.text();
  const bool is_json = std::filesystem::path(o.input).extension() == ".json";

  if (!is_json) {
    const auto records = records_from(run, o.input);
    const AggregateRow row = summarize_records(records);
    t << fmt::format("{} exchanges\n", row.count);
    t << fmt::format("  equipped capacity (mean)      {}\n", g4(row.equipped_capacity));
    t << fmt::format("  served area (mean, km2)       {}\n", g4(row.served_area));
    t << fmt::format("  served population (mean)      {}\n", g4(row.served_population));
    t << fmt::format("  subscriber density (ratio)    {}\n", g4(row.subscriber_density));
    t << fmt::format("  teledensity (ratio)           {}\n", g4(row.teledensity));
    t << fmt::format("  CKM per line (cap-weighted)   {}\n", g4(row.ckm_per_line));
    t << fmt::format("  cost per line (cap-weighted)  {} {}\n", g4(row.cost_per_line), g.currency);
    t << fmt::format("  installation share (spend)    {}%\n", g4(100.0 * row.installation_share));
    if (row.dels) t << fmt::format("  DELs (mean of present)        {}\n", g4(*row.dels));

    if (!g.json_path.empty()) run.output(g.json_path, json(row).dump(2) + "\n");
    if (!g.csv_path.empty()) {
      std::ostringstream c;
      write_aggregate_csv(c, row);
      run.output(g.csv_path, c.str());
    }
    if (!o.plot_data.empty()) run.output(o.plot_data, plot_data_csv(records));
    run.finish(out);
    return kExitOk;
  }

  LoopCostModel lcm = LoopCostModel::published();
  DensitySizeModel dsm;
  if (!o.models.empty()) {
    load_models(run, o.models, lcm, dsm);
    run.param("models", o.models);
  }
  json doc = parse_json(run.input(o.input), o.input);
  std::vector<SdcaProfile> profiles;
  try {
    if (doc.is_array()) {
      profiles = doc.get<std::vector<SdcaProfile>>();
    } else {
      profiles.push_back(doc.get<SdcaProfile>());
    }
  } catch (const json::exception& e) {
    throw ConfigError(o.input + ": " + e.what());
  }

  std::vector<SdcaCostEstimate> estimates;
  for (const auto& p : profiles) estimates.push_back(estimate_sdca_cost(p, dsm, lcm));
  for (const auto& e : estimates) {
    t << fmt::format("SDCA {} (SSA {})\n", e.sdca_id, e.ssa_id.empty() ? "-" : e.ssa_id);
    t << fmt::format("  {:>8} {:>10} {:>10}\n", "size", "density", "cost");
    for (const auto& x : e.exchanges)
      t << fmt::format("  {:>8} {:>10} {:>10}{}\n", g4(x.size), g4(x.density), g4(x.cost_per_line),
                       x.observed_density ? " (observed)" : "");
    t << fmt::format("  weighted cost per line {} {}, aggregate density {}\n", g4(e.weighted_cost_per_line),
                     g.currency, g4(e.aggregate_density));
  }

  json result{{"estimates", estimates}};
  if (!o.group_by.empty()) {
    run.param("group_by", o.group_by);
    json groups = json::array();
    for (const auto& grp : group_profiles(profiles, o.group_by)) {
      json ids = json::array();
      for (const auto& p : grp.profiles) ids.push_back(p.sdca_id);
      groups.push_back({{"key", grp.key}, {"untagged", grp.untagged}, {"sdca_ids", ids}});
      t << fmt::format("group {}: {} profile(s)\n", grp.untagged ? std::string("untagged") : fmt::format("{}", fmt::join(grp.key, "/")),
                       grp.profiles.size());
    }
    result["groups"] = std::move(groups);
  }
  if (!g.json_path.empty()) run.output(g.json_path, result.dump(2) + "\n");
  if (!g.csv_path.empty()) {
    std::ostringstream c;
    write_estimates_csv(c, estimates);
    run.output(g.csv_path, c.str());
  }
  run.finish(out);
  return kExitOk;
}

struct NuscOptions {
  std::string scenario;
  std::vector<double> capex;
};

int cmd_nusc(const NuscOptions& o, const Globals& g, std::ostream& out, std::ostream&) {
  Run run("nusc", g);
  run.param("scenario", o.scenario);
  NuscScenario base;
  try {
    base = parse_json(run.input(o.scenario), o.scenario).get<NuscScenario>();
  } catch (const json::exception& e) {
    throw ConfigError(o.scenario + ": " + e.what());
  }
  const std::vector<double> grid = o.capex.empty() ? kDefaultCapexGrid : o.capex;
  run.param("capex", grid);
  if (base.capex_per_line <= 0.0) base.capex_per_line = grid.front();
  const auto rows = scenario_grid(base, grid);

  auto& t = run.text();
  t << fmt::format("{:>10} {:>16} {:>10} {:>10} {:>10}   ({} per line per year)\n", "capex", "annualized_capex",
                   "opex", "revenue", "nusc", base.currency);
  for (const auto& r : rows)
    t << fmt::format("{:>10} {:>16} {:>10} {:>10} {:>10}\n", g4(r.capex_per_line), g4(r.annualized_capex),
                     g4(r.annual_opex), g4(r.annual_revenue), g4(r.nusc));

  if (!g.json_path.empty()) run.output(g.json_path, json{{"scenario", base}, {"results", rows}}.dump(2) + "\n");
  if (!g.csv_path.empty()) {
    std::ostringstream c;
    write_nusc_csv(c, rows);
    run.output(g.csv_path, c.str());
  }
  run.finish(out);
  return kExitOk;
}

struct SimulateOptions {
  std::string config;
};

int cmd_simulate(const SimulateOptions& o, const Globals& g, std::ostream& out, std::ostream&) {
  Run run("simulate", g);
  run.param("config", o.config);
  trading::SimulationConfig config;
  try {
    config = parse_json(run.input(o.config), o.config).get<trading::SimulationConfig>();
  } catch (const json::exception& e) {
    throw ConfigError(o.config + ": " + e.what());
  }
  if (g.seed) config.seed = *g.seed;
  run.param("seed", config.seed);
  const auto outcome = trading::run_simulation(config);

  auto& t = run.text();
  t << fmt::format("{} periods, {} milestones, {} commitments, seed {}\n", config.periods, config.milestones.size(),
                   config.commitments, config.seed);
  t << "completions:";
  if (outcome.completion_order.empty()) t << " none";
  for (const auto& c : outcome.completion_order) t << fmt::format(" [p{} m{} {} {}]", c.period, c.milestone, c.op, g4(c.cost));
  t << '\n';
  t << fmt::format("{:<12} {:>11} {:>7} {:>10} {:>11}\n", "operator", "completions", "trades", "penalties",
                   "total_cost");
  for (const auto& s : outcome.operators)
    t << fmt::format("{:<12} {:>11} {:>7} {:>10} {:>11}\n", s.id, s.completions, s.trades, s.penalties,
                     g4(s.total_cost));

  if (!g.json_path.empty()) run.output(g.json_path, json(outcome).dump(2) + "\n");
  if (!g.csv_path.empty()) {
    std::ostringstream c;
    trading::write_summary_csv(c, outcome);
    run.output(g.csv_path, c.str());
  }
  run.finish(out);
  return kExitOk;
}

struct ValidateOptions {
  std::string csv;
  ValidationConfig tolerances;
};

int cmd_validate(const ValidateOptions& o, const Globals& g, std::ostream& out, std::ostream& err) {
  Run run("validate", g);
  run.param("csv", o.csv);
  run.param("density_tolerance", o.tolerances.density_tolerance);
  run.param("teledensity_tolerance", o.tolerances.teledensity_tolerance);
  run.param("identity_tolerance", o.tolerances.identity_tolerance);
  const auto records = records_from(run, o.csv);
  const auto report = validate_records(records, o.tolerances);

  auto& t = run.text();
  for (const auto& rr : report.records) {
    t << fmt::format("{:<16} {}", rr.name, rr.passed ? "pass" : "FAIL");
    for (const auto& c : rr.checks)
      t << fmt::format("  {}{}={}%", c.passed ? "" : "!", to_string(c.kind), g4(100.0 * c.relative_error));
    t << '\n';
  }
  t << fmt::format("{} records, overall {}\n", report.records.size(), report.passed ? "pass" : "FAIL");
  if (!g.json_path.empty()) run.output(g.json_path, json(report).dump(2) + "\n");
  run.finish(out);
  if (!report.passed) {
    report_validation_failures(report, err);
    return kExitInput;
  }
  return kExitOk;
}

}  // namespace

std::string sha256_hex(const std::string& bytes) {
  std::array<unsigned char, EVP_MAX_MD_SIZE> digest{};
  unsigned int len = 0;
  std::unique_ptr<EVP_MD_CTX, decltype(&EVP_MD_CTX_free)> ctx(EVP_MD_CTX_new(), &EVP_MD_CTX_free);
  if (!ctx || EVP_DigestInit_ex(ctx.get(), EVP_sha256(), nullptr) != 1 ||
      EVP_DigestUpdate(ctx.get(), bytes.data(), bytes.size()) != 1 ||
      EVP_DigestFinal_ex(ctx.get(), digest.data(), &len) != 1)
    throw std::runtime_error("sha256 failed");
  std::string hex;
  for (unsigned int i = 0; i < len; ++i) hex += fmt::format("{:02x}", digest[i]);
  return hex;
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Universal service obligation cost toolkit: local loop cost fitting, SDCA aggregation, "
               "net universal service cost scenarios and a tradable-obligation simulator."};
  app.name(args.empty() ? "usocost" : args.front());
  app.set_version_flag("--version", USOCOST_VERSION);
  app.require_subcommand(1);
  app.fallthrough();

  Globals g;
  app.add_option("--json", g.json_path, "Write the machine-readable result (full precision) to this JSON file");
  app.add_option("--csv", g.csv_path, "Write a flat CSV table to this file");
  app.add_option("--seed", g.seed, "Random seed (simulate)");
  app.add_option("--manifest", g.manifest_path, "Write a reproducibility manifest (inputs, parameters, digests)");
  app.add_option("--currency", g.currency, "Currency unit label used in text reports")->capture_default_str();

  FitOptions fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit ln(cost per line) = a + b ln(subscriber density) by OLS");
  fit_cmd->add_option("csv", fit.csv, "Exchange records CSV")->required();
  fit_cmd->add_option("--cap", fit.cap, "Density above which cost per line is flat")->capture_default_str();
  fit_cmd->add_flag("--no-validate", fit.no_validate, "Skip the density consistency check");
  fit_cmd->add_option("--plot-data", fit.plot_data, "Write size/density/cost scatter series as CSV");

  PredictOptions pred;
  auto* pred_cmd = app.add_subcommand("predict", "Predict outdoor-plant cost per line from density or exchange size");
  pred_cmd->add_option("--model", pred.model, "Loop cost model JSON (default: published coefficients)");
  pred_cmd->add_option("--size-model", pred.size_model, "Density-size model JSON (default: 0.0179 size + 0.0169)");
  pred_cmd->add_option("--density", pred.density, "Subscriber density per km2");
  pred_cmd->add_option("--size", pred.size, "Exchange size in equipped lines; mapped to density first");
  pred_cmd->add_option("--cap", pred.cap, "Override the model's density cap");

  AggregateOptions agg;
  auto* agg_cmd = app.add_subcommand(
      "aggregate", "Summarize exchange records (CSV) or estimate SDCA costs from size profiles (JSON)");
  agg_cmd->add_option("input", agg.input, "Exchange records CSV or SDCA profiles JSON")->required();
  agg_cmd->add_option("--models", agg.models, "Model JSON (loop cost model, or {loop_cost, density_size})");
  agg_cmd->add_option("--group-by", agg.group_by, "Tag keys for grouping SDCA profiles");
  agg_cmd->add_option("--plot-data", agg.plot_data, "Write size/density/cost scatter series as CSV");

  NuscOptions nusc;
  auto* nusc_cmd = app.add_subcommand("nusc", "Net universal service cost per line over a capex grid");
  nusc_cmd->add_option("scenario", nusc.scenario, "Scenario JSON")->required();
  nusc_cmd->add_option("--capex", nusc.capex, "Capex per line values (default 50 75 100)");

  SimulateOptions sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Run the tradable obligation simulator");
  sim_cmd->add_option("config", sim.config, "Simulation config JSON")->required();

  ValidateOptions val;
  auto* val_cmd = app.add_subcommand(
      "validate", "Check exchange records: density vs capacity/area (mandatory), teledensity and identity (reported)");
  val_cmd->add_option("csv", val.csv, "Exchange records CSV")->required();
  val_cmd->add_option("--density-tol", val.tolerances.density_tolerance)->capture_default_str();
  val_cmd->add_option("--teledensity-tol", val.tolerances.teledensity_tolerance)->capture_default_str();
  val_cmd->add_option("--identity-tol", val.tolerances.identity_tolerance)->capture_default_str();

  app.footer(
      "Density bands are half-open: below_5 = [0,5), from_5_to_10 = [5,10), above_10 = [10,inf).\n"
      "Exit codes: 0 success, 2 input or validation error, 1 internal error.\n"
      "USOCOST_FIXTURE_DIR overrides where bundled fixtures (table3.csv, ...) are looked up.");

  std::vector<std::string> reversed(args.rbegin(), args.rend());
  if (!reversed.empty()) reversed.pop_back();
  try {
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitInput;
  }

  try {
    if (*fit_cmd) return cmd_fit(fit, g, out, err);
    if (*pred_cmd) return cmd_predict(pred, g, out, err);
    if (*agg_cmd) return cmd_aggregate(agg, g, out, err);
    if (*nusc_cmd) return cmd_nusc(nusc, g, out, err);
    if (*sim_cmd) return cmd_simulate(sim, g, out, err);
    if (*val_cmd) return cmd_validate(val, g, out, err);
  } catch (const ParseError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const DomainError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const ConfigError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const LedgerError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const InputError& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << '\n';
    return kExitInput;
  } catch (const std::exception& e) {
    err << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
  return kExitInternal;
}

}  // namespace usocost::cli
