#include <chrono>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "prophet/allocation.hpp"
#include "prophet/harness.hpp"

namespace {

using prophet::ErrorKind;
using prophet::Json;
using prophet::LabError;

struct CommonOpts {
  std::string config;
  std::optional<std::uint64_t> seed;
  std::optional<long> samples;
  std::string out;
  std::string format;  // empty = subcommand default
  std::optional<int> workers;
};

void add_common(CLI::App* cmd, CommonOpts& opts) {
  cmd->add_option("--config", opts.config, "JSON configuration file")
      ->required();
  cmd->add_option("--seed", opts.seed, "override the configured seed");
  cmd->add_option("--samples", opts.samples,
                  "override the configured sample count");
  cmd->add_option("--out", opts.out, "write output to this file");
  cmd->add_option("--format", opts.format, "output format: json or csv");
  cmd->add_option("--workers", opts.workers,
                  "worker threads for Monte Carlo runs");
}

// Fields of `j` with convenient errors.
const Json& field(const Json& j, const std::string& key) {
  if (!j.is_object() || !j.contains(key))
    throw LabError(ErrorKind::parse, "config is missing \"" + key + "\"");
  return j[key];
}

std::string str_field(const Json& j, const std::string& key) {
  const Json& v = field(j, key);
  if (!v.is_string())
    throw LabError(ErrorKind::parse, "\"" + key + "\" must be a string");
  return v.get<std::string>();
}

double num_field(const Json& j, const std::string& key) {
  const Json& v = field(j, key);
  if (!v.is_number())
    throw LabError(ErrorKind::parse, "\"" + key + "\" must be a number");
  return v.get<double>();
}

// Paths inside a config resolve relative to the config file's directory.
std::string resolve(const std::string& config_path, const std::string& rel) {
  const std::filesystem::path p(rel);
  if (p.is_absolute()) return rel;
  return (std::filesystem::path(config_path).parent_path() / p).string();
}

void emit(const std::string& payload, const CommonOpts& opts,
          const std::string& summary) {
  if (!opts.out.empty()) {
    std::ofstream out(opts.out, std::ios::binary);
    if (!out.good())
      throw LabError(ErrorKind::parameter, "cannot write \"" + opts.out + "\"");
    out << payload;
    out.close();
    std::cout << summary << " -> " << opts.out << "\n";
  } else {
    std::cout << payload;
    std::cerr << summary << "\n";
  }
}

std::string json_payload(const Json& j) { return j.dump(2) + "\n"; }

prophet::ExperimentConfig base_config(const Json& cfg, const CommonOpts& opts) {
  prophet::ExperimentConfig ec;
  if (cfg.contains("mode"))
    ec.mode = prophet::run_mode_from_name(str_field(cfg, "mode"));
  if (cfg.contains("samples"))
    ec.samples = static_cast<long>(num_field(cfg, "samples"));
  if (cfg.contains("seed"))
    ec.seed = static_cast<std::uint64_t>(num_field(cfg, "seed"));
  if (cfg.contains("validate_classes")) {
    const Json& v = field(cfg, "validate_classes");
    if (!v.is_boolean())
      throw LabError(ErrorKind::parse, "\"validate_classes\" must be a bool");
    ec.validate_classes = v.get<bool>();
  }
  if (cfg.contains("workers"))
    ec.workers = static_cast<int>(num_field(cfg, "workers"));
  if (opts.seed) ec.seed = *opts.seed;
  if (opts.samples) ec.samples = *opts.samples;
  if (opts.workers) ec.workers = *opts.workers;
  return ec;
}

std::string wall(double seconds) {
  return "wall=" + prophet::fmt_double(seconds) + "s";
}

int cmd_simulate(const CommonOpts& opts) {
  const Json cfg = prophet::load_json(opts.config);
  prophet::ExperimentConfig ec = base_config(cfg, opts);
  ec.instance_label = str_field(cfg, "instance");
  ec.instance_path = resolve(opts.config, ec.instance_label);
  ec.mechanism = prophet::mechanism_from_name(str_field(cfg, "mechanism"));
  if (cfg.contains("prices")) {
    for (const auto& x : field(cfg, "prices"))
      ec.prices.push_back(x.get<double>());
  }
  if (cfg.contains("irsg"))
    ec.irsg_path = resolve(opts.config, str_field(cfg, "irsg"));
  if (cfg.contains("order")) {
    for (const auto& x : field(cfg, "order")) ec.order.push_back(x.get<int>());
  }

  const prophet::Report rep = prophet::estimate_ratio(ec);
  const std::string format = opts.format.empty() ? "json" : opts.format;
  std::string payload;
  if (format == "json")
    payload = json_payload(prophet::report_to_json(rep));
  else if (format == "csv")
    payload = prophet::report_to_csv(rep);
  else
    throw LabError(ErrorKind::parameter, "unknown format \"" + format + "\"");
  emit(payload, opts,
       "e_opt=" + prophet::fmt_double(rep.e_opt) +
           " e_alg=" + prophet::fmt_double(rep.e_alg) +
           " ratio=" + prophet::ratio_to_string(rep.ratio) + " " +
           wall(rep.wall_seconds));
  return 0;
}

int cmd_opt(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const std::string label = str_field(cfg, "instance");
  const prophet::ExperimentConfig ec = base_config(cfg, opts);
  const prophet::Instance inst = prophet::load_instance(
      resolve(opts.config, label), ec.validate_classes);

  Json j;
  j["instance"] = label;
  j["m"] = inst.m;
  j["n"] = inst.n();
  j["e_opt"] = prophet::expected_opt_exact(inst);
  bool deterministic = true;
  for (const auto& b : inst.bidders)
    if (b.support.size() != 1) deterministic = false;
  j["deterministic"] = deterministic;
  if (deterministic) {
    std::vector<int> idx(inst.n(), 0);
    const prophet::OptResult opt =
        prophet::optimal_allocation(prophet::make_profile(inst, idx));
    Json parts = Json::array();
    for (prophet::ItemSet part : opt.alloc.parts) {
      Json items = Json::array();
      for (prophet::ItemSet rest = part; rest != 0; rest &= rest - 1)
        items.push_back(std::countr_zero(rest));
      parts.push_back(std::move(items));
    }
    j["allocation"] = std::move(parts);
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(json_payload(j), opts,
       "e_opt=" + prophet::fmt_double(j["e_opt"].get<double>()) + " " +
           wall(secs));
  return 0;
}

int cmd_mirror_check(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const prophet::ExperimentConfig ec = base_config(cfg, opts);
  const std::string label = str_field(cfg, "instance");
  const prophet::Instance inst = prophet::load_instance(
      resolve(opts.config, label), ec.validate_classes);
  const prophet::Irsg g =
      prophet::load_irsg(resolve(opts.config, str_field(cfg, "irsg")), inst);

  Json j;
  j["instance"] = label;
  j["mode"] = prophet::run_mode_name(ec.mode);
  double lhs = 0, rhs = 0;
  if (ec.mode == prophet::RunMode::exact) {
    const prophet::MirrorSides sides = prophet::mirror_sides_exact(inst, g);
    lhs = sides.lhs;
    rhs = sides.rhs;
  } else {
    const prophet::MirrorEstimate est = prophet::mirror_sides_mc(
        inst, g, ec.samples, ec.seed, ec.workers);
    lhs = est.lhs;
    rhs = est.rhs;
    j["samples"] = est.samples;
    j["seed"] = ec.seed;
    j["lhs_ci"] = est.lhs_half;
    j["rhs_ci"] = est.rhs_half;
  }
  j["lhs"] = lhs;
  j["rhs"] = rhs;
  j["tolerance"] = 1e-9;
  j["holds"] = lhs >= rhs - 1e-9;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(json_payload(j), opts,
       "lhs=" + prophet::fmt_double(lhs) + " rhs=" + prophet::fmt_double(rhs) +
           " " + wall(secs));
  return 0;
}

int cmd_balance_check(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const prophet::ExperimentConfig ec = base_config(cfg, opts);
  const std::string label = str_field(cfg, "instance");
  const prophet::Instance inst = prophet::load_instance(
      resolve(opts.config, label), ec.validate_classes);
  for (const auto& b : inst.bidders)
    if (b.support.size() != 1)
      throw LabError(ErrorKind::parameter,
                     "balance-check needs a deterministic instance (every "
                     "support must have one valuation)");
  const double alpha = cfg.contains("alpha") ? num_field(cfg, "alpha") : 1.0;
  const double beta = cfg.contains("beta") ? num_field(cfg, "beta") : 1.0;

  const prophet::Profile profile =
      prophet::make_profile(inst, std::vector<int>(inst.n(), 0));
  prophet::PriceVector prices;
  if (cfg.contains("prices")) {
    for (const auto& x : field(cfg, "prices")) prices.push_back(x.get<double>());
    prophet::validate_prices(inst.m, prices);
  } else {
    prices = prophet::supporting_clause_prices(profile);
  }
  const prophet::BalanceReport rep = prophet::check_balanced(
      profile, prophet::item_pricing_rule(prices), alpha, beta);

  const auto parts_json = [](const prophet::Allocation& a) {
    Json parts = Json::array();
    for (prophet::ItemSet part : a.parts) {
      Json items = Json::array();
      for (prophet::ItemSet rest = part; rest != 0; rest &= rest - 1)
        items.push_back(std::countr_zero(rest));
      parts.push_back(std::move(items));
    }
    return parts;
  };

  Json j;
  j["instance"] = label;
  j["alpha"] = alpha;
  j["beta"] = beta;
  j["prices"] = prices;
  j["ok"] = rep.ok;
  j["cond1_ok"] = rep.cond1_ok;
  j["cond2_ok"] = rep.cond2_ok;
  j["worst_slack"] = rep.worst_slack;
  if (!rep.ok) j["failing_condition"] = rep.failing_condition;
  j["witness_x"] = parts_json(rep.witness_x);
  j["witness_xprime"] = parts_json(rep.witness_xprime);
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(json_payload(j), opts,
       std::string("ok=") + (rep.ok ? "true" : "false") +
           " worst_slack=" + prophet::fmt_double(rep.worst_slack) + " " +
           wall(secs));
  return 0;
}

int cmd_subgood(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const prophet::ValuationSpec v =
      prophet::valuation_from_json(field(cfg, "valuation"));
  prophet::ItemSet u = 0;
  for (const auto& x : field(cfg, "u")) {
    const int item = x.get<int>();
    if (item < 0 || item >= v.item_count())
      throw LabError(ErrorKind::parameter, "ground set item out of range");
    u |= prophet::ItemSet{1} << item;
  }
  const int resolution =
      cfg.contains("resolution") ? static_cast<int>(num_field(cfg, "resolution"))
                                 : 100;
  const prophet::SubgoodSolution sol = prophet::solve_subgood(v, u, resolution);
  const double slack = prophet::verify_subgood(sol, v, u);
  Json j = prophet::subgood_to_json(sol, slack);
  j["resolution"] = resolution;
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(json_payload(j), opts,
       "guarantee=" + prophet::fmt_double(sol.guarantee) + " " + wall(secs));
  return 0;
}

int cmd_fixed_point(const CommonOpts& opts,
                    const std::optional<double>& epsilon_flag,
                    const std::optional<long>& max_iters_flag,
                    const std::optional<double>& tolerance_flag) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const prophet::ExperimentConfig ec = base_config(cfg, opts);
  const std::string label = str_field(cfg, "instance");
  const prophet::Instance inst = prophet::load_instance(
      resolve(opts.config, label), ec.validate_classes);

  double epsilon = cfg.contains("epsilon") ? num_field(cfg, "epsilon") : 0.0;
  if (epsilon_flag) epsilon = *epsilon_flag;
  if (epsilon <= 0)
    throw LabError(ErrorKind::parameter,
                   "fixed-point needs a positive epsilon (config or --epsilon)");
  long max_iters =
      cfg.contains("max_iters") ? static_cast<long>(num_field(cfg, "max_iters"))
                                : 10000;
  if (max_iters_flag) max_iters = *max_iters_flag;
  double tolerance =
      cfg.contains("tolerance") ? num_field(cfg, "tolerance") : 1e-6;
  if (tolerance_flag) tolerance = *tolerance_flag;

  const prophet::FixedPointResult res =
      prophet::find_fixed_point(inst, epsilon, max_iters, tolerance);
  Json j = prophet::fixed_point_to_json(res);
  j["instance"] = label;
  j["epsilon"] = epsilon;
  j["max_iters"] = max_iters;
  j["tolerance"] = tolerance;
  j["irsg"] = prophet::irsg_to_json(res.x.to_irsg(inst));
  if (cfg.contains("theorem_epsilon")) {
    const double te = num_field(cfg, "theorem_epsilon");
    try {
      j["certify"] = prophet::constant_bound_to_json(
          prophet::verify_constant_bound(inst, res.x, te, tolerance));
    } catch (const LabError& e) {
      Json err;
      err["error"] = e.what();
      j["certify"] = std::move(err);
    }
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(json_payload(j), opts,
       std::string("converged=") + (res.converged ? "true" : "false") +
           " residual=" + prophet::fmt_double(res.residual) +
           " iterations=" + std::to_string(res.iterations) + " " + wall(secs));
  return 0;
}

int cmd_suite(const CommonOpts& opts) {
  const auto t0 = std::chrono::steady_clock::now();
  const Json cfg = prophet::load_json(opts.config);
  const prophet::ExperimentConfig defaults = base_config(cfg, opts);

  std::vector<std::string> labels, paths;
  for (const auto& x : field(cfg, "instances")) {
    if (!x.is_string())
      throw LabError(ErrorKind::parse, "\"instances\" must hold strings");
    labels.push_back(x.get<std::string>());
    paths.push_back(resolve(opts.config, x.get<std::string>()));
  }
  std::vector<prophet::MechanismKind> mechanisms;
  for (const auto& x : field(cfg, "mechanisms")) {
    if (!x.is_string())
      throw LabError(ErrorKind::parse, "\"mechanisms\" must hold strings");
    mechanisms.push_back(prophet::mechanism_from_name(x.get<std::string>()));
  }

  std::vector<prophet::SuiteRow> rows =
      prophet::run_suite(paths, mechanisms, defaults);
  // Report the labels as written in the config, not resolved paths.
  for (std::size_t t = 0; t < rows.size(); ++t) {
    const std::size_t which = t / mechanisms.size();
    rows[t].instance = labels[which];
    if (rows[t].report) rows[t].report->instance = labels[which];
  }

  const std::string format = opts.format.empty() ? "csv" : opts.format;
  std::string payload;
  if (format == "csv") {
    payload = prophet::suite_to_csv(rows);
  } else if (format == "json") {
    Json arr = Json::array();
    for (const auto& row : rows) {
      Json rj;
      rj["instance"] = row.instance;
      rj["mechanism"] = prophet::mechanism_name(row.mechanism);
      rj["status"] = row.status;
      if (row.report) rj["report"] = prophet::report_to_json(*row.report);
      arr.push_back(std::move(rj));
    }
    Json j;
    j["rows"] = std::move(arr);
    payload = json_payload(j);
  } else {
    throw LabError(ErrorKind::parameter, "unknown format \"" + format + "\"");
  }
  const double secs =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  emit(payload, opts,
       std::to_string(rows.size()) + " rows " + wall(secs));
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"laboratory for posted-price mechanisms under prophet bounds"};
  app.require_subcommand(1);

  CommonOpts sim_o, opt_o, mirror_o, balance_o, subgood_o, fixed_o, suite_o;
  std::optional<double> fp_epsilon, fp_tolerance;
  std::optional<long> fp_max_iters;

  CLI::App* sim = app.add_subcommand("simulate", "run one mechanism");
  add_common(sim, sim_o);
  CLI::App* opt = app.add_subcommand("opt", "exact expected optimum");
  add_common(opt, opt_o);
  CLI::App* mirror =
      app.add_subcommand("mirror-check", "two-sided welfare bound");
  add_common(mirror, mirror_o);
  CLI::App* balance =
      app.add_subcommand("balance-check", "price balancedness audit");
  add_common(balance, balance_o);
  CLI::App* subgood =
      app.add_subcommand("subgood", "max-min pricing certificate");
  add_common(subgood, subgood_o);
  CLI::App* fixed =
      app.add_subcommand("fixed-point", "search for a stable score generator");
  add_common(fixed, fixed_o);
  fixed->add_option("--epsilon", fp_epsilon, "grid step");
  fixed->add_option("--max-iters", fp_max_iters, "iteration budget");
  fixed->add_option("--tolerance", fp_tolerance, "residual tolerance");
  CLI::App* suite = app.add_subcommand("suite", "instance x mechanism sweep");
  add_common(suite, suite_o);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (sim->parsed()) return cmd_simulate(sim_o);
    if (opt->parsed()) return cmd_opt(opt_o);
    if (mirror->parsed()) return cmd_mirror_check(mirror_o);
    if (balance->parsed()) return cmd_balance_check(balance_o);
    if (subgood->parsed()) return cmd_subgood(subgood_o);
    if (fixed->parsed())
      return cmd_fixed_point(fixed_o, fp_epsilon, fp_max_iters, fp_tolerance);
    if (suite->parsed()) return cmd_suite(suite_o);
  } catch (const LabError& e) {
    std::cerr << "error (" << prophet::error_kind_name(e.kind())
              << "): " << e.what() << "\n";
    return e.exit_code();
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 2;
}
