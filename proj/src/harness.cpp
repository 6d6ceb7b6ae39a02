#include "prophet/harness.hpp"

#include <algorithm>
#include <charconv>
#include <chrono>
#include <cmath>
#include <fstream>
#include <sstream>
#include <thread>

#include "prophet/allocation.hpp"

namespace prophet {
namespace {

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

std::vector<double> double_list(const Json& j, const std::string& what) {
  require(j.is_array(), ErrorKind::parse, what + " must be an array");
  std::vector<double> out;
  for (const auto& x : j) {
    require(x.is_number(), ErrorKind::parse, what + " must hold numbers");
    out.push_back(x.get<double>());
  }
  return out;
}

Json items_to_json(ItemSet s) {
  Json arr = Json::array();
  for (ItemSet rest = s; rest != 0; rest &= rest - 1)
    arr.push_back(std::countr_zero(rest));
  return arr;
}

struct ReplicaStats {
  double mean = 0;
  double half = 0;  // 95% halfwidth
};

ReplicaStats summarize(const std::vector<double>& vals) {
  const long n = static_cast<long>(vals.size());
  double total = 0;
  for (double x : vals) total += x;
  ReplicaStats st;
  st.mean = total / static_cast<double>(n);
  if (n > 1) {
    double ss = 0;
    for (double x : vals) ss += (x - st.mean) * (x - st.mean);
    st.half = 1.96 * std::sqrt(ss / static_cast<double>(n - 1)) /
              std::sqrt(static_cast<double>(n));
  }
  return st;
}

// Runs fn(replica) over [0, samples) on `workers` threads; any exception is
// rethrown on the caller thread.
void parallel_replicas(long samples, int workers,
                       const std::function<void(long)>& fn) {
  if (workers <= 1 || samples < 2 * workers) {
    for (long r = 0; r < samples; ++r) fn(r);
    return;
  }
  std::vector<std::thread> pool;
  std::vector<std::exception_ptr> errors(workers);
  const long chunk = (samples + workers - 1) / workers;
  for (int w = 0; w < workers; ++w) {
    const long lo = w * chunk;
    const long hi = std::min(samples, lo + chunk);
    if (lo >= hi) break;
    pool.emplace_back([&, lo, hi, w]() {
      try {
        for (long r = lo; r < hi; ++r) fn(r);
      } catch (...) {
        errors[w] = std::current_exception();
      }
    });
  }
  for (auto& t : pool) t.join();
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

const char* mechanism_name(MechanismKind k) {
  switch (k) {
    case MechanismKind::single_item: return "single_item";
    case MechanismKind::balanced_xos: return "balanced_xos";
    case MechanismKind::correa_cristi: return "correa_cristi";
    case MechanismKind::custom_prices: return "custom_prices";
  }
  return "unknown";
}

MechanismKind mechanism_from_name(const std::string& name) {
  if (name == "single_item") return MechanismKind::single_item;
  if (name == "balanced_xos") return MechanismKind::balanced_xos;
  if (name == "correa_cristi") return MechanismKind::correa_cristi;
  if (name == "custom_prices") return MechanismKind::custom_prices;
  throw LabError(ErrorKind::parameter, "unknown mechanism \"" + name + "\"");
}

const char* run_mode_name(RunMode m) {
  return m == RunMode::exact ? "exact" : "monte_carlo";
}

RunMode run_mode_from_name(const std::string& name) {
  if (name == "exact") return RunMode::exact;
  if (name == "monte_carlo") return RunMode::monte_carlo;
  throw LabError(ErrorKind::parameter, "unknown mode \"" + name + "\"");
}

RatioValue make_ratio(double e_opt, double e_alg) {
  RatioValue r;
  if (e_alg == 0) {
    r.kind = e_opt == 0 ? RatioValue::Kind::undefined
                        : RatioValue::Kind::infinite;
  } else {
    r.kind = RatioValue::Kind::finite;
    r.value = e_opt / e_alg;
  }
  return r;
}

std::string ratio_to_string(const RatioValue& r) {
  switch (r.kind) {
    case RatioValue::Kind::finite: return fmt_double(r.value);
    case RatioValue::Kind::undefined: return "undefined";
    case RatioValue::Kind::infinite: return "infinity";
  }
  return "undefined";
}

std::string fmt_double(double x) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), x);
  return std::string(buf, res.ptr);
}

Json valuation_to_json(const ValuationSpec& v) {
  Json j;
  j["type"] = valuation_kind_name(v.kind);
  switch (v.kind) {
    case ValuationKind::additive:
    case ValuationKind::unit_demand:
    case ValuationKind::sqrt_additive:
      j["weights"] = v.weights;
      break;
    case ValuationKind::xos:
      j["clauses"] = v.clauses;
      break;
    case ValuationKind::table:
      j["values"] = v.values;
      break;
  }
  return j;
}

ValuationSpec valuation_from_json(const Json& j) {
  require(j.is_object() && j.contains("type") && j["type"].is_string(),
          ErrorKind::parse, "valuation needs a \"type\" string");
  const ValuationKind kind = valuation_kind_from_name(j["type"]);
  switch (kind) {
    case ValuationKind::additive:
      require(j.contains("weights"), ErrorKind::parse,
              "additive valuation needs \"weights\"");
      return ValuationSpec::make_additive(double_list(j["weights"], "weights"));
    case ValuationKind::unit_demand:
      require(j.contains("weights"), ErrorKind::parse,
              "unit_demand valuation needs \"weights\"");
      return ValuationSpec::make_unit_demand(
          double_list(j["weights"], "weights"));
    case ValuationKind::sqrt_additive:
      require(j.contains("weights"), ErrorKind::parse,
              "sqrt_additive valuation needs \"weights\"");
      return ValuationSpec::make_sqrt_additive(
          double_list(j["weights"], "weights"));
    case ValuationKind::xos: {
      require(j.contains("clauses") && j["clauses"].is_array(),
              ErrorKind::parse, "xos valuation needs a \"clauses\" array");
      std::vector<std::vector<double>> clauses;
      for (const auto& c : j["clauses"])
        clauses.push_back(double_list(c, "clause"));
      return ValuationSpec::make_xos(std::move(clauses));
    }
    case ValuationKind::table:
      require(j.contains("values"), ErrorKind::parse,
              "table valuation needs \"values\"");
      return ValuationSpec::make_table(double_list(j["values"], "values"));
  }
  throw LabError(ErrorKind::parse, "unknown valuation type");
}

Json instance_to_json(const Instance& inst) {
  Json j;
  j["m"] = inst.m;
  Json bidders = Json::array();
  for (const auto& b : inst.bidders) {
    Json support = Json::array();
    for (const auto& atom : b.support) {
      Json entry;
      entry["q"] = atom.q;
      entry["valuation"] = valuation_to_json(atom.val);
      support.push_back(std::move(entry));
    }
    Json bidder;
    bidder["support"] = std::move(support);
    bidders.push_back(std::move(bidder));
  }
  j["bidders"] = std::move(bidders);
  return j;
}

Instance instance_from_json(const Json& j, bool validate_classes) {
  require(j.is_object(), ErrorKind::parse, "instance must be a JSON object");
  require(j.contains("m") && j["m"].is_number_integer(), ErrorKind::parse,
          "instance needs an integer \"m\"");
  require(j.contains("bidders") && j["bidders"].is_array(), ErrorKind::parse,
          "instance needs a \"bidders\" array");
  Instance inst;
  inst.m = j["m"].get<int>();
  for (const auto& bj : j["bidders"]) {
    require(bj.is_object() && bj.contains("support") &&
                bj["support"].is_array(),
            ErrorKind::parse, "each bidder needs a \"support\" array");
    BidderDistribution b;
    for (const auto& aj : bj["support"]) {
      require(aj.is_object() && aj.contains("q") && aj["q"].is_number() &&
                  aj.contains("valuation"),
              ErrorKind::parse,
              "each support atom needs \"q\" and \"valuation\"");
      SupportAtom atom;
      atom.q = aj["q"].get<double>();
      atom.val = valuation_from_json(aj["valuation"]);
      b.support.push_back(std::move(atom));
    }
    inst.bidders.push_back(std::move(b));
  }
  inst.validate(validate_classes);
  return inst;
}

Json irsg_to_json(const Irsg& g) {
  Json bidders = Json::array();
  for (const auto& rsg : g.bidders) {
    Json blocks = Json::array();
    for (const auto& block : rsg.per_support) {
      Json atoms = Json::array();
      for (const auto& atom : block) {
        Json aj;
        aj["q"] = atom.q;
        aj["scores"] = atom.scores;
        atoms.push_back(std::move(aj));
      }
      blocks.push_back(std::move(atoms));
    }
    bidders.push_back(std::move(blocks));
  }
  Json j;
  j["bidders"] = std::move(bidders);
  return j;
}

Irsg irsg_from_json(const Json& j, const Instance& inst) {
  require(j.is_object() && j.contains("bidders") && j["bidders"].is_array(),
          ErrorKind::parse, "score generator needs a \"bidders\" array");
  Irsg g;
  for (const auto& bj : j["bidders"]) {
    require(bj.is_array(), ErrorKind::parse,
            "each generator bidder must be an array of blocks");
    Rsg rsg;
    for (const auto& block : bj) {
      require(block.is_array(), ErrorKind::parse,
              "each generator block must be an array of atoms");
      std::vector<ScoreAtom> atoms;
      for (const auto& aj : block) {
        require(aj.is_object() && aj.contains("q") && aj["q"].is_number() &&
                    aj.contains("scores"),
                ErrorKind::parse,
                "each score atom needs \"q\" and \"scores\"");
        ScoreAtom atom;
        atom.q = aj["q"].get<double>();
        atom.scores = double_list(aj["scores"], "scores");
        atoms.push_back(std::move(atom));
      }
      rsg.per_support.push_back(std::move(atoms));
    }
    g.bidders.push_back(std::move(rsg));
  }
  // Accept text-format round-off, then hold the exact invariant.
  for (auto& rsg : g.bidders) {
    for (auto& block : rsg.per_support) {
      double total = 0;
      for (const auto& atom : block) total += atom.q;
      require(std::abs(total - 1.0) <= 1e-9, ErrorKind::malformed_spec,
              "score probabilities sum to " + std::to_string(total));
      for (auto& atom : block) atom.q /= total;
    }
  }
  g.validate(inst);
  return g;
}

Json trace_to_json(const MechanismTrace& tr) {
  Json j;
  j["order"] = tr.order;
  Json bidders = Json::array();
  for (const auto& tb : tr.bidders) {
    Json bj;
    bj["support_index"] = tb.support_index;
    bj["items"] = items_to_json(tb.items);
    bj["value"] = tb.value;
    bj["payment"] = tb.payment;
    bj["utility"] = tb.utility;
    bidders.push_back(std::move(bj));
  }
  j["bidders"] = std::move(bidders);
  j["revenue"] = tr.revenue;
  j["utility"] = tr.total_utility;
  j["welfare"] = tr.welfare;
  if (!tr.phantom_prices.empty()) j["phantom_prices"] = tr.phantom_prices;
  return j;
}

Json report_to_json(const Report& r) {
  Json j;
  j["instance"] = r.instance;
  j["mechanism"] = mechanism_name(r.mechanism);
  j["mode"] = run_mode_name(r.mode);
  j["e_opt"] = r.e_opt;
  j["e_alg"] = r.e_alg;
  j["revenue"] = r.revenue;
  j["utility"] = r.utility;
  if (r.ratio.kind == RatioValue::Kind::finite)
    j["ratio"] = r.ratio.value;
  else
    j["ratio"] = ratio_to_string(r.ratio);
  j["seed"] = r.seed;
  if (r.mode == RunMode::monte_carlo) {
    j["samples"] = r.samples;
    j["ci_opt"] = r.ci_opt;
    j["ci_alg"] = r.ci_alg;
  }
  if (!r.prices.empty()) j["prices"] = r.prices;
  return j;
}

Json subgood_to_json(const SubgoodSolution& sol, double verify_slack) {
  Json j;
  j["u"] = items_to_json(sol.u);
  j["prices"] = sol.prices;
  j["delta"] = sol.delta;
  j["guarantee"] = sol.guarantee;
  if (std::isfinite(sol.alpha_achieved))
    j["alpha_achieved"] = sol.alpha_achieved;
  else
    j["alpha_achieved"] = "infinity";
  j["verify_slack"] = verify_slack;
  return j;
}

Json fixed_point_to_json(const FixedPointResult& res) {
  Json j;
  j["converged"] = res.converged;
  j["iterations"] = res.iterations;
  j["residual"] = res.residual;
  Json grid;
  grid["epsilon"] = res.x.grid.epsilon;
  grid["v_max"] = res.x.grid.v_max;
  grid["levels"] = res.x.grid.levels;
  j["grid"] = std::move(grid);
  j["residual_log"] = res.residual_log;
  return j;
}

Json constant_bound_to_json(const ConstantBoundReport& rep) {
  Json j;
  j["e_alg"] = rep.e_alg;
  j["e_opt"] = rep.e_opt;
  j["residual"] = rep.residual;
  j["theorem_epsilon"] = rep.theorem_epsilon;
  j["delta"] = rep.delta;
  j["bound_ok"] = rep.bound_ok;
  j["delta_ok"] = rep.delta_ok;
  j["chain_ok"] = rep.chain_ok;
  return j;
}

Json load_json(const std::string& path) {
  std::ifstream in(path);
  require(in.good(), ErrorKind::parse, "cannot open \"" + path + "\"");
  try {
    return Json::parse(in);
  } catch (const Json::parse_error& e) {
    throw LabError(ErrorKind::parse, path + ": " + e.what());
  }
}

Instance load_instance(const std::string& path, bool validate_classes) {
  return instance_from_json(load_json(path), validate_classes);
}

Irsg load_irsg(const std::string& path, const Instance& inst) {
  return irsg_from_json(load_json(path), inst);
}

Report estimate_ratio(const ExperimentConfig& cfg) {
  const auto t0 = std::chrono::steady_clock::now();
  require(!cfg.instance_path.empty(), ErrorKind::parameter,
          "no instance file given");
  const Instance inst = load_instance(cfg.instance_path, cfg.validate_classes);
  const int n = inst.n();

  std::vector<int> order = cfg.order;
  if (order.empty())
    for (int i = 0; i < n; ++i) order.push_back(i);
  validate_order(n, order);

  Report rep;
  rep.instance =
      cfg.instance_label.empty() ? cfg.instance_path : cfg.instance_label;
  rep.mechanism = cfg.mechanism;
  rep.mode = cfg.mode;
  rep.seed = cfg.seed;

  PriceVector prices;
  Irsg irsg;
  switch (cfg.mechanism) {
    case MechanismKind::single_item:
      prices = single_item_price(inst);
      break;
    case MechanismKind::balanced_xos:
      prices = balanced_prices_xos(inst);
      break;
    case MechanismKind::custom_prices:
      validate_prices(inst.m, cfg.prices);
      prices = cfg.prices;
      break;
    case MechanismKind::correa_cristi:
      require(!cfg.irsg_path.empty(), ErrorKind::parameter,
              "correa_cristi needs an \"irsg\" file");
      irsg = load_irsg(cfg.irsg_path, inst);
      break;
  }
  if (cfg.mechanism != MechanismKind::correa_cristi) rep.prices = prices;

  if (cfg.mode == RunMode::exact) {
    rep.e_opt = expected_opt_exact(inst);
    if (cfg.mechanism == MechanismKind::correa_cristi) {
      rep.e_alg = expected_welfare_correa_cristi(inst, irsg);
      rep.revenue = 0;
      rep.utility = rep.e_alg;
    } else {
      const ExpectedOutcome out = expected_welfare_exact(inst, prices, order);
      rep.e_alg = out.welfare;
      rep.revenue = out.revenue;
      rep.utility = out.utility;
    }
  } else {
    require(cfg.samples >= 1, ErrorKind::parameter,
            "samples must be at least 1");
    const long samples = cfg.samples;
    std::vector<double> opt_vals(samples), alg_vals(samples), rev_vals(samples),
        util_vals(samples);
    parallel_replicas(samples, cfg.workers, [&](long r) {
      PhiloxRng rng(cfg.seed, static_cast<std::uint64_t>(r));
      // Draw order: support indices (ascending bidder), then any
      // mechanism-specific draws.
      std::vector<int> idx(n);
      for (int i = 0; i < n; ++i) idx[i] = sample_valuation(inst.bidders[i], rng);
      const Profile profile = make_profile(inst, idx);
      opt_vals[r] = optimal_allocation(profile).value;
      if (cfg.mechanism == MechanismKind::correa_cristi) {
        // Real scores, then a full phantom profile.
        std::vector<const ScoreVector*> real_b(n);
        for (int i = 0; i < n; ++i) {
          const auto& block = irsg.bidders[i].per_support[idx[i]];
          real_b[i] = &block[sample_score_atom(block, rng)].scores;
        }
        std::vector<double> pp(inst.m, 0.0);
        for (int i = 0; i < n; ++i) {
          const int k = sample_valuation(inst.bidders[i], rng);
          const auto& block = irsg.bidders[i].per_support[k];
          const ScoreVector& b = block[sample_score_atom(block, rng)].scores;
          for (int j = 0; j < inst.m; ++j) pp[j] = std::max(pp[j], b[j]);
        }
        ItemSet remaining = full_set(inst.m);
        double welfare = 0;
        for (int i = 0; i < n; ++i) {
          ItemSet take = 0;
          for (int j = 0; j < inst.m; ++j)
            if ((*real_b[i])[j] > pp[j]) take |= ItemSet{1} << j;
          take &= remaining;
          welfare += eval(profile.vals[i], take);
          remaining &= ~take;
        }
        alg_vals[r] = welfare;
        rev_vals[r] = 0;
        util_vals[r] = welfare;
      } else {
        const MechanismTrace tr = posted_price_walk(profile, idx, prices, order);
        alg_vals[r] = tr.welfare;
        rev_vals[r] = tr.revenue;
        util_vals[r] = tr.total_utility;
      }
    });
    const ReplicaStats opt_st = summarize(opt_vals);
    const ReplicaStats alg_st = summarize(alg_vals);
    rep.e_opt = opt_st.mean;
    rep.e_alg = alg_st.mean;
    rep.revenue = summarize(rev_vals).mean;
    rep.utility = summarize(util_vals).mean;
    rep.samples = samples;
    rep.has_ci = true;
    rep.ci_opt = opt_st.half;
    rep.ci_alg = alg_st.half;
  }
  rep.ratio = make_ratio(rep.e_opt, rep.e_alg);
  rep.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
          .count();
  return rep;
}

std::vector<SuiteRow> run_suite(const std::vector<std::string>& instances,
                                const std::vector<MechanismKind>& mechanisms,
                                const ExperimentConfig& defaults) {
  std::vector<SuiteRow> rows;
  for (const auto& path : instances) {
    for (const MechanismKind mech : mechanisms) {
      SuiteRow row;
      row.instance = path;
      row.mechanism = mech;
      ExperimentConfig cfg = defaults;
      cfg.instance_path = path;
      cfg.instance_label = path;
      cfg.mechanism = mech;
      try {
        row.report = estimate_ratio(cfg);
        row.status = "ok";
      } catch (const LabError& e) {
        row.status = std::string("error:") + error_kind_name(e.kind());
      } catch (const std::exception&) {
        row.status = "error";
      }
      rows.push_back(std::move(row));
    }
  }
  return rows;
}

namespace {

const char kCsvHeader[] =
    "instance,mechanism,mode,status,e_opt,e_alg,ratio,revenue,utility,ci_opt,"
    "ci_alg,seed";

std::string csv_row(const std::string& instance, MechanismKind mech,
                    const std::string& status, const Report* rep) {
  std::ostringstream out;
  out << instance << ',' << mechanism_name(mech) << ',';
  if (rep) {
    out << run_mode_name(rep->mode) << ',' << status << ','
        << fmt_double(rep->e_opt) << ',' << fmt_double(rep->e_alg) << ','
        << ratio_to_string(rep->ratio) << ',' << fmt_double(rep->revenue)
        << ',' << fmt_double(rep->utility) << ',';
    if (rep->has_ci)
      out << fmt_double(rep->ci_opt) << ',' << fmt_double(rep->ci_alg);
    else
      out << ',';
    out << ',' << std::to_string(rep->seed);
  } else {
    out << ',' << status << ",,,,,,,,";
  }
  out << '\n';
  return out.str();
}

}  // namespace

std::string suite_to_csv(const std::vector<SuiteRow>& rows) {
  std::string out = kCsvHeader;
  out += '\n';
  for (const auto& row : rows)
    out += csv_row(row.instance, row.mechanism, row.status,
                   row.report ? &*row.report : nullptr);
  return out;
}

std::string report_to_csv(const Report& r) {
  std::string out = kCsvHeader;
  out += '\n';
  out += csv_row(r.instance, r.mechanism, "ok", &r);
  return out;
}

}  // namespace prophet
