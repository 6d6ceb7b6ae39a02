#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "prophet/fixedpoint.hpp"
#include "prophet/mechanisms.hpp"
#include "prophet/rsg.hpp"
#include "prophet/subgood.hpp"
#include "prophet/valuations.hpp"

namespace prophet {

// Key order is preserved so serialized output is byte-stable.
using Json = nlohmann::ordered_json;

enum class MechanismKind {
  single_item,
  balanced_xos,
  correa_cristi,
  custom_prices,
};

const char* mechanism_name(MechanismKind k);
MechanismKind mechanism_from_name(const std::string& name);

enum class RunMode { exact, monte_carlo };

const char* run_mode_name(RunMode m);
RunMode run_mode_from_name(const std::string& name);

struct ExperimentConfig {
  std::string instance_path;
  std::string instance_label;  // reported name; defaults to instance_path
  MechanismKind mechanism = MechanismKind::single_item;
  RunMode mode = RunMode::exact;
  long samples = 100000;
  std::uint64_t seed = 0;
  int workers = 1;
  std::vector<double> prices;  // custom_prices only
  std::string irsg_path;       // correa_cristi only
  std::vector<int> order;      // empty means identity arrival order
  bool validate_classes = true;
};

struct RatioValue {
  enum class Kind { finite, undefined, infinite };
  Kind kind = Kind::finite;
  double value = 0;
};

// E[OPT] / E[ALG]; "undefined" when both are zero, "infinity" when only
// E[ALG] is.
RatioValue make_ratio(double e_opt, double e_alg);
std::string ratio_to_string(const RatioValue& r);

struct Report {
  std::string instance;
  MechanismKind mechanism = MechanismKind::single_item;
  RunMode mode = RunMode::exact;
  double e_opt = 0;
  double e_alg = 0;
  double revenue = 0;
  double utility = 0;
  RatioValue ratio;
  std::uint64_t seed = 0;
  long samples = 0;  // monte_carlo only
  bool has_ci = false;
  double ci_opt = 0;  // 95% halfwidths, monte_carlo only
  double ci_alg = 0;
  std::vector<double> prices;  // posted prices actually used, when applicable
  double wall_seconds = 0;     // for terminal display; never serialized
};

Json valuation_to_json(const ValuationSpec& v);
ValuationSpec valuation_from_json(const Json& j);
Json instance_to_json(const Instance& inst);
Instance instance_from_json(const Json& j, bool validate_classes = true);
Json irsg_to_json(const Irsg& g);
Irsg irsg_from_json(const Json& j, const Instance& inst);
Json trace_to_json(const MechanismTrace& tr);
Json report_to_json(const Report& r);
Json subgood_to_json(const SubgoodSolution& sol, double verify_slack);
Json fixed_point_to_json(const FixedPointResult& res);
Json constant_bound_to_json(const ConstantBoundReport& rep);

// Parses a JSON file; throws LabError(parse) with the parser's position
// info on failure.
Json load_json(const std::string& path);
Instance load_instance(const std::string& path, bool validate_classes = true);
Irsg load_irsg(const std::string& path, const Instance& inst);

// Runs one experiment end to end. Monte Carlo replicas draw from
// PhiloxRng(seed, replica), so estimates are identical for any worker count.
Report estimate_ratio(const ExperimentConfig& cfg);

struct SuiteRow {
  std::string instance;
  MechanismKind mechanism = MechanismKind::single_item;
  std::string status;  // "ok" or "error:<kind>"
  std::optional<Report> report;
};

// Runs every instance x mechanism cell, converting failures into row
// statuses instead of aborting the sweep.
std::vector<SuiteRow> run_suite(const std::vector<std::string>& instances,
                                const std::vector<MechanismKind>& mechanisms,
                                const ExperimentConfig& defaults);

// CSV with a fixed header; '.' decimal separator regardless of locale.
std::string suite_to_csv(const std::vector<SuiteRow>& rows);
std::string report_to_csv(const Report& r);

// Shortest round-trip decimal form of x (never locale-dependent).
std::string fmt_double(double x);

}  // namespace prophet
