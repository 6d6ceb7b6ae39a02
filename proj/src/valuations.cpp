#include "prophet/valuations.hpp"

#include <algorithm>
#include <cmath>
#include <string>

namespace prophet {
namespace {

constexpr double kClassTol = 1e-9;   // slack for float noise in class checks
constexpr double kProbTol = 1e-12;   // allowed drift in probability mass

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

void check_weights(const std::vector<double>& w, const char* what) {
  require(!w.empty() && w.size() <= kMaxItems, ErrorKind::malformed_spec,
          std::string(what) + ": need between 1 and 16 item weights, got " +
              std::to_string(w.size()));
  for (double x : w)
    require(std::isfinite(x) && x >= 0, ErrorKind::malformed_spec,
            std::string(what) + ": weights must be finite and nonnegative");
}

double additive_sum(const std::vector<double>& w, ItemSet s) {
  double total = 0;
  for (ItemSet rest = s; rest != 0; rest &= rest - 1)
    total += w[std::countr_zero(rest)];
  return total;
}

}  // namespace

const char* valuation_kind_name(ValuationKind k) {
  switch (k) {
    case ValuationKind::additive: return "additive";
    case ValuationKind::unit_demand: return "unit_demand";
    case ValuationKind::xos: return "xos";
    case ValuationKind::sqrt_additive: return "sqrt_additive";
    case ValuationKind::table: return "table";
  }
  return "unknown";
}

ValuationKind valuation_kind_from_name(const std::string& name) {
  if (name == "additive") return ValuationKind::additive;
  if (name == "unit_demand") return ValuationKind::unit_demand;
  if (name == "xos") return ValuationKind::xos;
  if (name == "sqrt_additive") return ValuationKind::sqrt_additive;
  if (name == "table") return ValuationKind::table;
  throw LabError(ErrorKind::malformed_spec,
                 "unknown valuation type \"" + name + "\"");
}

ValuationSpec ValuationSpec::make_additive(std::vector<double> w) {
  check_weights(w, "additive");
  ValuationSpec v;
  v.kind = ValuationKind::additive;
  v.weights = std::move(w);
  return v;
}

ValuationSpec ValuationSpec::make_unit_demand(std::vector<double> w) {
  check_weights(w, "unit_demand");
  ValuationSpec v;
  v.kind = ValuationKind::unit_demand;
  v.weights = std::move(w);
  return v;
}

ValuationSpec ValuationSpec::make_xos(std::vector<std::vector<double>> cl) {
  require(!cl.empty(), ErrorKind::malformed_spec, "xos: need at least one clause");
  for (const auto& c : cl) {
    check_weights(c, "xos clause");
    require(c.size() == cl.front().size(), ErrorKind::malformed_spec,
            "xos: clauses must all have the same length");
  }
  ValuationSpec v;
  v.kind = ValuationKind::xos;
  v.clauses = std::move(cl);
  return v;
}

ValuationSpec ValuationSpec::make_sqrt_additive(std::vector<double> w) {
  check_weights(w, "sqrt_additive");
  ValuationSpec v;
  v.kind = ValuationKind::sqrt_additive;
  v.weights = std::move(w);
  return v;
}

ValuationSpec ValuationSpec::make_table(std::vector<double> vals) {
  require(!vals.empty() && std::has_single_bit(vals.size()),
          ErrorKind::malformed_spec,
          "table: need 2^m entries, got " + std::to_string(vals.size()));
  const int m = std::countr_zero(vals.size());
  require(m >= 1 && m <= kMaxItems, ErrorKind::malformed_spec,
          "table: m must be between 1 and 16, got " + std::to_string(m));
  for (double x : vals)
    require(std::isfinite(x) && x >= 0, ErrorKind::malformed_spec,
            "table: entries must be finite and nonnegative");
  ValuationSpec v;
  v.kind = ValuationKind::table;
  v.values = std::move(vals);
  return v;
}

int ValuationSpec::item_count() const {
  switch (kind) {
    case ValuationKind::additive:
    case ValuationKind::unit_demand:
    case ValuationKind::sqrt_additive: {
      const std::size_t m = weights.size();
      require(m >= 1 && m <= kMaxItems, ErrorKind::malformed_spec,
              "valuation has invalid weight count " + std::to_string(m));
      return static_cast<int>(m);
    }
    case ValuationKind::xos: {
      require(!clauses.empty(), ErrorKind::malformed_spec, "xos: no clauses");
      const std::size_t m = clauses.front().size();
      require(m >= 1 && m <= kMaxItems, ErrorKind::malformed_spec,
              "xos: invalid clause length " + std::to_string(m));
      for (const auto& c : clauses)
        require(c.size() == m, ErrorKind::malformed_spec,
                "xos: ragged clause lengths");
      return static_cast<int>(m);
    }
    case ValuationKind::table: {
      require(!values.empty() && std::has_single_bit(values.size()),
              ErrorKind::malformed_spec,
              "table: entry count is not a power of two");
      const int m = std::countr_zero(values.size());
      require(m >= 1 && m <= kMaxItems, ErrorKind::malformed_spec,
              "table: m out of range");
      return m;
    }
  }
  throw LabError(ErrorKind::malformed_spec, "valuation has unknown kind");
}

double eval(const ValuationSpec& v, ItemSet s) {
  const int m = v.item_count();
  require((s & ~full_set(m)) == 0, ErrorKind::parameter,
          "item set " + std::to_string(s) + " out of range for m=" +
              std::to_string(m));
  switch (v.kind) {
    case ValuationKind::additive:
      return additive_sum(v.weights, s);
    case ValuationKind::unit_demand: {
      double best = 0;
      for (ItemSet rest = s; rest != 0; rest &= rest - 1)
        best = std::max(best, v.weights[std::countr_zero(rest)]);
      return best;
    }
    case ValuationKind::xos: {
      double best = 0;
      for (const auto& c : v.clauses) best = std::max(best, additive_sum(c, s));
      return best;
    }
    case ValuationKind::sqrt_additive:
      return std::sqrt(additive_sum(v.weights, s));
    case ValuationKind::table:
      return v.values[s];
  }
  throw LabError(ErrorKind::malformed_spec, "valuation has unknown kind");
}

int supporting_clause(const ValuationSpec& v, ItemSet s) {
  require(v.kind == ValuationKind::xos, ErrorKind::wrong_variant,
          "supporting_clause requires an xos valuation, got " +
              std::string(valuation_kind_name(v.kind)));
  const int m = v.item_count();
  require((s & ~full_set(m)) == 0, ErrorKind::parameter,
          "item set out of range");
  int best = 0;
  double best_val = additive_sum(v.clauses[0], s);
  for (std::size_t i = 1; i < v.clauses.size(); ++i) {
    const double val = additive_sum(v.clauses[i], s);
    if (val > best_val) {
      best = static_cast<int>(i);
      best_val = val;
    }
  }
  return best;
}

ClassCheck check_class(const ValuationSpec& v, ValuationClass cls) {
  const int m = v.item_count();
  const ItemSet all = full_set(m);
  ClassCheck out;
  switch (cls) {
    case ValuationClass::normalized_monotone: {
      if (eval(v, 0) != 0.0) {
        out.ok = false;
        return out;
      }
      for (ItemSet s = 0; s <= all; ++s) {
        for (int j = 0; j < m; ++j) {
          if (contains(s, j)) continue;
          const ItemSet t = s | (ItemSet{1} << j);
          if (eval(v, t) < eval(v, s) - kClassTol) {
            out.ok = false;
            out.witness_s = s;
            out.witness_t = t;
            out.witness_item = j;
            return out;
          }
        }
      }
      return out;
    }
    case ValuationClass::submodular: {
      // Local characterization: for every S and pair j != k outside S,
      // v(S+j) + v(S+k) >= v(S+j+k) + v(S). A violation is reported in the
      // definitional form v(S+j) - v(S) < v(T+j) - v(T) with T = S+k.
      for (ItemSet s = 0; s <= all; ++s) {
        for (int j = 0; j < m; ++j) {
          if (contains(s, j)) continue;
          for (int k = j + 1; k < m; ++k) {
            if (contains(s, k)) continue;
            const ItemSet sj = s | (ItemSet{1} << j);
            const ItemSet sk = s | (ItemSet{1} << k);
            const ItemSet sjk = sj | sk;
            if (eval(v, sj) + eval(v, sk) <
                eval(v, sjk) + eval(v, s) - kClassTol) {
              out.ok = false;
              out.witness_s = s;
              out.witness_t = sk;
              out.witness_item = j;
              return out;
            }
          }
        }
      }
      return out;
    }
    case ValuationClass::xos_consistent: {
      if (v.kind != ValuationKind::xos) return out;  // nothing to drift
      return check_xos_consistent(v, v.clauses);
    }
    case ValuationClass::subadditive: {
      for (ItemSet s = 0; s <= all; ++s) {
        for (ItemSet t = s; t <= all; ++t) {
          if (eval(v, s | t) > eval(v, s) + eval(v, t) + kClassTol) {
            out.ok = false;
            out.witness_s = s;
            out.witness_t = t;
            return out;
          }
        }
      }
      return out;
    }
  }
  throw LabError(ErrorKind::parameter, "unknown valuation class");
}

ClassCheck check_xos_consistent(const ValuationSpec& v,
                                const std::vector<std::vector<double>>& clauses) {
  const int m = v.item_count();
  ClassCheck out;
  require(!clauses.empty(), ErrorKind::malformed_spec,
          "xos consistency check needs at least one clause");
  for (const auto& c : clauses)
    require(static_cast<int>(c.size()) == m, ErrorKind::wrong_shape,
            "clause length does not match item count");
  for (ItemSet s = 0; s <= full_set(m); ++s) {
    const double val = eval(v, s);
    double best = 0;
    for (const auto& c : clauses) best = std::max(best, additive_sum(c, s));
    if (std::abs(val - best) > kClassTol) {
      out.ok = false;
      out.witness_s = s;
      return out;
    }
  }
  return out;
}

void BidderDistribution::validate(int m, int who, bool check_classes) {
  require(!support.empty(), ErrorKind::malformed_spec,
          "bidder " + std::to_string(who) + ": empty support");
  double total = 0;
  for (const auto& atom : support) {
    require(std::isfinite(atom.q) && atom.q > 0, ErrorKind::malformed_spec,
            "bidder " + std::to_string(who) +
                ": support probabilities must be positive and finite");
    total += atom.q;
  }
  require(std::abs(total - 1.0) <= kProbTol, ErrorKind::malformed_spec,
          "bidder " + std::to_string(who) + ": probabilities sum to " +
              std::to_string(total) + ", expected 1");
  for (auto& atom : support) atom.q /= total;
  for (std::size_t k = 0; k < support.size(); ++k) {
    const auto& spec = support[k].val;
    require(spec.item_count() == m, ErrorKind::wrong_shape,
            "bidder " + std::to_string(who) + " support " + std::to_string(k) +
                ": valuation is over " + std::to_string(spec.item_count()) +
                " items, instance has " + std::to_string(m));
    if (!check_classes) continue;
    const ClassCheck chk =
        check_class(spec, ValuationClass::normalized_monotone);
    require(chk.ok, ErrorKind::malformed_spec,
            "bidder " + std::to_string(who) + " support " + std::to_string(k) +
                ": valuation is not normalized monotone (witness sets " +
                std::to_string(chk.witness_s) + ", " +
                std::to_string(chk.witness_t) + ")");
  }
}

void Instance::validate(bool check_classes) {
  require(m >= 1 && m <= kMaxItems, ErrorKind::malformed_spec,
          "m must be between 1 and 16, got " + std::to_string(m));
  require(!bidders.empty(), ErrorKind::malformed_spec,
          "instance needs at least one bidder");
  for (std::size_t i = 0; i < bidders.size(); ++i)
    bidders[i].validate(m, static_cast<int>(i), check_classes);
}

double Instance::v_max() const {
  const ItemSet all = full_set(m);
  double best = 0;
  for (const auto& b : bidders)
    for (const auto& atom : b.support) best = std::max(best, eval(atom.val, all));
  return best;
}

int sample_valuation(const BidderDistribution& d, PhiloxRng& rng) {
  const double u = rng.next_double();
  double cum = 0;
  for (std::size_t k = 0; k + 1 < d.support.size(); ++k) {
    cum += d.support[k].q;
    if (u < cum) return static_cast<int>(k);
  }
  return static_cast<int>(d.support.size()) - 1;
}

}  // namespace prophet
