#pragma once

#include <bit>
#include <cstdint>
#include <utility>
#include <vector>

#include "prophet/errors.hpp"
#include "prophet/rng.hpp"

namespace prophet {

// Items are 0-based bit positions in a mask; m <= 16 so every checker can
// enumerate all 2^m subsets.
using ItemSet = std::uint32_t;

constexpr int kMaxItems = 16;

inline ItemSet full_set(int m) { return (ItemSet{1} << m) - 1; }
inline int set_size(ItemSet s) { return std::popcount(s); }
inline bool contains(ItemSet s, int item) { return (s >> item) & 1; }

enum class ValuationKind { additive, unit_demand, xos, sqrt_additive, table };

const char* valuation_kind_name(ValuationKind k);
ValuationKind valuation_kind_from_name(const std::string& name);

// One concrete valuation function over subsets of m items. Exactly one
// payload field is used, selected by `kind`:
//   additive, unit_demand, sqrt_additive: `weights` (one per item)
//   xos: `clauses` (each clause one additive weight vector)
//   table: `values` (2^m entries indexed by subset mask)
struct ValuationSpec {
  ValuationKind kind = ValuationKind::additive;
  std::vector<double> weights;
  std::vector<std::vector<double>> clauses;
  std::vector<double> values;

  static ValuationSpec make_additive(std::vector<double> w);
  static ValuationSpec make_unit_demand(std::vector<double> w);
  static ValuationSpec make_xos(std::vector<std::vector<double>> cl);
  static ValuationSpec make_sqrt_additive(std::vector<double> w);
  static ValuationSpec make_table(std::vector<double> vals);

  // Number of items implied by the payload; throws malformed_spec if the
  // payload shape is inconsistent or out of range.
  int item_count() const;
};

double eval(const ValuationSpec& v, ItemSet s);

// Index of the additive clause attaining v(S); smallest index on ties.
// Throws wrong_variant unless v.kind == xos.
int supporting_clause(const ValuationSpec& v, ItemSet s);

enum class ValuationClass {
  normalized_monotone,
  submodular,
  xos_consistent,
  subadditive,
};

struct ClassCheck {
  bool ok = true;
  // On failure, the witness sets (and item, for monotone/submodular checks)
  // that violate the defining inequality.
  ItemSet witness_s = 0;
  ItemSet witness_t = 0;
  int witness_item = -1;
};

// Exhaustive check of `cls` over all subsets. `xos_consistent` verifies that
// an xos spec's stored clauses are mutually consistent with eval; it is
// vacuously true for the other kinds (their definitions cannot drift from
// their payloads).
ClassCheck check_class(const ValuationSpec& v, ValuationClass cls);

// Does `v` equal max over the given additive clauses on every subset?
ClassCheck check_xos_consistent(const ValuationSpec& v,
                                const std::vector<std::vector<double>>& clauses);

struct SupportAtom {
  double q = 0;
  ValuationSpec val;
};

// Finite-support distribution over valuations for one bidder.
struct BidderDistribution {
  std::vector<SupportAtom> support;

  // Checks shapes against m, probability mass within 1e-12 of 1 (then
  // renormalizes exactly), and, when check_classes is set, that every
  // valuation is normalized monotone (an exponential check). `who` is used
  // in error messages.
  void validate(int m, int who, bool check_classes = true);
};

struct Instance {
  int m = 0;
  std::vector<BidderDistribution> bidders;

  int n() const { return static_cast<int>(bidders.size()); }
  void validate(bool check_classes = true);
  // Largest v(M) over all bidders' support valuations.
  double v_max() const;
};

// Draws one support index using exactly one uniform variate.
int sample_valuation(const BidderDistribution& d, PhiloxRng& rng);

}  // namespace prophet
