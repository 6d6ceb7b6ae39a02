#pragma once

#include <functional>
#include <vector>

#include "prophet/allocation.hpp"
#include "prophet/rng.hpp"
#include "prophet/valuations.hpp"

namespace prophet {

using PriceVector = std::vector<double>;

// Throws parameter unless p has m finite nonnegative entries.
void validate_prices(int m, const PriceVector& p);
// Throws parameter unless `order` is a permutation of 0..n-1.
void validate_order(int n, const std::vector<int>& order);

struct TraceBidder {
  int support_index = 0;  // which support atom was realized
  ItemSet items = 0;
  double value = 0;
  double payment = 0;
  double utility = 0;  // value - payment
};

struct MechanismTrace {
  std::vector<int> order;  // arrival position -> bidder id
  std::vector<TraceBidder> bidders;  // indexed by bidder id
  double revenue = 0;
  double total_utility = 0;
  double welfare = 0;  // always computed as revenue + total_utility
  std::vector<double> phantom_prices;  // random-score run only, else empty
};

// Deterministic core of the posted-price mechanism: bidders arrive in
// `order`, each takes a demand set of the remaining items at prices `p`.
MechanismTrace posted_price_walk(const Profile& profile,
                                 const std::vector<int>& support_index,
                                 const PriceVector& p,
                                 const std::vector<int>& order);

// Samples one valuation per bidder (drawn in arrival order) and walks.
MechanismTrace run_posted_price(const Instance& inst, const PriceVector& p,
                                const std::vector<int>& order, PhiloxRng& rng);

// Single item: p = E[max_i v_i({0})] / 2. Throws wrong_shape unless m == 1.
PriceVector single_item_price(const Instance& inst);

struct ExpectedOutcome {
  double welfare = 0;
  double revenue = 0;
  double utility = 0;
};

// Exact expectation of the posted-price walk over all support profiles.
ExpectedOutcome expected_welfare_exact(const Instance& inst,
                                       const PriceVector& p,
                                       const std::vector<int>& order);

// Item prices p_j = (1/2) E[ supporting-clause weight of j in the efficient
// allocation ]. Requires every support valuation to be xos (wrong_class).
PriceVector balanced_prices_xos(const Instance& inst);

// Full-strength (unhalved) supporting-clause item prices for one profile.
PriceVector supporting_clause_prices(const Profile& profile);

// Bundle pricing rule: bidder index and bundle -> price.
using PricingRule = std::function<double(int, ItemSet)>;

// Lifts per-item prices to the anonymous additive rule (i, S) -> sum p_j.
PricingRule item_pricing_rule(PriceVector p);

struct BalanceReport {
  bool ok = true;
  bool cond1_ok = true;  // residual value covered: p(x) >= OPT(M\x)... scaled
  bool cond2_ok = true;
  double worst_slack = 0;  // most negative slack seen across both conditions
  int failing_condition = 0;  // 1 or 2 when !ok
  Allocation witness_x;  // allocation at the worst violation
  Allocation witness_xprime;
};

// Checks (alpha, beta)-balancedness of a pricing rule on one deterministic
// profile, with the efficient allocation on the remaining items in the role
// of the reference partition. Condition 1: for every feasible allocation x,
//   sum_i p_i(x_i) >= (1/alpha) * [OPT(M) - OPT(M \ union(x))].
// Condition 2: for every feasible x and every allocation x' of the items
// left over by x,
//   sum_i p_i(x'_i) <= beta * OPT(M \ union(x)).
BalanceReport check_balanced(const Profile& profile, const PricingRule& rule,
                             double alpha, double beta,
                             double tolerance = 1e-9);

// Visits every feasible allocation of `allowed` among n bidders (items may
// also stay unassigned), in ascending lexicographic digit order.
void for_each_allocation(int n, int m, ItemSet allowed,
                         const std::function<void(const std::vector<ItemSet>&)>& fn);

}  // namespace prophet
