#pragma once

#include <functional>
#include <vector>

#include "prophet/valuations.hpp"

namespace prophet {

// A realized valuation per bidder (one draw from each distribution).
struct Profile {
  int m = 0;
  std::vector<ValuationSpec> vals;

  int n() const { return static_cast<int>(vals.size()); }
};

// One bundle per bidder; bundles must be pairwise disjoint.
struct Allocation {
  std::vector<ItemSet> parts;
};

// Sum of bidder values; throws infeasible_allocation on overlapping bundles
// and wrong_shape on a size mismatch.
double welfare(const Profile& profile, const Allocation& alloc);

struct OptResult {
  Allocation alloc;
  double value = 0;
};

// Exact welfare maximization by enumerating all (n+1)^|allowed| assignments
// of allowed items to bidders (or to nobody). Ties break toward the
// lexicographically smallest assignment vector, where item j's digit is 0
// for unassigned and i+1 for bidder i, compared in ascending item order.
OptResult optimal_allocation(const Profile& profile);
OptResult optimal_allocation(const Profile& profile, ItemSet allowed);

struct DemandResult {
  ItemSet set = 0;
  double utility = 0;
};

// Utility-maximizing subset of `available` at item prices `p`. The empty set
// (utility 0) is always a candidate, so utility >= 0. Ties break toward
// fewer items, then the smaller mask.
DemandResult demand_set(const ValuationSpec& v, const std::vector<double>& p,
                        ItemSet available);

// Sum of prices over a set, accumulated in ascending item order (shared by
// demand_set and the mechanism walk so traces reproduce bit for bit).
double price_of(const std::vector<double>& p, ItemSet s);

// Builds the profile that realizes support[idx[i]] for each bidder i.
Profile make_profile(const Instance& inst, const std::vector<int>& idx);

// Visits every support profile together with its probability, varying the
// last bidder's index fastest. Throws capacity if the product of support
// sizes exceeds ~10^6 (use Monte Carlo estimation instead).
void for_each_profile(
    const Instance& inst,
    const std::function<void(const std::vector<int>&, double)>& fn);

// E[ max over allocations of the realized welfare ], by full enumeration of
// profiles and assignments.
double expected_opt_exact(const Instance& inst);

}  // namespace prophet
