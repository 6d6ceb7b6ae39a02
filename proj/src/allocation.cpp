#include "prophet/allocation.hpp"

#include <cmath>
#include <string>

namespace prophet {
namespace {

constexpr long kMaxAssignments = 20'000'000;

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

}  // namespace

double price_of(const std::vector<double>& p, ItemSet s) {
  double total = 0;
  for (ItemSet rest = s; rest != 0; rest &= rest - 1)
    total += p[std::countr_zero(rest)];
  return total;
}

double welfare(const Profile& profile, const Allocation& alloc) {
  require(alloc.parts.size() == profile.vals.size(), ErrorKind::wrong_shape,
          "allocation has " + std::to_string(alloc.parts.size()) +
              " parts for " + std::to_string(profile.vals.size()) + " bidders");
  const ItemSet all = full_set(profile.m);
  ItemSet seen = 0;
  for (ItemSet part : alloc.parts) {
    require((part & ~all) == 0, ErrorKind::parameter,
            "allocated bundle contains items outside the instance");
    require((part & seen) == 0, ErrorKind::infeasible_allocation,
            "allocation assigns an item to two bidders");
    seen |= part;
  }
  double total = 0;
  for (int i = 0; i < profile.n(); ++i)
    total += eval(profile.vals[i], alloc.parts[i]);
  return total;
}

OptResult optimal_allocation(const Profile& profile) {
  return optimal_allocation(profile, full_set(profile.m));
}

OptResult optimal_allocation(const Profile& profile, ItemSet allowed) {
  const int n = profile.n();
  require(n >= 1, ErrorKind::parameter, "profile has no bidders");
  require((allowed & ~full_set(profile.m)) == 0, ErrorKind::parameter,
          "allowed set out of range");

  std::vector<int> items;
  for (int j = 0; j < profile.m; ++j)
    if (contains(allowed, j)) items.push_back(j);
  const int k = static_cast<int>(items.size());

  double count = std::pow(static_cast<double>(n + 1), k);
  require(count <= static_cast<double>(kMaxAssignments), ErrorKind::capacity,
          "optimal allocation would enumerate " + std::to_string(count) +
              " assignments; reduce n or m");

  // Odometer over assignment digits, last item fastest, so assignments are
  // visited in ascending lexicographic order; OPT keeps the first maximum.
  std::vector<int> digits(k, 0);
  std::vector<ItemSet> parts(n, 0);
  OptResult best;
  best.alloc.parts.assign(n, 0);
  best.value = -1;
  for (;;) {
    for (int i = 0; i < n; ++i) parts[i] = 0;
    for (int t = 0; t < k; ++t)
      if (digits[t] > 0) parts[digits[t] - 1] |= ItemSet{1} << items[t];
    double total = 0;
    for (int i = 0; i < n; ++i) total += eval(profile.vals[i], parts[i]);
    if (total > best.value) {
      best.value = total;
      best.alloc.parts = parts;
    }
    int t = k - 1;
    while (t >= 0 && digits[t] == n) digits[t--] = 0;
    if (t < 0) break;
    ++digits[t];
  }
  return best;
}

Profile make_profile(const Instance& inst, const std::vector<int>& idx) {
  require(idx.size() == inst.bidders.size(), ErrorKind::wrong_shape,
          "profile index count does not match bidder count");
  Profile p;
  p.m = inst.m;
  p.vals.reserve(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const auto& support = inst.bidders[i].support;
    require(idx[i] >= 0 && idx[i] < static_cast<int>(support.size()),
            ErrorKind::parameter, "support index out of range");
    p.vals.push_back(support[idx[i]].val);
  }
  return p;
}

void for_each_profile(
    const Instance& inst,
    const std::function<void(const std::vector<int>&, double)>& fn) {
  const int n = inst.n();
  double count = 1;
  for (const auto& b : inst.bidders)
    count *= static_cast<double>(b.support.size());
  if (count > 1e6)
    throw LabError(ErrorKind::capacity,
                   "profile enumeration needs " + std::to_string(count) +
                       " terms; use monte_carlo mode");
  std::vector<int> idx(n, 0);
  for (;;) {
    double q = 1;
    for (int i = 0; i < n; ++i) q *= inst.bidders[i].support[idx[i]].q;
    fn(idx, q);
    int i = n - 1;
    while (i >= 0 &&
           idx[i] + 1 == static_cast<int>(inst.bidders[i].support.size()))
      idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
}

double expected_opt_exact(const Instance& inst) {
  double total = 0;
  for_each_profile(inst, [&](const std::vector<int>& idx, double q) {
    total += q * optimal_allocation(make_profile(inst, idx)).value;
  });
  return total;
}

DemandResult demand_set(const ValuationSpec& v, const std::vector<double>& p,
                        ItemSet available) {
  const int m = v.item_count();
  require(static_cast<int>(p.size()) == m, ErrorKind::wrong_shape,
          "price vector has " + std::to_string(p.size()) + " entries for m=" +
              std::to_string(m));
  require((available & ~full_set(m)) == 0, ErrorKind::parameter,
          "available set out of range");

  DemandResult best;  // empty set, utility 0
  ItemSet sub = available;
  for (;;) {
    if (sub != 0) {
      const double u = eval(v, sub) - price_of(p, sub);
      const bool wins =
          u > best.utility ||
          (u == best.utility && (set_size(sub) < set_size(best.set) ||
                                 (set_size(sub) == set_size(best.set) &&
                                  sub < best.set)));
      if (wins) {
        best.set = sub;
        best.utility = u;
      }
    }
    if (sub == 0) break;
    sub = (sub - 1) & available;
  }
  return best;
}

}  // namespace prophet
