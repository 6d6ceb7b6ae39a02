#include "prophet/mechanisms.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

namespace prophet {
namespace {

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

}  // namespace

void validate_prices(int m, const PriceVector& p) {
  require(static_cast<int>(p.size()) == m, ErrorKind::parameter,
          "expected " + std::to_string(m) + " prices, got " +
              std::to_string(p.size()));
  for (double x : p)
    require(std::isfinite(x) && x >= 0, ErrorKind::parameter,
            "prices must be finite and nonnegative");
}

void validate_order(int n, const std::vector<int>& order) {
  require(static_cast<int>(order.size()) == n, ErrorKind::parameter,
          "arrival order must list all " + std::to_string(n) + " bidders");
  std::vector<char> seen(n, 0);
  for (int i : order) {
    require(i >= 0 && i < n && !seen[i], ErrorKind::parameter,
            "arrival order is not a permutation of 0.." + std::to_string(n - 1));
    seen[i] = 1;
  }
}

MechanismTrace posted_price_walk(const Profile& profile,
                                 const std::vector<int>& support_index,
                                 const PriceVector& p,
                                 const std::vector<int>& order) {
  const int n = profile.n();
  validate_prices(profile.m, p);
  validate_order(n, order);
  require(support_index.size() == static_cast<std::size_t>(n),
          ErrorKind::wrong_shape, "support index count mismatch");

  MechanismTrace tr;
  tr.order = order;
  tr.bidders.resize(n);
  ItemSet remaining = full_set(profile.m);
  for (int pos = 0; pos < n; ++pos) {
    const int i = order[pos];
    const DemandResult d = demand_set(profile.vals[i], p, remaining);
    TraceBidder& tb = tr.bidders[i];
    tb.support_index = support_index[i];
    tb.items = d.set;
    tb.value = eval(profile.vals[i], d.set);
    tb.payment = price_of(p, d.set);
    tb.utility = tb.value - tb.payment;
    remaining &= ~d.set;
  }
  for (const TraceBidder& tb : tr.bidders) {
    tr.revenue += tb.payment;
    tr.total_utility += tb.utility;
  }
  tr.welfare = tr.revenue + tr.total_utility;
  return tr;
}

MechanismTrace run_posted_price(const Instance& inst, const PriceVector& p,
                                const std::vector<int>& order, PhiloxRng& rng) {
  validate_prices(inst.m, p);
  validate_order(inst.n(), order);
  std::vector<int> idx(inst.n(), 0);
  for (int pos = 0; pos < inst.n(); ++pos) {
    const int i = order[pos];
    idx[i] = sample_valuation(inst.bidders[i], rng);
  }
  return posted_price_walk(make_profile(inst, idx), idx, p, order);
}

PriceVector single_item_price(const Instance& inst) {
  require(inst.m == 1, ErrorKind::wrong_shape,
          "single_item_price requires m == 1, got m=" + std::to_string(inst.m));
  double e_max = 0;
  for_each_profile(inst, [&](const std::vector<int>& idx, double q) {
    double best = 0;
    for (int i = 0; i < inst.n(); ++i)
      best = std::max(best, eval(inst.bidders[i].support[idx[i]].val, 1));
    e_max += q * best;
  });
  return {0.5 * e_max};
}

ExpectedOutcome expected_welfare_exact(const Instance& inst,
                                       const PriceVector& p,
                                       const std::vector<int>& order) {
  validate_prices(inst.m, p);
  validate_order(inst.n(), order);
  double e_rev = 0, e_util = 0;
  for_each_profile(inst, [&](const std::vector<int>& idx, double q) {
    const MechanismTrace tr =
        posted_price_walk(make_profile(inst, idx), idx, p, order);
    e_rev += q * tr.revenue;
    e_util += q * tr.total_utility;
  });
  ExpectedOutcome out;
  out.revenue = e_rev;
  out.utility = e_util;
  out.welfare = e_rev + e_util;
  return out;
}

PriceVector supporting_clause_prices(const Profile& profile) {
  for (const auto& v : profile.vals)
    require(v.kind == ValuationKind::xos, ErrorKind::wrong_class,
            "supporting-clause prices require xos valuations, got " +
                std::string(valuation_kind_name(v.kind)));
  const OptResult opt = optimal_allocation(profile);
  PriceVector p(profile.m, 0.0);
  for (int i = 0; i < profile.n(); ++i) {
    const ItemSet bundle = opt.alloc.parts[i];
    if (bundle == 0) continue;
    const int c = supporting_clause(profile.vals[i], bundle);
    for (ItemSet rest = bundle; rest != 0; rest &= rest - 1) {
      const int j = std::countr_zero(rest);
      p[j] = profile.vals[i].clauses[c][j];
    }
  }
  return p;
}

PriceVector balanced_prices_xos(const Instance& inst) {
  for (std::size_t i = 0; i < inst.bidders.size(); ++i)
    for (const auto& atom : inst.bidders[i].support)
      require(atom.val.kind == ValuationKind::xos, ErrorKind::wrong_class,
              "balanced_prices_xos: bidder " + std::to_string(i) +
                  " has a non-xos support valuation (" +
                  valuation_kind_name(atom.val.kind) + ")");
  PriceVector acc(inst.m, 0.0);
  for_each_profile(inst, [&](const std::vector<int>& idx, double q) {
    const PriceVector p = supporting_clause_prices(make_profile(inst, idx));
    for (int j = 0; j < inst.m; ++j) acc[j] += q * p[j];
  });
  for (double& x : acc) x *= 0.5;
  return acc;
}

PricingRule item_pricing_rule(PriceVector p) {
  return [p = std::move(p)](int, ItemSet s) { return price_of(p, s); };
}

void for_each_allocation(
    int n, int m, ItemSet allowed,
    const std::function<void(const std::vector<ItemSet>&)>& fn) {
  require(n >= 1 && m >= 1 && m <= kMaxItems, ErrorKind::parameter,
          "invalid allocation enumeration bounds");
  std::vector<int> items;
  for (int j = 0; j < m; ++j)
    if (contains(allowed, j)) items.push_back(j);
  const int k = static_cast<int>(items.size());
  require(std::pow(n + 1.0, k) <= 1e7, ErrorKind::capacity,
          "allocation enumeration too large");
  std::vector<int> digits(k, 0);
  std::vector<ItemSet> parts(n, 0);
  for (;;) {
    for (int i = 0; i < n; ++i) parts[i] = 0;
    for (int t = 0; t < k; ++t)
      if (digits[t] > 0) parts[digits[t] - 1] |= ItemSet{1} << items[t];
    fn(parts);
    int t = k - 1;
    while (t >= 0 && digits[t] == n) digits[t--] = 0;
    if (t < 0) break;
    ++digits[t];
  }
}

BalanceReport check_balanced(const Profile& profile, const PricingRule& rule,
                             double alpha, double beta, double tolerance) {
  require(alpha > 0 && beta >= 0, ErrorKind::parameter,
          "alpha must be positive and beta nonnegative");
  const int n = profile.n();
  const int m = profile.m;
  const ItemSet all = full_set(m);

  // OPT restricted to each subset of items, computed on demand.
  std::vector<double> opt_val(std::size_t{1} << m,
                              -std::numeric_limits<double>::infinity());
  const auto opt_on = [&](ItemSet allowed) {
    double& slot = opt_val[allowed];
    if (slot == -std::numeric_limits<double>::infinity())
      slot = optimal_allocation(profile, allowed).value;
    return slot;
  };

  BalanceReport rep;
  rep.worst_slack = std::numeric_limits<double>::infinity();
  const double opt_full = opt_on(all);

  const auto record = [&](double slack, int cond, const std::vector<ItemSet>& x,
                          const std::vector<ItemSet>* xprime) {
    if (slack < rep.worst_slack) {
      rep.worst_slack = slack;
      rep.witness_x.parts = x;
      rep.witness_xprime.parts =
          xprime ? *xprime : std::vector<ItemSet>(n, 0);
      if (slack < -tolerance) rep.failing_condition = cond;
    }
    if (slack < -tolerance) {
      rep.ok = false;
      if (cond == 1) rep.cond1_ok = false;
      else rep.cond2_ok = false;
    }
  };

  for_each_allocation(n, m, all, [&](const std::vector<ItemSet>& x) {
    ItemSet used = 0;
    double paid = 0;
    for (int i = 0; i < n; ++i) {
      used |= x[i];
      paid += rule(i, x[i]);
    }
    const ItemSet rem = all & ~used;
    const double slack1 = paid - (opt_full - opt_on(rem)) / alpha;
    record(slack1, 1, x, nullptr);
    for_each_allocation(n, m, rem, [&](const std::vector<ItemSet>& xp) {
      double paid2 = 0;
      for (int i = 0; i < n; ++i) paid2 += rule(i, xp[i]);
      const double slack2 = beta * opt_on(rem) - paid2;
      record(slack2, 2, x, &xp);
    });
  });
  return rep;
}

}  // namespace prophet
