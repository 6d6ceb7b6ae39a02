#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <vector>

#include "prophet/allocation.hpp"
#include "prophet/rng.hpp"
#include "prophet/rsg.hpp"
#include "prophet/valuations.hpp"

namespace testutil {

using prophet::BidderDistribution;
using prophet::Instance;
using prophet::Irsg;
using prophet::ItemSet;
using prophet::PhiloxRng;
using prophet::Profile;
using prophet::ScoreAtom;
using prophet::ValuationKind;
using prophet::ValuationSpec;

struct Rand {
  PhiloxRng rng;
  explicit Rand(std::uint64_t seed) : rng(seed) {}
  double uniform(double lo, double hi) {
    return lo + (hi - lo) * rng.next_double();
  }
  int pick(int n) {  // uniform in [0, n)
    return static_cast<int>(rng.next_double() * n) % n;
  }
};

inline std::vector<double> random_weights(Rand& rnd, int m, double hi = 10.0) {
  std::vector<double> w(m);
  for (double& x : w) x = rnd.uniform(0.0, hi);
  return w;
}

inline ValuationSpec random_additive(Rand& rnd, int m) {
  return ValuationSpec::make_additive(random_weights(rnd, m));
}

inline ValuationSpec random_unit_demand(Rand& rnd, int m) {
  return ValuationSpec::make_unit_demand(random_weights(rnd, m));
}

inline ValuationSpec random_sqrt_additive(Rand& rnd, int m) {
  return ValuationSpec::make_sqrt_additive(random_weights(rnd, m));
}

inline ValuationSpec random_xos(Rand& rnd, int m) {
  const int k = 1 + rnd.pick(3);
  std::vector<std::vector<double>> clauses;
  for (int c = 0; c < k; ++c) clauses.push_back(random_weights(rnd, m));
  return ValuationSpec::make_xos(std::move(clauses));
}

// Budget-additive table: min(sum of weights, cap). Submodular, hence
// subadditive, and monotone normalized.
inline ValuationSpec random_budget_table(Rand& rnd, int m) {
  const std::vector<double> w = random_weights(rnd, m, 5.0);
  double total = 0;
  for (double x : w) total += x;
  const double cap = rnd.uniform(0.4 * total, 0.9 * total + 1e-9);
  std::vector<double> vals(std::size_t{1} << m);
  for (ItemSet s = 0; s < (ItemSet{1} << m); ++s) {
    double sum = 0;
    for (int j = 0; j < m; ++j)
      if ((s >> j) & 1) sum += w[j];
    vals[s] = std::min(sum, cap);
  }
  return ValuationSpec::make_table(std::move(vals));
}

// Random monotone normalized table, rejection-sampled until subadditive.
inline ValuationSpec random_subadditive_table(Rand& rnd, int m) {
  for (;;) {
    std::vector<double> vals(std::size_t{1} << m, 0.0);
    for (ItemSet s = 1; s < (ItemSet{1} << m); ++s) {
      double floor_val = 0;
      for (int j = 0; j < m; ++j)
        if ((s >> j) & 1)
          floor_val = std::max(floor_val, vals[s & ~(ItemSet{1} << j)]);
      vals[s] = floor_val + rnd.uniform(0.0, 4.0);
    }
    ValuationSpec v = ValuationSpec::make_table(std::move(vals));
    if (prophet::check_class(v, prophet::ValuationClass::subadditive).ok)
      return v;
  }
}

// Any subadditive family, chosen at random.
inline ValuationSpec random_subadditive(Rand& rnd, int m) {
  switch (rnd.pick(5)) {
    case 0: return random_additive(rnd, m);
    case 1: return random_unit_demand(rnd, m);
    case 2: return random_xos(rnd, m);
    case 3: return random_sqrt_additive(rnd, m);
    default: return m <= 4 ? random_budget_table(rnd, m) : random_additive(rnd, m);
  }
}

inline BidderDistribution random_bidder(
    Rand& rnd, int m, int max_support,
    ValuationSpec (*family)(Rand&, int) = &random_subadditive) {
  const int k = 1 + rnd.pick(max_support);
  std::vector<double> q(k);
  double total = 0;
  for (double& x : q) {
    x = rnd.uniform(0.1, 1.0);
    total += x;
  }
  BidderDistribution b;
  for (int t = 0; t < k; ++t) b.support.push_back({q[t] / total, family(rnd, m)});
  // Make the mass sum exactly 1 up to one final correction.
  double acc = 0;
  for (int t = 0; t + 1 < k; ++t) acc += b.support[t].q;
  b.support[k - 1].q = 1.0 - acc;
  return b;
}

inline Instance random_instance(
    Rand& rnd, int max_n, int max_m, int max_support,
    ValuationSpec (*family)(Rand&, int) = &random_subadditive) {
  Instance inst;
  inst.m = 1 + rnd.pick(max_m);
  const int n = 1 + rnd.pick(max_n);
  for (int i = 0; i < n; ++i)
    inst.bidders.push_back(random_bidder(rnd, inst.m, max_support, family));
  inst.validate();
  return inst;
}

// Random generator aligned with the instance; score supports of at most
// `max_atoms` vectors with entries in [0, hi].
inline Irsg random_irsg(Rand& rnd, const Instance& inst, int max_atoms,
                        double hi) {
  Irsg g;
  for (const auto& b : inst.bidders) {
    prophet::Rsg rsg;
    for (std::size_t k = 0; k < b.support.size(); ++k) {
      const int t = 1 + rnd.pick(max_atoms);
      std::vector<ScoreAtom> block(t);
      double total = 0;
      for (auto& atom : block) {
        atom.q = rnd.uniform(0.1, 1.0);
        total += atom.q;
        atom.scores.resize(inst.m);
        for (double& s : atom.scores) s = rnd.uniform(0.0, hi);
      }
      double acc = 0;
      for (int a = 0; a < t; ++a) {
        block[a].q /= total;
        if (a + 1 < t)
          acc += block[a].q;
        else
          block[a].q = 1.0 - acc;
      }
      rsg.per_support.push_back(std::move(block));
    }
    g.bidders.push_back(std::move(rsg));
  }
  return g;
}

// Independent welfare-maximization oracle: recursive search assigning one
// item at a time (contrasts with the odometer in the library).
inline double opt_by_recursion(const Profile& profile) {
  const int n = profile.n();
  std::vector<ItemSet> parts(n, 0);
  double best = -1;
  const std::function<void(int)> go = [&](int item) {
    if (item == profile.m) {
      double total = 0;
      for (int i = 0; i < n; ++i) total += eval(profile.vals[i], parts[i]);
      best = std::max(best, total);
      return;
    }
    go(item + 1);  // leave item unassigned
    for (int i = 0; i < n; ++i) {
      parts[i] |= ItemSet{1} << item;
      go(item + 1);
      parts[i] &= ~(ItemSet{1} << item);
    }
  };
  go(0);
  return best;
}

}  // namespace testutil
