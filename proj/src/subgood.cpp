#include "prophet/subgood.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>

#include "prophet/linprog.hpp"

namespace prophet {
namespace {

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

// Elements of u in ascending item order.
std::vector<int> elements_of(ItemSet u) {
  std::vector<int> items;
  for (ItemSet rest = u; rest != 0; rest &= rest - 1)
    items.push_back(std::countr_zero(rest));
  return items;
}

// Position mask -> item mask.
ItemSet expand(const std::vector<int>& items, ItemSet pos_mask) {
  ItemSet s = 0;
  for (std::size_t t = 0; t < items.size(); ++t)
    if (contains(pos_mask, static_cast<int>(t))) s |= ItemSet{1} << items[t];
  return s;
}

double pos_price(const std::vector<double>& prices, ItemSet pos_mask) {
  double total = 0;
  for (ItemSet rest = pos_mask; rest != 0; rest &= rest - 1)
    total += prices[std::countr_zero(rest)];
  return total;
}

void check_ground_set(const ValuationSpec& v, ItemSet u) {
  const int m = v.item_count();
  require((u & ~full_set(m)) == 0, ErrorKind::parameter,
          "ground set out of range for this valuation");
  require(set_size(u) <= 3, ErrorKind::capacity,
          "ground sets above 3 elements are not supported (price grid is "
          "exponential)");
}

}  // namespace

double subgood_lhs(const ValuationSpec& v, ItemSet u,
                   const std::vector<double>& prices,
                   const std::vector<double>& delta, ItemSet t_positions) {
  const auto items = elements_of(u);
  const int k = static_cast<int>(items.size());
  const ItemSet subsets = full_set(k);
  require(prices.size() == items.size(), ErrorKind::wrong_shape,
          "price count does not match ground set size");
  require(delta.size() == (std::size_t{1} << k), ErrorKind::wrong_shape,
          "delta must have 2^|U| entries");
  require((t_positions & ~subsets) == 0, ErrorKind::parameter,
          "T is not a subset of U");
  double total = pos_price(prices, t_positions);
  for (ItemSet s = 0; s <= subsets; ++s) {
    const ItemSet diff = expand(items, s & ~t_positions);
    total += delta[s] * (eval(v, diff) - pos_price(prices, s));
  }
  return total;
}

SubgoodSolution solve_subgood(const ValuationSpec& v, ItemSet u,
                              int resolution) {
  check_ground_set(v, u);
  require(resolution >= 1, ErrorKind::parameter,
          "resolution must be at least 1");
  const auto items = elements_of(u);
  const int k = static_cast<int>(items.size());
  const int nsub = 1 << k;
  const double v_u = eval(v, u);

  // Precompute v(S \ T) for all position-mask pairs.
  std::vector<double> vdiff(static_cast<std::size_t>(nsub) * nsub);
  for (ItemSet s = 0; s < static_cast<ItemSet>(nsub); ++s)
    for (ItemSet t = 0; t < static_cast<ItemSet>(nsub); ++t)
      vdiff[s * nsub + t] = eval(v, expand(items, s & ~t));

  const auto min_lhs = [&](const std::vector<double>& prices,
                           const std::vector<double>& delta) {
    double worst = std::numeric_limits<double>::infinity();
    for (ItemSet t = 0; t < static_cast<ItemSet>(nsub); ++t) {
      double total = pos_price(prices, t);
      for (ItemSet s = 0; s < static_cast<ItemSet>(nsub); ++s)
        total += delta[s] * (vdiff[s * nsub + t] - pos_price(prices, s));
      worst = std::min(worst, total);
    }
    return worst;
  };

  // Best response of the adversary is an LP over delta:
  //   max g  s.t.  g <= p(T) + sum_S delta_S (v(S\T) - p(S))  for all T,
  //                sum_S delta_S = 1, delta >= 0.
  // Variables are [g+, g-, delta_0..], since the solver wants x >= 0.
  const auto inner_lp = [&](const std::vector<double>& prices,
                            std::vector<double>& delta_out) {
    const int nvar = 2 + nsub;
    LpSolver::Matrix A;
    LpSolver::Vector b;
    for (ItemSet t = 0; t < static_cast<ItemSet>(nsub); ++t) {
      LpSolver::Vector row(nvar, 0.0);
      row[0] = 1;
      row[1] = -1;
      for (ItemSet s = 0; s < static_cast<ItemSet>(nsub); ++s)
        row[2 + s] = pos_price(prices, s) - vdiff[s * nsub + t];
      A.push_back(std::move(row));
      b.push_back(pos_price(prices, t));
    }
    LpSolver::Vector ones(nvar, 0.0);
    for (int s = 0; s < nsub; ++s) ones[2 + s] = 1;
    A.push_back(ones);
    b.push_back(1.0);
    for (double& x : ones) x = -x;
    A.push_back(std::move(ones));
    b.push_back(-1.0);

    LpSolver::Vector c(nvar, 0.0);
    c[0] = 1;
    c[1] = -1;
    LpSolver::Vector x;
    LpSolver(A, b, c).solve(x);

    delta_out.assign(nsub, 0.0);
    double total = 0;
    for (int s = 0; s < nsub; ++s) {
      delta_out[s] = std::max(0.0, x[2 + s]);
      total += delta_out[s];
    }
    require(total > 0.5, ErrorKind::precondition,
            "inner LP returned a degenerate distribution");
    for (double& d : delta_out) d /= total;
  };

  SubgoodSolution best;
  best.u = u;
  best.prices.assign(k, 0.0);
  best.delta.assign(nsub, 0.0);
  best.delta[0] = 1.0;
  best.guarantee = -std::numeric_limits<double>::infinity();

  // Odometer over the price grid {g * v(U) / resolution}, ascending, so ties
  // keep the lexicographically smallest price vector.
  std::vector<int> gridpos(k, 0);
  std::vector<double> prices(k, 0.0), delta;
  for (;;) {
    for (int t = 0; t < k; ++t)
      prices[t] = v_u * static_cast<double>(gridpos[t]) / resolution;
    inner_lp(prices, delta);
    // Recompute the guarantee from the certificate itself so solver noise
    // cannot inflate it.
    const double g = min_lhs(prices, delta);
    if (g > best.guarantee) {
      best.guarantee = g;
      best.prices = prices;
      best.delta = delta;
    }
    int t = k - 1;
    while (t >= 0 && gridpos[t] == resolution) gridpos[t--] = 0;
    if (t < 0) break;
    ++gridpos[t];
  }

  if (best.guarantee > 0)
    best.alpha_achieved = v_u / best.guarantee;
  else
    best.alpha_achieved =
        v_u > 0 ? std::numeric_limits<double>::infinity() : 0.0;
  return best;
}

double verify_subgood(const SubgoodSolution& sol, const ValuationSpec& v,
                      ItemSet u) {
  check_ground_set(v, u);
  const auto items = elements_of(u);
  const int k = static_cast<int>(items.size());
  require(sol.u == u, ErrorKind::parameter,
          "solution was produced for a different ground set");
  require(sol.delta.size() == (std::size_t{1} << k), ErrorKind::malformed_spec,
          "delta must have 2^|U| entries");
  double total = 0;
  for (double d : sol.delta) {
    require(d >= -1e-12, ErrorKind::malformed_spec,
            "delta entries must be nonnegative");
    total += d;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::malformed_spec,
          "delta must sum to 1, got " + std::to_string(total));

  const double v_u = eval(v, u);
  double rhs = 0;
  if (v_u > 0 && sol.alpha_achieved > 0 &&
      std::isfinite(sol.alpha_achieved))
    rhs = v_u / sol.alpha_achieved;

  double worst = std::numeric_limits<double>::infinity();
  for (ItemSet t = 0; t < (ItemSet{1} << k); ++t)
    worst = std::min(worst, subgood_lhs(v, u, sol.prices, sol.delta, t));
  return worst - rhs;
}

}  // namespace prophet
