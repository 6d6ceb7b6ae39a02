#pragma once

#include <vector>

#include "prophet/valuations.hpp"

namespace prophet {

// Max-min pricing certificate for one valuation on a small ground set U.
// Subsets of U are indexed by position masks: bit t stands for the t-th
// element of U in ascending item order. `delta` is a distribution over those
// position masks. The certified guarantee is
//   g = min over T subseteq U of
//       [ p(T) + sum_S delta_S * ( v(S \ T) - p(S) ) ],
// and alpha_achieved = v(U) / g whenever both are positive.
struct SubgoodSolution {
  ItemSet u = 0;
  std::vector<double> prices;  // one per element of U, ascending item order
  std::vector<double> delta;   // 2^|U| entries, position-mask indexed
  double guarantee = 0;
  double alpha_achieved = 0;
};

// Value of the max-min objective at (prices, delta) for one T.
double subgood_lhs(const ValuationSpec& v, ItemSet u,
                   const std::vector<double>& prices,
                   const std::vector<double>& delta, ItemSet t_positions);

// Grid search over per-element prices in {k * v(U)/resolution}, solving the
// inner min-max over delta exactly as a small LP at each grid point. The
// reported guarantee is recomputed from the returned certificate, so
// verify_subgood on the result has slack exactly zero. |U| <= 3.
SubgoodSolution solve_subgood(const ValuationSpec& v, ItemSet u,
                              int resolution);

// Worst-case slack min_T lhs(T) - v(U)/alpha_achieved of a claimed
// certificate (0 is used for the right-hand side when v(U) = 0 or the
// guarantee is nonpositive). Throws malformed_spec on an invalid delta.
double verify_subgood(const SubgoodSolution& sol, const ValuationSpec& v,
                      ItemSet u);

}  // namespace prophet
