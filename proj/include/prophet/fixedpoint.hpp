#pragma once

#include <optional>
#include <vector>

#include "prophet/rsg.hpp"
#include "prophet/valuations.hpp"

namespace prophet {

// Discrete score grid: levels {s * epsilon : s >= 0, s * epsilon <= v_max}.
// A score vector over m items is encoded as an id in base G = levels.size(),
// item j occupying digit j (item 0 least significant).
struct ScoreGrid {
  double epsilon = 0;
  double v_max = 0;
  int m = 0;
  std::vector<double> levels;

  int per_item() const { return static_cast<int>(levels.size()); }
  long vector_count() const;
  int digit(long id, int j) const;
  double level_of(long id, int j) const { return levels[digit(id, j)]; }
  ScoreVector decode(long id) const;
};

ScoreGrid build_grid(double v_max, double epsilon, int m);

// An IRSG with all score distributions supported on the grid, flattened to
// one probability vector per (bidder, support) block.
struct IrsgVector {
  ScoreGrid grid;
  std::vector<int> support_sizes;           // per bidder
  std::vector<std::vector<double>> blocks;  // each sums to 1 over grid ids

  int block_index(int bidder, int k) const;
  int block_count() const { return static_cast<int>(blocks.size()); }
  Irsg to_irsg(const Instance& inst) const;
};

IrsgVector zero_irsg_vector(const Instance& inst, const ScoreGrid& grid);

// Law of the posted price p'_j = max_i b'_ij over grid ids, where each
// bidder contributes the mixture of their blocks weighted by support
// probabilities.
std::vector<double> price_marginal(const IrsgVector& x, const Instance& inst);

struct PhiResidual {
  double residual = 0;  // max over blocks of rhs - lhs; <= 0 means x in Phi(x)
  int bidder = 0;
  int support = 0;
  ItemSet witness_x = 0;  // the rhs argmax at the worst block
};

// Violation of the best-response constraint at slack eps: for every block
// with valuation v and score law f ~ x_block,
//   E[ v({j : f_j > max(p'_j, p''_j)}) ] - E[ f(M) ]
//     >= max_X { v(X)/3 - E[p'(X)] - slack * |X| },
// with p', p'' iid draws of the price marginal.
PhiResidual phi_residual(const IrsgVector& x, const Instance& inst,
                         double slack);

// Rounds each price in X* up to the next strictly larger grid level; items
// outside X* get score 0. Falls back to the all-zero vector when any rounded
// entry would exceed the top grid level.
ScoreVector construct_fhat(const ScoreGrid& grid, ItemSet xstar,
                           const ScoreVector& p3);

// Finite price law for the witness search (atoms need not lie on the grid).
struct ScoreLaw {
  std::vector<double> q;
  std::vector<ScoreVector> atoms;
};

// Searches the grid for a score vector f satisfying the block inequality
// above (tolerance -1e-9) for valuation v against the given price law.
// Requires v(M) <= grid.v_max.
std::optional<ScoreVector> helper1_witness(const ValuationSpec& v,
                                           const ScoreLaw& law,
                                           const ScoreGrid& grid);

struct FixedPointResult {
  IrsgVector x;
  double residual = 0;
  long iterations = 0;
  bool converged = false;
  std::vector<double> residual_log;  // residual at each evaluation
};

// Fictitious-play search for x with phi_residual(x) <= tolerance: averaging
// toward the block best responses with weight 1/(t+2), then, if needed, a
// damped polish phase with constant weight 0.02 restarted from the best
// point seen. Starts from the all-zero-score IRSG. Deterministic.
FixedPointResult find_fixed_point(const Instance& inst, double epsilon,
                                  long max_iters, double tolerance = 1e-6);

struct ConstantBoundReport {
  double e_alg = 0;
  double e_opt = 0;
  double residual = 0;
  double theorem_epsilon = 0;
  double delta = 0;  // grid step of the fixed point
  bool bound_ok = false;  // (6 + eps) E[ALG] >= E[OPT] - 1e-6
  bool delta_ok = false;  // delta <= eps E[OPT] / (6 (6 + eps) m)
  bool chain_ok = false;  // E[ALG] >= E[OPT]/6 - delta m - 1e-6
};

// Certifies the constant-factor guarantee at an approximate fixed point g.
// Throws precondition if phi_residual(g) exceeds residual_tolerance. The
// unconditional chain gives chain_ok; when the grid step also satisfies the
// delta audit (delta_ok), bound_ok follows.
ConstantBoundReport verify_constant_bound(const Instance& inst,
                                          const IrsgVector& g,
                                          double theorem_epsilon,
                                          double residual_tolerance = 1e-6);

}  // namespace prophet
