#pragma once

#include <cstdint>
#include <vector>

#include "prophet/mechanisms.hpp"
#include "prophet/valuations.hpp"

namespace prophet {

using ScoreVector = std::vector<double>;  // one nonnegative score per item

struct ScoreAtom {
  double q = 0;
  ScoreVector scores;
};

// Random score generator for one bidder: a finite-support distribution over
// score vectors for each valuation the bidder may realize.
struct Rsg {
  std::vector<std::vector<ScoreAtom>> per_support;
};

// One Rsg per bidder, aligned with an instance's support structure.
struct Irsg {
  std::vector<Rsg> bidders;

  // Checks alignment with the instance, nonnegative finite scores of length
  // m, and probability mass within 1e-9 of 1 per (bidder, support) block.
  void validate(const Instance& inst) const;
};

// Draws one atom index from a score block using exactly one uniform variate.
int sample_score_atom(const std::vector<ScoreAtom>& block, PhiloxRng& rng);

// One run of the phantom-threshold mechanism: draw a phantom profile and its
// scores, post p'_j = max_i b'_ij, then let real bidders (arriving in id
// order) take the remaining items they strictly outbid, free of charge.
// The trace records p' in phantom_prices; payments are all zero.
MechanismTrace run_correa_cristi(const Instance& inst, const Irsg& g,
                                 PhiloxRng& rng);

// Exact E[welfare] of the mechanism by enumerating real and phantom
// (support, score) profiles. Throws capacity beyond ~2*10^7 terms.
double expected_welfare_correa_cristi(const Instance& inst, const Irsg& g);

struct MirrorSides {
  double lhs = 0;  // E[ALG]
  double rhs = 0;  // (1/2) sum_i E[ v_i(W_i) ], W_i the doubly-survived set
};

// Both sides of the mirror bound, by exact enumeration.
MirrorSides mirror_sides_exact(const Instance& inst, const Irsg& g);

struct MirrorEstimate {
  double lhs = 0;
  double lhs_half = 0;  // 95% confidence halfwidth
  double rhs = 0;
  double rhs_half = 0;
  long samples = 0;
};

// Monte Carlo estimate of both sides. Replica r draws from PhiloxRng(seed,
// r), so results are identical for any worker count.
MirrorEstimate mirror_sides_mc(const Instance& inst, const Irsg& g,
                               long samples, std::uint64_t seed,
                               int workers = 1);

}  // namespace prophet
