#include "prophet/rsg.hpp"

#include <algorithm>
#include <cmath>
#include <string>
#include <thread>

namespace prophet {
namespace {

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

// Flattened (support, score) outcome for one bidder.
struct JointAtom {
  double q = 0;
  int support = 0;
  const ValuationSpec* val = nullptr;
  const ScoreVector* scores = nullptr;
};

std::vector<std::vector<JointAtom>> joint_atoms(const Instance& inst,
                                                const Irsg& g) {
  std::vector<std::vector<JointAtom>> out(inst.n());
  for (int i = 0; i < inst.n(); ++i) {
    const auto& support = inst.bidders[i].support;
    const auto& blocks = g.bidders[i].per_support;
    for (std::size_t k = 0; k < support.size(); ++k)
      for (const ScoreAtom& atom : blocks[k])
        out[i].push_back({support[k].q * atom.q, static_cast<int>(k),
                          &support[k].val, &atom.scores});
  }
  return out;
}

double joint_terms(const std::vector<std::vector<JointAtom>>& atoms) {
  double count = 1;
  for (const auto& a : atoms) count *= static_cast<double>(a.size());
  return count;
}

// Odometer over one joint atom per bidder.
template <typename F>
void for_each_joint(const std::vector<std::vector<JointAtom>>& atoms, F&& fn) {
  const int n = static_cast<int>(atoms.size());
  std::vector<const JointAtom*> pick(n);
  std::vector<int> idx(n, 0);
  for (;;) {
    double q = 1;
    for (int i = 0; i < n; ++i) {
      pick[i] = &atoms[i][idx[i]];
      q *= pick[i]->q;
    }
    fn(pick, q);
    int i = n - 1;
    while (i >= 0 && idx[i] + 1 == static_cast<int>(atoms[i].size()))
      idx[i--] = 0;
    if (i < 0) break;
    ++idx[i];
  }
}

ItemSet strict_winners(const ScoreVector& b, const std::vector<double>& price,
                       int m) {
  ItemSet s = 0;
  for (int j = 0; j < m; ++j)
    if (b[j] > price[j]) s |= ItemSet{1} << j;
  return s;
}

// Welfare of one mechanism run given realized atoms and phantom prices.
double walk_welfare(const Instance& inst,
                    const std::vector<const JointAtom*>& real,
                    const std::vector<double>& phantom_price) {
  ItemSet remaining = full_set(inst.m);
  double total = 0;
  for (int i = 0; i < inst.n(); ++i) {
    const ItemSet take =
        remaining & strict_winners(*real[i]->scores, phantom_price, inst.m);
    total += eval(*real[i]->val, take);
    remaining &= ~take;
  }
  return total;
}

}  // namespace

int sample_score_atom(const std::vector<ScoreAtom>& block, PhiloxRng& rng) {
  const double u = rng.next_double();
  double cum = 0;
  for (std::size_t a = 0; a + 1 < block.size(); ++a) {
    cum += block[a].q;
    if (u < cum) return static_cast<int>(a);
  }
  return static_cast<int>(block.size()) - 1;
}

void Irsg::validate(const Instance& inst) const {
  require(bidders.size() == inst.bidders.size(), ErrorKind::alignment,
          "score generator covers " + std::to_string(bidders.size()) +
              " bidders, instance has " +
              std::to_string(inst.bidders.size()));
  for (std::size_t i = 0; i < bidders.size(); ++i) {
    const auto& blocks = bidders[i].per_support;
    require(blocks.size() == inst.bidders[i].support.size(),
            ErrorKind::alignment,
            "bidder " + std::to_string(i) + ": generator has " +
                std::to_string(blocks.size()) + " blocks for " +
                std::to_string(inst.bidders[i].support.size()) +
                " support valuations");
    for (std::size_t k = 0; k < blocks.size(); ++k) {
      require(!blocks[k].empty(), ErrorKind::malformed_spec,
              "bidder " + std::to_string(i) + " support " + std::to_string(k) +
                  ": empty score distribution");
      double total = 0;
      for (const ScoreAtom& atom : blocks[k]) {
        require(atom.q >= 0 && std::isfinite(atom.q), ErrorKind::malformed_spec,
                "score probabilities must be finite and nonnegative");
        total += atom.q;
        require(atom.scores.size() == static_cast<std::size_t>(inst.m),
                ErrorKind::alignment,
                "bidder " + std::to_string(i) + " support " +
                    std::to_string(k) + ": score vector length " +
                    std::to_string(atom.scores.size()) + ", expected m=" +
                    std::to_string(inst.m));
        for (double s : atom.scores)
          require(std::isfinite(s) && s >= 0, ErrorKind::malformed_spec,
                  "scores must be finite and nonnegative");
      }
      require(std::abs(total - 1.0) <= 1e-9, ErrorKind::malformed_spec,
              "bidder " + std::to_string(i) + " support " + std::to_string(k) +
                  ": score probabilities sum to " + std::to_string(total));
    }
  }
}

MechanismTrace run_correa_cristi(const Instance& inst, const Irsg& g,
                                 PhiloxRng& rng) {
  g.validate(inst);
  const int n = inst.n();
  const int m = inst.m;

  // Phantom profile: one (support, score) draw per bidder.
  std::vector<double> phantom_price(m, 0.0);
  for (int i = 0; i < n; ++i) {
    const int k = sample_valuation(inst.bidders[i], rng);
    const auto& block = g.bidders[i].per_support[k];
    const ScoreAtom& atom = block[sample_score_atom(block, rng)];
    for (int j = 0; j < m; ++j)
      phantom_price[j] = std::max(phantom_price[j], atom.scores[j]);
  }

  MechanismTrace tr;
  tr.order.resize(n);
  tr.bidders.resize(n);
  tr.phantom_prices = phantom_price;
  ItemSet remaining = full_set(m);
  for (int i = 0; i < n; ++i) {
    tr.order[i] = i;
    const int k = sample_valuation(inst.bidders[i], rng);
    const auto& block = g.bidders[i].per_support[k];
    const ScoreAtom& atom = block[sample_score_atom(block, rng)];
    const ItemSet take =
        remaining & strict_winners(atom.scores, phantom_price, m);
    remaining &= ~take;
    TraceBidder& tb = tr.bidders[i];
    tb.support_index = k;
    tb.items = take;
    tb.value = eval(inst.bidders[i].support[k].val, take);
    tb.payment = 0;
    tb.utility = tb.value;
  }
  for (const TraceBidder& tb : tr.bidders) {
    tr.revenue += tb.payment;
    tr.total_utility += tb.utility;
  }
  tr.welfare = tr.revenue + tr.total_utility;
  return tr;
}

double expected_welfare_correa_cristi(const Instance& inst, const Irsg& g) {
  g.validate(inst);
  const auto atoms = joint_atoms(inst, g);
  const double terms = joint_terms(atoms);
  require(terms * terms <= 2e7, ErrorKind::capacity,
          "exact mechanism expectation needs " + std::to_string(terms * terms) +
              " terms; use monte_carlo mode");
  const int m = inst.m;
  double total = 0;
  std::vector<double> phantom_price(m);
  for_each_joint(atoms, [&](const std::vector<const JointAtom*>& phantom,
                            double qp) {
    for (int j = 0; j < m; ++j) phantom_price[j] = 0;
    for (const JointAtom* a : phantom)
      for (int j = 0; j < m; ++j)
        phantom_price[j] = std::max(phantom_price[j], (*a->scores)[j]);
    for_each_joint(atoms, [&](const std::vector<const JointAtom*>& real,
                              double qr) {
      total += qp * qr * walk_welfare(inst, real, phantom_price);
    });
  });
  return total;
}

MirrorSides mirror_sides_exact(const Instance& inst, const Irsg& g) {
  MirrorSides out;
  out.lhs = expected_welfare_correa_cristi(inst, g);

  const auto atoms = joint_atoms(inst, g);
  const double terms = joint_terms(atoms);
  double atom_total = 0;
  for (const auto& a : atoms) atom_total += static_cast<double>(a.size());
  require(terms * terms * atom_total <= 2e7, ErrorKind::capacity,
          "exact mirror bound needs too many terms; use monte_carlo mode");

  const int m = inst.m;
  std::vector<double> p1(m), pmax(m);
  double rhs = 0;
  for_each_joint(atoms, [&](const std::vector<const JointAtom*>& ph1,
                            double q1) {
    for (int j = 0; j < m; ++j) p1[j] = 0;
    for (const JointAtom* a : ph1)
      for (int j = 0; j < m; ++j) p1[j] = std::max(p1[j], (*a->scores)[j]);
    for_each_joint(atoms, [&](const std::vector<const JointAtom*>& ph2,
                              double q2) {
      for (int j = 0; j < m; ++j) pmax[j] = p1[j];
      for (const JointAtom* a : ph2)
        for (int j = 0; j < m; ++j)
          pmax[j] = std::max(pmax[j], (*a->scores)[j]);
      double inner = 0;
      for (const auto& bidder_atoms : atoms)
        for (const JointAtom& a : bidder_atoms)
          inner += a.q * eval(*a.val, strict_winners(*a.scores, pmax, m));
      rhs += 0.5 * q1 * q2 * inner;
    });
  });
  out.rhs = rhs;
  return out;
}

MirrorEstimate mirror_sides_mc(const Instance& inst, const Irsg& g,
                               long samples, std::uint64_t seed, int workers) {
  g.validate(inst);
  require(samples >= 1, ErrorKind::parameter, "need at least one sample");
  require(workers >= 1, ErrorKind::parameter, "need at least one worker");
  const int n = inst.n();
  const int m = inst.m;

  std::vector<double> lhs_val(samples), rhs_val(samples);
  const auto run_range = [&](long lo, long hi) {
    std::vector<double> pp(m), pmax(m);
    std::vector<int> real_k(n);
    std::vector<const ScoreVector*> real_b(n);
    for (long r = lo; r < hi; ++r) {
      PhiloxRng rng(seed, static_cast<std::uint64_t>(r));
      // Draw order: real bidders, then phantom', then phantom''.
      for (int i = 0; i < n; ++i) {
        real_k[i] = sample_valuation(inst.bidders[i], rng);
        const auto& block = g.bidders[i].per_support[real_k[i]];
        real_b[i] = &block[sample_score_atom(block, rng)].scores;
      }
      for (int j = 0; j < m; ++j) pp[j] = 0;
      for (int i = 0; i < n; ++i) {
        const int k = sample_valuation(inst.bidders[i], rng);
        const auto& block = g.bidders[i].per_support[k];
        const ScoreVector& b = block[sample_score_atom(block, rng)].scores;
        for (int j = 0; j < m; ++j) pp[j] = std::max(pp[j], b[j]);
      }
      for (int j = 0; j < m; ++j) pmax[j] = pp[j];
      for (int i = 0; i < n; ++i) {
        const int k = sample_valuation(inst.bidders[i], rng);
        const auto& block = g.bidders[i].per_support[k];
        const ScoreVector& b = block[sample_score_atom(block, rng)].scores;
        for (int j = 0; j < m; ++j) pmax[j] = std::max(pmax[j], b[j]);
      }
      ItemSet remaining = full_set(m);
      double welfare = 0, wsum = 0;
      for (int i = 0; i < n; ++i) {
        const ValuationSpec& v = inst.bidders[i].support[real_k[i]].val;
        const ItemSet take =
            remaining & strict_winners(*real_b[i], pp, m);
        welfare += eval(v, take);
        remaining &= ~take;
        wsum += eval(v, strict_winners(*real_b[i], pmax, m));
      }
      lhs_val[r] = welfare;
      rhs_val[r] = 0.5 * wsum;
    }
  };

  if (workers == 1 || samples < 2 * workers) {
    run_range(0, samples);
  } else {
    std::vector<std::thread> pool;
    const long chunk = (samples + workers - 1) / workers;
    for (int w = 0; w < workers; ++w) {
      const long lo = w * chunk;
      const long hi = std::min<long>(samples, lo + chunk);
      if (lo >= hi) break;
      pool.emplace_back(run_range, lo, hi);
    }
    for (auto& t : pool) t.join();
  }

  const auto summarize = [&](const std::vector<double>& vals, double& mean,
                             double& half) {
    double total = 0;
    for (double x : vals) total += x;
    mean = total / static_cast<double>(samples);
    double ss = 0;
    for (double x : vals) ss += (x - mean) * (x - mean);
    const double sd =
        samples > 1 ? std::sqrt(ss / static_cast<double>(samples - 1)) : 0.0;
    half = 1.96 * sd / std::sqrt(static_cast<double>(samples));
  };

  MirrorEstimate est;
  est.samples = samples;
  summarize(lhs_val, est.lhs, est.lhs_half);
  summarize(rhs_val, est.rhs, est.rhs_half);
  return est;
}

}  // namespace prophet
