#include "prophet/fixedpoint.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>

#include "prophet/allocation.hpp"

namespace prophet {
namespace {

constexpr double kWitnessTol = 1e-9;
constexpr long kMaxGridVectors = 4096;

void require(bool cond, ErrorKind kind, const std::string& msg) {
  if (!cond) throw LabError(kind, msg);
}

// v evaluated on every subset mask.
std::vector<double> value_table(const ValuationSpec& v, int m) {
  require(v.item_count() == m, ErrorKind::wrong_shape,
          "valuation item count does not match grid");
  std::vector<double> tab(std::size_t{1} << m);
  for (ItemSet s = 0; s <= full_set(m); ++s) tab[s] = eval(v, s);
  return tab;
}

// Shared per-iteration state: price marginal, its pairwise max law, item
// price means, digit sums, and the who-beats-whom mask table.
struct PhiWork {
  long V = 0;
  std::vector<double> pi;    // price marginal over grid ids
  std::vector<double> rho;   // law of max(p', p''), p', p'' iid ~ pi
  std::vector<double> ep;    // E[p'_j] per item
  std::vector<double> fsum;  // f(M) per grid id
  std::vector<std::uint16_t> win;  // win[f*V+h] = {j : f_j > h_j}
};

PhiWork make_phi_work(const IrsgVector& x, const Instance& inst) {
  const ScoreGrid& grid = x.grid;
  const long V = grid.vector_count();
  require(V <= kMaxGridVectors, ErrorKind::capacity,
          "score grid has " + std::to_string(V) + " vectors; too fine");
  PhiWork w;
  w.V = V;
  w.pi = price_marginal(x, inst);

  w.win.assign(static_cast<std::size_t>(V) * V, 0);
  std::vector<long> maxid(static_cast<std::size_t>(V) * V, 0);
  const int G = grid.per_item();
  for (long f = 0; f < V; ++f) {
    for (long h = 0; h < V; ++h) {
      std::uint16_t mask = 0;
      long id = 0, p = 1;
      long fr = f, hr = h;
      for (int j = 0; j < grid.m; ++j) {
        const int df = static_cast<int>(fr % G), dh = static_cast<int>(hr % G);
        fr /= G;
        hr /= G;
        if (df > dh) mask |= std::uint16_t{1} << j;
        id += static_cast<long>(std::max(df, dh)) * p;
        p *= G;
      }
      w.win[f * V + h] = mask;
      maxid[f * V + h] = id;
    }
  }

  w.rho.assign(V, 0.0);
  for (long g = 0; g < V; ++g) {
    if (w.pi[g] == 0) continue;
    for (long h = 0; h < V; ++h)
      w.rho[maxid[g * V + h]] += w.pi[g] * w.pi[h];
  }

  w.ep.assign(grid.m, 0.0);
  for (long g = 0; g < V; ++g)
    for (int j = 0; j < grid.m; ++j) w.ep[j] += w.pi[g] * grid.level_of(g, j);

  w.fsum.assign(V, 0.0);
  for (long f = 0; f < V; ++f) {
    double total = 0;
    for (int j = 0; j < grid.m; ++j) total += grid.level_of(f, j);
    w.fsum[f] = total;
  }
  return w;
}

// Per-id objective E_h~rho[ v(win(f,h)) ] - f(M) for one block.
std::vector<double> block_scores(const PhiWork& w,
                                 const std::vector<double>& vtab) {
  const long V = w.V;
  std::vector<double> scores(V);
  for (long f = 0; f < V; ++f) {
    double total = 0;
    for (long h = 0; h < V; ++h) {
      const double q = w.rho[h];
      if (q != 0) total += q * vtab[w.win[f * V + h]];
    }
    scores[f] = total - w.fsum[f];
  }
  return scores;
}

// max_X { v(X)/3 - E[p'(X)] - slack |X| } and its argmax.
std::pair<double, ItemSet> block_rhs(const std::vector<double>& vtab,
                                     const std::vector<double>& ep, int m,
                                     double slack) {
  double best = -std::numeric_limits<double>::infinity();
  ItemSet best_x = 0;
  for (ItemSet s = 0; s <= full_set(m); ++s) {
    double val = vtab[s] / 3.0;
    for (ItemSet rest = s; rest != 0; rest &= rest - 1)
      val -= ep[std::countr_zero(rest)];
    val -= slack * set_size(s);
    if (val > best) {
      best = val;
      best_x = s;
    }
  }
  return {best, best_x};
}

}  // namespace

long ScoreGrid::vector_count() const {
  double count = 1;
  for (int j = 0; j < m; ++j) count *= static_cast<double>(levels.size());
  require(count <= 1e15, ErrorKind::capacity, "score grid overflows");
  long out = 1;
  for (int j = 0; j < m; ++j) out *= static_cast<long>(levels.size());
  return out;
}

int ScoreGrid::digit(long id, int j) const {
  const long G = per_item();
  for (int t = 0; t < j; ++t) id /= G;
  return static_cast<int>(id % G);
}

ScoreVector ScoreGrid::decode(long id) const {
  ScoreVector f(m);
  const long G = per_item();
  for (int j = 0; j < m; ++j) {
    f[j] = levels[id % G];
    id /= G;
  }
  return f;
}

ScoreGrid build_grid(double v_max, double epsilon, int m) {
  require(std::isfinite(epsilon) && epsilon > 0, ErrorKind::parameter,
          "epsilon must be positive");
  require(std::isfinite(v_max) && v_max >= 0, ErrorKind::parameter,
          "v_max must be nonnegative");
  require(m >= 1 && m <= kMaxItems, ErrorKind::parameter,
          "m must be between 1 and 16");
  ScoreGrid grid;
  grid.epsilon = epsilon;
  grid.v_max = v_max;
  grid.m = m;
  const long steps = static_cast<long>(std::floor(v_max / epsilon + 1e-9));
  require(steps >= 0 && steps <= 1'000'000, ErrorKind::capacity,
          "grid would have too many levels");
  for (long s = 0; s <= steps; ++s)
    grid.levels.push_back(static_cast<double>(s) * epsilon);
  return grid;
}

int IrsgVector::block_index(int bidder, int k) const {
  int base = 0;
  for (int i = 0; i < bidder; ++i) base += support_sizes[i];
  return base + k;
}

Irsg IrsgVector::to_irsg(const Instance& inst) const {
  require(support_sizes.size() == inst.bidders.size(), ErrorKind::alignment,
          "flattened generator does not match bidder count");
  Irsg g;
  g.bidders.resize(inst.n());
  for (int i = 0; i < inst.n(); ++i) {
    auto& per_support = g.bidders[i].per_support;
    per_support.resize(support_sizes[i]);
    for (int k = 0; k < support_sizes[i]; ++k) {
      const auto& blk = blocks[block_index(i, k)];
      for (long id = 0; id < static_cast<long>(blk.size()); ++id)
        if (blk[id] > 0) per_support[k].push_back({blk[id], grid.decode(id)});
    }
  }
  return g;
}

IrsgVector zero_irsg_vector(const Instance& inst, const ScoreGrid& grid) {
  require(grid.m == inst.m, ErrorKind::alignment,
          "grid item count does not match the instance");
  IrsgVector x;
  x.grid = grid;
  const long V = grid.vector_count();
  require(V <= kMaxGridVectors, ErrorKind::capacity,
          "score grid has too many vectors");
  for (const auto& b : inst.bidders) {
    x.support_sizes.push_back(static_cast<int>(b.support.size()));
    for (std::size_t k = 0; k < b.support.size(); ++k) {
      std::vector<double> blk(V, 0.0);
      blk[0] = 1.0;  // point mass on the all-zero score vector
      x.blocks.push_back(std::move(blk));
    }
  }
  return x;
}

std::vector<double> price_marginal(const IrsgVector& x, const Instance& inst) {
  require(x.support_sizes.size() == inst.bidders.size(), ErrorKind::alignment,
          "flattened generator does not match bidder count");
  const ScoreGrid& grid = x.grid;
  require(grid.m == inst.m, ErrorKind::alignment,
          "grid item count does not match the instance");
  const long V = grid.vector_count();
  require(V <= kMaxGridVectors, ErrorKind::capacity, "score grid too fine");
  const int G = grid.per_item();

  const auto mixture = [&](int i) {
    std::vector<double> mu(V, 0.0);
    const auto& support = inst.bidders[i].support;
    require(static_cast<int>(support.size()) == x.support_sizes[i],
            ErrorKind::alignment, "support sizes do not match the instance");
    for (std::size_t k = 0; k < support.size(); ++k) {
      const auto& blk = x.blocks[x.block_index(i, static_cast<int>(k))];
      require(blk.size() == static_cast<std::size_t>(V), ErrorKind::alignment,
              "block size does not match the grid");
      for (long id = 0; id < V; ++id) mu[id] += support[k].q * blk[id];
    }
    return mu;
  };

  std::vector<double> dist = mixture(0);
  for (int i = 1; i < inst.n(); ++i) {
    const std::vector<double> mu = mixture(i);
    std::vector<double> next(V, 0.0);
    for (long g = 0; g < V; ++g) {
      if (dist[g] == 0) continue;
      for (long h = 0; h < V; ++h) {
        if (mu[h] == 0) continue;
        long id = 0, p = 1, gr = g, hr = h;
        for (int j = 0; j < grid.m; ++j) {
          id += static_cast<long>(
                    std::max(static_cast<int>(gr % G), static_cast<int>(hr % G))) *
                p;
          p *= G;
          gr /= G;
          hr /= G;
        }
        next[id] += dist[g] * mu[h];
      }
    }
    dist.swap(next);
  }
  return dist;
}

PhiResidual phi_residual(const IrsgVector& x, const Instance& inst,
                         double slack) {
  const PhiWork w = make_phi_work(x, inst);
  PhiResidual out;
  out.residual = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < inst.n(); ++i) {
    for (int k = 0; k < x.support_sizes[i]; ++k) {
      const auto vtab = value_table(inst.bidders[i].support[k].val, inst.m);
      const auto scores = block_scores(w, vtab);
      const auto& blk = x.blocks[x.block_index(i, k)];
      double lhs = 0;
      for (long f = 0; f < w.V; ++f)
        if (blk[f] != 0) lhs += blk[f] * scores[f];
      const auto [rhs, witness] = block_rhs(vtab, w.ep, inst.m, slack);
      const double resid = rhs - lhs;
      if (resid > out.residual) {
        out.residual = resid;
        out.bidder = i;
        out.support = k;
        out.witness_x = witness;
      }
    }
  }
  return out;
}

ScoreVector construct_fhat(const ScoreGrid& grid, ItemSet xstar,
                           const ScoreVector& p3) {
  require(p3.size() == static_cast<std::size_t>(grid.m), ErrorKind::wrong_shape,
          "price vector length does not match the grid");
  require((xstar & ~full_set(grid.m)) == 0, ErrorKind::parameter,
          "X* out of range");
  const long top = static_cast<long>(grid.levels.size()) - 1;
  ScoreVector f(grid.m, 0.0);
  for (int j = 0; j < grid.m; ++j) {
    if (!contains(xstar, j)) continue;
    require(std::isfinite(p3[j]) && p3[j] >= 0, ErrorKind::parameter,
            "prices must be finite and nonnegative");
    const long s =
        static_cast<long>(std::floor(p3[j] / grid.epsilon + 1e-9)) + 1;
    if (s > top) return ScoreVector(grid.m, 0.0);  // would exceed the grid
    f[j] = grid.levels[s];
  }
  return f;
}

std::optional<ScoreVector> helper1_witness(const ValuationSpec& v,
                                           const ScoreLaw& law,
                                           const ScoreGrid& grid) {
  const int m = grid.m;
  require(v.item_count() == m, ErrorKind::wrong_shape,
          "valuation item count does not match the grid");
  require(law.q.size() == law.atoms.size() && !law.q.empty(),
          ErrorKind::malformed_spec, "price law atoms and weights mismatch");
  double total = 0;
  for (double q : law.q) {
    require(q >= 0 && std::isfinite(q), ErrorKind::malformed_spec,
            "price law weights must be finite and nonnegative");
    total += q;
  }
  require(std::abs(total - 1.0) <= 1e-9, ErrorKind::malformed_spec,
          "price law weights must sum to 1");
  for (const auto& a : law.atoms) {
    require(a.size() == static_cast<std::size_t>(m), ErrorKind::wrong_shape,
            "price law atom has wrong length");
    for (double s : a)
      require(std::isfinite(s) && s >= 0, ErrorKind::malformed_spec,
              "price law atoms must be finite and nonnegative");
  }
  const auto vtab = value_table(v, m);
  require(vtab[full_set(m)] <= grid.v_max + 1e-9, ErrorKind::parameter,
          "v(M) exceeds the grid ceiling");

  const long V = grid.vector_count();
  const long A = static_cast<long>(law.atoms.size());
  require(V * A * A * m <= 100'000'000L, ErrorKind::capacity,
          "witness search too large");

  std::vector<double> ep(m, 0.0);
  for (long a = 0; a < A; ++a)
    for (int j = 0; j < m; ++j) ep[j] += law.q[a] * law.atoms[a][j];
  const double rhs = block_rhs(vtab, ep, m, grid.epsilon).first;

  // Pairwise max of two iid draws of the law.
  std::vector<double> pair_q;
  std::vector<ScoreVector> pair_max;
  pair_q.reserve(A * A);
  pair_max.reserve(A * A);
  for (long a = 0; a < A; ++a) {
    for (long b = 0; b < A; ++b) {
      const double q = law.q[a] * law.q[b];
      if (q == 0) continue;
      ScoreVector mx(m);
      for (int j = 0; j < m; ++j)
        mx[j] = std::max(law.atoms[a][j], law.atoms[b][j]);
      pair_q.push_back(q);
      pair_max.push_back(std::move(mx));
    }
  }

  for (long id = 0; id < V; ++id) {
    const ScoreVector f = grid.decode(id);
    double fsum = 0;
    for (int j = 0; j < m; ++j) fsum += f[j];
    double lhs = 0;
    for (std::size_t t = 0; t < pair_q.size(); ++t) {
      ItemSet winset = 0;
      for (int j = 0; j < m; ++j)
        if (f[j] > pair_max[t][j]) winset |= ItemSet{1} << j;
      lhs += pair_q[t] * vtab[winset];
    }
    if (lhs - fsum >= rhs - kWitnessTol) return f;
  }
  return std::nullopt;
}

FixedPointResult find_fixed_point(const Instance& inst, double epsilon,
                                  long max_iters, double tolerance) {
  require(max_iters >= 1, ErrorKind::parameter,
          "max_iters must be at least 1");
  require(tolerance >= 0, ErrorKind::parameter,
          "tolerance must be nonnegative");
  const ScoreGrid grid = build_grid(inst.v_max(), epsilon, inst.m);
  IrsgVector x = zero_irsg_vector(inst, grid);
  const long V = grid.vector_count();
  const int nblocks = x.block_count();

  // Value tables per block, in block order.
  std::vector<std::vector<double>> vtabs;
  vtabs.reserve(nblocks);
  for (const auto& b : inst.bidders)
    for (const auto& atom : b.support)
      vtabs.push_back(value_table(atom.val, inst.m));

  FixedPointResult res;
  res.residual = std::numeric_limits<double>::infinity();
  IrsgVector best = x;

  // One evaluation: residual at x plus each block's best-response id.
  std::vector<long> br(nblocks, 0);
  const auto evaluate = [&]() {
    const PhiWork w = make_phi_work(x, inst);
    double worst = -std::numeric_limits<double>::infinity();
    for (int blk = 0; blk < nblocks; ++blk) {
      const auto scores = block_scores(w, vtabs[blk]);
      double lhs = 0;
      long arg = 0;
      double arg_score = scores[0];
      const auto& probs = x.blocks[blk];
      for (long f = 0; f < V; ++f) {
        if (probs[f] != 0) lhs += probs[f] * scores[f];
        if (scores[f] > arg_score) {
          arg_score = scores[f];
          arg = f;
        }
      }
      const double rhs = block_rhs(vtabs[blk], w.ep, inst.m, grid.epsilon).first;
      worst = std::max(worst, rhs - lhs);
      br[blk] = arg;
    }
    return worst;
  };

  const auto step = [&](double weight) {
    for (int blk = 0; blk < nblocks; ++blk) {
      auto& probs = x.blocks[blk];
      double total = 0;
      for (long f = 0; f < V; ++f) {
        probs[f] *= (1 - weight);
        if (f == br[blk]) probs[f] += weight;
        total += probs[f];
      }
      for (long f = 0; f < V; ++f) probs[f] /= total;
    }
  };

  const long phase1 = std::max<long>(1, max_iters / 2);
  bool polishing = false;
  for (long t = 0; t < max_iters; ++t) {
    const double resid = evaluate();
    ++res.iterations;
    res.residual_log.push_back(resid);
    if (resid < res.residual) {
      res.residual = resid;
      best = x;
    }
    if (res.residual <= tolerance) {
      res.converged = true;
      break;
    }
    if (res.iterations == max_iters) break;
    if (!polishing && t + 1 >= phase1) {
      // Polish phase: restart from the best point seen and re-evaluate its
      // best responses before taking damped steps.
      polishing = true;
      x = best;
      continue;
    }
    step(polishing ? 0.02 : 1.0 / static_cast<double>(t + 2));
  }
  res.x = best;
  return res;
}

ConstantBoundReport verify_constant_bound(const Instance& inst,
                                          const IrsgVector& g,
                                          double theorem_epsilon,
                                          double residual_tolerance) {
  require(theorem_epsilon > 0, ErrorKind::parameter,
          "theorem epsilon must be positive");
  ConstantBoundReport rep;
  rep.theorem_epsilon = theorem_epsilon;
  rep.delta = g.grid.epsilon;
  rep.residual = phi_residual(g, inst, g.grid.epsilon).residual;
  require(rep.residual <= residual_tolerance, ErrorKind::precondition,
          "not an approximate fixed point: residual " +
              std::to_string(rep.residual));
  rep.e_alg = expected_welfare_correa_cristi(inst, g.to_irsg(inst));
  rep.e_opt = expected_opt_exact(inst);
  const double eps = theorem_epsilon;
  rep.bound_ok = (6.0 + eps) * rep.e_alg >= rep.e_opt - 1e-6;
  rep.delta_ok =
      rep.delta <= eps * rep.e_opt / (6.0 * (6.0 + eps) * inst.m) + 1e-12;
  rep.chain_ok = rep.e_alg >= rep.e_opt / 6.0 - rep.delta * inst.m - 1e-6;
  return rep;
}

}  // namespace prophet
