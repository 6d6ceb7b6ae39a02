#include <cmath>
#include <vector>

#include "doctest.h"
#include "prophet/errors.hpp"
#include "prophet/linprog.hpp"
#include "prophet/subgood.hpp"
#include "test_util.hpp"

using namespace prophet;

namespace {

// Independent coarse oracle for |U| = 1: brute force over a fine price grid
// and a fine grid of delta = (1-lambda, lambda).
double single_item_maxmin_oracle(const ValuationSpec& v, ItemSet u) {
  const double vu = eval(v, u);
  double best = -1e18;
  const int steps = 400;
  for (int a = 0; a <= steps; ++a) {
    const double p = vu * a / steps;
    for (int b = 0; b <= steps; ++b) {
      const double lam = double(b) / steps;  // delta({item}) mass
      // T = {}: 0 + (1-lam)*(v({})-0) + lam*(v(S)-p), S = {item}.
      const double t_empty = lam * (vu - p);
      // T = {item}: p + (1-lam)*0 + lam*(v({})-p).
      const double t_full = p + lam * (0.0 - p);
      best = std::max(best, std::min(t_empty, t_full));
    }
  }
  return best;
}

}  // namespace

TEST_CASE("subgood_lhs evaluates the objective") {
  const auto v = ValuationSpec::make_additive({1.0});
  // prices = {0.5}, delta = (0.5 on {}, 0.5 on {item}).
  const std::vector<double> p{0.5}, d{0.5, 0.5};
  // T = {}: 0.5 * (1 - 0.5) = 0.25.
  CHECK(subgood_lhs(v, 0b1, p, d, 0b0) == doctest::Approx(0.25));
  // T = {item}: 0.5 + 0.5*(0-0) + 0.5*(0-0.5) = 0.25.
  CHECK(subgood_lhs(v, 0b1, p, d, 0b1) == doctest::Approx(0.25));
}

TEST_CASE("single item solve certifies guarantee 1/4") {
  const auto v = ValuationSpec::make_additive({1.0});
  const SubgoodSolution sol = solve_subgood(v, 0b1, 40);
  CHECK(sol.guarantee == doctest::Approx(0.25).epsilon(0.05));
  CHECK(sol.prices.size() == 1);
  CHECK(sol.prices[0] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(sol.delta.size() == 2);
  CHECK(sol.delta[1] == doctest::Approx(0.5).epsilon(0.05));
  CHECK(sol.alpha_achieved == doctest::Approx(4.0).epsilon(0.05));

  // The reported guarantee is recomputed from the certificate.
  CHECK(verify_subgood(sol, v, 0b1) >= -1e-12);
  CHECK(verify_subgood(sol, v, 0b1) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("solve matches an independent fine-grid oracle on one item") {
  testutil::Rand rnd(4242);
  for (int it = 0; it < 8; ++it) {
    const auto v = testutil::random_subadditive(rnd, 1);
    if (eval(v, 0b1) == 0.0) continue;
    const SubgoodSolution sol = solve_subgood(v, 0b1, 100);
    const double oracle = single_item_maxmin_oracle(v, 0b1);
    CAPTURE(it);
    // Grid solve can only undershoot the oracle slightly, never exceed the
    // true optimum the oracle approximates.
    CHECK(sol.guarantee <= oracle + 0.02 * eval(v, 0b1));
    CHECK(sol.guarantee >= oracle - 0.02 * eval(v, 0b1));
  }
}

TEST_CASE("inner LP beats any fixed delta grid on two items") {
  // For each solve, the certificate's delta must achieve at least the value
  // of the best delta from a coarse simplex grid at the same prices.
  testutil::Rand rnd(1717);
  for (int it = 0; it < 5; ++it) {
    const auto v = testutil::random_budget_table(rnd, 2);
    const ItemSet u = 0b11;
    const SubgoodSolution sol = solve_subgood(v, u, 24);
    double best_grid = -1e18;
    const int steps = 6;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; a + b <= steps; ++b)
        for (int c = 0; a + b + c <= steps; ++c) {
          const std::vector<double> d{double(a) / steps, double(b) / steps,
                                      double(c) / steps,
                                      double(steps - a - b - c) / steps};
          double worst = 1e18;
          for (ItemSet t = 0; t < 4; ++t)
            worst = std::min(worst, subgood_lhs(v, u, sol.prices, d, t));
          best_grid = std::max(best_grid, worst);
        }
    CAPTURE(it);
    CHECK(sol.guarantee >= best_grid - 1e-9);
  }
}

TEST_CASE("degenerate valuation yields zero guarantee") {
  const auto v = ValuationSpec::make_table({0.0, 0.0});
  const SubgoodSolution sol = solve_subgood(v, 0b1, 10);
  CHECK(sol.guarantee == 0.0);
  CHECK(sol.alpha_achieved == 0.0);
  CHECK(verify_subgood(sol, v, 0b1) >= -1e-12);
}

TEST_CASE("three item capacity limit and alpha bound") {
  const auto v = ValuationSpec::make_additive({1.0, 1.0, 1.0, 1.0});
  CHECK_THROWS_AS(solve_subgood(v, 0b1111, 10), LabError);
  try {
    solve_subgood(v, 0b1111, 10);
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::capacity);
  }
}

TEST_CASE("solve handles subsets of the ground set") {
  const auto v = ValuationSpec::make_additive({1.0, 9.0});
  const SubgoodSolution sol = solve_subgood(v, 0b01, 40);  // only item 0
  CHECK(sol.u == 0b01);
  CHECK(sol.guarantee == doctest::Approx(0.25).epsilon(0.05));
  CHECK(verify_subgood(sol, v, 0b01) >= -1e-12);
}

TEST_CASE("verify rejects malformed certificates") {
  const auto v = ValuationSpec::make_additive({1.0});
  SubgoodSolution sol = solve_subgood(v, 0b1, 10);
  sol.delta = {0.7, 0.7};  // mass 1.4
  CHECK_THROWS_AS(verify_subgood(sol, v, 0b1), LabError);
  sol.delta = {0.5};  // wrong length
  CHECK_THROWS_AS(verify_subgood(sol, v, 0b1), LabError);
}

TEST_CASE("verified slack is nonnegative across random solves") {
  testutil::Rand rnd(909);
  for (int it = 0; it < 10; ++it) {
    const int m = 1 + rnd.pick(2);
    const auto v = testutil::random_subadditive(rnd, m);
    const ItemSet u = full_set(m);
    const SubgoodSolution sol = solve_subgood(v, u, 20);
    CAPTURE(it);
    CHECK(verify_subgood(sol, v, u) >= -1e-9);
    if (eval(v, u) > 0 && sol.guarantee > 0)
      CHECK(sol.alpha_achieved == doctest::Approx(eval(v, u) / sol.guarantee));
  }
}

TEST_CASE("lp solver solves a reference program") {
  // max x + y s.t. x + 2y <= 3, 2x + y <= 3, x, y >= 0 -> (1, 1), value 2.
  std::vector<std::vector<double>> A{{1, 2}, {2, 1}};
  std::vector<double> b{3, 3}, c{1, 1}, x;
  LpSolver lp(A, b, c);
  CHECK(lp.solve(x) == doctest::Approx(2.0));
  CHECK(x[0] == doctest::Approx(1.0));
  CHECK(x[1] == doctest::Approx(1.0));

  // Infeasible: x <= -1.
  std::vector<std::vector<double>> A2{{1}};
  std::vector<double> b2{-1}, c2{1}, x2;
  const double inf_val = LpSolver(A2, b2, c2).solve(x2);
  CHECK(std::isinf(inf_val));
  CHECK(inf_val < 0);

  // Unbounded: max x with no constraints that bind.
  std::vector<std::vector<double>> A3{{-1}};
  std::vector<double> b3{0}, c3{1}, x3;
  const double unb_val = LpSolver(A3, b3, c3).solve(x3);
  CHECK(std::isinf(unb_val));
  CHECK(unb_val > 0);
}
