#include <cmath>
#include <vector>

#include "doctest.h"
#include "prophet/errors.hpp"
#include "prophet/mechanisms.hpp"
#include "test_util.hpp"

using namespace prophet;

namespace {

// Single item; bidder 0 worth 0 or 2 with probability 1/2, bidder 1 worth 1.
Instance coin_flip_instance() {
  Instance inst;
  inst.m = 1;
  BidderDistribution b0;
  b0.support.push_back({0.5, ValuationSpec::make_additive({0.0})});
  b0.support.push_back({0.5, ValuationSpec::make_additive({2.0})});
  BidderDistribution b1;
  b1.support.push_back({1.0, ValuationSpec::make_additive({1.0})});
  inst.bidders = {b0, b1};
  inst.validate();
  return inst;
}

Instance deterministic_xos_instance() {
  Instance inst;
  inst.m = 2;
  BidderDistribution b0;
  b0.support.push_back({1.0, ValuationSpec::make_xos({{1.0, 0.0}})});
  BidderDistribution b1;
  b1.support.push_back({1.0, ValuationSpec::make_xos({{0.0, 2.0}})});
  inst.bidders = {b0, b1};
  inst.validate();
  return inst;
}

}  // namespace

TEST_CASE("posted price walk hands out demand sets in order") {
  Profile p;
  p.m = 2;
  p.vals.push_back(ValuationSpec::make_additive({3.0, 1.0}));
  p.vals.push_back(ValuationSpec::make_additive({2.0, 2.0}));

  // Bidder 1 first: at prices (1, 1) it takes both items.
  MechanismTrace t = posted_price_walk(p, {0, 0}, {1.0, 1.0}, {1, 0});
  CHECK(t.bidders[1].items == 0b11);
  CHECK(t.bidders[0].items == 0b00);
  CHECK(t.bidders[1].payment == 2.0);
  CHECK(t.bidders[1].value == 4.0);
  CHECK(t.revenue == 2.0);
  CHECK(t.total_utility == 2.0);
  CHECK(t.welfare == t.revenue + t.total_utility);

  // Bidder 0 first: takes item 0 only (item 1 utility would be 0, ties to
  // fewer items), leaving item 1 for bidder 1.
  t = posted_price_walk(p, {0, 0}, {1.0, 1.0}, {0, 1});
  CHECK(t.bidders[0].items == 0b01);
  CHECK(t.bidders[1].items == 0b10);
  CHECK(t.welfare == 5.0);
  CHECK(t.revenue == 2.0);

  CHECK_THROWS_AS(posted_price_walk(p, {0, 0}, {1.0}, {0, 1}), LabError);
  CHECK_THROWS_AS(posted_price_walk(p, {0, 0}, {1.0, 1.0}, {0, 0}), LabError);
  CHECK_THROWS_AS(posted_price_walk(p, {0, 0}, {1.0, -0.5}, {0, 1}), LabError);
}

TEST_CASE("trace accounting identity is exact") {
  testutil::Rand rnd(5150);
  for (int it = 0; it < 30; ++it) {
    const Instance inst = testutil::random_instance(rnd, 3, 3, 2);
    std::vector<double> prices(inst.m);
    for (double& x : prices) x = rnd.uniform(0.0, 3.0);
    std::vector<int> order(inst.n());
    for (int i = 0; i < inst.n(); ++i) order[i] = i;
    PhiloxRng rng(1000 + it);
    const MechanismTrace t = run_posted_price(inst, prices, order, rng);
    double rev = 0, util = 0;
    for (const auto& b : t.bidders) {
      CHECK(b.utility == b.value - b.payment);
      rev += b.payment;
      util += b.utility;
    }
    CHECK(t.revenue == rev);
    CHECK(t.total_utility == util);
    CHECK(t.welfare == t.revenue + t.total_utility);  // identity, bit exact
  }
}

TEST_CASE("single item price is half the expected maximum") {
  const Instance inst = coin_flip_instance();
  const PriceVector p = single_item_price(inst);
  // E[max] = 0.5 * 1 + 0.5 * 2 = 1.5.
  CHECK(p == PriceVector{0.75});

  Instance two_items = deterministic_xos_instance();
  CHECK_THROWS_AS(single_item_price(two_items), LabError);
  try {
    single_item_price(two_items);
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::wrong_shape);
  }
}

TEST_CASE("single item walk achieves the prophet bound exactly") {
  const Instance inst = coin_flip_instance();
  const ExpectedOutcome out =
      expected_welfare_exact(inst, single_item_price(inst), {0, 1});
  // At p = 0.75: bidder 0 buys when worth 2 (prob 1/2, welfare 2); else
  // bidder 1 buys at value 1. E[welfare] = .5*2 + .5*1 = 1.5 = E[max].
  CHECK(out.welfare == 1.5);
  CHECK(out.revenue == 0.75);
  CHECK(out.utility == 0.75);
}

TEST_CASE("supporting clause prices are unhalved per profile") {
  const Instance inst = deterministic_xos_instance();
  const Profile prof = make_profile(inst, {0, 0});
  const PriceVector p = supporting_clause_prices(prof);
  CHECK(p == PriceVector{1.0, 2.0});

  Profile bad = prof;
  bad.vals[0] = ValuationSpec::make_additive({1.0, 0.0});
  CHECK_THROWS_AS(supporting_clause_prices(bad), LabError);
  try {
    supporting_clause_prices(bad);
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::wrong_class);
  }
}

TEST_CASE("balanced xos prices halve the expected supporting weights") {
  const Instance inst = deterministic_xos_instance();
  const PriceVector p = balanced_prices_xos(inst);
  CHECK(p == PriceVector{0.5, 1.0});

  // Deterministic instance: the walk recovers full efficiency.
  const ExpectedOutcome out = expected_welfare_exact(inst, p, {0, 1});
  CHECK(out.welfare == 3.0);
  CHECK(expected_opt_exact(inst) == 3.0);
}

TEST_CASE("xos walk is always at least half of expected optimum") {
  testutil::Rand rnd(31337);
  for (int it = 0; it < 20; ++it) {
    const Instance inst =
        testutil::random_instance(rnd, 2, 2, 2, &testutil::random_xos);
    const PriceVector p = balanced_prices_xos(inst);
    std::vector<int> order(inst.n());
    for (int i = 0; i < inst.n(); ++i) order[i] = i;
    const double opt = expected_opt_exact(inst);
    const double alg = expected_welfare_exact(inst, p, order).welfare;
    CAPTURE(it);
    CHECK(alg >= 0.5 * opt - 1e-9);
  }
}

TEST_CASE("check_balanced accepts supporting clause prices on xos") {
  const Instance inst = deterministic_xos_instance();
  const Profile prof = make_profile(inst, {0, 0});
  const PriceVector p = supporting_clause_prices(prof);
  const BalanceReport rep = check_balanced(prof, item_pricing_rule(p), 1, 1);
  CHECK(rep.ok);
  CHECK(rep.cond1_ok);
  CHECK(rep.cond2_ok);
  CHECK(rep.worst_slack >= 0.0);
}

TEST_CASE("check_balanced rejects prices that are too low or too high") {
  const Instance inst = deterministic_xos_instance();
  const Profile prof = make_profile(inst, {0, 0});

  // Zero prices violate condition 1: selling everything recovers nothing.
  BalanceReport rep = check_balanced(prof, item_pricing_rule({0.0, 0.0}), 1, 1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.failing_condition == 1);
  CHECK_FALSE(rep.cond1_ok);
  CHECK(rep.worst_slack < 0.0);

  // Huge prices violate condition 2: the leftover items are overpriced.
  rep = check_balanced(prof, item_pricing_rule({50.0, 50.0}), 1, 1);
  CHECK_FALSE(rep.ok);
  CHECK(rep.failing_condition == 2);
  CHECK_FALSE(rep.cond2_ok);

  // A large enough beta absorbs the overpricing.
  rep = check_balanced(prof, item_pricing_rule({50.0, 50.0}), 1, 100);
  CHECK(rep.cond2_ok);
}

TEST_CASE("balance witness reproduces the violation") {
  const Instance inst = deterministic_xos_instance();
  const Profile prof = make_profile(inst, {0, 0});
  const BalanceReport rep =
      check_balanced(prof, item_pricing_rule({0.0, 0.0}), 1, 1);
  REQUIRE_FALSE(rep.ok);
  // Condition 1 at the witness: p(x) < OPT(M) - OPT(M \ x).
  ItemSet sold = 0;
  for (ItemSet part : rep.witness_x.parts) sold |= part;
  const double lhs = 0.0;  // zero prices
  const double rhs = optimal_allocation(prof).value -
                     optimal_allocation(prof, full_set(prof.m) & ~sold).value;
  CHECK(lhs < rhs);
  CHECK(rep.worst_slack == doctest::Approx(lhs - rhs));
}

TEST_CASE("for_each_allocation visits all feasible splits") {
  int count = 0;
  ItemSet overlap = 0;
  for_each_allocation(2, 2, 0b11, [&](const std::vector<ItemSet>& parts) {
    ++count;
    overlap |= (parts[0] & parts[1]);
  });
  CHECK(count == 9);  // 3 choices per item
  CHECK(overlap == 0);

  count = 0;
  for_each_allocation(3, 2, 0b10, [&](const std::vector<ItemSet>&) { ++count; });
  CHECK(count == 4);  // nobody or one of three bidders
}

TEST_CASE("balanced prices require xos supports") {
  Instance inst = coin_flip_instance();
  CHECK_THROWS_AS(balanced_prices_xos(inst), LabError);
  try {
    balanced_prices_xos(inst);
  } catch (const LabError& e) {
    CHECK(e.kind() == ErrorKind::wrong_class);
  }
}
