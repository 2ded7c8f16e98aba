#include <algorithm>
#include <set>
#include <utility>
#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "cadetmatch/harness.hpp"
#include "cadetmatch/model.hpp"

using namespace cadetmatch;
using testutil::identity_order;
using testutil::ladder_of;
using testutil::one_price;
using testutil::order_of;
using testutil::rel;
using testutil::two_prices;

namespace {

// Independent statement of the two clauses a price responsiveness policy must
// satisfy, evaluated directly on an explicit order. Used as the oracle for
// is_valid_policy and for the brute-force policy counts.
bool clauses_hold(const std::vector<std::pair<Cadet, Price>>& order,
                  const PriorityOrder& pi, int num_prices) {
  auto pos = [&](Cadet i, Price t) {
    for (std::size_t k = 0; k < order.size(); ++k) {
      if (order[k] == std::make_pair(i, t)) return static_cast<int>(k);
    }
    return -1;
  };
  const int n = pi.num_cadets();
  for (Price t = 0; t < num_prices; ++t) {
    for (Cadet i = 0; i < n; ++i) {
      for (Cadet j = 0; j < n; ++j) {
        if (i != j && pi.outranks(i, j) && pos(i, t) > pos(j, t)) return false;
      }
    }
  }
  for (Cadet i = 0; i < n; ++i) {
    for (Price t = 0; t + 1 < num_prices; ++t) {
      if (pos(i, t + 1) > pos(i, t)) return false;
    }
  }
  return true;
}

// Every strict total order on the (cadet, price) grid that satisfies the two
// clauses, for a small universe.
std::vector<std::vector<std::pair<Cadet, Price>>> brute_force_valid_orders(
    int n, int num_prices, const PriorityOrder& pi) {
  std::vector<std::pair<Cadet, Price>> pairs;
  for (Cadet i = 0; i < n; ++i) {
    for (Price t = 0; t < num_prices; ++t) pairs.push_back({i, t});
  }
  std::sort(pairs.begin(), pairs.end());
  std::vector<std::vector<std::pair<Cadet, Price>>> valid;
  do {
    if (clauses_hold(pairs, pi, num_prices)) valid.push_back(pairs);
  } while (std::next_permutation(pairs.begin(), pairs.end()));
  return valid;
}

// Independent count of price-monotone strict rankings: try every ordering of
// every subset of the pair grid and keep those where each branch's listed
// prices form a cheapest-first prefix of the ladder.
int brute_force_preference_count(int nb, int np) {
  std::vector<std::pair<Branch, Price>> pairs;
  for (Branch b = 0; b < nb; ++b) {
    for (Price t = 0; t < np; ++t) pairs.push_back({b, t});
  }
  const int m = static_cast<int>(pairs.size());
  int total = 0;
  for (int mask = 0; mask < (1 << m); ++mask) {
    std::vector<int> idx;
    for (int k = 0; k < m; ++k) {
      if (mask & (1 << k)) idx.push_back(k);
    }
    std::sort(idx.begin(), idx.end());
    do {
      bool ok = true;
      for (Branch b = 0; b < nb && ok; ++b) {
        std::vector<Price> listed;
        for (int k : idx) {
          if (pairs[k].first == b) listed.push_back(pairs[k].second);
        }
        for (std::size_t k = 0; k < listed.size() && ok; ++k) {
          if (listed[k] != static_cast<Price>(k)) ok = false;
        }
      }
      if (ok) ++total;
    } while (std::next_permutation(idx.begin(), idx.end()));
  }
  return total;
}

}  // namespace

TEST_CASE("priority orders index both ways") {
  PriorityOrder pi = order_of({2, 0, 1});
  CHECK(pi.rank[2] == 0);
  CHECK(pi.rank[0] == 1);
  CHECK(pi.rank[1] == 2);
  CHECK(pi.outranks(2, 1));
  CHECK_FALSE(pi.outranks(1, 0));
  CHECK_THROWS_AS(order_of({0, 0, 1}), std::invalid_argument);
  CHECK_THROWS_AS(order_of({0, 2}), std::invalid_argument);
}

TEST_CASE("ladder validation") {
  CHECK_THROWS_AS(validate_ladder(ladder_of({})), std::invalid_argument);
  CHECK_THROWS_AS(validate_ladder(ladder_of({0.0, 0.0})), std::invalid_argument);
  CHECK_THROWS_AS(validate_ladder(ladder_of({3.0, 1.0})), std::invalid_argument);
  CHECK_THROWS_AS(validate_ladder(ladder_of({-1.0, 2.0})), std::invalid_argument);
  CHECK_NOTHROW(validate_ladder(ladder_of({0.0, 3.0, 5.5})));
}

TEST_CASE("ultimate policy: any higher price beats any lower price") {
  // the worked economy's priority, i6 best through j2 worst
  PriorityOrder pi = order_of({5, 4, 3, 2, 1, 0, 6, 7});
  auto omega = build_ultimate_policy(pi, two_prices());
  // the worst-priority cadet paying more still beats the best at base price
  CHECK(omega.outranks(7, 1, 5, 0));
  CHECK(omega.outranks(5, 1, 4, 1));  // same price: baseline order
  CHECK(is_valid_policy(omega, pi));

  SUBCASE("single cadet: prices descend") {
    auto solo = build_ultimate_policy(order_of({0}), ladder_of({0, 1, 2}));
    REQUIRE(solo.order.size() == 3);
    CHECK(solo.order[0] == std::make_pair(0, 2));
    CHECK(solo.order[1] == std::make_pair(0, 1));
    CHECK(solo.order[2] == std::make_pair(0, 0));
  }

  SUBCASE("equals a direct sort by price then baseline") {
    PriorityOrder pi3 = order_of({1, 2, 0});
    auto got = build_ultimate_policy(pi3, two_prices());
    std::vector<std::pair<Cadet, Price>> expect;
    for (Cadet i = 0; i < 3; ++i) {
      for (Price t = 0; t < 2; ++t) expect.push_back({i, t});
    }
    std::sort(expect.begin(), expect.end(),
              [&](const auto& a, const auto& b) {
                if (a.second != b.second) return a.second > b.second;
                return pi3.rank[a.first] < pi3.rank[b.first];
              });
    CHECK(got.order == expect);
  }
}

TEST_CASE("tiered policies: jumps mediated by tier scope") {
  PriorityOrder pi = identity_order(4);
  TierSpec tiers;
  tiers.tiers = {{0, 1}, {2, 3}};

  SUBCASE("within-tier scopes keep the tier wall") {
    tiers.scopes = {JumpScope::WithinTier, JumpScope::WithinTier};
    auto omega = build_tiered_policy(pi, tiers, two_prices());
    CHECK(is_valid_policy(omega, pi));
    // a low-tier cadet paying more does not pass a high-tier cadet
    CHECK_FALSE(omega.outranks(2, 1, 1, 0));
    // but does pass inside the own tier
    CHECK(omega.outranks(3, 1, 2, 0));
    CHECK(omega.outranks(1, 1, 0, 0));
  }

  SUBCASE("over-all scope crosses the tier wall") {
    tiers.scopes = {JumpScope::OverAll, JumpScope::OverAll};
    auto omega = build_tiered_policy(pi, tiers, two_prices());
    CHECK(omega.outranks(2, 1, 1, 0));
    CHECK(omega.outranks(3, 1, 0, 0));
  }

  SUBCASE("one tier with over-all scope is the ultimate policy") {
    TierSpec single;
    single.tiers = {{0, 1, 2, 3}};
    single.scopes = {JumpScope::OverAll};
    auto omega = build_tiered_policy(pi, single, two_prices());
    CHECK(omega.order == build_ultimate_policy(pi, two_prices()).order);
  }

  SUBCASE("partition inconsistent with the baseline is rejected") {
    TierSpec bad;
    bad.tiers = {{0, 2}, {1, 3}};  // 1 outranks 2 but sits in a lower tier
    bad.scopes = {JumpScope::WithinTier, JumpScope::WithinTier};
    CHECK_THROWS_AS(build_tiered_policy(pi, bad, two_prices()),
                    std::invalid_argument);
    TierSpec missing;
    missing.tiers = {{0, 1}};  // does not cover everyone
    missing.scopes = {JumpScope::WithinTier};
    CHECK_THROWS_AS(build_tiered_policy(pi, missing, two_prices()),
                    std::invalid_argument);
  }

  SUBCASE("scope layouts that force a cycle are rejected") {
    // singleton tiers [within, within, over-all]: the bottom cadet must rank
    // above the top cadet's base price, which the middle wall contradicts
    TierSpec cyc;
    cyc.tiers = {{0}, {1}, {2}};
    cyc.scopes = {JumpScope::WithinTier, JumpScope::WithinTier,
                  JumpScope::OverAll};
    CHECK_THROWS_AS(build_tiered_policy(identity_order(3), cyc, two_prices()),
                    std::invalid_argument);
  }
}

TEST_CASE("scoring policies order by merit plus boost") {
  SUBCASE("a boosted lower merit passes a higher merit") {
    ScoringSpec spec;
    spec.merit = {95.0, 88.0};
    spec.boost = {0.0, 10.0};
    spec.tiebreak = identity_order(2);
    auto omega = build_scoring_policy(spec, two_prices());
    CHECK(omega.outranks(1, 1, 0, 0));  // 98 beats 95
    CHECK(omega.outranks(0, 0, 1, 0));  // 95 beats 88
    CHECK(is_valid_policy(omega, scoring_baseline(spec)));
  }

  SUBCASE("negligible boost reduces to merit order per price level") {
    ScoringSpec spec;
    spec.merit = {10.0, 5.0};
    spec.boost = {0.0, 0.001};
    spec.tiebreak = identity_order(2);
    auto omega = build_scoring_policy(spec, two_prices());
    CHECK(omega.outranks(0, 0, 1, 1));
    REQUIRE(omega.order.size() == 4);
    CHECK(omega.order[0] == std::make_pair(0, 1));
    CHECK(omega.order[1] == std::make_pair(0, 0));
    CHECK(omega.order[2] == std::make_pair(1, 1));
    CHECK(omega.order[3] == std::make_pair(1, 0));
  }

  SUBCASE("equals a direct sort on totals with tiebreak, ties included") {
    ScoringSpec spec;
    spec.merit = {5.0, 5.0, 3.0};
    spec.boost = {0.0, 1.0, 2.0, 4.0};
    spec.tiebreak = order_of({1, 0, 2});
    PriceLadder ladder = ladder_of({0, 1, 2, 3});
    auto omega = build_scoring_policy(spec, ladder);
    std::vector<std::pair<Cadet, Price>> expect;
    for (Cadet i = 0; i < 3; ++i) {
      for (Price t = 0; t < 4; ++t) expect.push_back({i, t});
    }
    std::stable_sort(expect.begin(), expect.end(),
                     [&](const auto& a, const auto& b) {
                       const double ta = spec.merit[a.first] + spec.boost[a.second];
                       const double tb = spec.merit[b.first] + spec.boost[b.second];
                       if (ta != tb) return ta > tb;
                       return spec.tiebreak.rank[a.first] <
                              spec.tiebreak.rank[b.first];
                     });
    CHECK(omega.order == expect);
    CHECK(is_valid_policy(omega, scoring_baseline(spec)));
    CHECK(scoring_baseline(spec).ranking == std::vector<Cadet>{1, 0, 2});
  }

  SUBCASE("malformed boosts rejected") {
    ScoringSpec spec;
    spec.merit = {1.0, 2.0};
    spec.tiebreak = identity_order(2);
    spec.boost = {1.0, 2.0};  // base boost must be zero
    CHECK_THROWS_AS(build_scoring_policy(spec, two_prices()),
                    std::invalid_argument);
    spec.boost = {0.0, 0.0};  // must strictly increase
    CHECK_THROWS_AS(build_scoring_policy(spec, two_prices()),
                    std::invalid_argument);
  }
}

TEST_CASE("policy validity agrees with the defining clauses on every order") {
  for (int n = 2; n <= 3; ++n) {
    PriorityOrder pi = identity_order(n);
    std::vector<std::pair<Cadet, Price>> pairs;
    for (Cadet i = 0; i < n; ++i) {
      for (Price t = 0; t < 2; ++t) pairs.push_back({i, t});
    }
    std::sort(pairs.begin(), pairs.end());
    int valid_count = 0;
    do {
      const bool expect = clauses_hold(pairs, pi, 2);
      auto omega = PriceResponsivenessPolicy::from_order(n, 2, pairs);
      CHECK(is_valid_policy(omega, pi) == expect);
      if (expect) ++valid_count;
    } while (std::next_permutation(pairs.begin(), pairs.end()));
    // hand-derived counts: the valid orders are the interleavings of the
    // increased-price row with the base row keeping both in baseline order
    // and each cadet's own higher price first (2 for n=2, 5 for n=3)
    CHECK(valid_count == (n == 2 ? 2 : 5));
  }
}

TEST_CASE("invalid orders are rejected by the validity check") {
  PriorityOrder pi = identity_order(2);
  // own base price above own increased price
  auto bad1 = PriceResponsivenessPolicy::from_order(
      2, 2, {{0, 0}, {0, 1}, {1, 1}, {1, 0}});
  CHECK_FALSE(is_valid_policy(bad1, pi));
  // same price level out of baseline order
  auto bad2 = PriceResponsivenessPolicy::from_order(
      2, 2, {{1, 1}, {0, 1}, {1, 0}, {0, 0}});
  CHECK_FALSE(is_valid_policy(bad2, pi));
}

TEST_CASE("responsiveness comparisons across the named policies") {
  PriorityOrder pi = identity_order(6);
  PriceLadder ladder = two_prices();
  auto ultimate = build_ultimate_policy(pi, ladder);

  TierSpec thirds;
  thirds.tiers = {{0, 1}, {2, 3}, {4, 5}};
  TierSpec walls = thirds;
  walls.scopes = {JumpScope::WithinTier, JumpScope::WithinTier,
                  JumpScope::WithinTier};
  TierSpec open_top = thirds;
  open_top.scopes = {JumpScope::OverAll, JumpScope::OverAll,
                     JumpScope::WithinTier};
  auto walled = build_tiered_policy(pi, walls, ladder);
  auto opened = build_tiered_policy(pi, open_top, ladder);

  CHECK(more_responsive(ultimate, opened));
  CHECK(more_responsive(opened, walled));
  CHECK(more_responsive(ultimate, walled));
  CHECK_FALSE(more_responsive(walled, opened));
  CHECK_FALSE(more_responsive(opened, ultimate));
  CHECK(more_responsive(ultimate, ultimate));
}

TEST_CASE("responsiveness is a partial order on all valid policies") {
  for (int n = 2; n <= 4; ++n) {
    PriorityOrder pi = identity_order(n);
    auto orders = brute_force_valid_orders(n, 2, pi);
    // hand-derived counts of valid interleavings: 2, 5, 14
    CHECK(orders.size() == (n == 2 ? 2u : n == 3 ? 5u : 14u));
    std::vector<PriceResponsivenessPolicy> all;
    for (auto& o : orders) {
      all.push_back(PriceResponsivenessPolicy::from_order(n, 2, o));
    }
    for (const auto& a : all) CHECK(more_responsive(a, a));
    for (const auto& a : all) {
      for (const auto& b : all) {
        if (more_responsive(a, b) && more_responsive(b, a)) {
          CHECK(a.order == b.order);
        }
        for (const auto& c : all) {
          if (more_responsive(a, b) && more_responsive(b, c)) {
            CHECK(more_responsive(a, c));
          }
        }
      }
    }
  }
}

TEST_CASE("tiered grid yields exactly the tier-expressible valid policies") {
  PriorityOrder pi = identity_order(3);
  auto grid = policy_grid(pi, two_prices(), 3);
  auto valid = brute_force_valid_orders(3, 2, pi);
  // one valid order (second-ranked jumps the top while the third jumps only
  // the second) is not expressible with tiers, so the grid has 4 of the 5
  CHECK(grid.size() == 4);
  std::set<std::vector<std::pair<Cadet, Price>>> valid_set(valid.begin(),
                                                           valid.end());
  for (const auto& p : grid) {
    CHECK(is_valid_policy(p, pi));
    CHECK(valid_set.count(p.order) == 1);
  }
  // the ultimate policy is in the grid
  auto ult = build_ultimate_policy(pi, two_prices());
  bool found = false;
  for (const auto& p : grid) found = found || p.order == ult.order;
  CHECK(found);
}

TEST_CASE("preference relations rank and validate") {
  PreferenceRelation p = rel({{0, 0}, {1, 0}, {0, 1}});
  CHECK(p.unmatched_rank() == 3);
  CHECK(p.rank_of(std::make_pair(1, 0)) == 1);
  CHECK(p.rank_of(std::nullopt) == 3);
  CHECK(p.rank_of(std::make_pair(1, 1)) == 4);  // unacceptable: below unmatched
  CHECK(p.is_acceptable(0, 1));
  CHECK_FALSE(p.is_acceptable(1, 1));
  CHECK(p.prefers(std::make_pair(0, 0), std::nullopt));
  CHECK(p.prefers(std::nullopt, std::make_pair(1, 1)));
  CHECK_NOTHROW(validate_preference(p, 2, 2));

  // duplicate pair
  CHECK_THROWS_AS(validate_preference(rel({{0, 0}, {0, 0}}), 1, 2),
                  std::invalid_argument);
  // a dear price acceptable while the cheaper one is not
  CHECK_THROWS_AS(validate_preference(rel({{0, 1}}), 1, 2),
                  std::invalid_argument);
  // dearer listed above cheaper for the same branch
  CHECK_THROWS_AS(validate_preference(rel({{0, 1}, {0, 0}}), 1, 2),
                  std::invalid_argument);
  // out of range
  CHECK_THROWS_AS(validate_preference(rel({{2, 0}}), 2, 2),
                  std::invalid_argument);
  CHECK_THROWS_AS(validate_preference(rel({{0, -1}}), 1, 2),
                  std::invalid_argument);
}

TEST_CASE("preference domain enumeration matches independent counting") {
  SUBCASE("one branch, two prices: the three monotone relations") {
    auto domain = enumerate_preferences(1, 2);
    REQUIRE(domain.size() == 3);
    std::set<std::vector<std::pair<Branch, Price>>> got;
    for (const auto& r : domain) got.insert(r.acceptable);
    CHECK(got.count({{0, 0}, {0, 1}}) == 1);
    CHECK(got.count({{0, 0}}) == 1);
    CHECK(got.count({}) == 1);
  }

  SUBCASE("counts agree with the subset-permutation oracle") {
    for (int nb = 0; nb <= 2; ++nb) {
      for (int np = 1; np <= 2; ++np) {
        const int expect = brute_force_preference_count(nb, np);
        CHECK(count_preferences(nb, np) == static_cast<std::uint64_t>(expect));
        auto domain = enumerate_preferences(nb, np);
        CHECK(domain.size() == static_cast<std::size_t>(expect));
        std::set<std::vector<std::pair<Branch, Price>>> dedup;
        for (const auto& r : domain) {
          CHECK_NOTHROW(validate_preference(r, nb, np));
          dedup.insert(r.acceptable);
        }
        CHECK(dedup.size() == domain.size());
      }
    }
    CHECK(count_preferences(1, 2) == 3);
    CHECK(count_preferences(2, 1) == 5);
    CHECK(count_preferences(2, 2) == 19);
  }

  SUBCASE("guard refuses oversized domains") {
    CHECK_THROWS_AS(count_preferences(2, 2, 10), std::runtime_error);
    CHECK_THROWS_AS(enumerate_preferences(2, 2, 10), std::runtime_error);
  }
}

TEST_CASE("completion below unmatched keeps the listed prefix") {
  PreferenceRelation p = rel({{1, 0}, {0, 0}});
  auto full = complete_below_unmatched(p, 2, 2);
  REQUIRE(full.acceptable.size() == 4);
  CHECK(full.acceptable[0] == std::make_pair(1, 0));
  CHECK(full.acceptable[1] == std::make_pair(0, 0));
  // the unlisted pairs follow by branch then price
  CHECK(full.acceptable[2] == std::make_pair(0, 1));
  CHECK(full.acceptable[3] == std::make_pair(1, 1));
  CHECK_NOTHROW(validate_preference(full, 2, 2));

  auto empty = complete_below_unmatched(rel({}), 1, 2);
  CHECK(empty.acceptable ==
        std::vector<std::pair<Branch, Price>>{{0, 0}, {0, 1}});
}

TEST_CASE("instance validation names the broken bound") {
  Instance inst = testutil::one_branch(2, 1, 2, {0, 1});
  inst.branches[0].q_total = 1;
  inst.branches[0].q_flex = 2;
  try {
    validate_instance(inst);
    CHECK(false);
  } catch (const std::invalid_argument& e) {
    CHECK(std::string(e.what()).find("q_flex") != std::string::npos);
  }

  SUBCASE("policy must fit the branch priority") {
    Instance bad = testutil::one_branch(2, 2, 1, {0, 1});
    bad.policies[0] =
        build_ultimate_policy(order_of({1, 0}), bad.ladder);
    CHECK_THROWS_AS(validate_instance(bad), std::invalid_argument);
  }
}

TEST_CASE("allocation bookkeeping and feasibility") {
  Instance inst = testutil::one_branch(3, 2, 1, {0, 1, 2});
  Allocation a(3);
  a.by_cadet[0] = {{0, 1}};
  a.by_cadet[1] = {{0, 0}};
  CHECK(a.count_at_branch(0) == 2);
  CHECK(a.count_increased_at_branch(0) == 1);
  CHECK(a.count_unmatched() == 1);
  auto contracts = a.contracts();
  REQUIRE(contracts.size() == 2);
  CHECK(allocation_feasible(a, inst));
  CHECK_NOTHROW(validate_allocation(a, inst));

  Allocation over(3);
  over.by_cadet[0] = {{0, 0}};
  over.by_cadet[1] = {{0, 0}};
  over.by_cadet[2] = {{0, 0}};
  CHECK_FALSE(allocation_feasible(over, inst));
  CHECK_THROWS_AS(validate_allocation(over, inst), std::invalid_argument);

  Allocation charged(3);
  charged.by_cadet[0] = {{0, 1}};
  charged.by_cadet[1] = {{0, 1}};  // two increased against q_flex = 1
  CHECK_FALSE(allocation_feasible(charged, inst));
  CHECK_THROWS_AS(validate_allocation(charged, inst), std::invalid_argument);
}
