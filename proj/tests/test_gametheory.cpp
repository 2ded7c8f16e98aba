#include <vector>

#include "doctest.h"
#include "helpers.hpp"

#include "cadetmatch/gametheory.hpp"

using namespace cadetmatch;
using testutil::one_branch;
using testutil::rel;

namespace {

BayesianGame two_type_game(int n) {
  // type 0 would rather stay out than pay more; type 1 the reverse
  BayesianGame g;
  g.num_cadets = n;
  g.type_utils = {{Rational(8), Rational(10), Rational(0)},
                  {Rational(0), Rational(10), Rational(8)}};
  g.type_probs = {Rational(1, 2), Rational(1, 2)};
  return g;
}

}  // namespace

TEST_CASE("message codes cover stay-out, apply, and declare") {
  auto out = single_branch_message(0, 1);
  CHECK(out.ranking.empty());
  CHECK(out.willing == std::vector<char>{0});
  auto apply = single_branch_message(1, 1);
  CHECK(apply.ranking == std::vector<Branch>{0});
  CHECK_FALSE(apply.is_willing(0));
  auto keen = single_branch_message(2, 1);
  CHECK(keen.ranking == std::vector<Branch>{0});
  CHECK(keen.is_willing(0));
  CHECK_THROWS_AS(single_branch_message(3, 1), std::invalid_argument);
}

TEST_CASE("declaration game on the worked economy") {
  Instance inst = testutil::worked_economy();

  SUBCASE("with two genuine payers, they declare in every equilibrium") {
    auto prefs = testutil::worked_preferences(false);
    auto r = enumerate_pure_ne(inst, prefs, ActionSpace::Willingness);
    // Besides the intended play (only i1 and j1 declare), the scan finds a
    // second equilibrium where everyone but i2 declares. It is held together
    // by j2: she is unmatched either way, so declaring costs her nothing,
    // yet her declaration would fill the last seat if i3 stopped declaring,
    // which leaves i3 stuck paying the increased price.
    REQUIRE(r.equilibria.size() == 2);
    std::vector<int> expect{2, 1, 1, 1, 1, 1, 2, 1};
    std::vector<int> hostage{2, 1, 2, 2, 2, 2, 2, 2};
    CHECK(r.equilibria[0] == expect);
    CHECK(r.equilibria[1] == hostage);
    REQUIRE(r.equilibrium_outcomes.size() == 2);
    CHECK(r.equilibrium_outcomes[0] == testutil::worked_outcome());
    Allocation charged_i3(8);
    charged_i3.by_cadet[0] = {{0, 1}};
    charged_i3.by_cadet[2] = {{0, 1}};
    charged_i3.by_cadet[3] = {{0, 0}};
    charged_i3.by_cadet[4] = {{0, 0}};
    charged_i3.by_cadet[5] = {{0, 0}};
    charged_i3.by_cadet[6] = {{0, 1}};
    CHECK(r.equilibrium_outcomes[1] == charged_i3);
    REQUIRE(r.distinct_outcomes.size() == 2);
    CHECK(r.distinct_outcomes[0] == testutil::worked_outcome());
  }

  SUBCASE("a third genuine payer pulls almost everyone into declaring") {
    auto prefs = testutil::worked_preferences(true);  // j2 will pay too
    auto r = enumerate_pure_ne(inst, prefs, ActionSpace::Willingness);
    REQUIRE(r.equilibria.size() == 1);
    std::vector<int> expect{2, 1, 2, 2, 2, 2, 2, 2};
    CHECK(r.equilibria[0] == expect);
    Allocation outcome(8);
    outcome.by_cadet[0] = {{0, 1}};
    outcome.by_cadet[2] = {{0, 1}};
    outcome.by_cadet[3] = {{0, 0}};
    outcome.by_cadet[4] = {{0, 0}};
    outcome.by_cadet[5] = {{0, 0}};
    outcome.by_cadet[6] = {{0, 1}};
    CHECK(r.equilibrium_outcomes[0] == outcome);
  }

  SUBCASE("the profile guard refuses oversized scans") {
    auto prefs = testutil::worked_preferences(false);
    CHECK_THROWS_AS(enumerate_pure_ne(inst, prefs, ActionSpace::Willingness, 4),
                    std::invalid_argument);
  }
}

TEST_CASE("equilibrium outcomes coincide with the direct mechanism") {
  SUBCASE("worked economy") {
    Instance inst = testutil::worked_economy();
    // False for the two-payer preferences: the scan turns up a second
    // equilibrium outcome (see the declaration-game test), so the outcome
    // set is not a singleton there.
    CHECK_FALSE(
        ne_outcome_equals_phi_mp(inst, testutil::worked_preferences(false)));
    CHECK(ne_outcome_equals_phi_mp(inst, testutil::worked_preferences(true)));
  }

  SUBCASE("single cadet") {
    Instance inst = one_branch(1, 1, 1, {0});
    std::vector<PreferenceRelation> prefs{rel({{0, 0}, {0, 1}})};
    CHECK(ne_outcome_equals_phi_mp(inst, prefs));
  }

  SUBCASE("two rivals for one flexible seat") {
    Instance inst = one_branch(2, 1, 1, {0, 1});
    std::vector<PreferenceRelation> prefs{rel({{0, 0}, {0, 1}}),
                                          rel({{0, 0}, {0, 1}})};
    CHECK(ne_outcome_equals_phi_mp(inst, prefs));
    // sanity: the direct outcome charges the winner here
    Allocation direct = phi_mp(inst, prefs);
    CHECK(direct.by_cadet[0] == std::make_pair(0, 1));
    CHECK_FALSE(direct.by_cadet[1].has_value());
  }

  SUBCASE("a cadet who finds the branch unacceptable stays out") {
    Instance inst = one_branch(2, 1, 1, {0, 1});
    std::vector<PreferenceRelation> prefs{rel({}), rel({{0, 0}})};
    CHECK(ne_outcome_equals_phi_mp(inst, prefs));
  }
}

TEST_CASE("incomplete information: three cadets, two seats, one flexible") {
  Instance inst = one_branch(3, 2, 1, {0, 1, 2});
  BayesianGame game = two_type_game(3);
  auto result = bayesian_equilibria(game, inst);
  CHECK(result.profiles_scanned == 64);
  REQUIRE(result.equilibria.size() == 1);
  const auto& eq = result.equilibria[0];

  // the unique equilibrium is truthful: declare exactly when paying is fine
  for (int i = 0; i < 3; ++i) {
    CHECK(eq.declare[i] == std::vector<int>{0, 1});
  }

  // interim expected utilities, exact
  REQUIRE(eq.interim_utils.size() == 3);
  CHECK(eq.interim_utils[0][0] == Rational(19, 2));
  CHECK(eq.interim_utils[0][1] == Rational(19, 2));
  CHECK(eq.interim_utils[1][0] == Rational(9));
  CHECK(eq.interim_utils[1][1] == Rational(17, 2));
  CHECK(eq.interim_utils[2][0] == Rational(8));
  CHECK(eq.interim_utils[2][1] == Rational(6));

  // a detectable reversal is realized in exactly two of eight type draws
  CHECK(eq.reversal_probability == Rational(1, 4));
}

TEST_CASE("a degenerate prior pins only the realized type's play") {
  Instance inst = one_branch(3, 2, 1, {0, 1, 2});
  BayesianGame game = two_type_game(3);
  game.type_probs = {Rational(1), Rational(0)};
  auto result = bayesian_equilibria(game, inst);
  // the zero-probability type's bit is unconstrained: eight profiles qualify
  CHECK(result.equilibria.size() == 8);
  for (const auto& eq : result.equilibria) {
    for (int i = 0; i < 3; ++i) CHECK(eq.declare[i][0] == 0);
    CHECK(eq.reversal_probability == Rational(0));
    for (int i = 0; i < 3; ++i) CHECK(eq.interim_utils[i][1] == Rational(0));
  }
  // cross-check the pinned play against the complete-information scan
  std::vector<PreferenceRelation> realized{
      rel({{0, 0}}), rel({{0, 0}}), rel({{0, 0}})};
  auto ne = enumerate_pure_ne(inst, realized, ActionSpace::Willingness);
  REQUIRE(ne.equilibria.size() == 1);
  CHECK(ne.equilibria[0] == std::vector<int>{1, 1, 1});
  Allocation outcome(3);
  outcome.by_cadet[0] = {{0, 0}};
  outcome.by_cadet[1] = {{0, 0}};
  CHECK(ne.equilibrium_outcomes[0] == outcome);
}

TEST_CASE("game validation") {
  Instance inst = one_branch(2, 1, 1, {0, 1});
  BayesianGame game = two_type_game(2);

  SUBCASE("probabilities must sum to one") {
    game.type_probs = {Rational(1, 2), Rational(1, 3)};
    CHECK_THROWS_AS(bayesian_equilibria(game, inst), std::invalid_argument);
  }

  SUBCASE("probabilities must be nonnegative") {
    game.type_probs = {Rational(3, 2), Rational(-1, 2)};
    CHECK_THROWS_AS(bayesian_equilibria(game, inst), std::invalid_argument);
  }

  SUBCASE("at least one type, aligned with its probabilities") {
    game.type_utils.clear();
    game.type_probs.clear();
    CHECK_THROWS_AS(bayesian_equilibria(game, inst), std::invalid_argument);
    game = two_type_game(2);
    game.type_probs.pop_back();
    CHECK_THROWS_AS(bayesian_equilibria(game, inst), std::invalid_argument);
  }

  SUBCASE("the strategy-space guard") {
    CHECK_THROWS_AS(bayesian_equilibria(two_type_game(2), inst, 4),
                    std::invalid_argument);
  }

  SUBCASE("one branch and two prices required") {
    Instance three = one_branch(2, 1, 1, {0, 1}, 3);
    CHECK_THROWS_AS(bayesian_equilibria(two_type_game(2), three),
                    std::invalid_argument);
  }
}
