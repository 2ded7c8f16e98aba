#pragma once

#include <array>
#include <boost/rational.hpp>
#include <cstdint>
#include <string>
#include <vector>

#include "cadetmatch/mechanisms.hpp"
#include "cadetmatch/model.hpp"

namespace cadetmatch {

using Rational = boost::rational<long long>;

// Message sets for the one-branch, two-price application game.
//
// Willingness: every cadet applies to the branch; the move is whether to
// declare willingness to pay the increased price. 2^n profiles; this is the
// game of the worked-example tables, where strategy "b" means declare and
// strategy "empty" means do not.
//
// Full: staying out of the match entirely is a third move, for preference
// domains where the branch itself can be unacceptable. 3^n profiles.
enum class ActionSpace { Willingness, Full };

// Action codes: 0 = stay out, 1 = apply without declaring, 2 = apply and
// declare willingness. The Willingness space uses codes {1, 2} only.
QuasiStrategy single_branch_message(int action_code, int num_branches);

struct PureNeResult {
  std::vector<std::vector<int>> equilibria;     // action codes per cadet
  std::vector<Allocation> equilibrium_outcomes; // aligned with equilibria
  std::vector<Allocation> distinct_outcomes;
};

// Exhaustive pure-equilibrium scan of the one-branch game induced by the
// 2020 application system, with payoffs read ordinally from the true
// preferences. Requires one branch and two prices.
PureNeResult enumerate_pure_ne(const Instance& instance,
                               const std::vector<PreferenceRelation>& prefs,
                               ActionSpace space = ActionSpace::Willingness,
                               std::uint64_t guard = 1u << 16);

// True when the distinct equilibrium-outcome set is exactly the one-branch
// direct mechanism's output on the same preferences.
bool ne_outcome_equals_phi_mp(const Instance& instance,
                              const std::vector<PreferenceRelation>& prefs,
                              ActionSpace space = ActionSpace::Full,
                              std::uint64_t guard = 1u << 16);

// Incomplete-information version: every cadet draws one of finitely many
// utility types (utilities over unmatched / base price / increased price at
// the single branch), independently with the same prior. Everyone applies;
// a strategy picks a willingness declaration per type.
struct BayesianGame {
  int num_cadets = 0;
  std::vector<std::array<Rational, 3>> type_utils;  // [unmatched, base, increased]
  std::vector<Rational> type_probs;
};

struct BayesianEquilibrium {
  std::vector<std::vector<int>> declare;  // [cadet][type] -> 1 declare, 0 not
  std::vector<std::vector<Rational>> interim_utils;  // [cadet][type]
  Rational reversal_probability;  // chance a detectable reversal is realized
};

struct BayesianResult {
  std::vector<BayesianEquilibrium> equilibria;
  std::uint64_t profiles_scanned = 0;
};

// Enumerates every type-contingent pure strategy profile, keeps those where
// each cadet's declaration maximizes her interim expected utility for every
// type, and computes exact reversal probabilities at each equilibrium.
// Requires one branch and two prices.
BayesianResult bayesian_equilibria(const BayesianGame& game,
                                   const Instance& instance,
                                   std::uint64_t guard = 1u << 20);

}  // namespace cadetmatch
