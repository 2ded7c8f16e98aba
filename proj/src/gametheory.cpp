#include "cadetmatch/gametheory.hpp"

#include <algorithm>
#include <stdexcept>

#include "cadetmatch/axioms.hpp"

namespace cadetmatch {

QuasiStrategy single_branch_message(int action_code, int num_branches) {
  if (num_branches < 1) {
    throw std::invalid_argument("single_branch_message: need a branch");
  }
  QuasiStrategy s;
  s.willing.assign(num_branches, 0);
  switch (action_code) {
    case 0:
      break;  // stay out: apply nowhere
    case 1:
      s.ranking = {0};
      break;
    case 2:
      s.ranking = {0};
      s.willing[0] = 1;
      break;
    default:
      throw std::invalid_argument("single_branch_message: unknown action code");
  }
  return s;
}

namespace {

void require_one_branch_two_prices(const Instance& instance, const char* what) {
  if (instance.num_branches() != 1 || instance.num_prices() != 2) {
    throw std::invalid_argument(std::string(what) +
                                ": needs one branch and two prices");
  }
}

}  // namespace

PureNeResult enumerate_pure_ne(const Instance& instance,
                               const std::vector<PreferenceRelation>& prefs,
                               ActionSpace space, std::uint64_t guard) {
  require_one_branch_two_prices(instance, "enumerate_pure_ne");
  const int n = instance.num_cadets();
  if (static_cast<int>(prefs.size()) != n) {
    throw std::invalid_argument("enumerate_pure_ne: one relation per cadet");
  }

  std::vector<int> actions = space == ActionSpace::Willingness
                                 ? std::vector<int>{1, 2}
                                 : std::vector<int>{0, 1, 2};
  const int d = static_cast<int>(actions.size());
  std::vector<QuasiStrategy> domain;
  domain.reserve(actions.size());
  for (int a : actions) domain.push_back(single_branch_message(a, 1));

  OutcomeTable table = build_quasi_outcome_table(usma2020, instance, domain, guard);

  // Ordinal payoffs: smaller rank is better.
  std::vector<std::array<int, 3>> rank(n);
  for (Cadet i = 0; i < n; ++i) {
    rank[i][0] = prefs[i].unmatched_rank();
    rank[i][1] = prefs[i].rank_of(std::make_pair(0, 0));
    rank[i][2] = prefs[i].rank_of(std::make_pair(0, 1));
  }

  std::vector<std::uint64_t> stride(n);
  std::uint64_t s = 1;
  for (int i = 0; i < n; ++i) {
    stride[i] = s;
    s *= d;
  }
  const std::uint64_t profiles = table.num_profiles();

  PureNeResult result;
  std::vector<int> digits(n, 0);
  for (std::uint64_t p = 0; p < profiles; ++p) {
    bool stable = true;
    for (Cadet i = 0; i < n && stable; ++i) {
      const int mine = rank[i][table.code_at(p, i)];
      for (int m = 0; m < d && stable; ++m) {
        if (m == digits[i]) continue;
        const std::uint64_t q =
            p + (static_cast<std::uint64_t>(m) - digits[i]) * stride[i];
        if (rank[i][table.code_at(q, i)] < mine) stable = false;
      }
    }
    if (stable) {
      std::vector<int> codes(n);
      for (Cadet i = 0; i < n; ++i) codes[i] = actions[digits[i]];
      result.equilibria.push_back(std::move(codes));
      result.equilibrium_outcomes.push_back(table.allocation_at(p));
    }
    for (int i = 0; i < n; ++i) {
      if (++digits[i] < d) break;
      digits[i] = 0;
    }
  }

  for (const Allocation& a : result.equilibrium_outcomes) {
    if (std::find(result.distinct_outcomes.begin(),
                  result.distinct_outcomes.end(),
                  a) == result.distinct_outcomes.end()) {
      result.distinct_outcomes.push_back(a);
    }
  }
  return result;
}

bool ne_outcome_equals_phi_mp(const Instance& instance,
                              const std::vector<PreferenceRelation>& prefs,
                              ActionSpace space, std::uint64_t guard) {
  PureNeResult ne = enumerate_pure_ne(instance, prefs, space, guard);
  if (ne.distinct_outcomes.size() != 1) return false;
  return ne.distinct_outcomes.front() == phi_mp(instance, prefs);
}

BayesianResult bayesian_equilibria(const BayesianGame& game,
                                   const Instance& instance,
                                   std::uint64_t guard) {
  require_one_branch_two_prices(instance, "bayesian_equilibria");
  const int n = game.num_cadets;
  if (instance.num_cadets() != n) {
    throw std::invalid_argument("bayesian_equilibria: cadet count mismatch");
  }
  const int k = static_cast<int>(game.type_utils.size());
  if (k < 1 || game.type_probs.size() != game.type_utils.size()) {
    throw std::invalid_argument(
        "bayesian_equilibria: need aligned type utilities and probabilities");
  }
  Rational total = 0;
  for (const Rational& pr : game.type_probs) {
    if (pr < Rational(0)) {
      throw std::invalid_argument("bayesian_equilibria: negative probability");
    }
    total += pr;
  }
  if (total != Rational(1)) {
    throw std::invalid_argument(
        "bayesian_equilibria: type probabilities must sum to one");
  }

  // Everyone applies; the branch sees only the willingness vector. Cache the
  // outcome and the realized detectable reversals for all 2^n vectors.
  const std::uint64_t masks = std::uint64_t{1} << n;
  std::vector<std::vector<std::uint8_t>> outcome_code(
      masks, std::vector<std::uint8_t>(n));  // 0 unmatched, 1 base, 2 increased
  std::vector<char> reversal_at(masks, 0);
  for (std::uint64_t w = 0; w < masks; ++w) {
    std::vector<QuasiStrategy> msgs;
    msgs.reserve(n);
    for (int i = 0; i < n; ++i) {
      msgs.push_back(single_branch_message((w >> i) & 1 ? 2 : 1, 1));
    }
    Allocation a = usma2020(instance, msgs);
    for (int i = 0; i < n; ++i) {
      const Assignment& x = a.by_cadet[i];
      outcome_code[w][i] = !x ? 0 : (x->second == 0 ? 1 : 2);
    }
    reversal_at[w] =
        !find_detectable_priority_reversals(msgs, a, instance.priorities)
             .empty();
  }

  // A pure strategy maps types to declarations: k bits per cadet.
  const int bits = n * k;
  if (bits >= 63 || (std::uint64_t{1} << bits) > guard) {
    throw std::invalid_argument(
        "bayesian_equilibria: strategy space exceeds the enumeration guard");
  }
  const std::uint64_t sigma_count = std::uint64_t{1} << bits;

  // Probability of each joint type vector, enumerated once.
  std::vector<std::vector<int>> type_vectors;
  std::vector<Rational> type_vector_prob;
  {
    std::vector<int> tau(n, 0);
    for (;;) {
      Rational pr = 1;
      for (int i = 0; i < n; ++i) pr *= game.type_probs[tau[i]];
      type_vectors.push_back(tau);
      type_vector_prob.push_back(pr);
      int i = 0;
      while (i < n && ++tau[i] == k) tau[i++] = 0;
      if (i == n) break;
    }
  }

  BayesianResult result;
  result.profiles_scanned = sigma_count;

  std::vector<std::vector<int>> declare(n, std::vector<int>(k));
  for (std::uint64_t sigma = 0; sigma < sigma_count; ++sigma) {
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < k; ++t) {
        declare[i][t] = static_cast<int>((sigma >> (i * k + t)) & 1);
      }
    }

    // Interim expected utility of each action, per cadet and type.
    std::vector<std::vector<std::array<Rational, 2>>> eu(
        n, std::vector<std::array<Rational, 2>>(k, {Rational(0), Rational(0)}));
    for (std::size_t tv = 0; tv < type_vectors.size(); ++tv) {
      const std::vector<int>& tau = type_vectors[tv];
      std::uint64_t w = 0;
      for (int j = 0; j < n; ++j) {
        if (declare[j][tau[j]]) w |= std::uint64_t{1} << j;
      }
      for (int i = 0; i < n; ++i) {
        // Condition on i's type: strip p(tau_i) from the joint weight; the
        // remaining factor is the probability of the others' types alone.
        if (game.type_probs[tau[i]] == Rational(0)) continue;
        Rational others = type_vector_prob[tv] / game.type_probs[tau[i]];
        const std::uint64_t w_declare = w | (std::uint64_t{1} << i);
        const std::uint64_t w_not = w & ~(std::uint64_t{1} << i);
        for (int t = 0; t < k; ++t) {
          eu[i][t][1] += others * game.type_utils[t][outcome_code[w_declare][i]];
          eu[i][t][0] += others * game.type_utils[t][outcome_code[w_not][i]];
        }
      }
    }

    // The loop above visits each others-profile once per own positive
    // probability type value, so every accumulated utility carries that
    // multiplicity; harmless for comparisons but corrected for reporting.
    int multiplicity = 0;
    for (int t = 0; t < k; ++t) {
      if (game.type_probs[t] > Rational(0)) ++multiplicity;
    }
    // A type that is never drawn places no constraint on play.
    bool stable = true;
    for (int i = 0; i < n && stable; ++i) {
      for (int t = 0; t < k && stable; ++t) {
        if (game.type_probs[t] == Rational(0)) continue;
        const int a = declare[i][t];
        if (eu[i][t][1 - a] > eu[i][t][a]) stable = false;
      }
    }
    if (!stable) continue;

    BayesianEquilibrium eq;
    eq.declare = declare;
    eq.interim_utils.assign(n, std::vector<Rational>(k));
    for (int i = 0; i < n; ++i) {
      for (int t = 0; t < k; ++t) {
        eq.interim_utils[i][t] = game.type_probs[t] == Rational(0)
                                     ? Rational(0)
                                     : eu[i][t][declare[i][t]] / multiplicity;
      }
    }
    eq.reversal_probability = 0;
    for (std::size_t tv = 0; tv < type_vectors.size(); ++tv) {
      const std::vector<int>& tau = type_vectors[tv];
      std::uint64_t w = 0;
      for (int j = 0; j < n; ++j) {
        if (declare[j][tau[j]]) w |= std::uint64_t{1} << j;
      }
      if (reversal_at[w]) eq.reversal_probability += type_vector_prob[tv];
    }
    result.equilibria.push_back(std::move(eq));
  }
  return result;
}

}  // namespace cadetmatch
