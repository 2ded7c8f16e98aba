// Acceptance gate. Each criterion prints exactly one PASS/FAIL line with its
// wall-clock time; the binary exits nonzero when any executed criterion fails
// or overruns its pinned time budget. Run with --criterion N to execute a
// single criterion.

#include <algorithm>
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

#include "helpers.hpp"

#include "cadetmatch/axioms.hpp"
#include "cadetmatch/choice.hpp"
#include "cadetmatch/gametheory.hpp"
#include "cadetmatch/harness.hpp"
#include "cadetmatch/mechanisms.hpp"

using namespace cadetmatch;

namespace {

struct Notes {
  std::vector<std::string> lines;
  std::uint64_t cases = 0;
  void fail(std::string what) {
    if (lines.size() < 10) lines.push_back(std::move(what));
  }
};

std::string work_dir() {
  static const std::string dir = [] {
    auto d = std::filesystem::temp_directory_path() / "cadetmatch_acceptance";
    std::filesystem::create_directories(d);
    return d.string();
  }();
  return dir;
}

Instance grid_econ(int n, int q_base, int q_flex, const PriorityOrder& pi,
                   const PriceResponsivenessPolicy& pol,
                   const PriceLadder& ladder) {
  Instance inst;
  for (int c = 0; c < n; ++c) {
    inst.cadet_ids.push_back("c" + std::to_string(c + 1));
  }
  inst.ladder = ladder;
  inst.branches.push_back({"b1", q_base + q_flex, q_flex});
  inst.priorities = {pi};
  inst.policies = {pol};
  inst.policy_specs.assign(1, PolicySpec{});
  return inst;
}

Instance two_branch_econ(int n, std::pair<int, int> caps0,
                         std::pair<int, int> caps1, const PriorityOrder& pi0,
                         const PriorityOrder& pi1,
                         const PriceResponsivenessPolicy& pol0,
                         const PriceResponsivenessPolicy& pol1,
                         const PriceLadder& ladder) {
  Instance inst;
  for (int c = 0; c < n; ++c) {
    inst.cadet_ids.push_back("c" + std::to_string(c + 1));
  }
  inst.ladder = ladder;
  inst.branches.push_back({"b1", caps0.first + caps0.second, caps0.second});
  inst.branches.push_back({"b2", caps1.first + caps1.second, caps1.second});
  inst.priorities = {pi0, pi1};
  inst.policies = {pol0, pol1};
  inst.policy_specs.assign(2, PolicySpec{});
  return inst;
}

std::vector<PriorityOrder> all_orders(int n) {
  std::vector<Cadet> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  std::vector<PriorityOrder> out;
  do {
    out.push_back(PriorityOrder::from_ranking(v));
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

bool next_profile(std::vector<int>& digits, int radix) {
  for (int& d : digits) {
    if (++d < radix) return true;
    d = 0;
  }
  return false;
}

std::string profile_text(const std::vector<int>& digits) {
  std::string s = "profile";
  for (int d : digits) s += " " + std::to_string(d);
  return s;
}

// ---- criterion 1: the worked single-branch outcome through the CLI ----

bool criterion1(Notes& notes) {
  const std::string fixture = testutil::fixture_path("single_branch_8cadets.json");
  auto loaded = load_instance(fixture);
  const Allocation want = testutil::worked_outcome();
  bool ok = true;
  for (const std::string mech : {"mpco", "phi-mp"}) {
    const std::string out = work_dir() + "/c1_" + mech + ".json";
    const std::string cmd = std::string("\"") + CADETMATCH_CLI_PATH +
                            "\" run --mechanism " + mech + " --instance \"" +
                            fixture + "\" --out \"" + out + "\"";
    if (std::system(cmd.c_str()) != 0) {
      notes.fail(mech + std::string(": the command exited nonzero"));
      ok = false;
      continue;
    }
    ++notes.cases;
    if (load_allocation(out, loaded.instance) != want) {
      notes.fail(mech + std::string(": output differs from the expected table"));
      ok = false;
    }
  }
  return ok;
}

// ---- criterion 2: pure equilibria of the declaration game ----

bool criterion2(Notes& notes) {
  Instance inst = testutil::worked_economy();
  bool ok = true;

  auto scenario = [&](bool extra_payer, const std::vector<int>& want_actions,
                      const Allocation& want_outcome, const char* tag) {
    auto r = enumerate_pure_ne(inst, testutil::worked_preferences(extra_payer),
                               ActionSpace::Willingness);
    notes.cases += 256;  // every willingness profile of the eight cadets
    if (r.equilibria.size() != 1 || r.equilibria[0] != want_actions) {
      notes.fail(std::string(tag) + ": equilibrium set is not the pinned one");
      ok = false;
    }
    if (r.distinct_outcomes.size() != 1 ||
        r.equilibrium_outcomes.empty() ||
        r.equilibrium_outcomes[0] != want_outcome) {
      notes.fail(std::string(tag) + ": equilibrium outcome differs");
      ok = false;
    }
  };

  scenario(false, {2, 1, 1, 1, 1, 1, 2, 1}, testutil::worked_outcome(),
           "two payers");

  Allocation second(8);
  second.by_cadet[0] = {{0, 1}};
  second.by_cadet[2] = {{0, 1}};
  second.by_cadet[3] = {{0, 0}};
  second.by_cadet[4] = {{0, 0}};
  second.by_cadet[5] = {{0, 0}};
  second.by_cadet[6] = {{0, 1}};
  scenario(true, {2, 1, 2, 2, 2, 2, 2, 2}, second, "three payers");
  return ok;
}

// ---- criterion 3: incomplete information, exact rational odds ----

bool criterion3(Notes& notes) {
  Instance inst = testutil::one_branch(3, 2, 1, {0, 1, 2});
  BayesianGame game;
  game.num_cadets = 3;
  game.type_utils = {{Rational(8), Rational(10), Rational(0)},
                     {Rational(0), Rational(10), Rational(8)}};
  game.type_probs = {Rational(1, 2), Rational(1, 2)};
  auto result = bayesian_equilibria(game, inst);
  notes.cases += result.profiles_scanned;
  bool ok = true;
  if (result.equilibria.size() != 1) {
    notes.fail("expected exactly one equilibrium, found " +
               std::to_string(result.equilibria.size()));
    return false;
  }
  const auto& eq = result.equilibria[0];
  for (int i = 0; i < 3; ++i) {
    if (eq.declare[i] != std::vector<int>{0, 1}) {
      notes.fail("cadet " + std::to_string(i + 1) + " does not play truthfully");
      ok = false;
    }
  }
  if (eq.reversal_probability != Rational(1, 4)) {
    notes.fail("reversal probability is not 1/4");
    ok = false;
  }
  return ok;
}

// ---- criterion 4: sequential procedure == cumulative offers on the grid ----
// one branch, two prices, up to five cadets, base and flexible caps up to two
// each, every policy over the tier grid, every preference profile

bool criterion4(Notes& notes) {
  const PriceLadder ladder = testutil::two_prices();
  const auto domain = enumerate_preferences(1, 2);
  bool ok = true;
  for (int n = 1; n <= 5; ++n) {
    const PriorityOrder pi = testutil::identity_order(n);
    const auto policies = policy_grid(pi, ladder, 3);
    for (int q0 = 0; q0 <= 2; ++q0) {
      for (int qf = 0; qf <= 2; ++qf) {
        for (std::size_t pk = 0; pk < policies.size(); ++pk) {
          Instance inst = grid_econ(n, q0, qf, pi, policies[pk], ladder);
          std::vector<int> digits(n, 0);
          std::vector<PreferenceRelation> prefs(n, domain[0]);
          do {
            for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
            ++notes.cases;
            if (phi_mp(inst, prefs) != mpco_allocation(inst, prefs)) {
              notes.fail("n=" + std::to_string(n) + " caps " +
                         std::to_string(q0) + "+" + std::to_string(qf) +
                         " policy#" + std::to_string(pk) + " " +
                         profile_text(digits));
              ok = false;
            }
          } while (next_profile(digits, static_cast<int>(domain.size())));
        }
      }
    }
  }
  return ok;
}

// ---- criterion 5: axioms and strategy-proofness, exhaustive small grid ----
// up to three cadets, up to two branches, up to two prices, q_total <= 2

bool criterion5(Notes& notes) {
  bool ok = true;
  const DirectMechanism mech = [](const Instance& inst,
                                  const std::vector<PreferenceRelation>& p) {
    return mpco_allocation(inst, p);
  };
  const std::vector<std::pair<int, int>> caps{{0, 0}, {1, 0}, {1, 1},
                                              {2, 0}, {2, 1}, {2, 2}};

  auto scan = [&](const Instance& inst,
                  const std::vector<PreferenceRelation>& domain,
                  const std::string& tag) {
    OutcomeTable table = build_outcome_table(mech, inst, domain);
    const int n = inst.num_cadets();
    std::vector<int> digits(n, 0);
    std::vector<PreferenceRelation> prefs(n, domain[0]);
    std::uint64_t p = 0;
    do {
      for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
      ++notes.cases;
      Allocation a = table.allocation_at(p);
      auto violations = check_allocation_axioms(a, prefs, inst);
      if (!violations.empty()) {
        notes.fail(tag + " " + profile_text(digits) + ": " +
                   violations.front().axiom);
        ok = false;
      }
      ++p;
    } while (next_profile(digits, static_cast<int>(domain.size())));
    auto sp = sp_violations_from_table(table, domain, true);
    if (!sp.empty()) {
      notes.fail(tag + ": a profitable misreport exists (" +
                 sp.front().narrative + ")");
      ok = false;
    }
  };

  for (int np = 1; np <= 2; ++np) {
    const PriceLadder ladder =
        np == 1 ? testutil::one_price() : testutil::two_prices();
    for (int n = 1; n <= 3; ++n) {
      const PriorityOrder pi0 = testutil::identity_order(n);
      const auto pols0 = policy_grid(pi0, ladder, 3);
      const auto domain1 = enumerate_preferences(1, np);
      for (const auto& [q, f] : caps) {
        if (np == 1 && f != 0) continue;
        for (std::size_t pk = 0; pk < pols0.size(); ++pk) {
          Instance inst = grid_econ(n, q - f, f, pi0, pols0[pk], ladder);
          scan(inst, domain1,
               "1-branch n=" + std::to_string(n) + " T=" + std::to_string(np) +
                   " caps " + std::to_string(q - f) + "+" + std::to_string(f) +
                   " policy#" + std::to_string(pk));
        }
      }
      const auto domain2 = enumerate_preferences(2, np);
      for (const PriorityOrder& pi1 : all_orders(n)) {
        const auto pols1 = policy_grid(pi1, ladder, 3);
        for (const auto& pol0 : pols0) {
          for (const auto& pol1 : pols1) {
            for (const auto& [q0, f0] : caps) {
              if (np == 1 && f0 != 0) continue;
              for (const auto& [q1, f1] : caps) {
                if (np == 1 && f1 != 0) continue;
                Instance inst =
                    two_branch_econ(n, {q0 - f0, f0}, {q1 - f1, f1}, pi0, pi1,
                                    pol0, pol1, ladder);
                scan(inst, domain2,
                     "2-branch n=" + std::to_string(n) + " T=" +
                         std::to_string(np) + " caps " + std::to_string(q0) +
                         "," + std::to_string(q1));
              }
            }
          }
        }
      }
    }
  }
  return ok;
}

// ---- criterion 6: every pure equilibrium outcome == direct outcome ----
// same grid as criterion 4, full three-action space

bool criterion6(Notes& notes) {
  const PriceLadder ladder = testutil::two_prices();
  const auto domain = enumerate_preferences(1, 2);
  bool ok = true;
  for (int n = 1; n <= 5; ++n) {
    const PriorityOrder pi = testutil::identity_order(n);
    const auto policies = policy_grid(pi, ladder, 3);
    for (int q0 = 0; q0 <= 2; ++q0) {
      for (int qf = 0; qf <= 2; ++qf) {
        for (std::size_t pk = 0; pk < policies.size(); ++pk) {
          Instance inst = grid_econ(n, q0, qf, pi, policies[pk], ladder);
          std::vector<int> digits(n, 0);
          std::vector<PreferenceRelation> prefs(n, domain[0]);
          do {
            for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
            ++notes.cases;
            if (!ne_outcome_equals_phi_mp(inst, prefs)) {
              notes.fail("n=" + std::to_string(n) + " caps " +
                         std::to_string(q0) + "+" + std::to_string(qf) +
                         " policy#" + std::to_string(pk) + " " +
                         profile_text(digits));
              ok = false;
            }
          } while (next_profile(digits, static_cast<int>(domain.size())));
        }
      }
    }
  }
  return ok;
}

// ---- criterion 7: independence of the axioms ----

bool criterion7(Notes& notes) {
  auto r = run_verify_suite("independence", SuiteOptions{});
  notes.cases += r.cases;
  for (const auto& f : r.failures) notes.fail(f);
  return r.pass;
}

// ---- criterion 8: one price level reduces to deferred acceptance ----

bool criterion8(Notes& notes) {
  std::mt19937_64 rng(42);
  const PriceLadder ladder = testutil::one_price();
  bool ok = true;
  for (int iter = 0; iter < 1000; ++iter) {
    const int n = 1 + static_cast<int>(rng() % 10);
    const int nb = 1 + static_cast<int>(rng() % 4);
    Instance inst;
    for (int c = 0; c < n; ++c) {
      inst.cadet_ids.push_back("c" + std::to_string(c + 1));
    }
    inst.ladder = ladder;
    std::vector<Cadet> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    for (int b = 0; b < nb; ++b) {
      const int q = static_cast<int>(rng() % 4);
      inst.branches.push_back({"b" + std::to_string(b + 1), q, 0});
      std::shuffle(perm.begin(), perm.end(), rng);
      inst.priorities.push_back(PriorityOrder::from_ranking(perm));
      inst.policies.push_back(
          build_ultimate_policy(inst.priorities.back(), ladder));
    }
    inst.policy_specs.assign(nb, PolicySpec{});

    std::vector<std::vector<Branch>> lists(n);
    std::vector<PreferenceRelation> prefs(n);
    std::vector<Branch> pool(nb);
    for (int b = 0; b < nb; ++b) pool[b] = b;
    for (int i = 0; i < n; ++i) {
      std::shuffle(pool.begin(), pool.end(), rng);
      const int len = static_cast<int>(rng() % (nb + 1));
      lists[i].assign(pool.begin(), pool.begin() + len);
      for (Branch b : lists[i]) prefs[i].acceptable.push_back({b, 0});
    }

    ++notes.cases;
    const auto mu = da(inst, lists, inst.priorities);
    const Allocation a = mpco_allocation(inst, prefs);
    for (int i = 0; i < n; ++i) {
      const bool same =
          mu[i].has_value() == a.by_cadet[i].has_value() &&
          (!mu[i] ||
           (a.by_cadet[i]->first == *mu[i] && a.by_cadet[i]->second == 0));
      if (!same) {
        notes.fail("iteration " + std::to_string(iter) +
                   ": cumulative offers and deferred acceptance disagree");
        ok = false;
        break;
      }
    }

    // exhaustive blocking-pair scan of the deferred-acceptance outcome
    std::vector<int> load(nb, 0);
    for (int i = 0; i < n; ++i) {
      if (mu[i]) ++load[*mu[i]];
    }
    for (int i = 0; i < n && ok; ++i) {
      for (Branch b : lists[i]) {
        if (mu[i] && *mu[i] == b) break;  // everything below is worse
        bool blocks = load[b] < inst.branches[b].q_total;
        for (int j = 0; j < n && !blocks; ++j) {
          if (j != i && mu[j] && *mu[j] == b &&
              inst.priorities[b].outranks(i, j)) {
            blocks = true;
          }
        }
        if (blocks) {
          notes.fail("iteration " + std::to_string(iter) + ": cadet " +
                     std::to_string(i + 1) + " and branch " +
                     std::to_string(b + 1) + " block the outcome");
          ok = false;
          break;
        }
      }
    }
  }
  return ok;
}

// ---- criterion 9: charged count monotone in the flex cap and the policy ----

bool criterion9(Notes& notes) {
  std::mt19937_64 rng(42);
  const int n = 8;
  const PriceLadder ladder = testutil::two_prices();
  bool ok = true;

  auto charged = [](const ChoiceResult& r) {
    int k = 0;
    for (const Contract& x : r.flex_selected) {
      if (x.price > 0) ++k;
    }
    return k;
  };

  for (int iter = 0; iter < 1000 && ok; ++iter) {
    std::vector<Cadet> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const PriorityOrder pi = PriorityOrder::from_ranking(perm);

    TierSpec thirds;
    thirds.tiers = {{perm[0], perm[1], perm[2]},
                    {perm[3], perm[4], perm[5]},
                    {perm[6], perm[7]}};
    thirds.scopes = {JumpScope::WithinTier, JumpScope::WithinTier,
                     JumpScope::WithinTier};
    const auto walled = build_tiered_policy(pi, thirds, ladder);
    thirds.scopes = {JumpScope::OverAll, JumpScope::OverAll,
                     JumpScope::WithinTier};
    const auto opened = build_tiered_policy(pi, thirds, ladder);
    const auto ultimate = build_ultimate_policy(pi, ladder);
    const std::vector<const PriceResponsivenessPolicy*> chain{
        &ultimate, &opened, &walled};  // responsiveness falls along the chain

    std::vector<Contract> offers;
    for (Cadet i = 0; i < n; ++i) {
      for (Price t = 0; t < 2; ++t) {
        if (rng() % 2) offers.push_back({i, 0, t});
      }
    }
    const int q_total = static_cast<int>(rng() % 7);

    // more flexible seats never reduce the number of increased-price picks
    const auto& pol = *chain[rng() % 3];
    int prev = 0;
    for (int qf = 0; qf <= q_total; ++qf) {
      BranchSpec branch{"b1", q_total, qf};
      ++notes.cases;
      const int now = charged(cmp_choice(branch, pi, pol, offers, 0));
      if (now < prev) {
        notes.fail("iteration " + std::to_string(iter) +
                   ": charged count fell when q_flex grew to " +
                   std::to_string(qf));
        ok = false;
        break;
      }
      prev = now;
    }

    // a more responsive policy never charges fewer cadets
    const int qf = q_total == 0 ? 0 : static_cast<int>(rng() % (q_total + 1));
    BranchSpec branch{"b1", q_total, qf};
    int last = n + 1;
    for (const auto* p : chain) {
      ++notes.cases;
      const int now = charged(cmp_choice(branch, pi, *p, offers, 0));
      if (now > last) {
        notes.fail("iteration " + std::to_string(iter) +
                   ": a less responsive policy charged more");
        ok = false;
        break;
      }
      last = now;
    }
  }
  return ok;
}

// ---- criterion 10: the proposal order never matters ----

bool criterion10(Notes& notes) {
  SuiteOptions opts;
  opts.num_instances = 100;
  opts.num_orders = 20;
  auto r = run_verify_suite("order-independence", opts);
  notes.cases += r.cases;
  for (const auto& f : r.failures) notes.fail(f);
  return r.pass;
}

// ---- criterion 11: seeded cohort sweep keeps the policy ordering ----

bool criterion11(Notes& notes) {
  CohortSpec spec;  // seed 42, 200 cadets, one branch of 100 positions
  auto cohort = generate_cohort(spec);
  const std::vector<std::string> policies{"ultimate", "tiered2020",
                                          "tiered2021"};
  const std::vector<double> fractions{0.00, 0.05, 0.10, 0.15,
                                      0.20, 0.25, 0.30, 0.35};
  auto rows = sweep_bradso(cohort, policies, fractions);
  bool ok = true;
  auto charged_of = [&](const std::string& pol, double f) {
    for (const auto& r : rows) {
      if (r.policy == pol && r.cap_fraction == f) return r.charged;
    }
    return -1;
  };
  for (double f : fractions) {
    ++notes.cases;
    const int u = charged_of("ultimate", f);
    const int t21 = charged_of("tiered2021", f);
    const int t20 = charged_of("tiered2020", f);
    if (u < 0 || t21 < 0 || t20 < 0) {
      notes.fail("missing sweep row at fraction " + std::to_string(f));
      ok = false;
    } else if (u < t21 || t21 < t20) {
      char buf[160];
      std::snprintf(buf, sizeof buf,
                    "ordering violated at fraction %.2f: ultimate %d, "
                    "tiered2021 %d, tiered2020 %d",
                    f, u, t21, t20);
      notes.fail(buf);
      ok = false;
    }
  }
  return ok;
}

struct Criterion {
  int id;
  const char* label;
  double budget_s;
  std::function<bool(Notes&)> run;
};

}  // namespace

int main(int argc, char** argv) {
  int only = 0;
  for (int i = 1; i < argc; ++i) {
    const std::string arg = argv[i];
    if (arg == "--criterion" && i + 1 < argc) {
      only = std::atoi(argv[++i]);
    } else {
      std::fprintf(stderr, "usage: %s [--criterion N]\n", argv[0]);
      return 2;
    }
  }

  const std::vector<Criterion> criteria{
      {1, "worked single-branch outcome through the command line", 1.0,
       criterion1},
      {2, "declaration-game equilibria on the worked economy", 1.0,
       criterion2},
      {3, "incomplete-information equilibrium and reversal odds", 1.0,
       criterion3},
      {4, "sequential procedure matches cumulative offers on the grid", 300.0,
       criterion4},
      {5, "axioms and strategy-proofness on the exhaustive small grid", 600.0,
       criterion5},
      {6, "pure equilibrium outcomes match the direct mechanism", 600.0,
       criterion6},
      {7, "each counterexample mechanism breaks exactly its own axiom", 60.0,
       criterion7},
      {8, "single-price runs reduce to deferred acceptance", 60.0, criterion8},
      {9, "charged seats monotone in flex cap and responsiveness", 60.0,
       criterion9},
      {10, "outcome independent of the proposal order", 60.0, criterion10},
      {11, "seeded cohort sweep keeps the policy ordering", 60.0, criterion11},
  };

  bool all_ok = true;
  int ran = 0;
  for (const Criterion& c : criteria) {
    if (only != 0 && c.id != only) continue;
    ++ran;
    Notes notes;
    const auto t0 = std::chrono::steady_clock::now();
    bool ok = false;
    try {
      ok = c.run(notes);
    } catch (const std::exception& e) {
      notes.fail(std::string("exception: ") + e.what());
    }
    const double elapsed =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0)
            .count();
    if (elapsed > c.budget_s) {
      notes.fail("time budget exceeded: " + std::to_string(elapsed) +
                 " s against " + std::to_string(c.budget_s) + " s");
      ok = false;
    }
    std::printf("criterion %2d: %s  %8.2f s  %llu cases  %s\n", c.id,
                ok ? "PASS" : "FAIL", elapsed,
                static_cast<unsigned long long>(notes.cases), c.label);
    for (const auto& line : notes.lines) {
      std::printf("              - %s\n", line.c_str());
    }
    std::fflush(stdout);
    all_ok = all_ok && ok;
  }
  if (ran == 0) {
    std::fprintf(stderr, "no such criterion\n");
    return 2;
  }
  if (only == 0) {
    std::printf("acceptance: %s\n", all_ok ? "all criteria pass" : "FAILURES");
  }
  return all_ok ? 0 : 1;
}
