// Python bridge. Every entry point speaks JSON strings in the same schemas
// the command-line tool reads and writes, so scripts can mix the two freely.

#include <cstdio>
#include <optional>
#include <string>
#include <vector>

#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "json.hpp"

#include "cadetmatch/axioms.hpp"
#include "cadetmatch/gametheory.hpp"
#include "cadetmatch/harness.hpp"
#include "cadetmatch/mechanisms.hpp"

namespace py = pybind11;
using namespace cadetmatch;
using nlohmann::json;

namespace {

json allocation_body(const Allocation& alloc, const Instance& inst) {
  return json::parse(allocation_to_json(alloc, inst))["allocation"];
}

std::string rational_text(const Rational& r) {
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational rational_from_json(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    long long num = 0, den = 1;
    if (std::sscanf(s.c_str(), "%lld/%lld", &num, &den) == 2 && den != 0) {
      return Rational(num, den);
    }
    if (std::sscanf(s.c_str(), "%lld", &num) == 1) return Rational(num);
    throw std::invalid_argument(where + ": cannot parse '" + s +
                                "' as a rational");
  }
  throw std::invalid_argument(where + ": expected an integer or a \"p/q\" "
                              "string");
}

json violations_body(const std::vector<Violation>& violations,
                     const Instance& inst) {
  json arr = json::array();
  for (const Violation& v : violations) {
    json jv;
    jv["axiom"] = v.axiom;
    json who = json::array();
    for (Cadet c : v.cadets) who.push_back(inst.cadet_ids[c]);
    jv["cadets"] = std::move(who);
    if (v.branch >= 0) jv["branch"] = inst.branches[v.branch].id;
    if (!v.prices.empty()) jv["price_indices"] = v.prices;
    if (!v.deviation.empty()) jv["deviation"] = v.deviation;
    jv["narrative"] = v.narrative;
    arr.push_back(std::move(jv));
  }
  return arr;
}

Branch resolve_branch(const std::string& id, const Instance& inst) {
  if (id.empty()) return 0;
  for (int b = 0; b < inst.num_branches(); ++b) {
    if (inst.branches[b].id == id) return b;
  }
  throw std::invalid_argument("target_branch: unknown branch id '" + id + "'");
}

std::string run_mechanism(const std::string& mechanism,
                          const std::string& instance_json,
                          const std::string& strategies_json, bool trace,
                          const std::string& target_branch) {
  LoadedInstance loaded = parse_instance_json(instance_json);
  const Instance& inst = loaded.instance;

  auto need_strategies = [&]() {
    if (strategies_json.empty()) {
      throw std::invalid_argument("strategies are required for " + mechanism);
    }
    return parse_strategies_json(strategies_json, inst);
  };

  Allocation alloc;
  const MechanismTrace* trace_ptr = nullptr;
  MechanismTrace trace_data;
  if (mechanism == "mpco") {
    MpcoResult res = mpco(inst, loaded.preferences);
    alloc = std::move(res.allocation);
    trace_data = std::move(res.trace);
    if (trace) trace_ptr = &trace_data;
  } else if (mechanism == "phi-mp") {
    alloc = phi_mp(inst, loaded.preferences);
  } else if (mechanism == "usma2006") {
    alloc = usma2006(inst, need_strategies());
  } else if (mechanism == "usma2006-sim") {
    alloc = usma2006_simultaneous(inst, need_strategies());
  } else if (mechanism == "usma2020") {
    alloc = usma2020(inst, need_strategies());
  } else if (mechanism == "da") {
    alloc = counterexample_mechanism(CounterexampleKind::DaAsDirect, inst,
                                     loaded.preferences, 0);
  } else if (auto kind = counterexample_kind_from_name(mechanism)) {
    alloc = counterexample_mechanism(*kind, inst, loaded.preferences,
                                     resolve_branch(target_branch, inst));
  } else {
    throw std::invalid_argument("unknown mechanism '" + mechanism + "'");
  }
  return allocation_to_json(alloc, inst, trace_ptr);
}

std::string audit(const std::string& instance_json,
                  const std::string& allocation_json,
                  const std::string& strategies_json) {
  LoadedInstance loaded = parse_instance_json(instance_json);
  const Instance& inst = loaded.instance;
  Allocation alloc = allocation_json.empty()
                         ? mpco_allocation(inst, loaded.preferences)
                         : parse_allocation_json(allocation_json, inst);
  std::vector<Violation> violations =
      check_allocation_axioms(alloc, loaded.preferences, inst);
  if (!strategies_json.empty()) {
    auto strategies = parse_strategies_json(strategies_json, inst);
    auto more =
        find_detectable_priority_reversals(strategies, alloc, inst.priorities);
    violations.insert(violations.end(), more.begin(), more.end());
  }
  json j;
  j["schema_version"] = 1;
  j["violations"] = violations_body(violations, inst);
  return j.dump(2) + "\n";
}

std::string pure_equilibria(const std::string& instance_json,
                            const std::string& action_space) {
  LoadedInstance loaded = parse_instance_json(instance_json);
  const Instance& inst = loaded.instance;
  ActionSpace space;
  if (action_space == "willingness") {
    space = ActionSpace::Willingness;
  } else if (action_space == "full") {
    space = ActionSpace::Full;
  } else {
    throw std::invalid_argument("action_space must be willingness or full");
  }
  PureNeResult res = enumerate_pure_ne(inst, loaded.preferences, space);
  static const char* const names[] = {"out", "apply", "declare"};
  json j;
  j["schema_version"] = 1;
  j["mode"] = "pure";
  json eqs = json::array();
  for (std::size_t k = 0; k < res.equilibria.size(); ++k) {
    json je;
    json actions;
    for (int i = 0; i < inst.num_cadets(); ++i) {
      actions[inst.cadet_ids[i]] = names[res.equilibria[k][i]];
    }
    je["actions"] = std::move(actions);
    je["outcome"] = allocation_body(res.equilibrium_outcomes[k], inst);
    eqs.push_back(std::move(je));
  }
  j["equilibria"] = std::move(eqs);
  json distinct = json::array();
  for (const Allocation& a : res.distinct_outcomes) {
    distinct.push_back(allocation_body(a, inst));
  }
  j["distinct_outcomes"] = std::move(distinct);
  return j.dump(2) + "\n";
}

std::string bayesian(const std::string& instance_json,
                     const std::string& game_json) {
  LoadedInstance loaded = parse_instance_json(instance_json);
  const Instance& inst = loaded.instance;
  const json g = json::parse(game_json);
  BayesianGame game;
  game.num_cadets = inst.num_cadets();
  if (!g.contains("type_utils") || !g["type_utils"].is_array()) {
    throw std::invalid_argument("game.type_utils: expected an array");
  }
  for (const json& row : g["type_utils"]) {
    if (!row.is_array() || row.size() != 3) {
      throw std::invalid_argument(
          "game.type_utils: each type needs [unmatched, base, increased]");
    }
    game.type_utils.push_back({rational_from_json(row[0], "game.type_utils"),
                               rational_from_json(row[1], "game.type_utils"),
                               rational_from_json(row[2], "game.type_utils")});
  }
  if (!g.contains("type_probs") || !g["type_probs"].is_array()) {
    throw std::invalid_argument("game.type_probs: expected an array");
  }
  for (const json& p : g["type_probs"]) {
    game.type_probs.push_back(rational_from_json(p, "game.type_probs"));
  }
  BayesianResult res = bayesian_equilibria(game, inst);
  json j;
  j["schema_version"] = 1;
  j["mode"] = "bayesian";
  j["profiles_scanned"] = res.profiles_scanned;
  json eqs = json::array();
  for (const BayesianEquilibrium& eq : res.equilibria) {
    json je;
    json declare;
    json utils;
    for (int i = 0; i < inst.num_cadets(); ++i) {
      declare[inst.cadet_ids[i]] = eq.declare[i];
      json per_type = json::array();
      for (const Rational& u : eq.interim_utils[i]) {
        per_type.push_back(rational_text(u));
      }
      utils[inst.cadet_ids[i]] = std::move(per_type);
    }
    je["declare"] = std::move(declare);
    je["interim_utils"] = std::move(utils);
    je["reversal_probability"] = rational_text(eq.reversal_probability);
    eqs.push_back(std::move(je));
  }
  j["equilibria"] = std::move(eqs);
  return j.dump(2) + "\n";
}

std::string sweep_csv(const std::string& instance_json,
                      const std::vector<std::string>& policies,
                      const std::vector<double>& cap_fractions,
                      std::uint64_t seed, int cadets) {
  LoadedInstance base;
  if (instance_json.empty()) {
    CohortSpec spec;
    spec.seed = seed;
    spec.num_cadets = cadets;
    spec.branches = {{"b1", cadets / 2, 0}};
    base = generate_cohort(spec);
  } else {
    base = parse_instance_json(instance_json);
  }
  return sweep_to_csv(sweep_bradso(base, policies, cap_fractions));
}

std::string gen_cohort(std::uint64_t seed, int cadets, int branches,
                       int capacity, int flex,
                       const std::vector<double>& prices, double willingness) {
  CohortSpec spec;
  spec.seed = seed;
  spec.num_cadets = cadets;
  spec.prices = prices;
  spec.willingness_prob = willingness;
  spec.branches.clear();
  for (int b = 0; b < branches; ++b) {
    spec.branches.push_back(
        {"b" + std::to_string(b + 1), capacity, std::min(flex, capacity)});
  }
  return instance_to_json(generate_cohort(spec));
}

std::string verify(const std::string& suite, int max_cadets, int max_branches,
                   int max_prices, int max_cap, std::uint64_t seed,
                   int num_instances, int num_orders) {
  SuiteOptions opts;
  opts.max_cadets = max_cadets;
  opts.max_branches = max_branches;
  opts.max_prices = max_prices;
  opts.max_cap = max_cap;
  opts.seed = seed;
  opts.num_instances = num_instances;
  opts.num_orders = num_orders;
  SuiteResult res = run_verify_suite(suite, opts);
  json j;
  j["name"] = res.name;
  j["pass"] = res.pass;
  j["cases"] = res.cases;
  j["failures"] = res.failures;
  return j.dump(2) + "\n";
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "cadet-branch matching: mechanisms, audits, equilibrium scans "
            "and cohort experiments over JSON documents";

  m.def("run_mechanism", &run_mechanism, py::arg("mechanism"),
        py::arg("instance_json"), py::arg("strategies_json") = "",
        py::arg("trace") = false, py::arg("target_branch") = "",
        "Run a mechanism on an instance document; returns the allocation "
        "document. Mechanisms: mpco, phi-mp, da, usma2006, usma2006-sim, "
        "usma2020, drop-ir, empty, da-as-direct, psi, price-bump.");

  m.def("audit", &audit, py::arg("instance_json"),
        py::arg("allocation_json") = "", py::arg("strategies_json") = "",
        "Check an allocation against the axioms; with strategies, also run "
        "the detectable-reversal audit. Returns a violations document.");

  m.def("pure_equilibria", &pure_equilibria, py::arg("instance_json"),
        py::arg("action_space") = "willingness",
        "Enumerate pure equilibria of the one-branch application game.");

  m.def("bayesian_equilibria", &bayesian, py::arg("instance_json"),
        py::arg("game_json"),
        "Enumerate symmetric-prior Bayesian equilibria; rationals are exact "
        "\"p/q\" strings.");

  m.def("sweep_csv", &sweep_csv, py::arg("instance_json") = "",
        py::arg("policies") =
            std::vector<std::string>{"ultimate", "tiered2020", "tiered2021"},
        py::arg("cap_fractions") =
            std::vector<double>{0.00, 0.05, 0.10, 0.15, 0.20, 0.25, 0.30,
                                0.35},
        py::arg("seed") = 42, py::arg("cadets") = 200,
        "Charged-seat counts per policy and flex-cap fraction, as CSV.");

  m.def("generate_cohort", &gen_cohort, py::arg("seed") = 42,
        py::arg("cadets") = 200, py::arg("branches") = 1,
        py::arg("capacity") = 100, py::arg("flex") = 25,
        py::arg("prices") = std::vector<double>{0.0, 3.0},
        py::arg("willingness") = 0.5,
        "Deterministic synthetic instance document for a given seed.");

  m.def("verify_suite", &verify, py::arg("suite"), py::arg("max_cadets") = 5,
        py::arg("max_branches") = 2, py::arg("max_prices") = 2,
        py::arg("max_cap") = 2, py::arg("seed") = 42,
        py::arg("num_instances") = 1000, py::arg("num_orders") = 20,
        "Run one verification suite; returns a pass/fail report document.");
}
