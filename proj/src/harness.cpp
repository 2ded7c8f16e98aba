#include "cadetmatch/harness.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <sstream>
#include <stdexcept>

#include "CLI11.hpp"
#include "json.hpp"

#include "cadetmatch/axioms.hpp"
#include "cadetmatch/choice.hpp"
#include "cadetmatch/gametheory.hpp"

namespace cadetmatch {

namespace {

using nlohmann::json;

[[noreturn]] void fail_field(const std::string& where, const std::string& what) {
  throw std::invalid_argument(where + ": " + what);
}

const json& need(const json& j, const char* key, const std::string& where) {
  auto it = j.find(key);
  if (it == j.end()) fail_field(where, std::string("missing field '") + key + "'");
  return *it;
}

int need_int(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_number_integer()) {
    fail_field(where + "." + key, "expected an integer");
  }
  return v.get<int>();
}

std::string need_string(const json& j, const char* key, const std::string& where) {
  const json& v = need(j, key, where);
  if (!v.is_string()) fail_field(where + "." + key, "expected a string");
  return v.get<std::string>();
}

json parse_text(const std::string& text, const std::string& what) {
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(what + ": not valid JSON (" + e.what() + ")");
  }
}

void check_schema_version(const json& j, const std::string& what) {
  if (need(j, "schema_version", what) != 1) {
    fail_field(what + ".schema_version", "only version 1 is understood");
  }
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot open " + path);
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::invalid_argument("cannot write " + path);
  out << text;
}

std::map<std::string, int> index_ids(const std::vector<std::string>& ids) {
  std::map<std::string, int> m;
  for (std::size_t k = 0; k < ids.size(); ++k) m[ids[k]] = static_cast<int>(k);
  return m;
}

int lookup(const std::map<std::string, int>& index, const std::string& id,
           const std::string& where, const char* kind) {
  auto it = index.find(id);
  if (it == index.end()) {
    fail_field(where, std::string("unknown ") + kind + " id '" + id + "'");
  }
  return it->second;
}

PriorityOrder parse_ranking(const json& arr,
                            const std::map<std::string, int>& cadets,
                            const std::string& where) {
  if (!arr.is_array()) fail_field(where, "expected an array of cadet ids");
  std::vector<Cadet> order;
  order.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_string()) fail_field(where, "entries must be cadet ids");
    order.push_back(lookup(cadets, v.get<std::string>(), where, "cadet"));
  }
  if (order.size() != cadets.size()) {
    fail_field(where, "must rank every cadet exactly once");
  }
  return PriorityOrder::from_ranking(std::move(order));
}

}  // namespace

// ---- instance files ----

LoadedInstance parse_instance_json(const std::string& text) {
  const json j = parse_text(text, "instance");
  check_schema_version(j, "instance");

  LoadedInstance loaded;
  Instance& inst = loaded.instance;

  const json& cadets = need(j, "cadets", "instance");
  if (!cadets.is_array() || cadets.empty()) {
    fail_field("instance.cadets", "expected a nonempty array of ids");
  }
  for (const json& v : cadets) {
    if (!v.is_string() || v.get<std::string>().empty()) {
      fail_field("instance.cadets", "ids must be nonempty strings");
    }
    inst.cadet_ids.push_back(v.get<std::string>());
  }
  const auto cadet_index = index_ids(inst.cadet_ids);
  if (cadet_index.size() != inst.cadet_ids.size()) {
    fail_field("instance.cadets", "ids must be unique");
  }

  const json& prices = need(j, "prices", "instance");
  if (!prices.is_array()) fail_field("instance.prices", "expected an array");
  for (const json& v : prices) {
    if (!v.is_number()) fail_field("instance.prices", "entries must be numbers");
    inst.ladder.values.push_back(v.get<double>());
  }
  validate_ladder(inst.ladder);

  const json& branches = need(j, "branches", "instance");
  if (!branches.is_array() || branches.empty()) {
    fail_field("instance.branches", "expected a nonempty array");
  }
  int bi = 0;
  for (const json& b : branches) {
    const std::string where = "instance.branches[" + std::to_string(bi) + "]";
    BranchSpec spec;
    spec.id = need_string(b, "id", where);
    spec.q_total = need_int(b, "q_total", where);
    spec.q_flex = need_int(b, "q_flex", where);
    inst.branches.push_back(spec);

    inst.priorities.push_back(
        parse_ranking(need(b, "priority", where), cadet_index, where + ".priority"));

    const json& pol = need(b, "policy", where);
    const std::string kind = need_string(pol, "kind", where + ".policy");
    PolicySpec pspec;
    try {
      if (kind == "ultimate") {
        pspec.kind = PolicyKind::Ultimate;
        inst.policies.push_back(
            build_ultimate_policy(inst.priorities.back(), inst.ladder));
      } else if (kind == "tiered") {
        pspec.kind = PolicyKind::Tiered;
        const json& tiers = need(pol, "tiers", where + ".policy");
        if (!tiers.is_array() || tiers.empty()) {
          fail_field(where + ".policy.tiers", "expected a nonempty array");
        }
        for (const json& tier : tiers) {
          const std::string twhere = where + ".policy.tiers";
          const json& members = need(tier, "cadets", twhere);
          if (!members.is_array()) fail_field(twhere, "cadets must be an array");
          std::vector<Cadet> block;
          for (const json& v : members) {
            if (!v.is_string()) fail_field(twhere, "cadets must be ids");
            block.push_back(lookup(cadet_index, v.get<std::string>(), twhere, "cadet"));
          }
          pspec.tiers.tiers.push_back(std::move(block));
          const std::string scope = need_string(tier, "jump_scope", twhere);
          if (scope == "within_tier") {
            pspec.tiers.scopes.push_back(JumpScope::WithinTier);
          } else if (scope == "over_all") {
            pspec.tiers.scopes.push_back(JumpScope::OverAll);
          } else {
            fail_field(twhere + ".jump_scope",
                       "expected 'within_tier' or 'over_all'");
          }
        }
        inst.policies.push_back(
            build_tiered_policy(inst.priorities.back(), pspec.tiers, inst.ladder));
      } else if (kind == "scoring") {
        pspec.kind = PolicyKind::Scoring;
        const json& merit = need(pol, "merit", where + ".policy");
        if (!merit.is_object()) {
          fail_field(where + ".policy.merit", "expected an id-to-number object");
        }
        pspec.scoring.merit.assign(inst.cadet_ids.size(), 0.0);
        std::size_t seen = 0;
        for (auto it = merit.begin(); it != merit.end(); ++it) {
          const int c = lookup(cadet_index, it.key(), where + ".policy.merit", "cadet");
          if (!it.value().is_number()) {
            fail_field(where + ".policy.merit", "values must be numbers");
          }
          pspec.scoring.merit[c] = it.value().get<double>();
          ++seen;
        }
        if (seen != inst.cadet_ids.size()) {
          fail_field(where + ".policy.merit", "must score every cadet");
        }
        const json& boost = need(pol, "boost", where + ".policy");
        if (!boost.is_array()) fail_field(where + ".policy.boost", "expected an array");
        for (const json& v : boost) {
          if (!v.is_number()) fail_field(where + ".policy.boost", "entries must be numbers");
          pspec.scoring.boost.push_back(v.get<double>());
        }
        pspec.scoring.tiebreak = parse_ranking(
            need(pol, "tiebreak", where + ".policy"), cadet_index,
            where + ".policy.tiebreak");
        inst.policies.push_back(build_scoring_policy(pspec.scoring, inst.ladder));
      } else {
        fail_field(where + ".policy.kind",
                   "expected 'ultimate', 'tiered' or 'scoring'");
      }
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument(where + ".policy: " + e.what());
    }
    inst.policy_specs.push_back(std::move(pspec));
    ++bi;
  }
  std::map<std::string, int> branch_index;
  for (std::size_t k = 0; k < inst.branches.size(); ++k) {
    branch_index[inst.branches[k].id] = static_cast<int>(k);
  }
  if (branch_index.size() != inst.branches.size()) {
    fail_field("instance.branches", "branch ids must be unique");
  }

  validate_instance(inst);

  const json& prefs = need(j, "preferences", "instance");
  if (!prefs.is_object()) {
    fail_field("instance.preferences", "expected an object keyed by cadet id");
  }
  loaded.preferences.assign(inst.num_cadets(), PreferenceRelation{});
  std::vector<char> have(inst.num_cadets(), 0);
  for (auto it = prefs.begin(); it != prefs.end(); ++it) {
    const std::string where = "instance.preferences['" + it.key() + "']";
    const int c = lookup(cadet_index, it.key(), "instance.preferences", "cadet");
    have[c] = 1;
    if (!it.value().is_array()) fail_field(where, "expected an array");

    // Entries before the "unmatched" marker are the acceptable contracts.
    // Entries after it are checked for well-formedness and price order, then
    // dropped: an unranked tail never influences any mechanism.
    PreferenceRelation rel;
    bool past_marker = false;
    std::set<std::pair<Branch, Price>> listed;
    std::vector<Price> last_price(inst.num_branches(), -1);
    for (const json& entry : it.value()) {
      if (entry.is_string()) {
        if (entry.get<std::string>() != "unmatched") {
          fail_field(where, "the only string entry allowed is \"unmatched\"");
        }
        if (past_marker) fail_field(where, "\"unmatched\" listed twice");
        past_marker = true;
        continue;
      }
      if (!entry.is_object()) {
        fail_field(where, "entries must be contract objects or \"unmatched\"");
      }
      const std::string bid = need_string(entry, "branch", where);
      const Branch b = lookup(branch_index, bid, where, "branch");
      const Price t = need_int(entry, "price_index", where);
      if (t < 0 || t >= inst.num_prices()) {
        fail_field(where, "price_index " + std::to_string(t) + " out of range");
      }
      if (!listed.insert({b, t}).second) {
        fail_field(where, "contract (" + bid + ", " + std::to_string(t) +
                              ") listed twice");
      }
      if (t <= last_price[b]) {
        fail_field(where, "branch " + bid +
                              " must list cheaper prices before dearer ones");
      }
      last_price[b] = t;
      if (!past_marker) rel.acceptable.push_back({b, t});
    }
    validate_preference(rel, inst.num_branches(), inst.num_prices(), it.key());
    loaded.preferences[c] = std::move(rel);
  }
  for (int c = 0; c < inst.num_cadets(); ++c) {
    if (!have[c]) {
      fail_field("instance.preferences",
                 "no entry for cadet '" + inst.cadet_ids[c] + "'");
    }
  }
  return loaded;
}

LoadedInstance load_instance(const std::string& path) {
  return parse_instance_json(read_file(path));
}

namespace {

json policy_spec_json(const Instance& inst, int b) {
  const PolicySpec& spec = inst.policy_specs[b];
  json out;
  switch (spec.kind) {
    case PolicyKind::Ultimate:
      out["kind"] = "ultimate";
      break;
    case PolicyKind::Tiered: {
      out["kind"] = "tiered";
      json tiers = json::array();
      for (std::size_t k = 0; k < spec.tiers.tiers.size(); ++k) {
        json tier;
        json members = json::array();
        for (Cadet c : spec.tiers.tiers[k]) members.push_back(inst.cadet_ids[c]);
        tier["cadets"] = std::move(members);
        tier["jump_scope"] = spec.tiers.scopes[k] == JumpScope::WithinTier
                                 ? "within_tier"
                                 : "over_all";
        tiers.push_back(std::move(tier));
      }
      out["tiers"] = std::move(tiers);
      break;
    }
    case PolicyKind::Scoring: {
      out["kind"] = "scoring";
      json merit;
      for (int c = 0; c < inst.num_cadets(); ++c) {
        merit[inst.cadet_ids[c]] = spec.scoring.merit[c];
      }
      out["merit"] = std::move(merit);
      out["boost"] = spec.scoring.boost;
      json tb = json::array();
      for (Cadet c : spec.scoring.tiebreak.ranking) tb.push_back(inst.cadet_ids[c]);
      out["tiebreak"] = std::move(tb);
      break;
    }
  }
  return out;
}

json assignment_json(const Assignment& a, const Instance& inst) {
  if (!a) return json("unmatched");
  json out;
  out["branch"] = inst.branches[a->first].id;
  out["price_index"] = a->second;
  return out;
}

}  // namespace

std::string instance_to_json(const LoadedInstance& loaded) {
  const Instance& inst = loaded.instance;
  json j;
  j["schema_version"] = 1;
  j["cadets"] = inst.cadet_ids;
  j["prices"] = inst.ladder.values;
  json branches = json::array();
  for (int b = 0; b < inst.num_branches(); ++b) {
    json jb;
    jb["id"] = inst.branches[b].id;
    jb["q_total"] = inst.branches[b].q_total;
    jb["q_flex"] = inst.branches[b].q_flex;
    json ranking = json::array();
    for (Cadet c : inst.priorities[b].ranking) ranking.push_back(inst.cadet_ids[c]);
    jb["priority"] = std::move(ranking);
    jb["policy"] = policy_spec_json(inst, b);
    branches.push_back(std::move(jb));
  }
  j["branches"] = std::move(branches);
  json prefs;
  for (int c = 0; c < inst.num_cadets(); ++c) {
    json list = json::array();
    for (const auto& [b, t] : loaded.preferences[c].acceptable) {
      json entry;
      entry["branch"] = inst.branches[b].id;
      entry["price_index"] = t;
      list.push_back(std::move(entry));
    }
    prefs[inst.cadet_ids[c]] = std::move(list);
  }
  j["preferences"] = std::move(prefs);
  return j.dump(2) + "\n";
}

void save_instance(const LoadedInstance& loaded, const std::string& path) {
  write_file(path, instance_to_json(loaded));
}

std::string allocation_to_json(const Allocation& alloc, const Instance& instance,
                               const MechanismTrace* trace) {
  json j;
  j["schema_version"] = 1;
  json body;
  for (int c = 0; c < instance.num_cadets(); ++c) {
    body[instance.cadet_ids[c]] = assignment_json(alloc.by_cadet[c], instance);
  }
  j["allocation"] = std::move(body);
  if (trace) {
    json events = json::array();
    for (const TraceEvent& e : *trace) {
      json ev;
      ev["step"] = e.step;
      switch (e.kind) {
        case TraceEvent::Kind::Proposed: ev["kind"] = "proposed"; break;
        case TraceEvent::Kind::Held: ev["kind"] = "held"; break;
        case TraceEvent::Kind::Rejected: ev["kind"] = "rejected"; break;
      }
      ev["cadet"] = instance.cadet_ids[e.cadet];
      ev["branch"] = instance.branches[e.branch].id;
      ev["price_index"] = e.price;
      events.push_back(std::move(ev));
    }
    j["trace"] = std::move(events);
  }
  return j.dump(2) + "\n";
}

void save_allocation(const Allocation& alloc, const Instance& instance,
                     const std::string& path, const MechanismTrace* trace) {
  write_file(path, allocation_to_json(alloc, instance, trace));
}

Allocation parse_allocation_json(const std::string& text, const Instance& instance) {
  const json j = parse_text(text, "allocation");
  check_schema_version(j, "allocation");
  const json& body = need(j, "allocation", "allocation");
  if (!body.is_object()) {
    fail_field("allocation.allocation", "expected an object keyed by cadet id");
  }
  const auto cadet_index = index_ids(instance.cadet_ids);
  std::map<std::string, int> branch_index;
  for (std::size_t k = 0; k < instance.branches.size(); ++k) {
    branch_index[instance.branches[k].id] = static_cast<int>(k);
  }
  Allocation out(instance.num_cadets());
  std::vector<char> have(instance.num_cadets(), 0);
  for (auto it = body.begin(); it != body.end(); ++it) {
    const std::string where = "allocation['" + it.key() + "']";
    const int c = lookup(cadet_index, it.key(), "allocation", "cadet");
    have[c] = 1;
    if (it.value().is_string()) {
      if (it.value().get<std::string>() != "unmatched") {
        fail_field(where, "expected \"unmatched\" or a contract object");
      }
      out.by_cadet[c] = std::nullopt;
      continue;
    }
    const Branch b =
        lookup(branch_index, need_string(it.value(), "branch", where), where, "branch");
    const Price t = need_int(it.value(), "price_index", where);
    if (t < 0 || t >= instance.num_prices()) {
      fail_field(where, "price_index out of range");
    }
    out.by_cadet[c] = std::make_pair(b, t);
  }
  for (int c = 0; c < instance.num_cadets(); ++c) {
    if (!have[c]) {
      fail_field("allocation", "no entry for cadet '" + instance.cadet_ids[c] + "'");
    }
  }
  validate_allocation(out, instance);
  return out;
}

Allocation load_allocation(const std::string& path, const Instance& instance) {
  return parse_allocation_json(read_file(path), instance);
}

std::vector<QuasiStrategy> parse_strategies_json(const std::string& text,
                                                 const Instance& instance) {
  const json j = parse_text(text, "strategies");
  check_schema_version(j, "strategies");
  const json& body = need(j, "strategies", "strategies");
  if (!body.is_object()) {
    fail_field("strategies.strategies", "expected an object keyed by cadet id");
  }
  const auto cadet_index = index_ids(instance.cadet_ids);
  std::map<std::string, int> branch_index;
  for (std::size_t k = 0; k < instance.branches.size(); ++k) {
    branch_index[instance.branches[k].id] = static_cast<int>(k);
  }
  std::vector<QuasiStrategy> out(instance.num_cadets());
  for (auto& s : out) s.willing.assign(instance.num_branches(), 0);
  std::vector<char> have(instance.num_cadets(), 0);
  for (auto it = body.begin(); it != body.end(); ++it) {
    const std::string where = "strategies['" + it.key() + "']";
    const int c = lookup(cadet_index, it.key(), "strategies", "cadet");
    have[c] = 1;
    QuasiStrategy& s = out[c];
    const json& ranking = need(it.value(), "ranking", where);
    if (!ranking.is_array()) fail_field(where + ".ranking", "expected an array");
    for (const json& v : ranking) {
      if (!v.is_string()) fail_field(where + ".ranking", "entries must be branch ids");
      s.ranking.push_back(
          lookup(branch_index, v.get<std::string>(), where + ".ranking", "branch"));
    }
    const json& willing = need(it.value(), "willing", where);
    if (!willing.is_array()) fail_field(where + ".willing", "expected an array");
    for (const json& v : willing) {
      if (!v.is_string()) fail_field(where + ".willing", "entries must be branch ids");
      s.willing[lookup(branch_index, v.get<std::string>(), where + ".willing",
                       "branch")] = 1;
    }
    validate_strategy(s, instance.num_branches(), it.key());
  }
  for (int c = 0; c < instance.num_cadets(); ++c) {
    if (!have[c]) {
      fail_field("strategies", "no entry for cadet '" + instance.cadet_ids[c] + "'");
    }
  }
  return out;
}

std::vector<QuasiStrategy> load_strategies(const std::string& path,
                                           const Instance& instance) {
  return parse_strategies_json(read_file(path), instance);
}

// ---- synthetic cohorts ----

LoadedInstance generate_cohort(const CohortSpec& spec) {
  if (spec.num_cadets < 1) {
    throw std::invalid_argument("cohort: need at least one cadet");
  }
  if (spec.willingness_prob < 0.0 || spec.willingness_prob > 1.0) {
    throw std::invalid_argument("cohort: willingness_prob must lie in [0, 1]");
  }
  LoadedInstance loaded;
  Instance& inst = loaded.instance;
  inst.ladder.values = spec.prices;
  validate_ladder(inst.ladder);
  inst.branches = spec.branches.empty()
                      ? std::vector<BranchSpec>{{"b1", 100, 25}}
                      : spec.branches;
  const int nb = inst.num_branches();
  const int np = inst.num_prices();

  std::size_t width = 1;
  for (int v = spec.num_cadets; v >= 10; v /= 10) ++width;
  for (int c = 0; c < spec.num_cadets; ++c) {
    std::string digits = std::to_string(c + 1);
    if (digits.size() < width) {
      digits.insert(0, width - digits.size(), '0');
    }
    inst.cadet_ids.push_back("c" + digits);
  }

  std::mt19937_64 rng(spec.seed);

  // One merit list shared by every branch.
  std::vector<Cadet> merit(spec.num_cadets);
  for (int c = 0; c < spec.num_cadets; ++c) merit[c] = c;
  std::shuffle(merit.begin(), merit.end(), rng);
  PriorityOrder order = PriorityOrder::from_ranking(std::move(merit));
  for (int b = 0; b < nb; ++b) {
    inst.priorities.push_back(order);
    inst.policies.push_back(build_ultimate_policy(order, inst.ladder));
    inst.policy_specs.push_back(PolicySpec{});
  }

  std::vector<double> weights = spec.popularity;
  if (weights.empty()) weights.assign(nb, 1.0);
  if (static_cast<int>(weights.size()) != nb) {
    throw std::invalid_argument("cohort: popularity must cover every branch");
  }

  const int high = std::min(spec.max_list_len == 0 ? nb : spec.max_list_len, nb);
  const int low = std::min(std::max(spec.min_list_len, 1), high);
  std::uniform_int_distribution<int> len_dist(low, high);
  std::bernoulli_distribution willing(spec.willingness_prob);

  for (int c = 0; c < spec.num_cadets; ++c) {
    const int len = len_dist(rng);
    std::vector<double> w = weights;
    std::vector<Branch> chosen;
    for (int k = 0; k < len; ++k) {
      std::discrete_distribution<int> pick(w.begin(), w.end());
      const Branch b = pick(rng);
      chosen.push_back(b);
      w[b] = 0.0;
    }
    PreferenceRelation rel;
    for (Branch b : chosen) rel.acceptable.push_back({b, 0});
    for (Branch b : chosen) {
      for (Price t = 1; t < np; ++t) {
        if (!willing(rng)) break;
        int after = 0;
        for (std::size_t k = 0; k < rel.acceptable.size(); ++k) {
          if (rel.acceptable[k] == std::make_pair(b, static_cast<Price>(t - 1))) {
            after = static_cast<int>(k) + 1;
            break;
          }
        }
        std::uniform_int_distribution<int> pos(after,
                                               static_cast<int>(rel.acceptable.size()));
        rel.acceptable.insert(rel.acceptable.begin() + pos(rng), {b, t});
      }
    }
    validate_preference(rel, nb, np, inst.cadet_ids[c]);
    loaded.preferences.push_back(std::move(rel));
  }
  validate_instance(inst);
  return loaded;
}

QuasiStrategy truthful_quasi_strategy(const PreferenceRelation& pref,
                                      int num_branches) {
  QuasiStrategy s;
  s.willing.assign(num_branches, 0);
  for (const auto& [b, t] : pref.acceptable) {
    if (t == 0) {
      s.ranking.push_back(b);
    } else {
      s.willing[b] = 1;
    }
  }
  return s;
}

// ---- sweeps ----

namespace {

std::vector<std::vector<Cadet>> priority_thirds(const PriorityOrder& pi) {
  const int n = pi.num_cadets();
  const int cut1 = n / 3;
  const int cut2 = 2 * n / 3;
  std::vector<std::vector<Cadet>> tiers;
  auto push = [&](int from, int to) {
    if (from < to) {
      tiers.emplace_back(pi.ranking.begin() + from, pi.ranking.begin() + to);
    }
  };
  push(0, cut1);
  push(cut1, cut2);
  push(cut2, n);
  return tiers;
}

PriceResponsivenessPolicy sweep_policy(const std::string& name,
                                       const PriorityOrder& pi,
                                       const PriceLadder& ladder) {
  if (name == "ultimate") return build_ultimate_policy(pi, ladder);
  TierSpec spec;
  spec.tiers = priority_thirds(pi);
  if (name == "tiered2020") {
    spec.scopes.assign(spec.tiers.size(), JumpScope::WithinTier);
  } else if (name == "tiered2021") {
    spec.scopes.assign(spec.tiers.size(), JumpScope::OverAll);
    spec.scopes.back() = JumpScope::WithinTier;
  } else {
    throw std::invalid_argument(
        "unknown sweep policy '" + name +
        "' (expected ultimate, tiered2020 or tiered2021)");
  }
  return build_tiered_policy(pi, spec, ladder);
}

}  // namespace

std::vector<SweepRow> sweep_bradso(const LoadedInstance& base,
                                   const std::vector<std::string>& policies,
                                   const std::vector<double>& cap_fractions) {
  std::vector<SweepRow> rows;
  for (const std::string& policy : policies) {
    for (double f : cap_fractions) {
      Instance inst = base.instance;
      for (int b = 0; b < inst.num_branches(); ++b) {
        int flex = static_cast<int>(f * inst.branches[b].q_total + 0.5);
        flex = std::clamp(flex, 0, inst.branches[b].q_total);
        inst.branches[b].q_flex = flex;
        inst.policies[b] = sweep_policy(policy, inst.priorities[b], inst.ladder);
      }
      Allocation alloc = mpco_allocation(inst, base.preferences);
      const int unmatched = alloc.count_unmatched();
      int total_charged = 0;
      int total_assigned = 0;
      for (int b = 0; b < inst.num_branches(); ++b) {
        SweepRow row;
        row.policy = policy;
        row.cap_fraction = f;
        row.branch = inst.branches[b].id;
        row.charged = alloc.count_increased_at_branch(b);
        row.assigned = alloc.count_at_branch(b);
        row.unmatched = unmatched;
        total_charged += row.charged;
        total_assigned += row.assigned;
        rows.push_back(std::move(row));
      }
      if (inst.num_branches() >= 2) {
        SweepRow all;
        all.policy = policy;
        all.cap_fraction = f;
        all.branch = "all";
        all.charged = total_charged;
        all.assigned = total_assigned;
        all.unmatched = unmatched;
        rows.push_back(std::move(all));
      }
    }
  }
  return rows;
}

std::string sweep_to_csv(const std::vector<SweepRow>& rows) {
  std::string out = "policy,cap_fraction,branch,charged,assigned,unmatched\n";
  for (const SweepRow& r : rows) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.2f", r.cap_fraction);
    out += r.policy + "," + buf + "," + r.branch + "," +
           std::to_string(r.charged) + "," + std::to_string(r.assigned) + "," +
           std::to_string(r.unmatched) + "\n";
  }
  return out;
}

// ---- policy grids ----

std::vector<std::vector<std::vector<Cadet>>> tier_cuts(const PriorityOrder& pi,
                                                       int max_tiers) {
  std::vector<std::vector<std::vector<Cadet>>> out;
  const int n = pi.num_cadets();
  if (n == 0 || max_tiers < 1) return out;
  // Blocks are consecutive runs of the baseline ranking; a layout with k
  // parts is a set of k-1 strictly increasing cut indices in [1, n-1].
  std::vector<int> cuts;
  auto emit = [&]() {
    std::vector<std::vector<Cadet>> layout;
    int from = 0;
    for (int cut : cuts) {
      layout.emplace_back(pi.ranking.begin() + from, pi.ranking.begin() + cut);
      from = cut;
    }
    layout.emplace_back(pi.ranking.begin() + from, pi.ranking.end());
    out.push_back(std::move(layout));
  };
  for (int parts = 1; parts <= std::min(max_tiers, n); ++parts) {
    auto walk = [&](auto&& self, int idx, int from) -> void {
      if (idx == parts - 1) {
        emit();
        return;
      }
      for (int cut = from; cut <= n - (parts - 1 - idx); ++cut) {
        cuts.push_back(cut);
        self(self, idx + 1, cut + 1);
        cuts.pop_back();
      }
    };
    walk(walk, 0, 1);
  }
  return out;
}

std::vector<PriceResponsivenessPolicy> policy_grid(const PriorityOrder& pi,
                                                   const PriceLadder& ladder,
                                                   int max_tiers) {
  std::vector<PriceResponsivenessPolicy> out;
  std::set<std::vector<std::pair<Cadet, Price>>> seen;
  auto add = [&](PriceResponsivenessPolicy p) {
    if (seen.insert(p.order).second) out.push_back(std::move(p));
  };
  add(build_ultimate_policy(pi, ladder));
  for (const auto& layout : tier_cuts(pi, max_tiers)) {
    const int k = static_cast<int>(layout.size());
    for (int mask = 0; mask < (1 << k); ++mask) {
      TierSpec spec;
      spec.tiers = layout;
      for (int t = 0; t < k; ++t) {
        spec.scopes.push_back((mask >> t) & 1 ? JumpScope::OverAll
                                              : JumpScope::WithinTier);
      }
      try {
        add(build_tiered_policy(pi, spec, ladder));
      } catch (const std::invalid_argument&) {
        // scope combination admits no transitive order; skip it
      }
    }
  }
  return out;
}

// ---- verification suites ----

namespace {

constexpr std::size_t kMaxFailures = 25;

void note_failure(SuiteResult& r, std::string what) {
  r.pass = false;
  if (r.failures.size() < kMaxFailures) r.failures.push_back(std::move(what));
}

PriorityOrder identity_order(int n) {
  std::vector<Cadet> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return PriorityOrder::from_ranking(std::move(v));
}

std::vector<PriorityOrder> all_priority_orders(int n) {
  std::vector<Cadet> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  std::vector<PriorityOrder> out;
  do {
    out.push_back(PriorityOrder::from_ranking(v));
  } while (std::next_permutation(v.begin(), v.end()));
  return out;
}

PriceLadder grid_ladder(int np) {
  PriceLadder ladder;
  for (int t = 0; t < np; ++t) ladder.values.push_back(3.0 * t);
  return ladder;
}

Instance grid_instance(int n, const PriceLadder& ladder,
                       const std::vector<std::pair<int, int>>& caps,
                       const std::vector<PriorityOrder>& priorities,
                       const std::vector<PriceResponsivenessPolicy>& policies) {
  Instance inst;
  for (int c = 0; c < n; ++c) inst.cadet_ids.push_back("c" + std::to_string(c + 1));
  inst.ladder = ladder;
  for (std::size_t b = 0; b < caps.size(); ++b) {
    BranchSpec spec;
    spec.id = "b" + std::to_string(b + 1);
    spec.q_total = caps[b].first + caps[b].second;
    spec.q_flex = caps[b].second;
    inst.branches.push_back(spec);
  }
  inst.priorities = priorities;
  inst.policies = policies;
  inst.policy_specs.assign(caps.size(), PolicySpec{});
  return inst;
}

// All (q_base, q_flex) pairs with q_base + q_flex <= max_cap.
std::vector<std::pair<int, int>> cap_pairs(int max_cap) {
  std::vector<std::pair<int, int>> out;
  for (int q0 = 0; q0 <= max_cap; ++q0) {
    for (int qf = 0; q0 + qf <= max_cap; ++qf) out.push_back({q0, qf});
  }
  return out;
}

bool advance_digits(std::vector<int>& digits, int radix) {
  for (int& x : digits) {
    if (++x < radix) return true;
    x = 0;
  }
  return false;
}

std::string profile_tag(const std::vector<int>& digits) {
  std::string s = "reports";
  for (int d : digits) s += " " + std::to_string(d);
  return s;
}

std::string econ_tag(const Instance& inst) {
  std::string s = "caps";
  for (const BranchSpec& b : inst.branches) {
    s += " (" + std::to_string(b.q_base()) + "+" + std::to_string(b.q_flex) + ")";
  }
  return s;
}

SuiteResult suite_phi_mp_equivalence(const SuiteOptions& opts) {
  SuiteResult r{"phi-mp-equivalence", true, 0, {}};
  const PriceLadder ladder = grid_ladder(2);
  const auto domain = enumerate_preferences(1, 2);
  for (int n = 1; n <= std::min(opts.max_cadets, 5); ++n) {
    const PriorityOrder pi = identity_order(n);
    const auto policies = policy_grid(pi, ladder, 3);
    for (const auto& caps : cap_pairs(opts.max_cap)) {
      for (std::size_t pk = 0; pk < policies.size(); ++pk) {
        Instance inst = grid_instance(n, ladder, {caps}, {pi}, {policies[pk]});
        std::vector<int> digits(n, 0);
        std::vector<PreferenceRelation> prefs(n, domain[0]);
        do {
          for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
          ++r.cases;
          if (phi_mp(inst, prefs) != mpco_allocation(inst, prefs)) {
            note_failure(r, "n=" + std::to_string(n) + " policy#" +
                                std::to_string(pk) + " " + econ_tag(inst) +
                                " " + profile_tag(digits) +
                                ": sequential procedure disagrees with the "
                                "cumulative offer outcome");
          }
        } while (advance_digits(digits, static_cast<int>(domain.size())));
      }
    }
  }
  return r;
}

SuiteResult suite_axiom_grid(const SuiteOptions& opts) {
  SuiteResult r{"axiom-grid", true, 0, {}};
  auto scan = [&](const Instance& inst,
                  const std::vector<PreferenceRelation>& domain,
                  const std::string& tag) {
    const int n = inst.num_cadets();
    std::vector<int> digits(n, 0);
    std::vector<PreferenceRelation> prefs(n, domain[0]);
    do {
      for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
      ++r.cases;
      Allocation a = mpco_allocation(inst, prefs);
      auto violations = check_allocation_axioms(a, prefs, inst);
      if (!violations.empty()) {
        note_failure(r, tag + " " + profile_tag(digits) + ": " +
                            violations.front().axiom + " (" +
                            violations.front().narrative + ")");
      }
    } while (advance_digits(digits, static_cast<int>(domain.size())));
  };

  {  // one branch, two prices
    const int n = std::min(opts.max_cadets, 4);
    const PriceLadder ladder = grid_ladder(2);
    const auto domain = enumerate_preferences(1, 2);
    const PriorityOrder pi = identity_order(n);
    for (const auto& pol : policy_grid(pi, ladder, 3)) {
      for (const auto& caps : cap_pairs(opts.max_cap)) {
        Instance inst = grid_instance(n, ladder, {caps}, {pi}, {pol});
        scan(inst, domain, "one-branch " + econ_tag(inst));
      }
    }
  }
  if (opts.max_branches >= 2) {  // two branches, one price
    const int n = std::min(opts.max_cadets, 3);
    const PriceLadder ladder = grid_ladder(1);
    const auto domain = enumerate_preferences(2, 1);
    const PriorityOrder pi0 = identity_order(n);
    const auto pol0 = build_ultimate_policy(pi0, ladder);
    for (const PriorityOrder& pi1 : all_priority_orders(n)) {
      const auto pol1 = build_ultimate_policy(pi1, ladder);
      for (const auto& caps0 : cap_pairs(opts.max_cap)) {
        if (caps0.second != 0) continue;  // one price: no flexible positions
        for (const auto& caps1 : cap_pairs(opts.max_cap)) {
          if (caps1.second != 0) continue;
          Instance inst = grid_instance(n, ladder, {caps0, caps1}, {pi0, pi1},
                                        {pol0, pol1});
          scan(inst, domain, "one-price " + econ_tag(inst));
        }
      }
    }
  }
  if (opts.max_branches >= 2 && opts.max_prices >= 2) {  // the full cell
    const int n = std::min(opts.max_cadets, 3);
    const PriceLadder ladder = grid_ladder(2);
    const auto domain = enumerate_preferences(2, 2);
    const PriorityOrder pi0 = identity_order(n);
    const auto pols0 = policy_grid(pi0, ladder, 3);
    for (const PriorityOrder& pi1 : all_priority_orders(n)) {
      const auto pols1 = policy_grid(pi1, ladder, 3);
      for (const auto& pol0 : pols0) {
        for (const auto& pol1 : pols1) {
          for (const auto& caps0 : cap_pairs(opts.max_cap)) {
            for (const auto& caps1 : cap_pairs(opts.max_cap)) {
              Instance inst = grid_instance(n, ladder, {caps0, caps1},
                                            {pi0, pi1}, {pol0, pol1});
              scan(inst, domain, "two-branch " + econ_tag(inst));
            }
          }
        }
      }
    }
  }
  return r;
}

SuiteResult suite_ne_equivalence(const SuiteOptions& opts) {
  SuiteResult r{"ne-equivalence", true, 0, {}};
  const PriceLadder ladder = grid_ladder(2);
  const auto domain = enumerate_preferences(1, 2);
  const int d = static_cast<int>(domain.size());
  std::vector<QuasiStrategy> actions;
  for (int a = 0; a < 3; ++a) actions.push_back(single_branch_message(a, 1));

  for (int n = 1; n <= std::min(opts.max_cadets, 4); ++n) {
    const PriorityOrder pi = identity_order(n);
    // Rank of each outcome code (0 out, 1 base, 2 increased) per relation.
    std::vector<std::array<int, 3>> rank(d);
    for (int k = 0; k < d; ++k) {
      rank[k][0] = domain[k].unmatched_rank();
      rank[k][1] = domain[k].rank_of(std::make_pair(0, 0));
      rank[k][2] = domain[k].rank_of(std::make_pair(0, 1));
    }
    for (const auto& pol : policy_grid(pi, ladder, 3)) {
      for (const auto& caps : cap_pairs(opts.max_cap)) {
        Instance inst = grid_instance(n, ladder, {caps}, {pi}, {pol});
        OutcomeTable table =
            build_quasi_outcome_table(usma2020, inst, actions, 1u << 20);
        std::vector<std::uint64_t> stride(n);
        std::uint64_t s = 1;
        for (int i = 0; i < n; ++i) {
          stride[i] = s;
          s *= 3;
        }
        const std::uint64_t action_profiles = table.num_profiles();

        std::vector<int> digits(n, 0);
        std::vector<PreferenceRelation> prefs(n, domain[0]);
        do {
          for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
          ++r.cases;
          const Allocation target = phi_mp(inst, prefs);

          bool any_equilibrium = false;
          bool all_match = true;
          std::vector<int> action(n, 0);
          for (std::uint64_t p = 0; p < action_profiles; ++p) {
            bool stable = true;
            for (int i = 0; i < n && stable; ++i) {
              const int mine = rank[digits[i]][table.code_at(p, i)];
              for (int m = 0; m < 3 && stable; ++m) {
                if (m == action[i]) continue;
                const std::uint64_t q =
                    p + (static_cast<std::uint64_t>(m) - action[i]) * stride[i];
                if (rank[digits[i]][table.code_at(q, i)] < mine) stable = false;
              }
            }
            if (stable) {
              any_equilibrium = true;
              if (table.allocation_at(p) != target) all_match = false;
            }
            for (int i = 0; i < n; ++i) {
              if (++action[i] < 3) break;
              action[i] = 0;
            }
          }
          if (!any_equilibrium || !all_match) {
            note_failure(
                r, "n=" + std::to_string(n) + " " + econ_tag(inst) + " " +
                       profile_tag(digits) +
                       (any_equilibrium
                            ? ": an equilibrium outcome differs from the "
                              "direct outcome"
                            : ": no pure equilibrium exists"));
          }
        } while (advance_digits(digits, d));
      }
    }
  }
  return r;
}

SuiteResult suite_independence(const SuiteOptions& opts) {
  SuiteResult r{"independence", true, 0, {}};
  struct Subject {
    CounterexampleKind kind;
    const char* name;
    const char* breaks;  // the single axiom the mechanism gives up
  };
  const Subject subjects[] = {
      {CounterexampleKind::DropIr, "drop-ir", "individual-rationality"},
      {CounterexampleKind::Empty, "empty", "non-wastefulness"},
      {CounterexampleKind::DaAsDirect, "da-as-direct", "enforcement"},
      {CounterexampleKind::Psi, "psi", "no-priority-reversal"},
      {CounterexampleKind::PriceBump, "price-bump", "strategy-proofness"},
  };

  for (const Subject& subject : subjects) {
    DirectMechanism mech = [&subject](const Instance& inst,
                                      const std::vector<PreferenceRelation>& p) {
      return counterexample_mechanism(subject.kind, inst, p, 0);
    };

    // psi and price-bump live in the single-branch setting of the
    // characterization; the others get a two-branch family as well.
    std::vector<Instance> economies;
    std::vector<std::vector<PreferenceRelation>> domains;
    const bool single_only = subject.kind == CounterexampleKind::Psi ||
                             subject.kind == CounterexampleKind::PriceBump;
    {
      const int n = std::min(opts.max_cadets, 4);
      const PriceLadder ladder = grid_ladder(2);
      const PriorityOrder pi = identity_order(n);
      const auto ultimate = build_ultimate_policy(pi, ladder);
      for (const auto& caps : cap_pairs(std::max(opts.max_cap, 2))) {
        economies.push_back(grid_instance(n, ladder, {caps}, {pi}, {ultimate}));
        domains.push_back(enumerate_preferences(1, 2));
      }
    }
    if (!single_only && opts.max_branches >= 2) {
      const int n = std::min(opts.max_cadets, 3);
      const PriceLadder ladder = grid_ladder(2);
      const auto perms = all_priority_orders(n);
      const PriorityOrder pi0 = identity_order(n);
      const PriorityOrder pi1 = perms.back();  // fully reversed
      const auto pol0 = build_ultimate_policy(pi0, ladder);
      const auto pol1 = build_ultimate_policy(pi1, ladder);
      for (const auto& caps0 : cap_pairs(opts.max_cap)) {
        for (const auto& caps1 : cap_pairs(opts.max_cap)) {
          economies.push_back(grid_instance(n, ladder, {caps0, caps1},
                                            {pi0, pi1}, {pol0, pol1}));
          domains.push_back(enumerate_preferences(2, 2));
        }
      }
    }

    std::map<std::string, std::uint64_t> broken;
    for (std::size_t e = 0; e < economies.size(); ++e) {
      const Instance& inst = economies[e];
      const auto& domain = domains[e];
      const int n = inst.num_cadets();
      std::vector<int> digits(n, 0);
      std::vector<PreferenceRelation> prefs(n, domain[0]);
      do {
        for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
        ++r.cases;
        Allocation a = mech(inst, prefs);
        for (const Violation& v : check_allocation_axioms(a, prefs, inst)) {
          const std::string axiom =
              (v.axiom == "reduced-claim" || v.axiom == "elevated-claim")
                  ? "enforcement"
                  : v.axiom;
          ++broken[axiom];
          if (axiom != subject.breaks) {
            note_failure(r, std::string(subject.name) + " " + econ_tag(inst) +
                                " " + profile_tag(digits) +
                                ": unexpected violation of " + axiom);
          }
        }
      } while (advance_digits(digits, static_cast<int>(domain.size())));

      auto sp = check_strategy_proofness(mech, inst, domain, 1u << 22, true);
      if (!sp.empty()) ++broken["strategy-proofness"];
      if (!sp.empty() && std::string("strategy-proofness") != subject.breaks) {
        note_failure(r, std::string(subject.name) + " " + econ_tag(inst) +
                            ": unexpected violation of strategy-proofness (" +
                            sp.front().narrative + ")");
      }
    }
    if (broken[subject.breaks] == 0) {
      note_failure(r, std::string(subject.name) + ": expected to violate " +
                          subject.breaks + " somewhere in the family, but "
                          "never did");
    }
  }
  return r;
}

SuiteResult suite_uniqueness(const SuiteOptions& opts) {
  SuiteResult r{"uniqueness", true, 0, {}};
  auto run = [&](const Instance& inst, const std::vector<PreferenceRelation>& dom,
                 const std::string& tag) {
    UniquenessReport rep = verify_uniqueness(inst, dom, 1u << 22);
    r.cases += rep.profiles_checked;
    if (!rep.ok()) {
      std::string msg = tag + ": ";
      msg += rep.axioms_pass ? "" : "candidate fails an axiom; ";
      msg += rep.unique ? "" : "an alternative allocation survives; ";
      if (!rep.failures.empty()) msg += rep.failures.front();
      note_failure(r, msg);
    }
  };

  {  // single branch, two prices
    const int n = std::min(opts.max_cadets, 3);
    const PriceLadder ladder = grid_ladder(2);
    const auto domain = enumerate_preferences(1, 2);
    const PriorityOrder pi = identity_order(n);
    for (const auto& pol : policy_grid(pi, ladder, 3)) {
      for (const auto& caps : cap_pairs(opts.max_cap)) {
        Instance inst = grid_instance(n, ladder, {caps}, {pi}, {pol});
        run(inst, domain, "one-branch " + econ_tag(inst));
      }
    }
  }
  if (opts.max_branches >= 2 && opts.max_prices >= 2) {
    const int n = std::min(opts.max_cadets, 2);
    const PriceLadder ladder = grid_ladder(2);
    const auto domain = enumerate_preferences(2, 2);
    const PriorityOrder pi0 = identity_order(n);
    for (const PriorityOrder& pi1 : all_priority_orders(n)) {
      for (const auto& pol0 : policy_grid(pi0, ladder, 3)) {
        for (const auto& pol1 : policy_grid(pi1, ladder, 3)) {
          for (const auto& caps0 : cap_pairs(opts.max_cap)) {
            for (const auto& caps1 : cap_pairs(opts.max_cap)) {
              Instance inst = grid_instance(n, ladder, {caps0, caps1},
                                            {pi0, pi1}, {pol0, pol1});
              run(inst, domain, "two-branch " + econ_tag(inst));
            }
          }
        }
      }
    }
  }
  return r;
}

SuiteResult suite_da_reduction(const SuiteOptions& opts) {
  SuiteResult r{"da-reduction", true, 0, {}};
  auto scan = [&](const Instance& inst,
                  const std::vector<PreferenceRelation>& domain,
                  const std::string& tag) {
    const int n = inst.num_cadets();
    std::vector<int> digits(n, 0);
    std::vector<PreferenceRelation> prefs(n, domain[0]);
    do {
      for (int i = 0; i < n; ++i) prefs[i] = domain[digits[i]];
      ++r.cases;
      Allocation a = mpco_allocation(inst, prefs);
      std::vector<std::vector<Branch>> branch_prefs(n);
      for (int i = 0; i < n; ++i) {
        for (const auto& [b, t] : prefs[i].acceptable) {
          if (t == 0) branch_prefs[i].push_back(b);
        }
      }
      auto mu = da(inst, branch_prefs, inst.priorities);
      bool same = true;
      for (int i = 0; i < n && same; ++i) {
        const Assignment& x = a.by_cadet[i];
        if (mu[i].has_value() != x.has_value()) same = false;
        else if (mu[i] && (x->first != *mu[i] || x->second != 0)) same = false;
      }
      if (!same) {
        note_failure(r, tag + " " + profile_tag(digits) +
                            ": cumulative offers disagree with deferred "
                            "acceptance on a single-price economy");
      }
    } while (advance_digits(digits, static_cast<int>(domain.size())));
  };

  {
    const int n = std::min(opts.max_cadets, 4);
    const PriceLadder ladder = grid_ladder(1);
    const auto domain = enumerate_preferences(1, 1);
    const PriorityOrder pi = identity_order(n);
    const auto pol = build_ultimate_policy(pi, ladder);
    for (const auto& caps : cap_pairs(opts.max_cap)) {
      if (caps.second != 0) continue;
      Instance inst = grid_instance(n, ladder, {caps}, {pi}, {pol});
      scan(inst, domain, "one-branch " + econ_tag(inst));
    }
  }
  if (opts.max_branches >= 2) {
    const int n = std::min(opts.max_cadets, 3);
    const PriceLadder ladder = grid_ladder(1);
    const auto domain = enumerate_preferences(2, 1);
    const PriorityOrder pi0 = identity_order(n);
    const auto pol0 = build_ultimate_policy(pi0, ladder);
    for (const PriorityOrder& pi1 : all_priority_orders(n)) {
      const auto pol1 = build_ultimate_policy(pi1, ladder);
      for (const auto& caps0 : cap_pairs(opts.max_cap)) {
        if (caps0.second != 0) continue;
        for (const auto& caps1 : cap_pairs(opts.max_cap)) {
          if (caps1.second != 0) continue;
          Instance inst = grid_instance(n, ladder, {caps0, caps1}, {pi0, pi1},
                                        {pol0, pol1});
          scan(inst, domain, "two-branch " + econ_tag(inst));
        }
      }
    }
  }
  return r;
}

SuiteResult suite_choice_monotonicity(const SuiteOptions& opts) {
  SuiteResult r{"choice-monotonicity", true, 0, {}};
  std::mt19937_64 rng(opts.seed);
  for (int iter = 0; iter < opts.num_instances; ++iter) {
    const int n = 1 + static_cast<int>(rng() % std::max(opts.max_cadets, 1));
    const int np = 1 + static_cast<int>(rng() % std::max(opts.max_prices, 1));
    const PriceLadder ladder = grid_ladder(np);
    std::vector<Cadet> perm(n);
    for (int i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    const PriorityOrder pi = PriorityOrder::from_ranking(perm);
    const auto grid = policy_grid(pi, ladder, 3);
    const auto& pol = grid[rng() % grid.size()];
    const int q0 = static_cast<int>(rng() % (opts.max_cap + 1));
    const int qf = static_cast<int>(rng() % (opts.max_cap + 1 - q0));
    BranchSpec branch{"b1", q0 + qf, qf};

    std::vector<Contract> big;
    for (Cadet i = 0; i < n; ++i) {
      for (Price t = 0; t < np; ++t) {
        if (rng() % 2) big.push_back({i, 0, t});
      }
    }
    std::vector<Contract> small;
    for (const Contract& c : big) {
      if (rng() % 2) small.push_back(c);
    }

    ChoiceResult from_big = cmp_choice(branch, pi, pol, big, 0);
    ChoiceResult from_small = cmp_choice(branch, pi, pol, small, 0);
    ++r.cases;

    const auto chosen_big = from_big.selected();
    const auto chosen_small = from_small.selected();
    if (chosen_small.size() > chosen_big.size()) {
      note_failure(r, "iteration " + std::to_string(iter) +
                          ": selection shrank when the offer pool grew");
    }
    for (const Contract& x : from_small.rejected) {
      if (std::find(chosen_big.begin(), chosen_big.end(), x) != chosen_big.end()) {
        note_failure(r, "iteration " + std::to_string(iter) +
                            ": a contract rejected from a subset was chosen "
                            "from the superset");
      }
    }
  }
  return r;
}

SuiteResult suite_order_independence(const SuiteOptions& opts) {
  SuiteResult r{"order-independence", true, 0, {}};
  std::mt19937_64 rng(opts.seed);
  std::map<std::pair<int, int>, std::vector<PreferenceRelation>> domains;
  for (int iter = 0; iter < opts.num_instances; ++iter) {
    const int n = 2 + static_cast<int>(rng() % std::max(opts.max_cadets - 1, 1));
    const int nb = 1 + static_cast<int>(rng() % std::max(opts.max_branches, 1));
    const int np = 1 + static_cast<int>(rng() % std::max(opts.max_prices, 1));
    const PriceLadder ladder = grid_ladder(np);
    auto& domain = domains[{nb, np}];
    if (domain.empty()) domain = enumerate_preferences(nb, np);

    std::vector<std::pair<int, int>> caps;
    std::vector<PriorityOrder> priorities;
    std::vector<PriceResponsivenessPolicy> policies;
    for (int b = 0; b < nb; ++b) {
      const int q0 = static_cast<int>(rng() % (opts.max_cap + 1));
      const int qf = static_cast<int>(rng() % (opts.max_cap + 1 - q0));
      caps.push_back({q0, qf});
      std::vector<Cadet> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      priorities.push_back(PriorityOrder::from_ranking(perm));
      const auto grid = policy_grid(priorities.back(), ladder, 3);
      policies.push_back(grid[rng() % grid.size()]);
    }
    Instance inst = grid_instance(n, ladder, caps, priorities, policies);
    std::vector<PreferenceRelation> prefs;
    for (int i = 0; i < n; ++i) prefs.push_back(domain[rng() % domain.size()]);

    const Allocation baseline = mpco_allocation(inst, prefs);
    for (int k = 0; k < opts.num_orders; ++k) {
      std::vector<Cadet> perm(n);
      for (int i = 0; i < n; ++i) perm[i] = i;
      std::shuffle(perm.begin(), perm.end(), rng);
      MpcoResult res = mpco(inst, prefs, PriorityOrder::from_ranking(perm));
      ++r.cases;
      if (res.allocation != baseline) {
        note_failure(r, "iteration " + std::to_string(iter) +
                            ": the outcome depends on the proposal order");
      }
    }

    // The one-at-a-time application procedure and its simultaneous variant
    // must agree wherever the former is defined.
    if (np == 2) {
      std::vector<PriceResponsivenessPolicy> ultimates;
      for (int b = 0; b < nb; ++b) {
        ultimates.push_back(build_ultimate_policy(priorities[b], ladder));
      }
      Instance ult = grid_instance(n, ladder, caps, priorities, ultimates);
      std::vector<QuasiStrategy> strategies;
      for (int i = 0; i < n; ++i) {
        QuasiStrategy s;
        s.willing.assign(nb, 0);
        std::vector<Branch> order(nb);
        for (int b = 0; b < nb; ++b) order[b] = b;
        std::shuffle(order.begin(), order.end(), rng);
        const int len = static_cast<int>(rng() % (nb + 1));
        s.ranking.assign(order.begin(), order.begin() + len);
        for (int b = 0; b < nb; ++b) s.willing[b] = rng() % 2;
        strategies.push_back(std::move(s));
      }
      ++r.cases;
      if (usma2006(ult, strategies) != usma2006_simultaneous(ult, strategies)) {
        note_failure(r, "iteration " + std::to_string(iter) +
                            ": sequential and simultaneous application "
                            "procedures disagree");
      }
    }
  }
  return r;
}

}  // namespace

std::vector<std::string> verify_suite_names() {
  return {"phi-mp-equivalence", "axiom-grid",   "ne-equivalence",
          "independence",       "uniqueness",   "da-reduction",
          "choice-monotonicity", "order-independence"};
}

SuiteResult run_verify_suite(const std::string& name, const SuiteOptions& opts) {
  if (name == "phi-mp-equivalence") return suite_phi_mp_equivalence(opts);
  if (name == "axiom-grid") return suite_axiom_grid(opts);
  if (name == "ne-equivalence") return suite_ne_equivalence(opts);
  if (name == "independence") return suite_independence(opts);
  if (name == "uniqueness") return suite_uniqueness(opts);
  if (name == "da-reduction") return suite_da_reduction(opts);
  if (name == "choice-monotonicity") return suite_choice_monotonicity(opts);
  if (name == "order-independence") return suite_order_independence(opts);
  throw std::invalid_argument("unknown suite '" + name + "'");
}

// ---- command line ----

namespace {

std::string rational_string(const Rational& r) {
  if (r.denominator() == 1) return std::to_string(r.numerator());
  return std::to_string(r.numerator()) + "/" + std::to_string(r.denominator());
}

Rational parse_rational(const json& v, const std::string& where) {
  if (v.is_number_integer()) return Rational(v.get<long long>());
  if (v.is_string()) {
    const std::string s = v.get<std::string>();
    const auto slash = s.find('/');
    try {
      if (slash == std::string::npos) return Rational(std::stoll(s));
      return Rational(std::stoll(s.substr(0, slash)),
                      std::stoll(s.substr(slash + 1)));
    } catch (const std::exception&) {
      fail_field(where, "cannot parse '" + s + "' as a rational");
    }
  }
  fail_field(where, "expected an integer or a \"p/q\" string (floats lose "
                    "exactness)");
}

void emit(const std::string& text, const std::string& out_path) {
  if (out_path.empty()) {
    std::cout << text;
  } else {
    write_file(out_path, text);
  }
}

PriorityOrder parse_order_option(const std::string& csv, const Instance& inst) {
  const auto cadet_index = index_ids(inst.cadet_ids);
  std::vector<Cadet> order;
  std::stringstream ss(csv);
  std::string id;
  while (std::getline(ss, id, ',')) {
    order.push_back(lookup(cadet_index, id, "--proposal-order", "cadet"));
  }
  if (static_cast<int>(order.size()) != inst.num_cadets()) {
    throw std::invalid_argument("--proposal-order: must list every cadet");
  }
  return PriorityOrder::from_ranking(std::move(order));
}

Branch parse_branch_option(const std::string& id, const Instance& inst) {
  if (id.empty()) return 0;
  for (int b = 0; b < inst.num_branches(); ++b) {
    if (inst.branches[b].id == id) return b;
  }
  throw std::invalid_argument("--target-branch: unknown branch id '" + id + "'");
}

json violations_json(const std::vector<Violation>& violations,
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

int cmd_run(const std::string& mechanism, const std::string& instance_path,
            const std::string& strategies_path, const std::string& out_path,
            bool trace, const std::string& order_csv,
            const std::string& target_branch) {
  LoadedInstance loaded = load_instance(instance_path);
  const Instance& inst = loaded.instance;

  auto need_strategies = [&]() {
    if (strategies_path.empty()) {
      throw std::invalid_argument("--strategies is required for " + mechanism);
    }
    return load_strategies(strategies_path, inst);
  };

  Allocation alloc;
  const MechanismTrace* trace_ptr = nullptr;
  MechanismTrace trace_data;
  if (mechanism == "mpco") {
    std::optional<PriorityOrder> order;
    if (!order_csv.empty()) order = parse_order_option(order_csv, inst);
    MpcoResult res = mpco(inst, loaded.preferences, order);
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
                                     parse_branch_option(target_branch, inst));
  } else {
    throw std::invalid_argument("unknown mechanism '" + mechanism + "'");
  }
  emit(allocation_to_json(alloc, inst, trace_ptr), out_path);
  return 0;
}

int cmd_audit(const std::string& instance_path, const std::string& alloc_path,
              const std::string& strategies_path, const std::string& out_path) {
  LoadedInstance loaded = load_instance(instance_path);
  const Instance& inst = loaded.instance;
  Allocation alloc = alloc_path.empty()
                         ? mpco_allocation(inst, loaded.preferences)
                         : load_allocation(alloc_path, inst);
  std::vector<Violation> violations =
      check_allocation_axioms(alloc, loaded.preferences, inst);
  if (!strategies_path.empty()) {
    auto strategies = load_strategies(strategies_path, inst);
    auto more =
        find_detectable_priority_reversals(strategies, alloc, inst.priorities);
    violations.insert(violations.end(), more.begin(), more.end());
  }
  json j;
  j["schema_version"] = 1;
  j["violations"] = violations_json(violations, inst);
  emit(j.dump(2) + "\n", out_path);
  return violations.empty() ? 0 : 1;
}

int cmd_equilibrium(const std::string& instance_path, const std::string& mode,
                    const std::string& space_name, const std::string& game_path,
                    const std::string& out_path) {
  LoadedInstance loaded = load_instance(instance_path);
  const Instance& inst = loaded.instance;
  json j;
  j["schema_version"] = 1;
  j["mode"] = mode;
  if (mode == "pure") {
    ActionSpace space;
    if (space_name == "willingness") {
      space = ActionSpace::Willingness;
    } else if (space_name == "full") {
      space = ActionSpace::Full;
    } else {
      throw std::invalid_argument("--action-space must be willingness or full");
    }
    j["action_space"] = space_name;
    PureNeResult res = enumerate_pure_ne(inst, loaded.preferences, space);
    const char* names[3] = {"out", "apply", "declare"};
    json eqs = json::array();
    for (std::size_t k = 0; k < res.equilibria.size(); ++k) {
      json eq;
      json actions;
      for (int i = 0; i < inst.num_cadets(); ++i) {
        actions[inst.cadet_ids[i]] = names[res.equilibria[k][i]];
      }
      eq["actions"] = std::move(actions);
      json body;
      for (int i = 0; i < inst.num_cadets(); ++i) {
        body[inst.cadet_ids[i]] =
            assignment_json(res.equilibrium_outcomes[k].by_cadet[i], inst);
      }
      eq["outcome"] = std::move(body);
      eqs.push_back(std::move(eq));
    }
    j["equilibria"] = std::move(eqs);
    json outs = json::array();
    for (const Allocation& a : res.distinct_outcomes) {
      json body;
      for (int i = 0; i < inst.num_cadets(); ++i) {
        body[inst.cadet_ids[i]] = assignment_json(a.by_cadet[i], inst);
      }
      outs.push_back(std::move(body));
    }
    j["distinct_outcomes"] = std::move(outs);
  } else if (mode == "bayesian") {
    if (game_path.empty()) {
      throw std::invalid_argument("--game is required in bayesian mode");
    }
    const json g = parse_text(read_file(game_path), "game");
    check_schema_version(g, "game");
    BayesianGame game;
    game.num_cadets = inst.num_cadets();
    const json& utils = need(g, "type_utils", "game");
    if (!utils.is_array() || utils.empty()) {
      fail_field("game.type_utils", "expected a nonempty array");
    }
    for (const json& u : utils) {
      if (!u.is_array() || u.size() != 3) {
        fail_field("game.type_utils",
                   "each type needs [unmatched, base, increased]");
      }
      game.type_utils.push_back({parse_rational(u[0], "game.type_utils"),
                                 parse_rational(u[1], "game.type_utils"),
                                 parse_rational(u[2], "game.type_utils")});
    }
    const json& probs = need(g, "type_probs", "game");
    if (!probs.is_array()) fail_field("game.type_probs", "expected an array");
    for (const json& p : probs) {
      game.type_probs.push_back(parse_rational(p, "game.type_probs"));
    }
    BayesianResult res = bayesian_equilibria(game, inst);
    j["profiles_scanned"] = res.profiles_scanned;
    json eqs = json::array();
    for (const BayesianEquilibrium& eq : res.equilibria) {
      json je;
      json declare;
      json utils_out;
      for (int i = 0; i < inst.num_cadets(); ++i) {
        declare[inst.cadet_ids[i]] = eq.declare[i];
        json per_type = json::array();
        for (const Rational& u : eq.interim_utils[i]) {
          per_type.push_back(rational_string(u));
        }
        utils_out[inst.cadet_ids[i]] = std::move(per_type);
      }
      je["declare"] = std::move(declare);
      je["interim_utils"] = std::move(utils_out);
      je["reversal_probability"] = rational_string(eq.reversal_probability);
      eqs.push_back(std::move(je));
    }
    j["equilibria"] = std::move(eqs);
  } else {
    throw std::invalid_argument("--mode must be pure or bayesian");
  }
  emit(j.dump(2) + "\n", out_path);
  return 0;
}

std::vector<double> parse_caps_range(const std::string& spec) {
  double start = 0, stop = 0, step = 0;
  if (std::sscanf(spec.c_str(), "%lf:%lf:%lf", &start, &stop, &step) != 3 ||
      step <= 0 || stop < start) {
    throw std::invalid_argument("--caps must look like start:stop:step");
  }
  std::vector<double> out;
  for (double f = start; f <= stop + 1e-9; f += step) out.push_back(f);
  return out;
}

int cmd_sweep(const std::string& instance_path, const std::string& caps_spec,
              const std::string& policies_csv, std::uint64_t seed, int cadets,
              const std::string& out_path) {
  LoadedInstance base;
  if (instance_path.empty()) {
    CohortSpec spec;
    spec.seed = seed;
    spec.num_cadets = cadets;
    spec.branches = {{"b1", cadets / 2, 0}};
    base = generate_cohort(spec);
  } else {
    base = load_instance(instance_path);
  }
  std::vector<std::string> policies;
  std::stringstream ss(policies_csv);
  std::string name;
  while (std::getline(ss, name, ',')) {
    if (!name.empty()) policies.push_back(name);
  }
  auto rows = sweep_bradso(base, policies, parse_caps_range(caps_spec));
  emit(sweep_to_csv(rows), out_path);
  return 0;
}

int cmd_verify(const std::string& suite, const SuiteOptions& opts) {
  std::vector<std::string> names;
  if (suite == "all") {
    names = verify_suite_names();
  } else {
    names.push_back(suite);
  }
  bool ok = true;
  for (const std::string& name : names) {
    SuiteResult res = run_verify_suite(name, opts);
    std::cout << "suite " << res.name << ": " << (res.pass ? "PASS" : "FAIL")
              << " (" << res.cases << " cases)\n";
    for (const std::string& f : res.failures) {
      std::cout << "  " << f << "\n";
    }
    ok = ok && res.pass;
  }
  return ok ? 0 : 1;
}

int cmd_gen(std::uint64_t seed, int cadets, int branches, int capacity,
            int flex, const std::string& prices_csv, double willingness,
            const std::string& out_path) {
  CohortSpec spec;
  spec.seed = seed;
  spec.num_cadets = cadets;
  spec.willingness_prob = willingness;
  spec.prices.clear();
  std::stringstream ss(prices_csv);
  std::string tok;
  while (std::getline(ss, tok, ',')) {
    spec.prices.push_back(std::stod(tok));
  }
  spec.branches.clear();
  for (int b = 0; b < branches; ++b) {
    spec.branches.push_back(
        {"b" + std::to_string(b + 1), capacity, std::min(flex, capacity)});
  }
  LoadedInstance cohort = generate_cohort(spec);
  emit(instance_to_json(cohort), out_path);
  return 0;
}

}  // namespace

int cli(int argc, char** argv) {
  CLI::App app{"cadet-branch matching: mechanisms, audits and experiments"};
  app.require_subcommand(1);

  // run
  auto* run = app.add_subcommand("run", "compute an allocation");
  std::string mechanism = "mpco", instance_path, strategies_path, out_path;
  std::string order_csv, target_branch;
  bool trace = false;
  run->add_option("--mechanism", mechanism,
                  "mpco, phi-mp, da, usma2006, usma2006-sim, usma2020, "
                  "drop-ir, empty, da-as-direct, psi, price-bump");
  run->add_option("--instance", instance_path, "instance JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  run->add_option("--strategies", strategies_path,
                  "strategies JSON file (quasi-direct mechanisms)");
  run->add_option("--out", out_path, "output path (default stdout)");
  run->add_flag("--trace", trace, "include the offer/hold/reject log");
  run->add_option("--proposal-order", order_csv,
                  "comma-separated cadet ids driving proposal order");
  run->add_option("--target-branch", target_branch,
                  "designated branch for psi and price-bump");

  // audit
  auto* audit = app.add_subcommand("audit", "check an allocation against the axioms");
  std::string audit_instance, audit_alloc, audit_strategies, audit_out;
  audit->add_option("--instance", audit_instance, "instance JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  audit->add_option("--allocation", audit_alloc,
                    "allocation JSON (default: run the cumulative-offer "
                    "mechanism)");
  audit->add_option("--strategies", audit_strategies,
                    "strategies JSON; adds the detectable-reversal audit");
  audit->add_option("--out", audit_out, "output path (default stdout)");

  // equilibrium
  auto* eq = app.add_subcommand("equilibrium", "equilibrium analysis of the "
                                               "one-branch application game");
  std::string eq_instance, eq_mode = "pure", eq_space = "willingness", eq_game,
              eq_out;
  eq->add_option("--instance", eq_instance, "instance JSON file")
      ->required()
      ->check(CLI::ExistingFile);
  eq->add_option("--mode", eq_mode, "pure or bayesian");
  eq->add_option("--action-space", eq_space, "willingness or full");
  eq->add_option("--game", eq_game, "type utilities/probabilities JSON");
  eq->add_option("--out", eq_out, "output path (default stdout)");

  // sweep
  auto* sweep = app.add_subcommand("sweep", "cap/policy sweep over a cohort");
  std::string sweep_instance, sweep_caps = "0:0.35:0.05";
  std::string sweep_policies = "ultimate,tiered2020,tiered2021", sweep_out;
  std::uint64_t sweep_seed = 42;
  int sweep_cadets = 200;
  sweep->add_option("--instance", sweep_instance,
                    "sweep an existing instance instead of a generated cohort");
  sweep->add_option("--caps", sweep_caps, "fraction range start:stop:step");
  sweep->add_option("--policies", sweep_policies, "comma-separated policy names");
  sweep->add_option("--seed", sweep_seed, "cohort seed");
  sweep->add_option("--cadets", sweep_cadets, "cohort size");
  sweep->add_option("--out", sweep_out, "output CSV path (default stdout)");

  // verify
  auto* verify = app.add_subcommand("verify", "run a verification suite");
  std::string suite;
  SuiteOptions opts;
  verify->add_option("--suite", suite, "suite name, or 'all'")->required();
  verify->add_option("--max-cadets", opts.max_cadets);
  verify->add_option("--max-branches", opts.max_branches);
  verify->add_option("--max-prices", opts.max_prices);
  verify->add_option("--max-cap", opts.max_cap);
  verify->add_option("--seed", opts.seed);
  verify->add_option("--instances", opts.num_instances);
  verify->add_option("--orders", opts.num_orders);

  // gen
  auto* gen = app.add_subcommand("gen", "generate a synthetic cohort instance");
  std::uint64_t gen_seed = 42;
  int gen_cadets = 200, gen_branches = 1, gen_capacity = 100, gen_flex = 25;
  std::string gen_prices = "0,3", gen_out;
  double gen_willingness = 0.5;
  gen->add_option("--seed", gen_seed);
  gen->add_option("--cadets", gen_cadets);
  gen->add_option("--branches", gen_branches);
  gen->add_option("--capacity", gen_capacity, "q_total per branch");
  gen->add_option("--flex", gen_flex, "q_flex per branch");
  gen->add_option("--prices", gen_prices, "comma-separated ladder values");
  gen->add_option("--willingness", gen_willingness,
                  "chance each listed branch is also acceptable dearer");
  gen->add_option("--out", gen_out, "output path (default stdout)");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (run->parsed()) {
      return cmd_run(mechanism, instance_path, strategies_path, out_path, trace,
                     order_csv, target_branch);
    }
    if (audit->parsed()) {
      return cmd_audit(audit_instance, audit_alloc, audit_strategies, audit_out);
    }
    if (eq->parsed()) {
      return cmd_equilibrium(eq_instance, eq_mode, eq_space, eq_game, eq_out);
    }
    if (sweep->parsed()) {
      return cmd_sweep(sweep_instance, sweep_caps, sweep_policies, sweep_seed,
                       sweep_cadets, sweep_out);
    }
    if (verify->parsed()) {
      return cmd_verify(suite, opts);
    }
    if (gen->parsed()) {
      return cmd_gen(gen_seed, gen_cadets, gen_branches, gen_capacity, gen_flex,
                     gen_prices, gen_willingness, gen_out);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}

}  // namespace cadetmatch
