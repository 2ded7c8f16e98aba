#pragma once

// Shared builders for the unit tests. Cadets are referred to by index; the
// fixture files use string ids and the loaders map between the two.

#include <initializer_list>
#include <string>
#include <utility>
#include <vector>

#include "cadetmatch/model.hpp"

namespace testutil {

using namespace cadetmatch;

inline PriceLadder ladder_of(std::initializer_list<double> values) {
  PriceLadder l;
  l.values = values;
  return l;
}

inline PriceLadder two_prices() { return ladder_of({0.0, 3.0}); }
inline PriceLadder one_price() { return ladder_of({0.0}); }

inline PriorityOrder order_of(std::vector<Cadet> best_first) {
  return PriorityOrder::from_ranking(std::move(best_first));
}

inline PriorityOrder identity_order(int n) {
  std::vector<Cadet> v(n);
  for (int i = 0; i < n; ++i) v[i] = i;
  return PriorityOrder::from_ranking(std::move(v));
}

inline PreferenceRelation rel(
    std::initializer_list<std::pair<Branch, Price>> pairs) {
  PreferenceRelation r;
  for (const auto& p : pairs) r.acceptable.push_back(p);
  return r;
}

// Single branch, ultimate policy, two prices unless told otherwise.
inline Instance one_branch(int n, int q_total, int q_flex,
                           std::vector<Cadet> ranking, int num_prices = 2) {
  Instance inst;
  for (int c = 0; c < n; ++c) inst.cadet_ids.push_back("c" + std::to_string(c + 1));
  for (int t = 0; t < num_prices; ++t) inst.ladder.values.push_back(3.0 * t);
  inst.branches.push_back({"b1", q_total, q_flex});
  inst.priorities.push_back(order_of(std::move(ranking)));
  inst.policies.push_back(build_ultimate_policy(inst.priorities[0], inst.ladder));
  inst.policy_specs.push_back({});
  return inst;
}

inline Instance multi_branch(int n, const PriceLadder& ladder,
                             std::vector<BranchSpec> branches,
                             std::vector<PriorityOrder> priorities,
                             std::vector<PriceResponsivenessPolicy> policies) {
  Instance inst;
  for (int c = 0; c < n; ++c) inst.cadet_ids.push_back("c" + std::to_string(c + 1));
  inst.ladder = ladder;
  inst.branches = std::move(branches);
  inst.priorities = std::move(priorities);
  inst.policies = std::move(policies);
  inst.policy_specs.assign(inst.branches.size(), {});
  return inst;
}

// Same, with every branch on the ultimate policy.
inline Instance multi_branch(int n, const PriceLadder& ladder,
                             std::vector<BranchSpec> branches,
                             std::vector<PriorityOrder> priorities) {
  std::vector<PriceResponsivenessPolicy> policies;
  policies.reserve(priorities.size());
  for (const auto& pi : priorities) {
    policies.push_back(build_ultimate_policy(pi, ladder));
  }
  return multi_branch(n, ladder, std::move(branches), std::move(priorities),
                      std::move(policies));
}

// The worked single-branch economy used across the mechanism tests:
// eight cadets, six positions of which three are flexible, ultimate policy,
// priority i6 > i5 > i4 > i3 > i2 > i1 > j1 > j2, and the four cadets
// i1, i3, i5, j1 willing to pay the increased price.
// Index map: i1..i6 -> 0..5, j1 -> 6, j2 -> 7.
inline Instance worked_economy() {
  Instance inst;
  for (int k = 1; k <= 6; ++k) inst.cadet_ids.push_back("i" + std::to_string(k));
  inst.cadet_ids.push_back("j1");
  inst.cadet_ids.push_back("j2");
  inst.ladder = two_prices();
  inst.branches.push_back({"b1", 6, 3});
  inst.priorities.push_back(order_of({5, 4, 3, 2, 1, 0, 6, 7}));
  inst.policies.push_back(build_ultimate_policy(inst.priorities[0], inst.ladder));
  inst.policy_specs.push_back({});
  return inst;
}

inline std::vector<PreferenceRelation> worked_preferences(bool j2_willing = false) {
  std::vector<PreferenceRelation> prefs(8);
  for (int c = 0; c < 8; ++c) prefs[c].acceptable = {{0, 0}};
  for (int c : {0, 2, 4, 6}) prefs[c].acceptable = {{0, 0}, {0, 1}};
  if (j2_willing) prefs[7].acceptable = {{0, 0}, {0, 1}};
  return prefs;
}

inline Allocation worked_outcome() {
  Allocation a(8);
  a.by_cadet[0] = {{0, 1}};  // i1 pays the increased price
  a.by_cadet[1] = std::nullopt;
  a.by_cadet[2] = {{0, 0}};
  a.by_cadet[3] = {{0, 0}};
  a.by_cadet[4] = {{0, 0}};
  a.by_cadet[5] = {{0, 0}};
  a.by_cadet[6] = {{0, 1}};  // j1 pays the increased price
  a.by_cadet[7] = std::nullopt;
  return a;
}

inline std::string fixture_path(const std::string& name) {
  return std::string(CADETMATCH_FIXTURE_DIR) + "/" + name;
}

}  // namespace testutil
