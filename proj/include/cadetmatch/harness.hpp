#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cadetmatch/mechanisms.hpp"
#include "cadetmatch/model.hpp"

namespace cadetmatch {

// An instance file bundles the economy with the cadets' submitted
// preferences; they travel together through the CLI.
struct LoadedInstance {
  Instance instance;
  std::vector<PreferenceRelation> preferences;
};

// ---- file formats (JSON, schema_version 1) ----

LoadedInstance parse_instance_json(const std::string& text);
LoadedInstance load_instance(const std::string& path);
std::string instance_to_json(const LoadedInstance& loaded);
void save_instance(const LoadedInstance& loaded, const std::string& path);

std::string allocation_to_json(const Allocation& alloc, const Instance& instance,
                               const MechanismTrace* trace = nullptr);
void save_allocation(const Allocation& alloc, const Instance& instance,
                     const std::string& path,
                     const MechanismTrace* trace = nullptr);
Allocation parse_allocation_json(const std::string& text, const Instance& instance);
Allocation load_allocation(const std::string& path, const Instance& instance);

std::vector<QuasiStrategy> parse_strategies_json(const std::string& text,
                                                 const Instance& instance);
std::vector<QuasiStrategy> load_strategies(const std::string& path,
                                           const Instance& instance);

// ---- synthetic cohorts ----

struct CohortSpec {
  std::uint64_t seed = 42;
  int num_cadets = 200;
  std::vector<BranchSpec> branches;     // default: one branch, q_total 100
  std::vector<double> prices = {0.0, 3.0};
  std::vector<double> popularity;       // per-branch draw weights; default flat
  double willingness_prob = 0.5;
  int min_list_len = 1;                 // branches ranked per cadet
  int max_list_len = 0;                 // 0: up to the branch count
};

// Deterministic under the seed. Branch priorities come from one shuffled
// merit list shared across branches; every generated preference passes
// validation (increased-price entries always rank below the same branch's
// base price). Policies default to ultimate.
LoadedInstance generate_cohort(const CohortSpec& spec);

// The message a cadet with the given preference would submit to a two-price
// application system: branches in base-price order; willingness declared for
// every branch whose increased-price contract is ranked acceptable anywhere.
QuasiStrategy truthful_quasi_strategy(const PreferenceRelation& pref,
                                      int num_branches);

// ---- cap/policy sweep ----

struct SweepRow {
  std::string policy;
  double cap_fraction = 0.0;
  std::string branch;   // branch id, or "all" for the aggregate row
  int charged = 0;      // increased-price contracts at the branch
  int assigned = 0;     // cadets matched to the branch
  int unmatched = 0;    // cohort-wide unmatched count
};

// Re-runs the cumulative-offer mechanism over every (policy, cap fraction)
// cell, with per-branch q_flex = floor(fraction * q_total + 1/2) clamped to
// [0, q_total]. Policy names: "ultimate", "tiered2020" (all jumps confined
// to priority tiers), "tiered2021" (top two tiers may jump over anyone).
// Tiers split each branch's priority list into thirds. Emits one row per
// branch per cell, plus an "all" aggregate row when there are at least two
// branches.
std::vector<SweepRow> sweep_bradso(const LoadedInstance& base,
                                   const std::vector<std::string>& policies,
                                   const std::vector<double>& cap_fractions);

std::string sweep_to_csv(const std::vector<SweepRow>& rows);

// Tier layouts used by sweeps and by the exhaustive policy grids: every way
// to cut the priority ranking into at most max_tiers consecutive blocks.
std::vector<std::vector<std::vector<Cadet>>> tier_cuts(const PriorityOrder& pi,
                                                       int max_tiers);

// All distinct valid policies over the cuts above with every per-tier scope
// combination, ultimate included (layouts with no transitive order are
// skipped, duplicates removed).
std::vector<PriceResponsivenessPolicy> policy_grid(const PriorityOrder& pi,
                                                   const PriceLadder& ladder,
                                                   int max_tiers = 3);

// ---- verification suites ----

struct SuiteOptions {
  int max_cadets = 5;
  int max_branches = 2;
  int max_prices = 2;
  int max_cap = 2;          // bound on q_base + q_flex per branch
  std::uint64_t seed = 42;
  int num_instances = 1000; // randomized suites
  int num_orders = 20;      // proposal orders per instance
};

struct SuiteResult {
  std::string name;
  bool pass = false;
  std::uint64_t cases = 0;  // instances / profiles / comparisons examined
  std::vector<std::string> failures;
};

// Suites: phi-mp-equivalence, axiom-grid, ne-equivalence, independence,
// uniqueness, da-reduction, choice-monotonicity, order-independence.
SuiteResult run_verify_suite(const std::string& name, const SuiteOptions& opts);
std::vector<std::string> verify_suite_names();

// ---- CLI ----

int cli(int argc, char** argv);

}  // namespace cadetmatch
