#pragma once

// Core domain types for cadet-branch matching economies: price ladders,
// branch capacities, baseline priorities, price responsiveness policies,
// cadet preferences over (branch, price) pairs, contracts and allocations.
//
// Conventions used throughout the library:
//   - Cadets, branches and prices are dense 0-based indices; string ids live
//     only at the I/O boundary (see harness.hpp).
//   - Price index 0 is the base price; the highest index is the top price.
//   - "rank" always means position from the top: rank 0 is best.

#include <cstdint>
#include <functional>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace cadetmatch {

using Cadet = int;
using Branch = int;
using Price = int;

// A cadet's assignment: (branch, price) or unmatched.
using Assignment = std::optional<std::pair<Branch, Price>>;

struct PriceLadder {
  // Strictly increasing monetary/obligation values; values[0] is the base
  // price. Mechanism logic is ordinal in these; only scoring policies read
  // the numbers (and then only through ScoringSpec::boost, not this list).
  std::vector<double> values;

  int num_prices() const { return static_cast<int>(values.size()); }
  Price top() const { return num_prices() - 1; }
};

// Throws std::invalid_argument unless the ladder is nonempty, non-negative
// and strictly increasing.
void validate_ladder(const PriceLadder& ladder);

struct BranchSpec {
  std::string id;
  int q_total = 0;  // total positions
  int q_flex = 0;   // positions that may be charged an increased price

  int q_base() const { return q_total - q_flex; }
};

struct PriorityOrder {
  std::vector<Cadet> ranking;  // best first
  std::vector<int> rank;       // rank[cadet] = position in ranking

  static PriorityOrder from_ranking(std::vector<Cadet> order);

  int num_cadets() const { return static_cast<int>(ranking.size()); }
  bool outranks(Cadet i, Cadet j) const { return rank[i] < rank[j]; }
};

// Strict total order on (cadet, price) pairs for one branch. Valid policies
// agree with the baseline priority within any single price level and rank a
// cadet's own higher price above their lower price.
struct PriceResponsivenessPolicy {
  int num_cadets = 0;
  int num_prices = 0;
  std::vector<std::pair<Cadet, Price>> order;  // best first
  std::vector<int> rank_table;                 // [cadet * num_prices + price]

  static PriceResponsivenessPolicy from_order(
      int num_cadets, int num_prices,
      std::vector<std::pair<Cadet, Price>> order);

  int rank(Cadet i, Price t) const { return rank_table[i * num_prices + t]; }
  bool outranks(Cadet i, Price t, Cadet j, Price u) const {
    return rank(i, t) < rank(j, u);
  }
};

enum class JumpScope {
  WithinTier,  // paying more overturns priority only inside the cadet's tier
  OverAll,     // paying more overturns priority over every cadet
};

struct TierSpec {
  // Ordered partition of the cadet set, best tier first; must be consistent
  // with the baseline priority (every tier-l cadet outranks every tier-m
  // cadet for l < m). One jump scope per tier.
  std::vector<std::vector<Cadet>> tiers;
  std::vector<JumpScope> scopes;
};

struct ScoringSpec {
  // Total score of (cadet i, price t) is merit[i] + boost[t]; higher totals
  // rank first. boost[0] must be 0 and boost strictly increasing. Equal
  // totals across distinct cadets are broken by the tiebreak order.
  std::vector<double> merit;  // per cadet
  std::vector<double> boost;  // per price index
  PriorityOrder tiebreak;
};

struct PreferenceRelation {
  // Acceptable (branch, price) pairs, most preferred first; everything not
  // listed here is worse than staying unmatched. Within a branch the listed
  // prices must form a prefix 0..k of the ladder and appear cheapest-first
  // (a cadet never prefers paying more for the same branch, and cannot find
  // a dear price acceptable while rejecting a cheaper one).
  std::vector<std::pair<Branch, Price>> acceptable;

  int unmatched_rank() const { return static_cast<int>(acceptable.size()); }

  // Rank of an assignment under this relation; unacceptable pairs rank below
  // unmatched. Linear scan: lists are short at desk scale.
  int rank_of(const Assignment& a) const;
  bool is_acceptable(Branch b, Price t) const;

  // True iff x is strictly preferred to y.
  bool prefers(const Assignment& x, const Assignment& y) const {
    return rank_of(x) < rank_of(y);
  }
};

// Throws std::invalid_argument when the relation has out-of-range entries,
// duplicates, or violates price monotonicity within a branch. `who` prefixes
// error messages (e.g. a cadet id).
void validate_preference(const PreferenceRelation& pref, int num_branches,
                         int num_prices, const std::string& who = "");

struct Contract {
  Cadet cadet;
  Branch branch;
  Price price;

  friend bool operator==(const Contract&, const Contract&) = default;
  friend auto operator<=>(const Contract&, const Contract&) = default;
};

struct Allocation {
  std::vector<Assignment> by_cadet;

  explicit Allocation(int num_cadets = 0) : by_cadet(num_cadets) {}

  int num_cadets() const { return static_cast<int>(by_cadet.size()); }
  int count_at_branch(Branch b) const;
  int count_increased_at_branch(Branch b) const;  // contracts with price >= 1
  int count_unmatched() const;
  std::vector<Contract> contracts() const;

  friend bool operator==(const Allocation&, const Allocation&) = default;
};

enum class PolicyKind { Ultimate, Tiered, Scoring };

// Declarative description of a branch's policy; kept alongside the built
// order so instances round-trip through files without loss.
struct PolicySpec {
  PolicyKind kind = PolicyKind::Ultimate;
  TierSpec tiers;       // when kind == Tiered
  ScoringSpec scoring;  // when kind == Scoring
};

struct Instance {
  std::vector<std::string> cadet_ids;
  std::vector<BranchSpec> branches;
  PriceLadder ladder;
  std::vector<PriorityOrder> priorities;             // per branch
  std::vector<PriceResponsivenessPolicy> policies;   // per branch
  std::vector<PolicySpec> policy_specs;              // per branch

  int num_cadets() const { return static_cast<int>(cadet_ids.size()); }
  int num_branches() const { return static_cast<int>(branches.size()); }
  int num_prices() const { return ladder.num_prices(); }
};

// Throws std::invalid_argument naming the offending field when capacities,
// priorities or policies are inconsistent.
void validate_instance(const Instance& instance);

// Throws unless the allocation is feasible for the instance: at most one
// contract per cadet (structural), per-branch totals within q_total, and
// per-branch increased-price contracts within q_flex.
void validate_allocation(const Allocation& alloc, const Instance& instance);
bool allocation_feasible(const Allocation& alloc, const Instance& instance);

// ---- policy constructors ----

// Willingness to pay a higher price overrides any baseline difference:
// pairs sort by price descending, then by baseline priority.
PriceResponsivenessPolicy build_ultimate_policy(const PriorityOrder& pi,
                                                const PriceLadder& ladder);

// Tier-mediated jumps: paying more overturns priority within the cadet's own
// tier always, and across tiers only when the cadet's tier has OverAll scope;
// otherwise tier dominance prevails. Throws std::invalid_argument when the
// tier partition is inconsistent with pi or when the requested scopes admit
// no transitive order (the error names a witnessing cycle).
PriceResponsivenessPolicy build_tiered_policy(const PriorityOrder& pi,
                                              const TierSpec& tiers,
                                              const PriceLadder& ladder);

// Score-based order: (i,t) outranks (j,u) iff merit[i]+boost[t] exceeds
// merit[j]+boost[u]; exact ties across distinct cadets resolve by the
// tiebreak order. The implied baseline priority is the merit-then-tiebreak
// order over cadets.
PriceResponsivenessPolicy build_scoring_policy(const ScoringSpec& spec,
                                               const PriceLadder& ladder);

// The baseline priority implied by a scoring spec (merit desc, tiebreak).
PriorityOrder scoring_baseline(const ScoringSpec& spec);

// True iff omega is a strict total order on the full cadet x price grid that
// restricts to pi within each price level and ranks each cadet's higher
// price above their lower price.
bool is_valid_policy(const PriceResponsivenessPolicy& omega,
                     const PriorityOrder& pi);

// True iff every cross-price overtaking under omega also holds under nu:
// for all i, j and t' > t, (i,t') above (j,t) in omega implies the same in
// nu. Reflexive by construction.
bool more_responsive(const PriceResponsivenessPolicy& nu,
                     const PriceResponsivenessPolicy& omega);

// ---- preference-domain enumeration ----

inline constexpr std::uint64_t kEnumerationGuard = 10'000'000;

// Number of price-monotone strict rankings of (branch, price) pairs with the
// unmatched option anywhere (i.e. the full preference domain). Throws
// std::runtime_error when the count exceeds `guard`.
std::uint64_t count_preferences(int num_branches, int num_prices,
                                std::uint64_t guard = kEnumerationGuard);

// Visit every relation in the preference domain exactly once.
void visit_preferences(int num_branches, int num_prices,
                       const std::function<void(const PreferenceRelation&)>& visit);

// Materialized domain, guarded. Order is deterministic.
std::vector<PreferenceRelation> enumerate_preferences(
    int num_branches, int num_prices,
    std::uint64_t guard = kEnumerationGuard);

// Completion used by mechanisms that must rank unlisted pairs: keeps the
// listed acceptable pairs first in their given order, then appends every
// unlisted pair by (branch, then price ascending). The result ranks every
// pair above unmatched and is always price-monotone.
PreferenceRelation complete_below_unmatched(const PreferenceRelation& pref,
                                            int num_branches, int num_prices);

}  // namespace cadetmatch
