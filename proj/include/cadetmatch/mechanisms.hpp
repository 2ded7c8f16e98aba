#pragma once

#include <optional>
#include <string>
#include <vector>

#include "cadetmatch/model.hpp"

namespace cadetmatch {

// Message of the two-price application systems: a strict ranking over
// acceptable branches (anything not listed is unacceptable) plus the set of
// branches the cadet declares a willingness to pay the increased price for.
struct QuasiStrategy {
  std::vector<Branch> ranking;
  std::vector<char> willing;  // indexed by branch; sized to the instance

  bool is_willing(Branch b) const {
    return b >= 0 && b < static_cast<Branch>(willing.size()) && willing[b];
  }
};

void validate_strategy(const QuasiStrategy& s, int num_branches,
                       const std::string& who = "");

struct TraceEvent {
  enum class Kind { Proposed, Held, Rejected };
  Kind kind;
  int step;
  Cadet cadet;
  Branch branch;
  Price price;
};

using MechanismTrace = std::vector<TraceEvent>;

struct MpcoResult {
  Allocation allocation;
  MechanismTrace trace;
};

// Cumulative offer procedure driven by the two-step branch choice rule.
// Offers accumulate: once proposed, a contract stays in the branch's pool
// until the end. The outcome does not depend on proposal_order; the default
// order is the first branch's priority.
MpcoResult mpco(const Instance& instance,
                const std::vector<PreferenceRelation>& prefs,
                const std::optional<PriorityOrder>& proposal_order = std::nullopt);

// Same procedure without trace bookkeeping, for exhaustive drivers.
Allocation mpco_allocation(const Instance& instance,
                           const std::vector<PreferenceRelation>& prefs);

// Individual-proposing deferred acceptance over branches only (no prices).
// branch_prefs[i] lists cadet i's acceptable branches, most preferred first.
// Capacities come from the instance; the priorities argument replaces the
// instance's baseline priorities (callers pass adjusted orders).
std::vector<std::optional<Branch>> da(
    const Instance& instance, const std::vector<std::vector<Branch>>& branch_prefs,
    const std::vector<PriorityOrder>& priorities);

// The 2006 application system: sequential proposing in baseline-priority
// order, branches holding base positions by baseline priority and flexible
// positions by the declared-willingness-adjusted priority. Willing cadets
// holding flexible positions pay the increased price. Requires exactly two
// prices and ultimate policies.
Allocation usma2006(const Instance& instance,
                    const std::vector<QuasiStrategy>& strategies);

// Variant of usma2006 where all active cadets apply simultaneously each
// round. Exposed for the outcome-equality property test.
Allocation usma2006_simultaneous(const Instance& instance,
                                 const std::vector<QuasiStrategy>& strategies);

// The 2020 application system: deferred acceptance under an adjusted
// priority that slots willing cadets at their increased-price policy rank,
// then a price-charging pass that bills a matched willing cadet the
// increased price exactly when fewer than q_flex willing cadets with worse
// baseline priority are matched to the same branch. Requires two prices.
Allocation usma2020(const Instance& instance,
                    const std::vector<QuasiStrategy>& strategies);

// Direct single-branch mechanism that computes how many flexible positions
// are charged the increased price by the iterated counting rule, then
// assigns base positions by baseline priority. Requires one branch and two
// prices. Equals mpco on its whole domain.
Allocation phi_mp(const Instance& instance,
                  const std::vector<PreferenceRelation>& prefs);

// The five mechanisms used to show each fairness/incentive property is
// independent of the others. Each fails exactly one property:
//   DropIr     matches cadets as if everything were acceptable   (rationality)
//   Empty      leaves everyone unmatched                         (wastefulness)
//   DaAsDirect ignores increased prices entirely                 (policy enforcement)
//   Psi        strands the worst-priority winner of a saturated
//              branch                                            (priority reversal)
//   PriceBump  bills the worst-priority winner who said yes      (straight incentives)
enum class CounterexampleKind { DropIr, Empty, DaAsDirect, Psi, PriceBump };

// Psi and PriceBump are defined for two-price instances and manipulate one
// designated branch.
Allocation counterexample_mechanism(CounterexampleKind kind,
                                    const Instance& instance,
                                    const std::vector<PreferenceRelation>& prefs,
                                    Branch target = 0);

std::optional<CounterexampleKind> counterexample_kind_from_name(
    const std::string& name);

}  // namespace cadetmatch
