#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "cadetmatch/mechanisms.hpp"
#include "cadetmatch/model.hpp"

namespace cadetmatch {

// One witnessed failure of a named property. Witness fields are filled as
// applicable; replaying them against the property's defining clause must
// re-confirm the violation.
struct Violation {
  std::string axiom;
  std::vector<Cadet> cadets;        // primary witness first
  Branch branch = -1;
  std::vector<Price> prices;
  std::string deviation;            // mechanism-level: the profitable report
  std::string narrative;
};

// ---- allocation-level checks ----

// Nobody holds a contract they rank below staying unmatched.
std::vector<Violation> check_ir(const Allocation& alloc,
                                const std::vector<PreferenceRelation>& prefs);

// No branch has spare capacity while a cadet who finds its base-price
// contract acceptable stays unmatched.
std::vector<Violation> check_nonwasteful(const Allocation& alloc,
                                         const std::vector<PreferenceRelation>& prefs,
                                         const Instance& instance);

// Every (i, j, b) where j holds a contract of b that i strictly prefers to
// her own assignment although i has the better baseline priority at b.
std::vector<Violation> find_priority_reversals(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const std::vector<PriorityOrder>& priorities);

// Claims against the price responsiveness policy, tagged "reduced-claim"
// (someone with a better policy rank wanted the same branch cheaper) or
// "elevated-claim" (someone with a better policy rank wanted it at a higher
// price while the branch still had increased-price headroom).
std::vector<Violation> find_legitimate_claims(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const Instance& instance);

// Convenience: the four allocation-level checks concatenated.
std::vector<Violation> check_allocation_axioms(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const Instance& instance);

// ---- mechanism-level checks ----

using DirectMechanism =
    std::function<Allocation(const Instance&, const std::vector<PreferenceRelation>&)>;
using QuasiMechanism =
    std::function<Allocation(const Instance&, const std::vector<QuasiStrategy>&)>;

// Precomputed outcomes of a mechanism over every profile of reports drawn
// from a common per-cadet domain. Assignments are stored as dense codes:
// 0 is unmatched, 1 + branch * num_prices + price otherwise. Profile ids are
// mixed-radix over the domain, cadet 0 least significant.
struct OutcomeTable {
  int num_cadets = 0;
  int domain_size = 0;
  int num_branches = 0;
  int num_prices = 0;
  std::vector<std::uint8_t> codes;  // profile-major, cadet-minor

  std::uint64_t num_profiles() const;
  std::uint8_t code_at(std::uint64_t profile, Cadet i) const {
    return codes[profile * num_cadets + i];
  }
  static Assignment decode(std::uint8_t code, int num_prices);
  static std::uint8_t encode(const Assignment& a, int num_prices);
  Allocation allocation_at(std::uint64_t profile) const;
};

OutcomeTable build_outcome_table(const DirectMechanism& mechanism,
                                 const Instance& instance,
                                 const std::vector<PreferenceRelation>& domain,
                                 std::uint64_t guard = kEnumerationGuard);

OutcomeTable build_quasi_outcome_table(const QuasiMechanism& mechanism,
                                       const Instance& instance,
                                       const std::vector<QuasiStrategy>& domain,
                                       std::uint64_t guard = kEnumerationGuard);

// Scans a direct-mechanism table for a cadet who gains by misreporting,
// holding everyone else fixed. The cadet's true relation ranges over the
// same domain.
std::vector<Violation> sp_violations_from_table(
    const OutcomeTable& table, const std::vector<PreferenceRelation>& domain,
    bool first_only = false);

// build_outcome_table + sp_violations_from_table.
std::vector<Violation> check_strategy_proofness(
    const DirectMechanism& mechanism, const Instance& instance,
    const std::vector<PreferenceRelation>& domain,
    std::uint64_t guard = kEnumerationGuard, bool first_only = false);

// A priority reversal witnessable from the submitted messages alone: j got
// branch b at the base price while i, ranked above j at b, either paid the
// increased price at b or was left with something below b on her submitted
// ranking.
std::vector<Violation> find_detectable_priority_reversals(
    const std::vector<QuasiStrategy>& strategies, const Allocation& alloc,
    const std::vector<PriorityOrder>& priorities);

// For every profile over the domain and every cadet charged the increased
// price at b: re-run with b dropped from her willing set; flag the profile
// if she then gets b at the base price (the charge was avoidable).
std::vector<Violation> check_bradso_ic(const QuasiMechanism& mechanism,
                                       const Instance& instance,
                                       const std::vector<QuasiStrategy>& domain,
                                       std::uint64_t guard = kEnumerationGuard,
                                       bool first_only = false);

// For every profile and every cadet holding b at the base price with b in
// her willing set: re-run with b dropped; flag if her assignment changes
// (the willingness declaration itself won the base-price slot).
std::vector<Violation> check_strategic_bradso_immunity(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& domain,
    std::uint64_t guard = kEnumerationGuard, bool first_only = false);

// Single-profile variants used by the audits above and by the CLI.
std::vector<Violation> bradso_ic_violations_at(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& profile);
std::vector<Violation> strategic_bradso_violations_at(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& profile);

// ---- uniqueness search ----

// Exhaustive confirmation that, over all preference profiles drawn from the
// domain, the cumulative-offer outcome is pinned down by the five checks
// above: it passes all of them, and every other allocation that passes the
// four allocation-level checks at some profile is eliminated by a
// truncation-descent argument (the alternative would force a dishonest
// report to profit at a strictly smaller profile, already settled by
// induction). Failures are reported, never hidden.
struct UniquenessReport {
  std::uint64_t profiles_checked = 0;
  std::uint64_t alternatives_eliminated = 0;
  bool axioms_pass = false;      // allocation axioms at every profile + SP
  bool unique = true;            // every alternative eliminated
  std::vector<std::string> failures;

  bool ok() const { return axioms_pass && unique && failures.empty(); }
};

UniquenessReport verify_uniqueness(const Instance& instance,
                                   const std::vector<PreferenceRelation>& domain,
                                   std::uint64_t guard = kEnumerationGuard);

}  // namespace cadetmatch
