#include "cadetmatch/axioms.hpp"

#include <algorithm>
#include <map>
#include <stdexcept>

namespace cadetmatch {

namespace {

std::string describe(const Assignment& a) {
  if (!a) return "unmatched";
  return "(branch " + std::to_string(a->first) + ", price " +
         std::to_string(a->second) + ")";
}

}  // namespace

std::vector<Violation> check_ir(const Allocation& alloc,
                                const std::vector<PreferenceRelation>& prefs) {
  std::vector<Violation> out;
  for (Cadet i = 0; i < alloc.num_cadets(); ++i) {
    const Assignment& a = alloc.by_cadet[i];
    if (!a) continue;
    if (prefs[i].rank_of(a) > prefs[i].unmatched_rank()) {
      Violation v;
      v.axiom = "individual-rationality";
      v.cadets = {i};
      v.branch = a->first;
      v.prices = {a->second};
      v.narrative = "cadet " + std::to_string(i) + " holds " + describe(a) +
                    " but ranks staying unmatched above it";
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> check_nonwasteful(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const Instance& instance) {
  std::vector<Violation> out;
  for (Branch b = 0; b < instance.num_branches(); ++b) {
    if (alloc.count_at_branch(b) >= instance.branches[b].q_total) continue;
    for (Cadet i = 0; i < alloc.num_cadets(); ++i) {
      if (alloc.by_cadet[i]) continue;
      if (!prefs[i].is_acceptable(b, 0)) continue;
      Violation v;
      v.axiom = "non-wastefulness";
      v.cadets = {i};
      v.branch = b;
      v.prices = {0};
      v.narrative = "branch " + std::to_string(b) +
                    " has an idle position while cadet " + std::to_string(i) +
                    " is unmatched and finds its base-price contract acceptable";
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> find_priority_reversals(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const std::vector<PriorityOrder>& priorities) {
  std::vector<Violation> out;
  for (Cadet j = 0; j < alloc.num_cadets(); ++j) {
    const Assignment& her = alloc.by_cadet[j];
    if (!her) continue;
    const Branch b = her->first;
    for (Cadet i = 0; i < alloc.num_cadets(); ++i) {
      if (i == j) continue;
      if (!prefs[i].prefers(her, alloc.by_cadet[i])) continue;
      if (!priorities[b].outranks(i, j)) continue;
      Violation v;
      v.axiom = "no-priority-reversal";
      v.cadets = {i, j};
      v.branch = b;
      v.prices = {her->second};
      v.narrative = "cadet " + std::to_string(i) + " prefers " + describe(her) +
                    " held by cadet " + std::to_string(j) +
                    " to her own " + describe(alloc.by_cadet[i]) +
                    " despite better baseline priority at branch " +
                    std::to_string(b);
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> find_legitimate_claims(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const Instance& instance) {
  std::vector<Violation> out;
  const int np = instance.num_prices();
  for (Cadet i = 0; i < alloc.num_cadets(); ++i) {
    const Assignment& own = alloc.by_cadet[i];
    if (!own) continue;
    const auto [b, t] = *own;
    const PriceResponsivenessPolicy& omega = instance.policies[b];
    const bool headroom =
        alloc.count_increased_at_branch(b) < instance.branches[b].q_flex;
    for (Cadet j = 0; j < alloc.num_cadets(); ++j) {
      if (j == i) continue;
      for (Price lower = 0; lower < t; ++lower) {
        if (!prefs[j].prefers(std::make_pair(b, lower), alloc.by_cadet[j])) {
          continue;
        }
        if (!omega.outranks(j, lower, i, t)) continue;
        Violation v;
        v.axiom = "reduced-claim";
        v.cadets = {j, i};
        v.branch = b;
        v.prices = {lower, t};
        v.narrative = "cadet " + std::to_string(j) + " wants branch " +
                      std::to_string(b) + " at price " + std::to_string(lower) +
                      " over her " + describe(alloc.by_cadet[j]) +
                      " and the policy ranks her above cadet " +
                      std::to_string(i) + " paying " + std::to_string(t);
        out.push_back(std::move(v));
      }
      if (t == np - 1 || !headroom) continue;
      for (Price higher = t + 1; higher < np; ++higher) {
        if (!prefs[j].prefers(std::make_pair(b, higher), alloc.by_cadet[j])) {
          continue;
        }
        if (!omega.outranks(j, higher, i, t)) continue;
        Violation v;
        v.axiom = "elevated-claim";
        v.cadets = {j, i};
        v.branch = b;
        v.prices = {higher, t};
        v.narrative = "cadet " + std::to_string(j) + " wants branch " +
                      std::to_string(b) + " at price " + std::to_string(higher) +
                      " over her " + describe(alloc.by_cadet[j]) +
                      ", the policy ranks that above cadet " +
                      std::to_string(i) + " paying " + std::to_string(t) +
                      ", and the branch still has increased-price headroom";
        out.push_back(std::move(v));
      }
    }
  }
  return out;
}

std::vector<Violation> check_allocation_axioms(
    const Allocation& alloc, const std::vector<PreferenceRelation>& prefs,
    const Instance& instance) {
  std::vector<Violation> out = check_ir(alloc, prefs);
  auto more = check_nonwasteful(alloc, prefs, instance);
  out.insert(out.end(), more.begin(), more.end());
  more = find_priority_reversals(alloc, prefs, instance.priorities);
  out.insert(out.end(), more.begin(), more.end());
  more = find_legitimate_claims(alloc, prefs, instance);
  out.insert(out.end(), more.begin(), more.end());
  return out;
}

// ---- outcome tables ----

std::uint64_t OutcomeTable::num_profiles() const {
  std::uint64_t p = 1;
  for (int i = 0; i < num_cadets; ++i) p *= domain_size;
  return p;
}

Assignment OutcomeTable::decode(std::uint8_t code, int num_prices) {
  if (code == 0) return std::nullopt;
  const int v = code - 1;
  return std::make_pair(v / num_prices, v % num_prices);
}

std::uint8_t OutcomeTable::encode(const Assignment& a, int num_prices) {
  if (!a) return 0;
  return static_cast<std::uint8_t>(1 + a->first * num_prices + a->second);
}

Allocation OutcomeTable::allocation_at(std::uint64_t profile) const {
  Allocation out(num_cadets);
  for (Cadet i = 0; i < num_cadets; ++i) {
    out.by_cadet[i] = decode(code_at(profile, i), num_prices);
  }
  return out;
}

namespace {

std::uint64_t checked_profile_count(int num_cadets, std::size_t domain_size,
                                    std::uint64_t guard) {
  if (domain_size == 0) {
    throw std::invalid_argument("outcome table: empty report domain");
  }
  std::uint64_t p = 1;
  for (int i = 0; i < num_cadets; ++i) {
    if (p > guard / domain_size + 1) {
      throw std::invalid_argument(
          "outcome table: profile space exceeds the enumeration guard");
    }
    p *= domain_size;
  }
  if (p > guard) {
    throw std::invalid_argument(
        "outcome table: profile space exceeds the enumeration guard");
  }
  return p;
}

// Odometer over per-cadet reports: runs `eval` on every profile in mixed
// radix order, cadet 0 the least significant digit.
template <class Report, class Eval>
void for_each_profile(int num_cadets, const std::vector<Report>& domain,
                      std::uint64_t profiles, Eval eval) {
  std::vector<int> digits(num_cadets, 0);
  std::vector<Report> current(num_cadets, domain[0]);
  for (std::uint64_t p = 0; p < profiles; ++p) {
    eval(p, digits, current);
    for (int i = 0; i < num_cadets; ++i) {
      if (++digits[i] < static_cast<int>(domain.size())) {
        current[i] = domain[digits[i]];
        break;
      }
      digits[i] = 0;
      current[i] = domain[0];
    }
  }
}

}  // namespace

OutcomeTable build_outcome_table(const DirectMechanism& mechanism,
                                 const Instance& instance,
                                 const std::vector<PreferenceRelation>& domain,
                                 std::uint64_t guard) {
  OutcomeTable table;
  table.num_cadets = instance.num_cadets();
  table.domain_size = static_cast<int>(domain.size());
  table.num_branches = instance.num_branches();
  table.num_prices = instance.num_prices();
  const std::uint64_t profiles =
      checked_profile_count(table.num_cadets, domain.size(), guard);
  table.codes.resize(profiles * table.num_cadets);
  for_each_profile<PreferenceRelation>(
      table.num_cadets, domain, profiles,
      [&](std::uint64_t p, const std::vector<int>&,
          const std::vector<PreferenceRelation>& prefs) {
        Allocation a = mechanism(instance, prefs);
        for (Cadet i = 0; i < table.num_cadets; ++i) {
          table.codes[p * table.num_cadets + i] =
              OutcomeTable::encode(a.by_cadet[i], table.num_prices);
        }
      });
  return table;
}

OutcomeTable build_quasi_outcome_table(const QuasiMechanism& mechanism,
                                       const Instance& instance,
                                       const std::vector<QuasiStrategy>& domain,
                                       std::uint64_t guard) {
  OutcomeTable table;
  table.num_cadets = instance.num_cadets();
  table.domain_size = static_cast<int>(domain.size());
  table.num_branches = instance.num_branches();
  table.num_prices = instance.num_prices();
  const std::uint64_t profiles =
      checked_profile_count(table.num_cadets, domain.size(), guard);
  table.codes.resize(profiles * table.num_cadets);
  for_each_profile<QuasiStrategy>(
      table.num_cadets, domain, profiles,
      [&](std::uint64_t p, const std::vector<int>&,
          const std::vector<QuasiStrategy>& strategies) {
        Allocation a = mechanism(instance, strategies);
        for (Cadet i = 0; i < table.num_cadets; ++i) {
          table.codes[p * table.num_cadets + i] =
              OutcomeTable::encode(a.by_cadet[i], table.num_prices);
        }
      });
  return table;
}

std::vector<Violation> sp_violations_from_table(
    const OutcomeTable& table, const std::vector<PreferenceRelation>& domain,
    bool first_only) {
  std::vector<Violation> out;
  const int n = table.num_cadets;
  const int d = table.domain_size;
  if (static_cast<int>(domain.size()) != d) {
    throw std::invalid_argument("sp scan: domain does not match the table");
  }
  const int code_count = 1 + table.num_branches * table.num_prices;

  // Rank of every outcome code under every relation in the domain, so the
  // scan is pure array arithmetic.
  std::vector<int> rank(static_cast<std::size_t>(d) * code_count);
  for (int r = 0; r < d; ++r) {
    rank[r * code_count] = domain[r].unmatched_rank();
    for (int c = 1; c < code_count; ++c) {
      rank[r * code_count + c] =
          domain[r].rank_of(OutcomeTable::decode(static_cast<std::uint8_t>(c),
                                                 table.num_prices));
    }
  }

  std::vector<std::uint64_t> stride(n);
  std::uint64_t s = 1;
  for (int i = 0; i < n; ++i) {
    stride[i] = s;
    s *= d;
  }
  const std::uint64_t profiles = table.num_profiles();

  std::vector<int> digits(n, 0);
  for (std::uint64_t p = 0; p < profiles; ++p) {
    for (int i = 0; i < n; ++i) {
      const int truth = digits[i];
      const int truthful_rank =
          rank[truth * code_count + table.code_at(p, i)];
      for (int m = 0; m < d; ++m) {
        if (m == truth) continue;
        const std::uint64_t q =
            p + (static_cast<std::uint64_t>(m) - truth) * stride[i];
        if (rank[truth * code_count + table.code_at(q, i)] < truthful_rank) {
          Violation v;
          v.axiom = "strategy-proofness";
          v.cadets = {i};
          v.deviation = "report " + std::to_string(m) + " instead of " +
                        std::to_string(truth);
          v.narrative = "profile " + std::to_string(p) + ": cadet " +
                        std::to_string(i) + " with relation " +
                        std::to_string(truth) +
                        " gains by reporting relation " + std::to_string(m);
          out.push_back(std::move(v));
          if (first_only) return out;
        }
      }
    }
    for (int i = 0; i < n; ++i) {
      if (++digits[i] < d) break;
      digits[i] = 0;
    }
  }
  return out;
}

std::vector<Violation> check_strategy_proofness(
    const DirectMechanism& mechanism, const Instance& instance,
    const std::vector<PreferenceRelation>& domain, std::uint64_t guard,
    bool first_only) {
  OutcomeTable table = build_outcome_table(mechanism, instance, domain, guard);
  return sp_violations_from_table(table, domain, first_only);
}

std::vector<Violation> find_detectable_priority_reversals(
    const std::vector<QuasiStrategy>& strategies, const Allocation& alloc,
    const std::vector<PriorityOrder>& priorities) {
  std::vector<Violation> out;
  const int n = alloc.num_cadets();
  auto position = [&](Cadet i, Branch b) {
    const auto& r = strategies[i].ranking;
    for (std::size_t k = 0; k < r.size(); ++k) {
      if (r[k] == b) return static_cast<int>(k);
    }
    return static_cast<int>(r.size()) + 1;  // unlisted: below the empty branch
  };
  for (Cadet j = 0; j < n; ++j) {
    const Assignment& her = alloc.by_cadet[j];
    if (!her || her->second != 0) continue;
    const Branch b = her->first;
    for (Cadet i = 0; i < n; ++i) {
      if (i == j || !priorities[b].outranks(i, j)) continue;
      const Assignment& own = alloc.by_cadet[i];
      bool worse = false;
      std::string how;
      if (own && own->first == b && own->second >= 1) {
        worse = true;
        how = "pays the increased price at the same branch";
      } else {
        const int own_pos = own ? position(i, own->first)
                                : static_cast<int>(strategies[i].ranking.size());
        if (position(i, b) < own_pos) {
          worse = true;
          how = own ? "is matched to a branch she ranked strictly lower"
                    : "is unmatched although she ranked the branch";
        }
      }
      if (!worse) continue;
      Violation v;
      v.axiom = "detectable-priority-reversal";
      v.cadets = {i, j};
      v.branch = b;
      v.prices = {0};
      v.narrative = "cadet " + std::to_string(j) +
                    " holds the base price at branch " + std::to_string(b) +
                    " while better-ranked cadet " + std::to_string(i) + " " +
                    how;
      out.push_back(std::move(v));
    }
  }
  return out;
}

namespace {

std::vector<Violation> bradso_ic_check(const QuasiMechanism& mechanism,
                                       const Instance& instance,
                                       const std::vector<QuasiStrategy>& profile,
                                       const Allocation& base) {
  std::vector<Violation> out;
  for (Cadet i = 0; i < base.num_cadets(); ++i) {
    const Assignment& a = base.by_cadet[i];
    if (!a || a->second < 1) continue;
    const Branch b = a->first;
    if (!profile[i].is_willing(b)) continue;  // dropping b changes nothing
    std::vector<QuasiStrategy> altered = profile;
    altered[i].willing[b] = 0;
    Allocation rerun = mechanism(instance, altered);
    if (rerun.by_cadet[i] == std::make_optional(std::make_pair(b, Price{0}))) {
      Violation v;
      v.axiom = "bradso-ic";
      v.cadets = {i};
      v.branch = b;
      v.prices = {a->second, 0};
      v.deviation = "withdraw the willingness declaration at branch " +
                    std::to_string(b);
      v.narrative = "cadet " + std::to_string(i) +
                    " is charged the increased price at branch " +
                    std::to_string(b) +
                    " yet would receive the same branch at the base price "
                    "after dropping it from her willing set";
      out.push_back(std::move(v));
    }
  }
  return out;
}

std::vector<Violation> strategic_bradso_check(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& profile, const Allocation& base) {
  std::vector<Violation> out;
  for (Cadet i = 0; i < base.num_cadets(); ++i) {
    const Assignment& a = base.by_cadet[i];
    if (!a || a->second != 0) continue;
    const Branch b = a->first;
    if (!profile[i].is_willing(b)) continue;  // vacuous without a declaration
    std::vector<QuasiStrategy> altered = profile;
    altered[i].willing[b] = 0;
    Allocation rerun = mechanism(instance, altered);
    if (rerun.by_cadet[i] != a) {
      Violation v;
      v.axiom = "strategic-bradso";
      v.cadets = {i};
      v.branch = b;
      v.prices = {0};
      v.deviation = "declare willingness at branch " + std::to_string(b) +
                    " without intending to pay";
      v.narrative = "cadet " + std::to_string(i) +
                    " keeps the base price at branch " + std::to_string(b) +
                    " only because of her willingness declaration; dropping "
                    "it moves her to " +
                    describe(rerun.by_cadet[i]);
      out.push_back(std::move(v));
    }
  }
  return out;
}

}  // namespace

std::vector<Violation> bradso_ic_violations_at(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& profile) {
  return bradso_ic_check(mechanism, instance, profile,
                         mechanism(instance, profile));
}

std::vector<Violation> strategic_bradso_violations_at(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& profile) {
  return strategic_bradso_check(mechanism, instance, profile,
                                mechanism(instance, profile));
}

namespace {

template <class Check>
std::vector<Violation> scan_quasi_profiles(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& domain, std::uint64_t guard,
    bool first_only, Check check) {
  const int n = instance.num_cadets();
  const std::uint64_t profiles = checked_profile_count(n, domain.size(), guard);
  std::vector<Violation> out;
  for_each_profile<QuasiStrategy>(
      n, domain, profiles,
      [&](std::uint64_t p, const std::vector<int>&,
          const std::vector<QuasiStrategy>& profile) {
        if (first_only && !out.empty()) return;
        Allocation base = mechanism(instance, profile);
        auto found = check(mechanism, instance, profile, base);
        for (auto& v : found) {
          v.narrative = "profile " + std::to_string(p) + ": " + v.narrative;
          out.push_back(std::move(v));
        }
      });
  if (first_only && out.size() > 1) out.resize(1);
  return out;
}

}  // namespace

std::vector<Violation> check_bradso_ic(const QuasiMechanism& mechanism,
                                       const Instance& instance,
                                       const std::vector<QuasiStrategy>& domain,
                                       std::uint64_t guard, bool first_only) {
  return scan_quasi_profiles(mechanism, instance, domain, guard, first_only,
                             bradso_ic_check);
}

std::vector<Violation> check_strategic_bradso_immunity(
    const QuasiMechanism& mechanism, const Instance& instance,
    const std::vector<QuasiStrategy>& domain, std::uint64_t guard,
    bool first_only) {
  return scan_quasi_profiles(mechanism, instance, domain, guard, first_only,
                             strategic_bradso_check);
}

// ---- uniqueness search ----

namespace {

// Every allocation the instance admits, preferences aside.
std::vector<Allocation> enumerate_feasible_allocations(const Instance& instance) {
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();
  const int np = instance.num_prices();
  const int options = 1 + nb * np;
  std::vector<Allocation> out;
  Allocation current(n);
  std::vector<int> pick(n, 0);
  for (;;) {
    for (Cadet i = 0; i < n; ++i) {
      current.by_cadet[i] =
          OutcomeTable::decode(static_cast<std::uint8_t>(pick[i]), np);
    }
    if (allocation_feasible(current, instance)) out.push_back(current);
    int i = 0;
    while (i < n && ++pick[i] == options) pick[i++] = 0;
    if (i == n) break;
  }
  return out;
}

std::string profile_note(std::uint64_t p, const std::vector<int>& digits) {
  std::string s = "profile " + std::to_string(p) + " (reports";
  for (int d : digits) s += " " + std::to_string(d);
  s += ")";
  return s;
}

}  // namespace

UniquenessReport verify_uniqueness(const Instance& instance,
                                   const std::vector<PreferenceRelation>& domain,
                                   std::uint64_t guard) {
  UniquenessReport report;
  const int n = instance.num_cadets();
  const int d = static_cast<int>(domain.size());
  const std::uint64_t profiles = checked_profile_count(n, domain.size(), guard);

  OutcomeTable table =
      build_outcome_table(mpco_allocation, instance, domain, guard);

  // Index of every relation by its listed contracts, to locate truncations.
  std::map<std::vector<std::pair<Branch, Price>>, int> index;
  for (int r = 0; r < d; ++r) index[domain[r].acceptable] = r;

  std::vector<std::uint64_t> stride(n);
  std::uint64_t s = 1;
  for (int i = 0; i < n; ++i) {
    stride[i] = s;
    s *= d;
  }

  // The candidate outcome must itself pass everything, including honesty.
  report.axioms_pass = true;
  auto sp = sp_violations_from_table(table, domain, true);
  if (!sp.empty()) {
    report.axioms_pass = false;
    report.failures.push_back("candidate mechanism: " + sp.front().narrative);
  }

  const std::vector<Allocation> feasible = enumerate_feasible_allocations(instance);

  for_each_profile<PreferenceRelation>(
      n, domain, profiles,
      [&](std::uint64_t p, const std::vector<int>& digits,
          const std::vector<PreferenceRelation>& prefs) {
        ++report.profiles_checked;
        Allocation candidate = table.allocation_at(p);
        if (!check_allocation_axioms(candidate, prefs, instance).empty()) {
          report.axioms_pass = false;
          report.failures.push_back("candidate mechanism fails an allocation "
                                    "axiom at " +
                                    profile_note(p, digits));
          return;
        }

        for (const Allocation& alt : feasible) {
          if (alt == candidate) continue;
          if (!check_allocation_axioms(alt, prefs, instance).empty()) continue;

          // A hypothetical mechanism choosing `alt` here while satisfying all
          // five properties would contradict itself on a strictly shorter
          // report of some cadet who is assigned differently. Find one.
          bool eliminated = false;
          for (Cadet i = 0; i < n && !eliminated; ++i) {
            const Assignment& mine = candidate.by_cadet[i];
            const Assignment& theirs = alt.by_cadet[i];
            if (mine == theirs) continue;
            const int rank_mine = prefs[i].rank_of(mine);
            const int rank_theirs = prefs[i].rank_of(theirs);
            const Assignment& target =
                rank_mine < rank_theirs ? mine : theirs;
            if (!target) continue;  // both sides acceptable or empty: skip
            const int cut = prefs[i].rank_of(target);
            if (cut + 1 >= static_cast<int>(prefs[i].acceptable.size())) {
              continue;  // truncation must be strictly shorter
            }
            PreferenceRelation shorter;
            shorter.acceptable.assign(prefs[i].acceptable.begin(),
                                      prefs[i].acceptable.begin() + cut + 1);
            auto it = index.find(shorter.acceptable);
            if (it == index.end()) continue;  // domain not truncation closed
            const std::uint64_t q =
                p + (static_cast<std::uint64_t>(it->second) - digits[i]) *
                        stride[i];
            const Assignment at_truncation =
                OutcomeTable::decode(table.code_at(q, i), table.num_prices);
            if (rank_mine < rank_theirs) {
              // Keeping everything through her better outcome, she still gets
              // it; the hypothetical mechanism would hand her a profitable
              // misreport from `alt`.
              if (at_truncation == mine) eliminated = true;
            } else {
              // Her alt outcome survives the truncation as the only
              // individually rational match, yet the candidate does not give
              // it to her there; the hypothetical mechanism must, so the two
              // disagree on a smaller profile already settled.
              if (at_truncation != theirs) eliminated = true;
            }
          }
          if (eliminated) {
            ++report.alternatives_eliminated;
          } else {
            report.unique = false;
            report.failures.push_back(
                "alternative allocation not eliminated at " +
                profile_note(p, digits));
          }
        }
      });
  return report;
}

}  // namespace cadetmatch
