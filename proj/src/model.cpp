#include "cadetmatch/model.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

namespace cadetmatch {

void validate_ladder(const PriceLadder& ladder) {
  if (ladder.values.empty()) {
    throw std::invalid_argument("prices: must contain at least one price");
  }
  for (std::size_t k = 0; k < ladder.values.size(); ++k) {
    if (ladder.values[k] < 0) {
      throw std::invalid_argument("prices[" + std::to_string(k) +
                                  "]: must be non-negative");
    }
    if (k > 0 && !(ladder.values[k - 1] < ladder.values[k])) {
      throw std::invalid_argument("prices[" + std::to_string(k) +
                                  "]: must be strictly increasing");
    }
  }
}

PriorityOrder PriorityOrder::from_ranking(std::vector<Cadet> order) {
  PriorityOrder pi;
  pi.ranking = std::move(order);
  const int n = static_cast<int>(pi.ranking.size());
  pi.rank.assign(n, -1);
  for (int pos = 0; pos < n; ++pos) {
    Cadet c = pi.ranking[pos];
    if (c < 0 || c >= n) {
      throw std::invalid_argument("priority: cadet index " + std::to_string(c) +
                                  " out of range for " + std::to_string(n) +
                                  " cadets");
    }
    if (pi.rank[c] != -1) {
      throw std::invalid_argument("priority: cadet index " + std::to_string(c) +
                                  " listed twice");
    }
    pi.rank[c] = pos;
  }
  return pi;
}

PriceResponsivenessPolicy PriceResponsivenessPolicy::from_order(
    int num_cadets, int num_prices,
    std::vector<std::pair<Cadet, Price>> order) {
  PriceResponsivenessPolicy omega;
  omega.num_cadets = num_cadets;
  omega.num_prices = num_prices;
  omega.order = std::move(order);
  const std::size_t expected =
      static_cast<std::size_t>(num_cadets) * static_cast<std::size_t>(num_prices);
  if (omega.order.size() != expected) {
    throw std::invalid_argument(
        "policy: order must list every (cadet, price) pair exactly once (" +
        std::to_string(expected) + " pairs, got " +
        std::to_string(omega.order.size()) + ")");
  }
  omega.rank_table.assign(expected, -1);
  for (std::size_t pos = 0; pos < omega.order.size(); ++pos) {
    auto [i, t] = omega.order[pos];
    if (i < 0 || i >= num_cadets || t < 0 || t >= num_prices) {
      throw std::invalid_argument("policy: pair (" + std::to_string(i) + "," +
                                  std::to_string(t) + ") out of range");
    }
    int& slot = omega.rank_table[static_cast<std::size_t>(i) * num_prices + t];
    if (slot != -1) {
      throw std::invalid_argument("policy: pair (" + std::to_string(i) + "," +
                                  std::to_string(t) + ") listed twice");
    }
    slot = static_cast<int>(pos);
  }
  return omega;
}

int PreferenceRelation::rank_of(const Assignment& a) const {
  if (!a.has_value()) return unmatched_rank();
  for (std::size_t k = 0; k < acceptable.size(); ++k) {
    if (acceptable[k] == *a) return static_cast<int>(k);
  }
  return unmatched_rank() + 1;  // unacceptable: strictly below unmatched
}

bool PreferenceRelation::is_acceptable(Branch b, Price t) const {
  for (const auto& e : acceptable) {
    if (e.first == b && e.second == t) return true;
  }
  return false;
}

void validate_preference(const PreferenceRelation& pref, int num_branches,
                         int num_prices, const std::string& who) {
  const std::string where = who.empty() ? "preferences" : "preferences[" + who + "]";
  // Per branch, track the last listed price; prices must arrive as 0,1,2,...
  std::vector<int> last_price(num_branches, -1);
  for (std::size_t k = 0; k < pref.acceptable.size(); ++k) {
    auto [b, t] = pref.acceptable[k];
    const std::string entry = where + "[" + std::to_string(k) + "]";
    if (b < 0 || b >= num_branches) {
      throw std::invalid_argument(entry + ": branch index " + std::to_string(b) +
                                  " out of range");
    }
    if (t < 0 || t >= num_prices) {
      throw std::invalid_argument(entry + ": price index " + std::to_string(t) +
                                  " out of range");
    }
    if (t <= last_price[b]) {
      throw std::invalid_argument(entry + ": duplicate or price-decreasing entry"
                                  " for branch " + std::to_string(b) +
                                  " (a cheaper price must be ranked first)");
    }
    if (t != last_price[b] + 1) {
      throw std::invalid_argument(entry + ": price index " + std::to_string(t) +
                                  " for branch " + std::to_string(b) +
                                  " listed while price " +
                                  std::to_string(last_price[b] + 1) +
                                  " is unacceptable");
    }
    last_price[b] = t;
  }
}

int Allocation::count_at_branch(Branch b) const {
  int n = 0;
  for (const auto& a : by_cadet) {
    if (a && a->first == b) ++n;
  }
  return n;
}

int Allocation::count_increased_at_branch(Branch b) const {
  int n = 0;
  for (const auto& a : by_cadet) {
    if (a && a->first == b && a->second >= 1) ++n;
  }
  return n;
}

int Allocation::count_unmatched() const {
  int n = 0;
  for (const auto& a : by_cadet) {
    if (!a) ++n;
  }
  return n;
}

std::vector<Contract> Allocation::contracts() const {
  std::vector<Contract> out;
  for (Cadet i = 0; i < num_cadets(); ++i) {
    if (by_cadet[i]) out.push_back({i, by_cadet[i]->first, by_cadet[i]->second});
  }
  return out;
}

void validate_instance(const Instance& instance) {
  validate_ladder(instance.ladder);
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();
  for (int b = 0; b < nb; ++b) {
    const auto& spec = instance.branches[b];
    const std::string where = "branches[" + std::to_string(b) + "]";
    if (spec.id.empty()) {
      throw std::invalid_argument(where + ".id: must be nonempty");
    }
    if (spec.q_total < 0) {
      throw std::invalid_argument(where + ".q_total: must be non-negative");
    }
    if (spec.q_flex < 0 || spec.q_flex > spec.q_total) {
      throw std::invalid_argument(where + ".q_flex: must satisfy 0 <= q_flex <= q_total (got " +
                                  std::to_string(spec.q_flex) + " with q_total " +
                                  std::to_string(spec.q_total) + ")");
    }
    for (int b2 = 0; b2 < b; ++b2) {
      if (instance.branches[b2].id == spec.id) {
        throw std::invalid_argument(where + ".id: duplicate branch id '" + spec.id + "'");
      }
    }
  }
  if (static_cast<int>(instance.priorities.size()) != nb) {
    throw std::invalid_argument("priorities: need one priority order per branch");
  }
  if (static_cast<int>(instance.policies.size()) != nb) {
    throw std::invalid_argument("policies: need one policy per branch");
  }
  for (int b = 0; b < nb; ++b) {
    const std::string where = "branches[" + std::to_string(b) + "]";
    if (instance.priorities[b].num_cadets() != n) {
      throw std::invalid_argument(where + ".priority: must rank all " +
                                  std::to_string(n) + " cadets");
    }
    const auto& omega = instance.policies[b];
    if (omega.num_cadets != n || omega.num_prices != instance.num_prices()) {
      throw std::invalid_argument(where + ".policy: built for a different cadet/price universe");
    }
    if (!is_valid_policy(omega, instance.priorities[b])) {
      throw std::invalid_argument(where + ".policy: not a valid price responsiveness policy"
                                  " for the branch priority");
    }
  }
}

bool allocation_feasible(const Allocation& alloc, const Instance& instance) {
  if (alloc.num_cadets() != instance.num_cadets()) return false;
  std::vector<int> total(instance.num_branches(), 0);
  std::vector<int> increased(instance.num_branches(), 0);
  for (const auto& a : alloc.by_cadet) {
    if (!a) continue;
    auto [b, t] = *a;
    if (b < 0 || b >= instance.num_branches()) return false;
    if (t < 0 || t >= instance.num_prices()) return false;
    ++total[b];
    if (t >= 1) ++increased[b];
  }
  for (Branch b = 0; b < instance.num_branches(); ++b) {
    if (total[b] > instance.branches[b].q_total) return false;
    if (increased[b] > instance.branches[b].q_flex) return false;
  }
  return true;
}

void validate_allocation(const Allocation& alloc, const Instance& instance) {
  if (alloc.num_cadets() != instance.num_cadets()) {
    throw std::invalid_argument("allocation: cadet count mismatch");
  }
  std::vector<int> total(instance.num_branches(), 0);
  std::vector<int> increased(instance.num_branches(), 0);
  for (Cadet i = 0; i < alloc.num_cadets(); ++i) {
    const auto& a = alloc.by_cadet[i];
    if (!a) continue;
    auto [b, t] = *a;
    if (b < 0 || b >= instance.num_branches()) {
      throw std::invalid_argument("allocation: cadet " + std::to_string(i) +
                                  " assigned to unknown branch " + std::to_string(b));
    }
    if (t < 0 || t >= instance.num_prices()) {
      throw std::invalid_argument("allocation: cadet " + std::to_string(i) +
                                  " assigned unknown price index " + std::to_string(t));
    }
    ++total[b];
    if (t >= 1) ++increased[b];
  }
  for (Branch b = 0; b < instance.num_branches(); ++b) {
    if (total[b] > instance.branches[b].q_total) {
      throw std::invalid_argument("allocation: branch " + instance.branches[b].id +
                                  " over capacity (" + std::to_string(total[b]) + " > " +
                                  std::to_string(instance.branches[b].q_total) + ")");
    }
    if (increased[b] > instance.branches[b].q_flex) {
      throw std::invalid_argument("allocation: branch " + instance.branches[b].id +
                                  " exceeds its increased-price cap (" +
                                  std::to_string(increased[b]) + " > " +
                                  std::to_string(instance.branches[b].q_flex) + ")");
    }
  }
}

// ---- policy constructors ----

PriceResponsivenessPolicy build_ultimate_policy(const PriorityOrder& pi,
                                                const PriceLadder& ladder) {
  const int n = pi.num_cadets();
  const int np = ladder.num_prices();
  std::vector<std::pair<Cadet, Price>> order;
  order.reserve(static_cast<std::size_t>(n) * np);
  for (Price t = np - 1; t >= 0; --t) {
    for (Cadet c : pi.ranking) order.emplace_back(c, t);
  }
  return PriceResponsivenessPolicy::from_order(n, np, std::move(order));
}

namespace {

// Direction of the mandated comparison between two distinct pairs under a
// tiered policy. Returns true when x must rank above y.
bool tiered_above(const PriorityOrder& pi, const std::vector<int>& tier_of,
                  const std::vector<JumpScope>& scopes,
                  std::pair<Cadet, Price> x, std::pair<Cadet, Price> y) {
  auto [i, ti] = x;
  auto [j, tj] = y;
  if (ti == tj) return pi.outranks(i, j);  // same price level: baseline
  if (ti < tj) return !tiered_above(pi, tier_of, scopes, y, x);
  // Now ti > tj: i is the would-be jumper.
  if (tier_of[i] == tier_of[j]) return true;  // jumps always work in-tier
  if (tier_of[i] < tier_of[j]) return true;   // higher tier and higher price
  // i sits in a lower tier than j; only OverAll scope jumps across tiers.
  return scopes[tier_of[i]] == JumpScope::OverAll;
}

}  // namespace

PriceResponsivenessPolicy build_tiered_policy(const PriorityOrder& pi,
                                              const TierSpec& tiers,
                                              const PriceLadder& ladder) {
  const int n = pi.num_cadets();
  const int np = ladder.num_prices();
  if (tiers.scopes.size() != tiers.tiers.size()) {
    throw std::invalid_argument("tiers: need one jump scope per tier");
  }
  std::vector<int> tier_of(n, -1);
  int covered = 0;
  int prev_worst = -1;  // worst baseline rank seen in earlier tiers
  for (std::size_t m = 0; m < tiers.tiers.size(); ++m) {
    if (tiers.tiers[m].empty()) {
      throw std::invalid_argument("tiers[" + std::to_string(m) + "]: empty tier");
    }
    int best = n, worst = -1;
    for (Cadet c : tiers.tiers[m]) {
      if (c < 0 || c >= n) {
        throw std::invalid_argument("tiers[" + std::to_string(m) + "]: cadet index " +
                                    std::to_string(c) + " out of range");
      }
      if (tier_of[c] != -1) {
        throw std::invalid_argument("tiers[" + std::to_string(m) + "]: cadet index " +
                                    std::to_string(c) + " appears in two tiers");
      }
      tier_of[c] = static_cast<int>(m);
      ++covered;
      best = std::min(best, pi.rank[c]);
      worst = std::max(worst, pi.rank[c]);
    }
    if (best <= prev_worst) {
      throw std::invalid_argument("tiers[" + std::to_string(m) +
                                  "]: not consistent with the baseline priority"
                                  " (a member outranks someone in an earlier tier)");
    }
    prev_worst = worst;
  }
  if (covered != n) {
    throw std::invalid_argument("tiers: partition must cover every cadet exactly once");
  }

  // The rules above fix the direction of every pairwise comparison. A valid
  // policy exists iff that tournament is transitive, in which case sorting by
  // win count recovers the unique order.
  std::vector<std::pair<Cadet, Price>> pairs;
  pairs.reserve(static_cast<std::size_t>(n) * np);
  for (Cadet i = 0; i < n; ++i) {
    for (Price t = 0; t < np; ++t) pairs.emplace_back(i, t);
  }
  const std::size_t m = pairs.size();
  std::vector<int> wins(m, 0);
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (tiered_above(pi, tier_of, tiers.scopes, pairs[a], pairs[b])) {
        ++wins[a];
      } else {
        ++wins[b];
      }
    }
  }
  std::vector<std::size_t> idx(m);
  std::iota(idx.begin(), idx.end(), 0);
  std::sort(idx.begin(), idx.end(),
            [&](std::size_t a, std::size_t b) { return wins[a] > wins[b]; });
  // Transitive tournaments have pairwise-distinct win counts and every edge
  // agreeing with the win-count order; otherwise report a witnessing cycle.
  for (std::size_t a = 0; a < m; ++a) {
    for (std::size_t b = a + 1; b < m; ++b) {
      if (!tiered_above(pi, tier_of, tiers.scopes, pairs[idx[a]], pairs[idx[b]])) {
        // Find a 3-cycle through the offending edge for the error message.
        for (std::size_t c = 0; c < m; ++c) {
          if (c == idx[a] || c == idx[b]) continue;
          if (tiered_above(pi, tier_of, tiers.scopes, pairs[idx[a]], pairs[c]) &&
              tiered_above(pi, tier_of, tiers.scopes, pairs[c], pairs[idx[b]])) {
            auto show = [](std::pair<Cadet, Price> p) {
              return "(cadet " + std::to_string(p.first) + ", price " +
                     std::to_string(p.second) + ")";
            };
            throw std::invalid_argument(
                "tiers: the requested jump scopes admit no transitive order; "
                "witness cycle " + show(pairs[idx[b]]) + " > " + show(pairs[idx[a]]) +
                " > " + show(pairs[c]) + " > " + show(pairs[idx[b]]));
          }
        }
        throw std::invalid_argument(
            "tiers: the requested jump scopes admit no transitive order");
      }
    }
  }
  std::vector<std::pair<Cadet, Price>> order;
  order.reserve(m);
  for (std::size_t k = 0; k < m; ++k) order.push_back(pairs[idx[k]]);
  return PriceResponsivenessPolicy::from_order(n, np, std::move(order));
}

PriorityOrder scoring_baseline(const ScoringSpec& spec) {
  const int n = static_cast<int>(spec.merit.size());
  std::vector<Cadet> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](Cadet a, Cadet b) {
    if (spec.merit[a] != spec.merit[b]) return spec.merit[a] > spec.merit[b];
    return spec.tiebreak.rank[a] < spec.tiebreak.rank[b];
  });
  return PriorityOrder::from_ranking(std::move(order));
}

PriceResponsivenessPolicy build_scoring_policy(const ScoringSpec& spec,
                                               const PriceLadder& ladder) {
  const int n = static_cast<int>(spec.merit.size());
  const int np = ladder.num_prices();
  if (static_cast<int>(spec.boost.size()) != np) {
    throw std::invalid_argument("scoring.boost: need one value per price index");
  }
  if (spec.boost[0] != 0) {
    throw std::invalid_argument("scoring.boost[0]: must be 0 at the base price");
  }
  for (int t = 1; t < np; ++t) {
    if (!(spec.boost[t - 1] < spec.boost[t])) {
      throw std::invalid_argument("scoring.boost[" + std::to_string(t) +
                                  "]: must be strictly increasing");
    }
  }
  for (int t = 0; t < np; ++t) {
    if (spec.boost[t] < 0) {
      throw std::invalid_argument("scoring.boost[" + std::to_string(t) +
                                  "]: must be non-negative");
    }
  }
  if (spec.tiebreak.num_cadets() != n) {
    throw std::invalid_argument("scoring.tiebreak: must rank all cadets");
  }
  for (int i = 0; i < n; ++i) {
    if (spec.merit[i] < 0) {
      throw std::invalid_argument("scoring.merit[" + std::to_string(i) +
                                  "]: must be non-negative");
    }
  }
  std::vector<std::pair<Cadet, Price>> order;
  order.reserve(static_cast<std::size_t>(n) * np);
  for (Cadet i = 0; i < n; ++i) {
    for (Price t = 0; t < np; ++t) order.emplace_back(i, t);
  }
  // Equal totals for the same cadet are impossible (boost is strictly
  // increasing), so total-then-tiebreak is already a strict order.
  std::sort(order.begin(), order.end(),
            [&](std::pair<Cadet, Price> a, std::pair<Cadet, Price> b) {
              double ta = spec.merit[a.first] + spec.boost[a.second];
              double tb = spec.merit[b.first] + spec.boost[b.second];
              if (ta != tb) return ta > tb;
              return spec.tiebreak.rank[a.first] < spec.tiebreak.rank[b.first];
            });
  return PriceResponsivenessPolicy::from_order(n, np, std::move(order));
}

bool is_valid_policy(const PriceResponsivenessPolicy& omega,
                     const PriorityOrder& pi) {
  if (omega.num_cadets != pi.num_cadets()) return false;
  const int n = omega.num_cadets;
  const int np = omega.num_prices;
  // Same price level: order must follow the baseline priority.
  for (Price t = 0; t < np; ++t) {
    for (Cadet i = 0; i < n; ++i) {
      for (Cadet j = 0; j < n; ++j) {
        if (i == j) continue;
        if (pi.outranks(i, j) != omega.outranks(i, t, j, t)) return false;
      }
    }
  }
  // Own higher price ranks above own lower price.
  for (Cadet i = 0; i < n; ++i) {
    for (Price t = 1; t < np; ++t) {
      if (!omega.outranks(i, t, i, t - 1)) return false;
    }
  }
  return true;
}

bool more_responsive(const PriceResponsivenessPolicy& nu,
                     const PriceResponsivenessPolicy& omega) {
  if (nu.num_cadets != omega.num_cadets || nu.num_prices != omega.num_prices) {
    throw std::invalid_argument("more_responsive: policies cover different universes");
  }
  const int n = nu.num_cadets;
  const int np = nu.num_prices;
  for (Cadet i = 0; i < n; ++i) {
    for (Price tp = 1; tp < np; ++tp) {
      for (Cadet j = 0; j < n; ++j) {
        for (Price t = 0; t < tp; ++t) {
          if (omega.outranks(i, tp, j, t) && !nu.outranks(i, tp, j, t)) {
            return false;
          }
        }
      }
    }
  }
  return true;
}

// ---- preference-domain enumeration ----

std::uint64_t count_preferences(int num_branches, int num_prices,
                                std::uint64_t guard) {
  if (num_branches < 0 || num_prices < 0) {
    throw std::invalid_argument("count_preferences: negative universe");
  }
  // Sum over per-branch acceptable-prefix lengths (k_1..k_B) of the number of
  // interleavings: (sum k)! / prod(k!). Computed incrementally: adding a
  // branch with k entries to a list of s entries multiplies by C(s+k, k).
  std::uint64_t total = 0;
  std::vector<int> k(num_branches, 0);
  auto choose = [](std::uint64_t s, std::uint64_t kk) -> std::uint64_t {
    // C(s+kk, kk) with overflow care at desk scale.
    std::uint64_t r = 1;
    for (std::uint64_t x = 1; x <= kk; ++x) {
      r = r * (s + x) / x;  // exact: product of x consecutive ints divisible by x!
    }
    return r;
  };
  // Iterate all (k_1..k_B) in mixed radix.
  while (true) {
    std::uint64_t ways = 1;
    std::uint64_t s = 0;
    for (int b = 0; b < num_branches; ++b) {
      ways *= choose(s, static_cast<std::uint64_t>(k[b]));
      s += static_cast<std::uint64_t>(k[b]);
      if (ways > guard) {
        throw std::runtime_error(
            "preference enumeration would exceed the guard of " +
            std::to_string(guard) + " relations");
      }
    }
    total += ways;
    if (total > guard) {
      throw std::runtime_error("preference enumeration would exceed the guard of " +
                               std::to_string(guard) + " relations");
    }
    int b = 0;
    while (b < num_branches && k[b] == num_prices) {
      k[b] = 0;
      ++b;
    }
    if (b == num_branches) break;
    ++k[b];
  }
  return total;
}

namespace {

void visit_preferences_rec(int num_branches, int num_prices,
                           std::vector<int>& next_price,
                           PreferenceRelation& current,
                           const std::function<void(const PreferenceRelation&)>& visit) {
  // Every node of the recursion is a complete relation (remaining pairs are
  // unacceptable), so emit first, then extend.
  visit(current);
  for (Branch b = 0; b < num_branches; ++b) {
    if (next_price[b] >= num_prices) continue;
    current.acceptable.emplace_back(b, next_price[b]);
    ++next_price[b];
    visit_preferences_rec(num_branches, num_prices, next_price, current, visit);
    --next_price[b];
    current.acceptable.pop_back();
  }
}

}  // namespace

void visit_preferences(int num_branches, int num_prices,
                       const std::function<void(const PreferenceRelation&)>& visit) {
  std::vector<int> next_price(num_branches, 0);
  PreferenceRelation current;
  visit_preferences_rec(num_branches, num_prices, next_price, current, visit);
}

std::vector<PreferenceRelation> enumerate_preferences(int num_branches,
                                                      int num_prices,
                                                      std::uint64_t guard) {
  count_preferences(num_branches, num_prices, guard);  // throws when too large
  std::vector<PreferenceRelation> out;
  visit_preferences(num_branches, num_prices,
                    [&](const PreferenceRelation& p) { out.push_back(p); });
  return out;
}

PreferenceRelation complete_below_unmatched(const PreferenceRelation& pref,
                                            int num_branches, int num_prices) {
  PreferenceRelation full = pref;
  std::vector<char> listed(static_cast<std::size_t>(num_branches) * num_prices, 0);
  for (auto [b, t] : pref.acceptable) {
    listed[static_cast<std::size_t>(b) * num_prices + t] = 1;
  }
  for (Branch b = 0; b < num_branches; ++b) {
    for (Price t = 0; t < num_prices; ++t) {
      if (!listed[static_cast<std::size_t>(b) * num_prices + t]) {
        full.acceptable.emplace_back(b, t);
      }
    }
  }
  return full;
}

}  // namespace cadetmatch
