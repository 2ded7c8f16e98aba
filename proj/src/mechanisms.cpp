#include "cadetmatch/mechanisms.hpp"

#include <algorithm>
#include <stdexcept>

#include "cadetmatch/choice.hpp"

namespace cadetmatch {

void validate_strategy(const QuasiStrategy& s, int num_branches,
                       const std::string& who) {
  const std::string where = who.empty() ? "strategy" : "strategies[" + who + "]";
  if (static_cast<int>(s.willing.size()) != num_branches) {
    throw std::invalid_argument(where + ".willing: must cover all " +
                                std::to_string(num_branches) + " branches");
  }
  std::vector<char> seen(num_branches, 0);
  for (Branch b : s.ranking) {
    if (b < 0 || b >= num_branches) {
      throw std::invalid_argument(where + ".ranking: branch index " +
                                  std::to_string(b) + " out of range");
    }
    if (seen[b]) {
      throw std::invalid_argument(where + ".ranking: branch index " +
                                  std::to_string(b) + " listed twice");
    }
    seen[b] = 1;
  }
}

namespace {

PriorityOrder default_proposal_order(const Instance& instance) {
  int best = 0;
  for (int b = 1; b < instance.num_branches(); ++b) {
    if (instance.branches[b].id < instance.branches[best].id) best = b;
  }
  return instance.priorities[best];
}

struct NullTraceSink {
  void proposed(int, Cadet, Branch, Price) {}
  void held(int, Cadet, Branch, Price) {}
  void rejected(int, Cadet, Branch, Price) {}
};

struct RecordTraceSink {
  MechanismTrace* out;
  void proposed(int s, Cadet i, Branch b, Price t) {
    out->push_back({TraceEvent::Kind::Proposed, s, i, b, t});
  }
  void held(int s, Cadet i, Branch b, Price t) {
    out->push_back({TraceEvent::Kind::Held, s, i, b, t});
  }
  void rejected(int s, Cadet i, Branch b, Price t) {
    out->push_back({TraceEvent::Kind::Rejected, s, i, b, t});
  }
};

// One cadet proposes per step; the receiving branch re-evaluates its whole
// accumulated pool. Offers are never withdrawn. Holds are read off the
// branch's fresh selection; a displaced cadet becomes active again with her
// proposal cursor already past everything she has offered.
template <class Sink>
Allocation mpco_engine(const Instance& instance,
                       const std::vector<PreferenceRelation>& prefs,
                       const PriorityOrder& order, Sink sink) {
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();
  std::vector<std::vector<Contract>> pools(nb);
  std::vector<int> cursor(n, 0);
  std::vector<Assignment> held(n);
  std::vector<std::vector<Price>> selected(nb, std::vector<Price>(n, -1));
  detail::ChoiceScratch scratch;
  std::vector<Price> fresh_price;
  std::vector<char> fresh_flex;

  int step = 0;
  for (;;) {
    Cadet active = -1;
    for (Cadet c : order.ranking) {
      if (!held[c] && cursor[c] < static_cast<int>(prefs[c].acceptable.size())) {
        active = c;
        break;
      }
    }
    if (active == -1) break;
    ++step;
    auto [b, t] = prefs[active].acceptable[cursor[active]++];
    sink.proposed(step, active, b, t);
    pools[b].push_back({active, b, t});

    detail::cmp_choose(instance.branches[b], instance.priorities[b],
                       instance.policies[b], pools[b], scratch, fresh_price,
                       fresh_flex);
    std::vector<Price>& old_price = selected[b];
    for (Cadet j = 0; j < n; ++j) {
      const Price was = old_price[j];
      const Price now = fresh_price[j];
      if (was == now) continue;
      if (was != -1) {
        held[j] = std::nullopt;
        sink.rejected(step, j, b, was);
      }
      if (now != -1) {
        if (held[j]) {
          throw std::logic_error(
              "cumulative offer: a cadet would be held by two branches");
        }
        held[j] = std::make_pair(b, now);
        sink.held(step, j, b, now);
      }
    }
    if (fresh_price[active] != t) sink.rejected(step, active, b, t);
    old_price.swap(fresh_price);
  }

  Allocation out;
  out.by_cadet = std::move(held);
  return out;
}

void require_prefs_shape(const Instance& instance,
                         const std::vector<PreferenceRelation>& prefs) {
  if (static_cast<int>(prefs.size()) != instance.num_cadets()) {
    throw std::invalid_argument("preferences: need one relation per cadet");
  }
}

void require_valid_inputs(const Instance& instance,
                          const std::vector<PreferenceRelation>& prefs) {
  validate_instance(instance);
  require_prefs_shape(instance, prefs);
  for (int i = 0; i < instance.num_cadets(); ++i) {
    validate_preference(prefs[i], instance.num_branches(),
                        instance.num_prices(),
                        instance.cadet_ids.empty() ? std::to_string(i)
                                                   : instance.cadet_ids[i]);
  }
}

}  // namespace

MpcoResult mpco(const Instance& instance,
                const std::vector<PreferenceRelation>& prefs,
                const std::optional<PriorityOrder>& proposal_order) {
  require_valid_inputs(instance, prefs);
  PriorityOrder order =
      proposal_order ? *proposal_order : default_proposal_order(instance);
  if (order.num_cadets() != instance.num_cadets()) {
    throw std::invalid_argument("proposal_order: must rank every cadet");
  }
  MpcoResult result;
  result.allocation =
      mpco_engine(instance, prefs, order, RecordTraceSink{&result.trace});
  validate_allocation(result.allocation, instance);
  return result;
}

Allocation mpco_allocation(const Instance& instance,
                           const std::vector<PreferenceRelation>& prefs) {
  require_valid_inputs(instance, prefs);
  return mpco_engine(instance, prefs, default_proposal_order(instance),
                     NullTraceSink{});
}

std::vector<std::optional<Branch>> da(
    const Instance& instance,
    const std::vector<std::vector<Branch>>& branch_prefs,
    const std::vector<PriorityOrder>& priorities) {
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();
  if (static_cast<int>(branch_prefs.size()) != n) {
    throw std::invalid_argument("da: need one branch ranking per cadet");
  }
  if (static_cast<int>(priorities.size()) != nb) {
    throw std::invalid_argument("da: need one priority order per branch");
  }

  std::vector<int> cursor(n, 0);
  std::vector<std::optional<Branch>> held(n);
  std::vector<std::vector<Cadet>> applicants(nb);
  std::vector<std::vector<Cadet>> holders(nb);

  for (;;) {
    for (auto& a : applicants) a.clear();
    bool any = false;
    for (Cadet i = 0; i < n; ++i) {
      if (held[i] || cursor[i] >= static_cast<int>(branch_prefs[i].size())) {
        continue;
      }
      Branch b = branch_prefs[i][cursor[i]];
      if (b < 0 || b >= nb) {
        throw std::invalid_argument("da: branch index out of range in a ranking");
      }
      applicants[b].push_back(i);
      any = true;
    }
    if (!any) break;

    for (Branch b = 0; b < nb; ++b) {
      if (applicants[b].empty()) continue;
      std::vector<Cadet> pool = holders[b];
      pool.insert(pool.end(), applicants[b].begin(), applicants[b].end());
      std::sort(pool.begin(), pool.end(), [&](Cadet x, Cadet y) {
        return priorities[b].rank[x] < priorities[b].rank[y];
      });
      const int keep = std::min<int>(instance.branches[b].q_total,
                                     static_cast<int>(pool.size()));
      holders[b].assign(pool.begin(), pool.begin() + keep);
      for (int k = 0; k < keep; ++k) held[pool[k]] = b;
      for (std::size_t k = keep; k < pool.size(); ++k) {
        held[pool[k]] = std::nullopt;
        ++cursor[pool[k]];  // the application to b is spent
      }
    }
  }
  return held;
}

namespace {

void require_two_prices(const Instance& instance, const char* mech) {
  if (instance.num_prices() != 2) {
    throw std::invalid_argument(std::string(mech) +
                                ": defined only for exactly two prices");
  }
}

void validate_strategies_shape(const Instance& instance,
                               const std::vector<QuasiStrategy>& strategies) {
  if (static_cast<int>(strategies.size()) != instance.num_cadets()) {
    throw std::invalid_argument("strategies: need one message per cadet");
  }
  for (int i = 0; i < instance.num_cadets(); ++i) {
    validate_strategy(strategies[i], instance.num_branches(),
                      instance.cadet_ids.empty() ? std::to_string(i)
                                                 : instance.cadet_ids[i]);
  }
}

// Willing cadets rank where their increased-price pair sits in the policy,
// everyone else at their base-price pair. With an ultimate policy this is
// exactly "declared payers first, baseline order within each group".
int signature_rank(const Instance& instance, Branch b,
                   const std::vector<QuasiStrategy>& strategies, Cadet i) {
  return instance.policies[b].rank(i, strategies[i].is_willing(b) ? 1 : 0);
}

Allocation usma2006_core(const Instance& instance,
                         const std::vector<QuasiStrategy>& strategies,
                         bool simultaneous) {
  require_two_prices(instance, "usma2006");
  validate_instance(instance);
  validate_strategies_shape(instance, strategies);
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();
  for (Branch b = 0; b < nb; ++b) {
    if (instance.policies[b].order !=
        build_ultimate_policy(instance.priorities[b], instance.ladder).order) {
      throw std::invalid_argument(
          "usma2006: branch " + instance.branches[b].id +
          " needs the ultimate policy (the procedure is defined for it)");
    }
  }

  const PriorityOrder oml = default_proposal_order(instance);
  std::vector<int> cursor(n, 0);
  std::vector<Branch> held_branch(n, -1);
  std::vector<char> held_base(n, 0);
  std::vector<std::vector<Cadet>> holders(nb);
  std::vector<std::vector<Cadet>> applicants(nb);

  for (;;) {
    for (auto& a : applicants) a.clear();
    bool any = false;
    for (Cadet c : oml.ranking) {
      if (held_branch[c] != -1 ||
          cursor[c] >= static_cast<int>(strategies[c].ranking.size())) {
        continue;
      }
      applicants[strategies[c].ranking[cursor[c]]].push_back(c);
      any = true;
      if (!simultaneous) break;  // one application per step
    }
    if (!any) break;

    for (Branch b = 0; b < nb; ++b) {
      if (applicants[b].empty()) continue;
      std::vector<Cadet> pool = holders[b];
      pool.insert(pool.end(), applicants[b].begin(), applicants[b].end());

      // Base positions by baseline priority, then flexible positions by the
      // willingness-adjusted priority among the rest.
      std::sort(pool.begin(), pool.end(), [&](Cadet x, Cadet y) {
        return instance.priorities[b].rank[x] < instance.priorities[b].rank[y];
      });
      const int base_keep =
          std::min<int>(instance.branches[b].q_base(), static_cast<int>(pool.size()));
      std::vector<Cadet> rest(pool.begin() + base_keep, pool.end());
      std::sort(rest.begin(), rest.end(), [&](Cadet x, Cadet y) {
        return signature_rank(instance, b, strategies, x) <
               signature_rank(instance, b, strategies, y);
      });
      const int flex_keep =
          std::min<int>(instance.branches[b].q_flex, static_cast<int>(rest.size()));

      holders[b].clear();
      for (int k = 0; k < base_keep; ++k) {
        holders[b].push_back(pool[k]);
        held_branch[pool[k]] = b;
        held_base[pool[k]] = 1;
      }
      for (int k = 0; k < flex_keep; ++k) {
        holders[b].push_back(rest[k]);
        held_branch[rest[k]] = b;
        held_base[rest[k]] = 0;
      }
      for (std::size_t k = flex_keep; k < rest.size(); ++k) {
        Cadet r = rest[k];
        held_branch[r] = -1;
        ++cursor[r];  // rejection from b is permanent
      }
    }
  }

  Allocation out;
  out.by_cadet.assign(n, std::nullopt);
  for (Cadet i = 0; i < n; ++i) {
    if (held_branch[i] == -1) continue;
    Branch b = held_branch[i];
    Price t = (!held_base[i] && strategies[i].is_willing(b)) ? 1 : 0;
    out.by_cadet[i] = std::make_pair(b, t);
  }
  return out;
}

}  // namespace

Allocation usma2006(const Instance& instance,
                    const std::vector<QuasiStrategy>& strategies) {
  return usma2006_core(instance, strategies, false);
}

Allocation usma2006_simultaneous(const Instance& instance,
                                 const std::vector<QuasiStrategy>& strategies) {
  return usma2006_core(instance, strategies, true);
}

Allocation usma2020(const Instance& instance,
                    const std::vector<QuasiStrategy>& strategies) {
  require_two_prices(instance, "usma2020");
  validate_strategies_shape(instance, strategies);
  const int n = instance.num_cadets();
  const int nb = instance.num_branches();

  std::vector<PriorityOrder> adjusted;
  adjusted.reserve(nb);
  for (Branch b = 0; b < nb; ++b) {
    std::vector<Cadet> ranking(n);
    for (Cadet i = 0; i < n; ++i) ranking[i] = i;
    std::sort(ranking.begin(), ranking.end(), [&](Cadet x, Cadet y) {
      return signature_rank(instance, b, strategies, x) <
             signature_rank(instance, b, strategies, y);
    });
    adjusted.push_back(PriorityOrder::from_ranking(std::move(ranking)));
  }

  std::vector<std::vector<Branch>> branch_prefs(n);
  for (Cadet i = 0; i < n; ++i) branch_prefs[i] = strategies[i].ranking;
  std::vector<std::optional<Branch>> mu = da(instance, branch_prefs, adjusted);

  Allocation out;
  out.by_cadet.assign(n, std::nullopt);
  for (Cadet i = 0; i < n; ++i) {
    if (!mu[i]) continue;
    Branch b = *mu[i];
    Price t = 0;
    if (strategies[i].is_willing(b)) {
      // Charged unless enough willing cadets with worse baseline priority
      // are matched to the same branch to fill the flexible positions.
      int lower = 0;
      for (Cadet j = 0; j < n; ++j) {
        if (j != i && mu[j] && *mu[j] == b && strategies[j].is_willing(b) &&
            instance.priorities[b].outranks(i, j)) {
          ++lower;
        }
      }
      if (lower < instance.branches[b].q_flex) t = 1;
    }
    out.by_cadet[i] = std::make_pair(b, t);
  }
  return out;
}

Allocation phi_mp(const Instance& instance,
                  const std::vector<PreferenceRelation>& prefs) {
  if (instance.num_branches() != 1) {
    throw std::invalid_argument("phi_mp: defined for a single branch");
  }
  require_two_prices(instance, "phi_mp");
  require_prefs_shape(instance, prefs);
  const PriorityOrder& pi = instance.priorities[0];
  const PriceResponsivenessPolicy& omega = instance.policies[0];
  const int q_base = instance.branches[0].q_base();
  const int q_flex = instance.branches[0].q_flex;
  const int n = instance.num_cadets();

  Allocation out;
  out.by_cadet.assign(n, std::nullopt);

  // Steps 0 and 1 over the cadets who find the branch acceptable at all:
  // base positions finalized, flexible positions tentative.
  std::vector<Cadet> base_set, tentative, remainder;
  for (Cadet c : pi.ranking) {
    if (!prefs[c].is_acceptable(0, 0)) continue;
    if (static_cast<int>(base_set.size()) < q_base) {
      base_set.push_back(c);
    } else if (static_cast<int>(tentative.size()) < q_flex) {
      tentative.push_back(c);
    } else {
      remainder.push_back(c);
    }
  }
  for (Cadet c : base_set) out.by_cadet[c] = std::make_pair(0, 0);

  auto willing = [&](Cadet c) { return prefs[c].is_acceptable(0, 1); };

  // Step 2 decides how many flexible positions go out at the increased
  // price, by growing the candidate pool one tentative holder at a time and
  // counting who outranks the next tentative holder's base-price pair.
  std::vector<Cadet> pool;  // J
  for (Cadet c : remainder) {
    if (willing(c)) pool.push_back(c);
  }
  auto count_above = [&](Cadet threshold) {
    int c = 0;
    for (Cadet j : pool) {
      if (omega.outranks(j, 1, threshold, 0)) ++c;
    }
    return c;
  };

  // Tentative holders relabeled worst baseline priority first.
  std::vector<Cadet> ladder(tentative.rbegin(), tentative.rend());
  int charged = 0;
  if (!ladder.empty() && !pool.empty() && count_above(ladder[0]) > 0) {
    for (int step = 1;; ++step) {
      Cadet rung = ladder[step - 1];
      if (willing(rung)) pool.push_back(rung);
      if (step == q_flex) {
        charged = q_flex;
        break;
      }
      // The walk continues only while the candidates strictly outnumber the
      // step index. Under the ultimate policy the count never drops, but a
      // tiered policy can shed candidates as the threshold cadet improves,
      // so the stop condition is "no longer exceeds", not "equals".
      if (count_above(ladder[step]) <= step) {
        charged = step;
        break;
      }
    }
  }

  // Step 3: the worst `charged` tentative holders lose their positions, the
  // rest keep the base price; the best `charged` baseline priorities in the
  // pool pay the increased price.
  for (std::size_t k = charged; k < ladder.size(); ++k) {
    out.by_cadet[ladder[k]] = std::make_pair(0, 0);
  }
  if (charged > 0) {
    std::sort(pool.begin(), pool.end(),
              [&](Cadet x, Cadet y) { return pi.rank[x] < pi.rank[y]; });
    if (static_cast<int>(pool.size()) < charged) {
      throw std::logic_error("phi_mp: fewer candidates than charged positions");
    }
    for (int k = 0; k < charged; ++k) {
      out.by_cadet[pool[k]] = std::make_pair(0, 1);
    }
  }
  return out;
}

namespace {

Allocation run_psi(const Instance& instance,
                   const std::vector<PreferenceRelation>& prefs, Branch target) {
  Allocation base = mpco_allocation(instance, prefs);
  if (instance.branches[target].q_flex < 1) return base;

  Cadet victim = -1;  // worst baseline priority among the branch's winners
  for (Cadet i = 0; i < instance.num_cadets(); ++i) {
    if (base.by_cadet[i] && base.by_cadet[i]->first == target) {
      if (victim == -1 || instance.priorities[target].outranks(victim, i)) {
        victim = i;
      }
    }
  }
  if (victim == -1) return base;

  std::vector<PreferenceRelation> without = prefs;
  auto& list = without[victim].acceptable;
  list.erase(std::remove_if(list.begin(), list.end(),
                            [&](const std::pair<Branch, Price>& e) {
                              return e.first == target;
                            }),
             list.end());
  Allocation alt = mpco_allocation(instance, without);

  const int cap = instance.branches[target].q_flex;
  if (base.count_increased_at_branch(target) == cap &&
      alt.count_increased_at_branch(target) == cap) {
    return alt;  // the victim is stranded although her priority held up
  }
  return base;
}

Allocation run_price_bump(const Instance& instance,
                          const std::vector<PreferenceRelation>& prefs,
                          Branch target) {
  Allocation base = mpco_allocation(instance, prefs);
  Cadet victim = -1;
  for (Cadet i = 0; i < instance.num_cadets(); ++i) {
    if (base.by_cadet[i] && base.by_cadet[i]->first == target) {
      if (victim == -1 || instance.priorities[target].outranks(victim, i)) {
        victim = i;
      }
    }
  }
  if (victim == -1) return base;
  if (base.by_cadet[victim]->second != 0) return base;
  if (!prefs[victim].is_acceptable(target, 1)) return base;
  if (base.count_increased_at_branch(target) + 1 >
      instance.branches[target].q_flex) {
    return base;
  }
  Allocation bumped = base;
  bumped.by_cadet[victim] = std::make_pair(target, 1);
  return bumped;
}

}  // namespace

Allocation counterexample_mechanism(CounterexampleKind kind,
                                    const Instance& instance,
                                    const std::vector<PreferenceRelation>& prefs,
                                    Branch target) {
  require_prefs_shape(instance, prefs);
  switch (kind) {
    case CounterexampleKind::DropIr: {
      std::vector<PreferenceRelation> full;
      full.reserve(prefs.size());
      for (const auto& p : prefs) {
        full.push_back(complete_below_unmatched(p, instance.num_branches(),
                                                instance.num_prices()));
      }
      return mpco_allocation(instance, full);
    }
    case CounterexampleKind::Empty: {
      Allocation out;
      out.by_cadet.assign(instance.num_cadets(), std::nullopt);
      return out;
    }
    case CounterexampleKind::DaAsDirect: {
      std::vector<std::vector<Branch>> branch_prefs(instance.num_cadets());
      for (int i = 0; i < instance.num_cadets(); ++i) {
        for (const auto& [b, t] : prefs[i].acceptable) {
          if (t == 0) branch_prefs[i].push_back(b);
        }
      }
      auto mu = da(instance, branch_prefs, instance.priorities);
      Allocation out;
      out.by_cadet.assign(instance.num_cadets(), std::nullopt);
      for (int i = 0; i < instance.num_cadets(); ++i) {
        if (mu[i]) out.by_cadet[i] = std::make_pair(*mu[i], 0);
      }
      return out;
    }
    case CounterexampleKind::Psi:
      require_two_prices(instance, "psi");
      return run_psi(instance, prefs, target);
    case CounterexampleKind::PriceBump:
      require_two_prices(instance, "price-bump");
      return run_price_bump(instance, prefs, target);
  }
  throw std::invalid_argument("counterexample_mechanism: unknown kind");
}

std::optional<CounterexampleKind> counterexample_kind_from_name(
    const std::string& name) {
  if (name == "drop-ir") return CounterexampleKind::DropIr;
  if (name == "empty") return CounterexampleKind::Empty;
  if (name == "da-as-direct") return CounterexampleKind::DaAsDirect;
  if (name == "psi") return CounterexampleKind::Psi;
  if (name == "price-bump") return CounterexampleKind::PriceBump;
  return std::nullopt;
}

}  // namespace cadetmatch
