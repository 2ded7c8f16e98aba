#include "cadetmatch/choice.hpp"

#include <stdexcept>

namespace cadetmatch {

namespace detail {

void cmp_choose(const BranchSpec& branch, const PriorityOrder& pi,
                const PriceResponsivenessPolicy& omega,
                const std::vector<Contract>& offered, ChoiceScratch& scratch,
                std::vector<Price>& out_price, std::vector<char>& out_flex) {
  const int n = omega.num_cadets;
  out_price.assign(n, -1);
  out_flex.assign(n, 0);
  scratch.has_base.assign(n, 0);
  scratch.best_price.assign(n, -1);

  // Step 1: base positions go to the best baseline priorities among the
  // base-price offers.
  for (const Contract& c : offered) {
    if (c.price == 0) scratch.has_base[c.cadet] = 1;
  }
  int base_left = branch.q_base();
  for (Cadet c : pi.ranking) {
    if (base_left == 0) break;
    if (scratch.has_base[c]) {
      out_price[c] = 0;
      --base_left;
    }
  }

  // Step 2: every cadet not holding a base position is represented by her
  // single best offer under the policy; flexible positions go to the best
  // policy ranks among those representatives.
  for (const Contract& c : offered) {
    if (out_price[c.cadet] == 0) continue;
    Price& best = scratch.best_price[c.cadet];
    if (best == -1 || omega.rank(c.cadet, c.price) < omega.rank(c.cadet, best)) {
      best = c.price;
    }
  }
  int flex_left = branch.q_flex;
  if (flex_left > 0) {
    for (const auto& [i, t] : omega.order) {
      if (scratch.best_price[i] == t && out_price[i] == -1) {
        out_price[i] = t;
        out_flex[i] = 1;
        if (--flex_left == 0) break;
      }
    }
  }
}

}  // namespace detail

ChoiceResult cmp_choice(const BranchSpec& branch, const PriorityOrder& pi,
                        const PriceResponsivenessPolicy& omega,
                        const std::vector<Contract>& offered,
                        Branch expected_branch) {
  Branch b = expected_branch;
  for (const Contract& c : offered) {
    if (b == -1) b = c.branch;
    if (c.branch != b) {
      throw std::invalid_argument(
          "cmp_choice: offered set mixes branches " + std::to_string(b) +
          " and " + std::to_string(c.branch));
    }
    if (c.price < 0 || c.price >= omega.num_prices || c.cadet < 0 ||
        c.cadet >= omega.num_cadets) {
      throw std::invalid_argument("cmp_choice: contract outside the policy universe");
    }
  }
  for (std::size_t x = 0; x < offered.size(); ++x) {
    for (std::size_t y = x + 1; y < offered.size(); ++y) {
      if (offered[x] == offered[y]) {
        throw std::invalid_argument("cmp_choice: offered set lists a contract twice");
      }
    }
  }

  detail::ChoiceScratch scratch;
  std::vector<Price> price;
  std::vector<char> flex;
  detail::cmp_choose(branch, pi, omega, offered, scratch, price, flex);

  ChoiceResult result;
  for (Cadet i = 0; i < omega.num_cadets; ++i) {
    if (price[i] == -1) continue;
    Contract c{i, b, price[i]};
    (flex[i] ? result.flex_selected : result.base_selected).push_back(c);
  }
  for (const Contract& c : offered) {
    if (price[c.cadet] == c.price &&
        (flex[c.cadet] || c.price == 0)) {
      continue;  // this is the selected copy
    }
    result.rejected.push_back(c);
  }
  return result;
}

}  // namespace cadetmatch
