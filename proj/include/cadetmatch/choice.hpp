#pragma once

#include <vector>

#include "cadetmatch/model.hpp"

namespace cadetmatch {

// Outcome of one branch's selection from an offered contract set. Step 1
// fills base positions, Step 2 fills flexible positions; everything offered
// but not selected is rejected.
struct ChoiceResult {
  std::vector<Contract> base_selected;
  std::vector<Contract> flex_selected;
  std::vector<Contract> rejected;

  std::vector<Contract> selected() const {
    std::vector<Contract> all = base_selected;
    all.insert(all.end(), flex_selected.begin(), flex_selected.end());
    return all;
  }
};

// The two-step choice rule of a branch with base capacity q_total - q_flex
// and flexible capacity q_flex.
//
// Step 1 takes up to q_base base-price contracts, best baseline priority
// first. Step 2 considers the remaining cadets, keeps each cadet's single
// best contract under the policy, and takes up to q_flex of those, best
// policy rank first (base-price contracts may win flexible positions).
//
// All offered contracts must name the same branch; `expected_branch` pins
// which one (pass -1 to infer it from the offers). A cadet may offer several
// contracts at different prices.
ChoiceResult cmp_choice(const BranchSpec& branch, const PriorityOrder& pi,
                        const PriceResponsivenessPolicy& omega,
                        const std::vector<Contract>& offered,
                        Branch expected_branch = -1);

namespace detail {

// Allocation-free core shared by cmp_choice and the mechanism engine.
// Assumes offered is a validated single-branch contract set. On return,
// out_price[i] is cadet i's selected price (-1 when not selected) and
// out_flex[i] marks a flexible-position selection. Scratch buffers are
// reused across calls.
struct ChoiceScratch {
  std::vector<char> has_base;
  std::vector<Price> best_price;
};

void cmp_choose(const BranchSpec& branch, const PriorityOrder& pi,
                const PriceResponsivenessPolicy& omega,
                const std::vector<Contract>& offered, ChoiceScratch& scratch,
                std::vector<Price>& out_price, std::vector<char>& out_flex);

}  // namespace detail

}  // namespace cadetmatch
