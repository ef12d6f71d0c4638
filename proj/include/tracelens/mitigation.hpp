#pragma once

#include <optional>

#include "tracelens/behavior.hpp"
#include "tracelens/charts.hpp"

namespace tracelens {

struct MitigationOptions {
  // Minimum shortfall of observed share below target share.
  double under_share_threshold = 0.05;
};

// Suggests, never applies, a filter toward under-emphasized values.
// Nominal: the categories whose observed share trails the target share by
// more than the threshold. Binned: the contiguous run of under-target bins
// with the largest total shortfall, if that shortfall exceeds the threshold.
std::optional<FilterPredicate> SuggestReverseFilter(const BehaviorSnapshot& snapshot,
                                                    const MitigationOptions& options = {});

}  // namespace tracelens
