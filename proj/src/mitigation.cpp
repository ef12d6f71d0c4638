#include "tracelens/mitigation.hpp"

namespace tracelens {

std::optional<FilterPredicate> SuggestReverseFilter(const BehaviorSnapshot& snapshot,
                                                    const MitigationOptions& options) {
  if (!(snapshot.total > 0.0) || snapshot.target.size() != snapshot.observed.size())
    return std::nullopt;

  std::vector<double> shortfall(snapshot.keys.size());
  for (size_t i = 0; i < shortfall.size(); ++i)
    shortfall[i] = snapshot.target[i] - snapshot.observed[i] / snapshot.total;

  if (snapshot.bin_edges.empty()) {
    std::vector<std::string> selected;
    for (size_t i = 0; i < shortfall.size(); ++i)
      if (shortfall[i] > options.under_share_threshold) selected.push_back(snapshot.keys[i]);
    if (selected.empty()) return std::nullopt;
    return FilterPredicate::Categories(snapshot.attribute, std::move(selected));
  }

  size_t best_begin = 0, best_end = 0;
  double best = 0.0;
  for (size_t i = 0; i < shortfall.size();) {
    if (!(shortfall[i] > 0.0)) {
      ++i;
      continue;
    }
    size_t j = i;
    double run = 0.0;
    while (j < shortfall.size() && shortfall[j] > 0.0) run += shortfall[j++];
    if (run > best) {
      best = run;
      best_begin = i;
      best_end = j;
    }
    i = j;
  }
  if (!(best > options.under_share_threshold)) return std::nullopt;
  return FilterPredicate::Range(snapshot.attribute, snapshot.bin_edges[best_begin],
                                snapshot.bin_edges[best_end]);
}

}  // namespace tracelens
