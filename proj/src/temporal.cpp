#include "tracelens/temporal.hpp"

#include <cstdio>
#include <ostream>

#include "tracelens/behavior.hpp"
#include "tracelens/error.hpp"

namespace tracelens {

std::vector<AdTimeSeries> ReplaySeries(const Dataset& dataset,
                                       std::span<const InteractionEvent> events,
                                       const TargetSet& targets,
                                       const LedgerOptions& options) {
  std::vector<std::string> names;
  for (const AttributeSchema& a : dataset.schema()) names.push_back(a.name);
  Ledger ledger(dataset.row_count(), names, options);
  const BehaviorModel model(dataset);

  std::vector<AdTimeSeries> series(names.size());
  std::vector<double> current(names.size(), 0.0);
  for (size_t a = 0; a < names.size(); ++a) {
    series[a].attribute = names[a];
    series[a].points.push_back({0, 0.0, "start"});
  }

  for (size_t i = 0; i < events.size(); ++i) {
    const InteractionEvent& event = events[i];
    LedgerDelta delta;
    try {
      delta = ledger.Record(event);
    } catch (const Error& e) {
      throw Error(ErrorCode::kCorruptLog,
                  "event " + std::to_string(i + 1) + " rejected: " + e.what());
    }
    if (delta.disposition != Disposition::kAccepted) continue;

    if (!delta.datapoints.empty()) {
      for (size_t a = 0; a < names.size(); ++a) {
        current[a] = model.Ad(ledger.datapoint_counters(), a, targets.Get(names[a]));
        series[a].insufficient_evidence = false;
      }
    }
    const std::string kind(EventKindName(event.kind));
    for (size_t a = 0; a < names.size(); ++a)
      series[a].points.push_back({event.timestamp_ms, current[a], kind});
    if (delta.attribute) series[*delta.attribute].annotations.push_back({event.timestamp_ms, event.kind});
  }

  for (size_t a = 0; a < names.size(); ++a) {
    if (targets.Get(names[a]).keys.empty()) series[a].insufficient_evidence = true;
    if (model.Observed(ledger.datapoint_counters(), a).total() <= 0.0)
      series[a].insufficient_evidence = true;
  }
  return series;
}

void WriteSeriesCsv(std::ostream& out, const std::vector<AdTimeSeries>& series) {
  out << "attribute,t_ms,ad,event_kind\n";
  char buf[64];
  for (const AdTimeSeries& s : series) {
    std::string name = s.attribute;
    if (name.find_first_of(",\"\n") != std::string::npos) {
      std::string quoted = "\"";
      for (char c : name) {
        if (c == '"') quoted += '"';
        quoted += c;
      }
      name = quoted + "\"";
    }
    for (const AdPoint& p : s.points) {
      std::snprintf(buf, sizeof(buf), "%.17g", p.ad);
      out << name << ',' << p.t_ms << ',' << buf << ',' << p.event_kind << '\n';
    }
  }
}

}  // namespace tracelens
