#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "tracelens/dataset.hpp"
#include "tracelens/ledger.hpp"
#include "tracelens/targets.hpp"

namespace tracelens {

struct AdPoint {
  int64_t t_ms = 0;
  double ad = 0.0;
  std::string event_kind;  // "start" for the initial point

  friend bool operator==(const AdPoint&, const AdPoint&) = default;
};

struct SeriesAnnotation {
  int64_t t_ms = 0;
  EventKind kind = EventKind::kEncodingAssign;

  friend bool operator==(const SeriesAnnotation&, const SeriesAnnotation&) = default;
};

struct AdTimeSeries {
  std::string attribute;
  std::vector<AdPoint> points;
  std::vector<SeriesAnnotation> annotations;
  bool insufficient_evidence = true;  // as of the last point
};

// Re-derives the AD metric after every accepted event. Each series starts
// with a (0, 0) point; attribute-kind events also annotate their attribute's
// series. Events the ledger rejects raise Error(kCorruptLog).
std::vector<AdTimeSeries> ReplaySeries(const Dataset& dataset,
                                       std::span<const InteractionEvent> events,
                                       const TargetSet& targets,
                                       const LedgerOptions& options = {});

// attribute,t_ms,ad,event_kind
void WriteSeriesCsv(std::ostream& out, const std::vector<AdTimeSeries>& series);

}  // namespace tracelens
