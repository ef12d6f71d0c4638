#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <utility>
#include <vector>

#include "json.hpp"
#include "tracelens/dataset.hpp"

namespace tracelens {

enum class EventKind {
  kHoverElement,
  kHoverDetailRow,
  kEncodingAssign,
  kFilterApply,
  kFilterChange,
};

std::string_view EventKindName(EventKind kind);
std::optional<EventKind> ParseEventKind(std::string_view text);
inline bool IsHoverKind(EventKind kind) {
  return kind == EventKind::kHoverElement || kind == EventKind::kHoverDetailRow;
}

struct InteractionEvent {
  int64_t timestamp_ms = 0;  // since session start
  EventKind kind = EventKind::kHoverElement;
  // Hover kinds.
  std::string element;
  std::vector<DatapointId> members;
  int64_t dwell_ms = 0;
  // Attribute kinds.
  std::string attribute;

  static InteractionEvent Hover(int64_t t, std::string element,
                                std::vector<DatapointId> members, int64_t dwell);
  static InteractionEvent DetailRow(int64_t t, DatapointId row, int64_t dwell);
  static InteractionEvent OnAttribute(int64_t t, EventKind kind, std::string attribute);

  friend bool operator==(const InteractionEvent&, const InteractionEvent&) = default;
};

// What the ledger did with an event that passed validation.
enum class Disposition {
  kAccepted,
  kBelowThreshold,  // hover shorter than the dwell gate
  kDuplicate,       // repeated hover under binary-per-element dedupe
  kCoalesced,       // filter change inside the quiet period of the previous one
};

std::string_view DispositionName(Disposition disposition);

struct LoggedEvent {
  InteractionEvent event;
  Disposition disposition = Disposition::kAccepted;
};

struct LedgerOptions {
  int64_t hover_threshold_ms = 350;
  int64_t filter_change_quiet_ms = 350;
  double detail_row_weight = 1.0;
  bool dedupe_binary_per_element = false;
};

struct LedgerDelta {
  Disposition disposition = Disposition::kAccepted;
  std::vector<std::pair<DatapointId, double>> datapoints;
  std::optional<size_t> attribute;

  bool changed() const { return !datapoints.empty() || attribute.has_value(); }
};

enum class NormalizeMode { kRelative, kAbsolute, kBinary };

std::string_view NormalizeModeName(NormalizeMode mode);
std::optional<NormalizeMode> ParseNormalizeMode(std::string_view text);

// Relative divides by the maximum, Absolute by the sum, Binary maps any
// interaction to 1. All-zero input yields all zeros in every mode.
std::vector<double> Normalize(std::span<const double> counters, NormalizeMode mode);

// Interaction counters for one session. Single writer; copy to snapshot.
class Ledger {
 public:
  Ledger() = default;
  Ledger(size_t row_count, std::vector<std::string> attributes,
         LedgerOptions options = {});

  // Validates, logs and applies one event. Throws Error(kUnknownElement),
  // Error(kUnknownAttribute) or Error(kInvalidEvent); rejected events are not
  // logged.
  LedgerDelta Record(const InteractionEvent& event);

  const std::vector<double>& datapoint_counters() const { return datapoint_counters_; }
  const std::vector<uint64_t>& attribute_counters() const { return attribute_counters_; }
  const std::vector<std::string>& attributes() const { return attributes_; }
  uint64_t attribute_counter(std::string_view name) const;
  const std::vector<LoggedEvent>& log() const { return log_; }
  const LedgerOptions& options() const { return options_; }
  size_t accepted_hovers() const { return accepted_hovers_; }

  std::vector<double> AttributeCountersAsDouble() const;

 private:
  size_t AttributeIndex(const std::string& name) const;

  LedgerOptions options_;
  std::vector<std::string> attributes_;
  std::unordered_map<std::string, size_t> attribute_index_;
  std::vector<double> datapoint_counters_;
  std::vector<uint64_t> attribute_counters_;
  std::vector<LoggedEvent> log_;
  std::unordered_map<std::string, bool> hovered_elements_;
  std::unordered_map<size_t, int64_t> last_filter_change_;
  size_t accepted_hovers_ = 0;
};

Ledger ReplayLedger(size_t row_count, std::vector<std::string> attributes,
                    std::span<const InteractionEvent> events,
                    LedgerOptions options = {});

// One JSON object per line: {"t", "kind", "target", "dwell"}.
nlohmann::ordered_json EventToJson(const InteractionEvent& event);
InteractionEvent EventFromJson(const nlohmann::json& json);  // throws kCorruptLog
void WriteEventLog(std::ostream& out, std::span<const InteractionEvent> events);
// Throws Error(kCorruptLog) naming the 1-based line that failed.
std::vector<InteractionEvent> ReadEventLog(std::istream& in);
std::vector<InteractionEvent> ReadEventLogFile(const std::string& path);

}  // namespace tracelens
