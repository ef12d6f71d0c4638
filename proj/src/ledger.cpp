#include "tracelens/ledger.hpp"

#include <algorithm>
#include <fstream>
#include <istream>
#include <ostream>

#include "tracelens/error.hpp"

namespace tracelens {

InteractionEvent InteractionEvent::Hover(int64_t t, std::string element,
                                         std::vector<DatapointId> members, int64_t dwell) {
  InteractionEvent e;
  e.timestamp_ms = t;
  e.kind = EventKind::kHoverElement;
  e.element = std::move(element);
  e.members = std::move(members);
  e.dwell_ms = dwell;
  return e;
}

InteractionEvent InteractionEvent::DetailRow(int64_t t, DatapointId row, int64_t dwell) {
  InteractionEvent e;
  e.timestamp_ms = t;
  e.kind = EventKind::kHoverDetailRow;
  e.element = "row:" + std::to_string(row);
  e.members = {row};
  e.dwell_ms = dwell;
  return e;
}

InteractionEvent InteractionEvent::OnAttribute(int64_t t, EventKind kind,
                                               std::string attribute) {
  InteractionEvent e;
  e.timestamp_ms = t;
  e.kind = kind;
  e.attribute = std::move(attribute);
  return e;
}

std::string_view EventKindName(EventKind kind) {
  switch (kind) {
    case EventKind::kHoverElement: return "hover_element";
    case EventKind::kHoverDetailRow: return "hover_detail_row";
    case EventKind::kEncodingAssign: return "encoding_assign";
    case EventKind::kFilterApply: return "filter_apply";
    case EventKind::kFilterChange: return "filter_change";
  }
  return "hover_element";
}

std::optional<EventKind> ParseEventKind(std::string_view text) {
  for (EventKind k : {EventKind::kHoverElement, EventKind::kHoverDetailRow,
                      EventKind::kEncodingAssign, EventKind::kFilterApply,
                      EventKind::kFilterChange})
    if (EventKindName(k) == text) return k;
  return std::nullopt;
}

std::string_view DispositionName(Disposition disposition) {
  switch (disposition) {
    case Disposition::kAccepted: return "accepted";
    case Disposition::kBelowThreshold: return "ignored";
    case Disposition::kDuplicate: return "duplicate";
    case Disposition::kCoalesced: return "coalesced";
  }
  return "accepted";
}

std::string_view NormalizeModeName(NormalizeMode mode) {
  switch (mode) {
    case NormalizeMode::kRelative: return "Relative";
    case NormalizeMode::kAbsolute: return "Absolute";
    case NormalizeMode::kBinary: return "Binary";
  }
  return "Relative";
}

std::optional<NormalizeMode> ParseNormalizeMode(std::string_view text) {
  for (NormalizeMode m : {NormalizeMode::kRelative, NormalizeMode::kAbsolute,
                          NormalizeMode::kBinary})
    if (NormalizeModeName(m) == text) return m;
  return std::nullopt;
}

std::vector<double> Normalize(std::span<const double> counters, NormalizeMode mode) {
  std::vector<double> out(counters.size(), 0.0);
  switch (mode) {
    case NormalizeMode::kRelative: {
      double max = 0.0;
      for (double c : counters) max = std::max(max, c);
      if (max <= 0.0) return out;
      for (size_t i = 0; i < counters.size(); ++i) out[i] = counters[i] / max;
      break;
    }
    case NormalizeMode::kAbsolute: {
      double sum = 0.0;
      for (double c : counters) sum += c;
      if (sum <= 0.0) return out;
      for (size_t i = 0; i < counters.size(); ++i) out[i] = counters[i] / sum;
      break;
    }
    case NormalizeMode::kBinary:
      for (size_t i = 0; i < counters.size(); ++i) out[i] = counters[i] > 0.0 ? 1.0 : 0.0;
      break;
  }
  return out;
}

Ledger::Ledger(size_t row_count, std::vector<std::string> attributes, LedgerOptions options)
    : options_(options),
      attributes_(std::move(attributes)),
      datapoint_counters_(row_count, 0.0),
      attribute_counters_(attributes_.size(), 0) {
  for (size_t i = 0; i < attributes_.size(); ++i) attribute_index_[attributes_[i]] = i;
}

size_t Ledger::AttributeIndex(const std::string& name) const {
  auto it = attribute_index_.find(name);
  if (it == attribute_index_.end())
    throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + name + "'");
  return it->second;
}

uint64_t Ledger::attribute_counter(std::string_view name) const {
  return attribute_counters_[AttributeIndex(std::string(name))];
}

std::vector<double> Ledger::AttributeCountersAsDouble() const {
  return {attribute_counters_.begin(), attribute_counters_.end()};
}

LedgerDelta Ledger::Record(const InteractionEvent& event) {
  if (!log_.empty() && event.timestamp_ms < log_.back().event.timestamp_ms) {
    throw Error(ErrorCode::kInvalidEvent,
                "event at t=" + std::to_string(event.timestamp_ms) +
                    " precedes the previous event");
  }
  if (event.timestamp_ms < 0) throw Error(ErrorCode::kInvalidEvent, "negative timestamp");

  LedgerDelta delta;
  if (IsHoverKind(event.kind)) {
    if (event.dwell_ms < 0) throw Error(ErrorCode::kInvalidEvent, "negative dwell");
    if (event.members.empty())
      throw Error(ErrorCode::kUnknownElement, "element '" + event.element + "' has no members");
    if (event.kind == EventKind::kHoverDetailRow && event.members.size() != 1)
      throw Error(ErrorCode::kInvalidEvent, "detail-row hover must name exactly one row");
    for (DatapointId id : event.members) {
      if (id >= datapoint_counters_.size())
        throw Error(ErrorCode::kUnknownElement,
                    "element '" + event.element + "' references unknown row " + std::to_string(id));
    }

    if (event.kind == EventKind::kHoverElement && event.dwell_ms < options_.hover_threshold_ms) {
      delta.disposition = Disposition::kBelowThreshold;
    } else if (options_.dedupe_binary_per_element && hovered_elements_.count(event.element)) {
      delta.disposition = Disposition::kDuplicate;
    } else {
      const double weight = event.kind == EventKind::kHoverDetailRow
                                ? options_.detail_row_weight
                                : 1.0 / static_cast<double>(event.members.size());
      delta.datapoints.reserve(event.members.size());
      for (DatapointId id : event.members) {
        datapoint_counters_[id] += weight;
        delta.datapoints.emplace_back(id, weight);
      }
      hovered_elements_[event.element] = true;
      ++accepted_hovers_;
    }
  } else {
    const size_t index = AttributeIndex(event.attribute);
    if (event.kind == EventKind::kFilterChange) {
      auto last = last_filter_change_.find(index);
      const bool coalesce = last != last_filter_change_.end() &&
                            event.timestamp_ms - last->second < options_.filter_change_quiet_ms;
      last_filter_change_[index] = event.timestamp_ms;
      if (coalesce) delta.disposition = Disposition::kCoalesced;
    }
    if (delta.disposition == Disposition::kAccepted) {
      ++attribute_counters_[index];
      delta.attribute = index;
    }
  }
  log_.push_back({event, delta.disposition});
  return delta;
}

Ledger ReplayLedger(size_t row_count, std::vector<std::string> attributes,
                    std::span<const InteractionEvent> events, LedgerOptions options) {
  Ledger ledger(row_count, std::move(attributes), options);
  for (const InteractionEvent& event : events) ledger.Record(event);
  return ledger;
}

nlohmann::ordered_json EventToJson(const InteractionEvent& event) {
  nlohmann::ordered_json out;
  out["t"] = event.timestamp_ms;
  out["kind"] = EventKindName(event.kind);
  if (IsHoverKind(event.kind)) {
    out["target"] = {{"element", event.element}, {"members", event.members}};
    out["dwell"] = event.dwell_ms;
  } else {
    out["target"] = event.attribute;
    out["dwell"] = nullptr;
  }
  return out;
}

InteractionEvent EventFromJson(const nlohmann::json& json) {
  try {
    InteractionEvent event;
    event.timestamp_ms = json.at("t").get<int64_t>();
    const auto kind = ParseEventKind(json.at("kind").get<std::string>());
    if (!kind) throw Error(ErrorCode::kCorruptLog, "unknown event kind");
    event.kind = *kind;
    const auto& target = json.at("target");
    if (IsHoverKind(event.kind)) {
      event.element = target.at("element").get<std::string>();
      event.members = target.at("members").get<std::vector<DatapointId>>();
      event.dwell_ms = json.at("dwell").get<int64_t>();
    } else {
      event.attribute = target.get<std::string>();
    }
    return event;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptLog, e.what());
  }
}

void WriteEventLog(std::ostream& out, std::span<const InteractionEvent> events) {
  for (const InteractionEvent& event : events) out << EventToJson(event).dump() << '\n';
}

std::vector<InteractionEvent> ReadEventLog(std::istream& in) {
  std::vector<InteractionEvent> events;
  std::string line;
  size_t line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.find_first_not_of(" \t") == std::string::npos) continue;
    try {
      events.push_back(EventFromJson(nlohmann::json::parse(line)));
    } catch (const std::exception& e) {
      throw Error(ErrorCode::kCorruptLog,
                  "line " + std::to_string(line_number) + ": " + e.what());
    }
  }
  return events;
}

std::vector<InteractionEvent> ReadEventLogFile(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  return ReadEventLog(in);
}

}  // namespace tracelens
