#include "tracelens/session.hpp"

#include <algorithm>
#include <sstream>

#include "tracelens/error.hpp"

namespace tracelens {

namespace {

constexpr std::string_view kArchiveFormat = "tracelens-session/1";

// Encoding-matrix violations travel to the client as a violation frame.
struct SpecRejected {
  std::vector<Violation> violations;
};

std::string RequireString(const nlohmann::json& message, const char* field) {
  auto it = message.find(field);
  if (it == message.end() || !it->is_string())
    throw Error(ErrorCode::kProtocolError, std::string("field '") + field + "' must be a string");
  return it->get<std::string>();
}

const nlohmann::json& RequireObject(const nlohmann::json& message, const char* field) {
  auto it = message.find(field);
  if (it == message.end() || !it->is_object())
    throw Error(ErrorCode::kProtocolError, std::string("field '") + field + "' must be an object");
  return *it;
}

nlohmann::ordered_json SpecToJson(const ChartSpec& spec) {
  nlohmann::ordered_json out;
  out["chart_type"] = ChartTypeName(spec.chart_type);
  out["x"] = spec.x;
  out["y"] = spec.y ? nlohmann::ordered_json(*spec.y) : nlohmann::ordered_json();
  out["aggregation"] = AggregationName(spec.aggregation);
  auto& filters = out["filters"] = nlohmann::ordered_json::array();
  for (const FilterPredicate& f : spec.filters) filters.push_back(FilterToJson(f));
  return out;
}

nlohmann::ordered_json LedgerOptionsToJson(const LedgerOptions& options) {
  nlohmann::ordered_json out;
  out["hover_threshold_ms"] = options.hover_threshold_ms;
  out["filter_change_quiet_ms"] = options.filter_change_quiet_ms;
  out["detail_row_weight"] = options.detail_row_weight;
  out["dedupe_binary_per_element"] = options.dedupe_binary_per_element;
  return out;
}

LedgerOptions LedgerOptionsFromJson(const nlohmann::json& json) {
  LedgerOptions options;
  options.hover_threshold_ms = json.value("hover_threshold_ms", options.hover_threshold_ms);
  options.filter_change_quiet_ms =
      json.value("filter_change_quiet_ms", options.filter_change_quiet_ms);
  options.detail_row_weight = json.value("detail_row_weight", options.detail_row_weight);
  options.dedupe_binary_per_element =
      json.value("dedupe_binary_per_element", options.dedupe_binary_per_element);
  return options;
}

}  // namespace

std::string_view SortByName(SortBy sort) {
  switch (sort) {
    case SortBy::kOrderInDataset: return "OrderInDataset";
    case SortBy::kName: return "Name";
    case SortBy::kDatatype: return "Datatype";
    case SortBy::kFocus: return "Focus";
  }
  return "OrderInDataset";
}

std::optional<SortBy> ParseSortBy(std::string_view text) {
  for (SortBy s : {SortBy::kOrderInDataset, SortBy::kName, SortBy::kDatatype, SortBy::kFocus})
    if (SortByName(s) == text) return s;
  return std::nullopt;
}

std::string_view ConditionName(Condition condition) {
  return condition == Condition::kAwareness ? "awareness" : "control";
}

std::optional<Condition> ParseCondition(std::string_view text) {
  if (text == "awareness") return Condition::kAwareness;
  if (text == "control") return Condition::kControl;
  return std::nullopt;
}

nlohmann::ordered_json SettingsToJson(const SessionSettings& settings) {
  nlohmann::ordered_json out;
  out["sort_by"] = SortByName(settings.sort_by);
  out["color_mode"] = NormalizeModeName(settings.color_mode);
  out["focus_mode"] = FocusModeName(settings.focus_mode);
  out["color_scale"] = settings.color_scale;
  return out;
}

Session::Session(SessionOptions options) : options_(std::move(options)) {}

Session::Session(std::shared_ptr<const Dataset> dataset, SessionOptions options)
    : options_(std::move(options)) {
  Reset(std::move(dataset));
}

void Session::Reset(std::shared_ptr<const Dataset> dataset) {
  dataset_ = std::move(dataset);
  model_ = std::make_unique<BehaviorModel>(*dataset_);
  std::vector<std::string> names;
  for (const AttributeSchema& a : dataset_->schema()) names.push_back(a.name);
  ledger_ = Ledger(dataset_->row_count(), names, options_.ledger);
  targets_ = TargetSet(*dataset_);
  spec_.reset();
  filters_.clear();
  elements_.clear();
  element_index_.clear();
  open_cards_.clear();
  pending_hover_.reset();
  message_log_.clear();
  base_revision_ = revision_;
  last_t_ = 0;
  sent_element_intensities_.clear();
  sent_attribute_intensities_.clear();
  sent_order_.clear();
  sent_cards_.clear();
}

int64_t Session::Timestamp(const nlohmann::json& message) const {
  int64_t t = last_t_;
  if (auto it = message.find("t"); it != message.end()) {
    if (!it->is_number_integer() || it->get<int64_t>() < 0)
      throw Error(ErrorCode::kProtocolError, "field 't' must be a non-negative integer");
    t = it->get<int64_t>();
  } else if (options_.clock) {
    t = std::max(options_.clock(), last_t_);
  }
  if (t < last_t_)
    throw Error(ErrorCode::kProtocolError,
                "message time " + std::to_string(t) + " precedes " + std::to_string(last_t_));
  return t;
}

Frame Session::MakeFrame(std::string_view type) const {
  Frame frame;
  frame["type"] = type;
  frame["revision"] = revision_;
  return frame;
}

std::vector<Frame> Session::HandleMessage(const nlohmann::json& message) {
  std::vector<Frame> frames;
  std::string type;
  try {
    if (!message.is_object())
      throw Error(ErrorCode::kProtocolError, "message must be a JSON object");
    type = RequireString(message, "type");
    if (type != "load_dataset" && !dataset_)
      throw Error(ErrorCode::kProtocolError, "no dataset loaded");
    const int64_t t = type == "load_dataset" ? 0 : Timestamp(message);

    Outcome outcome;
    std::vector<Frame> extra;
    if (type == "load_dataset") {
      ApplyLoadDataset(message, outcome, extra);
    } else if (type == "set_encoding") {
      ApplySetEncoding(message, t, outcome);
    } else if (type == "set_filter") {
      ApplySetFilter(message, t, outcome);
    } else if (type == "hover") {
      ApplyHover(message, t, outcome);
    } else if (type == "detail_hover") {
      ApplyDetailHover(message, t, outcome);
    } else if (type == "set_target") {
      ApplySetTarget(message, outcome);
    } else if (type == "set_settings") {
      ApplySetSettings(message, outcome);
    } else if (type == "open_card" || type == "close_card") {
      ApplyCard(message, type == "open_card", outcome);
    } else {
      throw Error(ErrorCode::kProtocolError, "unknown message type '" + type + "'");
    }

    ++revision_;
    if (type != "load_dataset") {
      nlohmann::json logged = message;
      logged["t"] = t;
      message_log_.push_back(std::move(logged));
      last_t_ = t;
    }
    Frame ack = MakeFrame("ack");
    ack["request"] = type;
    frames.push_back(std::move(ack));
    for (Frame& frame : extra) {
      frame["revision"] = revision_;
      frames.push_back(std::move(frame));
    }
    EmitDeltas(outcome, frames);
  } catch (const SpecRejected& rejected) {
    frames.clear();
    Frame frame = MakeFrame("violation");
    frame["request"] = type;
    auto& reasons = frame["reasons"] = Frame::array();
    for (const Violation& v : rejected.violations)
      reasons.push_back({{"field", v.field}, {"reason", v.reason}});
    frames.push_back(std::move(frame));
  } catch (const Error& e) {
    frames.clear();
    if (e.code() == ErrorCode::kInvalidSpec) {
      Frame frame = MakeFrame("violation");
      frame["request"] = type;
      frame["reasons"] = {{{"field", "filter"}, {"reason", e.what()}}};
      frames.push_back(std::move(frame));
    } else {
      Frame frame = MakeFrame("error");
      frame["request"] = type;
      frame["code"] = ErrorCodeName(e.code());
      frame["message"] = e.what();
      frames.push_back(std::move(frame));
    }
  } catch (const nlohmann::json::exception& e) {
    frames.clear();
    Frame frame = MakeFrame("error");
    frame["request"] = type;
    frame["code"] = ErrorCodeName(ErrorCode::kProtocolError);
    frame["message"] = e.what();
    frames.push_back(std::move(frame));
  }
  return frames;
}

void Session::ApplyLoadDataset(const nlohmann::json& message, Outcome& outcome,
                               std::vector<Frame>& frames) {
  std::shared_ptr<const Dataset> dataset;
  if (options_.loader) {
    dataset = options_.loader(message);
  } else if (message.contains("csv")) {
    IngestOptions ingest;
    const std::string delimiter = message.value("delimiter", std::string(","));
    if (delimiter.size() != 1)
      throw Error(ErrorCode::kProtocolError, "delimiter must be one character");
    ingest.delimiter = delimiter.front();
    if (auto types = message.find("types"); types != message.end()) {
      for (const auto& [name, value] : types->items()) {
        auto type = ParseDatatype(value.get<std::string>());
        if (!type) throw Error(ErrorCode::kProtocolError, "unknown datatype for '" + name + "'");
        ingest.type_overrides[name] = *type;
      }
    }
    dataset = std::make_shared<const Dataset>(Ingest(RequireString(message, "csv"), ingest));
  } else {
    dataset = std::make_shared<const Dataset>(IngestFile(RequireString(message, "path")));
  }
  Reset(std::move(dataset));
  // Archives start after the load message itself.
  base_revision_ = revision_ + 1;

  Frame schema;
  schema["type"] = "schema";
  schema["schema"] = nlohmann::ordered_json::parse(SchemaToJson(*dataset_, -1));
  schema["settings"] = SettingsToJson(settings_);
  schema["condition"] = ConditionName(options_.condition);
  frames.push_back(std::move(schema));
  outcome.order_dirty = true;
  outcome.cards_dirty = true;
}

void Session::RecordEvent(const InteractionEvent& event, Outcome& outcome) {
  const LedgerDelta delta = ledger_.Record(event);
  if (!delta.datapoints.empty()) {
    outcome.datapoints_changed = true;
    outcome.intensities_dirty = true;
  }
  if (delta.attribute) outcome.attributes_changed = true;
}

void Session::RebuildElements() {
  elements_.clear();
  element_index_.clear();
  pending_hover_.reset();
  if (!spec_) return;
  spec_->filters = filters_;
  elements_ = BuildElements(*dataset_, *spec_);
  for (size_t i = 0; i < elements_.size(); ++i) element_index_[elements_[i].id] = i;
}

void Session::ApplySetEncoding(const nlohmann::json& message, int64_t t, Outcome& outcome) {
  ChartSpec spec;
  const auto chart = ParseChartType(RequireString(message, "chart_type"));
  if (!chart) throw Error(ErrorCode::kProtocolError, "unknown chart_type");
  spec.chart_type = *chart;
  spec.x = RequireString(message, "x");
  if (auto y = message.find("y"); y != message.end() && !y->is_null()) {
    if (!y->is_string()) throw Error(ErrorCode::kProtocolError, "field 'y' must be a string");
    spec.y = y->get<std::string>();
  }
  const auto aggregation = ParseAggregation(message.value("aggregation", std::string("None")));
  if (!aggregation) throw Error(ErrorCode::kProtocolError, "unknown aggregation");
  spec.aggregation = *aggregation;
  spec.filters = filters_;

  const std::vector<Violation> violations =
      ValidateSpec(spec, *dataset_, options_.encoding_rules);
  if (!violations.empty()) throw SpecRejected{violations};

  const bool x_changed = !spec_ || spec_->x != spec.x;
  const bool y_changed = spec.y && (!spec_ || spec_->y != spec.y);
  if (pending_hover_) FinishHover(t, outcome);
  if (x_changed) RecordEvent(InteractionEvent::OnAttribute(t, EventKind::kEncodingAssign, spec.x), outcome);
  if (y_changed) RecordEvent(InteractionEvent::OnAttribute(t, EventKind::kEncodingAssign, *spec.y), outcome);
  spec_ = std::move(spec);
  RebuildElements();
  outcome.elements_rebuilt = true;
}

void Session::ApplySetFilter(const nlohmann::json& message, int64_t t, Outcome& outcome) {
  if (message.value("remove", false)) {
    const std::string attribute = RequireString(message, "attribute");
    dataset_->attribute(attribute);
    if (pending_hover_) FinishHover(t, outcome);
    std::erase_if(filters_, [&](const FilterPredicate& f) { return f.attribute == attribute; });
  } else {
    FilterPredicate filter = FilterFromJson(RequireObject(message, "filter"));
    ValidateFilter(filter, *dataset_);
    if (pending_hover_) FinishHover(t, outcome);
    auto existing = std::find_if(filters_.begin(), filters_.end(), [&](const FilterPredicate& f) {
      return f.attribute == filter.attribute;
    });
    const EventKind kind =
        existing == filters_.end() ? EventKind::kFilterApply : EventKind::kFilterChange;
    RecordEvent(InteractionEvent::OnAttribute(t, kind, filter.attribute), outcome);
    if (existing == filters_.end()) {
      filters_.push_back(std::move(filter));
    } else {
      *existing = std::move(filter);
    }
  }
  if (spec_) {
    RebuildElements();
    outcome.elements_rebuilt = true;
  }
}

void Session::FinishHover(int64_t t, Outcome& outcome) {
  PendingHover hover = std::move(*pending_hover_);
  pending_hover_.reset();
  const int64_t dwell = t - hover.start_ms;
  if (hover.detail_row) {
    RecordEvent(InteractionEvent::DetailRow(t, hover.members.front(), dwell), outcome);
  } else {
    RecordEvent(InteractionEvent::Hover(t, hover.element, hover.members, dwell), outcome);
  }
}

void Session::ApplyHover(const nlohmann::json& message, int64_t t, Outcome& outcome) {
  const std::string element = RequireString(message, "element");
  const std::string phase = RequireString(message, "phase");
  if (phase == "start") {
    auto it = element_index_.find(element);
    if (it == element_index_.end())
      throw Error(ErrorCode::kUnknownElement, "unknown element '" + element + "'");
    if (pending_hover_) FinishHover(t, outcome);
    pending_hover_ = PendingHover{element, elements_[it->second].members, false, t};
    outcome.hovered_element = element;
  } else if (phase == "end") {
    if (!pending_hover_ || pending_hover_->detail_row || pending_hover_->element != element)
      throw Error(ErrorCode::kProtocolError, "hover end on '" + element + "' without a start");
    FinishHover(t, outcome);
  } else {
    throw Error(ErrorCode::kProtocolError, "phase must be 'start' or 'end'");
  }
}

void Session::ApplyDetailHover(const nlohmann::json& message, int64_t t, Outcome& outcome) {
  auto row_field = message.find("row");
  if (row_field == message.end() || !row_field->is_number_unsigned())
    throw Error(ErrorCode::kProtocolError, "field 'row' must be a non-negative integer");
  const uint64_t row = row_field->get<uint64_t>();
  if (row >= dataset_->row_count())
    throw Error(ErrorCode::kUnknownElement, "unknown row " + std::to_string(row));
  const std::string key = "row:" + std::to_string(row);
  const std::string phase = RequireString(message, "phase");
  if (phase == "start") {
    if (pending_hover_) FinishHover(t, outcome);
    pending_hover_ = PendingHover{key, {static_cast<DatapointId>(row)}, true, t};
  } else if (phase == "end") {
    if (!pending_hover_ || !pending_hover_->detail_row || pending_hover_->element != key)
      throw Error(ErrorCode::kProtocolError, "detail hover end on row " + std::to_string(row) +
                                                 " without a start");
    FinishHover(t, outcome);
  } else {
    throw Error(ErrorCode::kProtocolError, "phase must be 'start' or 'end'");
  }
}

void Session::ApplySetTarget(const nlohmann::json& message, Outcome& outcome) {
  targets_.Set(TargetFromJson(*dataset_, RequireObject(message, "target")));
  outcome.cards_dirty = true;
  outcome.order_dirty = true;
}

void Session::ApplySetSettings(const nlohmann::json& message, Outcome& outcome) {
  const nlohmann::json& update = RequireObject(message, "settings");
  SessionSettings next = settings_;
  for (const auto& [key, value] : update.items()) {
    if (!value.is_string())
      throw Error(ErrorCode::kProtocolError, "setting '" + key + "' must be a string");
    const std::string text = value.get<std::string>();
    if (key == "sort_by") {
      auto v = ParseSortBy(text);
      if (!v) throw Error(ErrorCode::kProtocolError, "unknown sort_by '" + text + "'");
      next.sort_by = *v;
    } else if (key == "color_mode") {
      auto v = ParseNormalizeMode(text);
      if (!v) throw Error(ErrorCode::kProtocolError, "unknown color_mode '" + text + "'");
      next.color_mode = *v;
    } else if (key == "focus_mode") {
      auto v = ParseFocusMode(text);
      if (!v) throw Error(ErrorCode::kProtocolError, "unknown focus_mode '" + text + "'");
      next.focus_mode = *v;
    } else if (key == "color_scale") {
      if (!FindCardScale(text))
        throw Error(ErrorCode::kProtocolError, "unknown color_scale '" + text + "'");
      next.color_scale = text;
    } else {
      throw Error(ErrorCode::kProtocolError, "unknown setting '" + key + "'");
    }
  }
  outcome.intensities_dirty = next.color_mode != settings_.color_mode;
  outcome.order_dirty = next.sort_by != settings_.sort_by;
  outcome.cards_dirty =
      next.focus_mode != settings_.focus_mode || next.color_scale != settings_.color_scale;
  settings_ = std::move(next);
}

void Session::ApplyCard(const nlohmann::json& message, bool open, Outcome& outcome) {
  const std::string attribute = RequireString(message, "attribute");
  dataset_->attribute(attribute);
  if (open) {
    open_cards_.insert(attribute);
    outcome.opened_card = attribute;
  } else {
    open_cards_.erase(attribute);
  }
}

const DivergingScale& Session::CardScale() const {
  const DivergingScale* scale = FindCardScale(settings_.color_scale);
  return scale ? *scale : DefaultCardScale();
}

std::vector<double> Session::CurrentIntensities() const {
  return Normalize(ledger_.datapoint_counters(), settings_.color_mode);
}

Frame Session::ElementsFrame(bool with_intensities) {
  Frame frame = MakeFrame("elements");
  frame["spec"] = SpecToJson(*spec_);
  auto& list = frame["elements"] = Frame::array();
  for (const VisualElement& e : elements_) list.push_back(ElementToJson(e));
  sent_element_intensities_.clear();
  if (with_intensities) {
    const std::vector<double> intensities = CurrentIntensities();
    auto& map = frame["intensities"] = Frame::object();
    for (const VisualElement& e : elements_) {
      const double v = ElementIntensity(e, intensities);
      map[e.id] = v;
      sent_element_intensities_[e.id] = v;
    }
  }
  return frame;
}

Frame Session::DetailsFrame(const VisualElement& element) const {
  Frame frame = MakeFrame("details");
  frame["element"] = element.id;
  frame["kind"] = element.kind == ElementKind::kUnit ? "unit" : "aggregate";
  frame["total"] = element.members.size();
  const bool traces = options_.condition == Condition::kAwareness;
  const std::vector<double> intensities = traces ? CurrentIntensities() : std::vector<double>();
  auto& rows = frame["rows"] = Frame::array();
  const size_t limit = std::min(element.members.size(), options_.detail_row_limit);
  for (size_t i = 0; i < limit; ++i) {
    const DatapointId id = element.members[i];
    Frame row;
    row["id"] = id;
    auto& values = row["values"] = Frame::object();
    for (const AttributeSchema& a : dataset_->schema()) {
      if (IsNull(dataset_->cell(id, a.index))) {
        values[a.name] = nullptr;
      } else {
        values[a.name] = dataset_->FormatCell(id, a.index);
      }
    }
    if (traces) row["intensity"] = intensities[id];
    rows.push_back(std::move(row));
  }
  return frame;
}

Frame Session::CardFrame(const BehaviorSnapshot& snapshot) const {
  Frame card = SnapshotToJson(snapshot);
  if (auto suggestion = SuggestReverseFilter(snapshot, options_.mitigation)) {
    card["suggestion"] = FilterToJson(*suggestion);
  } else {
    card["suggestion"] = nullptr;
  }
  return card;
}

void Session::EmitDeltas(const Outcome& outcome, std::vector<Frame>& frames) {
  if (!dataset_) return;
  const bool traces = options_.condition == Condition::kAwareness;

  if (outcome.elements_rebuilt && spec_) {
    frames.push_back(ElementsFrame(traces));
  } else if (outcome.intensities_dirty && traces && spec_) {
    const std::vector<double> intensities = CurrentIntensities();
    Frame changed = Frame::object();
    for (const VisualElement& e : elements_) {
      const double v = ElementIntensity(e, intensities);
      auto it = sent_element_intensities_.find(e.id);
      if (it == sent_element_intensities_.end() || it->second != v) {
        changed[e.id] = v;
        sent_element_intensities_[e.id] = v;
      }
    }
    if (!changed.empty()) {
      Frame frame = MakeFrame("intensities");
      frame["elements"] = std::move(changed);
      frames.push_back(std::move(frame));
    }
  }

  if (outcome.hovered_element) {
    frames.push_back(DetailsFrame(elements_[element_index_.at(*outcome.hovered_element)]));
  }

  const bool focus_sorted = settings_.sort_by == SortBy::kFocus;
  if (outcome.attributes_changed || outcome.order_dirty ||
      (focus_sorted && outcome.datapoints_changed)) {
    const std::vector<std::string> order = AttributeOrder();
    const std::vector<double> intensities =
        traces ? AttributeIntensities(ledger_) : std::vector<double>();
    if (order != sent_order_ || intensities != sent_attribute_intensities_) {
      Frame frame = MakeFrame("attributes");
      frame["order"] = order;
      if (traces) {
        auto& map = frame["intensities"] = Frame::object();
        for (size_t a = 0; a < intensities.size(); ++a)
          map[dataset_->schema()[a].name] = intensities[a];
      }
      frames.push_back(std::move(frame));
      sent_order_ = order;
      sent_attribute_intensities_ = intensities;
    }
  }

  if (!traces) return;
  if (outcome.datapoints_changed || outcome.cards_dirty) {
    Frame cards = Frame::array();
    for (BehaviorSnapshot& snapshot : Snapshots()) {
      auto it = sent_cards_.find(snapshot.attribute);
      if (it != sent_cards_.end() && it->second == snapshot) continue;
      cards.push_back(CardFrame(snapshot));
      sent_cards_[snapshot.attribute] = std::move(snapshot);
    }
    if (!cards.empty()) {
      Frame frame = MakeFrame("cards");
      frame["cards"] = std::move(cards);
      frames.push_back(std::move(frame));
    }
  }
  if (outcome.opened_card) {
    Frame frame = MakeFrame("card");
    frame["card"] = CardFrame(SnapshotOf(*outcome.opened_card));
    frames.push_back(std::move(frame));
  }
}

std::vector<InteractionEvent> Session::EventLog() const {
  std::vector<InteractionEvent> events;
  events.reserve(ledger_.log().size());
  for (const LoggedEvent& logged : ledger_.log()) events.push_back(logged.event);
  return events;
}

std::vector<BehaviorSnapshot> Session::Snapshots() const {
  std::vector<BehaviorSnapshot> out;
  if (!dataset_) return out;
  out.reserve(dataset_->attribute_count());
  for (size_t a = 0; a < dataset_->attribute_count(); ++a) {
    out.push_back(model_->Snapshot(ledger_.datapoint_counters(), a,
                                   targets_.Get(dataset_->schema()[a].name),
                                   settings_.focus_mode, CardScale()));
  }
  return out;
}

BehaviorSnapshot Session::SnapshotOf(std::string_view attribute) const {
  const AttributeSchema& a = dataset_->attribute(attribute);
  return model_->Snapshot(ledger_.datapoint_counters(), a.index, targets_.Get(a.name),
                          settings_.focus_mode, CardScale());
}

std::vector<std::string> Session::AttributeOrder() const {
  const auto& schema = dataset_->schema();
  std::vector<size_t> order(schema.size());
  for (size_t i = 0; i < order.size(); ++i) order[i] = i;
  switch (settings_.sort_by) {
    case SortBy::kOrderInDataset:
      break;
    case SortBy::kName:
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return schema[a].name < schema[b].name; });
      break;
    case SortBy::kDatatype:
      std::stable_sort(order.begin(), order.end(), [&](size_t a, size_t b) {
        return static_cast<int>(schema[a].datatype) < static_cast<int>(schema[b].datatype);
      });
      break;
    case SortBy::kFocus: {
      std::vector<double> ad(schema.size());
      for (size_t a = 0; a < schema.size(); ++a)
        ad[a] = model_->Ad(ledger_.datapoint_counters(), a, targets_.Get(schema[a].name));
      std::stable_sort(order.begin(), order.end(),
                       [&](size_t a, size_t b) { return ad[a] > ad[b]; });
      break;
    }
  }
  std::vector<std::string> names;
  names.reserve(order.size());
  for (size_t i : order) names.push_back(schema[i].name);
  return names;
}

std::string Session::SaveArchive() const {
  if (!dataset_) throw Error(ErrorCode::kProtocolError, "no dataset loaded");
  nlohmann::ordered_json header;
  header["format"] = kArchiveFormat;
  header["fingerprint"] = dataset_->fingerprint();
  header["condition"] = ConditionName(options_.condition);
  header["base_revision"] = base_revision_;
  header["ledger"] = LedgerOptionsToJson(options_.ledger);
  std::ostringstream out;
  out << header.dump() << '\n';
  for (const nlohmann::json& message : message_log_) out << message.dump() << '\n';
  return out.str();
}

Session Session::RestoreArchive(std::string_view archive, std::shared_ptr<const Dataset> dataset,
                                SessionOptions options) {
  std::istringstream in{std::string(archive)};
  std::string line;
  if (!std::getline(in, line)) throw Error(ErrorCode::kCorruptLog, "archive is empty");
  nlohmann::json header;
  try {
    header = nlohmann::json::parse(line);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kCorruptLog, std::string("line 1: ") + e.what());
  }
  if (header.value("format", std::string()) != kArchiveFormat)
    throw Error(ErrorCode::kCorruptLog, "line 1: not a session archive");
  if (header.value("fingerprint", std::string()) != dataset->fingerprint()) {
    throw Error(ErrorCode::kFingerprintMismatch,
                "archive was recorded on dataset " + header.value("fingerprint", std::string()) +
                    ", got " + dataset->fingerprint());
  }
  if (auto condition = ParseCondition(header.value("condition", std::string("awareness"))))
    options.condition = *condition;
  if (header.contains("ledger")) options.ledger = LedgerOptionsFromJson(header["ledger"]);

  Session session(std::move(dataset), std::move(options));
  session.revision_ = session.base_revision_ = header.value("base_revision", uint64_t{0});
  size_t line_number = 1;
  while (std::getline(in, line)) {
    ++line_number;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    nlohmann::json message;
    try {
      message = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
      throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(line_number) + ": " + e.what());
    }
    const std::vector<Frame> frames = session.HandleMessage(message);
    if (frames.empty() || frames.front()["type"] != "ack") {
      throw Error(ErrorCode::kCorruptLog, "line " + std::to_string(line_number) +
                                              ": message no longer applies: " +
                                              frames.front().value("message", std::string()));
    }
  }
  return session;
}

}  // namespace tracelens
