#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "json.hpp"
#include "tracelens/behavior.hpp"
#include "tracelens/charts.hpp"
#include "tracelens/dataset.hpp"
#include "tracelens/ledger.hpp"
#include "tracelens/mitigation.hpp"
#include "tracelens/targets.hpp"

namespace tracelens {

using Frame = nlohmann::ordered_json;

enum class SortBy { kOrderInDataset, kName, kDatatype, kFocus };
std::string_view SortByName(SortBy sort);
std::optional<SortBy> ParseSortBy(std::string_view text);

struct SessionSettings {
  SortBy sort_by = SortBy::kOrderInDataset;
  NormalizeMode color_mode = NormalizeMode::kRelative;
  FocusMode focus_mode = FocusMode::kPercentage;
  std::string color_scale = "default-diverging";

  friend bool operator==(const SessionSettings&, const SessionSettings&) = default;
};

nlohmann::ordered_json SettingsToJson(const SessionSettings& settings);

// Awareness sessions stream traces; control sessions log the same events but
// never send intensities or distribution cards.
enum class Condition { kAwareness, kControl };
std::string_view ConditionName(Condition condition);
std::optional<Condition> ParseCondition(std::string_view text);

struct SessionOptions {
  Condition condition = Condition::kAwareness;
  LedgerOptions ledger;
  EncodingRules encoding_rules;
  MitigationOptions mitigation;
  // Rows listed in a details frame; the element's full size is still reported.
  size_t detail_row_limit = 100;
  // Used to stamp messages that arrive without "t" (ms since session start).
  std::function<int64_t()> clock;
  // Resolves load_dataset messages; defaults to IngestFile.
  std::function<std::shared_ptr<const Dataset>(const nlohmann::json&)> loader;
};

// One live exploration session: the single writer over its ledger, chart
// spec, targets and settings. Not thread-safe; callers serialize access.
class Session {
 public:
  explicit Session(SessionOptions options = {});
  Session(std::shared_ptr<const Dataset> dataset, SessionOptions options = {});

  // Applies one client message and returns the frames to broadcast, in
  // order. Rejected messages yield a single error or violation frame and
  // leave the state (and revision) untouched.
  std::vector<Frame> HandleMessage(const nlohmann::json& message);

  uint64_t revision() const { return revision_; }
  bool has_dataset() const { return dataset_ != nullptr; }
  const Dataset& dataset() const { return *dataset_; }
  std::shared_ptr<const Dataset> dataset_ptr() const { return dataset_; }
  const Ledger& ledger() const { return ledger_; }
  const TargetSet& targets() const { return targets_; }
  const SessionSettings& settings() const { return settings_; }
  const std::optional<ChartSpec>& spec() const { return spec_; }
  const std::vector<FilterPredicate>& filters() const { return filters_; }
  const std::vector<VisualElement>& elements() const { return elements_; }
  const std::set<std::string>& open_cards() const { return open_cards_; }
  const SessionOptions& options() const { return options_; }
  // Applied messages since the dataset was loaded, with timestamps filled in.
  const std::vector<nlohmann::json>& message_log() const { return message_log_; }
  std::vector<InteractionEvent> EventLog() const;

  std::vector<BehaviorSnapshot> Snapshots() const;
  BehaviorSnapshot SnapshotOf(std::string_view attribute) const;
  std::vector<std::string> AttributeOrder() const;

  // JSON header line followed by one applied message per line.
  std::string SaveArchive() const;
  // Replays an archive against `dataset`. Throws Error(kFingerprintMismatch)
  // when the dataset differs from the one the archive was recorded on, and
  // Error(kCorruptLog) when a logged message no longer applies.
  static Session RestoreArchive(std::string_view archive,
                                std::shared_ptr<const Dataset> dataset,
                                SessionOptions options = {});

 private:
  struct PendingHover {
    std::string element;
    std::vector<DatapointId> members;
    bool detail_row = false;
    int64_t start_ms = 0;
  };

  struct Outcome {
    bool datapoints_changed = false;
    bool attributes_changed = false;
    bool elements_rebuilt = false;
    bool intensities_dirty = false;
    bool order_dirty = false;
    bool cards_dirty = false;
    std::optional<std::string> opened_card;
    std::optional<std::string> hovered_element;
  };

  void Reset(std::shared_ptr<const Dataset> dataset);
  int64_t Timestamp(const nlohmann::json& message) const;
  void RecordEvent(const InteractionEvent& event, Outcome& outcome);
  void RebuildElements();
  void FinishHover(int64_t t, Outcome& outcome);

  void ApplyLoadDataset(const nlohmann::json& message, Outcome& outcome,
                        std::vector<Frame>& frames);
  void ApplySetEncoding(const nlohmann::json& message, int64_t t, Outcome& outcome);
  void ApplySetFilter(const nlohmann::json& message, int64_t t, Outcome& outcome);
  void ApplyHover(const nlohmann::json& message, int64_t t, Outcome& outcome);
  void ApplyDetailHover(const nlohmann::json& message, int64_t t, Outcome& outcome);
  void ApplySetTarget(const nlohmann::json& message, Outcome& outcome);
  void ApplySetSettings(const nlohmann::json& message, Outcome& outcome);
  void ApplyCard(const nlohmann::json& message, bool open, Outcome& outcome);

  void EmitDeltas(const Outcome& outcome, std::vector<Frame>& frames);
  Frame MakeFrame(std::string_view type) const;
  Frame ElementsFrame(bool with_intensities);
  Frame DetailsFrame(const VisualElement& element) const;
  Frame CardFrame(const BehaviorSnapshot& snapshot) const;
  std::vector<double> CurrentIntensities() const;
  const DivergingScale& CardScale() const;

  SessionOptions options_;
  std::shared_ptr<const Dataset> dataset_;
  std::unique_ptr<BehaviorModel> model_;
  Ledger ledger_;
  TargetSet targets_;
  SessionSettings settings_;
  std::optional<ChartSpec> spec_;
  std::vector<FilterPredicate> filters_;
  std::vector<VisualElement> elements_;
  std::unordered_map<std::string, size_t> element_index_;
  std::set<std::string> open_cards_;
  std::optional<PendingHover> pending_hover_;

  uint64_t revision_ = 0;
  uint64_t base_revision_ = 0;
  int64_t last_t_ = 0;
  std::vector<nlohmann::json> message_log_;

  // Last state sent to the client, for delta broadcasts.
  std::unordered_map<std::string, double> sent_element_intensities_;
  std::vector<double> sent_attribute_intensities_;
  std::vector<std::string> sent_order_;
  std::unordered_map<std::string, BehaviorSnapshot> sent_cards_;
};

}  // namespace tracelens
