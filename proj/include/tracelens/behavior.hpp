#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tracelens/charts.hpp"
#include "tracelens/dataset.hpp"
#include "tracelens/ledger.hpp"
#include "tracelens/targets.hpp"

namespace tracelens {

// Interaction mass per support key for one attribute. Mass on null cells is
// kept apart and never enters the AD metric.
struct ObservedDistribution {
  std::string attribute;
  std::vector<std::string> keys;
  std::vector<double> mass;
  double missing = 0.0;

  double total() const;
};

// Goodness-of-fit test behind the AD metric: χ² for Nominal attributes,
// Kolmogorov-Smirnov over the ordered bins for Quantitative/Temporal ones.
enum class DeviationTest { kChiSquare, kKolmogorovSmirnov };

DeviationTest DeviationTestFor(Datatype datatype);

// 1 - p of the test's p-value, in [0, 1]. Zero observed mass yields 0.
// Expects masses and target aligned on one support; throws
// Error(kSupportMismatch) when the sizes differ.
double AdMetric(std::span<const double> observed, std::span<const double> target,
                DeviationTest test);
// Same, checking that the keys match.
double AdMetric(const ObservedDistribution& observed, const TargetDistribution& target,
                DeviationTest test);

struct Rgb {
  uint8_t r = 0;
  uint8_t g = 0;
  uint8_t b = 0;

  std::string hex() const;
  friend bool operator==(const Rgb&, const Rgb&) = default;
};

// Three-stop diverging scale: similar -> neutral -> different.
struct DivergingScale {
  std::string id;
  Rgb similar;
  Rgb neutral;
  Rgb different;
};

const DivergingScale& DefaultCardScale();
// Returns nullptr for unknown ids. Known: "default-diverging" (green, grey,
// red) and "colorblind-diverging" (blue, grey, orange).
const DivergingScale* FindCardScale(std::string_view id);
std::vector<std::string> CardScaleIds();

struct CardColor {
  double t = 0.0;  // equals the AD value
  Rgb rgb;
};

// Piecewise-linear interpolation with the neutral stop at ad = 0.5.
CardColor CardColorFor(double ad, const DivergingScale& scale = DefaultCardScale());

enum class FocusMode { kPercentage, kRaw };
std::string_view FocusModeName(FocusMode mode);
std::optional<FocusMode> ParseFocusMode(std::string_view text);

struct FocusSeries {
  FocusMode mode = FocusMode::kPercentage;
  std::vector<double> observed;
  std::vector<double> target;
};

struct BehaviorSnapshot {
  std::string attribute;
  Datatype datatype = Datatype::kNominal;
  std::vector<std::string> keys;
  std::vector<double> observed;
  std::vector<double> target;
  std::vector<double> bin_edges;  // keys.size() + 1 entries for binned supports
  double missing = 0.0;
  double total = 0.0;
  double ad = 0.0;
  CardColor color;
  bool insufficient_evidence = true;
  FocusSeries series;

  friend bool operator==(const BehaviorSnapshot& a, const BehaviorSnapshot& b);
};

// Precomputed supports and row-to-key maps for every attribute of a dataset.
// Holds a reference to the dataset, which must outlive it.
class BehaviorModel {
 public:
  explicit BehaviorModel(const Dataset& dataset);

  const Dataset& dataset() const { return *dataset_; }
  const Support& support(size_t attribute) const { return supports_[attribute]; }

  ObservedDistribution Observed(std::span<const double> counters, size_t attribute) const;
  BehaviorSnapshot Snapshot(std::span<const double> counters, size_t attribute,
                            const TargetDistribution& target,
                            FocusMode focus = FocusMode::kPercentage,
                            const DivergingScale& scale = DefaultCardScale()) const;
  double Ad(std::span<const double> counters, size_t attribute,
            const TargetDistribution& target) const;

 private:
  const Dataset* dataset_;
  std::vector<Support> supports_;
  std::vector<std::vector<int>> row_keys_;
};

// Convenience wrapper over a throwaway BehaviorModel.
ObservedDistribution ObservedDistributionOf(const Ledger& ledger, const Dataset& dataset,
                                            std::string_view attribute);

// White-to-blue trace intensities.
std::vector<double> DatapointIntensities(const Ledger& ledger, NormalizeMode mode);
// Attributes are always normalized relative to the most interacted one.
std::vector<double> AttributeIntensities(const Ledger& ledger);
// Mean of the member intensities.
double ElementIntensity(const VisualElement& element, std::span<const double> intensities);

nlohmann::ordered_json SnapshotToJson(const BehaviorSnapshot& snapshot);

}  // namespace tracelens
