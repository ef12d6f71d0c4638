#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tracelens/binning.hpp"
#include "tracelens/dataset.hpp"

namespace tracelens {

// The keys a distribution over one attribute is defined on: categories for
// Nominal attributes, equal-width bins for Quantitative/Temporal ones.
// Observed and target distributions always share this support.
struct Support {
  std::string attribute;
  Datatype datatype = Datatype::kNominal;
  std::vector<std::string> keys;
  std::optional<Binning> binning;

  size_t size() const { return keys.size(); }
  bool is_binned() const { return binning.has_value(); }
};

Support SupportFor(const AttributeSchema& attribute);

// Support index of every row's value for one attribute; -1 for null cells.
std::vector<int> SupportIndexOfRows(const Dataset& dataset, size_t attribute,
                                    const Support& support);

enum class TargetMode { kProportional, kEqual, kCustom };

std::string_view TargetModeName(TargetMode mode);  // "proportional", ...
std::optional<TargetMode> ParseTargetMode(std::string_view text);

struct ControlPoint {
  double position = 0.0;
  double density = 0.0;

  friend bool operator==(const ControlPoint&, const ControlPoint&) = default;
};

struct TargetDistribution {
  std::string attribute;
  TargetMode mode = TargetMode::kProportional;
  std::vector<std::string> keys;
  std::vector<double> weights;  // aligned with keys, sums to 1
  // Sketch a Custom Q/T target was integrated from.
  std::vector<ControlPoint> points;

  double WeightOf(std::string_view key) const;

  friend bool operator==(const TargetDistribution&, const TargetDistribution&) = default;
};

// Throw Error(kAllNullColumn) when the attribute holds no values.
TargetDistribution ProportionalTarget(const Dataset& dataset, std::string_view attribute);
TargetDistribution EqualTarget(const Dataset& dataset, std::string_view attribute);

// Nominal attributes: one weight per category (zeros allowed), normalized to
// sum 1. Throws Error(kNegativeWeight), Error(kDegenerateSketch) or
// Error(kInvalidSpec) for missing/unknown categories.
TargetDistribution SetCustomTarget(const Dataset& dataset, std::string_view attribute,
                                   const std::map<std::string, double>& weights);
// Quantitative/Temporal attributes: a piecewise-linear density through the
// control points, integrated over each bin. Throws
// Error(kInvalidControlPoints), Error(kNegativeWeight) or
// Error(kDegenerateSketch).
TargetDistribution SetCustomTarget(const Dataset& dataset, std::string_view attribute,
                                   const std::vector<ControlPoint>& points);

// Integral of the piecewise-linear density over [lo, hi]; zero outside the
// span of the points.
double IntegrateSketch(const std::vector<ControlPoint>& points, double lo, double hi);

// Per-attribute targets for a session; Proportional unless set otherwise.
class TargetSet {
 public:
  TargetSet() = default;
  explicit TargetSet(const Dataset& dataset);

  const TargetDistribution& Get(std::string_view attribute) const;
  void Set(TargetDistribution target);
  const std::vector<TargetDistribution>& all() const { return targets_; }

 private:
  std::vector<TargetDistribution> targets_;
};

// {attribute, mode, weights|points}
nlohmann::ordered_json TargetToJson(const TargetDistribution& target);
// Builds the target a config block describes. Throws Error(kProtocolError)
// for malformed blocks, otherwise the errors of the builders above.
TargetDistribution TargetFromJson(const Dataset& dataset, const nlohmann::json& json);

}  // namespace tracelens
