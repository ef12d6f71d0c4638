#include "tracelens/behavior.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>

#include "tracelens/error.hpp"
#include "tracelens/stats.hpp"

namespace tracelens {

namespace {

constexpr double kExpectedFloor = 1e-9;
// Differences this small relative to the compared masses are floating-point
// residue from normalization, not deviation.
constexpr double kRoundOff = 1e-12;

double Residual(double a, double b) {
  const double diff = a - b;
  return std::abs(diff) <= kRoundOff * std::max(std::abs(a), std::abs(b)) ? 0.0 : diff;
}

double ChiSquareAd(std::span<const double> observed, std::span<const double> target,
                   double total) {
  struct Cell {
    double observed = 0.0;
    double expected = 0.0;
  };
  std::vector<Cell> cells;
  Cell pending;
  bool has_pending = false;
  for (size_t i = 0; i < observed.size(); ++i) {
    const double expected = target[i] * total;
    if (expected < kExpectedFloor) {
      // Fold into the previous cell, or carry forward to the next one.
      if (!cells.empty()) {
        cells.back().observed += observed[i];
        cells.back().expected += expected;
      } else {
        pending.observed += observed[i];
        pending.expected += expected;
        has_pending = true;
      }
      continue;
    }
    Cell cell{observed[i], expected};
    if (has_pending) {
      cell.observed += pending.observed;
      cell.expected += pending.expected;
      pending = {};
      has_pending = false;
    }
    cells.push_back(cell);
  }
  if (cells.size() < 2) return 0.0;
  double statistic = 0.0;
  for (const Cell& cell : cells) {
    const double diff = Residual(cell.observed, cell.expected);
    statistic += diff * diff / cell.expected;
  }
  const double p = stats::ChiSquareSurvival(statistic, static_cast<double>(cells.size() - 1));
  return std::clamp(1.0 - p, 0.0, 1.0);
}

double KolmogorovAd(std::span<const double> observed, std::span<const double> target,
                    double total) {
  double target_total = 0.0;
  for (double t : target) target_total += t;
  if (!(target_total > 0.0)) return 0.0;
  double observed_cdf = 0.0;
  double target_cdf = 0.0;
  double distance = 0.0;
  for (size_t i = 0; i < observed.size(); ++i) {
    observed_cdf += observed[i];
    target_cdf += target[i];
    const double diff =
        std::abs(Residual(observed_cdf / total, target_cdf / target_total));
    distance = std::max(distance, diff);
  }
  const double p = stats::KolmogorovSurvival(std::sqrt(total) * distance);
  return std::clamp(1.0 - p, 0.0, 1.0);
}

uint8_t Lerp(uint8_t a, uint8_t b, double t) {
  return static_cast<uint8_t>(std::lround(a + (static_cast<double>(b) - a) * t));
}

Rgb LerpRgb(const Rgb& a, const Rgb& b, double t) {
  return {Lerp(a.r, b.r, t), Lerp(a.g, b.g, t), Lerp(a.b, b.b, t)};
}

const std::vector<DivergingScale>& Scales() {
  static const std::vector<DivergingScale> kScales = {
      {"default-diverging", {26, 152, 80}, {189, 189, 189}, {215, 48, 39}},
      {"colorblind-diverging", {33, 102, 172}, {189, 189, 189}, {230, 97, 1}},
  };
  return kScales;
}

}  // namespace

double ObservedDistribution::total() const {
  double sum = 0.0;
  for (double m : mass) sum += m;
  return sum;
}

DeviationTest DeviationTestFor(Datatype datatype) {
  return datatype == Datatype::kNominal ? DeviationTest::kChiSquare
                                        : DeviationTest::kKolmogorovSmirnov;
}

double AdMetric(std::span<const double> observed, std::span<const double> target,
                DeviationTest test) {
  if (observed.size() != target.size()) {
    throw Error(ErrorCode::kSupportMismatch,
                "observed has " + std::to_string(observed.size()) + " keys, target " +
                    std::to_string(target.size()));
  }
  double total = 0.0;
  for (double m : observed) total += m;
  if (!(total > 0.0)) return 0.0;
  return test == DeviationTest::kChiSquare ? ChiSquareAd(observed, target, total)
                                           : KolmogorovAd(observed, target, total);
}

double AdMetric(const ObservedDistribution& observed, const TargetDistribution& target,
                DeviationTest test) {
  if (observed.keys != target.keys) {
    throw Error(ErrorCode::kSupportMismatch,
                "observed and target supports differ for '" + observed.attribute + "'");
  }
  return AdMetric(observed.mass, target.weights, test);
}

std::string Rgb::hex() const {
  char buf[8];
  std::snprintf(buf, sizeof(buf), "#%02x%02x%02x", r, g, b);
  return buf;
}

const DivergingScale& DefaultCardScale() { return Scales().front(); }

const DivergingScale* FindCardScale(std::string_view id) {
  for (const DivergingScale& scale : Scales())
    if (scale.id == id) return &scale;
  return nullptr;
}

std::vector<std::string> CardScaleIds() {
  std::vector<std::string> ids;
  for (const DivergingScale& scale : Scales()) ids.push_back(scale.id);
  return ids;
}

CardColor CardColorFor(double ad, const DivergingScale& scale) {
  const double t = std::clamp(ad, 0.0, 1.0);
  CardColor color;
  color.t = t;
  color.rgb = t <= 0.5 ? LerpRgb(scale.similar, scale.neutral, t / 0.5)
                       : LerpRgb(scale.neutral, scale.different, (t - 0.5) / 0.5);
  return color;
}

std::string_view FocusModeName(FocusMode mode) {
  return mode == FocusMode::kPercentage ? "Percentage" : "Raw";
}

std::optional<FocusMode> ParseFocusMode(std::string_view text) {
  if (text == "Percentage") return FocusMode::kPercentage;
  if (text == "Raw") return FocusMode::kRaw;
  return std::nullopt;
}

bool operator==(const BehaviorSnapshot& a, const BehaviorSnapshot& b) {
  return a.attribute == b.attribute && a.datatype == b.datatype && a.keys == b.keys &&
         a.observed == b.observed && a.target == b.target && a.bin_edges == b.bin_edges &&
         a.missing == b.missing && a.total == b.total && a.ad == b.ad &&
         a.color.t == b.color.t && a.color.rgb == b.color.rgb &&
         a.insufficient_evidence == b.insufficient_evidence &&
         a.series.mode == b.series.mode && a.series.observed == b.series.observed &&
         a.series.target == b.series.target;
}

BehaviorModel::BehaviorModel(const Dataset& dataset) : dataset_(&dataset) {
  supports_.reserve(dataset.attribute_count());
  row_keys_.reserve(dataset.attribute_count());
  for (size_t a = 0; a < dataset.attribute_count(); ++a) {
    supports_.push_back(SupportFor(dataset.schema()[a]));
    row_keys_.push_back(SupportIndexOfRows(dataset, a, supports_.back()));
  }
}

ObservedDistribution BehaviorModel::Observed(std::span<const double> counters,
                                             size_t attribute) const {
  const Support& support = supports_[attribute];
  ObservedDistribution observed;
  observed.attribute = support.attribute;
  observed.keys = support.keys;
  observed.mass.assign(support.size(), 0.0);
  const std::vector<int>& keys = row_keys_[attribute];
  for (size_t row = 0; row < counters.size(); ++row) {
    const double c = counters[row];
    if (c == 0.0) continue;
    if (keys[row] < 0) {
      observed.missing += c;
    } else {
      observed.mass[keys[row]] += c;
    }
  }
  return observed;
}

double BehaviorModel::Ad(std::span<const double> counters, size_t attribute,
                         const TargetDistribution& target) const {
  const ObservedDistribution observed = Observed(counters, attribute);
  if (target.keys.empty()) return 0.0;
  return AdMetric(observed, target, DeviationTestFor(supports_[attribute].datatype));
}

BehaviorSnapshot BehaviorModel::Snapshot(std::span<const double> counters, size_t attribute,
                                         const TargetDistribution& target, FocusMode focus,
                                         const DivergingScale& scale) const {
  const Support& support = supports_[attribute];
  ObservedDistribution observed = Observed(counters, attribute);

  BehaviorSnapshot snapshot;
  snapshot.attribute = support.attribute;
  snapshot.datatype = support.datatype;
  snapshot.keys = support.keys;
  snapshot.target = target.weights;
  snapshot.missing = observed.missing;
  snapshot.total = observed.total();
  if (support.binning) {
    for (int b = 0; b < support.binning->count; ++b)
      snapshot.bin_edges.push_back(support.binning->LowerEdge(b));
    snapshot.bin_edges.push_back(support.binning->hi);
  }
  if (!target.keys.empty()) {
    snapshot.ad = AdMetric(observed, target, DeviationTestFor(support.datatype));
  }
  snapshot.insufficient_evidence = !(snapshot.total > 0.0) || target.keys.empty();
  snapshot.color = CardColorFor(snapshot.ad, scale);

  snapshot.series.mode = focus;
  if (focus == FocusMode::kPercentage) {
    snapshot.series.observed.assign(observed.mass.size(), 0.0);
    if (snapshot.total > 0.0) {
      for (size_t i = 0; i < observed.mass.size(); ++i)
        snapshot.series.observed[i] = observed.mass[i] / snapshot.total;
    }
    snapshot.series.target = target.weights;
  } else {
    snapshot.series.observed = observed.mass;
    snapshot.series.target.reserve(target.weights.size());
    for (double w : target.weights) snapshot.series.target.push_back(w * snapshot.total);
  }
  snapshot.observed = std::move(observed.mass);
  return snapshot;
}

ObservedDistribution ObservedDistributionOf(const Ledger& ledger, const Dataset& dataset,
                                            std::string_view attribute) {
  const AttributeSchema& a = dataset.attribute(attribute);
  return BehaviorModel(dataset).Observed(ledger.datapoint_counters(), a.index);
}

std::vector<double> DatapointIntensities(const Ledger& ledger, NormalizeMode mode) {
  return Normalize(ledger.datapoint_counters(), mode);
}

std::vector<double> AttributeIntensities(const Ledger& ledger) {
  return Normalize(ledger.AttributeCountersAsDouble(), NormalizeMode::kRelative);
}

double ElementIntensity(const VisualElement& element, std::span<const double> intensities) {
  if (element.members.empty()) return 0.0;
  double sum = 0.0;
  for (DatapointId id : element.members) sum += intensities[id];
  return sum / static_cast<double>(element.members.size());
}

nlohmann::ordered_json SnapshotToJson(const BehaviorSnapshot& snapshot) {
  nlohmann::ordered_json out;
  out["attribute"] = snapshot.attribute;
  out["datatype"] = DatatypeShortName(snapshot.datatype);
  out["keys"] = snapshot.keys;
  out["observed"] = snapshot.observed;
  out["target"] = snapshot.target;
  if (!snapshot.bin_edges.empty()) out["bin_edges"] = snapshot.bin_edges;
  out["missing"] = snapshot.missing;
  out["ad"] = snapshot.ad;
  out["color_t"] = snapshot.color.t;
  out["color"] = snapshot.color.rgb.hex();
  out["flag"] = snapshot.insufficient_evidence ? "insufficient_evidence" : "ok";
  out["series"] = {{"mode", FocusModeName(snapshot.series.mode)},
                   {"observed", snapshot.series.observed},
                   {"target", snapshot.series.target}};
  return out;
}

}  // namespace tracelens
