#include "tracelens/targets.hpp"

#include <algorithm>
#include <cmath>

#include "tracelens/error.hpp"

namespace tracelens {

namespace {

// Already-normalized weights pass through untouched so that re-setting a
// stored target reproduces it bit for bit.
void NormalizeInPlace(std::vector<double>& weights) {
  double sum = 0.0;
  for (double w : weights) sum += w;
  if (!(sum > 0.0)) throw Error(ErrorCode::kDegenerateSketch, "target weights are all zero");
  if (std::abs(sum - 1.0) <= 1e-12) return;
  for (double& w : weights) w /= sum;
}

void RequireNonNull(const Dataset& dataset, size_t index) {
  const AttributeSchema& a = dataset.schema()[index];
  if (a.null_count >= dataset.row_count())
    throw Error(ErrorCode::kAllNullColumn, "attribute '" + a.name + "' has no values");
}

TargetDistribution Blank(const Support& support, TargetMode mode) {
  TargetDistribution target;
  target.attribute = support.attribute;
  target.mode = mode;
  target.keys = support.keys;
  target.weights.assign(support.size(), 0.0);
  return target;
}

}  // namespace

Support SupportFor(const AttributeSchema& attribute) {
  Support support;
  support.attribute = attribute.name;
  support.datatype = attribute.datatype;
  if (attribute.is_nominal()) {
    support.keys = attribute.categories;
    return support;
  }
  const Binning binning = Binning::For(attribute);
  for (int b = 0; b < binning.count; ++b) support.keys.push_back(binning.Label(b));
  support.binning = binning;
  return support;
}

std::vector<int> SupportIndexOfRows(const Dataset& dataset, size_t attribute,
                                    const Support& support) {
  const auto column = dataset.column(attribute);
  std::vector<int> index(column.size(), -1);
  for (size_t r = 0; r < column.size(); ++r) {
    if (const auto* s = std::get_if<std::string>(&column[r])) {
      const auto it = std::lower_bound(support.keys.begin(), support.keys.end(), *s);
      if (it != support.keys.end() && *it == *s) index[r] = static_cast<int>(it - support.keys.begin());
    } else if (const auto* v = std::get_if<double>(&column[r])) {
      index[r] = support.binning ? support.binning->BinOf(*v) : -1;
    }
  }
  return index;
}

std::string_view TargetModeName(TargetMode mode) {
  switch (mode) {
    case TargetMode::kProportional: return "proportional";
    case TargetMode::kEqual: return "equal";
    case TargetMode::kCustom: return "custom";
  }
  return "proportional";
}

std::optional<TargetMode> ParseTargetMode(std::string_view text) {
  for (TargetMode m : {TargetMode::kProportional, TargetMode::kEqual, TargetMode::kCustom})
    if (TargetModeName(m) == text) return m;
  return std::nullopt;
}

double TargetDistribution::WeightOf(std::string_view key) const {
  for (size_t i = 0; i < keys.size(); ++i)
    if (keys[i] == key) return weights[i];
  return 0.0;
}

TargetDistribution ProportionalTarget(const Dataset& dataset, std::string_view attribute) {
  const AttributeSchema& a = dataset.attribute(attribute);
  RequireNonNull(dataset, a.index);
  const Support support = SupportFor(a);
  TargetDistribution target = Blank(support, TargetMode::kProportional);
  size_t total = 0;
  for (int key : SupportIndexOfRows(dataset, a.index, support)) {
    if (key < 0) continue;
    target.weights[key] += 1.0;
    ++total;
  }
  for (double& w : target.weights) w /= static_cast<double>(total);
  return target;
}

TargetDistribution EqualTarget(const Dataset& dataset, std::string_view attribute) {
  const AttributeSchema& a = dataset.attribute(attribute);
  RequireNonNull(dataset, a.index);
  const Support support = SupportFor(a);
  TargetDistribution target = Blank(support, TargetMode::kEqual);
  std::fill(target.weights.begin(), target.weights.end(),
            1.0 / static_cast<double>(support.size()));
  return target;
}

TargetDistribution SetCustomTarget(const Dataset& dataset, std::string_view attribute,
                                   const std::map<std::string, double>& weights) {
  const AttributeSchema& a = dataset.attribute(attribute);
  if (!a.is_nominal())
    throw Error(ErrorCode::kInvalidSpec, "attribute '" + a.name +
                                             "' takes control points, not category weights");
  RequireNonNull(dataset, a.index);
  const Support support = SupportFor(a);
  for (const auto& [key, weight] : weights) {
    if (!std::binary_search(support.keys.begin(), support.keys.end(), key))
      throw Error(ErrorCode::kInvalidSpec, "'" + key + "' is not a category of '" + a.name + "'");
  }
  TargetDistribution target = Blank(support, TargetMode::kCustom);
  for (size_t i = 0; i < support.size(); ++i) {
    auto it = weights.find(support.keys[i]);
    if (it == weights.end())
      throw Error(ErrorCode::kInvalidSpec, "missing weight for category '" + support.keys[i] + "'");
    if (!(it->second >= 0.0) || !std::isfinite(it->second))
      throw Error(ErrorCode::kNegativeWeight,
                  "weight for '" + support.keys[i] + "' must be a non-negative number");
    target.weights[i] = it->second;
  }
  NormalizeInPlace(target.weights);
  return target;
}

double IntegrateSketch(const std::vector<ControlPoint>& points, double lo, double hi) {
  double total = 0.0;
  for (size_t i = 0; i + 1 < points.size(); ++i) {
    const ControlPoint& p = points[i];
    const ControlPoint& q = points[i + 1];
    const double a = std::max(lo, p.position);
    const double b = std::min(hi, q.position);
    if (!(b > a)) continue;
    const double slope = (q.density - p.density) / (q.position - p.position);
    const double fa = p.density + slope * (a - p.position);
    const double fb = p.density + slope * (b - p.position);
    total += (b - a) * (fa + fb) / 2.0;
  }
  return total;
}

TargetDistribution SetCustomTarget(const Dataset& dataset, std::string_view attribute,
                                   const std::vector<ControlPoint>& points) {
  const AttributeSchema& a = dataset.attribute(attribute);
  if (a.is_nominal())
    throw Error(ErrorCode::kInvalidSpec, "attribute '" + a.name +
                                             "' takes category weights, not control points");
  RequireNonNull(dataset, a.index);
  if (points.size() < 2)
    throw Error(ErrorCode::kInvalidControlPoints, "a sketch needs at least two points");
  for (size_t i = 0; i < points.size(); ++i) {
    if (!std::isfinite(points[i].position) || !std::isfinite(points[i].density))
      throw Error(ErrorCode::kInvalidControlPoints, "control points must be finite");
    if (points[i].density < 0.0)
      throw Error(ErrorCode::kNegativeWeight, "control point density must be non-negative");
    if (i > 0 && !(points[i].position > points[i - 1].position))
      throw Error(ErrorCode::kInvalidControlPoints,
                  "control point positions must be strictly increasing");
  }

  const Support support = SupportFor(a);
  TargetDistribution target = Blank(support, TargetMode::kCustom);
  target.points = points;
  const Binning& binning = *support.binning;
  if (binning.count == 1) {
    const bool any = std::any_of(points.begin(), points.end(),
                                 [](const ControlPoint& p) { return p.density > 0.0; });
    if (!any) throw Error(ErrorCode::kDegenerateSketch, "sketch has no mass");
    target.weights[0] = 1.0;
    return target;
  }
  for (int b = 0; b < binning.count; ++b)
    target.weights[b] = IntegrateSketch(points, binning.LowerEdge(b), binning.UpperEdge(b));
  NormalizeInPlace(target.weights);
  return target;
}

TargetSet::TargetSet(const Dataset& dataset) {
  for (const AttributeSchema& a : dataset.schema()) {
    try {
      targets_.push_back(ProportionalTarget(dataset, a.name));
    } catch (const Error& e) {
      if (e.code() != ErrorCode::kAllNullColumn) throw;
      TargetDistribution empty;
      empty.attribute = a.name;
      targets_.push_back(std::move(empty));
    }
  }
}

const TargetDistribution& TargetSet::Get(std::string_view attribute) const {
  for (const TargetDistribution& t : targets_)
    if (t.attribute == attribute) return t;
  throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + std::string(attribute) + "'");
}

void TargetSet::Set(TargetDistribution target) {
  for (TargetDistribution& t : targets_) {
    if (t.attribute == target.attribute) {
      t = std::move(target);
      return;
    }
  }
  throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + target.attribute + "'");
}

nlohmann::ordered_json TargetToJson(const TargetDistribution& target) {
  nlohmann::ordered_json out;
  out["attribute"] = target.attribute;
  out["mode"] = TargetModeName(target.mode);
  if (target.mode == TargetMode::kCustom) {
    if (!target.points.empty()) {
      auto& points = out["points"] = nlohmann::ordered_json::array();
      for (const ControlPoint& p : target.points) points.push_back({p.position, p.density});
    } else {
      auto& weights = out["weights"] = nlohmann::ordered_json::object();
      for (size_t i = 0; i < target.keys.size(); ++i) weights[target.keys[i]] = target.weights[i];
    }
  }
  return out;
}

TargetDistribution TargetFromJson(const Dataset& dataset, const nlohmann::json& json) {
  std::string attribute;
  std::optional<TargetMode> mode;
  try {
    attribute = json.at("attribute").get<std::string>();
    mode = ParseTargetMode(json.at("mode").get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("malformed target: ") + e.what());
  }
  if (!mode) throw Error(ErrorCode::kProtocolError, "unknown target mode");
  switch (*mode) {
    case TargetMode::kProportional:
      return ProportionalTarget(dataset, attribute);
    case TargetMode::kEqual:
      return EqualTarget(dataset, attribute);
    case TargetMode::kCustom:
      break;
  }
  try {
    if (json.contains("weights")) {
      return SetCustomTarget(dataset, attribute,
                             json.at("weights").get<std::map<std::string, double>>());
    }
    if (json.contains("points")) {
      std::vector<ControlPoint> points;
      for (const auto& p : json.at("points")) {
        if (!p.is_array() || p.size() != 2)
          throw Error(ErrorCode::kProtocolError, "control points are [position, density] pairs");
        points.push_back({p[0].get<double>(), p[1].get<double>()});
      }
      return SetCustomTarget(dataset, attribute, points);
    }
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("malformed target: ") + e.what());
  }
  throw Error(ErrorCode::kProtocolError, "custom target needs 'weights' or 'points'");
}

}  // namespace tracelens
