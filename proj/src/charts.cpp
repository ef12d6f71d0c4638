#include "tracelens/charts.hpp"

#include <algorithm>
#include <limits>
#include <map>

#include "tracelens/binning.hpp"
#include "tracelens/error.hpp"
#include "tracelens/hashing.hpp"

namespace tracelens {

namespace {

bool IsContinuous(Datatype type) {
  return type == Datatype::kQuantitative || type == Datatype::kTemporal;
}

std::string TypeTag(const AttributeSchema& a) {
  return a.name + " (" + std::string(DatatypeShortName(a.datatype)) + ")";
}

void CheckAggregatedY(const ChartSpec& spec, const Dataset& dataset,
                      std::vector<Violation>& out) {
  const std::string chart(ChartTypeName(spec.chart_type));
  if (!spec.y) {
    if (spec.aggregation != Aggregation::kCount) {
      out.push_back({"aggregation", chart + " chart without a Y axis needs Count aggregation"});
    }
    return;
  }
  const AttributeSchema& y = dataset.attribute(*spec.y);
  if (y.datatype != Datatype::kQuantitative) {
    out.push_back({"y", chart + " chart needs a Quantitative Y axis; " + TypeTag(y) +
                            " cannot be aggregated"});
  }
  switch (spec.aggregation) {
    case Aggregation::kSum:
    case Aggregation::kMin:
    case Aggregation::kMax:
    case Aggregation::kAverage:
      break;
    case Aggregation::kCount:
      out.push_back({"aggregation", "Count aggregation takes no Y axis; clear Y or pick "
                                    "Sum, Min, Max or Average"});
      break;
    case Aggregation::kNone:
      out.push_back({"aggregation", chart + " chart needs an aggregation"});
      break;
  }
}

double Aggregate(Aggregation aggregation, const std::vector<double>& values) {
  switch (aggregation) {
    case Aggregation::kSum:
    case Aggregation::kAverage: {
      double sum = 0.0;
      for (double v : values) sum += v;
      return aggregation == Aggregation::kSum ? sum : sum / values.size();
    }
    case Aggregation::kMin:
      return *std::min_element(values.begin(), values.end());
    case Aggregation::kMax:
      return *std::max_element(values.begin(), values.end());
    default:
      return static_cast<double>(values.size());
  }
}

struct Group {
  std::string key;
  std::vector<DatapointId> members;
};

}  // namespace

std::string_view ChartTypeName(ChartType type) {
  switch (type) {
    case ChartType::kScatter: return "Scatter";
    case ChartType::kStrip: return "Strip";
    case ChartType::kBar: return "Bar";
    case ChartType::kLine: return "Line";
  }
  return "Scatter";
}

std::string_view AggregationName(Aggregation aggregation) {
  switch (aggregation) {
    case Aggregation::kNone: return "None";
    case Aggregation::kCount: return "Count";
    case Aggregation::kSum: return "Sum";
    case Aggregation::kMin: return "Min";
    case Aggregation::kMax: return "Max";
    case Aggregation::kAverage: return "Average";
  }
  return "None";
}

std::optional<ChartType> ParseChartType(std::string_view text) {
  for (ChartType t : {ChartType::kScatter, ChartType::kStrip, ChartType::kBar, ChartType::kLine})
    if (ChartTypeName(t) == text) return t;
  return std::nullopt;
}

std::optional<Aggregation> ParseAggregation(std::string_view text) {
  for (Aggregation a : {Aggregation::kNone, Aggregation::kCount, Aggregation::kSum,
                        Aggregation::kMin, Aggregation::kMax, Aggregation::kAverage})
    if (AggregationName(a) == text) return a;
  return std::nullopt;
}

std::vector<Violation> ValidateSpec(const ChartSpec& spec, const Dataset& dataset,
                                    const EncodingRules& rules) {
  const AttributeSchema& x = dataset.attribute(spec.x);
  const AttributeSchema* y = spec.y ? &dataset.attribute(*spec.y) : nullptr;
  for (const FilterPredicate& filter : spec.filters) ValidateFilter(filter, dataset);

  std::vector<Violation> out;
  switch (spec.chart_type) {
    case ChartType::kScatter:
      if (!IsContinuous(x.datatype))
        out.push_back({"x", "Scatter plot needs a Quantitative or Temporal X axis; got " + TypeTag(x)});
      if (!y) {
        out.push_back({"y", "Scatter plot needs a Y axis"});
      } else if (!IsContinuous(y->datatype)) {
        out.push_back({"y", "Scatter plot needs a Quantitative or Temporal Y axis; got " + TypeTag(*y)});
      }
      if (spec.aggregation != Aggregation::kNone)
        out.push_back({"aggregation", "Scatter plot shows individual datapoints; set aggregation to None"});
      break;
    case ChartType::kStrip: {
      const bool x_continuous = IsContinuous(x.datatype);
      const bool y_continuous = y && IsContinuous(y->datatype);
      const bool ok = (x_continuous && (!y || y->is_nominal())) ||
                      (y_continuous && x.is_nominal());
      if (!ok) {
        out.push_back({y ? "y" : "x",
                       "Strip plot needs one Quantitative or Temporal axis and the other "
                       "axis Nominal or empty"});
      }
      if (spec.aggregation != Aggregation::kNone)
        out.push_back({"aggregation", "Strip plot shows individual datapoints; set aggregation to None"});
      break;
    }
    case ChartType::kBar:
      if (!(x.is_nominal() || x.datatype == Datatype::kTemporal ||
            (rules.allow_quantitative_bar_x && x.datatype == Datatype::kQuantitative))) {
        out.push_back({"x", "Bar chart needs a Nominal or Temporal X axis; got " + TypeTag(x)});
      }
      CheckAggregatedY(spec, dataset, out);
      break;
    case ChartType::kLine:
      if (!IsContinuous(x.datatype))
        out.push_back({"x", "Line chart needs a Temporal or Quantitative X axis; got " + TypeTag(x)});
      CheckAggregatedY(spec, dataset, out);
      break;
  }
  return out;
}

void ValidateFilter(const FilterPredicate& filter, const Dataset& dataset) {
  const AttributeSchema& a = dataset.attribute(filter.attribute);
  if (const auto* range = std::get_if<RangeFilter>(&filter.kind)) {
    if (a.is_nominal())
      throw Error(ErrorCode::kInvalidSpec,
                  "range filter on Nominal attribute '" + a.name + "'");
    if (!(range->lo <= range->hi))
      throw Error(ErrorCode::kInvalidSpec, "range filter on '" + a.name + "' has lo > hi");
    return;
  }
  const auto& set = std::get<CategoryFilter>(filter.kind);
  if (!a.is_nominal())
    throw Error(ErrorCode::kInvalidSpec,
                "category filter on non-Nominal attribute '" + a.name + "'");
  for (const std::string& category : set.selected) {
    if (!std::binary_search(a.categories.begin(), a.categories.end(), category))
      throw Error(ErrorCode::kInvalidSpec,
                  "category '" + category + "' is not in the domain of '" + a.name + "'");
  }
}

std::vector<DatapointId> ApplyFilters(const Dataset& dataset,
                                      const std::vector<FilterPredicate>& filters) {
  std::vector<char> keep(dataset.row_count(), 1);
  for (const FilterPredicate& filter : filters) {
    const size_t a = *dataset.IndexOf(filter.attribute);
    const auto column = dataset.column(a);
    if (const auto* range = std::get_if<RangeFilter>(&filter.kind)) {
      for (size_t r = 0; r < column.size(); ++r) {
        const auto* v = std::get_if<double>(&column[r]);
        if (!v || *v < range->lo || *v > range->hi) keep[r] = 0;
      }
    } else {
      const auto& selected = std::get<CategoryFilter>(filter.kind).selected;
      for (size_t r = 0; r < column.size(); ++r) {
        const auto* s = std::get_if<std::string>(&column[r]);
        if (!s || std::find(selected.begin(), selected.end(), *s) == selected.end())
          keep[r] = 0;
      }
    }
  }
  std::vector<DatapointId> rows;
  for (size_t r = 0; r < keep.size(); ++r)
    if (keep[r]) rows.push_back(static_cast<DatapointId>(r));
  return rows;
}

std::string ElementId(const ChartSpec& spec, std::string_view group_key) {
  Fnv1a hash;
  hash.UpdateField(ChartTypeName(spec.chart_type));
  hash.UpdateField(spec.x);
  hash.UpdateField(spec.y ? *spec.y : std::string("\x01none"));
  hash.UpdateField(AggregationName(spec.aggregation));
  hash.UpdateField(group_key);
  return "el-" + hash.hex();
}

std::vector<VisualElement> BuildElements(const Dataset& dataset, const ChartSpec& spec) {
  const std::vector<DatapointId> rows = ApplyFilters(dataset, spec.filters);
  const size_t x_index = *dataset.IndexOf(spec.x);
  const AttributeSchema& x = dataset.schema()[x_index];
  const std::optional<size_t> y_index =
      spec.y ? dataset.IndexOf(*spec.y) : std::optional<size_t>();

  std::vector<VisualElement> elements;
  if (spec.chart_type == ChartType::kScatter || spec.chart_type == ChartType::kStrip) {
    for (DatapointId row : rows) {
      const Cell& xc = dataset.cell(row, x_index);
      if (IsNull(xc)) continue;
      if (y_index && IsNull(dataset.cell(row, *y_index))) continue;
      VisualElement element;
      element.kind = ElementKind::kUnit;
      element.members = {row};
      element.id = ElementId(spec, "row:" + std::to_string(row));
      element.x_key = dataset.FormatCell(row, x_index);
      if (y_index) {
        if (const auto* v = std::get_if<double>(&dataset.cell(row, *y_index))) element.value = *v;
      }
      if (!element.value) {
        if (const auto* v = std::get_if<double>(&xc)) element.value = *v;
      }
      elements.push_back(std::move(element));
    }
    return elements;
  }

  std::vector<Group> groups;
  if (x.is_nominal()) {
    groups.resize(x.categories.size());
    for (size_t i = 0; i < groups.size(); ++i) groups[i].key = x.categories[i];
    for (DatapointId row : rows) {
      const auto* s = std::get_if<std::string>(&dataset.cell(row, x_index));
      if (!s) continue;
      const auto it = std::lower_bound(x.categories.begin(), x.categories.end(), *s);
      groups[it - x.categories.begin()].members.push_back(row);
    }
  } else if (x.datatype == Datatype::kTemporal) {
    std::map<double, std::vector<DatapointId>> by_value;
    for (DatapointId row : rows) {
      if (const auto* v = std::get_if<double>(&dataset.cell(row, x_index)))
        by_value[*v].push_back(row);
    }
    for (auto& [value, members] : by_value) {
      groups.push_back({dataset.FormatCell(members.front(), x_index), std::move(members)});
    }
  } else {
    const Binning binning = Binning::For(x);
    groups.resize(binning.count);
    for (int b = 0; b < binning.count; ++b) groups[b].key = binning.Label(b);
    for (DatapointId row : rows) {
      if (const auto* v = std::get_if<double>(&dataset.cell(row, x_index)))
        groups[binning.BinOf(*v)].members.push_back(row);
    }
  }

  for (Group& group : groups) {
    if (group.members.empty()) continue;
    VisualElement element;
    element.kind = ElementKind::kAggregate;
    element.id = ElementId(spec, group.key);
    element.x_key = group.key;
    if (spec.aggregation == Aggregation::kCount || !y_index) {
      element.value = static_cast<double>(group.members.size());
    } else {
      std::vector<double> values;
      for (DatapointId row : group.members) {
        if (const auto* v = std::get_if<double>(&dataset.cell(row, *y_index)))
          values.push_back(*v);
      }
      if (!values.empty()) element.value = Aggregate(spec.aggregation, values);
    }
    element.members = std::move(group.members);
    elements.push_back(std::move(element));
  }
  return elements;
}

nlohmann::ordered_json ElementToJson(const VisualElement& element) {
  nlohmann::ordered_json out;
  out["id"] = element.id;
  out["kind"] = element.kind == ElementKind::kUnit ? "unit" : "aggregate";
  out["members"] = element.members;
  out["value"] = element.value ? nlohmann::ordered_json(*element.value) : nlohmann::ordered_json();
  out["x_key"] = element.x_key;
  return out;
}

nlohmann::ordered_json FilterToJson(const FilterPredicate& filter) {
  nlohmann::ordered_json out;
  out["attribute"] = filter.attribute;
  if (const auto* range = std::get_if<RangeFilter>(&filter.kind)) {
    out["range"] = {range->lo, range->hi};
  } else {
    out["categories"] = std::get<CategoryFilter>(filter.kind).selected;
  }
  return out;
}

FilterPredicate FilterFromJson(const nlohmann::json& json) {
  try {
    FilterPredicate filter;
    filter.attribute = json.at("attribute").get<std::string>();
    if (json.contains("range")) {
      const auto& range = json.at("range");
      if (!range.is_array() || range.size() != 2)
        throw Error(ErrorCode::kProtocolError, "filter range must be [lo, hi]");
      filter.kind = RangeFilter{range[0].get<double>(), range[1].get<double>()};
    } else if (json.contains("categories")) {
      filter.kind = CategoryFilter{json.at("categories").get<std::vector<std::string>>()};
    } else {
      throw Error(ErrorCode::kProtocolError, "filter needs 'range' or 'categories'");
    }
    return filter;
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kProtocolError, std::string("malformed filter: ") + e.what());
  }
}

}  // namespace tracelens
