#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "json.hpp"
#include "tracelens/dataset.hpp"

namespace tracelens {

enum class ChartType { kScatter, kStrip, kBar, kLine };
enum class Aggregation { kNone, kCount, kSum, kMin, kMax, kAverage };

std::string_view ChartTypeName(ChartType type);
std::string_view AggregationName(Aggregation aggregation);
std::optional<ChartType> ParseChartType(std::string_view text);
std::optional<Aggregation> ParseAggregation(std::string_view text);

struct RangeFilter {
  double lo = 0.0;
  double hi = 0.0;
};

struct CategoryFilter {
  std::vector<std::string> selected;
};

struct FilterPredicate {
  std::string attribute;
  std::variant<RangeFilter, CategoryFilter> kind;

  static FilterPredicate Range(std::string attribute, double lo, double hi) {
    return {std::move(attribute), RangeFilter{lo, hi}};
  }
  static FilterPredicate Categories(std::string attribute,
                                    std::vector<std::string> selected) {
    return {std::move(attribute), CategoryFilter{std::move(selected)}};
  }
  bool is_range() const { return std::holds_alternative<RangeFilter>(kind); }
};

struct ChartSpec {
  ChartType chart_type = ChartType::kScatter;
  std::string x;
  std::optional<std::string> y;
  Aggregation aggregation = Aggregation::kNone;
  std::vector<FilterPredicate> filters;
};

// Switches for encodings the default matrix rejects.
struct EncodingRules {
  bool allow_quantitative_bar_x = false;
};

struct Violation {
  std::string field;
  std::string reason;
};

// Empty result means the spec is renderable. Throws Error(kUnknownAttribute)
// for attributes missing from the schema.
std::vector<Violation> ValidateSpec(const ChartSpec& spec, const Dataset& dataset,
                                    const EncodingRules& rules = {});

// Throws Error(kUnknownAttribute) or Error(kInvalidSpec) for predicates that
// don't fit their attribute (range on N, categories outside the domain, lo > hi).
void ValidateFilter(const FilterPredicate& filter, const Dataset& dataset);

// Rows satisfying every predicate, ascending. Null cells never pass.
std::vector<DatapointId> ApplyFilters(const Dataset& dataset,
                                      const std::vector<FilterPredicate>& filters);

enum class ElementKind { kUnit, kAggregate };

struct VisualElement {
  std::string id;
  ElementKind kind = ElementKind::kUnit;
  std::vector<DatapointId> members;
  // Aggregate value, or the y (else x) coordinate of a unit mark. Null for
  // groups whose y cells are all null.
  std::optional<double> value;
  std::string x_key;
};

// Assumes ValidateSpec passed. Bar/Line group by category (N), by distinct
// value (T) or by equal-width bin (Q).
std::vector<VisualElement> BuildElements(const Dataset& dataset, const ChartSpec& spec);

std::string ElementId(const ChartSpec& spec, std::string_view group_key);

nlohmann::ordered_json ElementToJson(const VisualElement& element);
nlohmann::ordered_json FilterToJson(const FilterPredicate& filter);
// Throws Error(kProtocolError) on malformed input.
FilterPredicate FilterFromJson(const nlohmann::json& json);

}  // namespace tracelens
