#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace tracelens {

enum class Datatype { kNominal, kQuantitative, kTemporal };

std::string_view DatatypeName(Datatype type);        // "Nominal", ...
std::string_view DatatypeShortName(Datatype type);   // "N", "Q", "T"
std::optional<Datatype> ParseDatatype(std::string_view text);

// Temporal cells are stored as numbers: either the calendar year itself or
// days since 1970-01-01 (fractional when a time of day is present).
enum class TemporalUnit { kYear, kDay };

using DatapointId = uint32_t;

// A null cell is std::monostate; Nominal cells hold text, Q/T cells a double.
using Cell = std::variant<std::monostate, double, std::string>;

inline bool IsNull(const Cell& cell) {
  return std::holds_alternative<std::monostate>(cell);
}

struct AttributeSchema {
  std::string name;
  Datatype datatype = Datatype::kNominal;
  size_t index = 0;
  // Nominal: sorted distinct categories. Q/T: [min, max] over non-null cells.
  std::vector<std::string> categories;
  double min = 0.0;
  double max = 0.0;
  TemporalUnit temporal_unit = TemporalUnit::kYear;
  size_t null_count = 0;

  bool is_nominal() const { return datatype == Datatype::kNominal; }
};

struct IngestOptions {
  char delimiter = ',';
  bool has_header = true;
  // Per-attribute datatype overrides; take precedence over inference.
  std::map<std::string, Datatype> type_overrides;
};

class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<AttributeSchema> schema,
          std::vector<std::vector<Cell>> columns);

  size_t row_count() const { return row_count_; }
  size_t attribute_count() const { return schema_.size(); }
  const std::vector<AttributeSchema>& schema() const { return schema_; }

  // Throws Error(kUnknownAttribute).
  const AttributeSchema& attribute(std::string_view name) const;
  std::optional<size_t> IndexOf(std::string_view name) const;

  const Cell& cell(DatapointId row, size_t attribute) const {
    return columns_[attribute][row];
  }
  std::span<const Cell> column(size_t attribute) const {
    return columns_[attribute];
  }

  // Display text for a cell ("" for null). Temporal cells render as the
  // year or an ISO date depending on the column's unit.
  std::string FormatCell(DatapointId row, size_t attribute) const;

  // Content hash over schema and cells; used to bind session logs to data.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  std::vector<AttributeSchema> schema_;
  std::vector<std::vector<Cell>> columns_;
  size_t row_count_ = 0;
  std::string fingerprint_;
};

// Datatype inference over raw text columns. Throws Error(kAllNullColumn)
// when a column holds no non-null cell.
Datatype InferType(std::string_view name, std::span<const std::string> cells);
std::vector<Datatype> InferTypes(
    std::span<const std::string> names,
    std::span<const std::vector<std::string>> columns);

// Delimited text with a header row.
Dataset Ingest(std::string_view source, const IngestOptions& options = {});
// JSON array of row objects; attribute order follows the first row.
Dataset IngestJsonRows(std::string_view source, const IngestOptions& options = {});
// Dispatches on extension: ".json" uses IngestJsonRows, anything else Ingest.
Dataset IngestFile(const std::string& path, const IngestOptions& options = {});

// Builds a Dataset from raw string columns; shared by both ingest paths.
Dataset BuildDataset(std::vector<std::string> names,
                     std::vector<std::vector<std::string>> raw_columns,
                     const IngestOptions& options);

bool IsMissingToken(std::string_view text);
std::optional<double> ParseNumber(std::string_view text);
// Days since 1970-01-01 for "YYYY-MM-DD" with an optional "THH:MM[:SS]" or
// " HH:MM[:SS]" suffix.
std::optional<double> ParseIsoDate(std::string_view text);
std::optional<int> ParseYear(std::string_view text);
std::string FormatIsoDate(double days);

// Serialized schema, as printed by the `ingest` CLI subcommand.
std::string SchemaToJson(const Dataset& dataset, int indent = 2);

}  // namespace tracelens
