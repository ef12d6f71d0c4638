#include "tracelens/dataset.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <unordered_set>

#include "json.hpp"
#include "tracelens/error.hpp"
#include "tracelens/hashing.hpp"

namespace tracelens {

namespace {

std::string_view Trim(std::string_view text) {
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.front())))
    text.remove_prefix(1);
  while (!text.empty() && std::isspace(static_cast<unsigned char>(text.back())))
    text.remove_suffix(1);
  return text;
}

std::string Lower(std::string_view text) {
  std::string out(text);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

bool HasDateWord(std::string_view name) {
  const std::string lower = Lower(name);
  return lower.find("year") != std::string::npos ||
         lower.find("date") != std::string::npos ||
         lower.find("time") != std::string::npos;
}

bool ParseDigits(std::string_view text, int& out) {
  if (text.empty()) return false;
  for (char c : text)
    if (c < '0' || c > '9') return false;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), out);
  return ec == std::errc() && ptr == text.data() + text.size();
}

// Howard Hinnant's days_from_civil.
int64_t DaysFromCivil(int64_t y, unsigned m, unsigned d) {
  y -= m <= 2;
  const int64_t era = (y >= 0 ? y : y - 399) / 400;
  const unsigned yoe = static_cast<unsigned>(y - era * 400);
  const unsigned doy = (153 * (m + (m > 2 ? -3 : 9)) + 2) / 5 + d - 1;
  const unsigned doe = yoe * 365 + yoe / 4 - yoe / 100 + doy;
  return era * 146097 + static_cast<int64_t>(doe) - 719468;
}

void CivilFromDays(int64_t z, int64_t& y, unsigned& m, unsigned& d) {
  z += 719468;
  const int64_t era = (z >= 0 ? z : z - 146096) / 146097;
  const unsigned doe = static_cast<unsigned>(z - era * 146097);
  const unsigned yoe = (doe - doe / 1460 + doe / 36524 - doe / 146096) / 365;
  y = static_cast<int64_t>(yoe) + era * 400;
  const unsigned doy = doe - (365 * yoe + yoe / 4 - yoe / 100);
  const unsigned mp = (5 * doy + 2) / 153;
  d = doy - (153 * mp + 2) / 5 + 1;
  m = mp < 10 ? mp + 3 : mp - 9;
  y += m <= 2;
}

bool IsLeap(int y) { return (y % 4 == 0 && y % 100 != 0) || y % 400 == 0; }

int DaysInMonth(int y, int m) {
  static constexpr int kDays[] = {31, 28, 31, 30, 31, 30, 31, 31, 30, 31, 30, 31};
  return m == 2 && IsLeap(y) ? 29 : kDays[m - 1];
}

std::string FormatNumber(double value) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", value);
  return buf;
}

// RFC 4180 style splitting: quoted fields may contain the delimiter, doubled
// quotes and newlines. Blank lines are skipped.
std::vector<std::vector<std::string>> SplitDelimited(std::string_view source,
                                                     char delimiter) {
  std::vector<std::vector<std::string>> rows;
  std::vector<std::string> row;
  std::string field;
  bool in_quotes = false;
  bool field_started = false;

  auto end_field = [&] {
    row.push_back(std::move(field));
    field.clear();
    field_started = false;
  };
  auto end_row = [&] {
    end_field();
    const bool blank = row.size() == 1 && row[0].empty();
    if (!blank) rows.push_back(std::move(row));
    row.clear();
  };

  for (size_t i = 0; i < source.size(); ++i) {
    const char c = source[i];
    if (in_quotes) {
      if (c == '"') {
        if (i + 1 < source.size() && source[i + 1] == '"') {
          field.push_back('"');
          ++i;
        } else {
          in_quotes = false;
        }
      } else {
        field.push_back(c);
      }
      continue;
    }
    if (c == '"' && !field_started) {
      in_quotes = true;
      field_started = true;
    } else if (c == delimiter) {
      end_field();
    } else if (c == '\n') {
      end_row();
    } else if (c == '\r') {
      if (i + 1 < source.size() && source[i + 1] == '\n') continue;
      end_row();
    } else {
      field.push_back(c);
      field_started = true;
    }
  }
  if (!field.empty() || !row.empty() || field_started) end_row();
  return rows;
}

Cell ConvertCell(const std::string& raw, Datatype type, TemporalUnit unit,
                 const std::string& attribute) {
  const std::string_view text = Trim(raw);
  if (IsMissingToken(text)) return std::monostate{};
  switch (type) {
    case Datatype::kNominal:
      return std::string(text);
    case Datatype::kQuantitative:
      if (auto value = ParseNumber(text)) return *value;
      break;
    case Datatype::kTemporal: {
      if (unit == TemporalUnit::kYear) {
        if (auto year = ParseYear(text)) return static_cast<double>(*year);
        if (auto value = ParseNumber(text)) return *value;
      } else {
        if (auto days = ParseIsoDate(text)) return *days;
        if (auto year = ParseYear(text))
          return static_cast<double>(DaysFromCivil(*year, 1, 1));
      }
      break;
    }
  }
  throw Error(ErrorCode::kTypeMismatch,
              "cell '" + std::string(text) + "' in attribute '" + attribute +
                  "' does not parse as " +
                  std::string(DatatypeName(type)));
}

}  // namespace

std::string_view DatatypeName(Datatype type) {
  switch (type) {
    case Datatype::kNominal: return "Nominal";
    case Datatype::kQuantitative: return "Quantitative";
    case Datatype::kTemporal: return "Temporal";
  }
  return "Nominal";
}

std::string_view DatatypeShortName(Datatype type) {
  switch (type) {
    case Datatype::kNominal: return "N";
    case Datatype::kQuantitative: return "Q";
    case Datatype::kTemporal: return "T";
  }
  return "N";
}

std::optional<Datatype> ParseDatatype(std::string_view text) {
  const std::string lower = Lower(Trim(text));
  if (lower == "n" || lower == "nominal") return Datatype::kNominal;
  if (lower == "q" || lower == "quantitative") return Datatype::kQuantitative;
  if (lower == "t" || lower == "temporal") return Datatype::kTemporal;
  return std::nullopt;
}

bool IsMissingToken(std::string_view text) {
  text = Trim(text);
  return text.empty() || text == "NA";
}

std::optional<double> ParseNumber(std::string_view text) {
  text = Trim(text);
  if (text.empty()) return std::nullopt;
  if (text.front() == '+') text.remove_prefix(1);
  double value = 0.0;
  auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
  if (ec != std::errc() || ptr != text.data() + text.size()) return std::nullopt;
  if (!std::isfinite(value)) return std::nullopt;
  return value;
}

std::optional<int> ParseYear(std::string_view text) {
  text = Trim(text);
  int year = 0;
  if (text.size() != 4 || !ParseDigits(text, year)) return std::nullopt;
  if (year < 1800 || year > 2100) return std::nullopt;
  return year;
}

std::optional<double> ParseIsoDate(std::string_view text) {
  text = Trim(text);
  if (text.size() < 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  int y = 0, m = 0, d = 0;
  if (!ParseDigits(text.substr(0, 4), y) || !ParseDigits(text.substr(5, 2), m) ||
      !ParseDigits(text.substr(8, 2), d))
    return std::nullopt;
  if (m < 1 || m > 12 || d < 1 || d > DaysInMonth(y, m)) return std::nullopt;
  double days = static_cast<double>(DaysFromCivil(y, m, d));
  if (text.size() == 10) return days;

  std::string_view rest = text.substr(10);
  if (rest.front() != 'T' && rest.front() != ' ') return std::nullopt;
  rest.remove_prefix(1);
  if (!rest.empty() && rest.back() == 'Z') rest.remove_suffix(1);
  int hh = 0, mm = 0, ss = 0;
  if (rest.size() != 5 && rest.size() != 8) return std::nullopt;
  if (rest[2] != ':' || !ParseDigits(rest.substr(0, 2), hh) ||
      !ParseDigits(rest.substr(3, 2), mm))
    return std::nullopt;
  if (rest.size() == 8 && (rest[5] != ':' || !ParseDigits(rest.substr(6, 2), ss)))
    return std::nullopt;
  if (hh > 23 || mm > 59 || ss > 59) return std::nullopt;
  return days + (hh * 3600 + mm * 60 + ss) / 86400.0;
}

std::string FormatIsoDate(double days) {
  const double whole = std::floor(days);
  int64_t y = 0;
  unsigned m = 0, d = 0;
  CivilFromDays(static_cast<int64_t>(whole), y, m, d);
  char buf[48];
  const int seconds = static_cast<int>(std::lround((days - whole) * 86400.0));
  if (seconds == 0 || seconds == 86400) {
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02u", static_cast<long long>(y), m, d);
  } else {
    std::snprintf(buf, sizeof(buf), "%04lld-%02u-%02uT%02d:%02d:%02d",
                  static_cast<long long>(y), m, d, seconds / 3600,
                  (seconds / 60) % 60, seconds % 60);
  }
  return buf;
}

Datatype InferType(std::string_view name, std::span<const std::string> cells) {
  bool any = false;
  bool all_temporal = true;
  bool all_numeric = true;
  for (const std::string& raw : cells) {
    const std::string_view text = Trim(raw);
    if (IsMissingToken(text)) continue;
    any = true;
    if (all_temporal && !ParseYear(text) && !ParseIsoDate(text)) all_temporal = false;
    if (all_numeric && !ParseNumber(text)) all_numeric = false;
    if (!all_temporal && !all_numeric) break;
  }
  if (!any) {
    throw Error(ErrorCode::kAllNullColumn,
                "attribute '" + std::string(name) +
                    "' has no non-null cells; supply an explicit type");
  }
  if (all_temporal && HasDateWord(name)) return Datatype::kTemporal;
  if (all_numeric) return Datatype::kQuantitative;
  return Datatype::kNominal;
}

std::vector<Datatype> InferTypes(std::span<const std::string> names,
                                 std::span<const std::vector<std::string>> columns) {
  std::vector<Datatype> types;
  types.reserve(columns.size());
  for (size_t i = 0; i < columns.size(); ++i) {
    types.push_back(InferType(i < names.size() ? names[i] : std::string_view(),
                              columns[i]));
  }
  return types;
}

Dataset BuildDataset(std::vector<std::string> names,
                     std::vector<std::vector<std::string>> raw_columns,
                     const IngestOptions& options) {
  if (names.empty()) throw Error(ErrorCode::kEmptyInput, "no attributes");
  std::unordered_set<std::string> seen;
  for (const std::string& name : names) {
    if (!seen.insert(name).second)
      throw Error(ErrorCode::kDuplicateAttributeName,
                  "duplicate attribute name '" + name + "'");
  }
  for (const auto& [name, type] : options.type_overrides) {
    if (!seen.count(name))
      throw Error(ErrorCode::kUnknownAttribute,
                  "type override for unknown attribute '" + name + "'");
  }
  const size_t rows = raw_columns.empty() ? 0 : raw_columns.front().size();
  if (rows == 0) throw Error(ErrorCode::kEmptyInput, "no data rows");

  std::vector<AttributeSchema> schema;
  std::vector<std::vector<Cell>> columns;
  schema.reserve(names.size());
  columns.reserve(names.size());
  for (size_t a = 0; a < names.size(); ++a) {
    AttributeSchema attribute;
    attribute.name = names[a];
    attribute.index = a;
    const auto& raw = raw_columns[a];
    if (auto it = options.type_overrides.find(names[a]);
        it != options.type_overrides.end()) {
      attribute.datatype = it->second;
    } else {
      attribute.datatype = InferType(names[a], raw);
    }
    if (attribute.datatype == Datatype::kTemporal) {
      const bool all_years = std::all_of(raw.begin(), raw.end(), [](const std::string& s) {
        return IsMissingToken(s) || ParseYear(s) || (ParseNumber(s) && !ParseIsoDate(s));
      });
      attribute.temporal_unit = all_years ? TemporalUnit::kYear : TemporalUnit::kDay;
    }

    std::vector<Cell> cells;
    cells.reserve(rows);
    std::set<std::string> categories;
    bool has_value = false;
    for (const std::string& text : raw) {
      Cell cell = ConvertCell(text, attribute.datatype, attribute.temporal_unit,
                              attribute.name);
      if (IsNull(cell)) {
        ++attribute.null_count;
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        categories.insert(*s);
      } else {
        const double v = std::get<double>(cell);
        if (!has_value) {
          attribute.min = attribute.max = v;
          has_value = true;
        } else {
          attribute.min = std::min(attribute.min, v);
          attribute.max = std::max(attribute.max, v);
        }
      }
      cells.push_back(std::move(cell));
    }
    attribute.categories.assign(categories.begin(), categories.end());
    schema.push_back(std::move(attribute));
    columns.push_back(std::move(cells));
  }
  return Dataset(std::move(schema), std::move(columns));
}

Dataset Ingest(std::string_view source, const IngestOptions& options) {
  auto rows = SplitDelimited(source, options.delimiter);
  if (rows.empty()) throw Error(ErrorCode::kEmptyInput, "input is empty");

  std::vector<std::string> names;
  size_t first_data = 0;
  if (options.has_header) {
    for (const std::string& name : rows.front()) names.emplace_back(Trim(name));
    first_data = 1;
  } else {
    for (size_t i = 0; i < rows.front().size(); ++i)
      names.push_back("column_" + std::to_string(i + 1));
  }
  if (rows.size() <= first_data) throw Error(ErrorCode::kEmptyInput, "no data rows");

  std::vector<std::vector<std::string>> raw(names.size());
  for (auto& column : raw) column.reserve(rows.size() - first_data);
  for (size_t r = first_data; r < rows.size(); ++r) {
    if (rows[r].size() != names.size()) {
      throw Error(ErrorCode::kRaggedRow,
                  "row " + std::to_string(r - first_data) + " has " +
                      std::to_string(rows[r].size()) + " fields, expected " +
                      std::to_string(names.size()));
    }
    for (size_t a = 0; a < names.size(); ++a) raw[a].push_back(std::move(rows[r][a]));
  }
  return BuildDataset(std::move(names), std::move(raw), options);
}

Dataset IngestJsonRows(std::string_view source, const IngestOptions& options) {
  nlohmann::ordered_json doc;
  try {
    doc = nlohmann::ordered_json::parse(source);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kEmptyInput, std::string("malformed JSON rows: ") + e.what());
  }
  if (!doc.is_array() || doc.empty())
    throw Error(ErrorCode::kEmptyInput, "expected a non-empty JSON array of rows");

  std::vector<std::string> names;
  for (const auto& [key, value] : doc.front().items()) names.push_back(key);
  std::vector<std::vector<std::string>> raw(names.size());
  for (size_t r = 0; r < doc.size(); ++r) {
    const auto& row = doc[r];
    if (!row.is_object() || row.size() != names.size()) {
      throw Error(ErrorCode::kRaggedRow,
                  "row " + std::to_string(r) + " does not match the first row's keys");
    }
    for (size_t a = 0; a < names.size(); ++a) {
      auto it = row.find(names[a]);
      if (it == row.end())
        throw Error(ErrorCode::kRaggedRow, "row " + std::to_string(r) +
                                               " lacks key '" + names[a] + "'");
      if (it->is_null()) {
        raw[a].emplace_back();
      } else if (it->is_string()) {
        raw[a].push_back(it->get<std::string>());
      } else {
        raw[a].push_back(it->dump());
      }
    }
  }
  return BuildDataset(std::move(names), std::move(raw), options);
}

Dataset IngestFile(const std::string& path, const IngestOptions& options) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::kIoError, "cannot open '" + path + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  const std::string text = buffer.str();
  if (path.size() >= 5 && Lower(path.substr(path.size() - 5)) == ".json")
    return IngestJsonRows(text, options);
  return Ingest(text, options);
}

Dataset::Dataset(std::vector<AttributeSchema> schema,
                 std::vector<std::vector<Cell>> columns)
    : schema_(std::move(schema)), columns_(std::move(columns)) {
  row_count_ = columns_.empty() ? 0 : columns_.front().size();
  Fnv1a hash;
  hash.UpdateField(std::to_string(row_count_));
  for (size_t a = 0; a < schema_.size(); ++a) {
    hash.UpdateField(schema_[a].name);
    hash.UpdateField(DatatypeShortName(schema_[a].datatype));
    for (const Cell& cell : columns_[a]) {
      if (IsNull(cell)) {
        hash.UpdateField("\x01null");
      } else if (const auto* s = std::get_if<std::string>(&cell)) {
        hash.UpdateField(*s);
      } else {
        hash.UpdateField(FormatNumber(std::get<double>(cell)));
      }
    }
  }
  fingerprint_ = hash.hex();
}

const AttributeSchema& Dataset::attribute(std::string_view name) const {
  if (auto index = IndexOf(name)) return schema_[*index];
  throw Error(ErrorCode::kUnknownAttribute, "unknown attribute '" + std::string(name) + "'");
}

std::optional<size_t> Dataset::IndexOf(std::string_view name) const {
  for (size_t i = 0; i < schema_.size(); ++i)
    if (schema_[i].name == name) return i;
  return std::nullopt;
}

std::string Dataset::FormatCell(DatapointId row, size_t attribute) const {
  const Cell& value = cell(row, attribute);
  if (IsNull(value)) return "";
  if (const auto* s = std::get_if<std::string>(&value)) return *s;
  const double v = std::get<double>(value);
  const AttributeSchema& a = schema_[attribute];
  if (a.datatype == Datatype::kTemporal && a.temporal_unit == TemporalUnit::kDay)
    return FormatIsoDate(v);
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.15g", v);
  return buf;
}

std::string SchemaToJson(const Dataset& dataset, int indent) {
  nlohmann::ordered_json out;
  out["rows"] = dataset.row_count();
  out["fingerprint"] = dataset.fingerprint();
  auto& attributes = out["attributes"] = nlohmann::ordered_json::array();
  for (const AttributeSchema& a : dataset.schema()) {
    nlohmann::ordered_json entry;
    entry["name"] = a.name;
    entry["index"] = a.index;
    entry["datatype"] = DatatypeName(a.datatype);
    if (a.is_nominal()) {
      entry["domain"] = a.categories;
    } else {
      entry["domain"] = {a.min, a.max};
    }
    if (a.datatype == Datatype::kTemporal)
      entry["unit"] = a.temporal_unit == TemporalUnit::kYear ? "year" : "day";
    entry["nulls"] = a.null_count;
    attributes.push_back(std::move(entry));
  }
  return out.dump(indent);
}

}  // namespace tracelens
