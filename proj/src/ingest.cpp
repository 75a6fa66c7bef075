// Copyright 2026 The proval Authors. All Rights Reserved.
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//     http://www.apache.org/licenses/LICENSE-2.0
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include "proval/ingest.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <numeric>
#include <sstream>

#include "proval/errors.hpp"

namespace proval {

namespace {

constexpr const char* kStatsFormat = "proval.stats";
constexpr int kStatsVersion = 1;

// One RFC 4180 record; quoted fields may contain separators, doubled quotes
// and line breaks. Returns false at end of input.
bool read_record(std::istream& in, std::vector<std::string>& fields, std::size_t& line) {
  fields.clear();
  std::string field;
  bool in_quotes = false;
  bool any = false;
  char c;
  while (in.get(c)) {
    any = true;
    if (in_quotes) {
      if (c == '"') {
        if (in.peek() == '"') {
          in.get(c);
          field += '"';
        } else {
          in_quotes = false;
        }
      } else {
        if (c == '\n') ++line;
        field += c;
      }
    } else if (c == '"') {
      in_quotes = true;
    } else if (c == ',') {
      fields.push_back(std::move(field));
      field.clear();
    } else if (c == '\n') {
      ++line;
      break;
    } else if (c != '\r') {
      field += c;
    }
  }
  if (!any) return false;
  fields.push_back(std::move(field));
  return true;
}

std::string quote(const std::string& s) {
  if (s.find_first_of(",\"\n\r") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || ptr != s.data() + s.size() || !std::isfinite(v)) return std::nullopt;
  return v;
}

std::string format_cell(const FeatureValue& v) {
  if (is_missing(v)) return {};
  if (const double* d = std::get_if<double>(&v)) return format_number(*d);
  if (const std::string* s = std::get_if<std::string>(&v)) return quote(*s);
  const auto& t = std::get<TemporalValue>(v);
  return format_number(t.value) + "@" + format_date(t.date);
}

// Parses a cell for a declared feature; nullopt when unparsable.
std::optional<FeatureValue> parse_cell(const FeatureDecl& decl, const std::string& cell) {
  if (cell.empty()) return FeatureValue{Missing{}};
  switch (decl.kind) {
    case FeatureKind::Numeric:
      if (auto v = parse_number(cell)) return FeatureValue{*v};
      return std::nullopt;
    case FeatureKind::Categorical:
      return FeatureValue{cell};
    case FeatureKind::Temporal: {
      auto at = cell.find('@');
      if (at == std::string::npos) return std::nullopt;
      auto v = parse_number(std::string_view(cell).substr(0, at));
      auto d = parse_date(std::string_view(cell).substr(at + 1));
      if (!v || !d) return std::nullopt;
      return FeatureValue{TemporalValue{*d, *v}};
    }
  }
  return std::nullopt;
}

void summarize(FeatureStats& s, std::vector<double> values) {
  s.count = values.size();
  if (values.empty()) return;
  std::sort(values.begin(), values.end());
  s.min = values.front();
  s.max = values.back();
  const double n = static_cast<double>(values.size());
  s.mean = std::accumulate(values.begin(), values.end(), 0.0) / n;
  s.mean = std::clamp(s.mean, s.min, s.max);
  double ss = 0.0;
  for (double v : values) ss += (v - s.mean) * (v - s.mean);
  s.stddev = std::sqrt(ss / n);
}

}  // namespace

std::string format_number(double v) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

std::optional<std::string> FeatureStats::mode() const {
  std::optional<std::string> best;
  std::size_t best_count = 0;
  for (const auto& [label, n] : frequencies) {  // std::map iterates labels in order
    if (n > best_count) {
      best = label;
      best_count = n;
    }
  }
  return best;
}

const FeatureStats* NormalizationStats::find(std::string_view name) const {
  for (const auto& f : features) {
    if (f.name == name) return &f;
  }
  return nullptr;
}

std::vector<std::string> NormalizationStats::unobserved() const {
  std::vector<std::string> out;
  for (const auto& f : features) {
    if (f.unobserved()) out.push_back(f.name);
  }
  return out;
}

NormalizationStats compute_stats(const FeatureSchema& schema, const std::vector<Property>& records) {
  NormalizationStats stats;
  stats.schema_hash = schema.hash();
  for (const auto& decl : schema.features()) {
    FeatureStats s;
    s.name = decl.name;
    s.kind = decl.kind;
    std::vector<double> values;
    std::vector<double> at_latest;  // temporal values observed on the latest date
    for (const auto& p : records) {
      const FeatureValue& v = p.feature(decl.name);
      if (is_missing(v)) continue;
      switch (decl.kind) {
        case FeatureKind::Numeric:
          if (auto x = scalar_of(v)) values.push_back(*x);
          break;
        case FeatureKind::Categorical:
          if (const auto* label = std::get_if<std::string>(&v)) ++s.frequencies[*label];
          break;
        case FeatureKind::Temporal:
          if (const auto* t = std::get_if<TemporalValue>(&v)) {
            values.push_back(t->value);
            if (!s.latest || t->date > s.latest->date) {
              s.latest = *t;
              at_latest.clear();
            }
            if (t->date == s.latest->date) at_latest.push_back(t->value);
          }
          break;
      }
    }
    if (s.latest) {
      // Sorted so the mean does not depend on record order.
      std::sort(at_latest.begin(), at_latest.end());
      const double mean = std::accumulate(at_latest.begin(), at_latest.end(), 0.0) /
                          static_cast<double>(at_latest.size());
      s.latest->value = std::clamp(mean, at_latest.front(), at_latest.back());
    }
    if (decl.kind == FeatureKind::Categorical) {
      for (const auto& [label, n] : s.frequencies) s.count += n;
    } else {
      summarize(s, std::move(values));
    }
    stats.features.push_back(std::move(s));
  }
  return stats;
}

Dataset make_dataset(FeatureSchema schema, PropertyType type, std::vector<Property> records) {
  Dataset d;
  d.schema = std::move(schema);
  d.property_type = type;
  d.records = std::move(records);
  d.stats = compute_stats(d.schema, d.records);
  return d;
}

LoadResult parse_csv(std::istream& in, const FeatureSchema& schema) {
  std::vector<std::string> header;
  std::size_t line = 0;
  if (!read_record(in, header, line)) throw InvalidArgument("csv: empty input, header row expected");

  std::map<std::string, std::size_t, std::less<>> column;
  for (std::size_t i = 0; i < header.size(); ++i) column.emplace(header[i], i);
  auto col = [&](std::string_view name) -> std::optional<std::size_t> {
    auto it = column.find(name);
    return it == column.end() ? std::nullopt : std::optional<std::size_t>(it->second);
  };
  for (const char* required : {"id", "type", "unit_price"}) {
    if (!col(required)) throw InvalidArgument(std::string("csv: header lacks required column '") + required + "'");
  }
  std::vector<std::optional<std::size_t>> feature_col;
  for (const auto& decl : schema.features()) {
    auto c = col(decl.name);
    if (!c && decl.required_by_avm) throw InvalidArgument("csv: header lacks required feature column '" + decl.name + "'");
    feature_col.push_back(c);
  }
  const auto id_col = *col("id"), type_col = *col("type"), price_col = *col("unit_price");
  const auto address_col = col("address"), date_col = col("transaction_date");

  LoadResult result;
  std::map<PropertyType, std::vector<Property>> partitions;
  std::vector<std::string> row;
  while (true) {
    const std::size_t row_line = line + 1;
    if (!read_record(in, row, line)) break;
    if (row.size() == 1 && row[0].empty()) continue;  // blank line
    auto cell = [&](std::size_t i) -> const std::string& {
      static const std::string kEmpty;
      return i < row.size() ? row[i] : kEmpty;
    };
    auto reject = [&](std::string reason) {
      result.rejects.push_back({row_line, cell(id_col), std::move(reason)});
    };
    if (row.size() != header.size()) {
      reject("expected " + std::to_string(header.size()) + " cells, found " + std::to_string(row.size()));
      continue;
    }
    Property p;
    p.id = cell(id_col);
    if (p.id.empty()) {
      reject("empty id");
      continue;
    }
    auto type = parse_property_type(cell(type_col));
    if (!type) {
      reject("unknown property type '" + cell(type_col) + "'");
      continue;
    }
    p.property_type = *type;
    if (address_col) p.address = cell(*address_col);
    if (date_col && !cell(*date_col).empty()) {
      auto d = parse_date(cell(*date_col));
      if (!d) {
        reject("unparsable transaction_date '" + cell(*date_col) + "'");
        continue;
      }
      p.transaction_date = *d;
    }
    if (cell(price_col).empty()) {
      reject("missing unit_price");
      continue;
    }
    auto price = parse_number(cell(price_col));
    if (!price) {
      reject("unparsable unit_price '" + cell(price_col) + "'");
      continue;
    }
    p.unit_price = *price;

    bool ok = true;
    for (std::size_t f = 0; f < schema.size() && ok; ++f) {
      const auto& decl = schema[f];
      if (!feature_col[f]) {
        p.features.emplace(decl.name, Missing{});
        continue;
      }
      auto v = parse_cell(decl, cell(*feature_col[f]));
      if (!v) {
        reject("unparsable " + std::string(to_string(decl.kind)) + " cell '" + cell(*feature_col[f]) + "' for " + decl.name);
        ok = false;
        break;
      }
      p.features.emplace(decl.name, std::move(*v));
    }
    if (!ok) continue;

    auto lat = scalar_of(p.feature(features::kLatitude));
    auto lon = scalar_of(p.feature(features::kLongitude));
    if (lat && lon) p.location = GeoPoint{*lat, *lon};

    if (auto v = validate_property(schema, p); !v.ok()) {
      reject(v.summary());
      continue;
    }
    partitions[p.property_type].push_back(std::move(p));
  }
  for (PropertyType t : kPropertyTypes) {
    result.datasets.emplace(t, make_dataset(schema, t, std::move(partitions[t])));
  }
  return result;
}

LoadResult load_csv(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  return parse_csv(in, schema);
}

void write_csv(std::ostream& out, const FeatureSchema& schema, const std::vector<Property>& records) {
  out << "id,type,address,transaction_date,unit_price";
  for (const auto& decl : schema.features()) out << ',' << quote(decl.name);
  out << '\n';
  for (const auto& p : records) {
    out << quote(p.id) << ',' << to_string(p.property_type) << ',' << quote(p.address) << ','
        << (p.transaction_date ? format_date(*p.transaction_date) : std::string()) << ','
        << (p.unit_price ? format_number(*p.unit_price) : std::string());
    for (const auto& decl : schema.features()) out << ',' << format_cell(p.feature(decl.name));
    out << '\n';
  }
}

void save_csv(const std::filesystem::path& path, const FeatureSchema& schema, const std::vector<Property>& records) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  write_csv(out, schema, records);
  if (!out) throw IoError("write failed for " + path.string());
}

Json encode(const NormalizationStats& stats) {
  Json features = Json::array();
  for (const auto& f : stats.features) {
    Json j{{"name", f.name}, {"kind", std::string(to_string(f.kind))}, {"count", f.count}};
    if (f.kind != FeatureKind::Categorical) {
      j["min"] = f.min;
      j["max"] = f.max;
      j["mean"] = f.mean;
      j["stddev"] = f.stddev;
    } else {
      j["frequencies"] = f.frequencies;
    }
    if (f.latest) j["latest"] = encode(FeatureValue{*f.latest});
    features.push_back(std::move(j));
  }
  return Json{{"format", kStatsFormat},
              {"version", kStatsVersion},
              {"schema_hash", stats.schema_hash},
              {"features", std::move(features)}};
}

NormalizationStats decode_stats(const Json& j) {
  try {
    if (j.at("format") != kStatsFormat) throw InvalidArgument("stats: unexpected format tag");
    if (j.at("version").get<int>() != kStatsVersion) throw InvalidArgument("stats: unsupported version");
    NormalizationStats stats;
    stats.schema_hash = j.at("schema_hash").get<std::string>();
    for (const auto& f : j.at("features")) {
      FeatureStats s;
      s.name = f.at("name").get<std::string>();
      auto kind = parse_feature_kind(f.at("kind").get<std::string>());
      if (!kind) throw InvalidArgument("stats: bad feature kind");
      s.kind = *kind;
      s.count = f.at("count").get<std::size_t>();
      if (s.kind != FeatureKind::Categorical) {
        s.min = f.at("min").get<double>();
        s.max = f.at("max").get<double>();
        s.mean = f.at("mean").get<double>();
        s.stddev = f.at("stddev").get<double>();
      } else {
        s.frequencies = f.at("frequencies").get<std::map<std::string, std::size_t>>();
      }
      if (auto it = f.find("latest"); it != f.end()) {
        s.latest = std::get<TemporalValue>(decode_feature_value(*it));
      }
      stats.features.push_back(std::move(s));
    }
    return stats;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("stats: ") + e.what());
  }
}

void save_stats(const std::filesystem::path& path, const NormalizationStats& stats) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << encode(stats).dump(1) << '\n';
}

NormalizationStats load_stats(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("stats: " + path.string() + ": " + e.what());
  }
  NormalizationStats stats = decode_stats(j);
  if (stats.schema_hash != schema.hash()) {
    throw SchemaMismatch("stats " + path.string() + " built for schema " + stats.schema_hash + ", serving schema is " +
                         schema.hash());
  }
  return stats;
}

std::filesystem::path DataLayout::dataset_path(PropertyType t) const {
  return root / "datasets" / (std::string(to_string(t)) + ".csv");
}
std::filesystem::path DataLayout::stats_path(PropertyType t) const {
  return root / "stats" / (std::string(to_string(t)) + ".stats");
}
std::filesystem::path DataLayout::model_path(PropertyType t) const {
  return root / "models" / (std::string(to_string(t)) + ".model");
}
std::filesystem::path DataLayout::schema_path() const { return root / "schema.json"; }

void DataLayout::create_directories() const {
  for (const char* sub : {"datasets", "stats", "models"}) std::filesystem::create_directories(root / sub);
}

Dataset load_dataset(const DataLayout& layout, const FeatureSchema& schema, PropertyType type) {
  const auto csv = layout.dataset_path(type);
  if (!std::filesystem::exists(csv)) throw IoError("dataset not found: " + csv.string());
  LoadResult loaded = load_csv(csv, schema);
  Dataset d = std::move(loaded.datasets.at(type));
  const auto stats_file = layout.stats_path(type);
  if (std::filesystem::exists(stats_file)) {
    d.stats = load_stats(stats_file, schema);
  } else {
    std::filesystem::create_directories(stats_file.parent_path());
    save_stats(stats_file, d.stats);
  }
  return d;
}

void save_dataset(const DataLayout& layout, const Dataset& dataset) {
  layout.create_directories();
  save_csv(layout.dataset_path(dataset.property_type), dataset.schema, dataset.records);
  save_stats(layout.stats_path(dataset.property_type), dataset.stats);
}

}  // namespace proval
