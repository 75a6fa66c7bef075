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

// Corpus loading, per-feature statistics and on-disk layout.
//
// CSV cell conventions: empty cell = Missing, dates are YYYY-MM-DD, numbers
// use a decimal point, temporal cells are written `value@YYYY-MM-DD`.
// Fixed columns: id, type, address, transaction_date, unit_price; then one
// column per schema feature.

#pragma once

#include <cstddef>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "proval/domain.hpp"
#include "proval/json_codec.hpp"

namespace proval {

struct FeatureStats {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::size_t count = 0;  // non-Missing observations
  // Numeric features, and the value part of temporal features.
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  double stddev = 0.0;
  // Categorical features.
  std::map<std::string, std::size_t> frequencies;
  // Temporal features: latest date; the value is the mean of all observations
  // on that date.
  std::optional<TemporalValue> latest;

  bool unobserved() const { return count == 0; }
  double range() const { return max - min; }
  // Most frequent label, ties to the lexicographically smallest.
  std::optional<std::string> mode() const;

  friend bool operator==(const FeatureStats&, const FeatureStats&) = default;
};

struct NormalizationStats {
  std::string schema_hash;
  std::vector<FeatureStats> features;  // schema order

  const FeatureStats* find(std::string_view name) const;
  std::vector<std::string> unobserved() const;

  friend bool operator==(const NormalizationStats&, const NormalizationStats&) = default;
};

struct Dataset {
  FeatureSchema schema;
  PropertyType property_type = PropertyType::Apartment;
  std::vector<Property> records;
  NormalizationStats stats;
};

/// Per-feature statistics over non-Missing values. Values are summed in
/// sorted order, so the result does not depend on record order.
NormalizationStats compute_stats(const FeatureSchema& schema, const std::vector<Property>& records);
inline NormalizationStats compute_stats(const Dataset& d) { return compute_stats(d.schema, d.records); }

// Builds a dataset (computing stats) from records of one property type.
Dataset make_dataset(FeatureSchema schema, PropertyType type, std::vector<Property> records);

struct RejectedRow {
  std::size_t line = 0;  // 1-based, header is line 1
  std::string id;
  std::string reason;
};

struct LoadResult {
  std::map<PropertyType, Dataset> datasets;  // always one entry per type
  std::vector<RejectedRow> rejects;
};

/// Throws IoError when the file cannot be read and InvalidArgument when the
/// header lacks id, type, unit_price or a feature required by the AVM.
/// Row-level problems go to `rejects`.
LoadResult load_csv(const std::filesystem::path& path, const FeatureSchema& schema);
LoadResult parse_csv(std::istream& in, const FeatureSchema& schema);

void save_csv(const std::filesystem::path& path, const FeatureSchema& schema, const std::vector<Property>& records);
void write_csv(std::ostream& out, const FeatureSchema& schema, const std::vector<Property>& records);

// Shortest decimal text that parses back to the same double.
std::string format_number(double v);

Json encode(const NormalizationStats& stats);
NormalizationStats decode_stats(const Json& j);

void save_stats(const std::filesystem::path& path, const NormalizationStats& stats);
/// Throws SchemaMismatch when the stored hash differs from `schema`.
NormalizationStats load_stats(const std::filesystem::path& path, const FeatureSchema& schema);

/// datasets/<type>.csv, stats/<type>.stats, models/<type>.model under root.
struct DataLayout {
  std::filesystem::path root;

  std::filesystem::path dataset_path(PropertyType t) const;
  std::filesystem::path stats_path(PropertyType t) const;
  std::filesystem::path model_path(PropertyType t) const;
  std::filesystem::path schema_path() const;
  void create_directories() const;
};

// Reads datasets/<type>.csv and stats/<type>.stats; stats are recomputed and
// saved when absent. Throws IoError if the dataset file does not exist.
Dataset load_dataset(const DataLayout& layout, const FeatureSchema& schema, PropertyType type);
void save_dataset(const DataLayout& layout, const Dataset& dataset);

}  // namespace proval
