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

// Core vocabulary: property records, feature schema, feature values and the
// user-facing neighbor configuration.

#pragma once

#include <array>
#include <chrono>
#include <cstddef>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace proval {

enum class PropertyType { Building, Apartment, House };

inline constexpr std::array<PropertyType, 3> kPropertyTypes = {
    PropertyType::Building, PropertyType::Apartment, PropertyType::House};

std::string_view to_string(PropertyType type);
// Case-insensitive; accepts "building", "Apartment", ...
std::optional<PropertyType> parse_property_type(std::string_view text);

enum class FeatureKind { Numeric, Categorical, Temporal };

std::string_view to_string(FeatureKind kind);
std::optional<FeatureKind> parse_feature_kind(std::string_view text);

using Date = std::chrono::year_month_day;

// Strict YYYY-MM-DD.
std::optional<Date> parse_date(std::string_view text);
std::string format_date(const Date& date);

struct Missing {
  friend bool operator==(const Missing&, const Missing&) = default;
};

// A time-stamped observation, e.g. an announced land value.
struct TemporalValue {
  Date date;
  double value = 0.0;
  friend bool operator==(const TemporalValue&, const TemporalValue&) = default;
};

// Numeric(double) | Categorical(std::string) | Temporal | Missing.
using FeatureValue = std::variant<Missing, double, std::string, TemporalValue>;

inline bool is_missing(const FeatureValue& v) { return std::holds_alternative<Missing>(v); }
// Kind carried by the value; nullopt for Missing.
std::optional<FeatureKind> kind_of(const FeatureValue& v);
// Numeric value, or the value part of a temporal observation.
std::optional<double> scalar_of(const FeatureValue& v);
std::string describe(const FeatureValue& v);

struct FeatureDecl {
  std::string name;
  FeatureKind kind = FeatureKind::Numeric;
  std::string units;
  bool required_by_avm = true;
  friend bool operator==(const FeatureDecl&, const FeatureDecl&) = default;
};

/// Ordered feature declarations. The position of a numeric feature among the
/// numeric features is the coordinate index used by the distance function, so
/// the order is part of the schema identity (and of its hash).
class FeatureSchema {
 public:
  FeatureSchema() = default;
  /// Throws InvalidArgument on duplicate or empty names.
  explicit FeatureSchema(std::vector<FeatureDecl> decls);

  const std::vector<FeatureDecl>& features() const { return decls_; }
  std::size_t size() const { return decls_.size(); }
  const FeatureDecl& operator[](std::size_t i) const { return decls_[i]; }

  std::optional<std::size_t> index_of(std::string_view name) const;
  const FeatureDecl* find(std::string_view name) const;

  // Schema positions of the numeric features, in schema order.
  const std::vector<std::size_t>& numeric_indices() const { return numeric_; }

  // 16 hex digits of FNV-1a over the canonical declaration list.
  std::string hash() const;

  friend bool operator==(const FeatureSchema& a, const FeatureSchema& b) { return a.decls_ == b.decls_; }

 private:
  std::vector<FeatureDecl> decls_;
  std::vector<std::size_t> numeric_;
};

// Default feature set for Taiwanese transaction records.
FeatureSchema default_schema();

namespace features {
inline constexpr std::string_view kLatitude = "latitude";
inline constexpr std::string_view kLongitude = "longitude";
inline constexpr std::string_view kHouseAge = "house_age";
inline constexpr std::string_view kBuildingArea = "building_area";
inline constexpr std::string_view kTotalFloors = "total_floors";
inline constexpr std::string_view kParkingSpaces = "parking_spaces";
inline constexpr std::string_view kDistanceToStation = "distance_to_station";
inline constexpr std::string_view kLandUse = "land_use";
inline constexpr std::string_view kLandValue = "land_value";
}  // namespace features

struct GeoPoint {
  double latitude = 0.0;
  double longitude = 0.0;
  friend bool operator==(const GeoPoint&, const GeoPoint&) = default;
};

/// One transaction record. Unit price is in thousand NTD per square meter.
struct Property {
  std::string id;
  PropertyType property_type = PropertyType::Apartment;
  std::string address;
  std::optional<GeoPoint> location;
  std::optional<Date> transaction_date;
  std::map<std::string, FeatureValue, std::less<>> features;
  std::optional<double> unit_price;

  // Missing when the feature is absent from the map.
  const FeatureValue& feature(std::string_view name) const;
  void set(std::string_view name, FeatureValue value);

  friend bool operator==(const Property&, const Property&) = default;
};

// Every schema feature present in the map (absent ones become Missing).
Property with_all_features(const FeatureSchema& schema, Property p);

struct NumericRange {
  std::optional<double> lower;
  std::optional<double> upper;
  bool contains(double v) const {
    return (!lower || v >= *lower) && (!upper || v <= *upper);
  }
  friend bool operator==(const NumericRange&, const NumericRange&) = default;
};

struct CategorySet {
  std::set<std::string> allowed;
  friend bool operator==(const CategorySet&, const CategorySet&) = default;
};

using FeatureConstraint = std::variant<NumericRange, CategorySet>;

inline constexpr int kDefaultNeighborCount = 6;

/// Per-feature acceptance ranges/sets plus the neighbor count. A feature with
/// no entry is unconstrained.
struct PropertyConfiguration {
  std::map<std::string, FeatureConstraint, std::less<>> constraints;
  int k = kDefaultNeighborCount;
  friend bool operator==(const PropertyConfiguration&, const PropertyConfiguration&) = default;
};

struct Violation {
  std::string field;
  std::string message;
};

struct ValidationResult {
  std::vector<Violation> violations;
  bool ok() const { return violations.empty(); }
  std::string summary() const;
};

ValidationResult validate_property(const FeatureSchema& schema, const Property& p);
ValidationResult validate_configuration(const FeatureSchema& schema, const PropertyConfiguration& config);

}  // namespace proval
