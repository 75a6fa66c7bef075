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

#include "proval/domain.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <cstdio>
#include <sstream>
#include <unordered_set>

#include "proval/errors.hpp"

namespace proval {

namespace {

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

std::uint64_t fnv1a(std::string_view bytes, std::uint64_t h = 1469598103934665603ULL) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ULL;
  }
  return h;
}

}  // namespace

std::string_view to_string(PropertyType type) {
  switch (type) {
    case PropertyType::Building: return "building";
    case PropertyType::Apartment: return "apartment";
    case PropertyType::House: return "house";
  }
  return "unknown";
}

std::optional<PropertyType> parse_property_type(std::string_view text) {
  const std::string t = lower(text);
  for (PropertyType type : kPropertyTypes) {
    if (t == to_string(type)) return type;
  }
  return std::nullopt;
}

std::string_view to_string(FeatureKind kind) {
  switch (kind) {
    case FeatureKind::Numeric: return "numeric";
    case FeatureKind::Categorical: return "categorical";
    case FeatureKind::Temporal: return "temporal";
  }
  return "unknown";
}

std::optional<FeatureKind> parse_feature_kind(std::string_view text) {
  const std::string t = lower(text);
  for (FeatureKind k : {FeatureKind::Numeric, FeatureKind::Categorical, FeatureKind::Temporal}) {
    if (t == to_string(k)) return k;
  }
  return std::nullopt;
}

std::optional<Date> parse_date(std::string_view text) {
  if (text.size() != 10 || text[4] != '-' || text[7] != '-') return std::nullopt;
  auto field = [&](std::size_t pos, std::size_t len) -> std::optional<int> {
    int v = 0;
    const char* first = text.data() + pos;
    const char* last = first + len;
    auto [ptr, ec] = std::from_chars(first, last, v);
    if (ec != std::errc{} || ptr != last) return std::nullopt;
    return v;
  };
  auto y = field(0, 4), m = field(5, 2), d = field(8, 2);
  if (!y || !m || !d) return std::nullopt;
  Date date{std::chrono::year{*y}, std::chrono::month{static_cast<unsigned>(*m)},
            std::chrono::day{static_cast<unsigned>(*d)}};
  if (!date.ok()) return std::nullopt;
  return date;
}

std::string format_date(const Date& date) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "%04d-%02u-%02u", static_cast<int>(date.year()),
                static_cast<unsigned>(date.month()), static_cast<unsigned>(date.day()));
  return buf;
}

std::optional<FeatureKind> kind_of(const FeatureValue& v) {
  switch (v.index()) {
    case 1: return FeatureKind::Numeric;
    case 2: return FeatureKind::Categorical;
    case 3: return FeatureKind::Temporal;
    default: return std::nullopt;
  }
}

std::optional<double> scalar_of(const FeatureValue& v) {
  if (const double* d = std::get_if<double>(&v)) return *d;
  if (const TemporalValue* t = std::get_if<TemporalValue>(&v)) return t->value;
  return std::nullopt;
}

std::string describe(const FeatureValue& v) {
  std::ostringstream os;
  if (is_missing(v)) {
    os << "missing";
  } else if (const double* d = std::get_if<double>(&v)) {
    os << *d;
  } else if (const std::string* s = std::get_if<std::string>(&v)) {
    os << *s;
  } else {
    const auto& t = std::get<TemporalValue>(v);
    os << t.value << " (" << format_date(t.date) << ")";
  }
  return os.str();
}

FeatureSchema::FeatureSchema(std::vector<FeatureDecl> decls) : decls_(std::move(decls)) {
  std::unordered_set<std::string> seen;
  for (std::size_t i = 0; i < decls_.size(); ++i) {
    const auto& d = decls_[i];
    if (d.name.empty()) throw InvalidArgument("feature schema: empty feature name");
    if (!seen.insert(d.name).second) throw InvalidArgument("feature schema: duplicate feature '" + d.name + "'");
    if (d.kind == FeatureKind::Numeric) numeric_.push_back(i);
  }
}

std::optional<std::size_t> FeatureSchema::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < decls_.size(); ++i) {
    if (decls_[i].name == name) return i;
  }
  return std::nullopt;
}

const FeatureDecl* FeatureSchema::find(std::string_view name) const {
  auto i = index_of(name);
  return i ? &decls_[*i] : nullptr;
}

std::string FeatureSchema::hash() const {
  std::uint64_t h = fnv1a("proval-schema-v1");
  for (const auto& d : decls_) {
    h = fnv1a(d.name, h);
    h = fnv1a("\x1f", h);
    h = fnv1a(to_string(d.kind), h);
    h = fnv1a("\x1f", h);
    h = fnv1a(d.units, h);
    h = fnv1a(d.required_by_avm ? "\x1fR\x1e" : "\x1fO\x1e", h);
  }
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

FeatureSchema default_schema() {
  using K = FeatureKind;
  return FeatureSchema({
      {std::string(features::kLatitude), K::Numeric, "degrees", true},
      {std::string(features::kLongitude), K::Numeric, "degrees", true},
      {std::string(features::kHouseAge), K::Numeric, "years", true},
      {std::string(features::kBuildingArea), K::Numeric, "square meters", true},
      {std::string(features::kTotalFloors), K::Numeric, "floors", true},
      {std::string(features::kParkingSpaces), K::Numeric, "spaces", true},
      {std::string(features::kDistanceToStation), K::Numeric, "kilometers", true},
      {std::string(features::kLandUse), K::Categorical, "land use designation", true},
      {std::string(features::kLandValue), K::Temporal, "thousand NTD per square meter", true},
  });
}

const FeatureValue& Property::feature(std::string_view name) const {
  static const FeatureValue kMissing{Missing{}};
  auto it = features.find(name);
  return it == features.end() ? kMissing : it->second;
}

void Property::set(std::string_view name, FeatureValue value) {
  auto it = features.find(name);
  if (it == features.end()) {
    features.emplace(std::string(name), std::move(value));
  } else {
    it->second = std::move(value);
  }
}

Property with_all_features(const FeatureSchema& schema, Property p) {
  for (const auto& d : schema.features()) {
    if (p.features.find(d.name) == p.features.end()) p.features.emplace(d.name, Missing{});
  }
  return p;
}

std::string ValidationResult::summary() const {
  std::string out;
  for (const auto& v : violations) {
    if (!out.empty()) out += "; ";
    out += v.field + ": " + v.message;
  }
  return out;
}

ValidationResult validate_property(const FeatureSchema& schema, const Property& p) {
  ValidationResult r;
  for (const auto& [name, value] : p.features) {
    const FeatureDecl* decl = schema.find(name);
    if (!decl) {
      r.violations.push_back({name, "feature not declared in schema"});
      continue;
    }
    auto kind = kind_of(value);
    if (kind && *kind != decl->kind) {
      r.violations.push_back({name, "expected " + std::string(to_string(decl->kind)) + " value, got " +
                                        std::string(to_string(*kind))});
    }
    if (auto s = scalar_of(value); s && !std::isfinite(*s)) {
      r.violations.push_back({name, "value is not finite"});
    }
  }
  if (p.unit_price && !(*p.unit_price > 0.0 && std::isfinite(*p.unit_price))) {
    r.violations.push_back({"unit_price", "must be strictly positive"});
  }
  if (p.location) {
    if (!(p.location->latitude >= -90.0 && p.location->latitude <= 90.0)) {
      r.violations.push_back({"location.latitude", "must lie in [-90, 90]"});
    }
    if (!(p.location->longitude >= -180.0 && p.location->longitude <= 180.0)) {
      r.violations.push_back({"location.longitude", "must lie in [-180, 180]"});
    }
  }
  return r;
}

ValidationResult validate_configuration(const FeatureSchema& schema, const PropertyConfiguration& config) {
  ValidationResult r;
  if (config.k < 1) r.violations.push_back({"k", "must be at least 1"});
  for (const auto& [name, constraint] : config.constraints) {
    const FeatureDecl* decl = schema.find(name);
    if (!decl) {
      r.violations.push_back({name, "constraint on undeclared feature"});
      continue;
    }
    if (const auto* range = std::get_if<NumericRange>(&constraint)) {
      if (decl->kind == FeatureKind::Categorical) {
        r.violations.push_back({name, "numeric range on categorical feature"});
      }
      if (range->lower && range->upper && *range->lower > *range->upper) {
        r.violations.push_back({name, "lower bound exceeds upper bound"});
      }
    } else if (decl->kind != FeatureKind::Categorical) {
      r.violations.push_back({name, "label set on non-categorical feature"});
    }
  }
  return r;
}

}  // namespace proval
