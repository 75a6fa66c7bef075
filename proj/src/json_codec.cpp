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

#include "proval/json_codec.hpp"

#include "proval/errors.hpp"

namespace proval {

namespace {

[[noreturn]] void fail(const std::string& what) { throw InvalidArgument("json: " + what); }

std::optional<double> opt_number(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return std::nullopt;
  if (!it->is_number()) fail(std::string("'") + key + "' must be a number");
  return it->get<double>();
}

std::string string_or_empty(const Json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return {};
  if (!it->is_string()) fail(std::string("'") + key + "' must be a string");
  return it->get<std::string>();
}

}  // namespace

Json encode(const FeatureValue& v) {
  return std::visit(
      [](const auto& x) -> Json {
        using T = std::decay_t<decltype(x)>;
        if constexpr (std::is_same_v<T, Missing>) {
          return nullptr;
        } else if constexpr (std::is_same_v<T, TemporalValue>) {
          return Json{{"date", format_date(x.date)}, {"value", x.value}};
        } else {
          return x;
        }
      },
      v);
}

FeatureValue decode_feature_value(const Json& j) {
  if (j.is_null()) return Missing{};
  if (j.is_number()) return j.get<double>();
  if (j.is_string()) return j.get<std::string>();
  if (j.is_object()) {
    auto date = j.find("date");
    auto value = j.find("value");
    if (date == j.end() || value == j.end() || !date->is_string() || !value->is_number()) {
      fail("temporal value needs string 'date' and numeric 'value'");
    }
    auto d = parse_date(date->get<std::string>());
    if (!d) fail("bad date '" + date->get<std::string>() + "'");
    return TemporalValue{*d, value->get<double>()};
  }
  fail("unsupported feature value " + j.dump());
}

Json encode(const Property& p) {
  Json features = Json::object();
  for (const auto& [name, value] : p.features) features[name] = encode(value);
  Json j;
  j["id"] = p.id;
  j["property_type"] = std::string(to_string(p.property_type));
  j["address"] = p.address;
  j["location"] = p.location ? Json{{"latitude", p.location->latitude}, {"longitude", p.location->longitude}}
                             : Json(nullptr);
  j["transaction_date"] = p.transaction_date ? Json(format_date(*p.transaction_date)) : Json(nullptr);
  j["unit_price"] = p.unit_price ? Json(*p.unit_price) : Json(nullptr);
  j["features"] = std::move(features);
  return j;
}

Property decode_property(const Json& j) {
  if (!j.is_object()) fail("property must be an object");
  Property p;
  p.id = string_or_empty(j, "id");
  const std::string type = string_or_empty(j, "property_type");
  auto t = parse_property_type(type);
  if (!t) fail("unknown property_type '" + type + "'");
  p.property_type = *t;
  p.address = string_or_empty(j, "address");
  if (auto it = j.find("location"); it != j.end() && !it->is_null()) {
    auto lat = opt_number(*it, "latitude");
    auto lon = opt_number(*it, "longitude");
    if (!lat || !lon) fail("location needs latitude and longitude");
    p.location = GeoPoint{*lat, *lon};
  }
  if (auto ds = string_or_empty(j, "transaction_date"); !ds.empty()) {
    auto d = parse_date(ds);
    if (!d) fail("bad transaction_date '" + ds + "'");
    p.transaction_date = *d;
  }
  p.unit_price = opt_number(j, "unit_price");
  if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) fail("'features' must be an object");
    for (const auto& [name, value] : it->items()) p.features.emplace(name, decode_feature_value(value));
  }
  return p;
}

Json encode(const PropertyConfiguration& c) {
  Json constraints = Json::object();
  for (const auto& [name, constraint] : c.constraints) {
    if (const auto* r = std::get_if<NumericRange>(&constraint)) {
      constraints[name] = Json{{"lower", r->lower ? Json(*r->lower) : Json(nullptr)},
                               {"upper", r->upper ? Json(*r->upper) : Json(nullptr)}};
    } else {
      constraints[name] = Json{{"allowed", std::get<CategorySet>(constraint).allowed}};
    }
  }
  return Json{{"k", c.k}, {"constraints", std::move(constraints)}};
}

PropertyConfiguration decode_configuration(const Json& j) {
  PropertyConfiguration c;
  if (j.is_null()) return c;
  if (!j.is_object()) fail("configuration must be an object");
  if (auto it = j.find("k"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) fail("'k' must be an integer");
    c.k = it->get<int>();
  }
  if (auto it = j.find("constraints"); it != j.end() && !it->is_null()) {
    if (!it->is_object()) fail("'constraints' must be an object");
    for (const auto& [name, body] : it->items()) {
      if (!body.is_object()) fail("constraint '" + name + "' must be an object");
      if (auto allowed = body.find("allowed"); allowed != body.end()) {
        if (!allowed->is_array()) fail("'allowed' must be an array of labels");
        CategorySet set;
        for (const auto& label : *allowed) {
          if (!label.is_string()) fail("'allowed' must be an array of labels");
          set.allowed.insert(label.get<std::string>());
        }
        c.constraints.emplace(name, std::move(set));
      } else {
        c.constraints.emplace(name, NumericRange{opt_number(body, "lower"), opt_number(body, "upper")});
      }
    }
  }
  return c;
}

Json encode(const FeatureSchema& s) {
  Json features = Json::array();
  for (const auto& d : s.features()) {
    features.push_back({{"name", d.name},
                        {"kind", std::string(to_string(d.kind))},
                        {"units", d.units},
                        {"required_by_avm", d.required_by_avm}});
  }
  return Json{{"hash", s.hash()}, {"features", std::move(features)}};
}

FeatureSchema decode_schema(const Json& j) {
  auto it = j.find("features");
  if (it == j.end() || !it->is_array()) fail("schema needs a 'features' array");
  std::vector<FeatureDecl> decls;
  for (const auto& f : *it) {
    FeatureDecl d;
    d.name = string_or_empty(f, "name");
    auto kind = parse_feature_kind(string_or_empty(f, "kind"));
    if (!kind) fail("bad feature kind for '" + d.name + "'");
    d.kind = *kind;
    d.units = string_or_empty(f, "units");
    d.required_by_avm = f.value("required_by_avm", true);
    decls.push_back(std::move(d));
  }
  return FeatureSchema(std::move(decls));
}

std::string canonical_dump(const Json& j) { return j.dump(); }

}  // namespace proval
