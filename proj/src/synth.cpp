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

#include "proval/synth.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

#include "proval/errors.hpp"

namespace proval {

namespace {

struct City {
  const char* name;
  double lat, lon;
  double radius;  // degrees
  double weight;
};

constexpr std::array<City, 8> kCities = {{
    {"Taipei", 25.04, 121.55, 0.10, 0.26},
    {"New Taipei", 25.01, 121.46, 0.12, 0.16},
    {"Taichung", 24.15, 120.67, 0.10, 0.16},
    {"Kaohsiung", 22.63, 120.31, 0.10, 0.14},
    {"Tainan", 22.99, 120.21, 0.09, 0.10},
    {"Hsinchu", 24.80, 120.97, 0.07, 0.08},
    {"Nantou", 23.91, 120.68, 0.05, 0.05},
    {"Hualien", 23.98, 121.60, 0.05, 0.05},
}};

constexpr double kRuralShare = 0.12;

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

// Urbanity in [0, 1]: strongest city kernel at the point.
double urbanity(double lat, double lon) {
  double u = 0.0;
  for (const auto& c : kCities) {
    const double d2 = (lat - c.lat) * (lat - c.lat) + (lon - c.lon) * (lon - c.lon);
    u = std::max(u, std::exp(-d2 / (2.0 * c.radius * c.radius)));
  }
  return u;
}

// Roughly unit-variance neighborhood texture with ~0.1 degree wavelength.
double texture(double lat, double lon, int channel) {
  constexpr double two_pi = 2.0 * std::numbers::pi;
  const double a = 0.55 + 0.065 * channel;
  const double b = 0.65 - 0.055 * channel;
  const double phase = 0.7 * channel;
  return 2.0 * std::sin(two_pi * lat / a + phase) * std::cos(two_pi * lon / b + 1.3 * phase);
}

// Spatial field for one feature: standardized mix of urbanity and texture.
double field(double lat, double lon, double urban_weight, double texture_weight, int channel) {
  const double u = (urbanity(lat, lon) - 0.45) / 0.32;
  const double t = texture(lat, lon, channel);
  return (urban_weight * u + texture_weight * t) / std::hypot(urban_weight, texture_weight);
}

struct TypeProfile {
  char prefix;
  double log_base_price;
  double base_area;
  double base_floors;
  double base_parking;
};

TypeProfile profile(PropertyType t) {
  switch (t) {
    case PropertyType::Building: return {'B', std::log(52.0), 85.0, 14.0, 0.9};
    case PropertyType::Apartment: return {'A', std::log(38.0), 95.0, 5.0, 0.4};
    case PropertyType::House: return {'H', std::log(28.0), 170.0, 3.0, 1.2};
  }
  return {'X', 3.5, 100.0, 5.0, 0.5};
}

// Decimal rounding; dividing by the integer scale keeps CSV values short.
double round_to(double v, double step) {
  const double scale = std::round(1.0 / step);
  return std::round(v * scale) / scale;
}

const char* land_use_label(double z) {
  if (z > 1.0) return "commercial";
  if (z > 0.15) return "residential_a";
  if (z > -0.6) return "residential_b";
  if (z > -1.2) return "industrial";
  return "agricultural";
}

double land_use_effect(const std::string& label) {
  if (label == "commercial") return 0.12;
  if (label == "residential_a") return 0.05;
  if (label == "residential_b") return 0.0;
  if (label == "industrial") return -0.08;
  return -0.18;
}

}  // namespace

Dataset synth_generate(std::uint64_t seed, std::size_t size, double spatial_correlation, PropertyType type) {
  if (size == 0) throw InvalidArgument("synth: size must be at least 1");
  if (!(spatial_correlation >= 0.0 && spatial_correlation <= 1.0)) {
    throw InvalidArgument("synth: spatial_correlation must lie in [0, 1]");
  }
  const FeatureSchema schema = default_schema();
  const TypeProfile prof = profile(type);
  const double s = spatial_correlation;
  const double iid = std::sqrt(1.0 - s * s);
  const BoundingBox box;

  std::mt19937_64 rng(splitmix64(seed ^ (static_cast<std::uint64_t>(type) + 1) * 0x2545F4914F6CDD1DULL));
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  std::vector<double> city_weights;
  for (const auto& c : kCities) city_weights.push_back(c.weight);
  std::discrete_distribution<int> pick_city(city_weights.begin(), city_weights.end());

  const auto first_day = std::chrono::sys_days{std::chrono::year{2019} / 1 / 1};
  const auto last_day = std::chrono::sys_days{std::chrono::year{2024} / 12 / 31};
  const int span_days = static_cast<int>((last_day - first_day).count());
  std::uniform_int_distribution<int> pick_day(0, span_days);

  std::vector<Property> records;
  records.reserve(size);
  for (std::size_t i = 0; i < size; ++i) {
    Property p;
    char id[32];
    std::snprintf(id, sizeof(id), "%c%07zu", prof.prefix, i + 1);
    p.id = id;
    p.property_type = type;

    double lat, lon;
    const City* nearest = nullptr;
    if (unit(rng) < kRuralShare) {
      lat = box.min_latitude + 0.3 + unit(rng) * (box.max_latitude - box.min_latitude - 0.6);
      lon = 120.2 + unit(rng) * 1.3;
    } else {
      nearest = &kCities[static_cast<std::size_t>(pick_city(rng))];
      lat = nearest->lat + normal(rng) * nearest->radius;
      lon = nearest->lon + normal(rng) * nearest->radius;
    }
    lat = std::clamp(round_to(lat, 1e-5), box.min_latitude, box.max_latitude);
    lon = std::clamp(round_to(lon, 1e-5), box.min_longitude, box.max_longitude);
    if (!nearest) {
      double best = 1e9;
      for (const auto& c : kCities) {
        const double d = std::hypot(lat - c.lat, lon - c.lon);
        if (d < best) {
          best = d;
          nearest = &c;
        }
      }
    }

    auto latent = [&](double urban_w, double texture_w, int channel) {
      return s * field(lat, lon, urban_w, texture_w, channel) + iid * normal(rng);
    };
    const double z_age = latent(-0.6, 1.0, 0);  // city cores were rebuilt more recently
    const double z_area = latent(-0.8, 1.0, 1);
    const double z_floors = latent(1.0, 0.6, 2);
    const double z_parking = latent(-0.7, 1.0, 3);
    const double z_station = latent(-1.0, 0.6, 4);
    const double z_zone = latent(1.0, 0.8, 5);
    const double z_land = latent(1.0, 0.7, 6);
    const double location_effect = field(lat, lon, 1.0, 0.8, 7);

    const double age = round_to(std::clamp(22.0 + 11.0 * z_age, 0.0, 60.0), 0.1);
    const double area = round_to(prof.base_area * std::exp(0.3 * z_area), 0.1);
    const double floors = std::max(1.0, std::round(prof.base_floors * std::exp(0.45 * z_floors)));
    const double parking = std::max(0.0, std::round(prof.base_parking + 0.8 * z_parking));
    const double station = round_to(std::exp(0.3 + 0.7 * z_station), 0.01);
    const std::string zone = land_use_label(z_zone);

    // Land values are announced every January 1st; a record carries the
    // announcement in force on its sale date.
    const auto sale_date = first_day + std::chrono::days{pick_day(rng)};
    const std::chrono::year sale_year = std::chrono::year_month_day{sale_date}.year();
    const auto land_date = std::chrono::sys_days{sale_year / 1 / 1};
    const double land_years = static_cast<double>(static_cast<int>(sale_year) - 2019);
    const double land_value = round_to(std::exp(3.2 + 0.5 * z_land) * (1.0 + 0.03 * land_years), 0.1);

    const double log_price = prof.log_base_price - 0.010 * age + 0.35 * (std::log(land_value) - 3.2) +
                             0.06 * std::log(floors) - 0.08 * std::log(station) + land_use_effect(zone) +
                             0.03 * parking - 0.10 * std::log(area / prof.base_area) + s * 0.12 * location_effect +
                             0.05 * normal(rng);

    p.set(features::kLatitude, lat);
    p.set(features::kLongitude, lon);
    p.set(features::kHouseAge, age);
    p.set(features::kBuildingArea, area);
    p.set(features::kTotalFloors, floors);
    p.set(features::kParkingSpaces, parking);
    p.set(features::kDistanceToStation, station);
    p.set(features::kLandUse, zone);
    p.set(features::kLandValue, TemporalValue{Date{land_date}, land_value});
    p.location = GeoPoint{lat, lon};
    p.transaction_date = Date{sale_date};
    p.unit_price = round_to(std::exp(log_price), 0.01);
    char address[96];
    std::snprintf(address, sizeof(address), "No. %zu, Lane %d, %s", 1 + i % 300,
                  1 + static_cast<int>(unit(rng) * 400), nearest->name);
    p.address = address;
    records.push_back(std::move(p));
  }
  return make_dataset(schema, type, std::move(records));
}

std::map<PropertyType, Dataset> synth_corpus(std::uint64_t seed, std::size_t size_per_type,
                                             double spatial_correlation) {
  std::map<PropertyType, Dataset> out;
  for (PropertyType t : kPropertyTypes) out.emplace(t, synth_generate(seed, size_per_type, spatial_correlation, t));
  return out;
}

}  // namespace proval
