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

// Synthetic transaction corpus over the default schema.
//
// Locations cluster around a fixed set of Taiwanese city centers. Each feature
// is a mix of a smooth spatial field (urbanity plus a short-wavelength
// texture) and independent noise; `spatial_correlation` is the weight of the
// spatial part, so at 0 no feature, and no part of the price, depends on
// location. Log unit price is a fixed function of the features (negative
// house-age coefficient) plus a location effect scaled by the same weight and
// Gaussian noise.

#pragma once

#include <cstdint>
#include <map>

#include "proval/ingest.hpp"

namespace proval {

inline constexpr std::size_t kDefaultSynthSize = 5000;

// Deterministic for a fixed (seed, size, spatial_correlation, type).
// Throws InvalidArgument if size == 0 or spatial_correlation is outside [0, 1].
Dataset synth_generate(std::uint64_t seed, std::size_t size, double spatial_correlation,
                       PropertyType type = PropertyType::Apartment);

// One dataset per property type, each of `size_per_type` records.
std::map<PropertyType, Dataset> synth_corpus(std::uint64_t seed, std::size_t size_per_type,
                                             double spatial_correlation);

// Bounding box used for synthetic locations (and the stub geocoder default).
struct BoundingBox {
  double min_latitude = 21.9;
  double max_latitude = 25.3;
  double min_longitude = 120.0;
  double max_longitude = 122.0;
  bool contains(double lat, double lon) const {
    return lat >= min_latitude && lat <= max_latitude && lon >= min_longitude && lon <= max_longitude;
  }
};

}  // namespace proval
