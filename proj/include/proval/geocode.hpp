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

// Address -> coordinates. The stub is deterministic and offline.

#pragma once

#include <memory>
#include <optional>
#include <string>

#include "proval/domain.hpp"
#include "proval/synth.hpp"

namespace proval {

class Geocoder {
 public:
  virtual ~Geocoder() = default;
  // nullopt when the address cannot be resolved. May throw on transport errors.
  virtual std::optional<GeoPoint> resolve(const std::string& address) = 0;
  virtual std::string name() const = 0;
};

// Hashes the address into the bounding box; empty addresses are unresolved.
class StubGeocoder : public Geocoder {
 public:
  explicit StubGeocoder(BoundingBox box = {}) : box_(box) {}
  std::optional<GeoPoint> resolve(const std::string& address) override;
  std::string name() const override { return "stub"; }

 private:
  BoundingBox box_;
};

struct GeocoderConfig {
  std::string endpoint;                      // empty selects the stub
  std::string key_env = "PROVAL_GEOCODER_KEY";  // API key is read from this variable
  double timeout_seconds = 5.0;
};

/// GET {endpoint}?address=...&key=... expecting {"latitude": x, "longitude": y};
/// a 404 or a null coordinate means unresolved.
class HttpGeocoder : public Geocoder {
 public:
  explicit HttpGeocoder(GeocoderConfig config);
  std::optional<GeoPoint> resolve(const std::string& address) override;
  std::string name() const override { return "http"; }

 private:
  GeocoderConfig config_;
  std::string origin_;
  std::string path_;
};

std::shared_ptr<Geocoder> make_geocoder(const GeocoderConfig& config);

}  // namespace proval
