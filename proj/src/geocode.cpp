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

#include "proval/geocode.hpp"

#include <cstdint>
#include <cstdlib>

#include "httplib.h"
#include "json.hpp"
#include "proval/errors.hpp"

namespace proval {

namespace {

std::uint64_t fnv1a(std::string_view s, std::uint64_t h = 0xcbf29ce484222325ULL) {
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

std::optional<GeoPoint> StubGeocoder::resolve(const std::string& address) {
  if (address.find_first_not_of(" \t\r\n") == std::string::npos) return std::nullopt;
  const std::uint64_t a = fnv1a(address);
  const std::uint64_t b = fnv1a(address, a);
  const double u = static_cast<double>(a >> 11) * 0x1.0p-53;
  const double v = static_cast<double>(b >> 11) * 0x1.0p-53;
  return GeoPoint{box_.min_latitude + u * (box_.max_latitude - box_.min_latitude),
                  box_.min_longitude + v * (box_.max_longitude - box_.min_longitude)};
}

HttpGeocoder::HttpGeocoder(GeocoderConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("geocoder: endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::optional<GeoPoint> HttpGeocoder::resolve(const std::string& address) {
  httplib::Client client(origin_);
  const auto ms = static_cast<long>(config_.timeout_seconds * 1000);
  client.set_connection_timeout(ms / 1000, (ms % 1000) * 1000);
  client.set_read_timeout(ms / 1000, (ms % 1000) * 1000);

  httplib::Params params{{"address", address}};
  if (const char* key = std::getenv(config_.key_env.c_str()); key && *key) params.emplace("key", key);
  auto res = client.Get(path_, params, httplib::Headers{});
  if (!res) throw Error("geocoder: request failed: " + httplib::to_string(res.error()));
  if (res->status == 404) return std::nullopt;
  if (res->status != 200) throw Error("geocoder: HTTP " + std::to_string(res->status));
  try {
    auto j = nlohmann::json::parse(res->body);
    if (j.at("latitude").is_null() || j.at("longitude").is_null()) return std::nullopt;
    return GeoPoint{j.at("latitude").get<double>(), j.at("longitude").get<double>()};
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("geocoder: malformed response: ") + e.what());
  }
}

std::shared_ptr<Geocoder> make_geocoder(const GeocoderConfig& config) {
  if (config.endpoint.empty()) return std::make_shared<StubGeocoder>();
  return std::make_shared<HttpGeocoder>(config);
}

}  // namespace proval
