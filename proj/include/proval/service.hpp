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

// Valuation pipeline over immutable snapshots, and its HTTP front end.
//
//   geocode -> validate -> find_neighbors -> impute_neighbor -> predict -> explain

#pragma once

#include <filesystem>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <string>
#include <vector>

#include "proval/errors.hpp"
#include "proval/explain.hpp"
#include "proval/gbdt.hpp"
#include "proval/geocode.hpp"
#include "proval/imputation.hpp"
#include "proval/ingest.hpp"
#include "proval/json_codec.hpp"
#include "proval/llm_client.hpp"
#include "proval/neighbor_search.hpp"

namespace proval {

// Carries the HTTP status class the error maps to.
class RequestError : public Error {
 public:
  RequestError(int status, const std::string& what) : Error(what), status_(status) {}
  int status() const { return status_; }

 private:
  int status_;
};

struct TypeSnapshot {
  Dataset dataset;
  std::optional<GbdtModel> model;
  std::unique_ptr<NeighborIndex> index;  // points into `dataset`; the snapshot never moves once built
};

/// Everything a request reads. Immutable once built; shared by in-flight
/// requests and replaced wholesale on reload.
struct Snapshot {
  FeatureSchema schema;
  std::map<PropertyType, std::unique_ptr<TypeSnapshot>> types;

  const TypeSnapshot* find(PropertyType type) const;
};

// Types without a dataset file are skipped; a missing model is tolerated
// (valuations for that type answer 503).
std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& data_dir);
std::shared_ptr<const Snapshot> make_snapshot(FeatureSchema schema, std::vector<Dataset> datasets,
                                              std::vector<GbdtModel> models);

struct ValuationRequest {
  PropertyType property_type = PropertyType::Apartment;
  std::string address;
  std::optional<GeoPoint> location;
  std::optional<Date> transaction_date;
  std::map<std::string, FeatureValue, std::less<>> features;
  PropertyConfiguration configuration;
  bool k_given = false;  // configuration.k came from the request
  bool want_explanation = true;
  bool want_llm = false;
};

// Throws RequestError(400) on malformed input or an unknown property type.
ValuationRequest decode_valuation_request(const Json& j);
Json encode(const ValuationRequest& r);

struct ValuationReport {
  PropertyType property_type = PropertyType::Apartment;
  double prediction = 0.0;
  Property target;          // after geocoding, before imputation
  Property imputed_target;  // what the model saw
  std::optional<GeoPoint> coordinates;
  int k = kDefaultNeighborCount;
  NeighborSearchResult search;
  ImputationReport imputation;
  std::optional<ExplanationBundle> explanation;
  std::vector<std::string> notes;
  std::string schema_hash;
};

Json encode(const ValuationReport& r);

struct ValuatorOptions {
  int default_k = kDefaultNeighborCount;
  ExplainOptions explain;
};

/// Stateless request handler over one snapshot.
class Valuator {
 public:
  Valuator(std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<Geocoder> geocoder,
           std::shared_ptr<LlmClient> llm, ValuatorOptions options = {});

  // Throws RequestError: 400 for invalid input, 503 when no model or corpus
  // is loaded for the type.
  ValuationReport value(const ValuationRequest& request) const;

 private:
  std::shared_ptr<const Snapshot> snapshot_;
  std::shared_ptr<Geocoder> geocoder_;
  std::shared_ptr<LlmClient> llm_;
  ValuatorOptions options_;
};

// Schema plus per-feature corpus ranges and categories for form building.
Json describe_schema(const Snapshot& snapshot, PropertyType type);

struct ServiceConfig {
  std::filesystem::path data_dir = "data";
  std::string host = "127.0.0.1";
  int port = 8080;
  int default_k = kDefaultNeighborCount;
  LlmConfig llm;
  GeocoderConfig geocoder;
  std::size_t prompt_token_cap = kDefaultPromptTokenCap;
  std::filesystem::path static_dir;  // optional web UI bundle
};

// Unknown keys are rejected so typos do not pass silently.
ServiceConfig decode_service_config(const Json& j);
ServiceConfig load_service_config(const std::filesystem::path& path);

/// HTTP front end:
///   GET  /api/v1/health
///   GET  /api/v1/schema/{type}
///   POST /api/v1/valuations
///   POST /api/v1/reload     re-reads data_dir and swaps the snapshot
class Service {
 public:
  explicit Service(ServiceConfig config);
  Service(ServiceConfig config, std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<Geocoder> geocoder,
          std::shared_ptr<LlmClient> llm);
  ~Service();

  std::shared_ptr<const Snapshot> snapshot() const;
  void reload();
  void swap(std::shared_ptr<const Snapshot> next);

  // Request handling without sockets: (status, JSON body).
  std::pair<int, Json> handle_valuation(const std::string& body) const;
  std::pair<int, Json> handle_schema(const std::string& type) const;
  Json health() const;

  // Binds, then blocks until stop(). Returns false if binding failed.
  bool listen();
  // Binds to an ephemeral port on host and serves on a background thread.
  int start_background();
  void stop();

 private:
  void install_routes();

  ServiceConfig config_;
  std::shared_ptr<Geocoder> geocoder_;
  std::shared_ptr<LlmClient> llm_;
  mutable std::mutex mu_;
  std::shared_ptr<const Snapshot> snapshot_;
  struct Http;
  std::unique_ptr<Http> http_;
};

}  // namespace proval
