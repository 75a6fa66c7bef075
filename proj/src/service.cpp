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

#include "proval/service.hpp"

#include <spdlog/spdlog.h>

#include <chrono>
#include <fstream>
#include <set>
#include <thread>

#include "httplib.h"

namespace proval {

namespace {

constexpr const char* kJson = "application/json";

[[noreturn]] void bad_request(const std::string& msg) { throw RequestError(400, msg); }

Json encode_point(const std::optional<GeoPoint>& p) {
  if (!p) return nullptr;
  return Json{{"latitude", p->latitude}, {"longitude", p->longitude}};
}

Json opt_number(const std::optional<double>& v) { return v ? Json(*v) : Json(nullptr); }

std::string_view status_name(NeighborStatus s) {
  switch (s) {
    case NeighborStatus::Ok: return "ok";
    case NeighborStatus::Shortfall: return "shortfall";
    case NeighborStatus::NoCandidates: return "no_candidates";
  }
  return "unknown";
}

Json encode_imputation(const ImputationReport& r) {
  Json entries = Json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"feature", e.feature},
                       {"value", encode(e.value)},
                       {"strategy", std::string(to_string(e.strategy))},
                       {"source_ids", e.source_ids},
                       {"support", e.support}});
  }
  return Json{{"entries", std::move(entries)},
              {"unresolved", r.unresolved},
              {"fallbacks", r.fallbacks},
              {"empty_neighborhood", r.empty_neighborhood}};
}

Json encode_explanation(const ExplanationBundle& b) {
  Json neighbors = Json::array();
  for (const auto& n : b.neighbors) {
    Json features = Json::array();
    for (const auto& c : n.comparisons) {
      features.push_back({{"feature", c.feature},
                          {"target", encode(c.target_value)},
                          {"neighbor", encode(c.neighbor_value)},
                          {"delta", opt_number(c.delta)},
                          {"direction", std::string(to_string(c.direction))},
                          {"salience", c.salience}});
    }
    neighbors.push_back({{"neighbor_id", n.neighbor_id},
                         {"rank", n.rank},
                         {"distance", n.distance},
                         {"neighbor_price", opt_number(n.neighbor_price)},
                         {"features", std::move(features)},
                         {"annotations", n.annotations}});
  }
  return Json{{"renderer", std::string(to_string(b.renderer))},
              {"text", b.text},
              {"comparisons", std::move(neighbors)},
              {"notes", b.notes}};
}

template <typename T>
T get_or(const Json& j, const char* key, T fallback) {
  auto it = j.find(key);
  if (it == j.end() || it->is_null()) return fallback;
  return it->get<T>();
}

}  // namespace

const TypeSnapshot* Snapshot::find(PropertyType type) const {
  auto it = types.find(type);
  return it == types.end() ? nullptr : it->second.get();
}

std::shared_ptr<const Snapshot> load_snapshot(const std::filesystem::path& data_dir) {
  const DataLayout layout{data_dir};
  auto snap = std::make_shared<Snapshot>();
  if (std::filesystem::exists(layout.schema_path())) {
    std::ifstream in(layout.schema_path());
    try {
      snap->schema = decode_schema(Json::parse(in));
    } catch (const Json::exception& e) {
      throw IoError("cannot parse " + layout.schema_path().string() + ": " + e.what());
    }
  } else {
    snap->schema = default_schema();
  }
  for (PropertyType type : kPropertyTypes) {
    if (!std::filesystem::exists(layout.dataset_path(type))) continue;
    auto ts = std::make_unique<TypeSnapshot>();
    ts->dataset = load_dataset(layout, snap->schema, type);
    if (std::filesystem::exists(layout.model_path(type))) {
      ts->model = load_model(layout.model_path(type), snap->schema);
    } else {
      spdlog::warn("service: no model for {} at {}", to_string(type), layout.model_path(type).string());
    }
    ts->index = std::make_unique<NeighborIndex>(ts->dataset);
    spdlog::info("service: loaded {} {} records{}", ts->dataset.records.size(), to_string(type),
                 ts->model ? "" : " (no model)");
    snap->types.emplace(type, std::move(ts));
  }
  return snap;
}

std::shared_ptr<const Snapshot> make_snapshot(FeatureSchema schema, std::vector<Dataset> datasets,
                                              std::vector<GbdtModel> models) {
  auto snap = std::make_shared<Snapshot>();
  snap->schema = std::move(schema);
  for (auto& d : datasets) {
    if (!(d.schema == snap->schema)) throw SchemaMismatch("make_snapshot: dataset schema differs");
    auto ts = std::make_unique<TypeSnapshot>();
    const PropertyType type = d.property_type;
    ts->dataset = std::move(d);
    ts->index = std::make_unique<NeighborIndex>(ts->dataset);
    snap->types[type] = std::move(ts);
  }
  for (auto& m : models) {
    auto it = snap->types.find(m.property_type);
    if (it == snap->types.end()) throw InvalidArgument("make_snapshot: model without a dataset");
    if (m.schema_hash != snap->schema.hash()) throw SchemaMismatch("make_snapshot: model schema differs");
    it->second->model = std::move(m);
  }
  return snap;
}

ValuationRequest decode_valuation_request(const Json& j) {
  if (!j.is_object()) bad_request("request body must be a JSON object");
  // Unknown keys are rejected; in particular credentials never travel in a
  // request body, they come from the server's environment.
  static const std::set<std::string> kKeys = {"property_type", "address",       "location",         "transaction_date",
                                              "features",      "configuration", "want_explanation", "want_llm"};
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) bad_request("unknown request field '" + key + "'");
  }
  ValuationRequest r;
  auto type_it = j.find("property_type");
  if (type_it == j.end() || !type_it->is_string()) bad_request("'property_type' is required");
  auto type = parse_property_type(type_it->get<std::string>());
  if (!type) bad_request("unknown property type '" + type_it->get<std::string>() + "'");
  r.property_type = *type;

  try {
    if (auto it = j.find("address"); it != j.end() && !it->is_null()) r.address = it->get<std::string>();
    if (auto it = j.find("location"); it != j.end() && !it->is_null()) {
      r.location = GeoPoint{it->at("latitude").get<double>(), it->at("longitude").get<double>()};
    }
    if (auto it = j.find("transaction_date"); it != j.end() && !it->is_null()) {
      auto d = parse_date(it->get<std::string>());
      if (!d) bad_request("bad transaction_date");
      r.transaction_date = *d;
    }
    if (auto it = j.find("features"); it != j.end() && !it->is_null()) {
      if (!it->is_object()) bad_request("'features' must be an object");
      for (const auto& [name, value] : it->items()) r.features.emplace(name, decode_feature_value(value));
    }
    if (auto it = j.find("configuration"); it != j.end() && !it->is_null()) {
      r.configuration = decode_configuration(*it);
      r.k_given = it->contains("k") && !it->at("k").is_null();
    }
    r.want_explanation = get_or(j, "want_explanation", true);
    r.want_llm = get_or(j, "want_llm", false);
  } catch (const Json::exception& e) {
    bad_request(std::string("malformed request: ") + e.what());
  } catch (const RequestError&) {
    throw;
  } catch (const InvalidArgument& e) {
    bad_request(e.what());
  }
  return r;
}

Json encode(const ValuationRequest& r) {
  Json features = Json::object();
  for (const auto& [name, v] : r.features) features[name] = encode(v);
  Json config = encode(r.configuration);
  if (!r.k_given) config.erase("k");
  return Json{{"property_type", std::string(to_string(r.property_type))},
              {"address", r.address},
              {"location", encode_point(r.location)},
              {"transaction_date", r.transaction_date ? Json(format_date(*r.transaction_date)) : Json(nullptr)},
              {"features", std::move(features)},
              {"configuration", std::move(config)},
              {"want_explanation", r.want_explanation},
              {"want_llm", r.want_llm}};
}

Json encode(const ValuationReport& r) {
  Json neighbors = Json::array();
  for (const auto& n : r.search.neighbors) {
    neighbors.push_back({{"rank", n.rank},
                         {"id", n.neighbor.id},
                         {"distance", n.distance},
                         {"unit_price", opt_number(n.neighbor.unit_price)},
                         {"location", encode_point(n.neighbor.location)},
                         {"property", encode(n.neighbor)}});
  }
  return Json{{"property_type", std::string(to_string(r.property_type))},
              {"prediction", {{"unit_price", r.prediction}, {"units", "thousand NTD per square meter"}}},
              {"coordinates", encode_point(r.coordinates)},
              {"target", encode(r.target)},
              {"imputed_target", encode(r.imputed_target)},
              {"k", r.k},
              {"neighbor_search",
               {{"status", std::string(status_name(r.search.status))},
                {"candidates", r.search.candidates},
                {"found", r.search.found()},
                {"message", r.search.message()}}},
              {"neighbors", std::move(neighbors)},
              {"imputation", encode_imputation(r.imputation)},
              {"explanation", r.explanation ? encode_explanation(*r.explanation) : Json(nullptr)},
              {"notes", r.notes},
              {"schema_hash", r.schema_hash}};
}

Valuator::Valuator(std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<Geocoder> geocoder,
                   std::shared_ptr<LlmClient> llm, ValuatorOptions options)
    : snapshot_(std::move(snapshot)), geocoder_(std::move(geocoder)), llm_(std::move(llm)),
      options_(std::move(options)) {
  if (!snapshot_) throw InvalidArgument("Valuator: snapshot is required");
}

ValuationReport Valuator::value(const ValuationRequest& request) const {
  const Snapshot& snap = *snapshot_;
  const FeatureSchema& schema = snap.schema;
  const TypeSnapshot* ts = snap.find(request.property_type);
  const std::string type_name(to_string(request.property_type));
  if (!ts) throw RequestError(503, "no corpus loaded for property type '" + type_name + "'");
  if (!ts->model) throw RequestError(503, "no model loaded for property type '" + type_name + "'");

  ValuationReport report;
  report.property_type = request.property_type;
  report.schema_hash = schema.hash();

  Property target;
  target.id = "target";
  target.property_type = request.property_type;
  target.address = request.address;
  target.transaction_date = request.transaction_date;
  target.features = request.features;

  // geocode
  const bool has_lat = !is_missing(target.feature(features::kLatitude));
  const bool has_lon = !is_missing(target.feature(features::kLongitude));
  if (has_lat && has_lon) {
    auto lat = scalar_of(target.feature(features::kLatitude));
    auto lon = scalar_of(target.feature(features::kLongitude));
    if (lat && lon) target.location = GeoPoint{*lat, *lon};
  } else if (request.location) {
    target.location = request.location;
  } else if (!request.address.empty() && geocoder_) {
    try {
      target.location = geocoder_->resolve(request.address);
      if (!target.location) report.notes.push_back("geocoder could not resolve the address; location imputed");
    } catch (const std::exception& e) {
      spdlog::warn("service: geocoder '{}' failed: {}", geocoder_->name(), e.what());
      report.notes.push_back(std::string("geocoder failed (") + e.what() + "); location imputed");
    }
  } else {
    report.notes.push_back("no address or coordinates given; location imputed");
  }
  if (target.location) {
    if (!has_lat) target.set(features::kLatitude, target.location->latitude);
    if (!has_lon) target.set(features::kLongitude, target.location->longitude);
  }
  report.coordinates = target.location;

  // validate
  PropertyConfiguration config = request.configuration;
  if (!request.k_given) config.k = options_.default_k;
  if (auto v = validate_property(schema, target); !v.ok()) throw RequestError(400, v.summary());
  if (auto v = validate_configuration(schema, config); !v.ok()) throw RequestError(400, v.summary());
  report.k = config.k;
  report.target = target;

  // find_neighbors
  report.search = find_neighbors(*ts->index, target, config, config.k);
  if (report.search.status != NeighborStatus::Ok) report.notes.push_back(report.search.message());

  // impute_neighbor
  std::vector<Property> neighbors;
  neighbors.reserve(report.search.neighbors.size());
  for (const auto& n : report.search.neighbors) neighbors.push_back(n.neighbor);
  Imputed imputed = impute_neighbor(target, neighbors, schema, ts->dataset.stats);
  if (imputed.report.empty_neighborhood) {
    report.notes.push_back("imputation used corpus statistics: no neighbors available");
  } else {
    for (const auto& f : imputed.report.fallbacks) {
      report.notes.push_back("imputation of '" + f + "' fell back to corpus statistics");
    }
  }
  for (const auto& f : imputed.report.unresolved) report.notes.push_back("feature '" + f + "' could not be imputed");
  report.imputation = std::move(imputed.report);
  report.imputed_target = std::move(imputed.property);

  // predict
  report.prediction = predict(*ts->model, schema, report.imputed_target);

  // compare / explain
  if (request.want_explanation) {
    std::shared_ptr<LlmClient> llm = request.want_llm ? llm_ : nullptr;
    if (request.want_llm && !llm_) report.notes.push_back("llm not configured; template explanation used");
    report.explanation = generate_explanation(report.imputed_target, report.search.neighbors, report.prediction,
                                              schema, ts->dataset.stats, llm, options_.explain);
    for (const auto& n : report.explanation->notes) report.notes.push_back(n);
  }
  return report;
}

Json describe_schema(const Snapshot& snapshot, PropertyType type) {
  const TypeSnapshot* ts = snapshot.find(type);
  Json feats = Json::array();
  for (const auto& decl : snapshot.schema.features()) {
    Json f{{"name", decl.name},
           {"kind", std::string(to_string(decl.kind))},
           {"units", decl.units},
           {"required_by_avm", decl.required_by_avm}};
    const FeatureStats* s = ts ? ts->dataset.stats.find(decl.name) : nullptr;
    if (s && !s->unobserved()) {
      if (decl.kind == FeatureKind::Categorical) {
        Json labels = Json::array();
        for (const auto& [label, count] : s->frequencies) labels.push_back(label);
        f["categories"] = std::move(labels);
      } else {
        f["min"] = s->min;
        f["max"] = s->max;
      }
    }
    feats.push_back(std::move(f));
  }
  return Json{{"property_type", std::string(to_string(type))},
              {"hash", snapshot.schema.hash()},
              {"features", std::move(feats)},
              {"records", ts ? ts->dataset.records.size() : 0},
              {"model_loaded", ts && ts->model.has_value()}};
}

ServiceConfig decode_service_config(const Json& j) {
  static const std::set<std::string> kKeys = {"data_dir", "host", "port", "default_k", "llm",
                                              "geocoder", "prompt_token_cap", "static_dir"};
  if (!j.is_object()) throw InvalidArgument("service config must be a JSON object");
  for (const auto& [key, value] : j.items()) {
    if (!kKeys.contains(key)) throw InvalidArgument("service config: unknown key '" + key + "'");
  }
  ServiceConfig c;
  try {
    c.data_dir = get_or<std::string>(j, "data_dir", c.data_dir.string());
    c.host = get_or(j, "host", c.host);
    c.port = get_or(j, "port", c.port);
    c.default_k = get_or(j, "default_k", c.default_k);
    c.prompt_token_cap = get_or(j, "prompt_token_cap", c.prompt_token_cap);
    c.static_dir = get_or<std::string>(j, "static_dir", "");
    if (auto it = j.find("llm"); it != j.end() && !it->is_null()) {
      c.llm.endpoint = get_or(*it, "endpoint", c.llm.endpoint);
      c.llm.model = get_or(*it, "model", c.llm.model);
      c.llm.token_env = get_or(*it, "token_env", c.llm.token_env);
      c.llm.timeout_seconds = get_or(*it, "timeout_seconds", c.llm.timeout_seconds);
      c.llm.audit_log = get_or(*it, "audit_log", c.llm.audit_log);
    }
    if (auto it = j.find("geocoder"); it != j.end() && !it->is_null()) {
      c.geocoder.endpoint = get_or(*it, "endpoint", c.geocoder.endpoint);
      c.geocoder.key_env = get_or(*it, "key_env", c.geocoder.key_env);
      c.geocoder.timeout_seconds = get_or(*it, "timeout_seconds", c.geocoder.timeout_seconds);
    }
  } catch (const Json::exception& e) {
    throw InvalidArgument(std::string("service config: ") + e.what());
  }
  if (c.default_k < 1) throw InvalidArgument("service config: default_k must be at least 1");
  if (c.port < 0 || c.port > 65535) throw InvalidArgument("service config: port out of range");
  if (!(c.llm.timeout_seconds > 0)) throw InvalidArgument("service config: llm.timeout_seconds must be positive");
  return c;
}

ServiceConfig load_service_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  try {
    return decode_service_config(Json::parse(in));
  } catch (const Json::parse_error& e) {
    throw InvalidArgument("cannot parse " + path.string() + ": " + e.what());
  }
}

struct Service::Http {
  httplib::Server server;
  std::thread thread;
};

Service::Service(ServiceConfig config)
    : Service(config, load_snapshot(config.data_dir), make_geocoder(config.geocoder), make_llm_client(config.llm)) {}

Service::Service(ServiceConfig config, std::shared_ptr<const Snapshot> snapshot, std::shared_ptr<Geocoder> geocoder,
                 std::shared_ptr<LlmClient> llm)
    : config_(std::move(config)), geocoder_(std::move(geocoder)), llm_(std::move(llm)),
      snapshot_(std::move(snapshot)), http_(std::make_unique<Http>()) {
  install_routes();
}

Service::~Service() { stop(); }

std::shared_ptr<const Snapshot> Service::snapshot() const {
  std::lock_guard<std::mutex> lock(mu_);
  return snapshot_;
}

void Service::swap(std::shared_ptr<const Snapshot> next) {
  std::lock_guard<std::mutex> lock(mu_);
  snapshot_ = std::move(next);
}

void Service::reload() { swap(load_snapshot(config_.data_dir)); }

std::pair<int, Json> Service::handle_valuation(const std::string& body) const {
  const auto started = std::chrono::steady_clock::now();
  try {
    Json j;
    try {
      j = Json::parse(body);
    } catch (const Json::parse_error& e) {
      throw RequestError(400, std::string("request body is not valid JSON: ") + e.what());
    }
    ValuationRequest request = decode_valuation_request(j);
    ValuatorOptions options;
    options.default_k = config_.default_k;
    options.explain.prompt_token_cap = config_.prompt_token_cap;
    options.explain.llm_timeout =
        std::chrono::milliseconds(static_cast<long long>(config_.llm.timeout_seconds * 1000));
    options.explain.audit_log = config_.llm.audit_log;
    Valuator valuator(snapshot(), geocoder_, llm_, options);
    Json out = encode(valuator.value(request));
    const auto ms =
        std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
    spdlog::info("service: valuation {} -> {:.2f} in {} ms", to_string(request.property_type),
                 out["prediction"]["unit_price"].get<double>(), ms);
    return {200, std::move(out)};
  } catch (const RequestError& e) {
    return {e.status(), Json{{"error", e.what()}}};
  } catch (const InvalidArgument& e) {
    return {400, Json{{"error", e.what()}}};
  } catch (const std::exception& e) {
    spdlog::error("service: valuation failed: {}", e.what());
    return {500, Json{{"error", e.what()}}};
  }
}

std::pair<int, Json> Service::handle_schema(const std::string& type) const {
  auto t = parse_property_type(type);
  if (!t) return {400, Json{{"error", "unknown property type '" + type + "'"}}};
  return {200, describe_schema(*snapshot(), *t)};
}

Json Service::health() const {
  auto snap = snapshot();
  Json types = Json::object();
  for (const auto& [type, ts] : snap->types) {
    types[std::string(to_string(type))] = {{"records", ts->dataset.records.size()},
                                           {"model_loaded", ts->model.has_value()}};
  }
  return Json{{"status", "ok"},
              {"schema_hash", snap->schema.hash()},
              {"types", std::move(types)},
              {"llm", llm_ ? llm_->name() : "none"},
              {"geocoder", geocoder_ ? geocoder_->name() : "none"}};
}

void Service::install_routes() {
  auto& server = http_->server;
  auto reply = [](httplib::Response& res, int status, const Json& body) {
    res.status = status;
    res.set_content(body.dump(), kJson);
  };
  server.Get("/api/v1/health", [this, reply](const httplib::Request&, httplib::Response& res) {
    reply(res, 200, health());
  });
  server.Get(R"(/api/v1/schema/([^/]+))", [this, reply](const httplib::Request& req, httplib::Response& res) {
    auto [status, body] = handle_schema(req.matches[1]);
    reply(res, status, body);
  });
  server.Post("/api/v1/valuations", [this, reply](const httplib::Request& req, httplib::Response& res) {
    auto [status, body] = handle_valuation(req.body);
    reply(res, status, body);
  });
  server.Post("/api/v1/reload", [this, reply](const httplib::Request&, httplib::Response& res) {
    try {
      reload();
      reply(res, 200, health());
    } catch (const std::exception& e) {
      spdlog::error("service: reload failed, keeping the current snapshot: {}", e.what());
      reply(res, 500, Json{{"error", e.what()}});
    }
  });
  if (!config_.static_dir.empty() && !server.set_mount_point("/", config_.static_dir.string())) {
    spdlog::warn("service: static directory {} not found", config_.static_dir.string());
  }
}

bool Service::listen() {
  spdlog::info("service: listening on {}:{}", config_.host, config_.port);
  return http_->server.listen(config_.host, config_.port);
}

int Service::start_background() {
  const int port = http_->server.bind_to_any_port(config_.host);
  if (port < 0) throw IoError("service: cannot bind " + config_.host);
  http_->thread = std::thread([this] { http_->server.listen_after_bind(); });
  http_->server.wait_until_ready();
  return port;
}

void Service::stop() {
  if (!http_) return;
  http_->server.stop();
  if (http_->thread.joinable()) http_->thread.join();
}

}  // namespace proval
