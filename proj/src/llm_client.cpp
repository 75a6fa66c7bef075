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

#include "proval/llm_client.hpp"

#include <cstdlib>
#include <thread>

#include "httplib.h"
#include "json.hpp"
#include "proval/errors.hpp"

namespace proval {

std::string StaticLlmClient::complete(const std::string&, std::chrono::milliseconds) {
  if (delay_.count() > 0) std::this_thread::sleep_for(delay_);
  return response_;
}

HttpLlmClient::HttpLlmClient(LlmConfig config) : config_(std::move(config)) {
  const std::string& url = config_.endpoint;
  const auto scheme_end = url.find("://");
  if (scheme_end == std::string::npos) throw InvalidArgument("llm: endpoint must be an absolute URL: " + url);
  const auto path_start = url.find('/', scheme_end + 3);
  origin_ = url.substr(0, path_start);
  path_ = path_start == std::string::npos ? "/" : url.substr(path_start);
}

std::string HttpLlmClient::complete(const std::string& prompt, std::chrono::milliseconds timeout) {
  httplib::Client client(origin_);
  const auto secs = timeout.count() / 1000;
  const auto usecs = (timeout.count() % 1000) * 1000;
  client.set_connection_timeout(secs, usecs);
  client.set_read_timeout(secs, usecs);
  client.set_write_timeout(secs, usecs);

  httplib::Headers headers;
  if (const char* token = std::getenv(config_.token_env.c_str()); token && *token) {
    headers.emplace("Authorization", std::string("Bearer ") + token);
  }
  nlohmann::json body{{"model", config_.model},
                      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", prompt}}})}};
  auto res = client.Post(path_, headers, body.dump(), "application/json");
  if (!res) throw Error("llm: request failed: " + httplib::to_string(res.error()));
  if (res->status != 200) throw Error("llm: HTTP " + std::to_string(res->status));
  try {
    auto reply = nlohmann::json::parse(res->body);
    return reply.at("choices").at(0).at("message").at("content").get<std::string>();
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("llm: malformed response: ") + e.what());
  }
}

std::shared_ptr<LlmClient> make_llm_client(const LlmConfig& config) {
  if (config.endpoint.empty()) return nullptr;
  return std::make_shared<HttpLlmClient>(config);
}

}  // namespace proval
