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

#pragma once

#include <chrono>
#include <memory>
#include <string>

namespace proval {

/// Text completion backend. Implementations may block and may throw on
/// transport errors; callers enforce their own deadline.
class LlmClient {
 public:
  virtual ~LlmClient() = default;
  virtual std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) = 0;
  virtual std::string name() const = 0;
};

// Returns a fixed response, optionally after a delay.
class StaticLlmClient : public LlmClient {
 public:
  explicit StaticLlmClient(std::string response, std::chrono::milliseconds delay = std::chrono::milliseconds{0})
      : response_(std::move(response)), delay_(delay) {}
  std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) override;
  std::string name() const override { return "static"; }

 private:
  std::string response_;
  std::chrono::milliseconds delay_;
};

struct LlmConfig {
  std::string endpoint;  // e.g. http://127.0.0.1:8000/v1/chat/completions; empty disables the LLM
  std::string model = "default";
  std::string token_env = "PROVAL_LLM_TOKEN";  // bearer token is read from this variable
  double timeout_seconds = 20.0;
  std::string audit_log;  // JSON-lines file of prompts and responses; empty disables
};

/// Chat-completions style JSON over HTTP:
///   POST {"model": ..., "messages": [{"role": "user", "content": prompt}]}
///   <- {"choices": [{"message": {"content": text}}]}
class HttpLlmClient : public LlmClient {
 public:
  explicit HttpLlmClient(LlmConfig config);
  std::string complete(const std::string& prompt, std::chrono::milliseconds timeout) override;
  std::string name() const override { return "http"; }

 private:
  LlmConfig config_;
  std::string origin_;  // scheme://host:port
  std::string path_;
};

// nullptr when config.endpoint is empty.
std::shared_ptr<LlmClient> make_llm_client(const LlmConfig& config);

}  // namespace proval
