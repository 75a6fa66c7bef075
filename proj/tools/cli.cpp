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

#include "cli.hpp"

#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <algorithm>
#include <chrono>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "proval/eval.hpp"
#include "proval/gbdt.hpp"
#include "proval/ingest.hpp"
#include "proval/json_codec.hpp"
#include "proval/service.hpp"
#include "proval/synth.hpp"

namespace proval::cli {

namespace {

struct TrainFlags {
  int trees = TrainParams{}.num_trees;
  int leaves = TrainParams{}.max_leaves;
  int min_leaf = TrainParams{}.min_samples_leaf;
  double learning_rate = TrainParams{}.learning_rate;
  int bins = TrainParams{}.feature_histogram_bins;

  void add_to(CLI::App* app) {
    app->add_option("--trees", trees, "Boosting rounds")->capture_default_str();
    app->add_option("--leaves", leaves, "Maximum leaves per tree")->capture_default_str();
    app->add_option("--min-leaf", min_leaf, "Minimum samples per leaf")->capture_default_str();
    app->add_option("--learning-rate", learning_rate, "Shrinkage")->capture_default_str();
    app->add_option("--bins", bins, "Histogram bins per numeric feature")->capture_default_str();
  }
  TrainParams params(std::uint64_t seed) const {
    TrainParams p;
    p.num_trees = trees;
    p.max_leaves = leaves;
    p.min_samples_leaf = min_leaf;
    p.learning_rate = learning_rate;
    p.feature_histogram_bins = bins;
    p.seed = seed;
    return p;
  }
};

void write_schema(const DataLayout& layout, const FeatureSchema& schema) {
  std::ofstream out(layout.schema_path());
  if (!out) throw IoError("cannot write " + layout.schema_path().string());
  out << encode(schema).dump(2) << '\n';
}

FeatureSchema read_schema(const DataLayout& layout) {
  if (!std::filesystem::exists(layout.schema_path())) return default_schema();
  std::ifstream in(layout.schema_path());
  try {
    return decode_schema(Json::parse(in));
  } catch (const Json::exception& e) {
    throw IoError("cannot parse " + layout.schema_path().string() + ": " + e.what());
  }
}

std::vector<Dataset> read_datasets(const DataLayout& layout, const FeatureSchema& schema) {
  std::vector<Dataset> out;
  for (PropertyType type : kPropertyTypes) {
    if (std::filesystem::exists(layout.dataset_path(type))) out.push_back(load_dataset(layout, schema, type));
  }
  if (out.empty()) throw IoError("no datasets under " + (layout.root / "datasets").string());
  return out;
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  // stdout carries reports and JSON; logs go to stderr.
  if (!spdlog::get("proval")) spdlog::set_default_logger(spdlog::stderr_color_mt("proval"));

  CLI::App app{"proval: explainable property valuation"};
  app.require_subcommand(1);
  app.fallthrough();  // --log-level is accepted after the subcommand too
  std::string log_level = "info";
  app.add_option("--log-level", log_level, "trace, debug, info, warn, error or off")->capture_default_str();

  std::string data_dir = "data";
  std::uint64_t seed = 1;

  auto* synth = app.add_subcommand("synth", "Generate a synthetic corpus, one dataset per property type");
  std::size_t size = kDefaultSynthSize;
  double spatial = 0.8;
  synth->add_option("--seed", seed, "Random seed")->capture_default_str();
  synth->add_option("--size", size, "Records per property type")->capture_default_str();
  synth->add_option("--spatial-correlation", spatial, "Spatial correlation in [0, 1]")->capture_default_str();
  synth->add_option("--data-dir", data_dir, "Output data directory")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train one model per property type");
  TrainFlags train_flags;
  train_cmd->add_option("--seed", seed, "Random seed")->capture_default_str();
  train_cmd->add_option("--data-dir", data_dir, "Data directory")->capture_default_str();
  train_flags.add_to(train_cmd);

  auto* evaluate = app.add_subcommand("evaluate", "Run the imputation ablation and report MAPE per strategy");
  TrainFlags eval_flags;
  double mask_rate = 0.5;
  int k = kDefaultNeighborCount;
  int num_seeds = 5;
  std::string out_path;
  std::string eval_dir;
  evaluate->add_option("--seed", seed, "First seed; seeds are seed, seed+1, ...")->capture_default_str();
  evaluate->add_option("--seeds", num_seeds, "Number of masking seeds")->capture_default_str();
  evaluate->add_option("--mask-rate", mask_rate, "Probability of masking each maskable feature")
      ->capture_default_str();
  evaluate->add_option("--k", k, "Neighbors per target")->capture_default_str();
  evaluate->add_option("--data-dir", eval_dir, "Evaluate on this corpus instead of a fresh synthetic one");
  evaluate->add_option("--size", size, "Synthetic records per type")->capture_default_str();
  evaluate->add_option("--spatial-correlation", spatial, "Synthetic spatial correlation")->capture_default_str();
  evaluate->add_option("--out", out_path, "CSV report path");
  eval_flags.add_to(evaluate);

  auto* predict_cmd = app.add_subcommand("predict", "Value one property from a request JSON file");
  std::string request_path;
  std::string config_path;
  predict_cmd->add_option("request", request_path, "Valuation request JSON ('-' for stdin)")->required();
  predict_cmd->add_option("--data-dir", data_dir, "Data directory")->capture_default_str();
  predict_cmd->add_option("--config", config_path, "Service config JSON (LLM and geocoder backends)");

  auto* serve = app.add_subcommand("serve", "Start the HTTP service");
  std::string host;
  int port = -1;
  std::string static_dir;
  serve->add_option("--config", config_path, "Service config JSON");
  serve->add_option("--data-dir", data_dir, "Data directory (overrides the config)");
  serve->add_option("--host", host, "Bind address (overrides the config)");
  serve->add_option("--port", port, "Port (overrides the config)");
  serve->add_option("--static-dir", static_dir, "Directory served at / (overrides the config)");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? 0 : 2;
  }

  try {
    spdlog::set_level(spdlog::level::from_str(log_level));

    if (synth->parsed()) {
      const DataLayout layout{data_dir};
      layout.create_directories();
      write_schema(layout, default_schema());
      for (auto& [type, dataset] : synth_corpus(seed, size, spatial)) {
        save_dataset(layout, dataset);
        out << "wrote " << dataset.records.size() << ' ' << to_string(type) << " records to "
            << layout.dataset_path(type).string() << '\n';
      }
      return 0;
    }

    if (train_cmd->parsed()) {
      const DataLayout layout{data_dir};
      const FeatureSchema schema = read_schema(layout);
      for (const Dataset& d : read_datasets(layout, schema)) {
        const auto started = std::chrono::steady_clock::now();
        const GbdtModel model = train(d, train_flags.params(seed));
        save_model(layout.model_path(d.property_type), model);
        const auto ms =
            std::chrono::duration_cast<std::chrono::milliseconds>(std::chrono::steady_clock::now() - started).count();
        out << "trained " << to_string(d.property_type) << ": " << model.trees.size() << " trees in " << ms
            << " ms -> " << layout.model_path(d.property_type).string() << '\n';
      }
      return 0;
    }

    if (evaluate->parsed()) {
      if (num_seeds < 1) throw InvalidArgument("--seeds must be at least 1");
      std::vector<std::uint64_t> seeds;
      for (int i = 0; i < num_seeds; ++i) seeds.push_back(seed + static_cast<std::uint64_t>(i));
      std::vector<Dataset> datasets;
      if (!eval_dir.empty()) {
        const DataLayout layout{eval_dir};
        datasets = read_datasets(layout, read_schema(layout));
      } else {
        for (auto& [type, d] : synth_corpus(seed, size, spatial)) datasets.push_back(std::move(d));
      }
      PropertyConfiguration config;
      config.k = k;
      AblationResult all;
      for (const Dataset& d : datasets) {
        spdlog::info("evaluate: {} ({} records)", to_string(d.property_type), d.records.size());
        all.merge(run_ablation(d, eval_flags.params(seed), config, k, mask_rate, seeds));
      }
      out << format_ablation_table(all);
      if (!out_path.empty()) {
        std::ofstream csv(out_path);
        if (!csv) throw IoError("cannot write " + out_path);
        write_ablation_csv(csv, all);
      }
      return 0;
    }

    if (predict_cmd->parsed()) {
      Json body;
      try {
        if (request_path == "-") {
          body = Json::parse(std::cin);
        } else {
          std::ifstream in(request_path);
          if (!in) throw IoError("cannot open " + request_path);
          body = Json::parse(in);
        }
      } catch (const Json::parse_error& e) {
        throw InvalidArgument("cannot parse request: " + std::string(e.what()));
      }
      ServiceConfig config = config_path.empty() ? ServiceConfig{} : load_service_config(config_path);
      config.data_dir = data_dir;
      Service service(config);
      auto [status, report] = service.handle_valuation(body.dump());
      if (status != 200) {
        err << "predict: " << report.value("error", std::string("request failed")) << '\n';
        return 1;
      }
      out << report.dump(2) << '\n';
      return 0;
    }

    if (serve->parsed()) {
      ServiceConfig config = config_path.empty() ? ServiceConfig{} : load_service_config(config_path);
      if (!serve->get_option("--data-dir")->empty()) config.data_dir = data_dir;
      if (!host.empty()) config.host = host;
      if (port >= 0) config.port = port;
      if (!static_dir.empty()) config.static_dir = static_dir;
      Service service(config);
      if (!service.listen()) throw IoError("cannot bind " + config.host + ":" + std::to_string(config.port));
      return 0;
    }
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}

}  // namespace proval::cli
