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

#include "proval/gbdt.hpp"

#include <fstream>
#include <map>
#include <numeric>

#include "proval/errors.hpp"

namespace proval {

namespace {

constexpr const char* kModelFormat = "proval.gbdt";
constexpr int kModelVersion = 1;
constexpr std::uint8_t kMissingBin = 255;
constexpr int kMaxBins = 254;
constexpr double kMinGain = 1e-12;

using BinMatrix = Eigen::Matrix<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic>;

// Maps raw feature values to histogram bins for one feature.
struct BinMapper {
  bool categorical = false;
  std::vector<double> upper_bounds;  // numeric: bin b holds x <= upper_bounds[b]
  int num_bins = 1;

  std::uint8_t bin(double x) const {
    if (std::isnan(x)) return kMissingBin;
    if (categorical) return static_cast<std::uint8_t>(x);
    auto it = std::lower_bound(upper_bounds.begin(), upper_bounds.end(), x);
    return static_cast<std::uint8_t>(it - upper_bounds.begin());
  }

  // Threshold for a split placing bins [0, b] on the left.
  double threshold(int b) const {
    return b < static_cast<int>(upper_bounds.size()) ? upper_bounds[static_cast<std::size_t>(b)]
                                                     : std::numeric_limits<double>::max();
  }
};

BinMapper numeric_mapper(const Eigen::Ref<const Eigen::VectorXd>& column, int max_bins) {
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(column.size()));
  for (Eigen::Index i = 0; i < column.size(); ++i) {
    if (!std::isnan(column[i])) values.push_back(column[i]);
  }
  std::sort(values.begin(), values.end());
  std::vector<double> distinct = values;
  distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());

  BinMapper m;
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      m.upper_bounds.push_back(distinct[i] + (distinct[i + 1] - distinct[i]) / 2.0);
    }
  } else {
    // Quantile bounds over the observed values; the maximum is never a bound.
    for (int b = 1; b < max_bins; ++b) {
      const std::size_t idx = values.size() * static_cast<std::size_t>(b) / static_cast<std::size_t>(max_bins);
      const double v = values[std::min(idx, values.size() - 1)];
      if (v < distinct.back() && (m.upper_bounds.empty() || v > m.upper_bounds.back())) m.upper_bounds.push_back(v);
    }
  }
  m.num_bins = static_cast<int>(m.upper_bounds.size()) + 1;
  return m;
}

struct GradBin {
  double g = 0.0;
  int n = 0;
  GradBin& operator+=(const GradBin& o) {
    g += o.g;
    n += o.n;
    return *this;
  }
  GradBin& operator-=(const GradBin& o) {
    g -= o.g;
    n -= o.n;
    return *this;
  }
};

// Per-feature gradient histograms laid out back to back; each feature owns
// num_bins + 1 slots, the last one for Missing.
struct Histogram {
  std::vector<GradBin> bins;
};

struct SplitCandidate {
  int feature = -1;
  double gain = kMinGain;
  int threshold_bin = 0;
  std::uint64_t left_categories = 0;
  bool default_left = true;
  int left_count = 0;
  double left_g = 0.0;

  bool valid() const { return feature >= 0; }
};

struct Leaf {
  int node = 0;
  std::vector<int> rows;
  Histogram hist;
  double sum_g = 0.0;
  SplitCandidate best;
};

class TreeBuilder {
 public:
  TreeBuilder(const BinMatrix& bins, const std::vector<BinMapper>& mappers, const TrainParams& params)
      : bins_(bins), mappers_(mappers), params_(params) {
    offsets_.push_back(0);
    for (const auto& m : mappers_) offsets_.push_back(offsets_.back() + static_cast<std::size_t>(m.num_bins) + 1);
  }

  // Grows one tree on gradients g (prediction - target); leaf rows returned
  // through `leaf_rows` keyed by node index.
  std::optional<Tree> grow(const Eigen::VectorXd& g, std::map<int, std::vector<int>>& leaf_rows) const {
    const int n = static_cast<int>(g.size());
    Tree tree;
    tree.nodes.emplace_back();
    std::vector<Leaf> leaves(1);
    leaves[0].rows.resize(static_cast<std::size_t>(n));
    std::iota(leaves[0].rows.begin(), leaves[0].rows.end(), 0);
    leaves[0].hist = build_histogram(leaves[0].rows, g);
    leaves[0].sum_g = g.sum();
    leaves[0].best = best_split(leaves[0].hist, leaves[0].sum_g, n);
    if (!leaves[0].best.valid()) return std::nullopt;

    while (static_cast<int>(leaves.size()) < params_.max_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t i = 0; i < leaves.size(); ++i) {
        if (!leaves[i].best.valid()) continue;
        if (pick == leaves.size() || leaves[i].best.gain > leaves[pick].best.gain) pick = i;
      }
      if (pick == leaves.size()) break;
      split(tree, leaves, pick, g);
    }

    for (auto& leaf : leaves) {
      TreeNode& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
      const auto count = static_cast<int>(leaf.rows.size());
      node.sample_count = count;
      node.value = -leaf.sum_g / static_cast<double>(count);
      leaf_rows[leaf.node] = std::move(leaf.rows);
    }
    return tree;
  }

 private:
  Histogram build_histogram(const std::vector<int>& rows, const Eigen::VectorXd& g) const {
    Histogram h;
    h.bins.assign(offsets_.back(), {});
    for (std::size_t f = 0; f < mappers_.size(); ++f) {
      GradBin* base = h.bins.data() + offsets_[f];
      const int missing_slot = mappers_[f].num_bins;
      const auto col = bins_.col(static_cast<Eigen::Index>(f));
      for (int r : rows) {
        const std::uint8_t b = col[r];
        GradBin& slot = base[b == kMissingBin ? missing_slot : b];
        slot.g += g[r];
        ++slot.n;
      }
    }
    return h;
  }

  void consider(SplitCandidate& best, int feature, const GradBin& left_obs, const GradBin& right_obs,
                const GradBin& missing, double parent_score, int threshold_bin, std::uint64_t mask) const {
    for (bool default_left : {true, false}) {
      if (missing.n == 0 && !default_left) continue;
      GradBin l = left_obs, r = right_obs;
      (default_left ? l : r) += missing;
      if (l.n < params_.min_samples_leaf || r.n < params_.min_samples_leaf) continue;
      const double gain = l.g * l.g / l.n + r.g * r.g / r.n - parent_score;
      if (gain > best.gain) {
        best.feature = feature;
        best.gain = gain;
        best.threshold_bin = threshold_bin;
        best.left_categories = mask;
        best.default_left = default_left;
        best.left_count = l.n;
        best.left_g = l.g;
      }
    }
  }

  SplitCandidate best_split(const Histogram& h, double sum_g, int count) const {
    SplitCandidate best;
    if (count < 2 * params_.min_samples_leaf) return best;
    const double parent_score = sum_g * sum_g / count;
    for (std::size_t f = 0; f < mappers_.size(); ++f) {
      const BinMapper& m = mappers_[f];
      const GradBin* base = h.bins.data() + offsets_[f];
      const GradBin missing = base[m.num_bins];
      GradBin observed;
      for (int b = 0; b < m.num_bins; ++b) observed += base[b];
      if (observed.n == 0) continue;
      const int fi = static_cast<int>(f);

      if (!m.categorical) {
        GradBin left;
        for (int b = 0; b < m.num_bins; ++b) {
          if (base[b].n == 0 && b + 1 < m.num_bins) continue;  // same partition as the previous bound
          left += base[b];
          GradBin right = observed;
          right -= left;
          consider(best, fi, left, right, missing, parent_score, b, 0);
        }
      } else {
        std::vector<int> slots;
        for (int b = 0; b < m.num_bins; ++b) {
          if (base[b].n > 0) slots.push_back(b);
        }
        std::stable_sort(slots.begin(), slots.end(), [&](int a, int b) {
          return base[a].g / base[a].n < base[b].g / base[b].n;
        });
        GradBin left;
        std::uint64_t mask = 0;
        for (int slot : slots) {
          left += base[slot];
          mask |= 1ULL << slot;
          GradBin right = observed;
          right -= left;
          consider(best, fi, left, right, missing, parent_score, 0, mask);
        }
      }
    }
    return best;
  }

  void split(Tree& tree, std::vector<Leaf>& leaves, std::size_t pick, const Eigen::VectorXd& g) const {
    Leaf parent = std::move(leaves[pick]);
    const SplitCandidate& s = parent.best;
    const BinMapper& m = mappers_[static_cast<std::size_t>(s.feature)];

    const int left_node = static_cast<int>(tree.nodes.size());
    const int right_node = left_node + 1;
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();
    TreeNode& node = tree.nodes[static_cast<std::size_t>(parent.node)];
    node.feature = s.feature;
    node.categorical = m.categorical;
    node.threshold = m.categorical ? 0.0 : m.threshold(s.threshold_bin);
    node.left_categories = s.left_categories;
    node.default_left = s.default_left;
    node.left = left_node;
    node.right = right_node;
    node.sample_count = static_cast<int>(parent.rows.size());

    Leaf left, right;
    left.node = left_node;
    right.node = right_node;
    const auto col = bins_.col(s.feature);
    for (int r : parent.rows) {
      const std::uint8_t b = col[r];
      bool go_left;
      if (b == kMissingBin) {
        go_left = s.default_left;
      } else if (m.categorical) {
        go_left = (s.left_categories >> b) & 1ULL;
      } else {
        go_left = b <= s.threshold_bin;
      }
      (go_left ? left : right).rows.push_back(r);
    }
    left.sum_g = s.left_g;
    right.sum_g = parent.sum_g - s.left_g;

    // Build the smaller child directly, derive the larger by subtraction.
    Leaf& small = left.rows.size() <= right.rows.size() ? left : right;
    Leaf& large = &small == &left ? right : left;
    small.hist = build_histogram(small.rows, g);
    large.hist = std::move(parent.hist);
    for (std::size_t i = 0; i < large.hist.bins.size(); ++i) large.hist.bins[i] -= small.hist.bins[i];

    left.best = best_split(left.hist, left.sum_g, static_cast<int>(left.rows.size()));
    right.best = best_split(right.hist, right.sum_g, static_cast<int>(right.rows.size()));
    leaves[pick] = std::move(left);
    leaves.push_back(std::move(right));
  }

  const BinMatrix& bins_;
  const std::vector<BinMapper>& mappers_;
  const TrainParams& params_;
  std::vector<std::size_t> offsets_;
};

std::vector<ModelFeature> model_features(const Dataset& dataset) {
  std::vector<ModelFeature> out;
  for (const auto& decl : dataset.schema.features()) {
    if (!decl.required_by_avm) continue;
    ModelFeature f{decl.name, decl.kind, {}};
    if (decl.kind == FeatureKind::Categorical) {
      std::map<std::string, std::size_t> freq;
      for (const auto& p : dataset.records) {
        if (const auto* label = std::get_if<std::string>(&p.feature(decl.name))) ++freq[*label];
      }
      std::vector<std::pair<std::string, std::size_t>> ranked(freq.begin(), freq.end());
      std::stable_sort(ranked.begin(), ranked.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
      for (std::size_t i = 0; i < ranked.size() && i < kMaxCategories; ++i) f.categories.push_back(ranked[i].first);
    }
    out.push_back(std::move(f));
  }
  return out;
}

}  // namespace

std::string_view to_string(TargetTransform t) { return t == TargetTransform::Log ? "log" : "identity"; }

void TrainParams::validate() const {
  if (num_trees < 1) throw InvalidArgument("train: num_trees must be positive");
  if (max_leaves < 2) throw InvalidArgument("train: max_leaves must be at least 2");
  if (min_samples_leaf < 1) throw InvalidArgument("train: min_samples_leaf must be positive");
  if (!(learning_rate > 0.0 && learning_rate <= 1.0)) throw InvalidArgument("train: learning_rate must lie in (0, 1]");
  if (feature_histogram_bins < 2 || feature_histogram_bins > kMaxBins) {
    throw InvalidArgument("train: feature_histogram_bins must lie in [2, " + std::to_string(kMaxBins) + "]");
  }
}

double ModelFeature::encode(const FeatureValue& v) const {
  constexpr double nan = std::numeric_limits<double>::quiet_NaN();
  if (kind == FeatureKind::Categorical) {
    const auto* label = std::get_if<std::string>(&v);
    if (!label) return nan;
    auto it = std::find(categories.begin(), categories.end(), *label);
    return static_cast<double>(it - categories.begin());  // unseen labels land on "other"
  }
  auto x = scalar_of(v);
  return x ? *x : nan;
}

std::size_t Tree::num_leaves() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

Eigen::RowVectorXd GbdtModel::encode(const Property& p) const {
  Eigen::RowVectorXd row(static_cast<Eigen::Index>(features.size()));
  for (std::size_t f = 0; f < features.size(); ++f) {
    row[static_cast<Eigen::Index>(f)] = features[f].encode(p.feature(features[f].name));
  }
  return row;
}

Eigen::MatrixXd GbdtModel::encode(const std::vector<Property>& rows) const {
  Eigen::MatrixXd m(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(features.size()));
  for (std::size_t i = 0; i < rows.size(); ++i) m.row(static_cast<Eigen::Index>(i)) = encode(rows[i]);
  return m;
}

Eigen::VectorXd GbdtModel::predict_rows(const Eigen::MatrixXd& rows) const {
  Eigen::VectorXd out(rows.rows());
  for (Eigen::Index i = 0; i < rows.rows(); ++i) out[i] = predict_row(rows.row(i));
  return out;
}

GbdtModel train(const Dataset& dataset, const TrainParams& params) {
  params.validate();
  const std::size_t n = dataset.records.size();
  if (n < 2 * static_cast<std::size_t>(params.min_samples_leaf)) {
    throw InvalidArgument("train: dataset has " + std::to_string(n) + " records, need at least 2 * min_samples_leaf = " +
                          std::to_string(2 * params.min_samples_leaf));
  }

  GbdtModel model;
  model.property_type = dataset.property_type;
  model.schema_hash = dataset.schema.hash();
  model.features = model_features(dataset);
  model.params = params;
  model.learning_rate = params.learning_rate;
  model.target_transform = params.target_transform;

  Eigen::VectorXd y(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const auto& price = dataset.records[i].unit_price;
    if (!price || !(*price > 0.0)) {
      throw InvalidArgument("train: record '" + dataset.records[i].id + "' lacks a positive unit_price");
    }
    y[static_cast<Eigen::Index>(i)] = model.transform(*price);
  }
  model.base_score = y.mean();
  if (y.maxCoeff() == y.minCoeff()) {
    model.base_score = y[0];
    return model;
  }

  const Eigen::MatrixXd raw = model.encode(dataset.records);
  std::vector<BinMapper> mappers;
  BinMatrix bins(raw.rows(), raw.cols());
  for (Eigen::Index f = 0; f < raw.cols(); ++f) {
    const ModelFeature& mf = model.features[static_cast<std::size_t>(f)];
    BinMapper m;
    if (mf.kind == FeatureKind::Categorical) {
      m.categorical = true;
      m.num_bins = static_cast<int>(mf.categories.size()) + 1;
    } else {
      m = numeric_mapper(raw.col(f), params.feature_histogram_bins);
    }
    for (Eigen::Index i = 0; i < raw.rows(); ++i) bins(i, f) = m.bin(raw(i, f));
    mappers.push_back(std::move(m));
  }

  TreeBuilder builder(bins, mappers, params);
  Eigen::VectorXd pred = Eigen::VectorXd::Constant(y.size(), model.base_score);
  for (int t = 0; t < params.num_trees; ++t) {
    const Eigen::VectorXd g = pred - y;
    std::map<int, std::vector<int>> leaf_rows;
    auto tree = builder.grow(g, leaf_rows);
    if (!tree) break;
    for (const auto& [node, rows] : leaf_rows) {
      const double step = params.learning_rate * tree->nodes[static_cast<std::size_t>(node)].value;
      for (int r : rows) pred[r] += step;
    }
    model.trees.push_back(std::move(*tree));
  }
  return model;
}

double predict(const GbdtModel& model, const FeatureSchema& schema, const Property& property) {
  if (schema.hash() != model.schema_hash) {
    throw SchemaMismatch("model for " + std::string(to_string(model.property_type)) + " was trained on schema " +
                         model.schema_hash + ", serving schema is " + schema.hash());
  }
  return model.predict_row(model.encode(property));
}

Json encode(const GbdtModel& model) {
  Json features = Json::array();
  for (const auto& f : model.features) {
    Json j{{"name", f.name}, {"kind", std::string(to_string(f.kind))}};
    if (f.kind == FeatureKind::Categorical) j["categories"] = f.categories;
    features.push_back(std::move(j));
  }
  Json trees = Json::array();
  for (const auto& t : model.trees) {
    Json feature = Json::array(), categorical = Json::array(), threshold = Json::array(), mask = Json::array(),
         default_left = Json::array(), left = Json::array(), right = Json::array(), value = Json::array(),
         count = Json::array();
    for (const auto& n : t.nodes) {
      feature.push_back(n.feature);
      categorical.push_back(n.categorical ? 1 : 0);
      threshold.push_back(n.threshold);
      mask.push_back(n.left_categories);
      default_left.push_back(n.default_left ? 1 : 0);
      left.push_back(n.left);
      right.push_back(n.right);
      value.push_back(n.value);
      count.push_back(n.sample_count);
    }
    trees.push_back({{"feature", feature},
                     {"categorical", categorical},
                     {"threshold", threshold},
                     {"left_categories", mask},
                     {"default_left", default_left},
                     {"left", left},
                     {"right", right},
                     {"value", value},
                     {"sample_count", count}});
  }
  const TrainParams& p = model.params;
  return Json{{"format", kModelFormat},
              {"version", kModelVersion},
              {"property_type", std::string(to_string(model.property_type))},
              {"schema_hash", model.schema_hash},
              {"params",
               {{"num_trees", p.num_trees},
                {"max_leaves", p.max_leaves},
                {"min_samples_leaf", p.min_samples_leaf},
                {"learning_rate", p.learning_rate},
                {"feature_histogram_bins", p.feature_histogram_bins},
                {"seed", p.seed},
                {"target_transform", std::string(to_string(p.target_transform))}}},
              {"base_score", model.base_score},
              {"learning_rate", model.learning_rate},
              {"target_transform", std::string(to_string(model.target_transform))},
              {"features", std::move(features)},
              {"trees", std::move(trees)}};
}

GbdtModel decode_model(const Json& j) {
  auto transform_of = [](const Json& t) {
    const auto s = t.get<std::string>();
    if (s == "log") return TargetTransform::Log;
    if (s == "identity") return TargetTransform::Identity;
    throw InvalidArgument("model: unknown target_transform '" + s + "'");
  };
  try {
    if (j.at("format") != kModelFormat) throw InvalidArgument("model: unexpected format tag");
    if (j.at("version").get<int>() != kModelVersion) throw InvalidArgument("model: unsupported version");
    GbdtModel m;
    auto type = parse_property_type(j.at("property_type").get<std::string>());
    if (!type) throw InvalidArgument("model: unknown property_type");
    m.property_type = *type;
    m.schema_hash = j.at("schema_hash").get<std::string>();
    const Json& p = j.at("params");
    m.params.num_trees = p.at("num_trees").get<int>();
    m.params.max_leaves = p.at("max_leaves").get<int>();
    m.params.min_samples_leaf = p.at("min_samples_leaf").get<int>();
    m.params.learning_rate = p.at("learning_rate").get<double>();
    m.params.feature_histogram_bins = p.at("feature_histogram_bins").get<int>();
    m.params.seed = p.at("seed").get<std::uint64_t>();
    m.params.target_transform = transform_of(p.at("target_transform"));
    m.base_score = j.at("base_score").get<double>();
    m.learning_rate = j.at("learning_rate").get<double>();
    m.target_transform = transform_of(j.at("target_transform"));
    for (const auto& f : j.at("features")) {
      ModelFeature mf;
      mf.name = f.at("name").get<std::string>();
      auto kind = parse_feature_kind(f.at("kind").get<std::string>());
      if (!kind) throw InvalidArgument("model: bad feature kind");
      mf.kind = *kind;
      if (auto c = f.find("categories"); c != f.end()) mf.categories = c->get<std::vector<std::string>>();
      m.features.push_back(std::move(mf));
    }
    const int num_features = static_cast<int>(m.features.size());
    for (const auto& t : j.at("trees")) {
      const auto& feature = t.at("feature");
      const std::size_t count = feature.size();
      Tree tree;
      tree.nodes.resize(count);
      for (std::size_t i = 0; i < count; ++i) {
        TreeNode& n = tree.nodes[i];
        n.feature = feature.at(i).get<int>();
        n.categorical = t.at("categorical").at(i).get<int>() != 0;
        n.threshold = t.at("threshold").at(i).get<double>();
        n.left_categories = t.at("left_categories").at(i).get<std::uint64_t>();
        n.default_left = t.at("default_left").at(i).get<int>() != 0;
        n.left = t.at("left").at(i).get<int>();
        n.right = t.at("right").at(i).get<int>();
        n.value = t.at("value").at(i).get<double>();
        n.sample_count = t.at("sample_count").at(i).get<int>();
        const int size = static_cast<int>(count);
        if (!n.is_leaf() && (n.feature >= num_features || n.left <= static_cast<int>(i) || n.left >= size ||
                             n.right <= static_cast<int>(i) || n.right >= size)) {
          throw InvalidArgument("model: malformed tree node");
        }
      }
      if (count == 0) throw InvalidArgument("model: empty tree");
      m.trees.push_back(std::move(tree));
    }
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument(std::string("model: ") + e.what());
  }
}

void save_model(const std::filesystem::path& path, const GbdtModel& model) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot write " + path.string());
  out << encode(model).dump() << '\n';
  if (!out) throw IoError("write failed for " + path.string());
}

GbdtModel load_model(const std::filesystem::path& path, const FeatureSchema& schema) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());
  Json j;
  try {
    j = Json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw InvalidArgument("model: " + path.string() + ": " + e.what());
  }
  GbdtModel m = decode_model(j);
  if (m.schema_hash != schema.hash()) {
    throw SchemaMismatch("model " + path.string() + " was trained on schema " + m.schema_hash +
                         ", serving schema is " + schema.hash());
  }
  return m;
}

}  // namespace proval
