#include "sentclass/forest.hpp"

#include <algorithm>
#include <atomic>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "sentclass/error.hpp"
#include "sentclass/rng.hpp"

namespace sentclass {

double gini(int64_t c0, int64_t c1) {
  if (c0 < 0 || c1 < 0) fail("gini: negative count");
  const int64_t n = c0 + c1;
  if (n == 0) fail("gini: empty node");
  const double p0 = static_cast<double>(c0) / static_cast<double>(n);
  const double p1 = static_cast<double>(c1) / static_cast<double>(n);
  return 1.0 - (p0 * p0 + p1 * p1);
}

namespace {

// Split quality is compared exactly: minimizing weighted Gini over a binary
// partition equals maximizing Q = sL/nL + sR/nR with s = c0^2 + c1^2, and Q
// is a ratio of 64-bit integers, so candidates are ranked by 128-bit
// cross-multiplication instead of floating point. This makes the tie rule
// exact and the brute-force oracle bit-for-bit reproducible.
struct SplitScore {
  __int128 num = -1;  // sL*nR + sR*nL
  __int128 den = 1;   // nL*nR

  static SplitScore from_counts(int64_t l0, int64_t l1, int64_t r0, int64_t r1) {
    const __int128 nl = l0 + l1;
    const __int128 nr = r0 + r1;
    SplitScore s;
    s.num = (static_cast<__int128>(l0) * l0 + static_cast<__int128>(l1) * l1) * nr +
            (static_cast<__int128>(r0) * r0 + static_cast<__int128>(r1) * r1) * nl;
    s.den = nl * nr;
    return s;
  }

  bool better_than(const SplitScore& other) const { return num * other.den > other.num * den; }
};

}  // namespace

std::optional<SplitChoice> best_split(const FeatureMatrix& features, std::span<const int> labels,
                                      std::span<const int> indices,
                                      std::span<const int> feature_subset, int min_leaf) {
  const int64_t n = static_cast<int64_t>(indices.size());
  if (n < 2) return std::nullopt;

  SplitScore best_score;
  SplitChoice best;
  std::array<int64_t, 2> l_counts{};
  std::array<int64_t, 2> r_counts{};
  bool found = false;

  std::vector<std::pair<double, int>> order(indices.size());  // (value, label)
  for (int f : feature_subset) {
    for (size_t i = 0; i < indices.size(); ++i) {
      order[i] = {features.at(indices[i], f), labels[static_cast<size_t>(indices[i])]};
    }
    std::sort(order.begin(), order.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    l_counts = {0, 0};
    r_counts = {0, 0};
    for (const auto& [value, label] : order) ++r_counts[static_cast<size_t>(label)];

    for (size_t i = 0; i + 1 < order.size(); ++i) {
      ++l_counts[static_cast<size_t>(order[i].second)];
      --r_counts[static_cast<size_t>(order[i].second)];
      if (order[i].first == order[i + 1].first) continue;  // no boundary here
      const int64_t nl = static_cast<int64_t>(i) + 1;
      const int64_t nr = n - nl;
      if (nl < min_leaf || nr < min_leaf) continue;
      SplitScore score = SplitScore::from_counts(l_counts[0], l_counts[1], r_counts[0], r_counts[1]);
      // features ascend and thresholds ascend, so strict improvement
      // implements the (feature, threshold) tie rule
      if (!found || score.better_than(best_score)) {
        found = true;
        best_score = score;
        best.feature = f;
        best.threshold = order[i].first + (order[i + 1].first - order[i].first) / 2.0;
        const int64_t total = nl + nr;
        best.child_impurity = (static_cast<double>(nl) * gini(l_counts[0], l_counts[1]) +
                               static_cast<double>(nr) * gini(r_counts[0], r_counts[1])) /
                              static_cast<double>(total);
      }
    }
  }
  if (!found) return std::nullopt;
  return best;
}

namespace {

int majority_class(const std::array<int64_t, 2>& counts) {
  return counts[1] > counts[0] ? 1 : 0;  // tie -> class 0
}

TreeNode grow_node(const FeatureMatrix& features, std::span<const int> labels,
                   std::vector<int>& indices, const ForestConfig& config, int n_features,
                   int features_per_split, int depth, std::mt19937_64& rng) {
  TreeNode node;
  for (int idx : indices) ++node.counts[static_cast<size_t>(labels[static_cast<size_t>(idx)])];
  node.predicted = majority_class(node.counts);

  const bool pure = node.counts[0] == 0 || node.counts[1] == 0;
  const bool depth_stop = config.max_depth >= 0 && depth >= config.max_depth;
  const bool size_stop = static_cast<int>(indices.size()) < 2 * config.min_samples_leaf ||
                         indices.size() < 2;
  if (pure || depth_stop || size_stop) return node;

  std::vector<int> subset = sample_without_replacement(n_features, features_per_split, rng);
  auto split = best_split(features, labels, indices, subset, config.min_samples_leaf);
  if (!split) return node;

  std::vector<int> left_idx, right_idx;
  for (int idx : indices) {
    if (features.at(idx, split->feature) <= split->threshold) {
      left_idx.push_back(idx);
    } else {
      right_idx.push_back(idx);
    }
  }
  node.feature = split->feature;
  node.threshold = split->threshold;
  node.left = std::make_unique<TreeNode>(
      grow_node(features, labels, left_idx, config, n_features, features_per_split, depth + 1, rng));
  node.right = std::make_unique<TreeNode>(grow_node(features, labels, right_idx, config, n_features,
                                                    features_per_split, depth + 1, rng));
  return node;
}

int resolve_features_per_split(const ForestConfig& config, int n_features) {
  int k = config.features_per_split;
  if (k <= 0) k = static_cast<int>(std::ceil(std::sqrt(static_cast<double>(n_features))));
  return std::clamp(k, 1, n_features);
}

}  // namespace

TreeNode grow_tree(const FeatureMatrix& features, std::span<const int> labels,
                   std::vector<int> indices, const ForestConfig& config, int n_features,
                   std::mt19937_64& rng) {
  if (indices.empty()) fail("grow_tree: no samples");
  return grow_node(features, labels, indices, config, n_features,
                   resolve_features_per_split(config, n_features), 0, rng);
}

Forest train_forest(const FeatureMatrix& features, std::span<const int> labels,
                    const ForestConfig& config, std::vector<std::string> feature_names) {
  const int n = features.n_rows;
  if (n < 2) fail("train_forest: need at least 2 samples");
  std::array<int64_t, 2> counts{0, 0};
  for (int label : labels) ++counts[static_cast<size_t>(label)];
  if (counts[0] == 0 || counts[1] == 0) fail("train_forest: training labels are single-class");
  if (config.n_trees < 1) fail("train_forest: n_trees must be >= 1");

  Forest forest;
  forest.config = config;
  forest.n_features = features.n_cols;
  forest.feature_names = std::move(feature_names);
  forest.trees.resize(static_cast<size_t>(config.n_trees));

  // each tree draws everything from its own (seed, t) substream, so the
  // result is identical under any worker count
  auto build_tree = [&](int t) {
    auto rng = substream(config.seed, "bootstrap", static_cast<uint64_t>(t));
    std::vector<int> sample(static_cast<size_t>(n));
    for (int i = 0; i < n; ++i) {
      sample[static_cast<size_t>(i)] = static_cast<int>(uniform_index(rng, static_cast<uint64_t>(n)));
    }
    forest.trees[static_cast<size_t>(t)] =
        grow_tree(features, labels, std::move(sample), config, features.n_cols, rng);
  };

  const int workers = std::max(1, config.workers);
  if (workers == 1) {
    for (int t = 0; t < config.n_trees; ++t) build_tree(t);
  } else {
    std::vector<std::thread> pool;
    std::atomic<int> next{0};
    for (int w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (int t = next.fetch_add(1); t < config.n_trees; t = next.fetch_add(1)) build_tree(t);
      });
    }
    for (auto& th : pool) th.join();
  }
  return forest;
}

ForestVote predict_forest(const Forest& forest, std::span<const double> x) {
  if (static_cast<int>(x.size()) != forest.n_features) {
    fail("predict_forest: expected " + std::to_string(forest.n_features) + " features, got " +
         std::to_string(x.size()));
  }
  ForestVote vote;
  for (const TreeNode& root : forest.trees) {
    const TreeNode* node = &root;
    while (!node->is_leaf()) {
      node = x[static_cast<size_t>(node->feature)] <= node->threshold ? node->left.get()
                                                                      : node->right.get();
    }
    ++vote.votes[static_cast<size_t>(node->predicted)];
  }
  vote.label = vote.votes[1] > vote.votes[0] ? 1 : 0;  // tie -> class 0
  return vote;
}

namespace {

constexpr const char* kForestMagic = "sentclass-forest";
constexpr int kForestVersion = 1;

void save_node(const TreeNode& node, std::ostream& out) {
  char buf[64];
  if (node.is_leaf()) {
    out << "l " << node.counts[0] << ' ' << node.counts[1] << ' ' << node.predicted << '\n';
    return;
  }
  std::snprintf(buf, sizeof(buf), "%.17g", node.threshold);
  out << "n " << node.feature << ' ' << buf << ' ' << node.counts[0] << ' ' << node.counts[1]
      << '\n';
  save_node(*node.left, out);
  save_node(*node.right, out);
}

TreeNode load_node(std::istream& in) {
  std::string kind;
  if (!(in >> kind)) fail("forest file truncated inside a tree");
  TreeNode node;
  if (kind == "l") {
    if (!(in >> node.counts[0] >> node.counts[1] >> node.predicted)) {
      fail("forest file: bad leaf record");
    }
    return node;
  }
  if (kind != "n") fail("forest file: unknown node kind '" + kind + "'");
  if (!(in >> node.feature >> node.threshold >> node.counts[0] >> node.counts[1])) {
    fail("forest file: bad internal node record");
  }
  node.predicted = majority_class(node.counts);
  node.left = std::make_unique<TreeNode>(load_node(in));
  node.right = std::make_unique<TreeNode>(load_node(in));
  return node;
}

}  // namespace

void save_forest(const Forest& forest, std::ostream& out) {
  out << kForestMagic << " v" << kForestVersion << '\n';
  out << "n_trees " << forest.config.n_trees << '\n';
  out << "max_depth " << forest.config.max_depth << '\n';
  out << "min_samples_leaf " << forest.config.min_samples_leaf << '\n';
  out << "features_per_split " << forest.config.features_per_split << '\n';
  out << "seed " << forest.config.seed << '\n';
  out << "n_features " << forest.n_features << '\n';
  out << "feature_names";
  for (const std::string& name : forest.feature_names) out << ' ' << name;
  out << '\n';
  for (const TreeNode& tree : forest.trees) {
    out << "tree\n";
    save_node(tree, out);
  }
}

Forest load_forest(std::istream& in) {
  std::string magic, version;
  if (!(in >> magic >> version) || magic != kForestMagic) {
    fail("not a forest file (bad magic)");
  }
  if (version != "v" + std::to_string(kForestVersion)) {
    fail("unsupported forest file version '" + version + "'");
  }
  Forest forest;
  std::string key;
  while (in >> key) {
    if (key == "tree") {
      forest.trees.push_back(load_node(in));
    } else if (key == "n_trees") {
      in >> forest.config.n_trees;
    } else if (key == "max_depth") {
      in >> forest.config.max_depth;
    } else if (key == "min_samples_leaf") {
      in >> forest.config.min_samples_leaf;
    } else if (key == "features_per_split") {
      in >> forest.config.features_per_split;
    } else if (key == "seed") {
      in >> forest.config.seed;
    } else if (key == "n_features") {
      in >> forest.n_features;
    } else if (key == "feature_names") {
      std::string rest;
      std::getline(in, rest);
      std::istringstream names(rest);
      std::string name;
      while (names >> name) forest.feature_names.push_back(name);
    } else {
      fail("forest file: unknown key '" + key + "'");
    }
    if (in.fail()) fail("forest file: malformed value after '" + key + "'");
  }
  if (static_cast<int>(forest.trees.size()) != forest.config.n_trees) {
    fail("forest file truncated: expected " + std::to_string(forest.config.n_trees) +
         " trees, found " + std::to_string(forest.trees.size()));
  }
  return forest;
}

}  // namespace sentclass
