#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "sentclass/features.hpp"

namespace sentclass {

// Binary Gini impurity from class counts. Throws when both counts are zero.
double gini(int64_t c0, int64_t c1);

struct SplitChoice {
  int feature = -1;
  double threshold = 0;
  double child_impurity = 0;  // (nL*gini(L) + nR*gini(R)) / n
};

// Candidate thresholds are midpoints between consecutive distinct values.
// Minimizes weighted child impurity; ties go to the lower feature index,
// then the lower threshold. Splits leaving a child below min_leaf are not
// considered. nullopt when nothing separates the samples.
std::optional<SplitChoice> best_split(const FeatureMatrix& features, std::span<const int> labels,
                                      std::span<const int> indices,
                                      std::span<const int> feature_subset, int min_leaf = 1);

struct TreeNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0;
  std::unique_ptr<TreeNode> left, right;  // x[feature] <= threshold goes left
  std::array<int64_t, 2> counts{0, 0};
  int predicted = 0;  // majority class, tie -> 0

  bool is_leaf() const { return feature < 0; }
};

struct ForestConfig {
  int n_trees = 100;
  int max_depth = -1;          // -1 = unlimited
  int min_samples_leaf = 2;
  int features_per_split = 0;  // 0 = ceil(sqrt(n_features))
  uint64_t seed = 1;
  int workers = 1;
};

TreeNode grow_tree(const FeatureMatrix& features, std::span<const int> labels,
                   std::vector<int> indices, const ForestConfig& config, int n_features,
                   std::mt19937_64& rng);

struct Forest {
  std::vector<TreeNode> trees;
  ForestConfig config;
  int n_features = 0;
  std::vector<std::string> feature_names;
};

// Bagging: tree t grows on a size-n bootstrap drawn from the substream for
// (seed, t), so the result does not depend on worker count.
Forest train_forest(const FeatureMatrix& features, std::span<const int> labels,
                    const ForestConfig& config,
                    std::vector<std::string> feature_names = {});

struct ForestVote {
  int label = 0;
  std::array<int, 2> votes{0, 0};
};

ForestVote predict_forest(const Forest& forest, std::span<const double> x);

// Versioned text serialization; thresholds carry 17 significant digits so a
// round trip predicts identically.
void save_forest(const Forest& forest, std::ostream& out);
Forest load_forest(std::istream& in);

}  // namespace sentclass
