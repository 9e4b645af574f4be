#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "card/matrix.hpp"
#include "card/rng.hpp"

namespace card {

enum class Impurity { gini, entropy };

/// Node impurity from per-class counts. Gini: 1 - sum p_c^2.
/// Entropy in bits, with 0*log(0) = 0. Empty nodes are a caller error.
double impurity(std::span<const std::size_t> counts, Impurity kind);

struct ClassTreeParams {
    int max_depth = 8;
    int min_leaf = 5;
    Impurity impurity = Impurity::gini;
};

/// Flat binary classification tree. nodes[0] is the root; leaves carry the
/// class-1 proportion of their training samples. Routing: value <= threshold
/// goes left.
struct ClassTreeNode {
    int feature = -1; // -1 marks a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double p1 = 0.0;
    std::uint32_t count = 0;
};

struct ClassTree {
    std::vector<ClassTreeNode> nodes;
    std::size_t n_features = 0;

    double predict(std::span<const double> x) const;
    int depth() const;
    std::size_t leaf_count() const;
};

/// Greedy CART induction over all features. Splits are accepted only when
/// the count-weighted impurity strictly decreases; ties break toward the
/// lowest feature index, then the smallest threshold, so induction is
/// deterministic.
ClassTree fit_class_tree(const Matrix& features, std::span<const std::uint8_t> labels,
                         const ClassTreeParams& params);

/// As above, restricted to the given rows (repeats allowed, e.g. bootstrap
/// draws) and candidate features.
ClassTree fit_class_tree(const Matrix& features, std::span<const std::uint8_t> labels,
                         std::span<const std::uint32_t> rows, std::span<const int> allowed_features,
                         const ClassTreeParams& params);

/// Spec-level alias for ClassTree::predict.
double predict_proba(const ClassTree& tree, std::span<const double> x);

struct ForestParams {
    int n_trees = 100;
    int max_depth = 8;
    int min_leaf = 5;
    int feature_subsample = 0; // 0 -> ceil(sqrt(#features))
    Impurity impurity = Impurity::gini;
    bool bootstrap = true;
};

struct ForestClassifier {
    std::vector<ClassTree> trees;
    std::size_t n_features = 0;

    /// Mean of per-tree leaf proportions; always in [0,1].
    double predict(std::span<const double> x) const;
};

/// Random forest: per tree, a bootstrap resample (when enabled) and a uniform
/// feature subsample, each driven by a tree-specific stream derived from one
/// draw of `rng`. Output is identical for any worker count.
ForestClassifier fit_forest_classifier(const Matrix& features, std::span<const std::uint8_t> labels,
                                       const ForestParams& params, Rng& rng, int workers = 1);

namespace detail {

/// Candidate split thresholds for one feature, from the node's sorted values:
/// midpoints of consecutive distinct values when there are at most 32 of
/// them, otherwise midpoints of up to 32 nearest-rank quantiles.
std::vector<double> split_candidates(std::span<const double> sorted_values);

/// Two-class impurity from raw counts (total = c0 + c1 > 0).
double impurity2(double c0, double c1, Impurity kind);

} // namespace detail

} // namespace card
