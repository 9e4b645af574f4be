#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "card/matrix.hpp"
#include "card/rng.hpp"
#include "card/trees.hpp"

namespace card {

/// The response-classification subtrees at the bottom of a responder tree
/// are always this shallow.
inline constexpr int kResponseSubtreeDepth = 2;

struct ResponderForestParams {
    int n_trees = 100;
    int max_x_depth = 5;
    int min_leaf = 20;
    int feature_subsample = 0; // 0 -> ceil(sqrt(p))
    Impurity impurity = Impurity::gini;
    double min_loss_decrease = 1e-4;
    bool bootstrap = true;
};

/// Training sample for the scorer: covariates drive the partition, the
/// response drives the per-leaf subtrees, and cls marks the class to be
/// discriminated (1 = target side).
struct ScorerSample {
    Matrix x;
    std::vector<double> y;
    std::vector<std::uint8_t> cls;
};

/// A binary partition tree over covariates whose terminal leaves each hold a
/// depth-2 classification tree on the response alone.
struct ResponderNode {
    int feature = -1; // -1 marks a terminal x-leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::uint32_t count = 0;
    ClassTree response_tree; // populated at terminal leaves
};

struct ResponderTree {
    std::vector<ResponderNode> nodes;
    std::size_t n_features = 0;

    /// Routes x to its terminal leaf, then y through that leaf's response
    /// tree; returns the terminal class-1 proportion.
    double predict(std::span<const double> x, double y) const;
    int x_depth() const;
};

struct ResponderForest {
    std::vector<ResponderTree> trees;
    std::size_t n_features = 0;
    ResponderForestParams params;
};

/// Responses of one partition leaf, split by class.
struct ResponderLeafSample {
    std::vector<double> y0; // class-0 responses in the leaf
    std::vector<double> y1; // class-1 responses in the leaf
};

/// Loss of a single leaf: a depth-2 response tree is fit to classify y1
/// against y0 and its count-weighted terminal impurity, divided by the leaf
/// size, is returned. A single-class leaf has loss 0.
double responder_leaf_loss(std::span<const double> y0, std::span<const double> y1, Impurity kind);

/// Partition loss: sum over leaves of c_l * leaf loss, where c_l is the
/// leaf's share of all observations.
double responder_loss(std::span<const ResponderLeafSample> leaves, Impurity kind);

/// Greedy recursive partitioning on x. A split is kept only when it lowers
/// the partition loss by more than min_loss_decrease and both children hold
/// at least min_leaf observations. Fully deterministic.
ResponderTree fit_responder_tree(const ScorerSample& d, const ResponderForestParams& params);

/// Ensemble of responder trees on bootstrap rows and per-tree feature
/// subsamples. Per-tree streams derive from one draw of `rng`, so results
/// are identical for any worker count.
ResponderForest fit_responder_forest(const ScorerSample& d, const ResponderForestParams& params,
                                     Rng& rng, int workers = 1);

/// Mean prediction across trees; always in [0,1].
double score(const ResponderForest& f, std::span<const double> x, double y);

/// Serializes the fitted model (thresholds, counts, leaf proportions) for
/// inspection. The format is documented in the README and not bit-critical.
std::string to_json(const ResponderForest& f);

} // namespace card
