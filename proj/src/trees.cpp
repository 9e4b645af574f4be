#include "card/trees.hpp"

#include <algorithm>
#include <cmath>

#include "card/errors.hpp"
#include "card/parallel.hpp"

namespace card {

namespace detail {

double impurity2(double c0, double c1, Impurity kind) {
    const double m = c0 + c1;
    if (kind == Impurity::gini) {
        return 1.0 - (c0 * c0 + c1 * c1) / (m * m);
    }
    double h = 0.0;
    for (const double c : {c0, c1}) {
        if (c > 0.0) {
            const double p = c / m;
            h -= p * std::log2(p);
        }
    }
    return h;
}

std::vector<double> split_candidates(std::span<const double> sorted_values) {
    const std::size_t m = sorted_values.size();
    std::vector<double> points;
    if (m < 2) return points;

    constexpr std::size_t kMaxQuantiles = 32;

    std::size_t distinct = 1;
    for (std::size_t i = 1; i < m && distinct <= kMaxQuantiles; ++i)
        if (sorted_values[i] != sorted_values[i - 1]) ++distinct;

    if (distinct <= kMaxQuantiles) {
        points.reserve(distinct);
        points.push_back(sorted_values[0]);
        for (std::size_t i = 1; i < m; ++i)
            if (sorted_values[i] != sorted_values[i - 1]) points.push_back(sorted_values[i]);
    } else {
        points.reserve(kMaxQuantiles);
        for (std::size_t j = 0; j < kMaxQuantiles; ++j) {
            std::size_t rank = (j + 1) * m / (kMaxQuantiles + 1);
            if (rank >= m) rank = m - 1;
            const double v = sorted_values[rank];
            if (points.empty() || v != points.back()) points.push_back(v);
        }
    }

    std::vector<double> thresholds;
    thresholds.reserve(points.size());
    for (std::size_t i = 0; i + 1 < points.size(); ++i) {
        const double t = 0.5 * (points[i] + points[i + 1]);
        // Midpoints can round onto an endpoint; <= routing keeps them valid
        // as long as something lands on each side, which min_leaf checks.
        if (thresholds.empty() || t != thresholds.back()) thresholds.push_back(t);
    }
    return thresholds;
}

} // namespace detail

double impurity(std::span<const std::size_t> counts, Impurity kind) {
    double total = 0.0;
    for (const std::size_t c : counts) total += static_cast<double>(c);
    if (total <= 0.0) throw config_error("impurity: empty node");
    if (kind == Impurity::gini) {
        double s = 0.0;
        for (const std::size_t c : counts) {
            const double p = static_cast<double>(c) / total;
            s += p * p;
        }
        return 1.0 - s;
    }
    double h = 0.0;
    for (const std::size_t c : counts) {
        if (c > 0) {
            const double p = static_cast<double>(c) / total;
            h -= p * std::log2(p);
        }
    }
    return h;
}

double ClassTree::predict(std::span<const double> x) const {
    if (x.size() != n_features)
        throw internal_error("ClassTree::predict: feature vector has " + std::to_string(x.size()) +
                             " entries, tree expects " + std::to_string(n_features));
    int i = 0;
    while (nodes[i].feature >= 0)
        i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                : nodes[i].right;
    return nodes[i].p1;
}

int ClassTree::depth() const {
    std::vector<std::pair<int, int>> stack{{0, 0}};
    int best = 0;
    while (!stack.empty()) {
        const auto [i, d] = stack.back();
        stack.pop_back();
        best = std::max(best, d);
        if (nodes[i].feature >= 0) {
            stack.push_back({nodes[i].left, d + 1});
            stack.push_back({nodes[i].right, d + 1});
        }
    }
    return best;
}

std::size_t ClassTree::leaf_count() const {
    std::size_t leaves = 0;
    for (const auto& n : nodes)
        if (n.feature < 0) ++leaves;
    return leaves;
}

double predict_proba(const ClassTree& tree, std::span<const double> x) { return tree.predict(x); }

namespace {

struct SplitChoice {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
    double children_weighted = 0.0; // sum of count * impurity over both children
};

// Best admissible split of `rows`, scanning features in ascending order and
// thresholds in ascending order; only strictly better candidates replace the
// incumbent, which realizes the documented tie-break.
SplitChoice best_split(const Matrix& x, std::span<const std::uint8_t> labels,
                       std::span<const std::uint32_t> rows, std::span<const int> features,
                       const ClassTreeParams& params, double parent_weighted,
                       std::vector<std::pair<double, std::uint8_t>>& scratch) {
    SplitChoice best;
    best.children_weighted = parent_weighted;
    const std::size_t m = rows.size();

    for (const int j : features) {
        scratch.clear();
        for (const std::uint32_t r : rows)
            scratch.emplace_back(x.at(r, static_cast<std::size_t>(j)), labels[r]);
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });

        std::vector<double> values(m);
        std::vector<std::uint32_t> prefix1(m + 1, 0);
        for (std::size_t i = 0; i < m; ++i) {
            values[i] = scratch[i].first;
            prefix1[i + 1] = prefix1[i] + scratch[i].second;
        }
        const double total1 = prefix1[m];

        for (const double t : detail::split_candidates(values)) {
            const auto s = static_cast<std::size_t>(
                std::upper_bound(values.begin(), values.end(), t) - values.begin());
            if (s < static_cast<std::size_t>(params.min_leaf) ||
                m - s < static_cast<std::size_t>(params.min_leaf))
                continue;
            const double l1 = prefix1[s];
            const double l0 = static_cast<double>(s) - l1;
            const double r1 = total1 - l1;
            const double r0 = static_cast<double>(m - s) - r1;
            const double w = static_cast<double>(s) * detail::impurity2(l0, l1, params.impurity) +
                             static_cast<double>(m - s) * detail::impurity2(r0, r1, params.impurity);
            if (w < best.children_weighted) {
                best.found = true;
                best.feature = j;
                best.threshold = t;
                best.children_weighted = w;
            }
        }
    }
    return best;
}

int build_node(ClassTree& tree, const Matrix& x, std::span<const std::uint8_t> labels,
               std::vector<std::uint32_t>& rows, std::span<const int> features,
               const ClassTreeParams& params, int depth,
               std::vector<std::pair<double, std::uint8_t>>& scratch) {
    const std::size_t m = rows.size();
    double c1 = 0.0;
    for (const std::uint32_t r : rows) c1 += labels[r];
    const double c0 = static_cast<double>(m) - c1;

    const int slot = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[slot].p1 = c1 / static_cast<double>(m);
    tree.nodes[slot].count = static_cast<std::uint32_t>(m);

    const bool can_split = depth < params.max_depth &&
                           m >= 2 * static_cast<std::size_t>(params.min_leaf) && c0 > 0.0 && c1 > 0.0;
    if (!can_split) return slot;

    const double parent_weighted = static_cast<double>(m) * detail::impurity2(c0, c1, params.impurity);
    const SplitChoice choice = best_split(x, labels, rows, features, params, parent_weighted, scratch);
    if (!choice.found) return slot;

    std::vector<std::uint32_t> left, right;
    left.reserve(m);
    right.reserve(m);
    for (const std::uint32_t r : rows)
        (x.at(r, static_cast<std::size_t>(choice.feature)) <= choice.threshold ? left : right)
            .push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[slot].feature = choice.feature;
    tree.nodes[slot].threshold = choice.threshold;
    const int l = build_node(tree, x, labels, left, features, params, depth + 1, scratch);
    tree.nodes[slot].left = l;
    const int r = build_node(tree, x, labels, right, features, params, depth + 1, scratch);
    tree.nodes[slot].right = r;
    return slot;
}

} // namespace

ClassTree fit_class_tree(const Matrix& features, std::span<const std::uint8_t> labels,
                         std::span<const std::uint32_t> rows, std::span<const int> allowed_features,
                         const ClassTreeParams& params) {
    if (rows.empty()) throw config_error("fit_class_tree: no training rows");
    if (allowed_features.empty()) throw config_error("fit_class_tree: no candidate features");
    if (params.min_leaf < 1) throw config_error("fit_class_tree: min_leaf must be >= 1");
    if (params.max_depth < 0) throw config_error("fit_class_tree: max_depth must be >= 0");

    ClassTree tree;
    tree.n_features = features.cols;
    std::vector<std::uint32_t> root(rows.begin(), rows.end());
    std::vector<std::pair<double, std::uint8_t>> scratch;
    scratch.reserve(rows.size());
    build_node(tree, features, labels, root, allowed_features, params, 0, scratch);
    return tree;
}

ClassTree fit_class_tree(const Matrix& features, std::span<const std::uint8_t> labels,
                         const ClassTreeParams& params) {
    if (features.rows != labels.size())
        throw config_error("fit_class_tree: features/labels size mismatch");
    std::vector<std::uint32_t> rows(features.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    std::vector<int> all(features.cols);
    for (std::size_t j = 0; j < all.size(); ++j) all[j] = static_cast<int>(j);
    return fit_class_tree(features, labels, rows, all, params);
}

double ForestClassifier::predict(std::span<const double> x) const {
    double s = 0.0;
    for (const ClassTree& t : trees) s += t.predict(x);
    return s / static_cast<double>(trees.size());
}

ForestClassifier fit_forest_classifier(const Matrix& features, std::span<const std::uint8_t> labels,
                                       const ForestParams& params, Rng& rng, int workers) {
    if (params.n_trees < 1) throw config_error("fit_forest_classifier: n_trees must be >= 1");
    if (features.rows != labels.size())
        throw config_error("fit_forest_classifier: features/labels size mismatch");
    const std::size_t q = features.cols;
    const int fsub = params.feature_subsample == 0
                         ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(q))))
                         : params.feature_subsample;
    if (fsub < 1 || static_cast<std::size_t>(fsub) > q)
        throw config_error("fit_forest_classifier: feature_subsample outside [1, #features]");

    const std::uint64_t master = rng();
    const std::size_t m = features.rows;

    ForestClassifier forest;
    forest.n_features = q;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

    const ClassTreeParams tree_params{params.max_depth, params.min_leaf, params.impurity};
    parallel_for(forest.trees.size(), workers, [&](std::size_t i) {
        Rng eng(seed_combine(master, i));
        std::vector<std::uint32_t> rows(m);
        if (params.bootstrap) {
            std::uniform_int_distribution<std::uint32_t> pick(0, static_cast<std::uint32_t>(m - 1));
            for (auto& r : rows) r = pick(eng);
        } else {
            for (std::size_t r = 0; r < m; ++r) rows[r] = static_cast<std::uint32_t>(r);
        }
        std::vector<int> feats;
        feats.reserve(static_cast<std::size_t>(fsub));
        for (const std::size_t f : sample_without_replacement(q, static_cast<std::size_t>(fsub), eng))
            feats.push_back(static_cast<int>(f));
        std::sort(feats.begin(), feats.end());
        forest.trees[i] = fit_class_tree(features, labels, rows, feats, tree_params);
    });
    return forest;
}

} // namespace card
