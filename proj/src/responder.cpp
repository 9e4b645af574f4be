#include "card/responder.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "card/errors.hpp"
#include "card/parallel.hpp"

namespace card {

namespace {

// Depth-2 induction on the response works on a y-sorted view of one node's
// samples: sorted values plus prefix class-1 counts. Candidate thresholds and
// split boundaries then come from binary searches on the value array.
struct ResponseView {
    std::vector<double> y;            // ascending
    std::vector<std::uint32_t> ones;  // ones[i] = # class-1 among first i entries
};

void load_view(std::span<const std::uint32_t> idx, const std::vector<double>& y,
               const std::vector<std::uint8_t>& cls, ResponseView& view) {
    const std::size_t m = idx.size();
    view.y.resize(m);
    for (std::size_t i = 0; i < m; ++i) view.y[i] = y[idx[i]];
    view.ones.resize(m + 1);
    view.ones[0] = 0;
    for (std::size_t i = 0; i < m; ++i) view.ones[i + 1] = view.ones[i] + cls[idx[i]];
}

struct RangeSplit {
    bool split = false;
    double threshold = 0.0;
    std::size_t boundary = 0;   // first index of the right child
    double loss_w = 0.0;        // count-weighted impurity after the decision
};

double range_leaf_w(const ResponseView& v, std::size_t lo, std::size_t hi, Impurity kind) {
    const double m = static_cast<double>(hi - lo);
    const double c1 = static_cast<double>(v.ones[hi] - v.ones[lo]);
    return m * detail::impurity2(m - c1, c1, kind);
}

// Best single split of [lo, hi), or a leaf when nothing strictly improves.
// Thresholds scan ascending so equal-loss candidates resolve to the smallest.
RangeSplit best_response_split(const ResponseView& v, std::size_t lo, std::size_t hi, Impurity kind,
                               std::vector<double>& cand_scratch) {
    RangeSplit best;
    best.loss_w = range_leaf_w(v, lo, hi, kind);
    const std::size_t m = hi - lo;
    const double ones = static_cast<double>(v.ones[hi] - v.ones[lo]);
    if (m < 2 || ones == 0.0 || ones == static_cast<double>(m)) return best;

    cand_scratch = detail::split_candidates(std::span<const double>(v.y.data() + lo, m));
    for (const double t : cand_scratch) {
        const auto s = static_cast<std::size_t>(
            std::upper_bound(v.y.begin() + lo, v.y.begin() + hi, t) - v.y.begin());
        if (s == lo || s == hi) continue;
        const double l1 = static_cast<double>(v.ones[s] - v.ones[lo]);
        const double l0 = static_cast<double>(s - lo) - l1;
        const double r1 = ones - l1;
        const double r0 = static_cast<double>(hi - s) - r1;
        const double w = static_cast<double>(s - lo) * detail::impurity2(l0, l1, kind) +
                         static_cast<double>(hi - s) * detail::impurity2(r0, r1, kind);
        if (w < best.loss_w) {
            best.split = true;
            best.threshold = t;
            best.boundary = s;
            best.loss_w = w;
        }
    }
    return best;
}

struct ResponseFit {
    double loss_w = 0.0;                 // summed count-weighted terminal impurity
    RangeSplit root, left, right;        // greedy depth-2 decisions
};

// Greedy depth-2 fit: root split by one-level impurity, then each child
// decides independently. Matches the generic CART acceptance rule.
ResponseFit fit_response_range(const ResponseView& v, std::size_t lo, std::size_t hi, Impurity kind,
                               std::vector<double>& cand_scratch) {
    ResponseFit fit;
    fit.root = best_response_split(v, lo, hi, kind, cand_scratch);
    if (!fit.root.split) {
        fit.loss_w = fit.root.loss_w;
        return fit;
    }
    fit.left = best_response_split(v, lo, fit.root.boundary, kind, cand_scratch);
    fit.right = best_response_split(v, fit.root.boundary, hi, kind, cand_scratch);
    fit.loss_w = fit.left.loss_w + fit.right.loss_w;
    return fit;
}

// Expands the depth-2 decisions into a ClassTree over the single feature y.
ClassTree build_response_tree(const ResponseView& v, std::size_t lo, std::size_t hi,
                              const ResponseFit& fit) {
    ClassTree tree;
    tree.n_features = 1;
    auto leaf = [&](std::size_t a, std::size_t b) {
        ClassTreeNode node;
        node.count = static_cast<std::uint32_t>(b - a);
        node.p1 = static_cast<double>(v.ones[b] - v.ones[a]) / static_cast<double>(b - a);
        tree.nodes.push_back(node);
        return static_cast<int>(tree.nodes.size() - 1);
    };
    auto child = [&](std::size_t a, std::size_t b, const RangeSplit& s) {
        if (!s.split) return leaf(a, b);
        ClassTreeNode node;
        node.feature = 0;
        node.threshold = s.threshold;
        node.count = static_cast<std::uint32_t>(b - a);
        node.p1 = static_cast<double>(v.ones[b] - v.ones[a]) / static_cast<double>(b - a);
        tree.nodes.push_back(node);
        const int slot = static_cast<int>(tree.nodes.size() - 1);
        tree.nodes[slot].left = leaf(a, s.boundary);
        tree.nodes[slot].right = leaf(s.boundary, b);
        return slot;
    };
    if (!fit.root.split) {
        leaf(lo, hi);
        return tree;
    }
    ClassTreeNode root;
    root.feature = 0;
    root.threshold = fit.root.threshold;
    root.count = static_cast<std::uint32_t>(hi - lo);
    root.p1 = static_cast<double>(v.ones[hi] - v.ones[lo]) / static_cast<double>(hi - lo);
    tree.nodes.push_back(root);
    tree.nodes[0].left = child(lo, fit.root.boundary, fit.left);
    tree.nodes[0].right = child(fit.root.boundary, hi, fit.right);
    return tree;
}

double response_loss_w(std::span<const std::uint32_t> idx, const std::vector<double>& y,
                       const std::vector<std::uint8_t>& cls, Impurity kind, ResponseView& view,
                       std::vector<double>& cand_scratch) {
    load_view(idx, y, cls, view);
    return fit_response_range(view, 0, idx.size(), kind, cand_scratch).loss_w;
}

struct TreeBuilder {
    const ScorerSample& d;
    const ResponderForestParams& params;
    std::span<const int> features;
    double total; // training sample count, fixed over the recursion
    ResponderTree tree;

    ResponseView view, view_l, view_r;
    std::vector<double> cand_scratch;
    std::vector<double> feature_values;
    std::vector<std::uint32_t> part_left, part_right;

    int build(std::vector<std::uint32_t>& idx, int depth) {
        const std::size_t m = idx.size();
        const int slot = static_cast<int>(tree.nodes.size());
        tree.nodes.emplace_back();
        tree.nodes[slot].count = static_cast<std::uint32_t>(m);

        const double parent_w =
            response_loss_w(idx, d.y, d.cls, params.impurity, view, cand_scratch);

        bool split_found = false;
        int best_feature = -1;
        double best_threshold = 0.0;
        double best_children_w = 0.0;
        if (depth < params.max_x_depth && m >= 2 * static_cast<std::size_t>(params.min_leaf)) {
            // Accept a split only if it beats the parent by more than the
            // normalized decrease floor; candidates scan in (feature,
            // threshold) order so equal-loss splits resolve deterministically.
            best_children_w = parent_w - params.min_loss_decrease * total;
            for (const int j : features) {
                feature_values.resize(m);
                for (std::size_t i = 0; i < m; ++i)
                    feature_values[i] = d.x.at(idx[i], static_cast<std::size_t>(j));
                std::sort(feature_values.begin(), feature_values.end());
                for (const double t : detail::split_candidates(feature_values)) {
                    part_left.clear();
                    part_right.clear();
                    for (const std::uint32_t r : idx)
                        (d.x.at(r, static_cast<std::size_t>(j)) <= t ? part_left : part_right)
                            .push_back(r);
                    if (part_left.size() < static_cast<std::size_t>(params.min_leaf) ||
                        part_right.size() < static_cast<std::size_t>(params.min_leaf))
                        continue;
                    const double w =
                        response_loss_w(part_left, d.y, d.cls, params.impurity, view_l, cand_scratch) +
                        response_loss_w(part_right, d.y, d.cls, params.impurity, view_r, cand_scratch);
                    if (w < best_children_w) {
                        split_found = true;
                        best_feature = j;
                        best_threshold = t;
                        best_children_w = w;
                    }
                }
            }
        }

        if (!split_found) {
            load_view(idx, d.y, d.cls, view);
            const ResponseFit fit = fit_response_range(view, 0, m, params.impurity, cand_scratch);
            tree.nodes[slot].response_tree = build_response_tree(view, 0, m, fit);
            return slot;
        }

        std::vector<std::uint32_t> left, right;
        left.reserve(m);
        for (const std::uint32_t r : idx)
            (d.x.at(r, static_cast<std::size_t>(best_feature)) <= best_threshold ? left : right)
                .push_back(r);
        idx.clear();
        idx.shrink_to_fit();

        tree.nodes[slot].feature = best_feature;
        tree.nodes[slot].threshold = best_threshold;
        const int l = build(left, depth + 1);
        tree.nodes[slot].left = l;
        const int r = build(right, depth + 1);
        tree.nodes[slot].right = r;
        return slot;
    }
};

void check_sample(const ScorerSample& d) {
    if (d.x.rows != d.y.size() || d.y.size() != d.cls.size())
        throw config_error("responder: x, y and cls must have the same number of rows");
    if (d.y.empty()) throw config_error("responder: empty training sample");
    if (d.x.cols == 0) throw config_error("responder: needs at least one covariate");
}

ResponderTree fit_tree_on(const ScorerSample& d, const ResponderForestParams& params,
                          std::vector<std::uint32_t> rows, std::span<const int> features) {
    // y-sorted order is maintained through every partition, so response fits
    // never re-sort.
    std::sort(rows.begin(), rows.end(),
              [&](std::uint32_t a, std::uint32_t b) { return d.y[a] < d.y[b]; });
    TreeBuilder builder{d, params, features, static_cast<double>(rows.size()), {}, {}, {}, {}, {}, {}, {}, {}};
    builder.tree.n_features = d.x.cols;
    builder.build(rows, 0);
    return std::move(builder.tree);
}

} // namespace

double responder_leaf_loss(std::span<const double> y0, std::span<const double> y1, Impurity kind) {
    const std::size_t m = y0.size() + y1.size();
    if (m == 0) throw config_error("responder_leaf_loss: empty leaf");
    std::vector<std::pair<double, std::uint8_t>> rows;
    rows.reserve(m);
    for (const double v : y0) rows.emplace_back(v, 0);
    for (const double v : y1) rows.emplace_back(v, 1);
    std::sort(rows.begin(), rows.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    ResponseView view;
    view.y.resize(m);
    view.ones.resize(m + 1);
    view.ones[0] = 0;
    for (std::size_t i = 0; i < m; ++i) {
        view.y[i] = rows[i].first;
        view.ones[i + 1] = view.ones[i] + rows[i].second;
    }
    std::vector<double> scratch;
    return fit_response_range(view, 0, m, kind, scratch).loss_w / static_cast<double>(m);
}

double responder_loss(std::span<const ResponderLeafSample> leaves, Impurity kind) {
    if (leaves.empty()) throw config_error("responder_loss: empty partition");
    std::size_t total = 0;
    for (const auto& leaf : leaves) {
        if (leaf.y0.empty() && leaf.y1.empty()) throw config_error("responder_loss: empty leaf");
        total += leaf.y0.size() + leaf.y1.size();
    }
    double loss = 0.0;
    for (const auto& leaf : leaves) {
        const double m = static_cast<double>(leaf.y0.size() + leaf.y1.size());
        loss += (m / static_cast<double>(total)) * responder_leaf_loss(leaf.y0, leaf.y1, kind);
    }
    return loss;
}

ResponderTree fit_responder_tree(const ScorerSample& d, const ResponderForestParams& params) {
    check_sample(d);
    if (params.min_leaf < 1) throw config_error("responder: min_leaf must be >= 1");
    if (params.max_x_depth < 0) throw config_error("responder: max_x_depth must be >= 0");
    if (params.min_loss_decrease < 0) throw config_error("responder: min_loss_decrease must be >= 0");

    std::vector<std::uint32_t> rows(d.y.size());
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    std::vector<int> features(d.x.cols);
    for (std::size_t j = 0; j < features.size(); ++j) features[j] = static_cast<int>(j);
    return fit_tree_on(d, params, std::move(rows), features);
}

ResponderForest fit_responder_forest(const ScorerSample& d, const ResponderForestParams& params,
                                     Rng& rng, int workers) {
    check_sample(d);
    if (params.n_trees < 1) throw config_error("responder: n_trees must be >= 1");
    const std::size_t p = d.x.cols;
    const int fsub = params.feature_subsample == 0
                         ? static_cast<int>(std::ceil(std::sqrt(static_cast<double>(p))))
                         : params.feature_subsample;
    if (fsub < 1 || static_cast<std::size_t>(fsub) > p)
        throw config_error("responder: feature_subsample outside [1, p]");

    const std::uint64_t master = rng();
    const std::size_t m = d.y.size();

    ResponderForest forest;
    forest.n_features = p;
    forest.params = params;
    forest.trees.resize(static_cast<std::size_t>(params.n_trees));

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
        for (const std::size_t f : sample_without_replacement(p, static_cast<std::size_t>(fsub), eng))
            feats.push_back(static_cast<int>(f));
        std::sort(feats.begin(), feats.end());
        forest.trees[i] = fit_tree_on(d, params, std::move(rows), feats);
    });
    return forest;
}

double ResponderTree::predict(std::span<const double> x, double y) const {
    if (x.size() != n_features)
        throw internal_error("ResponderTree::predict: covariate vector has " +
                             std::to_string(x.size()) + " entries, tree expects " +
                             std::to_string(n_features));
    int i = 0;
    while (nodes[i].feature >= 0)
        i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                : nodes[i].right;
    const double yv[1] = {y};
    return nodes[i].response_tree.predict(yv);
}

int ResponderTree::x_depth() const {
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

double score(const ResponderForest& f, std::span<const double> x, double y) {
    double s = 0.0;
    for (const ResponderTree& t : f.trees) s += t.predict(x, y);
    return s / static_cast<double>(f.trees.size());
}

namespace {

nlohmann::json class_tree_json(const ClassTree& t) {
    nlohmann::json nodes = nlohmann::json::array();
    for (const auto& n : t.nodes) {
        nlohmann::json j;
        if (n.feature >= 0) {
            j["threshold"] = n.threshold;
            j["left"] = n.left;
            j["right"] = n.right;
        }
        j["count"] = n.count;
        j["p1"] = n.p1;
        nodes.push_back(std::move(j));
    }
    return nodes;
}

} // namespace

std::string to_json(const ResponderForest& f) {
    nlohmann::json root;
    root["model"] = "responder_forest";
    root["n_features"] = f.n_features;
    root["params"] = {
        {"n_trees", f.params.n_trees},
        {"max_x_depth", f.params.max_x_depth},
        {"min_leaf", f.params.min_leaf},
        {"feature_subsample", f.params.feature_subsample},
        {"impurity", f.params.impurity == Impurity::gini ? "gini" : "entropy"},
        {"min_loss_decrease", f.params.min_loss_decrease},
        {"bootstrap", f.params.bootstrap},
    };
    nlohmann::json trees = nlohmann::json::array();
    for (const ResponderTree& t : f.trees) {
        nlohmann::json nodes = nlohmann::json::array();
        for (const auto& n : t.nodes) {
            nlohmann::json j;
            j["count"] = n.count;
            if (n.feature >= 0) {
                j["feature"] = n.feature;
                j["threshold"] = n.threshold;
                j["left"] = n.left;
                j["right"] = n.right;
            } else {
                j["response_tree"] = class_tree_json(n.response_tree);
            }
            nodes.push_back(std::move(j));
        }
        trees.push_back({{"nodes", std::move(nodes)}});
    }
    root["trees"] = std::move(trees);
    return root.dump(2);
}

} // namespace card
