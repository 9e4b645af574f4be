#include "card/baselines.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

#include "card/errors.hpp"

namespace card {

std::vector<double> global_test_pvalues(std::span<const double> y_untreated,
                                        std::span<const double> y_treated) {
    if (y_untreated.empty()) throw config_error("global_test_pvalues: empty null sample");
    std::vector<double> sorted(y_untreated.begin(), y_untreated.end());
    std::sort(sorted.begin(), sorted.end());
    const double n0 = static_cast<double>(sorted.size());

    std::vector<double> pvalues(y_treated.size());
    for (std::size_t i = 0; i < y_treated.size(); ++i) {
        const double yi = y_treated[i];
        const auto lo = std::lower_bound(sorted.begin(), sorted.end(), yi) - sorted.begin();
        const auto hi = std::upper_bound(sorted.begin(), sorted.end(), yi) - sorted.begin();
        const double ge = n0 - static_cast<double>(lo); // # y_j >= yi
        const double le = static_cast<double>(hi);      // # y_j <= yi
        const double pv = 2.0 * std::min(1.0 + ge, 1.0 + le) / (n0 + 1.0);
        pvalues[i] = std::min(pv, 1.0);
    }
    return pvalues;
}

double RegTree::predict(std::span<const double> x) const {
    return nodes[static_cast<std::size_t>(leaf_for(x))].value;
}

int RegTree::leaf_for(std::span<const double> x) const {
    if (x.size() != n_features) throw internal_error("RegTree: feature dimension mismatch");
    int i = 0;
    while (nodes[i].feature >= 0)
        i = x[static_cast<std::size_t>(nodes[i].feature)] <= nodes[i].threshold ? nodes[i].left
                                                                                : nodes[i].right;
    return i;
}

namespace {

// type-7 empirical quantile (linear interpolation between order statistics)
double empirical_quantile(std::vector<double> values, double tau) {
    if (values.empty()) throw config_error("empirical_quantile: empty sample");
    std::sort(values.begin(), values.end());
    const double h = tau * static_cast<double>(values.size() - 1);
    const auto lo = static_cast<std::size_t>(h);
    if (lo + 1 >= values.size()) return values.back();
    return values[lo] + (h - static_cast<double>(lo)) * (values[lo + 1] - values[lo]);
}

double pinball_loss(std::span<const double> y, std::span<const double> f, double tau) {
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
        const double d = y[i] - f[i];
        s += d >= 0 ? tau * d : (tau - 1.0) * d;
    }
    return s / static_cast<double>(y.size());
}

struct RegSplit {
    bool found = false;
    int feature = -1;
    double threshold = 0.0;
};

// Squared-error split search; same candidate rule and tie-break as the
// classification trees.
RegSplit best_reg_split(const Matrix& x, std::span<const double> target,
                        std::span<const std::uint32_t> rows, int min_leaf,
                        std::vector<std::pair<double, double>>& scratch) {
    RegSplit best;
    const std::size_t m = rows.size();
    double sum = 0.0, sq = 0.0;
    for (const std::uint32_t r : rows) {
        sum += target[r];
        sq += target[r] * target[r];
    }
    double best_sse = sq - sum * sum / static_cast<double>(m);

    std::vector<double> values(m), prefix(m + 1, 0.0);
    for (std::size_t j = 0; j < x.cols; ++j) {
        scratch.clear();
        for (const std::uint32_t r : rows) scratch.emplace_back(x.at(r, j), target[r]);
        std::sort(scratch.begin(), scratch.end(),
                  [](const auto& a, const auto& b) { return a.first < b.first; });
        for (std::size_t i = 0; i < m; ++i) {
            values[i] = scratch[i].first;
            prefix[i + 1] = prefix[i] + scratch[i].second;
        }
        for (const double t : detail::split_candidates(values)) {
            const auto s = static_cast<std::size_t>(
                std::upper_bound(values.begin(), values.end(), t) - values.begin());
            if (s < static_cast<std::size_t>(min_leaf) || m - s < static_cast<std::size_t>(min_leaf))
                continue;
            // SSE decomposition: total sq is constant, so minimizing child SSE
            // maximizes sum_l (sum of targets)^2 / count.
            const double ls = prefix[s];
            const double rs = sum - ls;
            const double sse = sq - ls * ls / static_cast<double>(s) -
                               rs * rs / static_cast<double>(m - s);
            if (sse < best_sse) {
                best_sse = sse;
                best.found = true;
                best.feature = static_cast<int>(j);
                best.threshold = t;
            }
        }
    }
    return best;
}

int build_reg_node(RegTree& tree, const Matrix& x, std::span<const double> target,
                   std::vector<std::uint32_t>& rows, int depth, int max_depth, int min_leaf,
                   std::vector<std::pair<double, double>>& scratch) {
    const std::size_t m = rows.size();
    double sum = 0.0;
    for (const std::uint32_t r : rows) sum += target[r];

    const int slot = static_cast<int>(tree.nodes.size());
    tree.nodes.emplace_back();
    tree.nodes[slot].value = sum / static_cast<double>(m);
    tree.nodes[slot].count = static_cast<std::uint32_t>(m);

    if (depth >= max_depth || m < 2 * static_cast<std::size_t>(min_leaf)) return slot;
    const RegSplit split = best_reg_split(x, target, rows, min_leaf, scratch);
    if (!split.found) return slot;

    std::vector<std::uint32_t> left, right;
    left.reserve(m);
    for (const std::uint32_t r : rows)
        (x.at(r, static_cast<std::size_t>(split.feature)) <= split.threshold ? left : right).push_back(r);
    rows.clear();
    rows.shrink_to_fit();

    tree.nodes[slot].feature = split.feature;
    tree.nodes[slot].threshold = split.threshold;
    const int l = build_reg_node(tree, x, target, left, depth + 1, max_depth, min_leaf, scratch);
    tree.nodes[slot].left = l;
    const int r = build_reg_node(tree, x, target, right, depth + 1, max_depth, min_leaf, scratch);
    tree.nodes[slot].right = r;
    return slot;
}

RegTree fit_reg_tree(const Matrix& x, std::span<const double> target, int max_depth, int min_leaf) {
    RegTree tree;
    tree.n_features = x.cols;
    std::vector<std::uint32_t> rows(x.rows);
    for (std::size_t i = 0; i < rows.size(); ++i) rows[i] = static_cast<std::uint32_t>(i);
    std::vector<std::pair<double, double>> scratch;
    scratch.reserve(rows.size());
    build_reg_node(tree, x, target, rows, 0, max_depth, min_leaf, scratch);
    return tree;
}

} // namespace

double QuantileBoostModel::predict(std::span<const double> x) const {
    double f = base;
    for (const RegTree& stage : stages) f += learning_rate * stage.predict(x);
    return f;
}

QuantileBoostModel fit_quantile_boost(const Matrix& x, std::span<const double> y, double tau,
                                      const QuantileBoostParams& params) {
    if (!(tau > 0.0 && tau < 1.0)) throw config_error("fit_quantile_boost: tau must lie in (0,1)");
    if (x.rows != y.size()) throw config_error("fit_quantile_boost: x and y size mismatch");
    if (x.rows < 20) throw data_error("fit_quantile_boost: needs at least 20 observations");
    if (params.rounds < 0) throw config_error("fit_quantile_boost: rounds must be >= 0");

    const std::size_t n = x.rows;
    QuantileBoostModel model;
    model.tau = tau;
    model.learning_rate = params.learning_rate;
    model.base = empirical_quantile({y.begin(), y.end()}, tau);

    std::vector<double> f(n, model.base);
    std::vector<double> grad(n);
    double prev_loss = pinball_loss(y, f, tau);
    model.train_loss.reserve(static_cast<std::size_t>(params.rounds) + 1);
    model.train_loss.push_back(prev_loss);

    for (int round = 0; round < params.rounds; ++round) {
        for (std::size_t i = 0; i < n; ++i) grad[i] = y[i] < f[i] ? tau - 1.0 : tau;
        RegTree tree = fit_reg_tree(x, grad, params.max_depth, params.min_leaf);

        // refine leaves to the tau-quantile of their residuals; this is what
        // makes the per-round loss monotone
        std::vector<int> leaf(n);
        std::vector<std::vector<double>> residuals(tree.nodes.size());
        for (std::size_t i = 0; i < n; ++i) {
            leaf[i] = tree.leaf_for(x.row(i));
            residuals[static_cast<std::size_t>(leaf[i])].push_back(y[i] - f[i]);
        }
        for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
            if (tree.nodes[v].feature < 0)
                tree.nodes[v].value =
                    residuals[v].empty() ? 0.0 : empirical_quantile(std::move(residuals[v]), tau);
        }

        for (std::size_t i = 0; i < n; ++i)
            f[i] += params.learning_rate * tree.nodes[static_cast<std::size_t>(leaf[i])].value;
        model.stages.push_back(std::move(tree));

        const double loss = pinball_loss(y, f, tau);
        if (loss > prev_loss + 1e-12 * (1.0 + std::abs(prev_loss)))
            throw internal_error("fit_quantile_boost: training loss increased");
        model.train_loss.push_back(loss);
        prev_loss = loss;
    }
    return model;
}

CqrResult cqr_pvalues(const Matrix& x_untreated, std::span<const double> y_untreated,
                      const Matrix& x_treated, std::span<const double> y_treated,
                      const CQRConfig& config, Rng& rng) {
    if (!(config.alpha_lo > 0.0 && config.alpha_lo < config.alpha_hi && config.alpha_hi < 1.0))
        throw config_error("cqr: quantile levels must satisfy 0 < lo < hi < 1");
    if (!(config.train_fraction > 0.0 && config.train_fraction < 1.0))
        throw config_error("cqr: train fraction must lie in (0,1)");
    const std::size_t n0 = y_untreated.size();
    if (x_untreated.rows != n0 || x_treated.rows != y_treated.size())
        throw config_error("cqr: matrix/vector size mismatch");

    const auto n_train = static_cast<std::size_t>(config.train_fraction * static_cast<double>(n0));
    const std::size_t n_cal = n0 - n_train;
    if (n_train < 1 || n_cal < 1)
        throw config_error("cqr: train/calibration split leaves an empty part");

    std::vector<std::size_t> perm(n0);
    for (std::size_t i = 0; i < n0; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);

    Matrix x_train(n_train, x_untreated.cols);
    std::vector<double> y_train(n_train);
    for (std::size_t i = 0; i < n_train; ++i) {
        for (std::size_t j = 0; j < x_untreated.cols; ++j) x_train.at(i, j) = x_untreated.at(perm[i], j);
        y_train[i] = y_untreated[perm[i]];
    }

    const QuantileBoostModel lo = fit_quantile_boost(x_train, y_train, config.alpha_lo, config.boost);
    const QuantileBoostModel hi = fit_quantile_boost(x_train, y_train, config.alpha_hi, config.boost);

    CqrResult result;
    auto conformity = [&](std::span<const double> x, double y) {
        double ql = lo.predict(x);
        double qh = hi.predict(x);
        if (ql > qh) {
            std::swap(ql, qh);
            ++result.crossing_swaps;
        }
        return std::max(ql - y, y - qh);
    };

    std::vector<double> cal_scores(n_cal);
    for (std::size_t i = 0; i < n_cal; ++i) {
        const std::size_t r = perm[n_train + i];
        cal_scores[i] = conformity(x_untreated.row(r), y_untreated[r]);
    }
    std::sort(cal_scores.begin(), cal_scores.end());

    result.pvalues.resize(y_treated.size());
    for (std::size_t i = 0; i < y_treated.size(); ++i) {
        const double s = conformity(x_treated.row(i), y_treated[i]);
        const auto below = std::lower_bound(cal_scores.begin(), cal_scores.end(), s) -
                           cal_scores.begin();
        const double ge = static_cast<double>(n_cal) - static_cast<double>(below);
        result.pvalues[i] = (1.0 + ge) / (static_cast<double>(n_cal) + 1.0);
    }
    return result;
}

PValueReport global_analyze(const Dataset& d, double alpha) {
    if (d.n_treated() < 1) throw data_error("global: needs at least one treated observation");
    if (d.n_untreated() < 1) throw data_error("global: needs at least one untreated observation");

    const std::vector<std::size_t> untreated = d.untreated_indices();
    const std::vector<std::size_t> treated = d.treated_indices();
    std::vector<double> y0(untreated.size()), y1(treated.size());
    for (std::size_t i = 0; i < untreated.size(); ++i) y0[i] = d.y()[untreated[i]];
    for (std::size_t i = 0; i < treated.size(); ++i) y1[i] = d.y()[treated[i]];

    const std::vector<double> pvalues = global_test_pvalues(y0, y1);
    const std::vector<std::uint8_t> reject = bh_adjust(pvalues, alpha);

    PValueReport report;
    report.alpha = alpha;
    report.method = "global";
    report.rows.resize(treated.size());
    for (std::size_t i = 0; i < treated.size(); ++i) {
        report.rows[i].index = treated[i];
        report.rows[i].score = y1[i];
        report.rows[i].pvalue = pvalues[i];
        report.rows[i].rejected = reject[i] != 0;
    }
    return report;
}

PValueReport cqr_analyze(const Dataset& d, double alpha, const CQRConfig& config, std::uint64_t seed) {
    if (d.n_treated() < 1) throw data_error("cqr: needs at least one treated observation");
    if (d.n_untreated() < 2) throw data_error("cqr: needs at least two untreated observations");

    const std::vector<std::size_t> untreated = d.untreated_indices();
    const std::vector<std::size_t> treated = d.treated_indices();
    Matrix x0(untreated.size(), d.p()), x1(treated.size(), d.p());
    std::vector<double> y0(untreated.size()), y1(treated.size());
    for (std::size_t i = 0; i < untreated.size(); ++i) {
        for (std::size_t j = 0; j < d.p(); ++j) x0.at(i, j) = d.x().at(untreated[i], j);
        y0[i] = d.y()[untreated[i]];
    }
    for (std::size_t i = 0; i < treated.size(); ++i) {
        for (std::size_t j = 0; j < d.p(); ++j) x1.at(i, j) = d.x().at(treated[i], j);
        y1[i] = d.y()[treated[i]];
    }

    Rng rng(seed_combine(seed, 1));
    const CqrResult result = cqr_pvalues(x0, y0, x1, y1, config, rng);
    const std::vector<std::uint8_t> reject = bh_adjust(result.pvalues, alpha);

    PValueReport report;
    report.alpha = alpha;
    report.method = "cqr";
    report.seed = seed;
    report.crossing_swaps = result.crossing_swaps;
    report.rows.resize(treated.size());
    for (std::size_t i = 0; i < treated.size(); ++i) {
        report.rows[i].index = treated[i];
        report.rows[i].pvalue = result.pvalues[i];
        report.rows[i].rejected = reject[i] != 0;
    }
    return report;
}

PValueReport adadetect_generic(const Dataset& d, const AnalysisConfig& config,
                               const ForestParams& forest_params) {
    AnalysisConfig cfg = config;
    cfg.propensity = PropensityMode::none;

    const ScorerFactory forest_scorer = [&forest_params](const ScorerSample& sample,
                                                         std::uint64_t seed, int workers) -> ScoreFn {
        // generic classifier sees the response as one more feature
        const std::size_t n = sample.y.size();
        const std::size_t p = sample.x.cols;
        Matrix features(n, p + 1);
        for (std::size_t i = 0; i < n; ++i) {
            for (std::size_t j = 0; j < p; ++j) features.at(i, j) = sample.x.at(i, j);
            features.at(i, p) = sample.y[i];
        }
        Rng rng(seed);
        auto forest = std::make_shared<ForestClassifier>(
            fit_forest_classifier(features, sample.cls, forest_params, rng, workers));
        return [forest, p](std::span<const double> x, double y) {
            std::vector<double> z(p + 1);
            std::copy(x.begin(), x.end(), z.begin());
            z[p] = y;
            return forest->predict(z);
        };
    };
    return knockoff_analyze(d, cfg, forest_scorer, "adadetect_rf");
}

} // namespace card
