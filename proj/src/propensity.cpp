#include "card/propensity.hpp"

#include <algorithm>
#include <array>
#include <cmath>

#include <Eigen/Dense>

#include "card/errors.hpp"
#include "card/parallel.hpp"
#include "card/trees.hpp"

namespace card {

PropensityMode parse_propensity_mode(const std::string& name) {
    if (name == "none") return PropensityMode::none;
    if (name == "oracle") return PropensityMode::oracle;
    if (name == "logistic") return PropensityMode::logistic;
    if (name == "forest") return PropensityMode::forest;
    throw config_error("unknown propensity mode '" + name + "'");
}

std::string propensity_mode_name(PropensityMode mode) {
    switch (mode) {
        case PropensityMode::none: return "none";
        case PropensityMode::oracle: return "oracle";
        case PropensityMode::logistic: return "logistic";
        case PropensityMode::forest: return "forest";
    }
    return "none";
}

namespace {

double sigmoid(double z) { return 1.0 / (1.0 + std::exp(-z)); }

// log(1 + e^z) without overflow
double softplus(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }

double log_likelihood(const Eigen::MatrixXd& a, const Eigen::VectorXd& t, const Eigen::VectorXd& beta) {
    const Eigen::VectorXd eta = a * beta;
    double ll = 0.0;
    for (Eigen::Index i = 0; i < eta.size(); ++i) ll += t[i] * eta[i] - softplus(eta[i]);
    return ll;
}

} // namespace

double LogisticModel::predict(std::span<const double> x) const {
    if (x.size() != coefficients.size())
        throw internal_error("LogisticModel::predict: dimension mismatch");
    double eta = intercept;
    for (std::size_t j = 0; j < x.size(); ++j) eta += coefficients[j] * x[j];
    return sigmoid(eta);
}

LogisticModel fit_logistic(const Matrix& x, std::span<const std::uint8_t> t, double tol, int max_iter) {
    const std::size_t n = x.rows;
    const std::size_t p = x.cols;
    if (n != t.size()) throw config_error("fit_logistic: x and t size mismatch");
    std::size_t ones = 0;
    for (const auto v : t) ones += v;
    if (ones == 0 || ones == n) throw data_error("fit_logistic: both classes must be present");

    Eigen::MatrixXd a(n, p + 1);
    Eigen::VectorXd tv(n);
    for (std::size_t i = 0; i < n; ++i) {
        a(static_cast<Eigen::Index>(i), 0) = 1.0;
        for (std::size_t j = 0; j < p; ++j) a(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j) + 1) = x.at(i, j);
        tv[static_cast<Eigen::Index>(i)] = t[i];
    }

    constexpr double kRidge = 1e-6;
    constexpr double kDivergence = 30.0;

    Eigen::VectorXd beta = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(p) + 1);
    double ll = log_likelihood(a, tv, beta);

    LogisticModel model;
    for (int iter = 1; iter <= max_iter; ++iter) {
        const Eigen::VectorXd eta = a * beta;
        Eigen::VectorXd mu(eta.size()), w(eta.size());
        for (Eigen::Index i = 0; i < eta.size(); ++i) {
            mu[i] = sigmoid(eta[i]);
            w[i] = std::max(mu[i] * (1.0 - mu[i]), 1e-12);
        }
        const Eigen::VectorXd grad = a.transpose() * (tv - mu);
        model.iterations = iter;
        model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
        if (model.gradient_norm <= tol) {
            model.converged = true;
            break;
        }

        Eigen::MatrixXd h = a.transpose() * w.asDiagonal() * a;
        h.diagonal().array() += kRidge;
        const Eigen::VectorXd delta = h.ldlt().solve(grad);

        double step = 1.0;
        Eigen::VectorXd next = beta + delta;
        double next_ll = log_likelihood(a, tv, next);
        while (next_ll < ll && step > 1e-6) {
            step *= 0.5;
            next = beta + step * delta;
            next_ll = log_likelihood(a, tv, next);
        }
        if (next_ll < ll) break; // no ascent direction left
        beta = next;
        ll = next_ll;

        if (beta.lpNorm<Eigen::Infinity>() > kDivergence)
            throw data_error(
                "fit_logistic: coefficients diverged (classes look separable); "
                "use the forest propensity learner instead");
    }

    model.intercept = beta[0];
    model.coefficients.assign(static_cast<std::size_t>(p), 0.0);
    for (std::size_t j = 0; j < p; ++j) model.coefficients[j] = beta[static_cast<Eigen::Index>(j) + 1];
    if (!model.converged) {
        // leave the max-iteration flag observable via converged=false
        const Eigen::VectorXd grad = a.transpose() * (tv - (a * beta).unaryExpr([](double z) { return sigmoid(z); }));
        model.gradient_norm = grad.lpNorm<Eigen::Infinity>();
    }
    return model;
}

namespace {

std::vector<int> draw_folds(std::size_t n, int m, Rng& rng) {
    std::vector<std::size_t> perm(n);
    for (std::size_t i = 0; i < n; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    std::vector<int> fold(n, 0);
    for (std::size_t pos = 0; pos < n; ++pos) fold[perm[pos]] = static_cast<int>(pos % static_cast<std::size_t>(m));
    return fold;
}

bool folds_have_both_classes(const std::vector<int>& fold, std::span<const std::uint8_t> t, int m) {
    std::vector<std::array<std::size_t, 2>> counts(static_cast<std::size_t>(m), {0, 0});
    for (std::size_t i = 0; i < fold.size(); ++i) ++counts[static_cast<std::size_t>(fold[i])][t[i]];
    for (const auto& c : counts)
        if (c[0] == 0 || c[1] == 0) return false;
    return true;
}

} // namespace

PropensityEstimates cross_fit_propensity(const Dataset& d, PropensityLearner learner, int m, Rng& rng,
                                         int workers) {
    if (m < 2) throw config_error("cross_fit_propensity: needs at least 2 folds");
    const std::size_t n = d.n();
    if (n < static_cast<std::size_t>(2 * m))
        throw data_error("cross_fit_propensity: fewer than 2 observations per fold");

    std::vector<int> fold;
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
        fold = draw_folds(n, m, rng);
        ok = folds_have_both_classes(fold, d.t(), m);
    }
    if (!ok)
        throw data_error("cross_fit_propensity: a class is missing from some fold after 20 redraws");

    std::vector<std::uint64_t> fold_seeds(static_cast<std::size_t>(m));
    for (auto& s : fold_seeds) s = rng();

    PropensityEstimates est;
    est.mode = learner == PropensityLearner::logistic ? PropensityMode::logistic : PropensityMode::forest;
    est.fold = fold;
    est.e.assign(n, 0.0);

    parallel_for(static_cast<std::size_t>(m), workers, [&](std::size_t f) {
        std::vector<std::size_t> train, test;
        for (std::size_t i = 0; i < n; ++i)
            (fold[i] == static_cast<int>(f) ? test : train).push_back(i);

        Matrix xtr(train.size(), d.p());
        std::vector<std::uint8_t> ttr(train.size());
        for (std::size_t i = 0; i < train.size(); ++i) {
            for (std::size_t j = 0; j < d.p(); ++j) xtr.at(i, j) = d.x().at(train[i], j);
            ttr[i] = d.t()[train[i]];
        }

        if (learner == PropensityLearner::logistic) {
            const LogisticModel model = fit_logistic(xtr, ttr);
            for (const std::size_t i : test) est.e[i] = clip_propensity(model.predict(d.x().row(i)));
        } else {
            ForestParams params;
            params.n_trees = 100;
            params.max_depth = 6;
            params.min_leaf = 10;
            Rng eng(fold_seeds[f]);
            const ForestClassifier forest = fit_forest_classifier(xtr, ttr, params, eng);
            for (const std::size_t i : test) est.e[i] = clip_propensity(forest.predict(d.x().row(i)));
        }
    });
    return est;
}

std::vector<double> propensity_weights(std::span<const double> e) {
    std::vector<double> w(e.size());
    for (std::size_t i = 0; i < e.size(); ++i) {
        if (!(e[i] > 0.0 && e[i] < 1.0))
            throw internal_error("propensity_weights: input outside (0,1); clip upstream");
        w[i] = e[i] / (1.0 - e[i]);
    }
    return w;
}

} // namespace card
