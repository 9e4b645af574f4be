#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "card/conformal.hpp"
#include "card/dataset.hpp"
#include "card/matrix.hpp"
#include "card/rng.hpp"
#include "card/trees.hpp"

namespace card {

/// Two-sided empirical p-values of each treated response against the eCDF of
/// the untreated sample: 2 * min(upper-tail, lower-tail), capped at 1.
std::vector<double> global_test_pvalues(std::span<const double> y_untreated,
                                        std::span<const double> y_treated);

struct QuantileBoostParams {
    int rounds = 100;
    int max_depth = 3;
    double learning_rate = 0.1;
    int min_leaf = 10;
};

/// Regression tree used as a boosting stage: squared-error splits, leaf
/// values later refined by the boosting driver.
struct RegTreeNode {
    int feature = -1;
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    double value = 0.0;
    std::uint32_t count = 0;
};

struct RegTree {
    std::vector<RegTreeNode> nodes;
    std::size_t n_features = 0;

    double predict(std::span<const double> x) const;
    int leaf_for(std::span<const double> x) const;
};

struct QuantileBoostModel {
    double base = 0.0; // empirical tau-quantile of the training responses
    std::vector<RegTree> stages;
    double learning_rate = 0.1;
    double tau = 0.5;
    std::vector<double> train_loss; // mean pinball loss after each round

    double predict(std::span<const double> x) const;
};

/// Gradient boosting for the conditional tau-quantile: each stage fits a
/// tree to the pinball-loss gradient and refines its leaves to the leaf
/// tau-quantile of the residuals, so the training loss never increases.
QuantileBoostModel fit_quantile_boost(const Matrix& x, std::span<const double> y, double tau,
                                      const QuantileBoostParams& params);

struct CQRConfig {
    double alpha_lo = 0.05;     // lower quantile level
    double alpha_hi = 0.95;     // upper quantile level
    double train_fraction = 0.8;
    QuantileBoostParams boost{};
};

struct CqrResult {
    std::vector<double> pvalues;      // one per treated row, in input order
    std::size_t crossing_swaps = 0;   // times q_lo(x) > q_hi(x) had to be swapped
};

/// Conformal p-values from the quantile-interval non-conformity score
/// s(x,y) = max(q_lo(x) - y, y - q_hi(x)). Quantile models are fit on a
/// train split of the untreated sample; calibration scores come from the
/// held-out split.
CqrResult cqr_pvalues(const Matrix& x_untreated, std::span<const double> y_untreated,
                      const Matrix& x_treated, std::span<const double> y_treated,
                      const CQRConfig& config, Rng& rng);

/// Report-level wrappers sharing the PValueReport format, with method tags
/// global / cqr / adadetect_rf.
PValueReport global_analyze(const Dataset& d, double alpha);
PValueReport cqr_analyze(const Dataset& d, double alpha, const CQRConfig& config, std::uint64_t seed);

/// The knockoff pipeline of card_analyze with an off-the-shelf random forest
/// on the concatenated (x, y) feature vector as the scorer; propensity
/// weighting does not apply.
PValueReport adadetect_generic(const Dataset& d, const AnalysisConfig& config,
                               const ForestParams& forest_params);

} // namespace card
