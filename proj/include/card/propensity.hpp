#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "card/dataset.hpp"
#include "card/matrix.hpp"
#include "card/rng.hpp"

namespace card {

enum class PropensityMode { none, oracle, logistic, forest };

PropensityMode parse_propensity_mode(const std::string& name);
std::string propensity_mode_name(PropensityMode mode);

/// Treatment probabilities are clipped into this range before any odds are
/// formed, bounding the weights at 99.
inline constexpr double kPropensityClipLo = 0.01;
inline constexpr double kPropensityClipHi = 0.99;

inline double clip_propensity(double e) {
    return e < kPropensityClipLo ? kPropensityClipLo : (e > kPropensityClipHi ? kPropensityClipHi : e);
}

struct PropensityEstimates {
    std::vector<double> e;      // clipped into [kPropensityClipLo, kPropensityClipHi]
    PropensityMode mode = PropensityMode::none;
    std::vector<int> fold;      // fold assignment, empty unless cross-fitted
};

struct LogisticModel {
    std::vector<double> coefficients;
    double intercept = 0.0;
    int iterations = 0;
    double gradient_norm = 0.0;
    bool converged = false;

    double predict(std::span<const double> x) const;
};

/// Newton (IRLS) fit of t ~ sigmoid(intercept + x.beta), with step-halving so
/// the log-likelihood never decreases and a small ridge on the Hessian for
/// conditioning. Diverging coefficients (|beta| > 30) abort with an error
/// suggesting the forest learner.
LogisticModel fit_logistic(const Matrix& x, std::span<const std::uint8_t> t, double tol = 1e-8,
                           int max_iter = 100);

enum class PropensityLearner { logistic, forest };

/// m-fold cross-fitting: each observation's propensity comes from the model
/// trained on the other folds. Fold assignment depends only on (n, m, rng);
/// it is redrawn up to 20 times until every fold holds both classes.
PropensityEstimates cross_fit_propensity(const Dataset& d, PropensityLearner learner, int m,
                                         Rng& rng, int workers = 1);

/// Elementwise odds e/(1-e); inputs must already be clipped.
std::vector<double> propensity_weights(std::span<const double> e);

} // namespace card
