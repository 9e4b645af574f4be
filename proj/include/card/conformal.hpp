#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "card/dataset.hpp"
#include "card/propensity.hpp"
#include "card/responder.hpp"

namespace card {

/// Per-treated-subject outcome of one analysis. Rows are in dataset order;
/// `rejected` flags form exactly the BH rejection set at `alpha`.
struct PValueRow {
    std::size_t index = 0;
    double score = 0.0;
    double weight = 1.0;
    double pvalue = 1.0;
    bool rejected = false;
};

struct PValueReport {
    std::vector<PValueRow> rows;
    double alpha = 0.1;
    std::string method;
    std::uint64_t seed = 0;
    std::size_t n_knockoffs = 0;
    std::size_t crossing_swaps = 0; // quantile-crossing fixes, CQR only

    std::vector<std::uint8_t> rejected_flags() const;
};

/// Knockoff-calibrated conformal p-value: (1 + #{s_j >= s}) / (k + 1).
/// Ties count as exceeding, which can only enlarge the p-value.
double adadetect_pvalue(std::span<const double> knockoff_scores, double test_score);

/// Propensity-weighted variant: w*_i + sum_j w*_j 1(s_j >= s_i), with odds
/// weights w = e/(1-e) normalized over the test subject and the knockoffs.
/// When all weights coincide this reduces, bitwise, to adadetect_pvalue.
double weighted_pvalue(std::span<const double> knockoff_scores, std::span<const double> knockoff_e,
                       double test_score, double test_e);

/// Benjamini-Hochberg step-up at level alpha: rejects the r-hat smallest
/// p-values where r-hat = max{r : p_(r) <= r*alpha/m}.
std::vector<std::uint8_t> bh_adjust(std::span<const double> pvalues, double alpha);

struct AnalysisConfig {
    double alpha = 0.1;
    double knockoff_fraction = 0.2;
    PropensityMode propensity = PropensityMode::none;
    ResponderForestParams scorer{};
    int cross_fit_folds = 10;
    std::uint64_t seed = 0;
    int workers = 1;
};

/// Full pipeline: split knockoffs, estimate propensity (unless none/oracle),
/// fit the responder forest to discriminate untreated-train from
/// treated+knockoffs, score, form (weighted) p-values and apply BH.
/// Pure function of (d, config).
PValueReport card_analyze(const Dataset& d, const AnalysisConfig& config);

/// Scoring function returned by a scorer factory.
using ScoreFn = std::function<double(std::span<const double> x, double y)>;

/// Builds a scorer from the labeled training sample. Used to run the same
/// knockoff pipeline with exchangeable scorers (responder forest, generic
/// forest, ...).
using ScorerFactory = std::function<ScoreFn(const ScorerSample&, std::uint64_t seed, int workers)>;

/// The pipeline behind card_analyze with the scorer injected.
PValueReport knockoff_analyze(const Dataset& d, const AnalysisConfig& config,
                              const ScorerFactory& make_scorer, const std::string& method_name);

/// Report serialization. CSV columns: index, score, weight, pvalue, rejected.
/// `config` is echoed into a header comment so a run is reproducible from its
/// own output.
void write_report_csv(const PValueReport& report, const nlohmann::json& config,
                      const std::string& path);
nlohmann::json report_summary(const PValueReport& report, const nlohmann::json& config);

} // namespace card
