#include "card/conformal.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <memory>
#include <numeric>

#include "card/errors.hpp"

namespace card {

std::vector<std::uint8_t> PValueReport::rejected_flags() const {
    std::vector<std::uint8_t> flags(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) flags[i] = rows[i].rejected ? 1 : 0;
    return flags;
}

double adadetect_pvalue(std::span<const double> knockoff_scores, double test_score) {
    const std::size_t k = knockoff_scores.size();
    if (k == 0) throw config_error("adadetect_pvalue: needs at least one knockoff score");
    std::size_t exceed = 0;
    for (const double s : knockoff_scores)
        if (s >= test_score) ++exceed;
    return (1.0 + static_cast<double>(exceed)) / (static_cast<double>(k) + 1.0);
}

double weighted_pvalue(std::span<const double> knockoff_scores, std::span<const double> knockoff_e,
                       double test_score, double test_e) {
    const std::size_t k = knockoff_scores.size();
    if (k == 0) throw config_error("weighted_pvalue: needs at least one knockoff score");
    if (knockoff_e.size() != k) throw config_error("weighted_pvalue: scores/propensities size mismatch");

    auto odds = [](double e) {
        if (!(e > 0.0 && e < 1.0))
            throw internal_error("weighted_pvalue: propensity outside (0,1); clip upstream");
        return e / (1.0 - e);
    };
    const double w_test = odds(test_e);

    bool uniform = true;
    double w_sum = w_test;
    double w_exceed = 0.0;
    for (std::size_t j = 0; j < k; ++j) {
        const double w = odds(knockoff_e[j]);
        uniform = uniform && w == w_test;
        w_sum += w;
        if (knockoff_scores[j] >= test_score) w_exceed += w;
    }
    // Equal weights collapse to the unweighted count; taking that path keeps
    // the agreement exact in floating point.
    if (uniform) return adadetect_pvalue(knockoff_scores, test_score);
    return (w_test + w_exceed) / w_sum;
}

std::vector<std::uint8_t> bh_adjust(std::span<const double> pvalues, double alpha) {
    if (pvalues.empty()) throw config_error("bh_adjust: empty p-value vector");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("bh_adjust: alpha must lie in (0,1)");
    for (const double p : pvalues)
        if (!(p >= 0.0 && p <= 1.0)) throw config_error("bh_adjust: p-value outside [0,1]");

    const std::size_t m = pvalues.size();
    std::vector<double> sorted(pvalues.begin(), pvalues.end());
    std::sort(sorted.begin(), sorted.end());

    double threshold = -1.0;
    for (std::size_t r = m; r >= 1; --r) {
        if (sorted[r - 1] <= static_cast<double>(r) * alpha / static_cast<double>(m)) {
            threshold = sorted[r - 1];
            break;
        }
    }

    std::vector<std::uint8_t> reject(m, 0);
    if (threshold >= 0.0)
        for (std::size_t i = 0; i < m; ++i) reject[i] = pvalues[i] <= threshold ? 1 : 0;
    return reject;
}

PValueReport knockoff_analyze(const Dataset& d, const AnalysisConfig& config,
                              const ScorerFactory& make_scorer, const std::string& method_name) {
    if (d.n_treated() < 1) throw data_error("analyze: needs at least one treated observation");
    if (d.n_untreated() < 2) throw data_error("analyze: needs at least two untreated observations");
    if (!(config.alpha > 0.0 && config.alpha < 1.0)) throw config_error("analyze: alpha must lie in (0,1)");
    if (config.propensity == PropensityMode::oracle && !d.oracle_propensity())
        throw config_error("analyze: propensity mode 'oracle' requires a propensity column");

    Rng split_rng(seed_combine(config.seed, 1));
    const KnockoffSplit split = split_knockoffs(d, config.knockoff_fraction, split_rng);

    std::vector<double> e;
    if (config.propensity == PropensityMode::oracle) {
        e.resize(d.n());
        for (std::size_t i = 0; i < d.n(); ++i) e[i] = clip_propensity((*d.oracle_propensity())[i]);
    } else if (config.propensity == PropensityMode::logistic ||
               config.propensity == PropensityMode::forest) {
        Rng prop_rng(seed_combine(config.seed, 2));
        const auto learner = config.propensity == PropensityMode::logistic
                                 ? PropensityLearner::logistic
                                 : PropensityLearner::forest;
        e = cross_fit_propensity(d, learner, config.cross_fit_folds, prop_rng, config.workers).e;
    }

    // Classifier sample: class 1 = treated or knockoff, class 0 = the
    // remaining untreated.
    ScorerSample sample;
    sample.x = d.x();
    sample.y = d.y();
    sample.cls.assign(d.n(), 0);
    for (const std::size_t i : split.idx_treated) sample.cls[i] = 1;
    for (const std::size_t i : split.idx_knockoff) sample.cls[i] = 1;

    const ScoreFn scorer = make_scorer(sample, seed_combine(config.seed, 3), config.workers);

    std::vector<double> knockoff_scores(split.idx_knockoff.size());
    for (std::size_t j = 0; j < split.idx_knockoff.size(); ++j) {
        const std::size_t i = split.idx_knockoff[j];
        knockoff_scores[j] = scorer(d.x().row(i), d.y()[i]);
    }
    std::vector<double> knockoff_e;
    if (!e.empty()) {
        knockoff_e.resize(split.idx_knockoff.size());
        for (std::size_t j = 0; j < split.idx_knockoff.size(); ++j)
            knockoff_e[j] = e[split.idx_knockoff[j]];
    }

    PValueReport report;
    report.alpha = config.alpha;
    report.method = method_name;
    report.seed = config.seed;
    report.n_knockoffs = split.idx_knockoff.size();
    report.rows.resize(split.idx_treated.size());

    std::vector<double> pvalues(split.idx_treated.size());
    for (std::size_t j = 0; j < split.idx_treated.size(); ++j) {
        const std::size_t i = split.idx_treated[j];
        PValueRow& row = report.rows[j];
        row.index = i;
        row.score = scorer(d.x().row(i), d.y()[i]);
        if (e.empty()) {
            row.pvalue = adadetect_pvalue(knockoff_scores, row.score);
        } else {
            row.weight = e[i] / (1.0 - e[i]);
            row.pvalue = weighted_pvalue(knockoff_scores, knockoff_e, row.score, e[i]);
        }
        pvalues[j] = row.pvalue;
    }

    const std::vector<std::uint8_t> reject = bh_adjust(pvalues, config.alpha);
    for (std::size_t j = 0; j < report.rows.size(); ++j) report.rows[j].rejected = reject[j] != 0;
    return report;
}

PValueReport card_analyze(const Dataset& d, const AnalysisConfig& config) {
    const ScorerFactory responder_scorer = [&config](const ScorerSample& sample, std::uint64_t seed,
                                                     int workers) -> ScoreFn {
        Rng rng(seed);
        auto forest = std::make_shared<ResponderForest>(
            fit_responder_forest(sample, config.scorer, rng, workers));
        return [forest](std::span<const double> x, double y) { return score(*forest, x, y); };
    };
    return knockoff_analyze(d, config, responder_scorer, "card");
}

void write_report_csv(const PValueReport& report, const nlohmann::json& config,
                      const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("report: cannot write '" + path + "'");
    out << "# schema: card-report-v1\n";
    out << "# config: " << config.dump() << "\n";
    out << "index,score,weight,pvalue,rejected\n";
    char buf[32];
    auto put = [&](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        out << buf;
    };
    for (const PValueRow& row : report.rows) {
        out << row.index << ',';
        put(row.score);
        out << ',';
        put(row.weight);
        out << ',';
        put(row.pvalue);
        out << ',' << (row.rejected ? 1 : 0) << '\n';
    }
}

nlohmann::json report_summary(const PValueReport& report, const nlohmann::json& config) {
    std::size_t rejected = 0;
    for (const PValueRow& row : report.rows) rejected += row.rejected ? 1 : 0;
    nlohmann::json j;
    j["schema"] = "card-report-v1";
    j["method"] = report.method;
    j["alpha"] = report.alpha;
    j["seed"] = report.seed;
    j["n_treated"] = report.rows.size();
    j["n_knockoffs"] = report.n_knockoffs;
    j["n_rejected"] = rejected;
    if (report.method == "cqr") j["crossing_swaps"] = report.crossing_swaps;
    j["config"] = config;
    return j;
}

} // namespace card
