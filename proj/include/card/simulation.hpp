#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "card/dataset.hpp"
#include "card/rng.hpp"

namespace card {

enum class Scenario { rct, observational, appendix_a, appendix_c, global_null };
enum class SigmaMode { homoscedastic, heteroscedastic };

Scenario parse_scenario(const std::string& name);
std::string scenario_name(Scenario s);
SigmaMode parse_sigma_mode(const std::string& name);
std::string sigma_mode_name(SigmaMode s);

/// One Monte Carlo grid cell. `seed` is the master seed; every replication
/// derives its stream from (seed, the cell's parameter fingerprint, rep
/// index), so metrics do not depend on grid order or worker count.
struct ScenarioConfig {
    Scenario scenario = Scenario::rct;
    std::size_t n = 1000;
    std::size_t p = 10;
    double rho = 0.0;
    SigmaMode sigma_mode = SigmaMode::homoscedastic;
    int signal_sign = +1;
    int reps = 100;
    double alpha = 0.1;
    std::uint64_t seed = 42;

    void validate() const;
    std::uint64_t fingerprint() const; // identity of the data-generating cell
};

/// Which treated subjects are true responders, aligned with the dataset's
/// treated rows in dataset order. conditional_null is populated only by the
/// conditional-coverage demonstration scenario.
struct GroundTruth {
    std::vector<std::uint8_t> nonnull;
    std::vector<std::uint8_t> conditional_null;
};

/// Signal bump: 1(x > 0.5) * 2 / (1 + exp(-12 (x - 0.5))); zero at and below
/// the boundary.
double signal_f(double x);

/// Standard normal CDF via erfc; |error| < 1e-12.
double normal_cdf(double z);

std::pair<Dataset, GroundTruth> generate_rct(const ScenarioConfig& cfg, Rng& rng);
std::pair<Dataset, GroundTruth> generate_observational(const ScenarioConfig& cfg, Rng& rng);
std::pair<Dataset, GroundTruth> generate_appendix_c(std::size_t n, Rng& rng);
std::pair<Dataset, GroundTruth> generate_appendix_a(std::size_t n, Rng& rng);

/// Dispatch on cfg.scenario.
std::pair<Dataset, GroundTruth> generate(const ScenarioConfig& cfg, Rng& rng);

struct RunScore {
    double fdp = 0.0;
    double power = 0.0;
};

/// fdp = false rejections / max(rejections, 1);
/// power = true rejections / max(#nonnull, 1).
RunScore evaluate_run(std::span<const std::uint8_t> rejections, const GroundTruth& truth);

/// Known method names: card, card_oracle, card_logistic, card_forest,
/// global, cqr, adadetect_rf.
bool is_known_method(const std::string& name);

struct MetricsRow {
    ScenarioConfig cell;
    std::string method;
    int reps_done = 0;
    int errors = 0;
    double fdr_mean = 0.0;
    double fdr_se = 0.0;
    double power_mean = 0.0;
    double power_se = 0.0;
    // rejection rate on the conditional-null slice; meaningful for the
    // appendix_a scenario only
    double cond_null_reject_mean = 0.0;
    double cond_null_reject_se = 0.0;
};

/// Runs every (cell, method) combination for cell.reps replications and
/// aggregates means and standard errors. Replications run in parallel;
/// a method failure inside a rep is recorded and the run continues.
std::vector<MetricsRow> run_experiment(const std::vector<ScenarioConfig>& grid,
                                       const std::vector<std::string>& methods, int workers);

/// Metrics table serialization; schema card-metrics-v1, config echoed into
/// the header.
void write_metrics_csv(std::span<const MetricsRow> rows, const nlohmann::json& config,
                       const std::string& path);
nlohmann::json metrics_json(std::span<const MetricsRow> rows, const nlohmann::json& config);
std::vector<MetricsRow> read_metrics_csv(const std::string& path);

/// Named grids: rct-p10, rct-p100, rct-full, obs, appendix-c, appendix-a,
/// global-null. rct-p100 and rct-full are full-scale only.
std::vector<ScenarioConfig> preset_grid(const std::string& name, std::uint64_t seed, int reps,
                                        double alpha);
std::vector<std::string> preset_methods(const std::string& name);
bool preset_is_full_scale(const std::string& name);
std::vector<std::string> preset_names();

} // namespace card
