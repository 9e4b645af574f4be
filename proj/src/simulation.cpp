#include "card/simulation.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "card/baselines.hpp"
#include "card/conformal.hpp"
#include "card/errors.hpp"
#include "card/parallel.hpp"

namespace card {

Scenario parse_scenario(const std::string& name) {
    if (name == "rct") return Scenario::rct;
    if (name == "observational") return Scenario::observational;
    if (name == "appendix_a") return Scenario::appendix_a;
    if (name == "appendix_c") return Scenario::appendix_c;
    if (name == "global_null") return Scenario::global_null;
    throw config_error("unknown scenario '" + name + "'");
}

std::string scenario_name(Scenario s) {
    switch (s) {
        case Scenario::rct: return "rct";
        case Scenario::observational: return "observational";
        case Scenario::appendix_a: return "appendix_a";
        case Scenario::appendix_c: return "appendix_c";
        case Scenario::global_null: return "global_null";
    }
    return "rct";
}

SigmaMode parse_sigma_mode(const std::string& name) {
    if (name == "homoscedastic" || name == "homo") return SigmaMode::homoscedastic;
    if (name == "heteroscedastic" || name == "hetero") return SigmaMode::heteroscedastic;
    throw config_error("unknown sigma mode '" + name + "'");
}

std::string sigma_mode_name(SigmaMode s) {
    return s == SigmaMode::homoscedastic ? "homoscedastic" : "heteroscedastic";
}

void ScenarioConfig::validate() const {
    if (n < 50) throw config_error("scenario: n must be >= 50");
    if (reps < 1) throw config_error("scenario: reps must be >= 1");
    if (!(alpha > 0.0 && alpha < 1.0)) throw config_error("scenario: alpha must lie in (0,1)");
    if (!(rho >= 0.0 && rho < 1.0)) throw config_error("scenario: rho must lie in [0,1)");
    if (signal_sign != 1 && signal_sign != -1) throw config_error("scenario: signal sign must be +1 or -1");
    switch (scenario) {
        case Scenario::rct:
        case Scenario::observational:
        case Scenario::global_null:
            if (p < 2) throw config_error("scenario: p must be >= 2");
            break;
        case Scenario::appendix_a:
            if (n < 1000) throw config_error("scenario: the conditional demonstration needs n >= 1000");
            break;
        case Scenario::appendix_c:
            if (n < 100) throw config_error("scenario: appendix_c needs n >= 100");
            break;
    }
}

std::uint64_t ScenarioConfig::fingerprint() const {
    std::uint64_t h = mix64(static_cast<std::uint64_t>(scenario) + 1);
    h = seed_combine(h, static_cast<std::uint64_t>(n));
    h = seed_combine(h, static_cast<std::uint64_t>(p));
    h = seed_combine_double(h, rho);
    h = seed_combine(h, static_cast<std::uint64_t>(sigma_mode));
    h = seed_combine(h, static_cast<std::uint64_t>(signal_sign + 2));
    h = seed_combine_double(h, alpha);
    return h;
}

double signal_f(double x) {
    if (!(x > 0.5)) return 0.0;
    return 2.0 / (1.0 + std::exp(-12.0 * (x - 0.5)));
}

double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::sqrt(2.0)); }

namespace {

constexpr double kObsSlope = 1.75;
constexpr double kObsIntercept = 0.825;

double observational_propensity(double x1) {
    return 1.0 / (1.0 + std::exp(kObsSlope * x1 - kObsIntercept));
}

double noise_scale(SigmaMode mode, double x1) {
    if (mode == SigmaMode::homoscedastic) return 1.0;
    return -2.0 * std::log(std::clamp(x1, 1e-300, 1.0));
}

// Gaussian copula covariates: AR(1) latent normals mapped through Phi, so
// each column is marginally Uniform(0,1) with correlation decaying as
// rho^|i-j| on the latent scale.
Matrix draw_covariates(std::size_t n, std::size_t p, double rho, Rng& rng,
                       std::normal_distribution<double>& normal) {
    Matrix x(n, p);
    const double cross = std::sqrt(1.0 - rho * rho);
    for (std::size_t i = 0; i < n; ++i) {
        double prev = 0.0;
        for (std::size_t j = 0; j < p; ++j) {
            const double z = normal(rng);
            const double latent = j == 0 ? z : rho * prev + cross * z;
            prev = latent;
            x.at(i, j) = normal_cdf(latent);
        }
    }
    return x;
}

std::pair<Dataset, GroundTruth> generate_outcome_model(const ScenarioConfig& cfg, Rng& rng,
                                                       bool observational, bool with_signal) {
    cfg.validate();
    const std::size_t n = cfg.n;
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Matrix x = draw_covariates(n, cfg.p, cfg.rho, rng, normal);
    std::vector<double> y(n);
    std::vector<std::uint8_t> t(n);
    std::vector<double> e;
    if (observational) e.resize(n);

    const double r = static_cast<double>(cfg.signal_sign);
    for (std::size_t i = 0; i < n; ++i) {
        const double x1 = x.at(i, 0);
        const double x2 = x.at(i, 1);
        const double mu = 4.0 * (x1 + x2);
        const double sigma = noise_scale(cfg.sigma_mode, x1);
        double y0, y1;
        if (with_signal) {
            // independent noise draws for the two potential outcomes
            y0 = mu + sigma * normal(rng);
            y1 = mu + r * signal_f(x1) * signal_f(x2) + sigma * normal(rng);
        } else {
            y0 = y1 = mu + sigma * normal(rng);
        }
        const double prob = observational ? (e[i] = observational_propensity(x1)) : 0.5;
        t[i] = unif(rng) < prob ? 1 : 0;
        y[i] = t[i] ? y1 : y0;
    }

    GroundTruth truth;
    for (std::size_t i = 0; i < n; ++i)
        if (t[i]) truth.nonnull.push_back(with_signal && x.at(i, 0) > 0.5 && x.at(i, 1) > 0.5 ? 1 : 0);

    std::optional<std::vector<double>> oracle;
    if (observational) oracle = std::move(e);
    return {Dataset(std::move(x), std::move(y), std::move(t), std::move(oracle)), std::move(truth)};
}

} // namespace

std::pair<Dataset, GroundTruth> generate_rct(const ScenarioConfig& cfg, Rng& rng) {
    return generate_outcome_model(cfg, rng, false, true);
}

std::pair<Dataset, GroundTruth> generate_observational(const ScenarioConfig& cfg, Rng& rng) {
    return generate_outcome_model(cfg, rng, true, true);
}

std::pair<Dataset, GroundTruth> generate_appendix_c(std::size_t n, Rng& rng) {
    if (n < 100) throw config_error("generate_appendix_c: needs n >= 100");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);

    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<std::uint8_t> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = unif(rng);
        x.at(i, 0) = xi;
        const double y0 = (xi < 0.5 ? -5.0 : 0.0) + (xi > 0.5 ? 5.0 : 0.0) + normal(rng);
        const double y1 = (xi < 0.25 ? -5.0 : 0.0) + (xi > 0.5 ? 5.0 : 0.0) + normal(rng);
        t[i] = unif(rng) < 0.5 ? 1 : 0;
        y[i] = t[i] ? y1 : y0;
    }

    GroundTruth truth;
    for (std::size_t i = 0; i < n; ++i)
        if (t[i]) truth.nonnull.push_back(x.at(i, 0) > 0.25 && x.at(i, 0) < 0.5 ? 1 : 0);
    return {Dataset(std::move(x), std::move(y), std::move(t)), std::move(truth)};
}

std::pair<Dataset, GroundTruth> generate_appendix_a(std::size_t n, Rng& rng) {
    if (n < 1000) throw config_error("generate_appendix_a: needs n >= 1000");
    std::normal_distribution<double> normal(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double sd = std::sqrt(1e-7);

    Matrix x(n, 1);
    std::vector<double> y(n);
    std::vector<std::uint8_t> t(n);
    for (std::size_t i = 0; i < n; ++i) {
        const double xi = unif(rng);
        x.at(i, 0) = xi;
        const double y0 = sd * normal(rng);
        const double y1 = (xi > 0.01 ? 1.0 : 0.0) + sd * normal(rng);
        t[i] = unif(rng) < 0.5 ? 1 : 0;
        y[i] = t[i] ? y1 : y0;
    }

    GroundTruth truth;
    for (std::size_t i = 0; i < n; ++i) {
        if (t[i]) {
            truth.nonnull.push_back(x.at(i, 0) > 0.01 ? 1 : 0);
            truth.conditional_null.push_back(x.at(i, 0) <= 0.01 ? 1 : 0);
        }
    }
    return {Dataset(std::move(x), std::move(y), std::move(t)), std::move(truth)};
}

std::pair<Dataset, GroundTruth> generate(const ScenarioConfig& cfg, Rng& rng) {
    switch (cfg.scenario) {
        case Scenario::rct: return generate_rct(cfg, rng);
        case Scenario::observational: return generate_observational(cfg, rng);
        case Scenario::appendix_a: return generate_appendix_a(cfg.n, rng);
        case Scenario::appendix_c: return generate_appendix_c(cfg.n, rng);
        case Scenario::global_null: return generate_outcome_model(cfg, rng, false, false);
    }
    throw config_error("generate: unknown scenario");
}

RunScore evaluate_run(std::span<const std::uint8_t> rejections, const GroundTruth& truth) {
    if (rejections.size() != truth.nonnull.size())
        throw internal_error("evaluate_run: rejection/truth length mismatch");
    std::size_t rejected = 0, false_rej = 0, true_rej = 0, nonnull = 0;
    for (std::size_t i = 0; i < rejections.size(); ++i) {
        nonnull += truth.nonnull[i];
        if (rejections[i]) {
            ++rejected;
            (truth.nonnull[i] ? true_rej : false_rej) += 1;
        }
    }
    RunScore score;
    score.fdp = static_cast<double>(false_rej) / static_cast<double>(std::max<std::size_t>(rejected, 1));
    score.power = static_cast<double>(true_rej) / static_cast<double>(std::max<std::size_t>(nonnull, 1));
    return score;
}

bool is_known_method(const std::string& name) {
    static const std::vector<std::string> known = {"card",        "card_oracle", "card_logistic",
                                                   "card_forest", "global",      "cqr",
                                                   "adadetect_rf"};
    return std::find(known.begin(), known.end(), name) != known.end();
}

namespace {

PValueReport run_method(const std::string& name, const Dataset& d, double alpha, std::uint64_t seed,
                        int workers) {
    AnalysisConfig cfg;
    cfg.alpha = alpha;
    cfg.seed = seed;
    cfg.workers = workers;
    if (name == "card") return card_analyze(d, cfg);
    if (name == "card_oracle") {
        cfg.propensity = PropensityMode::oracle;
        return card_analyze(d, cfg);
    }
    if (name == "card_logistic") {
        cfg.propensity = PropensityMode::logistic;
        return card_analyze(d, cfg);
    }
    if (name == "card_forest") {
        cfg.propensity = PropensityMode::forest;
        return card_analyze(d, cfg);
    }
    if (name == "global") return global_analyze(d, alpha);
    if (name == "cqr") return cqr_analyze(d, alpha, CQRConfig{}, seed);
    if (name == "adadetect_rf") return adadetect_generic(d, cfg, ForestParams{});
    throw config_error("unknown method '" + name + "'");
}

struct RepOutcome {
    bool ok = false;
    double fdp = 0.0;
    double power = 0.0;
    double cond_reject = 0.0;
};

struct KahanSum {
    double sum = 0.0;
    double carry = 0.0;
    void add(double v) {
        const double y = v - carry;
        const double t = sum + y;
        carry = (t - sum) - y;
        sum = t;
    }
};

struct MeanSe {
    double mean = 0.0;
    double se = 0.0;
};

MeanSe summarize(std::span<const double> values) {
    MeanSe out;
    if (values.empty()) return out;
    KahanSum s;
    for (const double v : values) s.add(v);
    out.mean = s.sum / static_cast<double>(values.size());
    if (values.size() < 2) return out; // single rep: SE sentinel 0
    KahanSum sq;
    for (const double v : values) sq.add((v - out.mean) * (v - out.mean));
    const double var = sq.sum / static_cast<double>(values.size() - 1);
    out.se = std::sqrt(var / static_cast<double>(values.size()));
    return out;
}

} // namespace

std::vector<MetricsRow> run_experiment(const std::vector<ScenarioConfig>& grid,
                                       const std::vector<std::string>& methods, int workers) {
    if (grid.empty()) throw config_error("run_experiment: empty grid");
    if (methods.empty()) throw config_error("run_experiment: no methods selected");
    for (const auto& cell : grid) cell.validate();
    for (const auto& m : methods)
        if (!is_known_method(m)) throw config_error("unknown method '" + m + "'");

    // flatten (cell, rep) into independent tasks; methods inside one task
    // share the generated dataset
    std::vector<std::pair<std::size_t, int>> tasks;
    for (std::size_t c = 0; c < grid.size(); ++c)
        for (int r = 0; r < grid[c].reps; ++r) tasks.emplace_back(c, r);

    std::vector<std::vector<std::vector<RepOutcome>>> results(grid.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        results[c].assign(methods.size(),
                          std::vector<RepOutcome>(static_cast<std::size_t>(grid[c].reps)));
    }

    parallel_for(tasks.size(), workers, [&](std::size_t task) {
        const auto [c, rep] = tasks[task];
        const ScenarioConfig& cell = grid[c];
        const std::uint64_t rep_seed =
            seed_combine(seed_combine(cell.seed, cell.fingerprint()), static_cast<std::uint64_t>(rep));
        Rng gen(rep_seed);
        const auto [data, truth] = generate(cell, gen);

        for (std::size_t m = 0; m < methods.size(); ++m) {
            const std::uint64_t method_seed = seed_combine(rep_seed, hash_string(methods[m]));
            RepOutcome& out = results[c][m][static_cast<std::size_t>(rep)];
            try {
                const PValueReport report = run_method(methods[m], data, cell.alpha, method_seed, 1);
                const std::vector<std::uint8_t> flags = report.rejected_flags();
                const RunScore score = evaluate_run(flags, truth);
                out.ok = true;
                out.fdp = score.fdp;
                out.power = score.power;
                if (!truth.conditional_null.empty()) {
                    std::size_t cond = 0, cond_rej = 0;
                    for (std::size_t i = 0; i < flags.size(); ++i) {
                        if (truth.conditional_null[i]) {
                            ++cond;
                            cond_rej += flags[i];
                        }
                    }
                    out.cond_reject = static_cast<double>(cond_rej) /
                                      static_cast<double>(std::max<std::size_t>(cond, 1));
                }
            } catch (const std::exception&) {
                out.ok = false;
            }
        }
    });

    std::vector<MetricsRow> table;
    table.reserve(grid.size() * methods.size());
    for (std::size_t c = 0; c < grid.size(); ++c) {
        for (std::size_t m = 0; m < methods.size(); ++m) {
            MetricsRow row;
            row.cell = grid[c];
            row.method = methods[m];
            std::vector<double> fdp, power, cond;
            for (const RepOutcome& out : results[c][m]) {
                if (!out.ok) {
                    ++row.errors;
                    continue;
                }
                fdp.push_back(out.fdp);
                power.push_back(out.power);
                cond.push_back(out.cond_reject);
            }
            row.reps_done = static_cast<int>(fdp.size());
            const MeanSe f = summarize(fdp), p = summarize(power), q = summarize(cond);
            row.fdr_mean = f.mean;
            row.fdr_se = f.se;
            row.power_mean = p.mean;
            row.power_se = p.se;
            row.cond_null_reject_mean = q.mean;
            row.cond_null_reject_se = q.se;
            table.push_back(std::move(row));
        }
    }
    return table;
}

namespace {

constexpr const char* kMetricsSchema = "card-metrics-v1";
constexpr const char* kMetricsHeader =
    "scenario,n,p,rho,sigma,signal,alpha,method,reps,errors,fdr_mean,fdr_se,power_mean,power_se,"
    "cond_null_reject_mean,cond_null_reject_se";

std::string fmt_double(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace

void write_metrics_csv(std::span<const MetricsRow> rows, const nlohmann::json& config,
                       const std::string& path) {
    std::ofstream out(path);
    if (!out) throw data_error("metrics: cannot write '" + path + "'");
    out << "# schema: " << kMetricsSchema << "\n";
    out << "# config: " << config.dump() << "\n";
    out << kMetricsHeader << "\n";
    for (const MetricsRow& row : rows) {
        out << scenario_name(row.cell.scenario) << ',' << row.cell.n << ',' << row.cell.p << ','
            << fmt_double(row.cell.rho) << ',' << sigma_mode_name(row.cell.sigma_mode) << ','
            << row.cell.signal_sign << ',' << fmt_double(row.cell.alpha) << ',' << row.method << ','
            << row.reps_done << ',' << row.errors << ',' << fmt_double(row.fdr_mean) << ','
            << fmt_double(row.fdr_se) << ',' << fmt_double(row.power_mean) << ','
            << fmt_double(row.power_se) << ',' << fmt_double(row.cond_null_reject_mean) << ','
            << fmt_double(row.cond_null_reject_se) << '\n';
    }
}

nlohmann::json metrics_json(std::span<const MetricsRow> rows, const nlohmann::json& config) {
    nlohmann::json j;
    j["schema"] = kMetricsSchema;
    j["config"] = config;
    nlohmann::json arr = nlohmann::json::array();
    for (const MetricsRow& row : rows) {
        arr.push_back({{"scenario", scenario_name(row.cell.scenario)},
                       {"n", row.cell.n},
                       {"p", row.cell.p},
                       {"rho", row.cell.rho},
                       {"sigma", sigma_mode_name(row.cell.sigma_mode)},
                       {"signal", row.cell.signal_sign},
                       {"alpha", row.cell.alpha},
                       {"method", row.method},
                       {"reps", row.reps_done},
                       {"errors", row.errors},
                       {"fdr_mean", row.fdr_mean},
                       {"fdr_se", row.fdr_se},
                       {"power_mean", row.power_mean},
                       {"power_se", row.power_se},
                       {"cond_null_reject_mean", row.cond_null_reject_mean},
                       {"cond_null_reject_se", row.cond_null_reject_se}});
    }
    j["rows"] = std::move(arr);
    return j;
}

std::vector<MetricsRow> read_metrics_csv(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw data_error("metrics: cannot open '" + path + "'");
    std::string line;
    bool schema_seen = false;
    bool header_seen = false;
    std::vector<MetricsRow> rows;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (line.rfind("# schema:", 0) == 0) {
            if (line.find(kMetricsSchema) == std::string::npos)
                throw data_error("metrics: unsupported schema in '" + path + "'");
            schema_seen = true;
            continue;
        }
        if (line[0] == '#') continue;
        if (!header_seen) {
            if (line != kMetricsHeader)
                throw data_error("metrics: unexpected header in '" + path + "'");
            header_seen = true;
            continue;
        }
        std::stringstream ss(line);
        std::string cell;
        std::vector<std::string> cells;
        while (std::getline(ss, cell, ',')) cells.push_back(cell);
        if (cells.size() != 16)
            throw data_error("metrics: malformed row at line " + std::to_string(lineno));
        MetricsRow row;
        row.cell.scenario = parse_scenario(cells[0]);
        row.cell.n = static_cast<std::size_t>(std::stoull(cells[1]));
        row.cell.p = static_cast<std::size_t>(std::stoull(cells[2]));
        row.cell.rho = std::stod(cells[3]);
        row.cell.sigma_mode = parse_sigma_mode(cells[4]);
        row.cell.signal_sign = std::stoi(cells[5]);
        row.cell.alpha = std::stod(cells[6]);
        row.method = cells[7];
        row.reps_done = std::stoi(cells[8]);
        row.errors = std::stoi(cells[9]);
        row.fdr_mean = std::stod(cells[10]);
        row.fdr_se = std::stod(cells[11]);
        row.power_mean = std::stod(cells[12]);
        row.power_se = std::stod(cells[13]);
        row.cond_null_reject_mean = std::stod(cells[14]);
        row.cond_null_reject_se = std::stod(cells[15]);
        rows.push_back(std::move(row));
    }
    if (!schema_seen) throw data_error("metrics: missing schema line in '" + path + "'");
    if (!header_seen || rows.empty()) throw data_error("metrics: no data rows in '" + path + "'");
    return rows;
}

namespace {

std::vector<ScenarioConfig> rct_grid(std::vector<std::size_t> ps, std::uint64_t seed, int reps,
                                     double alpha) {
    std::vector<ScenarioConfig> grid;
    for (const std::size_t p : ps) {
        for (const double rho : {0.0, 0.9}) {
            for (const SigmaMode sigma : {SigmaMode::homoscedastic, SigmaMode::heteroscedastic}) {
                for (const int sign : {+1, -1}) {
                    for (const std::size_t n : {250u, 500u, 1000u, 2000u}) {
                        ScenarioConfig cfg;
                        cfg.scenario = Scenario::rct;
                        cfg.n = n;
                        cfg.p = p;
                        cfg.rho = rho;
                        cfg.sigma_mode = sigma;
                        cfg.signal_sign = sign;
                        cfg.reps = reps;
                        cfg.alpha = alpha;
                        cfg.seed = seed;
                        grid.push_back(cfg);
                    }
                }
            }
        }
    }
    return grid;
}

} // namespace

std::vector<std::string> preset_names() {
    return {"rct-p10", "rct-p100", "rct-full", "obs", "appendix-c", "appendix-a", "global-null"};
}

bool preset_is_full_scale(const std::string& name) {
    return name == "rct-p100" || name == "rct-full";
}

std::vector<ScenarioConfig> preset_grid(const std::string& name, std::uint64_t seed, int reps,
                                        double alpha) {
    if (name == "rct-p10") return rct_grid({10}, seed, reps, alpha);
    if (name == "rct-p100") return rct_grid({100}, seed, reps, alpha);
    if (name == "rct-full") return rct_grid({10, 100}, seed, reps, alpha);
    if (name == "obs") {
        std::vector<ScenarioConfig> grid;
        for (const SigmaMode sigma : {SigmaMode::homoscedastic, SigmaMode::heteroscedastic}) {
            for (const std::size_t n : {250u, 500u, 1000u, 2000u}) {
                ScenarioConfig cfg;
                cfg.scenario = Scenario::observational;
                cfg.n = n;
                cfg.p = 10;
                cfg.sigma_mode = sigma;
                cfg.signal_sign = +1;
                cfg.reps = reps;
                cfg.alpha = alpha;
                cfg.seed = seed;
                grid.push_back(cfg);
            }
        }
        return grid;
    }
    if (name == "appendix-c") {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::appendix_c;
        cfg.n = 2000;
        cfg.p = 2; // ignored by the generator (single covariate)
        cfg.reps = reps;
        cfg.alpha = alpha;
        cfg.seed = seed;
        return {cfg};
    }
    if (name == "appendix-a") {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::appendix_a;
        cfg.n = 20000;
        cfg.p = 2; // ignored by the generator
        cfg.reps = reps;
        cfg.alpha = alpha;
        cfg.seed = seed;
        return {cfg};
    }
    if (name == "global-null") {
        ScenarioConfig cfg;
        cfg.scenario = Scenario::global_null;
        cfg.n = 500;
        cfg.p = 10;
        cfg.reps = reps;
        cfg.alpha = alpha;
        cfg.seed = seed;
        return {cfg};
    }
    throw config_error("unknown preset '" + name + "'");
}

std::vector<std::string> preset_methods(const std::string& name) {
    if (name == "rct-p10" || name == "rct-p100" || name == "rct-full")
        return {"card", "global", "cqr", "adadetect_rf"};
    if (name == "obs") return {"card", "card_oracle", "card_logistic", "card_forest"};
    if (name == "appendix-c") return {"card", "global"};
    if (name == "appendix-a") return {"card"};
    if (name == "global-null") return {"card"};
    throw config_error("unknown preset '" + name + "'");
}

} // namespace card
