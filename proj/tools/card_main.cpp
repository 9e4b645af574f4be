#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "card/baselines.hpp"
#include "card/conformal.hpp"
#include "card/dataset.hpp"
#include "card/errors.hpp"
#include "card/parallel.hpp"
#include "card/plot.hpp"
#include "card/simulation.hpp"

namespace {

using nlohmann::json;

// exit taxonomy: 0 ok, 2 configuration, 3 data/schema, 4 internal invariant

std::uint64_t resolve_seed(const std::optional<std::uint64_t>& flag) {
    if (flag) return *flag;
    if (const char* env = std::getenv("CARD_SEED")) {
        try {
            return std::stoull(env);
        } catch (const std::exception&) {
            throw card::config_error("CARD_SEED is not an unsigned integer");
        }
    }
    return 42;
}

void write_json_file(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw card::data_error("cannot write '" + path + "'");
    out << j.dump(2) << '\n';
}

struct AnalyzeArgs {
    std::string data_path;
    std::string response = "y";
    std::string treatment = "t";
    std::string propensity_col;
    std::string method = "card";
    std::string propensity = "none";
    double alpha = 0.1;
    double knockoff_fraction = 0.2;
    int folds = 10;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    std::string out_csv = "report.csv";
    std::string out_json;
};

int run_analyze(const AnalyzeArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);

    card::CsvSchema schema;
    schema.response = args.response;
    schema.treatment = args.treatment;
    if (!args.propensity_col.empty()) schema.propensity = args.propensity_col;

    card::AnalysisConfig config;
    config.alpha = args.alpha;
    config.knockoff_fraction = args.knockoff_fraction;
    config.propensity = card::parse_propensity_mode(args.propensity);
    config.cross_fit_folds = args.folds;
    config.seed = seed;
    config.workers = args.workers;

    if (args.method != "card" && config.propensity != card::PropensityMode::none)
        throw card::config_error("--propensity applies to --method card only");
    if (args.method != "card" && args.method != "global" && args.method != "cqr" &&
        args.method != "adadetect_rf")
        throw card::config_error("unknown method '" + args.method + "'");

    const card::Dataset data = card::load_csv(args.data_path, schema);

    card::PValueReport report;
    if (args.method == "card") {
        report = card::card_analyze(data, config);
    } else if (args.method == "global") {
        report = card::global_analyze(data, args.alpha);
    } else if (args.method == "cqr") {
        report = card::cqr_analyze(data, args.alpha, card::CQRConfig{}, seed);
    } else {
        report = card::adadetect_generic(data, config, card::ForestParams{});
    }
    report.seed = seed;

    const json config_echo = {{"command", "analyze"},
                              {"data", args.data_path},
                              {"response", args.response},
                              {"treatment", args.treatment},
                              {"propensity_col", args.propensity_col},
                              {"method", args.method},
                              {"propensity", args.propensity},
                              {"alpha", args.alpha},
                              {"knockoff_fraction", args.knockoff_fraction},
                              {"folds", args.folds},
                              {"seed", seed},
                              {"workers", args.workers}};

    card::write_report_csv(report, config_echo, args.out_csv);
    if (!args.out_json.empty()) write_json_file(card::report_summary(report, config_echo), args.out_json);

    std::size_t rejected = 0;
    for (const auto& row : report.rows) rejected += row.rejected ? 1 : 0;
    std::cout << "analyzed " << data.n() << " rows (" << report.rows.size() << " treated); "
              << rejected << " rejections at alpha=" << args.alpha << "; report: " << args.out_csv
              << "\n";
    return 0;
}

struct SimulateArgs {
    std::string preset;
    std::string scenario;
    std::vector<std::size_t> ns;
    std::size_t p = 10;
    std::vector<double> rhos;
    std::vector<std::string> sigmas;
    std::vector<int> signals;
    std::vector<std::string> methods;
    int reps = 100;
    double alpha = 0.1;
    std::optional<std::uint64_t> seed;
    int workers = 1;
    bool full_scale = false;
    std::string out_csv = "metrics.csv";
    std::string out_json;
};

int run_simulate(const SimulateArgs& args) {
    const std::uint64_t seed = resolve_seed(args.seed);
    if (args.reps < 1) throw card::config_error("--reps must be >= 1");
    if (args.preset.empty() && args.scenario.empty())
        throw card::config_error("pass --preset or --scenario");
    if (!args.preset.empty() && !args.scenario.empty())
        throw card::config_error("--preset and --scenario are mutually exclusive");

    std::vector<card::ScenarioConfig> grid;
    std::vector<std::string> methods = args.methods;

    if (!args.preset.empty()) {
        if (card::preset_is_full_scale(args.preset) && !args.full_scale)
            throw card::config_error("preset '" + args.preset +
                                     "' is full-scale; re-run with --full-scale");
        grid = card::preset_grid(args.preset, seed, args.reps, args.alpha);
        if (methods.empty()) methods = card::preset_methods(args.preset);
        // narrowing filters
        auto keep = [&](const card::ScenarioConfig& cfg) {
            if (!args.ns.empty() &&
                std::find(args.ns.begin(), args.ns.end(), cfg.n) == args.ns.end())
                return false;
            if (!args.rhos.empty() &&
                std::find(args.rhos.begin(), args.rhos.end(), cfg.rho) == args.rhos.end())
                return false;
            if (!args.sigmas.empty()) {
                bool hit = false;
                for (const auto& s : args.sigmas)
                    hit = hit || card::parse_sigma_mode(s) == cfg.sigma_mode;
                if (!hit) return false;
            }
            if (!args.signals.empty() && std::find(args.signals.begin(), args.signals.end(),
                                                   cfg.signal_sign) == args.signals.end())
                return false;
            return true;
        };
        std::erase_if(grid, [&](const card::ScenarioConfig& cfg) { return !keep(cfg); });
        if (grid.empty()) throw card::config_error("filters removed every cell of the preset");
    } else {
        const card::Scenario scenario = card::parse_scenario(args.scenario);
        const std::vector<std::size_t> ns = args.ns.empty() ? std::vector<std::size_t>{1000} : args.ns;
        const std::vector<double> rhos = args.rhos.empty() ? std::vector<double>{0.0} : args.rhos;
        const std::vector<std::string> sigmas =
            args.sigmas.empty() ? std::vector<std::string>{"homoscedastic"} : args.sigmas;
        const std::vector<int> signals = args.signals.empty() ? std::vector<int>{+1} : args.signals;
        for (const auto n : ns)
            for (const auto rho : rhos)
                for (const auto& sigma : sigmas)
                    for (const auto sign : signals) {
                        card::ScenarioConfig cfg;
                        cfg.scenario = scenario;
                        cfg.n = n;
                        cfg.p = args.p;
                        cfg.rho = rho;
                        cfg.sigma_mode = card::parse_sigma_mode(sigma);
                        cfg.signal_sign = sign;
                        cfg.reps = args.reps;
                        cfg.alpha = args.alpha;
                        cfg.seed = seed;
                        grid.push_back(cfg);
                    }
        if (methods.empty()) methods = {"card"};
    }

    for (const auto& m : methods)
        if (!card::is_known_method(m)) throw card::config_error("unknown method '" + m + "'");

    const std::vector<card::MetricsRow> table = card::run_experiment(grid, methods, args.workers);

    json cells = json::array();
    for (const auto& cfg : grid)
        cells.push_back({{"scenario", card::scenario_name(cfg.scenario)},
                         {"n", cfg.n},
                         {"p", cfg.p},
                         {"rho", cfg.rho},
                         {"sigma", card::sigma_mode_name(cfg.sigma_mode)},
                         {"signal", cfg.signal_sign}});
    const json config_echo = {{"command", "simulate"}, {"preset", args.preset},
                              {"scenario", args.scenario}, {"methods", methods},
                              {"reps", args.reps},         {"alpha", args.alpha},
                              {"seed", seed},              {"workers", args.workers},
                              {"cells", cells}};

    card::write_metrics_csv(table, config_echo, args.out_csv);
    if (!args.out_json.empty())
        write_json_file(card::metrics_json(table, config_echo), args.out_json);

    std::cout << "simulated " << grid.size() << " cell(s) x " << methods.size() << " method(s), "
              << args.reps << " reps; metrics: " << args.out_csv << "\n";
    return 0;
}

struct PlotArgs {
    std::string metrics_path;
    std::string out_dir = "plots";
};

int run_plot(const PlotArgs& args) {
    const std::vector<card::MetricsRow> rows = card::read_metrics_csv(args.metrics_path);
    const std::vector<std::string> written = card::render_metric_svgs(rows, args.out_dir);
    for (const auto& path : written) std::cout << path << "\n";
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Responder detection with FDR control: cohort analysis, "
                 "simulation grids and metric plots"};
    app.require_subcommand(1);

    AnalyzeArgs analyze_args;
    CLI::App* analyze = app.add_subcommand("analyze", "Analyze a CSV cohort");
    analyze->add_option("--data", analyze_args.data_path, "input CSV")->required();
    analyze->add_option("--response", analyze_args.response, "response column name");
    analyze->add_option("--treatment", analyze_args.treatment, "treatment column name");
    analyze->add_option("--propensity-col", analyze_args.propensity_col,
                        "known propensity column name (required for --propensity oracle)");
    analyze->add_option("--method", analyze_args.method, "card | global | cqr | adadetect_rf");
    analyze->add_option("--propensity", analyze_args.propensity,
                        "none | oracle | logistic | forest (card only)");
    analyze->add_option("--alpha", analyze_args.alpha, "FDR level");
    analyze->add_option("--knockoff-fraction", analyze_args.knockoff_fraction,
                        "untreated fraction used as knockoffs");
    analyze->add_option("--folds", analyze_args.folds, "cross-fitting folds");
    analyze->add_option("--seed", analyze_args.seed, "RNG seed (default: CARD_SEED env or 42)");
    analyze->add_option("--workers", analyze_args.workers, "worker threads");
    analyze->add_option("--out", analyze_args.out_csv, "report CSV path");
    analyze->add_option("--json", analyze_args.out_json, "summary JSON path");

    SimulateArgs sim_args;
    CLI::App* simulate = app.add_subcommand("simulate", "Run a Monte Carlo grid");
    simulate->add_option("--preset", sim_args.preset,
                         "rct-p10 | rct-p100 | rct-full | obs | appendix-c | appendix-a | global-null");
    simulate->add_option("--scenario", sim_args.scenario,
                         "rct | observational | appendix_a | appendix_c | global_null");
    simulate->add_option("--n", sim_args.ns, "sample sizes")->delimiter(',');
    simulate->add_option("--p", sim_args.p, "covariate count (explicit grids)");
    simulate->add_option("--rho", sim_args.rhos, "correlation decay values")->delimiter(',');
    simulate->add_option("--sigma", sim_args.sigmas, "homoscedastic | heteroscedastic")->delimiter(',');
    simulate->add_option("--signal", sim_args.signals, "+1 | -1")->delimiter(',');
    simulate->add_option("--methods", sim_args.methods, "methods to run")->delimiter(',');
    simulate->add_option("--reps", sim_args.reps, "replications per cell");
    simulate->add_option("--alpha", sim_args.alpha, "FDR level");
    simulate->add_option("--seed", sim_args.seed, "RNG seed (default: CARD_SEED env or 42)");
    simulate->add_option("--workers", sim_args.workers, "worker threads");
    simulate->add_flag("--full-scale", sim_args.full_scale, "allow full-scale presets");
    simulate->add_option("--out", sim_args.out_csv, "metrics CSV path");
    simulate->add_option("--json", sim_args.out_json, "metrics JSON path");

    PlotArgs plot_args;
    CLI::App* plot = app.add_subcommand("plot", "Render SVG charts from a metrics CSV");
    plot->add_option("--metrics", plot_args.metrics_path, "metrics CSV path")->required();
    plot->add_option("--out-dir", plot_args.out_dir, "output directory");

    try {
        app.parse(argc, argv);
        if (analyze->parsed()) return run_analyze(analyze_args);
        if (simulate->parsed()) return run_simulate(sim_args);
        if (plot->parsed()) return run_plot(plot_args);
        return 2;
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;
    } catch (const card::config_error& e) {
        std::cerr << "configuration error: " << e.what() << "\n";
        return 2;
    } catch (const card::data_error& e) {
        std::cerr << "data error: " << e.what() << "\n";
        return 3;
    } catch (const card::internal_error& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    } catch (const std::exception& e) {
        std::cerr << "internal error: " << e.what() << "\n";
        return 4;
    }
}
