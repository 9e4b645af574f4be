#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "card/baselines.hpp"
#include "card/conformal.hpp"
#include "card/dataset.hpp"
#include "card/errors.hpp"
#include "card/simulation.hpp"

namespace py = pybind11;

namespace {

card::Matrix matrix_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 2) throw card::config_error("x must be a 2-d array");
    card::Matrix m(static_cast<std::size_t>(a.shape(0)), static_cast<std::size_t>(a.shape(1)));
    std::copy(a.data(), a.data() + a.size(), m.values.begin());
    return m;
}

std::vector<double> vector_from_numpy(const py::array_t<double, py::array::c_style | py::array::forcecast>& a) {
    if (a.ndim() != 1) throw card::config_error("expected a 1-d array");
    return {a.data(), a.data() + a.size()};
}

card::Dataset make_dataset(const py::array_t<double, py::array::c_style | py::array::forcecast>& x,
                           const py::array_t<double, py::array::c_style | py::array::forcecast>& y,
                           const py::array_t<double, py::array::c_style | py::array::forcecast>& t,
                           const py::object& propensity) {
    const std::vector<double> tv = vector_from_numpy(t);
    std::vector<std::uint8_t> tb(tv.size());
    for (std::size_t i = 0; i < tv.size(); ++i) {
        if (tv[i] != 0.0 && tv[i] != 1.0)
            throw card::data_error("treatment indicator outside {0,1} at row " + std::to_string(i));
        tb[i] = static_cast<std::uint8_t>(tv[i]);
    }
    std::optional<std::vector<double>> prop;
    if (!propensity.is_none())
        prop = vector_from_numpy(
            propensity.cast<py::array_t<double, py::array::c_style | py::array::forcecast>>());
    return card::Dataset(matrix_from_numpy(x), vector_from_numpy(y), std::move(tb), std::move(prop));
}

py::dict report_to_dict(const card::PValueReport& report) {
    const std::size_t m = report.rows.size();
    py::array_t<std::int64_t> index(m);
    py::array_t<double> score(m), weight(m), pvalue(m);
    py::array_t<bool> rejected(m);
    auto* idx = index.mutable_data();
    auto* sc = score.mutable_data();
    auto* wt = weight.mutable_data();
    auto* pv = pvalue.mutable_data();
    auto* rj = rejected.mutable_data();
    for (std::size_t i = 0; i < m; ++i) {
        idx[i] = static_cast<std::int64_t>(report.rows[i].index);
        sc[i] = report.rows[i].score;
        wt[i] = report.rows[i].weight;
        pv[i] = report.rows[i].pvalue;
        rj[i] = report.rows[i].rejected;
    }
    py::dict out;
    out["index"] = index;
    out["score"] = score;
    out["weight"] = weight;
    out["pvalue"] = pvalue;
    out["rejected"] = rejected;
    out["method"] = report.method;
    out["alpha"] = report.alpha;
    out["seed"] = report.seed;
    out["n_knockoffs"] = report.n_knockoffs;
    if (report.method == "cqr") out["crossing_swaps"] = report.crossing_swaps;
    return out;
}

card::ScenarioConfig scenario_from_kwargs(const std::string& scenario, std::size_t n, std::size_t p,
                                          double rho, const std::string& sigma, int signal, int reps,
                                          double alpha, std::uint64_t seed) {
    card::ScenarioConfig cfg;
    cfg.scenario = card::parse_scenario(scenario);
    cfg.n = n;
    cfg.p = p;
    cfg.rho = rho;
    cfg.sigma_mode = card::parse_sigma_mode(sigma);
    cfg.signal_sign = signal;
    cfg.reps = reps;
    cfg.alpha = alpha;
    cfg.seed = seed;
    return cfg;
}

} // namespace

PYBIND11_MODULE(_card, m) {
    m.doc() = "Treatment responder detection with finite-sample FDR control";

    py::register_exception<card::config_error>(m, "ConfigError", PyExc_ValueError);
    py::register_exception<card::data_error>(m, "DataError", PyExc_ValueError);
    py::register_exception<card::internal_error>(m, "InternalError", PyExc_RuntimeError);

    py::class_<card::Dataset>(m, "Dataset")
        .def(py::init(&make_dataset), py::arg("x"), py::arg("y"), py::arg("t"),
             py::arg("propensity") = py::none())
        .def_property_readonly("n", &card::Dataset::n)
        .def_property_readonly("p", &card::Dataset::p)
        .def_property_readonly("n_treated", &card::Dataset::n_treated)
        .def_property_readonly("x",
                               [](const card::Dataset& d) {
                                   py::array_t<double> out({d.n(), d.p()});
                                   std::copy(d.x().values.begin(), d.x().values.end(),
                                             out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("y",
                               [](const card::Dataset& d) {
                                   py::array_t<double> out(d.n());
                                   std::copy(d.y().begin(), d.y().end(), out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("t",
                               [](const card::Dataset& d) {
                                   py::array_t<std::uint8_t> out(d.n());
                                   std::copy(d.t().begin(), d.t().end(), out.mutable_data());
                                   return out;
                               })
        .def_property_readonly("oracle_propensity",
                               [](const card::Dataset& d) -> py::object {
                                   if (!d.oracle_propensity()) return py::none();
                                   py::array_t<double> out(d.n());
                                   std::copy(d.oracle_propensity()->begin(),
                                             d.oracle_propensity()->end(), out.mutable_data());
                                   return out;
                               })
        .def("treated_indices", &card::Dataset::treated_indices)
        .def("__repr__", [](const card::Dataset& d) {
            return "Dataset(n=" + std::to_string(d.n()) + ", p=" + std::to_string(d.p()) +
                   ", treated=" + std::to_string(d.n_treated()) + ")";
        });

    m.def(
        "load_csv",
        [](const std::string& path, const std::string& response, const std::string& treatment,
           const py::object& propensity_col) {
            card::CsvSchema schema;
            schema.response = response;
            schema.treatment = treatment;
            if (!propensity_col.is_none()) schema.propensity = propensity_col.cast<std::string>();
            return card::load_csv(path, schema);
        },
        py::arg("path"), py::arg("response") = "y", py::arg("treatment") = "t",
        py::arg("propensity_col") = py::none());

    m.def(
        "analyze",
        [](const card::Dataset& d, const std::string& method, double alpha, double knockoff_fraction,
           const std::string& propensity, int folds, std::uint64_t seed, int workers) {
            card::AnalysisConfig cfg;
            cfg.alpha = alpha;
            cfg.knockoff_fraction = knockoff_fraction;
            cfg.propensity = card::parse_propensity_mode(propensity);
            cfg.cross_fit_folds = folds;
            cfg.seed = seed;
            cfg.workers = workers;
            card::PValueReport report;
            if (method == "card") {
                report = card::card_analyze(d, cfg);
            } else if (method == "global") {
                report = card::global_analyze(d, alpha);
            } else if (method == "cqr") {
                report = card::cqr_analyze(d, alpha, card::CQRConfig{}, seed);
            } else if (method == "adadetect_rf") {
                report = card::adadetect_generic(d, cfg, card::ForestParams{});
            } else {
                throw card::config_error("unknown method '" + method + "'");
            }
            report.seed = seed;
            return report_to_dict(report);
        },
        py::arg("dataset"), py::arg("method") = "card", py::arg("alpha") = 0.1,
        py::arg("knockoff_fraction") = 0.2, py::arg("propensity") = "none", py::arg("folds") = 10,
        py::arg("seed") = 42, py::arg("workers") = 1);

    m.def(
        "adadetect_pvalue",
        [](const std::vector<double>& knockoff_scores, double test_score) {
            return card::adadetect_pvalue(knockoff_scores, test_score);
        },
        py::arg("knockoff_scores"), py::arg("test_score"));

    m.def(
        "weighted_pvalue",
        [](const std::vector<double>& knockoff_scores, const std::vector<double>& knockoff_e,
           double test_score, double test_e) {
            return card::weighted_pvalue(knockoff_scores, knockoff_e, test_score, test_e);
        },
        py::arg("knockoff_scores"), py::arg("knockoff_e"), py::arg("test_score"), py::arg("test_e"));

    m.def(
        "bh_adjust",
        [](const std::vector<double>& pvalues, double alpha) {
            const std::vector<std::uint8_t> flags = card::bh_adjust(pvalues, alpha);
            py::array_t<bool> out(flags.size());
            auto* data = out.mutable_data();
            for (std::size_t i = 0; i < flags.size(); ++i) data[i] = flags[i] != 0;
            return out;
        },
        py::arg("pvalues"), py::arg("alpha") = 0.1);

    m.def(
        "generate",
        [](const std::string& scenario, std::size_t n, std::size_t p, double rho,
           const std::string& sigma, int signal, std::uint64_t seed) {
            const card::ScenarioConfig cfg =
                scenario_from_kwargs(scenario, n, p, rho, sigma, signal, 1, 0.1, seed);
            card::Rng rng(seed);
            auto [data, truth] = card::generate(cfg, rng);
            py::array_t<bool> nonnull(truth.nonnull.size());
            auto* nn = nonnull.mutable_data();
            for (std::size_t i = 0; i < truth.nonnull.size(); ++i) nn[i] = truth.nonnull[i] != 0;
            py::dict out;
            out["dataset"] = py::cast(std::move(data));
            out["nonnull"] = nonnull;
            if (!truth.conditional_null.empty()) {
                py::array_t<bool> cond(truth.conditional_null.size());
                auto* cd = cond.mutable_data();
                for (std::size_t i = 0; i < truth.conditional_null.size(); ++i)
                    cd[i] = truth.conditional_null[i] != 0;
                out["conditional_null"] = cond;
            }
            return out;
        },
        py::arg("scenario") = "rct", py::arg("n") = 1000, py::arg("p") = 10, py::arg("rho") = 0.0,
        py::arg("sigma") = "homoscedastic", py::arg("signal") = 1, py::arg("seed") = 42);

    m.def(
        "run_experiment",
        [](const std::vector<py::dict>& cells, const std::vector<std::string>& methods, int workers) {
            std::vector<card::ScenarioConfig> grid;
            for (const py::dict& c : cells) {
                grid.push_back(scenario_from_kwargs(
                    c.contains("scenario") ? c["scenario"].cast<std::string>() : "rct",
                    c.contains("n") ? c["n"].cast<std::size_t>() : 1000,
                    c.contains("p") ? c["p"].cast<std::size_t>() : 10,
                    c.contains("rho") ? c["rho"].cast<double>() : 0.0,
                    c.contains("sigma") ? c["sigma"].cast<std::string>() : "homoscedastic",
                    c.contains("signal") ? c["signal"].cast<int>() : 1,
                    c.contains("reps") ? c["reps"].cast<int>() : 10,
                    c.contains("alpha") ? c["alpha"].cast<double>() : 0.1,
                    c.contains("seed") ? c["seed"].cast<std::uint64_t>() : 42));
            }
            const std::vector<card::MetricsRow> rows = card::run_experiment(grid, methods, workers);
            py::list out;
            for (const card::MetricsRow& row : rows) {
                py::dict r;
                r["scenario"] = card::scenario_name(row.cell.scenario);
                r["n"] = row.cell.n;
                r["p"] = row.cell.p;
                r["rho"] = row.cell.rho;
                r["sigma"] = card::sigma_mode_name(row.cell.sigma_mode);
                r["signal"] = row.cell.signal_sign;
                r["alpha"] = row.cell.alpha;
                r["method"] = row.method;
                r["reps"] = row.reps_done;
                r["errors"] = row.errors;
                r["fdr_mean"] = row.fdr_mean;
                r["fdr_se"] = row.fdr_se;
                r["power_mean"] = row.power_mean;
                r["power_se"] = row.power_se;
                r["cond_null_reject_mean"] = row.cond_null_reject_mean;
                r["cond_null_reject_se"] = row.cond_null_reject_se;
                out.append(std::move(r));
            }
            return out;
        },
        py::arg("cells"), py::arg("methods"), py::arg("workers") = 1);

    m.attr("__version__") = "0.1.0";
}
