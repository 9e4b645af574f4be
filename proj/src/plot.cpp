#include "card/plot.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <set>

#include "card/errors.hpp"

namespace card {

namespace {

constexpr int kWidth = 640;
constexpr int kHeight = 420;
constexpr int kMarginLeft = 62;
constexpr int kMarginRight = 150; // room for the legend
constexpr int kMarginTop = 40;
constexpr int kMarginBottom = 52;

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf", "#7f7f7f"};

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.6g", v);
    return buf;
}

// cell identity without n: one chart collects an n-grid
struct GroupKey {
    std::string scenario;
    std::size_t p;
    double rho;
    std::string sigma;
    int signal;
    double alpha;

    bool operator<(const GroupKey& o) const {
        return std::tie(scenario, p, rho, sigma, signal, alpha) <
               std::tie(o.scenario, o.p, o.rho, o.sigma, o.signal, o.alpha);
    }
};

std::string group_slug(const GroupKey& k) {
    std::string s = k.scenario + "_p" + std::to_string(k.p) + "_rho" + fmt(k.rho) + "_" +
                    (k.sigma == "homoscedastic" ? "homo" : "hetero") + "_" +
                    (k.signal >= 0 ? "rpos" : "rneg") + "_alpha" + fmt(k.alpha);
    std::replace(s.begin(), s.end(), '.', 'p');
    return s;
}

struct Series {
    std::vector<double> n, mean, se;
};

double x_pos(double n, double n_min, double n_max) {
    const double span = n_max > n_min ? n_max - n_min : 1.0;
    return kMarginLeft + (n - n_min) / span * (kWidth - kMarginLeft - kMarginRight);
}

double y_pos(double v) {
    const double clamped = std::clamp(v, 0.0, 1.0);
    return kMarginTop + (1.0 - clamped) * (kHeight - kMarginTop - kMarginBottom);
}

void render_chart(std::ofstream& out, const GroupKey& key, const std::string& metric,
                  const std::map<std::string, Series>& series, double alpha_line) {
    double n_min = 1e300, n_max = -1e300;
    for (const auto& [name, s] : series)
        for (const double n : s.n) {
            n_min = std::min(n_min, n);
            n_max = std::max(n_max, n);
        }

    out << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << kWidth << "\" height=\""
        << kHeight << "\" viewBox=\"0 0 " << kWidth << " " << kHeight << "\">\n";
    out << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
    out << "<text x=\"" << kMarginLeft << "\" y=\"22\" font-family=\"sans-serif\" font-size=\"14\">"
        << metric << " vs n — " << key.scenario << " p=" << key.p << " rho=" << fmt(key.rho) << " "
        << key.sigma << " signal=" << (key.signal >= 0 ? "+1" : "-1") << " alpha=" << fmt(key.alpha)
        << "</text>\n";

    // axes and y grid
    const double x0 = kMarginLeft, x1 = kWidth - kMarginRight;
    const double y0 = y_pos(0.0), y1 = y_pos(1.0);
    for (int tick = 0; tick <= 5; ++tick) {
        const double v = tick / 5.0;
        const double y = y_pos(v);
        out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x1)
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#dddddd\"/>\n";
        out << "<text x=\"" << fmt(x0 - 8) << "\" y=\"" << fmt(y + 4)
            << "\" text-anchor=\"end\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(v)
            << "</text>\n";
    }
    std::set<double> n_ticks;
    for (const auto& [name, s] : series) n_ticks.insert(s.n.begin(), s.n.end());
    for (const double n : n_ticks) {
        const double x = x_pos(n, n_min, n_max);
        out << "<line x1=\"" << fmt(x) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x) << "\" y2=\""
            << fmt(y0 + 5) << "\" stroke=\"black\"/>\n";
        out << "<text x=\"" << fmt(x) << "\" y=\"" << fmt(y0 + 20)
            << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"11\">" << fmt(n)
            << "</text>\n";
    }
    out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x1) << "\" y2=\""
        << fmt(y0) << "\" stroke=\"black\"/>\n";
    out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y0) << "\" x2=\"" << fmt(x0) << "\" y2=\""
        << fmt(y1) << "\" stroke=\"black\"/>\n";
    out << "<text x=\"" << fmt((x0 + x1) / 2) << "\" y=\"" << kHeight - 14
        << "\" text-anchor=\"middle\" font-family=\"sans-serif\" font-size=\"12\">n</text>\n";

    if (alpha_line > 0.0) {
        const double y = y_pos(alpha_line);
        out << "<line x1=\"" << fmt(x0) << "\" y1=\"" << fmt(y) << "\" x2=\"" << fmt(x1)
            << "\" y2=\"" << fmt(y) << "\" stroke=\"#888888\" stroke-dasharray=\"6 4\"/>\n";
    }

    int color = 0;
    int legend_row = 0;
    for (const auto& [name, s] : series) {
        const char* c = kPalette[color % (sizeof kPalette / sizeof kPalette[0])];
        ++color;

        // +/- 1 SE band
        std::string band;
        for (std::size_t i = 0; i < s.n.size(); ++i)
            band += fmt(x_pos(s.n[i], n_min, n_max)) + "," + fmt(y_pos(s.mean[i] + s.se[i])) + " ";
        for (std::size_t i = s.n.size(); i-- > 0;)
            band += fmt(x_pos(s.n[i], n_min, n_max)) + "," + fmt(y_pos(s.mean[i] - s.se[i])) + " ";
        out << "<polygon points=\"" << band << "\" fill=\"" << c << "\" fill-opacity=\"0.15\" "
            << "stroke=\"none\"/>\n";

        std::string pts;
        for (std::size_t i = 0; i < s.n.size(); ++i)
            pts += fmt(x_pos(s.n[i], n_min, n_max)) + "," + fmt(y_pos(s.mean[i])) + " ";
        out << "<polyline points=\"" << pts << "\" fill=\"none\" stroke=\"" << c
            << "\" stroke-width=\"2\"/>\n";
        for (std::size_t i = 0; i < s.n.size(); ++i)
            out << "<circle cx=\"" << fmt(x_pos(s.n[i], n_min, n_max)) << "\" cy=\""
                << fmt(y_pos(s.mean[i])) << "\" r=\"3\" fill=\"" << c << "\"/>\n";

        const double ly = kMarginTop + 14 + 18 * legend_row++;
        out << "<line x1=\"" << x1 + 12 << "\" y1=\"" << fmt(ly - 4) << "\" x2=\"" << x1 + 34
            << "\" y2=\"" << fmt(ly - 4) << "\" stroke=\"" << c << "\" stroke-width=\"2\"/>\n";
        out << "<text x=\"" << x1 + 40 << "\" y=\"" << fmt(ly)
            << "\" font-family=\"sans-serif\" font-size=\"11\">" << name << "</text>\n";
    }
    out << "</svg>\n";
}

} // namespace

std::vector<std::string> render_metric_svgs(std::span<const MetricsRow> rows,
                                            const std::string& out_dir) {
    if (rows.empty()) throw data_error("plot: empty metrics table");
    std::filesystem::create_directories(out_dir);

    std::map<GroupKey, std::map<std::string, Series>> groups;
    std::map<GroupKey, double> alphas;
    for (const MetricsRow& row : rows) {
        GroupKey key{scenario_name(row.cell.scenario), row.cell.p,         row.cell.rho,
                     sigma_mode_name(row.cell.sigma_mode), row.cell.signal_sign, row.cell.alpha};
        alphas[key] = row.cell.alpha;
        auto& s = groups[key][row.method];
        s.n.push_back(static_cast<double>(row.cell.n));
        s.mean.push_back(0.0); // filled below per metric
        s.se.push_back(0.0);
    }

    std::vector<std::string> written;
    for (const char* metric_name : {"power", "fdr"}) {
        const std::string metric = metric_name;
        for (auto& [key, series] : groups) {
            // rebuild the series for this metric, sorted by n
            std::map<std::string, Series> metric_series;
            for (const MetricsRow& row : rows) {
                GroupKey k{scenario_name(row.cell.scenario), row.cell.p,         row.cell.rho,
                           sigma_mode_name(row.cell.sigma_mode), row.cell.signal_sign, row.cell.alpha};
                if (!(k < key) && !(key < k)) {
                    auto& s = metric_series[row.method];
                    s.n.push_back(static_cast<double>(row.cell.n));
                    s.mean.push_back(metric == "power" ? row.power_mean : row.fdr_mean);
                    s.se.push_back(metric == "power" ? row.power_se : row.fdr_se);
                }
            }
            for (auto& [name, s] : metric_series) {
                std::vector<std::size_t> order(s.n.size());
                for (std::size_t i = 0; i < order.size(); ++i) order[i] = i;
                std::sort(order.begin(), order.end(),
                          [&](std::size_t a, std::size_t b) { return s.n[a] < s.n[b]; });
                Series sorted;
                for (const std::size_t i : order) {
                    sorted.n.push_back(s.n[i]);
                    sorted.mean.push_back(s.mean[i]);
                    sorted.se.push_back(s.se[i]);
                }
                s = std::move(sorted);
            }

            const std::string path =
                (std::filesystem::path(out_dir) / (group_slug(key) + "_" + metric + ".svg")).string();
            std::ofstream out(path, std::ios::binary);
            if (!out) throw data_error("plot: cannot write '" + path + "'");
            render_chart(out, key, metric, metric_series, metric == "fdr" ? alphas[key] : 0.0);
            written.push_back(path);
        }
    }
    return written;
}

} // namespace card
