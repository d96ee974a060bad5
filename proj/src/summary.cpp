#include "evcp/summary.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <iomanip>
#include <map>
#include <sstream>

#include "evcp/error.hpp"

namespace evcp {

namespace {

void write_histogram(const Histogram& h, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << std::setprecision(17) << "bin_lo,bin_hi,count\n";
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
        out << h.edges[b] << ',' << h.edges[b + 1] << ',' << h.counts[b] << '\n';
    }
}

void write_json(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

}  // namespace

double DensityCurve::trapezoid_integral() const {
    double acc = 0.0;
    for (std::size_t k = 1; k < grid.size(); ++k) {
        acc += 0.5 * (values[k] + values[k - 1]) * (grid[k] - grid[k - 1]);
    }
    return acc;
}

std::vector<double> default_grid(std::size_t points) {
    if (points < 2) {
        throw InputError("grid needs at least two points");
    }
    std::vector<double> grid(points);
    for (std::size_t k = 0; k < points; ++k) {
        grid[k] = static_cast<double>(k) / static_cast<double>(points - 1);
    }
    return grid;
}

DensityCurve predictive_density(const PosteriorDraws& draws, Regime regime,
                                std::span<const double> grid) {
    if (draws.empty()) {
        throw InputError("predictive density needs at least one draw");
    }
    for (std::size_t g = 0; g < grid.size(); ++g) {
        if (!(grid[g] >= 0.0 && grid[g] <= 1.0) || (g > 0 && !(grid[g] > grid[g - 1]))) {
            throw InputError("density grid must be strictly increasing within [0,1]");
        }
    }
    const int order = draws.draws.front().weights(regime).order();
    const std::size_t cols = static_cast<std::size_t>(order - 1);
    std::vector<double> basis(grid.size() * cols);
    for (std::size_t g = 0; g < grid.size(); ++g) {
        for (int i = 1; i < order; ++i) {
            basis[g * cols + static_cast<std::size_t>(i - 1)] = bernstein_basis(grid[g], i, order);
        }
    }

    // Averaging weights first is the same as averaging densities: h is linear in theta.
    std::vector<double> mean_theta(cols, 0.0);
    for (const auto& m : draws.draws) {
        const auto theta = m.weights(regime).theta();
        if (theta.size() != cols) {
            throw InputError("draws disagree on the Bernstein order");
        }
        for (std::size_t i = 0; i < cols; ++i) {
            mean_theta[i] += theta[i];
        }
    }
    for (double& t : mean_theta) {
        t /= static_cast<double>(draws.size());
    }

    DensityCurve curve;
    curve.grid.assign(grid.begin(), grid.end());
    curve.values.resize(grid.size());
    curve.regime = regime == Regime::first ? "1" : "2";
    for (std::size_t g = 0; g < grid.size(); ++g) {
        double h = 0.0;
        for (std::size_t i = 0; i < cols; ++i) {
            h += mean_theta[i] * basis[g * cols + i];
        }
        curve.values[g] = h;
    }
    return curve;
}

TauEstimate tau_estimate(const PosteriorDraws& draws, std::span<const Date> calendar) {
    if (draws.empty()) {
        throw InputError("tau estimate needs at least one draw");
    }
    std::map<std::int64_t, std::size_t> bins;
    for (const auto& m : draws.draws) {
        ++bins[static_cast<std::int64_t>(std::floor(m.tau))];
    }
    TauEstimate est;
    std::size_t best = 0;
    for (const auto& [day, count] : bins) {
        if (count > best) {
            best = count;
            est.day = day;
        }
    }
    if (est.day >= 1 && static_cast<std::size_t>(est.day) <= calendar.size()) {
        est.date = calendar[static_cast<std::size_t>(est.day - 1)];
    }
    return est;
}

std::pair<double, double> tau_interval(const PosteriorDraws& draws, double level) {
    if (!(level > 0.0 && level < 1.0)) {
        throw InputError("interval level must lie in (0,1)");
    }
    if (draws.size() < 2) {
        throw InputError("tau interval needs at least two draws");
    }
    std::vector<double> taus;
    taus.reserve(draws.size());
    for (const auto& m : draws.draws) {
        taus.push_back(m.tau);
    }
    std::sort(taus.begin(), taus.end());
    const auto quantile = [&](double p) {
        const double h = p * static_cast<double>(taus.size() - 1);
        const auto lo = static_cast<std::size_t>(std::floor(h));
        const std::size_t hi = std::min(lo + 1, taus.size() - 1);
        return taus[lo] + (h - static_cast<double>(lo)) * (taus[hi] - taus[lo]);
    };
    const double alpha = 1.0 - level;
    return {quantile(alpha / 2.0), quantile(1.0 - alpha / 2.0)};
}

std::size_t Histogram::total() const noexcept {
    std::size_t n = 0;
    for (auto c : counts) {
        n += c;
    }
    return n;
}

Histogram angle_histogram(std::span<const double> angles, std::size_t bins) {
    if (bins == 0) {
        throw InputError("histogram needs at least one bin");
    }
    Histogram h;
    h.edges.resize(bins + 1);
    for (std::size_t b = 0; b <= bins; ++b) {
        h.edges[b] = static_cast<double>(b) / static_cast<double>(bins);
    }
    h.counts.assign(bins, 0);
    for (double w : angles) {
        const auto b = static_cast<std::size_t>(
            std::clamp(std::floor(w * static_cast<double>(bins)), 0.0, static_cast<double>(bins - 1)));
        ++h.counts[b];
    }
    return h;
}

void write_density_csv(const DensityCurve& curve, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << std::setprecision(17) << "w,h\n";
    for (std::size_t k = 0; k < curve.grid.size(); ++k) {
        out << curve.grid[k] << ',' << curve.values[k] << '\n';
    }
}

DensityCurve read_density_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open " + path.string());
    }
    DensityCurve curve;
    std::string line;
    std::getline(in, line);
    while (std::getline(in, line)) {
        if (line.empty()) {
            continue;
        }
        const auto comma = line.find(',');
        if (comma == std::string::npos) {
            throw InputError("malformed density row in " + path.string());
        }
        curve.grid.push_back(std::stod(line.substr(0, comma)));
        curve.values.push_back(std::stod(line.substr(comma + 1)));
    }
    return curve;
}

nlohmann::json export_plot_data(const AngularSample& sample, const PosteriorDraws& draws,
                                const PosteriorDraws* pooled,
                                const std::filesystem::path& out_dir,
                                const ExportOptions& options, const nlohmann::json& extra) {
    std::error_code ec;
    std::filesystem::create_directories(out_dir, ec);
    if (ec || !std::filesystem::is_directory(out_dir)) {
        throw InputError("cannot create output directory " + out_dir.string());
    }

    const TauEstimate tau = tau_estimate(draws, sample.calendar);
    std::vector<double> first;
    std::vector<double> second;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        (sample.times[i] <= tau.day ? first : second).push_back(sample.angles[i]);
    }
    write_histogram(angle_histogram(sample.angles, options.bins), out_dir / "hist_whole.csv");
    write_histogram(angle_histogram(first, options.bins), out_dir / "hist_regime1.csv");
    write_histogram(angle_histogram(second, options.bins), out_dir / "hist_regime2.csv");

    const auto grid = default_grid(options.grid_points);
    const DensityCurve d1 = predictive_density(draws, Regime::first, grid);
    const DensityCurve d2 = predictive_density(draws, Regime::second, grid);
    write_density_csv(d1, out_dir / "density_regime1.csv");
    write_density_csv(d2, out_dir / "density_regime2.csv");

    nlohmann::json marker{{"fitted", pooled != nullptr}};
    std::optional<double> pooled_integral;
    if (pooled != nullptr) {
        DensityCurve dp = predictive_density(*pooled, Regime::first, grid);
        dp.regime = "pooled";
        write_density_csv(dp, out_dir / "density_pooled.csv");
        pooled_integral = dp.trapezoid_integral();
        marker["file"] = "density_pooled.csv";
        marker["K"] = pooled->size();
        marker["fixed_tau"] = pooled->config.fixed_tau ? nlohmann::json(*pooled->config.fixed_tau)
                                                       : nlohmann::json();
    } else {
        marker["file"] = nullptr;
    }
    write_json(marker, out_dir / "pooled_refit.json");

    nlohmann::json summary;
    summary["tau"] = {{"day", tau.day},
                      {"date", tau.date ? nlohmann::json(format_date(*tau.date)) : nlohmann::json()}};
    if (draws.size() >= 2) {
        const auto [lo, hi] = tau_interval(draws, options.level);
        summary["tau_interval"] = {{"level", options.level}, {"lo", lo}, {"hi", hi}};
    }
    summary["K"] = draws.size();
    summary["J"] = draws.order;
    summary["T"] = sample.horizon;
    summary["N"] = sample.size();
    summary["threshold"] = sample.threshold ? nlohmann::json(*sample.threshold) : nlohmann::json();
    summary["q"] = sample.level ? nlohmann::json(*sample.level) : nlohmann::json();
    summary["regime_counts"] = {first.size(), second.size()};
    summary["bins"] = options.bins;
    summary["density_integrals"] = {
        {"regime1", d1.trapezoid_integral()},
        {"regime2", d2.trapezoid_integral()},
        {"pooled", pooled_integral ? nlohmann::json(*pooled_integral) : nlohmann::json()}};
    summary.update(extra);
    write_json(summary, out_dir / "summary.json");
    return summary;
}

}  // namespace evcp
