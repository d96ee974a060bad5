#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "evcp/changepoint.hpp"
#include "evcp/date.hpp"
#include "evcp/margins.hpp"
#include "evcp/mcmc.hpp"

namespace evcp {

struct DensityCurve {
    std::vector<double> grid;
    std::vector<double> values;
    /// "1", "2" or "pooled".
    std::string regime;

    double trapezoid_integral() const;
};

/// `points` equally spaced angles from 0 to 1 inclusive. The endpoints are
/// kept because high-order components put much of their mass within one
/// grid step of 0 or 1.
std::vector<double> default_grid(std::size_t points = 512);

/// Pointwise posterior mean of the regime's Bernstein density.
DensityCurve predictive_density(const PosteriorDraws& draws, Regime regime,
                                std::span<const double> grid);

struct TauEstimate {
    /// Modal unit bin [day, day + 1) of the tau draws.
    std::int64_t day = 0;
    /// Calendar date of observation `day`, the last day of regime 1.
    std::optional<Date> date;
};

TauEstimate tau_estimate(const PosteriorDraws& draws, std::span<const Date> calendar = {});

/// Equal-tailed interval from linearly interpolated empirical quantiles.
std::pair<double, double> tau_interval(const PosteriorDraws& draws, double level = 0.95);

struct Histogram {
    std::vector<double> edges;
    std::vector<std::size_t> counts;

    std::size_t total() const noexcept;
};

/// Equal-width bins on [0,1]; an angle on an interior edge goes to the upper bin.
Histogram angle_histogram(std::span<const double> angles, std::size_t bins);

struct ExportOptions {
    std::size_t bins = 20;
    std::size_t grid_points = 512;
    double level = 0.95;
};

/// Writes hist_whole.csv, hist_regime{1,2}.csv, density_regime{1,2}.csv,
/// density_pooled.csv (when a single-regime fit is supplied), the
/// pooled_refit.json marker and summary.json into `out_dir`. `extra` is
/// merged into summary.json. Returns the summary document.
nlohmann::json export_plot_data(const AngularSample& sample, const PosteriorDraws& draws,
                                const PosteriorDraws* pooled,
                                const std::filesystem::path& out_dir,
                                const ExportOptions& options = {},
                                const nlohmann::json& extra = nlohmann::json::object());

void write_density_csv(const DensityCurve& curve, const std::filesystem::path& path);
DensityCurve read_density_csv(const std::filesystem::path& path);

}  // namespace evcp
