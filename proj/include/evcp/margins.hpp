#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <vector>

#include "evcp/date.hpp"
#include "evcp/ingest.hpp"

namespace evcp {

/// Residual pairs on the unit-Pareto scale. Observation t (1-based) sits at
/// index t - 1; `dates` is either empty or one date per observation.
struct ParetoPairs {
    std::vector<Date> dates;
    std::vector<double> first;
    std::vector<double> second;

    std::size_t size() const noexcept { return first.size(); }
};

/// Pseudo-angles and radii at observation times 1..horizon.
///
/// Before thresholding every observation is present; afterwards only the
/// exceedances remain but `horizon` and `calendar` still describe the full
/// observation window, so times keep their meaning for the change-point.
struct AngularSample {
    std::vector<std::int64_t> times;
    std::vector<double> angles;
    std::vector<double> radii;
    std::int64_t horizon = 0;
    std::optional<double> threshold;
    std::optional<double> level;
    /// Calendar date of each observation time (index t - 1), or empty.
    std::vector<Date> calendar;

    std::size_t size() const noexcept { return angles.size(); }
    bool empty() const noexcept { return angles.empty(); }

    std::optional<Date> date_of(std::int64_t t) const;

    /// Throws InputError unless columns agree in length, angles are in (0,1),
    /// radii are positive and times are strictly increasing within
    /// 1..horizon.
    void validate() const;
};

/// value_i = 1 / (1 - R_i / (n + 1)), with R_i the stable rank (1 = smallest).
std::vector<double> rank_pareto_transform(std::span<const double> residuals);

ParetoPairs to_pareto_pairs(const ResidualPairs& pairs);

/// w_i = e1 / (e1 + e2), r_i = e1 + e2, times 1..n.
AngularSample make_angular_sample(const ParetoPairs& pairs);

/// ceil((1 - q) * horizon); the count kept by threshold_exceedances.
std::size_t exceedance_count(std::int64_t horizon, double q);

/// Keeps the exceedance_count(horizon, q) largest radii (earlier time wins a
/// tie), in time order, recording the smallest kept radius as threshold.
AngularSample threshold_exceedances(const AngularSample& sample, double q = 0.90);

/// Writes `t,date,w,r` rows to `csv` and horizon/threshold/q/calendar to the
/// JSON sidecar returned by sidecar_path(csv).
void write_angular_sample(const AngularSample& sample, const std::filesystem::path& csv);
AngularSample read_angular_sample(const std::filesystem::path& csv);
std::filesystem::path sidecar_path(const std::filesystem::path& csv);

}  // namespace evcp
