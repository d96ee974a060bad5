#pragma once

#include <cstddef>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "evcp/date.hpp"

namespace evcp {

/// Daily closing prices on strictly increasing dates.
struct PriceSeries {
    std::vector<Date> dates;
    std::vector<double> prices;

    std::size_t size() const noexcept { return prices.size(); }

    /// Throws InputError unless dates are strictly increasing, prices are
    /// positive and there are at least two rows.
    void validate() const;
};

/// Negative log returns x_t, each dated by the later of the two prices.
struct ReturnSeries {
    std::vector<Date> dates;
    std::vector<double> values;

    std::size_t size() const noexcept { return values.size(); }
};

struct GarchParams {
    double mu = 0.0;
    double omega = 1.0;
    double alpha = 0.0;
    double beta = 0.0;

    double persistence() const noexcept { return alpha + beta; }

    /// omega > 0, alpha >= 0, beta >= 0, alpha + beta < 1.
    bool valid() const noexcept;
};

struct GarchOptions {
    int max_iterations = 20000;
    /// Simplex-size tolerance in the transformed (unconstrained) coordinates.
    double tolerance = 1e-9;
    /// Fresh simplexes started from the incumbent after the first search.
    int restarts = 3;
    /// Persistence above which a boundary-collapse warning is attached.
    double persistence_warning = 0.999;
};

struct GarchFit {
    GarchParams params;
    std::vector<double> cond_var;
    std::vector<double> residuals;
    double loglik = 0.0;
    int iterations = 0;
    std::vector<std::string> warnings;
};

/// Conditional variances, standardized residuals and the Gaussian
/// log-likelihood of a GARCH(1,1) filter run with fixed parameters.
struct GarchFilterResult {
    std::vector<double> cond_var;
    std::vector<double> residuals;
    double loglik = 0.0;
};

/// Standardized residuals of two assets on their common dates.
struct ResidualPairs {
    std::vector<Date> dates;
    std::vector<double> first;
    std::vector<double> second;

    std::size_t size() const noexcept { return dates.size(); }
};

/// Reads a `date,close` CSV. Rows may appear in any order and are sorted by
/// date; duplicate dates, malformed rows and non-positive prices are
/// rejected with the offending line number.
PriceSeries load_price_csv(const std::filesystem::path& path);
PriceSeries parse_price_csv(std::istream& in, std::string_view source = "<stream>");

ReturnSeries negative_log_returns(const PriceSeries& prices);

/// Gaussian quasi-log-likelihood of GARCH(1,1) with constant mean.
///
/// The presample squared innovation and variance are both set to the mean of
/// (x_t - mu)^2, so sigma_1^2 = omega + (alpha + beta) * backcast and every
/// sigma_t^2 >= omega. Throws NumericalError when an intermediate value is
/// not finite.
double garch_loglik(const GarchParams& params, std::span<const double> returns);

GarchFilterResult garch_filter(const GarchParams& params, std::span<const double> returns);

/// Quasi-maximum-likelihood fit by Nelder-Mead over log(omega), a logistic
/// map of alpha + beta and a logistic split between alpha and beta. Requires
/// at least 50 observations.
GarchFit fit_garch11(const ReturnSeries& returns, const GarchOptions& options = {});

/// Pairs the residuals of two fits on the intersection of their dates.
ResidualPairs align_pairs(std::span<const Date> dates_a, const GarchFit& fit_a,
                          std::span<const Date> dates_b, const GarchFit& fit_b);

void to_json(nlohmann::json& j, const GarchParams& params);
void from_json(const nlohmann::json& j, GarchParams& params);

/// Fit report with per-date conditional variances and residuals.
nlohmann::json garch_fit_json(const GarchFit& fit, std::span<const Date> dates);

}  // namespace evcp
