#pragma once

#include <cstddef>
#include <cstdint>

#include <json.hpp>

#include "evcp/angular.hpp"
#include "evcp/ingest.hpp"
#include "evcp/margins.hpp"

namespace evcp {

/// Forward GARCH(1,1) recursion with Gaussian innovations, started at the
/// stationary variance omega / (1 - alpha - beta). Dates are consecutive
/// days from 2000-01-02.
ReturnSeries simulate_garch11(const GarchParams& params, std::size_t n, Rng& rng);

/// Planted change-point: angles at times t <= tau_true come from theta1,
/// the rest from theta2.
struct SyntheticSpec {
    std::int64_t horizon = 1000;
    std::size_t n_exceed = 200;
    double tau_true = 500.0;
    BernsteinWeights theta1 = uniform_weights(4);
    BernsteinWeights theta2 = uniform_weights(4);
    std::uint64_t seed = 0;

    /// 0 < tau_true <= horizon, 1 <= n_exceed <= horizon, valid weights of
    /// equal order.
    void validate() const;
};

/// Exceedance times are a uniform subset of 1..horizon; radii are Pareto
/// placeholders above a threshold of 10 and play no role in the likelihood.
AngularSample simulate_changepoint_angles(const SyntheticSpec& spec);

nlohmann::json spec_json(const SyntheticSpec& spec);
SyntheticSpec spec_from_json(const nlohmann::json& j);

}  // namespace evcp
