#pragma once

#include <cstdint>

#include <json.hpp>

#include "evcp/angular.hpp"
#include "evcp/margins.hpp"

namespace evcp {

enum class Regime { first = 1, second = 2 };

/// Regime 1 covers t in [0, tau], regime 2 covers (tau, T].
Regime regime_of(std::int64_t t, double tau) noexcept;

/// Two Bernstein angular densities separated at a continuous change-point.
struct ChangePointModel {
    BernsteinWeights theta1;
    BernsteinWeights theta2;
    double tau = 0.0;

    const BernsteinWeights& weights(Regime r) const noexcept {
        return r == Regime::first ? theta1 : theta2;
    }

    friend bool operator==(const ChangePointModel&, const ChangePointModel&) = default;
};

/// Sum of log h_{theta1}(w_i) over t_i <= tau plus log h_{theta2}(w_i) over
/// the rest. Throws NumericalError naming the angle if a density underflows.
double log_likelihood(const ChangePointModel& model, const AngularSample& sample);

/// Flat prior on each constrained weight polytope and uniform tau on
/// (0, horizon): -log(horizon) inside the support, -infinity outside.
double log_prior(const ChangePointModel& model, double horizon);

double log_posterior(const ChangePointModel& model, const AngularSample& sample);

nlohmann::json model_json(const ChangePointModel& model, std::int64_t horizon);
ChangePointModel model_from_json(const nlohmann::json& j);

}  // namespace evcp
