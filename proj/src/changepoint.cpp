#include "evcp/changepoint.hpp"

#include <cmath>
#include <limits>
#include <sstream>

#include "evcp/error.hpp"

namespace evcp {

Regime regime_of(std::int64_t t, double tau) noexcept {
    return static_cast<double>(t) <= tau ? Regime::first : Regime::second;
}

double log_likelihood(const ChangePointModel& model, const AngularSample& sample) {
    require_valid(model.theta1);
    require_valid(model.theta2);
    double total = 0.0;
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const double w = sample.angles[i];
        if (!(w > 0.0 && w < 1.0)) {
            throw InputError("angle outside (0,1) at t=" + std::to_string(sample.times[i]));
        }
        const double h = eval_density(model.weights(regime_of(sample.times[i], model.tau)), w);
        const double lh = std::log(h);
        if (!std::isfinite(lh)) {
            std::ostringstream msg;
            msg.precision(17);
            msg << "angular density underflows at w=" << w << " (t=" << sample.times[i] << ")";
            throw NumericalError(msg.str());
        }
        total += lh;
    }
    return total;
}

double log_prior(const ChangePointModel& model, double horizon) {
    constexpr double kMinusInf = -std::numeric_limits<double>::infinity();
    if (!(horizon > 0.0) || !(model.tau > 0.0 && model.tau < horizon)) {
        return kMinusInf;
    }
    if (!validate_weights(model.theta1).ok || !validate_weights(model.theta2).ok) {
        return kMinusInf;
    }
    return -std::log(horizon);
}

double log_posterior(const ChangePointModel& model, const AngularSample& sample) {
    const double prior = log_prior(model, static_cast<double>(sample.horizon));
    if (!std::isfinite(prior)) {
        return prior;
    }
    return prior + log_likelihood(model, sample);
}

nlohmann::json model_json(const ChangePointModel& model, std::int64_t horizon) {
    const auto t1 = model.theta1.theta();
    const auto t2 = model.theta2.theta();
    return nlohmann::json{{"J", model.theta1.order()},
                          {"theta1", std::vector<double>(t1.begin(), t1.end())},
                          {"theta2", std::vector<double>(t2.begin(), t2.end())},
                          {"tau", model.tau},
                          {"T", horizon}};
}

ChangePointModel model_from_json(const nlohmann::json& j) {
    try {
        const int order = j.at("J").get<int>();
        return ChangePointModel{
            BernsteinWeights(order, j.at("theta1").get<std::vector<double>>()),
            BernsteinWeights(order, j.at("theta2").get<std::vector<double>>()),
            j.at("tau").get<double>()};
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed model JSON: ") + e.what());
    }
}

}  // namespace evcp
