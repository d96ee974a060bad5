#include "evcp/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evcp/error.hpp"

namespace evcp {

namespace {

constexpr double kSyntheticThreshold = 10.0;

}  // namespace

ReturnSeries simulate_garch11(const GarchParams& params, std::size_t n, Rng& rng) {
    if (!params.valid()) {
        throw InputError("simulation needs omega > 0, alpha, beta >= 0 and alpha + beta < 1");
    }
    ReturnSeries out;
    out.values.resize(n);
    out.dates.resize(n);
    std::normal_distribution<double> normal(0.0, 1.0);
    const std::chrono::sys_days start{Date{std::chrono::year{2000}, std::chrono::January,
                                           std::chrono::day{2}}};
    double var = params.omega / (1.0 - params.persistence());
    for (std::size_t t = 0; t < n; ++t) {
        const double eps = std::sqrt(var) * normal(rng);
        out.values[t] = params.mu + eps;
        out.dates[t] = Date{start + std::chrono::days{static_cast<int>(t)}};
        var = params.omega + params.alpha * eps * eps + params.beta * var;
    }
    return out;
}

void SyntheticSpec::validate() const {
    if (horizon < 1) {
        throw InputError("synthetic horizon must be positive");
    }
    if (!(tau_true > 0.0 && tau_true <= static_cast<double>(horizon))) {
        throw InputError("tau_true must lie in (0, T]");
    }
    if (n_exceed < 1 || n_exceed > static_cast<std::size_t>(horizon)) {
        throw InputError("n_exceed must lie in 1..T");
    }
    if (theta1.order() != theta2.order()) {
        throw InputError("theta1 and theta2 must share the Bernstein order");
    }
    require_valid(theta1);
    require_valid(theta2);
}

AngularSample simulate_changepoint_angles(const SyntheticSpec& spec) {
    spec.validate();
    Rng rng(spec.seed);

    // Partial Fisher-Yates over 1..T.
    std::vector<std::int64_t> pool(static_cast<std::size_t>(spec.horizon));
    std::iota(pool.begin(), pool.end(), std::int64_t{1});
    for (std::size_t i = 0; i < spec.n_exceed; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, pool.size() - 1);
        std::swap(pool[i], pool[pick(rng)]);
    }
    pool.resize(spec.n_exceed);
    std::sort(pool.begin(), pool.end());

    AngularSample s;
    s.horizon = spec.horizon;
    s.threshold = kSyntheticThreshold;
    s.times = std::move(pool);
    s.angles.reserve(spec.n_exceed);
    s.radii.reserve(spec.n_exceed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    for (std::int64_t t : s.times) {
        const auto& weights = static_cast<double>(t) <= spec.tau_true ? spec.theta1 : spec.theta2;
        s.angles.push_back(sample_angle(weights, rng));
        s.radii.push_back(kSyntheticThreshold / (1.0 - unit(rng)));
    }
    return s;
}

nlohmann::json spec_json(const SyntheticSpec& spec) {
    return nlohmann::json{{"T", spec.horizon},
                          {"n_exceed", spec.n_exceed},
                          {"tau_true", spec.tau_true},
                          {"theta1", spec.theta1},
                          {"theta2", spec.theta2},
                          {"seed", spec.seed}};
}

SyntheticSpec spec_from_json(const nlohmann::json& j) {
    try {
        SyntheticSpec spec;
        spec.horizon = j.at("T").get<std::int64_t>();
        spec.n_exceed = j.at("n_exceed").get<std::size_t>();
        spec.tau_true = j.at("tau_true").get<double>();
        spec.theta1 = weights_from_json(j.at("theta1"));
        spec.theta2 = weights_from_json(j.at("theta2"));
        if (j.contains("seed")) {
            spec.seed = j["seed"].get<std::uint64_t>();
        }
        return spec;
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed synthetic spec: ") + e.what());
    }
}

}  // namespace evcp
