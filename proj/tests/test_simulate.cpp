#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evcp/error.hpp"
#include "evcp/simulate.hpp"
#include "support.hpp"

using namespace evcp;

namespace {

double variance(const std::vector<double>& v) {
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    double acc = 0.0;
    for (double x : v) {
        acc += (x - m) * (x - m);
    }
    return acc / static_cast<double>(v.size() - 1);
}

double mean(const std::vector<double>& v) {
    return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

/// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    std::size_t i = 0;
    std::size_t j = 0;
    double d = 0.0;
    while (i < a.size() && j < b.size()) {
        const double x = std::min(a[i], b[j]);
        while (i < a.size() && a[i] <= x) {
            ++i;
        }
        while (j < b.size() && b[j] <= x) {
            ++j;
        }
        d = std::max(d, std::abs(static_cast<double>(i) / a.size() - static_cast<double>(j) / b.size()));
    }
    return d;
}

SyntheticSpec canonical(std::uint64_t seed) {
    SyntheticSpec spec;
    spec.horizon = 1000;
    spec.n_exceed = 200;
    spec.tau_true = 500.0;
    spec.theta1 = BernsteinWeights(4, {0.5, 0.0, 0.5});
    spec.theta2 = BernsteinWeights(4, {0.0, 1.0, 0.0});
    spec.seed = seed;
    return spec;
}

}  // namespace

TEST_CASE("GARCH path simulation") {
    Rng rng(1);
    const auto iid = simulate_garch11(GarchParams{0.3, 2.0, 0.0, 0.0}, 100000, rng);
    CHECK(std::abs(variance(iid.values) / 2.0 - 1.0) < 0.05);
    CHECK(std::abs(mean(iid.values) - 0.3) < 0.03);

    const auto garch = simulate_garch11(GarchParams{0.0, 0.1, 0.1, 0.8}, 100000, rng);
    CHECK(std::abs(variance(garch.values) - 1.0) < 0.1);
    CHECK(garch.dates.size() == 100000);
    CHECK(garch.dates[1] == testing::day_offset(garch.dates[0], 1));

    Rng a(9);
    Rng b(9);
    CHECK(simulate_garch11(GarchParams{0.0, 0.1, 0.1, 0.8}, 500, a).values ==
          simulate_garch11(GarchParams{0.0, 0.1, 0.1, 0.8}, 500, b).values);
    CHECK_THROWS_AS(simulate_garch11(GarchParams{0.0, 0.1, 0.5, 0.5}, 10, a), InputError);
}

TEST_CASE("planted change-point samples") {
    SUBCASE("shape contract") {
        const auto s = simulate_changepoint_angles(canonical(3));
        CHECK(s.size() == 200);
        CHECK(s.horizon == 1000);
        s.validate();
        for (std::size_t i = 0; i < s.size(); ++i) {
            REQUIRE(s.angles[i] > 0.0);
            REQUIRE(s.angles[i] < 1.0);
            REQUIRE(s.times[i] >= 1);
            REQUIRE(s.times[i] <= 1000);
            REQUIRE(s.radii[i] >= *s.threshold);
            if (i > 0) {
                REQUIRE(s.times[i] > s.times[i - 1]);
            }
        }
        CHECK(simulate_changepoint_angles(canonical(3)).angles == s.angles);
        CHECK_FALSE(simulate_changepoint_angles(canonical(4)).angles == s.angles);
    }

    SUBCASE("equal regimes are indistinguishable across the split") {
        SyntheticSpec spec = canonical(11);
        spec.theta2 = spec.theta1;
        spec.horizon = 4000;
        spec.n_exceed = 2000;
        spec.tau_true = 2000.0;
        const auto s = simulate_changepoint_angles(spec);
        std::vector<double> before;
        std::vector<double> after;
        for (std::size_t i = 0; i < s.size(); ++i) {
            (s.times[i] <= 2000 ? before : after).push_back(s.angles[i]);
        }
        const double n = static_cast<double>(before.size());
        const double m = static_cast<double>(after.size());
        // 1% critical value of the two-sample statistic.
        const double critical = 1.628 * std::sqrt((n + m) / (n * m));
        CHECK(ks_statistic(before, after) < critical);
    }

    SUBCASE("tau_true at the horizon draws everything from theta1") {
        SyntheticSpec spec = canonical(5);
        spec.tau_true = 1000.0;
        SyntheticSpec same = spec;
        same.theta2 = same.theta1;
        CHECK(simulate_changepoint_angles(spec).angles == simulate_changepoint_angles(same).angles);
    }

    SUBCASE("canonical regime moments") {
        double m1 = 0.0;
        double m2 = 0.0;
        double v1 = 0.0;
        double v2 = 0.0;
        constexpr int kReps = 50;
        for (int rep = 0; rep < kReps; ++rep) {
            const auto s = simulate_changepoint_angles(canonical(100 + rep));
            std::vector<double> before;
            std::vector<double> after;
            for (std::size_t i = 0; i < s.size(); ++i) {
                (s.times[i] <= 500 ? before : after).push_back(s.angles[i]);
            }
            m1 += mean(before) / kReps;
            m2 += mean(after) / kReps;
            v1 += variance(before) / kReps;
            v2 += variance(after) / kReps;
        }
        CHECK(std::abs(m1 - 0.5) < 0.02);
        CHECK(std::abs(m2 - 0.5) < 0.02);
        CHECK(std::abs(v1 - 0.1) < 0.01);
        CHECK(std::abs(v2 - 0.05) < 0.01);
    }

    SUBCASE("pooled mean is one half for any valid weights") {
        std::mt19937_64 wrng(8);
        for (int order : {4, 9, 25}) {
            SyntheticSpec spec;
            spec.horizon = 10000;
            spec.n_exceed = 10000;
            spec.tau_true = 4321.0;
            spec.theta1 = testing::random_valid_weights(order, wrng);
            spec.theta2 = testing::random_valid_weights(order, wrng);
            spec.seed = static_cast<std::uint64_t>(order);
            const auto s = simulate_changepoint_angles(spec);
            const double se = std::sqrt(variance(s.angles) / static_cast<double>(s.size()));
            CHECK(std::abs(mean(s.angles) - 0.5) < 3.0 * se);
        }
    }

    SUBCASE("validation") {
        SyntheticSpec spec = canonical(1);
        spec.tau_true = 0.0;
        CHECK_THROWS_AS(simulate_changepoint_angles(spec), InputError);
        spec.tau_true = 1000.5;
        CHECK_THROWS_AS(simulate_changepoint_angles(spec), InputError);
        spec = canonical(1);
        spec.n_exceed = 1001;
        CHECK_THROWS_AS(simulate_changepoint_angles(spec), InputError);
        spec = canonical(1);
        spec.theta2 = uniform_weights(5);
        CHECK_THROWS_AS(simulate_changepoint_angles(spec), InputError);
    }
}

TEST_CASE("spec JSON") {
    const auto spec = canonical(77);
    const auto j = spec_json(spec);
    CHECK(j["T"] == 1000);
    CHECK(j["theta1"]["theta"] == nlohmann::json::array({0.5, 0.0, 0.5}));
    const auto back = spec_from_json(j);
    CHECK(back.theta1 == spec.theta1);
    CHECK(back.theta2 == spec.theta2);
    CHECK(back.tau_true == spec.tau_true);
    CHECK(back.seed == 77);
    CHECK_THROWS_AS(spec_from_json(nlohmann::json{{"T", 10}}), InputError);
}
