#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <numeric>

#include "evcp/error.hpp"
#include "evcp/simulate.hpp"
#include "evcp/summary.hpp"
#include "support.hpp"

using namespace evcp;

namespace {

PosteriorDraws draws_with_taus(const std::vector<double>& taus, std::int64_t horizon = 1000) {
    PosteriorDraws d;
    d.order = 4;
    d.horizon = horizon;
    for (double t : taus) {
        d.draws.push_back({uniform_weights(4), uniform_weights(4), t});
        d.accepted.push_back({});
    }
    return d;
}

}  // namespace

TEST_CASE("predictive density") {
    const auto grid = default_grid();
    REQUIRE(grid.size() == 512);
    CHECK(grid.front() == 0.0);
    CHECK(grid.back() == 1.0);

    std::mt19937_64 rng(12);
    SUBCASE("a single draw reproduces its own density") {
        PosteriorDraws d;
        d.order = 9;
        d.draws.push_back({testing::random_valid_weights(9, rng), testing::random_valid_weights(9, rng), 5.0});
        const auto curve = predictive_density(d, Regime::second, grid);
        CHECK(curve.regime == "2");
        for (std::size_t g = 0; g < grid.size(); ++g) {
            REQUIRE(curve.values[g] == doctest::Approx(eval_density(d.draws[0].theta2, grid[g])).epsilon(1e-13));
        }
    }

    SUBCASE("averaging symmetric draws stays symmetric and within the pointwise envelope") {
        PosteriorDraws d;
        d.order = 6;
        const std::vector<BernsteinWeights> ws{BernsteinWeights(6, {0.5, 0.0, 0.0, 0.0, 0.5}),
                                               BernsteinWeights(6, {0.0, 0.25, 0.5, 0.25, 0.0}),
                                               uniform_weights(6)};
        for (const auto& w : ws) {
            d.draws.push_back({w, w, 1.0});
        }
        const auto curve = predictive_density(d, Regime::first, grid);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            REQUIRE(curve.values[g] == doctest::Approx(curve.values[grid.size() - 1 - g]).epsilon(1e-12));
            double lo = INFINITY;
            double hi = -INFINITY;
            for (const auto& w : ws) {
                lo = std::min(lo, eval_density(w, grid[g]));
                hi = std::max(hi, eval_density(w, grid[g]));
            }
            REQUIRE(curve.values[g] >= lo - 1e-12);
            REQUIRE(curve.values[g] <= hi + 1e-12);
        }
    }

    SUBCASE("integrates to one on the default grid at J = 93") {
        PosteriorDraws d;
        d.order = 93;
        for (int k = 0; k < 20; ++k) {
            d.draws.push_back({testing::random_valid_weights(93, rng), testing::random_valid_weights(93, rng), 1.0});
        }
        for (Regime r : {Regime::first, Regime::second}) {
            const double integral = predictive_density(d, r, grid).trapezoid_integral();
            CHECK(integral >= 0.99);
            CHECK(integral <= 1.01);
        }
    }

    CHECK_THROWS_AS(predictive_density(PosteriorDraws{}, Regime::first, grid), InputError);
    const std::vector<double> backwards{0.5, 0.2};
    CHECK_THROWS_AS(predictive_density(draws_with_taus({1.0}), Regime::first, backwards), InputError);
}

TEST_CASE("tau point estimate") {
    CHECK(tau_estimate(draws_with_taus(std::vector<double>(50, 42.3))).day == 42);
    CHECK(tau_estimate(draws_with_taus({1.1, 1.2, 5.9})).day == 1);
    // Ties go to the earliest day.
    CHECK(tau_estimate(draws_with_taus({7.5, 3.2, 7.1, 3.9})).day == 3);

    SUBCASE("calendar mapping") {
        const Date start{std::chrono::year{2018}, std::chrono::January, std::chrono::day{1}};
        std::vector<Date> calendar;
        for (int i = 0; i < 100; ++i) {
            calendar.push_back(testing::day_offset(start, i));
        }
        const auto est = tau_estimate(draws_with_taus({9.2, 9.9, 40.0}, 100), calendar);
        REQUIRE(est.date);
        CHECK(*est.date == Date{std::chrono::year{2018}, std::chrono::January, std::chrono::day{9}});
        CHECK_FALSE(tau_estimate(draws_with_taus({9.2}, 100)).date.has_value());
    }

    SUBCASE("thinning that keeps the modal majority keeps the mode") {
        std::vector<double> taus;
        for (int k = 0; k < 60; ++k) {
            taus.push_back(250.0 + 0.01 * k);
        }
        for (int k = 0; k < 40; ++k) {
            taus.push_back(100.0 + 5.0 * k);
        }
        std::mt19937_64 rng(6);
        std::shuffle(taus.begin(), taus.end(), rng);
        const auto full = tau_estimate(draws_with_taus(taus)).day;
        CHECK(full == 250);
        for (std::size_t factor : {2u, 3u, 5u}) {
            std::vector<double> thinned;
            for (std::size_t k = 0; k < taus.size(); k += factor) {
                thinned.push_back(taus[k]);
            }
            CHECK(tau_estimate(draws_with_taus(thinned)).day == full);
        }
    }
}

TEST_CASE("tau interval") {
    const auto constant = tau_interval(draws_with_taus(std::vector<double>(10, 17.0)));
    CHECK(constant.first == 17.0);
    CHECK(constant.second == 17.0);

    std::vector<double> taus(100);
    std::iota(taus.begin(), taus.end(), 1.0);
    const auto [lo, hi] = tau_interval(draws_with_taus(taus), 0.95);
    CHECK(lo == doctest::Approx(3.475).epsilon(1e-12));
    CHECK(hi == doctest::Approx(97.525).epsilon(1e-12));
    CHECK_THROWS_AS(tau_interval(draws_with_taus(taus), 1.0), InputError);
}

TEST_CASE("plot exports") {
    SyntheticSpec spec;
    spec.horizon = 1855;
    spec.n_exceed = 186;
    spec.tau_true = 900.0;
    spec.theta1 = BernsteinWeights(4, {0.5, 0.0, 0.5});
    spec.theta2 = BernsteinWeights(4, {0.0, 1.0, 0.0});
    spec.seed = 19;
    const auto sample = simulate_changepoint_angles(spec);
    ChainConfig c;
    c.iterations = 4000;
    c.burn_in = 2000;
    c.thin = 10;
    c.seed = 1;
    const auto draws = run_chain(sample, 4, c);
    c.fixed_tau = 1855.0;
    const auto pooled = run_chain(sample, 4, c);

    const auto dir = testing::temp_dir("summary_export");
    const auto summary = export_plot_data(sample, draws, &pooled, dir, {}, {{"seed", 1}});

    const auto read_counts = [&](const char* name) {
        std::ifstream in(dir / name);
        std::string line;
        std::getline(in, line);
        CHECK(line == "bin_lo,bin_hi,count");
        std::vector<std::size_t> counts;
        while (std::getline(in, line)) {
            counts.push_back(std::stoul(line.substr(line.rfind(',') + 1)));
        }
        return counts;
    };
    const auto whole = read_counts("hist_whole.csv");
    const auto r1 = read_counts("hist_regime1.csv");
    const auto r2 = read_counts("hist_regime2.csv");
    REQUIRE(whole.size() == 20);
    std::size_t total = 0;
    for (std::size_t b = 0; b < whole.size(); ++b) {
        CHECK(r1[b] + r2[b] == whole[b]);
        total += whole[b];
    }
    CHECK(total == 186);

    for (const char* name : {"density_regime1.csv", "density_regime2.csv", "density_pooled.csv"}) {
        const auto text = testing::read_file(dir / name);
        CHECK(std::count(text.begin(), text.end(), '\n') == 513);
        const auto curve = read_density_csv(dir / name);
        CHECK(curve.grid.size() == 512);
        CHECK(curve.trapezoid_integral() >= 0.99);
        CHECK(curve.trapezoid_integral() <= 1.01);
    }
    const auto d1 = predictive_density(draws, Regime::first, default_grid());
    CHECK(std::abs(read_density_csv(dir / "density_regime1.csv").trapezoid_integral() -
                   d1.trapezoid_integral()) < 1e-9);

    CHECK(summary["K"] == 200);
    CHECK(summary["J"] == 4);
    CHECK(summary["N"] == 186);
    CHECK(summary["seed"] == 1);
    CHECK(summary["tau"]["day"].get<std::int64_t>() == tau_estimate(draws).day);
    CHECK(summary["regime_counts"][0].get<std::size_t>() + summary["regime_counts"][1].get<std::size_t>() == 186);
    const auto marker = nlohmann::json::parse(testing::read_file(dir / "pooled_refit.json"));
    CHECK(marker["fitted"] == true);
    CHECK(marker["fixed_tau"] == 1855.0);
    CHECK(nlohmann::json::parse(testing::read_file(dir / "summary.json")) == summary);
    std::filesystem::remove_all(dir);

    CHECK_THROWS_AS(export_plot_data(sample, draws, nullptr, "/proc/evcp_forbidden/out"), InputError);
}

TEST_CASE("histogram") {
    const std::vector<double> angles{0.0, 0.04, 0.05, 0.5, 0.999, 1.0};
    const auto h = angle_histogram(angles, 20);
    CHECK(h.total() == angles.size());
    CHECK(h.counts[0] == 2);
    CHECK(h.counts[1] == 1);
    CHECK(h.counts[10] == 1);
    CHECK(h.counts[19] == 2);
    CHECK(h.edges.size() == 21);
    CHECK_THROWS_AS(angle_histogram(angles, 0), InputError);
}
