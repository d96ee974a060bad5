// Test-only oracles and fixtures. Nothing here calls into the code paths it
// is used to check.
#pragma once

#include <chrono>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <random>
#include <string>
#include <vector>

#include <unistd.h>

#include "evcp/angular.hpp"
#include "evcp/date.hpp"

namespace evcp::testing {

/// Beta(a, b) density from tgamma and pow; fine for a + b <= 170.
inline double beta_pdf_oracle(double w, int a, int b) {
    return std::tgamma(a + b) / (std::tgamma(a) * std::tgamma(b)) * std::pow(w, a - 1) *
           std::pow(1.0 - w, b - 1);
}

inline double mixture_pdf_oracle(const std::vector<double>& theta, double w) {
    const int order = static_cast<int>(theta.size()) + 1;
    double h = 0.0;
    for (int i = 1; i < order; ++i) {
        h += theta[static_cast<std::size_t>(i - 1)] * beta_pdf_oracle(w, i, order - i);
    }
    return h;
}

/// Composite trapezoid rule on n equal panels.
inline double trapezoid(const std::function<double(double)>& f, double a, double b,
                        std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double acc = 0.5 * (f(a) + f(b));
    for (std::size_t k = 1; k < n; ++k) {
        acc += f(a + h * static_cast<double>(k));
    }
    return acc * h;
}

/// Composite Simpson rule on n (even) equal panels.
inline double simpson(const std::function<double(double)>& f, double a, double b,
                      std::size_t n) {
    const double h = (b - a) / static_cast<double>(n);
    double acc = f(a) + f(b);
    for (std::size_t k = 1; k < n; ++k) {
        acc += (k % 2 == 1 ? 4.0 : 2.0) * f(a + h * static_cast<double>(k));
    }
    return acc * h / 3.0;
}

/// Random feasible weights: a Dirichlet(1,...,1) draw mixed with the end
/// component that pulls its mean back to J/2. Generally asymmetric.
inline std::vector<double> random_valid_theta(int order, std::mt19937_64& rng) {
    const std::size_t m = static_cast<std::size_t>(order - 1);
    std::exponential_distribution<double> ex(1.0);
    std::vector<double> p(m);
    double total = 0.0;
    for (auto& v : p) {
        v = ex(rng);
        total += v;
    }
    double mean = 0.0;
    for (std::size_t i = 0; i < m; ++i) {
        p[i] /= total;
        mean += static_cast<double>(i + 1) * p[i];
    }
    const double target = 0.5 * order;
    const double end_index = mean < target ? static_cast<double>(order - 1) : 1.0;
    const double lambda = (end_index - target) / (end_index - mean);
    for (auto& v : p) {
        v *= lambda;
    }
    p[mean < target ? m - 1 : 0] += 1.0 - lambda;
    return p;
}

inline BernsteinWeights random_valid_weights(int order, std::mt19937_64& rng) {
    return BernsteinWeights(order, random_valid_theta(order, rng));
}

/// Straight transcription of the GARCH(1,1) Gaussian likelihood with the
/// backcast presample, written independently of the library.
inline double garch_loglik_oracle(double mu, double omega, double alpha, double beta,
                                  const std::vector<double>& x) {
    const std::size_t n = x.size();
    double backcast = 0.0;
    for (double v : x) {
        backcast += (v - mu) * (v - mu);
    }
    backcast /= static_cast<double>(n);
    std::vector<double> sigma2(n);
    std::vector<double> eps(n);
    double ll = 0.0;
    for (std::size_t t = 0; t < n; ++t) {
        eps[t] = x[t] - mu;
        const double prev_e2 = t == 0 ? backcast : eps[t - 1] * eps[t - 1];
        const double prev_s2 = t == 0 ? backcast : sigma2[t - 1];
        sigma2[t] = omega + alpha * prev_e2 + beta * prev_s2;
        ll += -0.5 * std::log(2.0 * M_PI) - 0.5 * std::log(sigma2[t]) -
              0.5 * eps[t] * eps[t] / sigma2[t];
    }
    return ll;
}

/// Fresh empty directory under the system temp dir.
inline std::filesystem::path temp_dir(const std::string& name) {
    const auto dir = std::filesystem::temp_directory_path() /
                     ("evcp_" + name + "_" + std::to_string(::getpid()));
    std::filesystem::remove_all(dir);
    std::filesystem::create_directories(dir);
    return dir;
}

inline Date day_offset(const Date& start, int days) {
    return Date{std::chrono::sys_days{start} + std::chrono::days{days}};
}

/// Writes a `date,close` file of consecutive days starting at `start`.
inline void write_prices(const std::filesystem::path& path, const Date& start,
                         const std::vector<double>& prices) {
    std::ofstream out(path);
    out << std::setprecision(17) << "date,close\n";
    for (std::size_t i = 0; i < prices.size(); ++i) {
        out << format_date(day_offset(start, static_cast<int>(i))) << ',' << prices[i] << '\n';
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

}  // namespace evcp::testing
