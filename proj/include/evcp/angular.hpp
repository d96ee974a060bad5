#pragma once

#include <cstddef>
#include <filesystem>
#include <functional>
#include <random>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

namespace evcp {

using Rng = std::mt19937_64;

/// Weights of a Bernstein-polynomial angular density of order J.
///
/// Component i (1-based, i = 1..J-1) is the Beta(i, J - i) density, so
/// theta()[i - 1] is the weight of the term with shapes (i, J - i). The
/// class only enforces the shape of the vector; the simplex and mean
/// constraints are checked by validate_weights, because proposals that
/// leave the feasible set must still be representable.
class BernsteinWeights {
public:
    BernsteinWeights(int order, std::vector<double> theta);

    int order() const noexcept { return order_; }
    std::size_t components() const noexcept { return theta_.size(); }
    std::span<const double> theta() const noexcept { return theta_; }

    /// Weight of component i, 1-based.
    double weight(int i) const { return theta_.at(static_cast<std::size_t>(i - 1)); }
    void set_weight(int i, double value) { theta_.at(static_cast<std::size_t>(i - 1)) = value; }

    friend bool operator==(const BernsteinWeights&, const BernsteinWeights&) = default;

private:
    int order_;
    std::vector<double> theta_;
};

inline constexpr int kMinOrder = 4;
inline constexpr double kConstraintTolerance = 1e-10;

/// Beta(a1, a2) density at w in (0,1), evaluated in log space.
double dirichlet_density(double w, int a1, int a2);

/// Same density extended continuously to w in [0,1]; used where the
/// polynomial has to be evaluated at the endpoints (density grids).
double bernstein_basis(double w, int i, int order);

/// h(w) = sum_i theta_i Beta(w | i, J - i). Accepts the closed interval
/// [0,1]: the mixture is a polynomial and has finite endpoint values.
double eval_density(const BernsteinWeights& weights, double w);

/// Analytic mean sum_i theta_i * i / J.
double density_mean(const BernsteinWeights& weights);

/// theta_i = 1 / (J - 1); the centre of the feasible polytope, h(w) = 1.
BernsteinWeights uniform_weights(int order);

struct WeightsReport {
    bool ok = true;
    double min_weight = 0.0;
    /// sum theta_i - 1
    double sum_error = 0.0;
    /// sum i theta_i - J/2
    double mean_error = 0.0;
    std::vector<std::string> violations;
};

WeightsReport validate_weights(const BernsteinWeights& weights,
                               double tolerance = kConstraintTolerance);

/// Throws InputError with the report text when the weights are infeasible.
void require_valid(const BernsteinWeights& weights);

/// Draws a component with probability theta_i, then a Beta(i, J - i) angle.
double sample_angle(const BernsteinWeights& weights, Rng& rng);

/// V(x, y) = 2 * integral of max(w / x, (1 - w) / y) h(w) dw, by adaptive
/// Gauss-Kronrod quadrature split at the kink w = x / (x + y).
double bev_exponent(const BernsteinWeights& weights, double x, double y);

/// G(x, y) = exp(-V(x, y)) for unit-Frechet margins.
double bev_cdf(const BernsteinWeights& weights, double x, double y);

/// Extreme-value copula C(u, v) = G(-1/log u, -1/log v), u, v in (0,1).
double ev_copula(const BernsteinWeights& weights, double u, double v);

/// Basis values Beta(w_n | i, J - i) for a fixed set of angles, row-major
/// by angle. Densities of any weight vector are then dot products.
class BasisMatrix {
public:
    BasisMatrix(std::span<const double> angles, int order);

    std::size_t rows() const noexcept { return rows_; }
    int order() const noexcept { return order_; }

    /// Basis value of component i (1-based) at angle n.
    double operator()(std::size_t n, int i) const {
        return values_[n * cols_ + static_cast<std::size_t>(i - 1)];
    }
    std::span<const double> row(std::size_t n) const {
        return {values_.data() + n * cols_, cols_};
    }

    double density(std::size_t n, const BernsteinWeights& weights) const;

private:
    std::size_t rows_;
    std::size_t cols_;
    int order_;
    std::vector<double> values_;
};

/// Adaptive 21-point Gauss-Kronrod integration over [a, b]. Throws
/// NumericalError if the error estimate stays above `abs_tol`.
double integrate(const std::function<double(double)>& f, double a, double b,
                 double abs_tol = 1e-10);

void to_json(nlohmann::json& j, const BernsteinWeights& weights);
BernsteinWeights weights_from_json(const nlohmann::json& j);

/// Writes `w,h` rows for `points` equally spaced angles covering [0,1].
void write_density_grid(const BernsteinWeights& weights, const std::filesystem::path& path,
                        std::size_t points = 512);

}  // namespace evcp
