#include "evcp/angular.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_integration.h>

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <memory>
#include <numeric>
#include <sstream>

#include "evcp/error.hpp"

namespace evcp {

namespace {

double log_beta_norm(int a1, int a2) {
    return std::lgamma(static_cast<double>(a1 + a2)) - std::lgamma(static_cast<double>(a1)) -
           std::lgamma(static_cast<double>(a2));
}

void check_shapes(int a1, int a2) {
    if (a1 < 1 || a2 < 1) {
        throw InputError("Dirichlet shapes must be positive integers");
    }
}

struct WorkspaceDeleter {
    void operator()(gsl_integration_workspace* w) const { gsl_integration_workspace_free(w); }
};

double trampoline(double x, void* raw) {
    return (*static_cast<const std::function<double(double)>*>(raw))(x);
}

}  // namespace

BernsteinWeights::BernsteinWeights(int order, std::vector<double> theta)
    : order_(order), theta_(std::move(theta)) {
    if (order_ < 2) {
        throw InputError("Bernstein order must be at least 2");
    }
    if (theta_.size() != static_cast<std::size_t>(order_ - 1)) {
        throw InputError("order " + std::to_string(order_) + " needs " +
                         std::to_string(order_ - 1) + " weights, got " +
                         std::to_string(theta_.size()));
    }
}

double dirichlet_density(double w, int a1, int a2) {
    if (!(w > 0.0 && w < 1.0)) {
        throw InputError("Dirichlet density evaluated outside (0,1)");
    }
    check_shapes(a1, a2);
    return std::exp(log_beta_norm(a1, a2) + (a1 - 1) * std::log(w) + (a2 - 1) * std::log1p(-w));
}

double bernstein_basis(double w, int i, int order) {
    if (w > 0.0 && w < 1.0) {
        return dirichlet_density(w, i, order - i);
    }
    check_shapes(i, order - i);
    if (w == 0.0) {
        return i == 1 ? static_cast<double>(order - 1) : 0.0;
    }
    if (w == 1.0) {
        return i == order - 1 ? static_cast<double>(order - 1) : 0.0;
    }
    throw InputError("angle outside [0,1]");
}

double eval_density(const BernsteinWeights& weights, double w) {
    require_valid(weights);
    if (!(w >= 0.0 && w <= 1.0)) {
        throw InputError("angle outside [0,1]");
    }
    double h = 0.0;
    const int order = weights.order();
    for (int i = 1; i < order; ++i) {
        const double theta = weights.weight(i);
        if (theta != 0.0) {
            h += theta * bernstein_basis(w, i, order);
        }
    }
    return h;
}

double density_mean(const BernsteinWeights& weights) {
    double acc = 0.0;
    for (int i = 1; i < weights.order(); ++i) {
        acc += weights.weight(i) * i;
    }
    return acc / weights.order();
}

BernsteinWeights uniform_weights(int order) {
    if (order < kMinOrder) {
        throw InputError("Bernstein order must be at least 4, got " + std::to_string(order));
    }
    return BernsteinWeights(order,
                            std::vector<double>(static_cast<std::size_t>(order - 1),
                                                1.0 / static_cast<double>(order - 1)));
}

WeightsReport validate_weights(const BernsteinWeights& weights, double tolerance) {
    WeightsReport report;
    const auto theta = weights.theta();
    report.min_weight = *std::min_element(theta.begin(), theta.end());
    double sum = 0.0;
    double moment = 0.0;
    for (int i = 1; i < weights.order(); ++i) {
        sum += weights.weight(i);
        moment += i * weights.weight(i);
    }
    report.sum_error = sum - 1.0;
    report.mean_error = moment - 0.5 * weights.order();

    std::ostringstream msg;
    msg << std::setprecision(12);
    if (report.min_weight < 0.0 || !std::isfinite(report.min_weight)) {
        msg << "negative weight: min theta = " << report.min_weight;
        report.violations.push_back(msg.str());
        msg.str({});
    }
    if (!(std::abs(report.sum_error) <= tolerance)) {
        msg << "sum theta = " << sum << " != 1 (off by " << report.sum_error << ")";
        report.violations.push_back(msg.str());
        msg.str({});
    }
    if (!(std::abs(report.mean_error) <= tolerance)) {
        msg << "sum i*theta_i = " << moment << " != J/2 = " << 0.5 * weights.order()
            << " (off by " << report.mean_error << ")";
        report.violations.push_back(msg.str());
    }
    report.ok = report.violations.empty();
    return report;
}

void require_valid(const BernsteinWeights& weights) {
    const WeightsReport report = validate_weights(weights);
    if (!report.ok) {
        std::string text = "invalid Bernstein weights:";
        for (const auto& v : report.violations) {
            text += " " + v + ";";
        }
        throw InputError(text);
    }
}

double sample_angle(const BernsteinWeights& weights, Rng& rng) {
    const auto theta = weights.theta();
    std::discrete_distribution<int> pick(theta.begin(), theta.end());
    const int i = pick(rng) + 1;
    const int order = weights.order();
    std::gamma_distribution<double> ga(static_cast<double>(i), 1.0);
    std::gamma_distribution<double> gb(static_cast<double>(order - i), 1.0);
    // Redraw the (measure-zero) endpoint cases so the angle is strictly inside.
    for (;;) {
        const double a = ga(rng);
        const double b = gb(rng);
        const double w = a / (a + b);
        if (w > 0.0 && w < 1.0) {
            return w;
        }
    }
}

double integrate(const std::function<double(double)>& f, double a, double b, double abs_tol) {
    if (!(b > a)) {
        return 0.0;
    }
    constexpr std::size_t kLimit = 2000;
    std::unique_ptr<gsl_integration_workspace, WorkspaceDeleter> ws(
        gsl_integration_workspace_alloc(kLimit));
    gsl_function fn{&trampoline, const_cast<std::function<double(double)>*>(&f)};
    double result = 0.0;
    double error = 0.0;
    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    const int status = gsl_integration_qag(&fn, a, b, abs_tol * 1e-2, 1e-13, kLimit,
                                           GSL_INTEG_GAUSS21, ws.get(), &result, &error);
    gsl_set_error_handler(previous);
    if (!std::isfinite(result) || (status != GSL_SUCCESS && error > abs_tol)) {
        std::ostringstream msg;
        msg << "quadrature did not converge on [" << a << ", " << b << "]: error estimate "
            << error << " (" << gsl_strerror(status) << ")";
        throw NumericalError(msg.str());
    }
    return result;
}

double bev_exponent(const BernsteinWeights& weights, double x, double y) {
    require_valid(weights);
    if (!(x > 0.0) || !(y > 0.0)) {
        throw InputError("BEV distribution needs x, y > 0");
    }
    const double kink = x / (x + y);
    // Left of the kink (1 - w)/y dominates, right of it w/x.
    const std::function<double(double)> left = [&](double w) {
        return (1.0 - w) / y * eval_density(weights, w);
    };
    const std::function<double(double)> right = [&](double w) {
        return w / x * eval_density(weights, w);
    };
    return 2.0 * (integrate(left, 0.0, kink, 1e-9) + integrate(right, kink, 1.0, 1e-9));
}

double bev_cdf(const BernsteinWeights& weights, double x, double y) {
    return std::exp(-bev_exponent(weights, x, y));
}

double ev_copula(const BernsteinWeights& weights, double u, double v) {
    if (!(u > 0.0 && u < 1.0 && v > 0.0 && v < 1.0)) {
        throw InputError("copula arguments must lie in (0,1)");
    }
    return bev_cdf(weights, -1.0 / std::log(u), -1.0 / std::log(v));
}

BasisMatrix::BasisMatrix(std::span<const double> angles, int order)
    : rows_(angles.size()), cols_(static_cast<std::size_t>(order - 1)), order_(order) {
    if (order < 2) {
        throw InputError("Bernstein order must be at least 2");
    }
    values_.resize(rows_ * cols_);
    for (std::size_t n = 0; n < rows_; ++n) {
        for (int i = 1; i < order; ++i) {
            values_[n * cols_ + static_cast<std::size_t>(i - 1)] =
                dirichlet_density(angles[n], i, order - i);
        }
    }
}

double BasisMatrix::density(std::size_t n, const BernsteinWeights& weights) const {
    const auto b = row(n);
    const auto theta = weights.theta();
    return std::inner_product(theta.begin(), theta.end(), b.begin(), 0.0);
}

void to_json(nlohmann::json& j, const BernsteinWeights& weights) {
    j = nlohmann::json{{"J", weights.order()},
                       {"theta", std::vector<double>(weights.theta().begin(),
                                                     weights.theta().end())}};
}

BernsteinWeights weights_from_json(const nlohmann::json& j) {
    try {
        return BernsteinWeights(j.at("J").get<int>(), j.at("theta").get<std::vector<double>>());
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("malformed weights JSON: ") + e.what());
    }
}

void write_density_grid(const BernsteinWeights& weights, const std::filesystem::path& path,
                        std::size_t points) {
    if (points < 2) {
        throw InputError("density grid needs at least two points");
    }
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << std::setprecision(17) << "w,h\n";
    for (std::size_t k = 0; k < points; ++k) {
        const double w = static_cast<double>(k) / static_cast<double>(points - 1);
        out << w << ',' << eval_density(weights, w) << '\n';
    }
}

}  // namespace evcp
