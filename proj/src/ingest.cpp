#include "evcp/ingest.hpp"

#include <gsl/gsl_errno.h>
#include <gsl/gsl_multimin.h>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <memory>
#include <numbers>
#include <numeric>
#include <sstream>

#include "evcp/error.hpp"

namespace evcp {

namespace {

std::string_view trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t\r\n");
    if (first == std::string_view::npos) {
        return {};
    }
    const auto last = s.find_last_not_of(" \t\r\n");
    return s.substr(first, last - first + 1);
}

bool is_header(std::string_view line) {
    std::string lowered(line);
    std::transform(lowered.begin(), lowered.end(), lowered.begin(),
                   [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    lowered.erase(std::remove(lowered.begin(), lowered.end(), ' '), lowered.end());
    return lowered == "date,close";
}

[[noreturn]] void row_error(std::string_view source, std::size_t line, const std::string& what) {
    std::ostringstream msg;
    msg << source << ":" << line << ": " << what;
    throw InputError(msg.str());
}

double logistic(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double logit(double p) { return std::log(p / (1.0 - p)); }

double backcast(const GarchParams& params, std::span<const double> x) {
    double acc = 0.0;
    for (double v : x) {
        const double e = v - params.mu;
        acc += e * e;
    }
    return acc / static_cast<double>(x.size());
}

// Runs the variance recursion and hands (t, eps_t, sigma2_t) to `visit`.
template <typename Visit>
void garch_recursion(const GarchParams& params, std::span<const double> x, Visit&& visit) {
    double prev_eps2 = backcast(params, x);
    double prev_var = prev_eps2;
    for (std::size_t t = 0; t < x.size(); ++t) {
        const double var = params.omega + params.alpha * prev_eps2 + params.beta * prev_var;
        const double eps = x[t] - params.mu;
        if (!std::isfinite(var) || !(var > 0.0) || !std::isfinite(eps)) {
            throw NumericalError("GARCH recursion produced a non-finite variance at t=" +
                                 std::to_string(t + 1));
        }
        visit(t, eps, var);
        prev_eps2 = eps * eps;
        prev_var = var;
    }
}

void require_params(const GarchParams& params) {
    if (!params.valid()) {
        throw InputError("GARCH parameters violate omega > 0, alpha, beta >= 0, alpha + beta < 1");
    }
}

constexpr double kHalfLog2Pi = 0.91893853320467274178;  // 0.5 * log(2 pi)

// Unconstrained coordinates: (mu, log omega, logit(alpha + beta), logit(alpha / (alpha + beta))).
GarchParams from_unconstrained(const double* p) {
    const double persistence = logistic(p[2]);
    const double share = logistic(p[3]);
    GarchParams params;
    params.mu = p[0];
    params.omega = std::exp(p[1]);
    params.alpha = persistence * share;
    params.beta = persistence * (1.0 - share);
    return params;
}

struct Objective {
    std::span<const double> data;
};

double negative_loglik(const gsl_vector* v, void* raw) {
    const auto* objective = static_cast<const Objective*>(raw);
    const GarchParams params = from_unconstrained(v->data);
    if (!params.valid()) {
        return 1e100;
    }
    try {
        return -garch_loglik(params, objective->data);
    } catch (const NumericalError&) {
        return 1e100;
    }
}

struct MinimizerDeleter {
    void operator()(gsl_multimin_fminimizer* m) const { gsl_multimin_fminimizer_free(m); }
};
struct VectorDeleter {
    void operator()(gsl_vector* v) const { gsl_vector_free(v); }
};
using MinimizerPtr = std::unique_ptr<gsl_multimin_fminimizer, MinimizerDeleter>;
using VectorPtr = std::unique_ptr<gsl_vector, VectorDeleter>;

struct SearchResult {
    std::vector<double> point;
    double value = 0.0;
    int iterations = 0;
    bool converged = false;
};

SearchResult nelder_mead(Objective& objective, const std::vector<double>& start,
                         const std::vector<double>& steps, const GarchOptions& options) {
    const std::size_t dim = start.size();
    MinimizerPtr minimizer(gsl_multimin_fminimizer_alloc(gsl_multimin_fminimizer_nmsimplex2, dim));
    VectorPtr x(gsl_vector_alloc(dim));
    VectorPtr step(gsl_vector_alloc(dim));
    for (std::size_t i = 0; i < dim; ++i) {
        gsl_vector_set(x.get(), i, start[i]);
        gsl_vector_set(step.get(), i, steps[i]);
    }
    gsl_multimin_function fn{&negative_loglik, dim, &objective};
    gsl_multimin_fminimizer_set(minimizer.get(), &fn, x.get(), step.get());

    // A boundary optimum (alpha + beta -> 0) leaves flat directions in which
    // the simplex never shrinks, so a stalled objective also counts as converged.
    constexpr int kStallWindow = 500;
    SearchResult result;
    double window_start = gsl_multimin_fminimizer_minimum(minimizer.get());
    while (result.iterations < options.max_iterations) {
        ++result.iterations;
        if (gsl_multimin_fminimizer_iterate(minimizer.get()) != GSL_SUCCESS) {
            break;
        }
        const double size = gsl_multimin_fminimizer_size(minimizer.get());
        if (gsl_multimin_test_size(size, options.tolerance) == GSL_SUCCESS) {
            result.converged = true;
            break;
        }
        if (result.iterations % kStallWindow == 0) {
            const double now = gsl_multimin_fminimizer_minimum(minimizer.get());
            if (window_start - now <= 1e-12 * std::max(1.0, std::abs(now))) {
                result.converged = true;
                break;
            }
            window_start = now;
        }
    }
    const gsl_vector* best = gsl_multimin_fminimizer_x(minimizer.get());
    result.point.assign(best->data, best->data + dim);
    result.value = gsl_multimin_fminimizer_minimum(minimizer.get());
    return result;
}

}  // namespace

void PriceSeries::validate() const {
    if (dates.size() != prices.size()) {
        throw InputError("price series has mismatched date and price columns");
    }
    if (prices.size() < 2) {
        throw InputError("price series needs at least two rows");
    }
    for (std::size_t i = 0; i < prices.size(); ++i) {
        if (!(prices[i] > 0.0) || !std::isfinite(prices[i])) {
            throw InputError("non-positive price on " + format_date(dates[i]));
        }
        if (i > 0 && !(dates[i - 1] < dates[i])) {
            throw InputError("dates are not strictly increasing at " + format_date(dates[i]));
        }
    }
}

bool GarchParams::valid() const noexcept {
    return std::isfinite(mu) && omega > 0.0 && std::isfinite(omega) && alpha >= 0.0 &&
           beta >= 0.0 && alpha + beta < 1.0;
}

PriceSeries load_price_csv(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open price file " + path.string());
    }
    return parse_price_csv(in, path.string());
}

PriceSeries parse_price_csv(std::istream& in, std::string_view source) {
    struct Row {
        Date date;
        double price;
        std::size_t line;
    };
    std::vector<Row> rows;
    std::string raw;
    std::size_t line_no = 0;
    bool seen_content = false;
    while (std::getline(in, raw)) {
        ++line_no;
        const std::string_view line = trim(raw);
        if (line.empty()) {
            continue;
        }
        if (!seen_content) {
            seen_content = true;
            if (is_header(line)) {
                continue;
            }
        }
        const auto comma = line.find(',');
        if (comma == std::string_view::npos || line.find(',', comma + 1) != std::string_view::npos) {
            row_error(source, line_no, "malformed row, expected 'date,close'");
        }
        const auto date = parse_date(trim(line.substr(0, comma)));
        if (!date) {
            row_error(source, line_no, "malformed date '" + std::string(line.substr(0, comma)) + "'");
        }
        const std::string_view price_text = trim(line.substr(comma + 1));
        double price = 0.0;
        const auto [ptr, ec] =
            std::from_chars(price_text.data(), price_text.data() + price_text.size(), price);
        if (ec != std::errc{} || ptr != price_text.data() + price_text.size() ||
            !std::isfinite(price)) {
            row_error(source, line_no, "malformed price '" + std::string(price_text) + "'");
        }
        if (!(price > 0.0)) {
            row_error(source, line_no, "non-positive price");
        }
        rows.push_back({*date, price, line_no});
    }
    if (rows.empty()) {
        throw InputError(std::string(source) + ": empty file");
    }
    std::stable_sort(rows.begin(), rows.end(),
                     [](const Row& a, const Row& b) { return a.date < b.date; });
    PriceSeries series;
    series.dates.reserve(rows.size());
    series.prices.reserve(rows.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        if (i > 0 && rows[i].date == rows[i - 1].date) {
            row_error(source, rows[i].line, "duplicate date " + format_date(rows[i].date));
        }
        series.dates.push_back(rows[i].date);
        series.prices.push_back(rows[i].price);
    }
    return series;
}

ReturnSeries negative_log_returns(const PriceSeries& prices) {
    prices.validate();
    ReturnSeries out;
    out.dates.assign(prices.dates.begin() + 1, prices.dates.end());
    out.values.reserve(prices.size() - 1);
    for (std::size_t t = 1; t < prices.size(); ++t) {
        out.values.push_back(std::log(prices.prices[t - 1] / prices.prices[t]));
    }
    return out;
}

double garch_loglik(const GarchParams& params, std::span<const double> returns) {
    require_params(params);
    if (returns.empty()) {
        throw InputError("GARCH likelihood needs at least one observation");
    }
    double total = 0.0;
    garch_recursion(params, returns, [&](std::size_t, double eps, double var) {
        total += -kHalfLog2Pi - 0.5 * std::log(var) - eps * eps / (2.0 * var);
    });
    if (!std::isfinite(total)) {
        throw NumericalError("GARCH log-likelihood is not finite");
    }
    return total;
}

GarchFilterResult garch_filter(const GarchParams& params, std::span<const double> returns) {
    require_params(params);
    if (returns.empty()) {
        throw InputError("GARCH filter needs at least one observation");
    }
    GarchFilterResult out;
    out.cond_var.resize(returns.size());
    out.residuals.resize(returns.size());
    garch_recursion(params, returns, [&](std::size_t t, double eps, double var) {
        out.cond_var[t] = var;
        out.residuals[t] = eps / std::sqrt(var);
        out.loglik += -kHalfLog2Pi - 0.5 * std::log(var) - eps * eps / (2.0 * var);
    });
    return out;
}

GarchFit fit_garch11(const ReturnSeries& returns, const GarchOptions& options) {
    constexpr std::size_t kMinLength = 50;
    if (returns.size() < kMinLength) {
        throw InputError("GARCH fit refused: " + std::to_string(returns.size()) +
                         " observations, need at least 50");
    }
    const std::span<const double> x(returns.values);
    const double n = static_cast<double>(x.size());
    const double mean = std::accumulate(x.begin(), x.end(), 0.0) / n;
    double var = 0.0;
    for (double v : x) {
        var += (v - mean) * (v - mean);
    }
    var /= n;
    if (!(var > 0.0)) {
        throw InputError("GARCH fit refused: returns have zero variance");
    }

    // The search runs on the standardized series; the likelihood is
    // location-scale equivariant so the optimum maps back exactly.
    const double sd = std::sqrt(var);
    std::vector<double> scaled(x.size());
    std::transform(x.begin(), x.end(), scaled.begin(), [&](double v) { return (v - mean) / sd; });
    Objective objective{scaled};

    std::vector<double> start{0.0, std::log(0.1), logit(0.9), logit(0.1 / 0.9)};
    const std::vector<double> steps{0.1, 0.5, 0.5, 0.5};

    gsl_error_handler_t* previous = gsl_set_error_handler_off();
    SearchResult best = nelder_mead(objective, start, steps, options);
    int total_iterations = best.iterations;
    bool converged = best.converged;
    for (int r = 0; r < options.restarts; ++r) {
        SearchResult next = nelder_mead(objective, best.point, steps, options);
        total_iterations += next.iterations;
        const bool improved = next.value < best.value - 1e-10 * std::max(1.0, std::abs(best.value));
        converged = next.converged;
        if (next.value <= best.value) {
            best = std::move(next);
        }
        if (!improved && converged) {
            break;
        }
    }
    gsl_set_error_handler(previous);
    if (!converged) {
        throw NumericalError("GARCH optimizer did not converge within " +
                             std::to_string(options.max_iterations) + " iterations");
    }

    GarchParams fitted = from_unconstrained(best.point.data());
    fitted.mu = mean + sd * fitted.mu;
    fitted.omega *= var;

    GarchFit fit;
    fit.params = fitted;
    fit.iterations = total_iterations;
    GarchFilterResult filtered = garch_filter(fitted, x);
    fit.cond_var = std::move(filtered.cond_var);
    fit.residuals = std::move(filtered.residuals);
    fit.loglik = filtered.loglik;
    if (fitted.persistence() > options.persistence_warning) {
        std::ostringstream msg;
        msg << "boundary collapse: alpha + beta = " << fitted.persistence();
        fit.warnings.push_back(msg.str());
    }
    return fit;
}

ResidualPairs align_pairs(std::span<const Date> dates_a, const GarchFit& fit_a,
                          std::span<const Date> dates_b, const GarchFit& fit_b) {
    if (dates_a.empty() || dates_b.empty()) {
        throw InputError("cannot align an empty series");
    }
    if (dates_a.size() != fit_a.residuals.size() || dates_b.size() != fit_b.residuals.size()) {
        throw InputError("dates and residuals differ in length");
    }
    ResidualPairs out;
    std::size_t i = 0;
    std::size_t j = 0;
    while (i < dates_a.size() && j < dates_b.size()) {
        if (dates_a[i] < dates_b[j]) {
            ++i;
        } else if (dates_b[j] < dates_a[i]) {
            ++j;
        } else {
            out.dates.push_back(dates_a[i]);
            out.first.push_back(fit_a.residuals[i]);
            out.second.push_back(fit_b.residuals[j]);
            ++i;
            ++j;
        }
    }
    if (out.dates.empty()) {
        throw InputError("the two series share no dates");
    }
    return out;
}

void to_json(nlohmann::json& j, const GarchParams& params) {
    j = nlohmann::json{{"mu", params.mu},
                       {"omega", params.omega},
                       {"alpha", params.alpha},
                       {"beta", params.beta}};
}

void from_json(const nlohmann::json& j, GarchParams& params) {
    j.at("mu").get_to(params.mu);
    j.at("omega").get_to(params.omega);
    j.at("alpha").get_to(params.alpha);
    j.at("beta").get_to(params.beta);
}

nlohmann::json garch_fit_json(const GarchFit& fit, std::span<const Date> dates) {
    nlohmann::json j;
    j["params"] = fit.params;
    j["loglik"] = fit.loglik;
    j["iterations"] = fit.iterations;
    j["warnings"] = fit.warnings;
    nlohmann::json rows = nlohmann::json::array();
    for (std::size_t t = 0; t < fit.residuals.size(); ++t) {
        rows.push_back({{"date", t < dates.size() ? format_date(dates[t]) : std::string{}},
                        {"cond_var", fit.cond_var[t]},
                        {"residual", fit.residuals[t]}});
    }
    j["series"] = std::move(rows);
    return j;
}

}  // namespace evcp
