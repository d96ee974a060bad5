#include "evcp/mcmc.hpp"

#include <gsl/gsl_cdf.h>

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <iomanip>
#include <limits>
#include <numeric>

#include "evcp/error.hpp"

namespace evcp {

namespace {

constexpr int kTailBatches = 20;
constexpr int kStuckWarning = 1000;

const char* block_name(std::size_t b) {
    static constexpr const char* names[kBlockCount] = {"theta1", "theta2", "tau"};
    return names[b];
}

class ChainRunner {
public:
    ChainRunner(const AngularSample& data, int order, const ChainConfig& config)
        : data_(data),
          config_(config),
          basis_(data.angles, order),
          rng_(config.seed),
          state_{uniform_weights(order), uniform_weights(order),
                 config.fixed_tau.value_or(0.5 * static_cast<double>(data.horizon))} {
        const double horizon = static_cast<double>(data.horizon);
        scales_[0].log_step = std::log(config.initial_weight_step > 0.0
                                           ? config.initial_weight_step
                                           : 1.0 / static_cast<double>(order - 1));
        scales_[1].log_step = scales_[0].log_step;
        scales_[2].log_step =
            std::log(config.initial_tau_step > 0.0 ? config.initial_tau_step : horizon / 10.0);
        split_ = split_for(state_.tau);
        refresh(0);
        refresh(1);
    }

    PosteriorDraws run(const IterationObserver& observer) {
        PosteriorDraws out;
        out.config = config_;
        out.order = basis_.order();
        out.horizon = data_.horizon;
        out.draws.reserve(config_.retained());
        out.accepted.reserve(config_.retained());

        const bool tau_free = !config_.fixed_tau.has_value();
        for (int it = 1; it <= config_.iterations; ++it) {
            std::array<bool, kBlockCount> flags{};
            flags[0] = update_weights(0);
            flags[1] = update_weights(1);
            if (tau_free) {
                flags[2] = update_tau();
            }
            for (std::size_t b = 0; b < kBlockCount; ++b) {
                if (b == 2 && !tau_free) {
                    continue;
                }
                record(b, flags[b], out);
            }

            if (it % config_.batch_size == 0) {
                // Cached densities accumulate rounding from incremental updates.
                refresh(0);
                refresh(1);
                if (it <= config_.burn_in) {
                    adapt(tau_free);
                }
            }
            if (observer) {
                observer(it, state_);
            }
            if (it > config_.burn_in && (it - config_.burn_in) % config_.thin == 0) {
                out.draws.push_back(state_);
                out.accepted.push_back(flags);
            }
        }

        for (std::size_t b = 0; b < kBlockCount; ++b) {
            out.stats[b].proposed = proposed_[b];
            out.stats[b].accepted = accepted_[b];
            out.stats[b].final_step = scales_[b].step();
            if (tail_[b].empty()) {
                out.stats[b].burn_in_tail_rate = std::numeric_limits<double>::quiet_NaN();
            } else {
                out.stats[b].burn_in_tail_rate =
                    std::accumulate(tail_[b].begin(), tail_[b].end(), 0.0) /
                    static_cast<double>(tail_[b].size());
            }
        }
        return out;
    }

private:
    std::size_t split_for(double tau) const {
        // Number of observations with t <= tau; they form regime 1.
        const auto it = std::upper_bound(data_.times.begin(), data_.times.end(), tau,
                                         [](double value, std::int64_t t) {
                                             return value < static_cast<double>(t);
                                         });
        return static_cast<std::size_t>(it - data_.times.begin());
    }

    BernsteinWeights& weights(std::size_t r) { return r == 0 ? state_.theta1 : state_.theta2; }

    void refresh(std::size_t r) {
        const std::size_t n_obs = basis_.rows();
        dens_[r].resize(n_obs);
        logdens_[r].resize(n_obs);
        for (std::size_t n = 0; n < n_obs; ++n) {
            dens_[r][n] = basis_.density(n, weights(r));
            logdens_[r][n] = std::log(dens_[r][n]);
        }
    }

    bool update_weights(std::size_t r) {
        ++proposed_[r];
        BernsteinWeights& theta = weights(r);
        const WeightMove move = draw_weight_move(basis_.order(), scales_[r].step(), rng_);
        std::array<double, 3> next{};
        for (std::size_t m = 0; m < 3; ++m) {
            next[m] = theta.weight(move.idx[m]) + move.delta[m];
            if (next[m] < 0.0) {
                return false;
            }
        }

        const std::size_t n_obs = basis_.rows();
        proposal_.resize(n_obs);
        for (std::size_t n = 0; n < n_obs; ++n) {
            double d = dens_[r][n];
            for (std::size_t m = 0; m < 3; ++m) {
                d += move.delta[m] * basis_(n, move.idx[m]);
            }
            proposal_[n] = d;
        }
        const std::size_t lo = r == 0 ? 0 : split_;
        const std::size_t hi = r == 0 ? split_ : n_obs;
        double log_ratio = 0.0;
        for (std::size_t n = lo; n < hi; ++n) {
            if (!(proposal_[n] > 0.0)) {
                return false;
            }
            log_ratio += std::log(proposal_[n]) - logdens_[r][n];
        }
        if (!accept(log_ratio)) {
            return false;
        }

        for (std::size_t m = 0; m < 3; ++m) {
            theta.set_weight(move.idx[m], next[m]);
        }
        for (std::size_t n = 0; n < n_obs; ++n) {
            dens_[r][n] = std::max(proposal_[n], 0.0);
            logdens_[r][n] = std::log(dens_[r][n]);
        }
        return true;
    }

    bool update_tau() {
        ++proposed_[2];
        const double horizon = static_cast<double>(data_.horizon);
        const TauProposal proposal = propose_tau(state_.tau, scales_[2], horizon, rng_);
        const std::size_t next_split = split_for(proposal.tau);
        double delta = 0.0;
        if (next_split > split_) {
            for (std::size_t n = split_; n < next_split; ++n) {
                delta += logdens_[0][n] - logdens_[1][n];
            }
        } else {
            for (std::size_t n = next_split; n < split_; ++n) {
                delta += logdens_[1][n] - logdens_[0][n];
            }
        }
        const double correction = config_.tau_hastings_correction ? proposal.log_correction : 0.0;
        if (!accept(delta + correction)) {
            return false;
        }
        state_.tau = proposal.tau;
        split_ = next_split;
        return true;
    }

    bool accept(double log_ratio) {
        const double u = uniform_(rng_);
        // NaN ratios (e.g. -inf - -inf) are rejections.
        return std::log(u) < log_ratio;
    }

    void record(std::size_t b, bool ok, PosteriorDraws& out) {
        if (ok) {
            ++accepted_[b];
            ++scales_[b].batch_accepts;
            stuck_[b] = 0;
        } else if (++stuck_[b] == kStuckWarning) {
            out.warnings.push_back(std::string(block_name(b)) + ": " +
                                   std::to_string(kStuckWarning) +
                                   " consecutive rejections at iteration " +
                                   std::to_string(proposed_[b]));
        }
    }

    void adapt(bool tau_free) {
        for (std::size_t b = 0; b < kBlockCount; ++b) {
            if (b == 2 && !tau_free) {
                continue;
            }
            const double rate =
                static_cast<double>(scales_[b].batch_accepts) / config_.batch_size;
            tail_[b].push_back(rate);
            if (tail_[b].size() > static_cast<std::size_t>(kTailBatches)) {
                tail_[b].pop_front();
            }
            scales_[b] =
                adapt_scale(scales_[b], rate, scales_[b].batch_index + 1, config_.target_accept);
        }
    }

    const AngularSample& data_;
    const ChainConfig& config_;
    BasisMatrix basis_;
    Rng rng_;
    std::uniform_real_distribution<double> uniform_{0.0, 1.0};
    ChangePointModel state_;
    std::size_t split_ = 0;
    std::array<std::vector<double>, 2> dens_;
    std::array<std::vector<double>, 2> logdens_;
    std::vector<double> proposal_;
    std::array<AdaptiveScale, kBlockCount> scales_{};
    std::array<std::int64_t, kBlockCount> proposed_{};
    std::array<std::int64_t, kBlockCount> accepted_{};
    std::array<int, kBlockCount> stuck_{};
    std::array<std::deque<double>, kBlockCount> tail_;
};

}  // namespace

void ChainConfig::validate() const {
    if (iterations < 1 || burn_in < 0 || burn_in >= iterations) {
        throw InputError("chain needs 0 <= burn_in < iterations");
    }
    if (thin < 1) {
        throw InputError("thin must be at least 1");
    }
    if (batch_size < 1) {
        throw InputError("batch_size must be at least 1");
    }
    if (!(target_accept > 0.0 && target_accept < 1.0)) {
        throw InputError("target acceptance must lie in (0,1)");
    }
    if (initial_weight_step < 0.0 || initial_tau_step < 0.0) {
        throw InputError("initial proposal steps must be nonnegative");
    }
}

std::size_t ChainConfig::retained() const noexcept {
    return static_cast<std::size_t>((iterations - burn_in) / thin);
}

double AdaptiveScale::step() const noexcept { return std::exp(log_step); }

double BlockStats::acceptance() const noexcept {
    return proposed == 0 ? 0.0 : static_cast<double>(accepted) / static_cast<double>(proposed);
}

std::array<double, 3> nullspace_direction(int i, int j, int k) {
    if (i == j || j == k || i == k) {
        throw InputError("null-space direction needs three distinct indices");
    }
    std::array<double, 3> d{static_cast<double>(j - k), static_cast<double>(k - i),
                            static_cast<double>(i - j)};
    const double norm = std::sqrt(d[0] * d[0] + d[1] * d[1] + d[2] * d[2]);
    for (double& v : d) {
        v /= norm;
    }
    return d;
}

WeightMove draw_weight_move(int order, double step, Rng& rng) {
    if (order < kMinOrder) {
        throw InputError("weight moves need order >= 4");
    }
    std::uniform_int_distribution<int> pick(1, order - 1);
    WeightMove move;
    move.idx[0] = pick(rng);
    do {
        move.idx[1] = pick(rng);
    } while (move.idx[1] == move.idx[0]);
    do {
        move.idx[2] = pick(rng);
    } while (move.idx[2] == move.idx[0] || move.idx[2] == move.idx[1]);
    const auto dir = nullspace_direction(move.idx[0], move.idx[1], move.idx[2]);
    std::normal_distribution<double> normal(0.0, 1.0);
    const double distance = step * normal(rng);
    for (std::size_t m = 0; m < 3; ++m) {
        move.delta[m] = distance * dir[m];
    }
    return move;
}

BernsteinWeights propose_weights(const BernsteinWeights& weights, const AdaptiveScale& scale,
                                 Rng& rng) {
    const WeightMove move = draw_weight_move(weights.order(), scale.step(), rng);
    BernsteinWeights out = weights;
    for (std::size_t m = 0; m < 3; ++m) {
        out.set_weight(move.idx[m], out.weight(move.idx[m]) + move.delta[m]);
    }
    return out;
}

double truncated_normal_log_mass(double center, double step, double horizon) {
    // Mass outside on each side is an upper-tail probability, accurate even
    // when it is tiny.
    const double outside = gsl_cdf_ugaussian_Q(center / step) +
                           gsl_cdf_ugaussian_Q((horizon - center) / step);
    return std::log1p(-outside);
}

TauProposal propose_tau(double tau, const AdaptiveScale& scale, double horizon, Rng& rng) {
    if (!(tau > 0.0 && tau < horizon)) {
        throw InputError("tau must lie strictly inside (0, horizon)");
    }
    const double s = scale.step();
    const double lo = gsl_cdf_ugaussian_P(-tau / s);
    const double hi = gsl_cdf_ugaussian_P((horizon - tau) / s);
    std::uniform_real_distribution<double> u(lo, hi);
    double next = tau;
    for (;;) {
        next = tau + s * gsl_cdf_ugaussian_Pinv(u(rng));
        if (next > 0.0 && next < horizon) {
            break;
        }
    }
    return {next, truncated_normal_log_mass(tau, s, horizon) -
                      truncated_normal_log_mass(next, s, horizon)};
}

AdaptiveScale adapt_scale(const AdaptiveScale& scale, double batch_accept_rate, int batch_n,
                          double target_accept) {
    if (!(batch_accept_rate >= 0.0 && batch_accept_rate <= 1.0)) {
        throw InputError("acceptance rate must lie in [0,1]");
    }
    if (batch_n < 1) {
        throw InputError("batch index must be positive");
    }
    const double delta = std::min(0.01, 1.0 / std::sqrt(static_cast<double>(batch_n)));
    AdaptiveScale out = scale;
    out.log_step += batch_accept_rate > target_accept ? delta : -delta;
    out.batch_accepts = 0;
    out.batch_index = batch_n;
    return out;
}

PosteriorDraws run_chain(const AngularSample& data, int order, const ChainConfig& config,
                         const IterationObserver& observer) {
    config.validate();
    data.validate();
    if (data.empty()) {
        throw InputError("cannot run a chain on an empty sample");
    }
    if (order < kMinOrder) {
        throw InputError("Bernstein order must be at least 4, got " + std::to_string(order));
    }
    const double horizon = static_cast<double>(data.horizon);
    if (config.fixed_tau && !(*config.fixed_tau > 0.0 && *config.fixed_tau <= horizon)) {
        throw InputError("fixed tau must lie in (0, horizon]");
    }
    ChainRunner runner(data, order, config);
    return runner.run(observer);
}

PosteriorDraws merge_chains(std::vector<PosteriorDraws> chains) {
    if (chains.empty()) {
        throw InputError("no chains to merge");
    }
    PosteriorDraws out = std::move(chains.front());
    for (auto& w : out.warnings) {
        w = "chain 0: " + w;
    }
    for (std::size_t c = 1; c < chains.size(); ++c) {
        PosteriorDraws& next = chains[c];
        if (next.order != out.order || next.horizon != out.horizon) {
            throw InputError("chains disagree on order or horizon");
        }
        out.draws.insert(out.draws.end(), next.draws.begin(), next.draws.end());
        out.accepted.insert(out.accepted.end(), next.accepted.begin(), next.accepted.end());
        for (std::size_t b = 0; b < kBlockCount; ++b) {
            out.stats[b].proposed += next.stats[b].proposed;
            out.stats[b].accepted += next.stats[b].accepted;
            // Pooled tail rate: chains have equal batch counts.
            out.stats[b].burn_in_tail_rate +=
                (next.stats[b].burn_in_tail_rate - out.stats[b].burn_in_tail_rate) /
                static_cast<double>(c + 1);
        }
        for (const auto& w : next.warnings) {
            out.warnings.push_back("chain " + std::to_string(c) + ": " + w);
        }
    }
    return out;
}

void write_draws_jsonl(const PosteriorDraws& draws, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    for (std::size_t k = 0; k < draws.size(); ++k) {
        nlohmann::json line = model_json(draws.draws[k], draws.horizon);
        line["k"] = k + 1;
        out << line.dump() << '\n';
    }
}

PosteriorDraws read_draws_jsonl(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) {
        throw InputError("cannot open draws file " + path.string());
    }
    PosteriorDraws out;
    std::string line;
    std::size_t line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        if (line.empty()) {
            continue;
        }
        nlohmann::json j;
        try {
            j = nlohmann::json::parse(line);
            out.horizon = j.at("T").get<std::int64_t>();
        } catch (const nlohmann::json::exception& e) {
            throw InputError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
        }
        out.draws.push_back(model_from_json(j));
        out.order = out.draws.back().theta1.order();
        out.accepted.push_back({});
    }
    if (out.empty()) {
        throw InputError(path.string() + ": no draws");
    }
    return out;
}

void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << std::setprecision(17) << "k,tau,accept_theta1,accept_theta2,accept_tau\n";
    for (std::size_t k = 0; k < draws.size(); ++k) {
        const auto& flags = draws.accepted[k];
        out << k + 1 << ',' << draws.draws[k].tau << ',' << int(flags[0]) << ','
            << int(flags[1]) << ',' << int(flags[2]) << '\n';
    }
}

nlohmann::json diagnostics_json(const PosteriorDraws& draws) {
    nlohmann::json blocks = nlohmann::json::object();
    for (std::size_t b = 0; b < kBlockCount; ++b) {
        const BlockStats& s = draws.stats[b];
        blocks[block_name(b)] = {
            {"proposed", s.proposed},
            {"accepted", s.accepted},
            {"acceptance", s.acceptance()},
            {"burn_in_tail_acceptance",
             std::isnan(s.burn_in_tail_rate) ? nlohmann::json() : nlohmann::json(s.burn_in_tail_rate)},
            {"final_step", s.final_step}};
    }
    const ChainConfig& c = draws.config;
    return nlohmann::json{
        {"K", draws.size()},
        {"J", draws.order},
        {"T", draws.horizon},
        {"config",
         {{"iterations", c.iterations},
          {"burn_in", c.burn_in},
          {"thin", c.thin},
          {"batch_size", c.batch_size},
          {"target_accept", c.target_accept},
          {"seed", c.seed},
          {"fixed_tau", c.fixed_tau ? nlohmann::json(*c.fixed_tau) : nlohmann::json()}}},
        {"blocks", std::move(blocks)},
        {"warnings", draws.warnings}};
}

}  // namespace evcp
