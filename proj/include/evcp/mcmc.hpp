#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "evcp/angular.hpp"
#include "evcp/changepoint.hpp"
#include "evcp/margins.hpp"

namespace evcp {

struct ChainConfig {
    int iterations = 15000;
    int burn_in = 5000;
    int thin = 10;
    int batch_size = 50;
    double target_accept = 0.44;
    std::uint64_t seed = 0;
    /// Holds tau at this value and skips the tau block. A value equal to the
    /// horizon puts every observation in regime 1 (single-regime fit).
    std::optional<double> fixed_tau;
    /// Initial proposal sd of the weight blocks; 0 selects 1 / (J - 1).
    double initial_weight_step = 0.0;
    /// Initial proposal sd of the tau block; 0 selects horizon / 10.
    double initial_tau_step = 0.0;
    /// Hastings correction of the truncated-normal tau proposal. Turning it
    /// off gives a biased sampler; the switch exists so tests can show that.
    bool tau_hastings_correction = true;

    void validate() const;
    /// (iterations - burn_in) / thin
    std::size_t retained() const noexcept;
};

/// Log proposal scale of one block, adapted between batches during burn-in.
struct AdaptiveScale {
    double log_step = 0.0;
    int batch_accepts = 0;
    int batch_index = 0;

    double step() const noexcept;
};

enum class Block : std::size_t { theta1 = 0, theta2 = 1, tau = 2 };
inline constexpr std::size_t kBlockCount = 3;

struct BlockStats {
    std::int64_t proposed = 0;
    std::int64_t accepted = 0;
    /// Acceptance pooled over the last (up to) 20 burn-in batches; NaN when
    /// the block was never adapted.
    double burn_in_tail_rate = 0.0;
    double final_step = 0.0;

    double acceptance() const noexcept;
};

struct PosteriorDraws {
    std::vector<ChangePointModel> draws;
    /// Per retained draw: whether each block's update in that iteration was accepted.
    std::vector<std::array<bool, kBlockCount>> accepted;
    std::array<BlockStats, kBlockCount> stats{};
    ChainConfig config;
    int order = 0;
    std::int64_t horizon = 0;
    std::vector<std::string> warnings;

    std::size_t size() const noexcept { return draws.size(); }
    bool empty() const noexcept { return draws.empty(); }
};

/// Unit vector (j - k, k - i, i - j) / norm. Moving weights i, j, k along it
/// keeps both sum theta and sum index * theta unchanged.
std::array<double, 3> nullspace_direction(int i, int j, int k);

/// A random-triple move: weights idx[m] change by delta[m].
struct WeightMove {
    std::array<int, 3> idx{};
    std::array<double, 3> delta{};
};

/// Uniform distinct triple from 1..J-1 and a Normal(0, step^2) distance
/// along its null-space direction.
WeightMove draw_weight_move(int order, double step, Rng& rng);

/// Applies draw_weight_move. The result may have negative weights; the
/// sampler rejects those rather than projecting them back.
BernsteinWeights propose_weights(const BernsteinWeights& weights, const AdaptiveScale& scale,
                                 Rng& rng);

struct TauProposal {
    double tau = 0.0;
    /// log q(tau | tau') - log q(tau' | tau)
    double log_correction = 0.0;
};

/// log of the Normal(center, step^2) mass inside (0, horizon).
double truncated_normal_log_mass(double center, double step, double horizon);

/// Normal(tau, step^2) truncated to (0, horizon), drawn by inversion.
TauProposal propose_tau(double tau, const AdaptiveScale& scale, double horizon, Rng& rng);

/// Moves log_step by +delta when rate > target and by -delta otherwise,
/// delta = min(0.01, batch_n^(-1/2)). Resets the batch counter.
AdaptiveScale adapt_scale(const AdaptiveScale& scale, double batch_accept_rate, int batch_n,
                          double target_accept = 0.44);

/// Called after every iteration with the current state (1-based iteration).
using IterationObserver = std::function<void(int, const ChangePointModel&)>;

/// Componentwise adaptive Metropolis-Hastings over (theta1, theta2, tau).
///
/// Starts from uniform weights and tau = horizon / 2 (or the fixed tau).
/// Every iteration updates theta1, then theta2, then tau. Proposal scales
/// adapt every batch_size iterations during burn-in and are frozen after.
PosteriorDraws run_chain(const AngularSample& data, int order, const ChainConfig& config,
                         const IterationObserver& observer = {});

/// Concatenates independent chains in the given order.
PosteriorDraws merge_chains(std::vector<PosteriorDraws> chains);

void write_draws_jsonl(const PosteriorDraws& draws, const std::filesystem::path& path);
PosteriorDraws read_draws_jsonl(const std::filesystem::path& path);
/// Columns k,tau,accept_theta1,accept_theta2,accept_tau.
void write_draws_csv(const PosteriorDraws& draws, const std::filesystem::path& path);
nlohmann::json diagnostics_json(const PosteriorDraws& draws);

}  // namespace evcp
