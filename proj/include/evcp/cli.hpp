#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>

#include <json.hpp>

#include "evcp/ingest.hpp"
#include "evcp/margins.hpp"
#include "evcp/mcmc.hpp"
#include "evcp/summary.hpp"

namespace evcp {

/// Exit codes of the evcp binary.
enum ExitCode : int { kExitOk = 0, kExitInput = 2, kExitNumerical = 3 };

struct PipelineConfig {
    std::filesystem::path prices_a;
    std::filesystem::path prices_b;
    double q = 0.90;
    std::filesystem::path out = ".";
    GarchOptions garch;
};

struct PipelineResult {
    std::size_t returns_a = 0;
    std::size_t returns_b = 0;
    AngularSample exceedances;
};

/// Prices -> negative log returns -> GARCH residuals -> aligned pairs ->
/// rank-Pareto margins -> pseudo-angles -> exceedances. Writes angles.csv,
/// angles.json, garch_a.json and garch_b.json.
PipelineResult cmd_pipeline(const PipelineConfig& config, std::ostream& log);

struct FitConfig {
    std::filesystem::path angles;
    /// Bernstein order; empty selects auto_order.
    std::optional<int> order;
    ChainConfig chain;
    /// Empty draws a seed from std::random_device; it is recorded either way.
    std::optional<std::uint64_t> seed;
    int chains = 1;
    /// Also fit a single-regime model for the whole-period density.
    bool pooled = true;
    std::filesystem::path out = ".";
    ExportOptions export_options;
};

struct FitResult {
    int order = 0;
    std::uint64_t seed = 0;
    PosteriorDraws draws;
    std::optional<PosteriorDraws> pooled;
    nlohmann::json summary;
};

/// max(4, floor(N / 2)).
int auto_order(std::size_t exceedances);

/// Runs the change-point chain(s) and writes draws.jsonl, draws.csv,
/// diagnostics.json (plus pooled_draws.jsonl) and the summary exports.
/// Chain c uses seed + c; the pooled fit uses seed + chains.
FitResult cmd_fit(const FitConfig& config, std::ostream& log);

struct SimulateConfig {
    std::filesystem::path spec;
    std::filesystem::path out = ".";
    /// Overrides the spec's seed when set.
    std::optional<std::uint64_t> seed;
};

/// Writes angles.csv, angles.json and truth.json (tau_true and weights).
AngularSample cmd_simulate(const SimulateConfig& config, std::ostream& log);

struct SummarizeConfig {
    std::filesystem::path angles;
    std::filesystem::path draws;
    std::optional<std::filesystem::path> pooled_draws;
    std::filesystem::path out = ".";
    ExportOptions export_options;
};

/// Recomputes the summary exports from saved draws.
nlohmann::json cmd_summarize(const SummarizeConfig& config, std::ostream& log);

}  // namespace evcp
