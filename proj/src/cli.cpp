#include "evcp/cli.hpp"

#include <algorithm>
#include <fstream>
#include <future>
#include <ostream>
#include <random>
#include <vector>

#include "evcp/error.hpp"
#include "evcp/simulate.hpp"

namespace evcp {

namespace {

void ensure_dir(const std::filesystem::path& dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec || !std::filesystem::is_directory(dir)) {
        throw InputError("cannot create output directory " + dir.string());
    }
}

void write_json_file(const nlohmann::json& j, const std::filesystem::path& path) {
    std::ofstream out(path);
    if (!out) {
        throw InputError("cannot write " + path.string());
    }
    out << j.dump(2) << '\n';
}

std::uint64_t fresh_seed() {
    std::random_device rd;
    return (static_cast<std::uint64_t>(rd()) << 32) ^ rd();
}

}  // namespace

PipelineResult cmd_pipeline(const PipelineConfig& config, std::ostream& log) {
    const PriceSeries prices_a = load_price_csv(config.prices_a);
    const PriceSeries prices_b = load_price_csv(config.prices_b);
    const ReturnSeries returns_a = negative_log_returns(prices_a);
    const ReturnSeries returns_b = negative_log_returns(prices_b);

    // The two filters are independent; run them side by side.
    auto fit_b_future = std::async(std::launch::async,
                                   [&] { return fit_garch11(returns_b, config.garch); });
    const GarchFit fit_a = fit_garch11(returns_a, config.garch);
    const GarchFit fit_b = fit_b_future.get();

    const ResidualPairs pairs = align_pairs(returns_a.dates, fit_a, returns_b.dates, fit_b);
    const AngularSample all = make_angular_sample(to_pareto_pairs(pairs));
    PipelineResult result;
    result.returns_a = returns_a.size();
    result.returns_b = returns_b.size();
    result.exceedances = threshold_exceedances(all, config.q);

    ensure_dir(config.out);
    write_angular_sample(result.exceedances, config.out / "angles.csv");
    write_json_file(garch_fit_json(fit_a, returns_a.dates), config.out / "garch_a.json");
    write_json_file(garch_fit_json(fit_b, returns_b.dates), config.out / "garch_b.json");
    for (const auto& w : fit_a.warnings) {
        log << "warning (" << config.prices_a.string() << "): " << w << '\n';
    }
    for (const auto& w : fit_b.warnings) {
        log << "warning (" << config.prices_b.string() << "): " << w << '\n';
    }
    log << "N = " << result.exceedances.size() << " exceedances\n"
        << "T = " << result.exceedances.horizon << " paired observations\n"
        << "threshold = " << *result.exceedances.threshold << " (q = " << config.q << ")\n";
    return result;
}

int auto_order(std::size_t exceedances) {
    return std::max(kMinOrder, static_cast<int>(exceedances / 2));
}

FitResult cmd_fit(const FitConfig& config, std::ostream& log) {
    if (config.chains < 1) {
        throw InputError("--chains must be at least 1");
    }
    const AngularSample sample = read_angular_sample(config.angles);
    FitResult result;
    result.order = config.order.value_or(auto_order(sample.size()));
    if (result.order < kMinOrder) {
        throw InputError("Bernstein order must be at least 4");
    }
    result.seed = config.seed ? *config.seed : fresh_seed();
    log << "J = " << result.order << (config.order ? " (fixed)" : " (auto: max(4, N/2))")
        << ", N = " << sample.size() << ", T = " << sample.horizon << ", seed = " << result.seed
        << '\n';

    std::vector<std::future<PosteriorDraws>> jobs;
    for (int c = 0; c < config.chains; ++c) {
        ChainConfig chain = config.chain;
        chain.seed = result.seed + static_cast<std::uint64_t>(c);
        jobs.push_back(std::async(std::launch::async, [&sample, order = result.order, chain] {
            return run_chain(sample, order, chain);
        }));
    }
    std::optional<std::future<PosteriorDraws>> pooled_job;
    if (config.pooled) {
        ChainConfig chain = config.chain;
        chain.seed = result.seed + static_cast<std::uint64_t>(config.chains);
        chain.fixed_tau = static_cast<double>(sample.horizon);
        pooled_job = std::async(std::launch::async, [&sample, order = result.order, chain] {
            return run_chain(sample, order, chain);
        });
    }
    std::vector<PosteriorDraws> chains;
    for (auto& job : jobs) {
        chains.push_back(job.get());
    }
    result.draws = merge_chains(std::move(chains));
    if (pooled_job) {
        result.pooled = pooled_job->get();
    }

    ensure_dir(config.out);
    write_draws_jsonl(result.draws, config.out / "draws.jsonl");
    write_draws_csv(result.draws, config.out / "draws.csv");
    nlohmann::json diag = diagnostics_json(result.draws);
    diag["chains"] = config.chains;
    if (result.pooled) {
        write_draws_jsonl(*result.pooled, config.out / "pooled_draws.jsonl");
        diag["pooled"] = diagnostics_json(*result.pooled);
    }
    write_json_file(diag, config.out / "diagnostics.json");
    for (const auto& w : result.draws.warnings) {
        log << "warning: " << w << '\n';
    }

    const nlohmann::json extra{{"seed", result.seed},
                               {"chains", config.chains},
                               {"order_rule", config.order ? "fixed" : "auto"}};
    result.summary = export_plot_data(sample, result.draws,
                                      result.pooled ? &*result.pooled : nullptr, config.out,
                                      config.export_options, extra);
    log << "K = " << result.draws.size() << " draws; tau mode = day "
        << result.summary["tau"]["day"].get<std::int64_t>();
    if (!result.summary["tau"]["date"].is_null()) {
        log << " (" << result.summary["tau"]["date"].get<std::string>() << ")";
    }
    log << '\n';
    return result;
}

AngularSample cmd_simulate(const SimulateConfig& config, std::ostream& log) {
    std::ifstream in(config.spec);
    if (!in) {
        throw InputError("cannot open spec file " + config.spec.string());
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw InputError("spec file is not valid JSON: " + std::string(e.what()));
    }
    SyntheticSpec spec = spec_from_json(j);
    if (config.seed) {
        spec.seed = *config.seed;
    }
    spec.validate();
    const AngularSample sample = simulate_changepoint_angles(spec);

    ensure_dir(config.out);
    write_angular_sample(sample, config.out / "angles.csv");
    write_json_file(spec_json(spec), config.out / "truth.json");
    log << "simulated " << sample.size() << " angles over T = " << sample.horizon
        << " with tau_true = " << spec.tau_true << '\n';
    return sample;
}

nlohmann::json cmd_summarize(const SummarizeConfig& config, std::ostream& log) {
    const AngularSample sample = read_angular_sample(config.angles);
    const PosteriorDraws draws = read_draws_jsonl(config.draws);
    std::optional<PosteriorDraws> pooled;
    if (config.pooled_draws) {
        pooled = read_draws_jsonl(*config.pooled_draws);
    }
    nlohmann::json summary = export_plot_data(sample, draws, pooled ? &*pooled : nullptr,
                                              config.out, config.export_options);
    log << "K = " << draws.size() << "; tau mode = day "
        << summary["tau"]["day"].get<std::int64_t>() << '\n';
    return summary;
}

}  // namespace evcp
