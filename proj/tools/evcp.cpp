// evcp: change-points in the extremal dependence of bivariate series.
//
//   evcp pipeline  --prices-a A.csv --prices-b B.csv [--q 0.90] --out DIR
//   evcp fit       --angles DIR/angles.csv [--order auto|J] [--iters ...] --out DIR
//   evcp simulate  --spec spec.json [--seed S] --out DIR
//   evcp summarize --angles A.csv --draws draws.jsonl --out DIR
//
// Every subcommand also takes --config FILE.json; keys are long flag names
// without dashes and explicit flags win over the file.

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <string>

#include <json.hpp>

#include "evcp/cli.hpp"
#include "evcp/error.hpp"

namespace {

void apply_config(CLI::App& sub, const std::string& path) {
    if (path.empty()) {
        return;
    }
    std::ifstream in(path);
    if (!in) {
        throw evcp::InputError("cannot open config file " + path);
    }
    nlohmann::json j;
    try {
        in >> j;
    } catch (const nlohmann::json::exception& e) {
        throw evcp::InputError("config file is not valid JSON: " + std::string(e.what()));
    }
    if (!j.is_object()) {
        throw evcp::InputError("config file must hold a JSON object");
    }
    for (const auto& [key, value] : j.items()) {
        CLI::Option* opt = sub.get_option_no_throw("--" + key);
        if (opt == nullptr) {
            throw evcp::InputError("unknown config key '" + key + "' for " + sub.get_name());
        }
        if (opt->count() > 0) {
            continue;
        }
        std::string text;
        if (value.is_string()) {
            text = value.get<std::string>();
        } else if (value.is_boolean()) {
            text = value.get<bool>() ? "true" : "false";
        } else {
            text = value.dump();
        }
        opt->add_result(text);
        opt->run_callback();
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Change-point detection in bivariate extremal dependence"};
    app.require_subcommand(1);

    evcp::PipelineConfig pipeline;
    std::string pipeline_config;
    auto* pipe = app.add_subcommand("pipeline", "prices -> GARCH residuals -> pseudo-angle exceedances");
    pipe->add_option("--prices-a", pipeline.prices_a, "first asset price CSV (date,close)")->required();
    pipe->add_option("--prices-b", pipeline.prices_b, "second asset price CSV (date,close)")->required();
    pipe->add_option("--q", pipeline.q, "radial quantile level")->capture_default_str();
    pipe->add_option("--out", pipeline.out, "output directory")->capture_default_str();
    pipe->add_option("--config", pipeline_config, "JSON config file");

    evcp::FitConfig fit;
    std::string fit_config;
    std::string order_text = "auto";
    std::uint64_t fit_seed = 0;
    bool no_pooled = false;
    auto* fit_cmd = app.add_subcommand("fit", "run the change-point MCMC on an angles file");
    fit_cmd->add_option("--angles", fit.angles, "angles CSV written by pipeline or simulate")->required();
    fit_cmd->add_option("--order", order_text, "Bernstein order J or 'auto' = max(4, N/2)")->capture_default_str();
    fit_cmd->add_option("--iters", fit.chain.iterations, "MCMC iterations")->capture_default_str();
    fit_cmd->add_option("--burnin", fit.chain.burn_in, "burn-in iterations")->capture_default_str();
    fit_cmd->add_option("--thin", fit.chain.thin, "thinning interval")->capture_default_str();
    fit_cmd->add_option("--batch", fit.chain.batch_size, "adaptation batch size")->capture_default_str();
    auto* seed_opt = fit_cmd->add_option("--seed", fit_seed, "random seed (default: entropy, recorded)");
    fit_cmd->add_option("--chains", fit.chains, "independent chains run in parallel")->capture_default_str();
    fit_cmd->add_flag("--no-pooled", no_pooled, "skip the single-regime whole-period fit");
    fit_cmd->add_option("--bins", fit.export_options.bins, "histogram bins")->capture_default_str();
    fit_cmd->add_option("--grid", fit.export_options.grid_points, "density grid points")->capture_default_str();
    fit_cmd->add_option("--level", fit.export_options.level, "tau interval level")->capture_default_str();
    fit_cmd->add_option("--out", fit.out, "output directory")->capture_default_str();
    fit_cmd->add_option("--config", fit_config, "JSON config file");

    evcp::SimulateConfig simulate;
    std::string simulate_config;
    std::uint64_t simulate_seed = 0;
    auto* sim = app.add_subcommand("simulate", "synthetic angles with a planted change-point");
    sim->add_option("--spec", simulate.spec, "synthetic spec JSON")->required();
    auto* sim_seed_opt = sim->add_option("--seed", simulate_seed, "overrides the spec seed");
    sim->add_option("--out", simulate.out, "output directory")->capture_default_str();
    sim->add_option("--config", simulate_config, "JSON config file");

    evcp::SummarizeConfig summarize;
    std::string summarize_config;
    std::string pooled_draws;
    auto* sum = app.add_subcommand("summarize", "recompute histograms, densities and summary.json");
    sum->add_option("--angles", summarize.angles, "angles CSV")->required();
    sum->add_option("--draws", summarize.draws, "draws.jsonl from fit")->required();
    sum->add_option("--pooled-draws", pooled_draws, "pooled_draws.jsonl from fit");
    sum->add_option("--bins", summarize.export_options.bins, "histogram bins")->capture_default_str();
    sum->add_option("--grid", summarize.export_options.grid_points, "density grid points")->capture_default_str();
    sum->add_option("--level", summarize.export_options.level, "tau interval level")->capture_default_str();
    sum->add_option("--out", summarize.out, "output directory")->capture_default_str();
    sum->add_option("--config", summarize_config, "JSON config file");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return evcp::kExitInput;
    }

    try {
        if (pipe->parsed()) {
            apply_config(*pipe, pipeline_config);
            evcp::cmd_pipeline(pipeline, std::cout);
        } else if (fit_cmd->parsed()) {
            apply_config(*fit_cmd, fit_config);
            if (order_text != "auto") {
                try {
                    fit.order = std::stoi(order_text);
                } catch (const std::exception&) {
                    throw evcp::InputError("--order must be an integer or 'auto'");
                }
            }
            if (seed_opt->count() > 0) {
                fit.seed = fit_seed;
            }
            fit.pooled = !no_pooled;
            evcp::cmd_fit(fit, std::cout);
        } else if (sim->parsed()) {
            apply_config(*sim, simulate_config);
            if (sim_seed_opt->count() > 0) {
                simulate.seed = simulate_seed;
            }
            evcp::cmd_simulate(simulate, std::cout);
        } else if (sum->parsed()) {
            apply_config(*sum, summarize_config);
            if (!pooled_draws.empty()) {
                summarize.pooled_draws = pooled_draws;
            }
            evcp::cmd_summarize(summarize, std::cout);
        }
    } catch (const evcp::InputError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return evcp::kExitInput;
    } catch (const evcp::NumericalError& e) {
        std::cerr << "numerical failure: " << e.what() << '\n';
        return evcp::kExitNumerical;
    } catch (const CLI::ParseError& e) {
        std::cerr << "error: " << e.what() << '\n';
        return evcp::kExitInput;
    }
    return evcp::kExitOk;
}
