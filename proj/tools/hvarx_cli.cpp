// Command-line front end: hvarx <fit|cv|evaluate|simulate> [options]
//
// Options may also come from a flat key = value file given with --config;
// flags on the command line take precedence.

#include "hvarx/cli.hpp"

#include "CLI11.hpp"

#include <algorithm>
#include <iostream>
#include <memory>

namespace {

// Config keys use field names (endo_path, sim_k, ...); options are dashed.
class SnakeCaseConfig : public CLI::ConfigTOML {
public:
    std::vector<CLI::ConfigItem> from_config(std::istream& input) const override
    {
        auto items = CLI::ConfigTOML::from_config(input);
        for (auto& item : items) std::replace(item.name.begin(), item.name.end(), '_', '-');
        return items;
    }
};

} // namespace

int main(int argc, char** argv)
{
    using hvarx::cli::RunConfig;
    RunConfig cfg;
    CLI::App app{"Sparse VARX estimation with hierarchical lag selection"};
    app.set_version_flag("--version", hvarx::cli::kVersion);
    app.set_config("--config", "", "Flat key = value configuration file");
    app.config_formatter(std::make_shared<SnakeCaseConfig>());
    app.require_subcommand(1);

    for (const char* name : {"fit", "cv", "evaluate", "simulate"}) {
        auto* sub = app.add_subcommand(name);
        sub->fallthrough();
    }
    app.get_subcommand("fit")->description("Fit one penalty on the full sample (cross-validating lambdas unless given)");
    app.get_subcommand("cv")->description("Cross-validate the penalty grid for both penalties");
    app.get_subcommand("evaluate")->description("Expanding-window forecast comparison of hvarx against l1");
    app.get_subcommand("simulate")->description("Generate a synthetic stable VARX dataset");

    std::optional<double> lambda_phi, lambda_b;
    app.add_option("--endo,--endo-path", cfg.endo_path, "CSV of endogenous series");
    app.add_option("--exog,--exog-path", cfg.exog_path, "CSV of exogenous series");
    app.add_option("-p,--p", cfg.p, "Endogenous order or 'auto'")->capture_default_str();
    app.add_option("-s,--s", cfg.s, "Exogenous order or 'auto'")->capture_default_str();
    app.add_option("--penalty", cfg.penalty, "hvarx or l1")->capture_default_str();
    app.add_option("--lambda-phi", lambda_phi, "Fixed lambda for the endogenous block");
    app.add_option("--lambda-b", lambda_b, "Fixed lambda for the exogenous block");
    app.add_option("--grid-points", cfg.grid_points, "Grid points per lambda axis")->capture_default_str();
    app.add_option("--grid-ratio", cfg.grid_ratio, "Smallest lambda as a fraction of lambda_max")->capture_default_str();
    app.add_option("--pairing", cfg.pairing, "cartesian or common_index")->capture_default_str();
    app.add_option("-o,--output-dir", cfg.output_dir, "Directory for artifacts")->capture_default_str();
    app.add_option("--seed", cfg.seed, "Random seed")->capture_default_str();
    app.add_option("--max-iter", cfg.max_iter, "Solver iteration cap")->capture_default_str();
    app.add_option("--tol", cfg.tol, "Relative objective tolerance")->capture_default_str();
    app.add_option("--acceleration", cfg.acceleration, "Nesterov acceleration (true/false)")->capture_default_str();
    app.add_option("--threads", cfg.threads, "Worker threads (0: HVARX_THREADS or hardware)")->capture_default_str();
    app.add_flag("-v,--verbose", cfg.verbosity, "Progress messages on stderr");

    app.add_option("--sim-k", cfg.sim_k, "simulate: endogenous series")->capture_default_str();
    app.add_option("--sim-m", cfg.sim_m, "simulate: exogenous series")->capture_default_str();
    app.add_option("--sim-T", cfg.sim_T, "simulate: series length")->capture_default_str();
    app.add_option("--sim-order", cfg.sim_order, "simulate: generating order p = s")->capture_default_str();
    app.add_option("--sim-max-lag", cfg.sim_max_lag, "simulate: largest true lag")->capture_default_str();
    app.add_option("--sim-density", cfg.sim_density, "simulate: probability of a cross effect")->capture_default_str();
    app.add_option("--sim-radius", cfg.sim_radius, "simulate: companion spectral radius")->capture_default_str();
    app.add_option("--sim-noise", cfg.sim_noise, "simulate: innovation standard deviation")->capture_default_str();
    app.add_option("--sim-scale", cfg.sim_scale, "simulate: coefficient draw half-width")->capture_default_str();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : hvarx::cli::kValidationError;
    }
    cfg.subcommand = app.get_subcommands().front()->get_name();
    cfg.lambda_phi = lambda_phi;
    cfg.lambda_b = lambda_b;
    return hvarx::cli::run(cfg, std::cerr);
}
