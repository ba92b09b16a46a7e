#pragma once

#include "hvarx/core.hpp"
#include "hvarx/csv.hpp"
#include "hvarx/eval.hpp"
#include "hvarx/io.hpp"
#include "hvarx/select.hpp"
#include "hvarx/simgen.hpp"
#include "hvarx/solver.hpp"

#include "json.hpp"

#include <chrono>
#include <cmath>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

namespace hvarx::cli {

inline constexpr const char* kVersion = "0.1.0";

enum ExitCode : int { kOk = 0, kValidationError = 1, kNotConverged = 2 };

/// Everything a run needs. "auto" orders resolve to floor(1.5 sqrt(T)).
struct RunConfig {
    std::string subcommand;          // fit | cv | evaluate | simulate
    std::string endo_path;
    std::string exog_path;
    std::string p = "auto";
    std::string s = "auto";
    std::string penalty = "hvarx";   // hvarx | l1
    std::optional<double> lambda_phi;
    std::optional<double> lambda_b;
    int grid_points = 10;
    double grid_ratio = 1e-3;
    std::string pairing = "cartesian";
    std::string output_dir = ".";
    std::uint64_t seed = 1;
    int verbosity = 0;
    int max_iter = 10000;
    double tol = 1e-5;
    bool acceleration = true;
    int threads = 0;

    // simulate
    int sim_k = 4;
    int sim_m = 2;
    int sim_T = 200;
    int sim_max_lag = 2;
    int sim_order = 2;
    double sim_density = 0.2;
    double sim_radius = 0.8;
    double sim_noise = 1.0;
    double sim_scale = 1.0;
};

inline int auto_order(Index T) { return int(std::floor(1.5 * std::sqrt(double(T)))); }

/// Resolves "auto" / integer order strings against the loaded data.
inline VarxSpec resolve_orders(const RunConfig& cfg, Index T, Index m)
{
    auto parse = [](const std::string& text, const char* field, int fallback) {
        if (text == "auto") return fallback;
        double v = 0;
        if (!csv::parse_double(text, v) || v != std::floor(v) || v < 0)
            throw ValidationError(std::string(field) + ": expected a nonnegative integer or 'auto', got '" + text + "'");
        return int(v);
    };
    VarxSpec spec;
    spec.p = parse(cfg.p, "p", auto_order(T));
    spec.s = parse(cfg.s, "s", m > 0 ? auto_order(T) : 0);
    if (spec.s > 0 && m == 0)
        throw ValidationError("exog_path: s = " + std::to_string(spec.s) +
                              " requires exogenous series but no exog_path was given");
    validate_spec(spec, m, T);
    return spec;
}

inline PenaltyKind parse_penalty(const std::string& name)
{
    if (name == "hvarx" || name == "hierarchical") return PenaltyKind::hierarchical;
    if (name == "l1") return PenaltyKind::l1;
    throw ValidationError("penalty: expected 'hvarx' or 'l1', got '" + name + "'");
}

namespace detail {

using nlohmann::json;

inline json matrix_json(const Matrix& M)
{
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < M.cols(); ++j) r.push_back(std::isfinite(M(i, j)) ? json(M(i, j)) : json(nullptr));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline json int_matrix_json(const IntMatrix& M)
{
    json rows = json::array();
    for (Index i = 0; i < M.rows(); ++i) {
        json r = json::array();
        for (Index j = 0; j < M.cols(); ++j) r.push_back(M(i, j));
        rows.push_back(std::move(r));
    }
    return rows;
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline std::string utc_timestamp()
{
    const std::time_t now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline std::ofstream open_out(const std::filesystem::path& path)
{
    std::ofstream out(path);
    if (!out) throw ValidationError("output_dir: cannot write " + path.string());
    return out;
}

class Runner {
public:
    Runner(const RunConfig& cfg, std::ostream& log) : cfg_(cfg), log_(log), out_dir_(cfg.output_dir) {}

    int run()
    {
        std::filesystem::create_directories(out_dir_);
        if (cfg_.subcommand == "simulate") simulate();
        else if (cfg_.subcommand == "fit") fit_command();
        else if (cfg_.subcommand == "cv") cv_command();
        else if (cfg_.subcommand == "evaluate") evaluate_command();
        else throw ValidationError("subcommand: expected fit, cv, evaluate or simulate, got '" + cfg_.subcommand + "'");

        report_["metadata"] = {{"generated_at", utc_timestamp()}, {"version", kVersion}};
        auto out = open_out(out_dir_ / "report.json");
        out << report_.dump(2) << '\n';
        return any_nonconverged_ ? kNotConverged : kOk;
    }

private:
    const RunConfig& cfg_;
    std::ostream& log_;
    std::filesystem::path out_dir_;
    json report_ = json::object();
    bool any_nonconverged_ = false;
    VarxDataset data_;
    VarxSpec spec_;

    void info(const std::string& msg)
    {
        if (cfg_.verbosity > 0) log_ << msg << '\n';
    }

    SolverConfig solver_config(PenaltyKind kind) const
    {
        SolverConfig sc;
        sc.penalty = kind;
        sc.max_iter = cfg_.max_iter;
        sc.tol = cfg_.tol;
        sc.acceleration = cfg_.acceleration;
        sc.threads = cfg_.threads;
        return sc;
    }

    void load()
    {
        if (cfg_.endo_path.empty()) throw ValidationError("endo_path: required for '" + cfg_.subcommand + "'");
        const SeriesTable endo = read_series_table(cfg_.endo_path);
        std::optional<SeriesTable> exog;
        if (!cfg_.exog_path.empty()) exog = read_series_table(cfg_.exog_path);
        if (exog && exog->values.cols() != endo.values.cols())
            throw ValidationError("exog_path: " + cfg_.exog_path + " has " + std::to_string(exog->values.cols()) +
                                  " rows but endo_path has " + std::to_string(endo.values.cols()));
        data_ = load_and_center(endo, exog ? &*exog : nullptr);
        spec_ = resolve_orders(cfg_, data_.T(), data_.m());
        report_["data"] = {{"k", data_.k()}, {"m", data_.m()}, {"T", data_.T()}};
        report_["orders"] = {{"p", spec_.p}, {"s", spec_.s}};
        info("loaded k=" + std::to_string(data_.k()) + " m=" + std::to_string(data_.m()) +
             " T=" + std::to_string(data_.T()) + ", p=" + std::to_string(spec_.p) + " s=" + std::to_string(spec_.s));
    }

    GridPairing pairing() const
    {
        if (cfg_.pairing == "cartesian") return GridPairing::cartesian;
        if (cfg_.pairing == "common_index") return GridPairing::common_index;
        throw ValidationError("pairing: expected 'cartesian' or 'common_index', got '" + cfg_.pairing + "'");
    }

    json run_cv(PenaltyKind kind, CvResult& out)
    {
        const LambdaGrid grid = default_grid(data_, spec_, kind, cfg_.grid_points, cfg_.grid_ratio, pairing());
        out = cross_validate(data_, spec_, grid, solver_config(kind));
        info(to_string(kind) + ": cv selected lambda_phi=" + std::to_string(out.best_lambda_phi) +
             " lambda_b=" + std::to_string(out.best_lambda_b));
        return {{"lambda_phi_grid", grid.phi_values},
                {"lambda_b_grid", grid.b_values},
                {"pairing", cfg_.pairing},
                {"best_lambda_phi", out.best_lambda_phi},
                {"best_lambda_b", out.best_lambda_b},
                {"cv_msfe_surface", matrix_json(out.cv_msfe_surface)},
                {"split_boundary", out.split_boundary},
                {"validation_end", out.validation_end},
                {"nonconverged_fits", out.nonconverged_fits}};
    }

    /// Penalty levels for `kind`: user-given values apply to the primary
    /// penalty only; anything missing is cross-validated.
    std::pair<double, double> choose_lambdas(PenaltyKind kind, json& model)
    {
        const bool primary = kind == parse_penalty(cfg_.penalty);
        if (primary && cfg_.lambda_phi && (cfg_.lambda_b || data_.m() == 0)) {
            model["lambda_source"] = "user";
            return {*cfg_.lambda_phi, cfg_.lambda_b.value_or(0.0)};
        }
        CvResult cv;
        model["cv"] = run_cv(kind, cv);
        model["lambda_source"] = "cv";
        return {cv.best_lambda_phi, cv.best_lambda_b};
    }

    void write_model_files(const std::string& prefix, const CoefficientSet& coefs)
    {
        const auto lags = extract_lag_matrices(coefs);
        {
            auto f = open_out(out_dir_ / (prefix + "coefficients.csv"));
            io::write_coefficients(f, coefs, data_.endo_names, data_.exog_names);
        }
        {
            auto f = open_out(out_dir_ / (prefix + "means.csv"));
            io::write_means(f, coefs, data_.endo_names, data_.exog_names);
        }
        {
            auto f = open_out(out_dir_ / (prefix + "lag_matrix_phi.csv"));
            io::write_lag_matrix(f, lags.L_phi, data_.endo_names, data_.endo_names);
        }
        {
            auto f = open_out(out_dir_ / (prefix + "lag_matrix_b.csv"));
            io::write_lag_matrix(f, lags.L_b, data_.endo_names, data_.exog_names);
        }
        {
            auto f = open_out(out_dir_ / (prefix + "heatmap_phi.csv"));
            io::write_heatmap(f, lags.L_phi, data_.endo_names, data_.endo_names);
        }
        {
            auto f = open_out(out_dir_ / (prefix + "heatmap_b.csv"));
            io::write_heatmap(f, lags.L_b, data_.endo_names, data_.exog_names);
        }
    }

    /// Full-sample fit at (lambda_phi, lambda_b); writes model files and
    /// returns the in-sample summary.
    json full_sample_fit(PenaltyKind kind, double lphi, double lb, const std::string& prefix)
    {
        const CompactForm cf = build_compact(data_, spec_);
        SolverConfig sc = solver_config(kind);
        sc.lambda_phi = lphi;
        sc.lambda_b = lb;
        const FitResult fr = fit(cf, sc);
        if (!fr.converged) any_nonconverged_ = true;
        const auto b = bic(fr, cf);
        const auto lags = extract_lag_matrices(fr.coefficients);
        write_model_files(prefix, fr.coefficients);
        return {{"lambda_phi", lphi},
                {"lambda_b", lb},
                {"converged", fr.converged},
                {"iterations", fr.iterations},
                {"objective", fr.objective_trace.back()},
                {"bic", b.value},
                {"bic_singular", b.singular},
                {"df", b.df},
                {"lag_matrix_phi", int_matrix_json(lags.L_phi)},
                {"lag_matrix_b", int_matrix_json(lags.L_b)}};
    }

    std::vector<PenaltyKind> both_penalties() const
    {
        const PenaltyKind primary = parse_penalty(cfg_.penalty);
        return {primary, primary == PenaltyKind::hierarchical ? PenaltyKind::l1 : PenaltyKind::hierarchical};
    }

    std::string file_prefix(PenaltyKind kind) const
    {
        return kind == parse_penalty(cfg_.penalty) ? "" : to_string(kind) + "_";
    }

    void fit_command()
    {
        load();
        const PenaltyKind kind = parse_penalty(cfg_.penalty);
        json model;
        const auto [lphi, lb] = choose_lambdas(kind, model);
        model.update(full_sample_fit(kind, lphi, lb, ""));
        report_["command"] = "fit";
        report_["models"][to_string(kind)] = model;
    }

    void cv_command()
    {
        load();
        report_["command"] = "cv";
        for (PenaltyKind kind : both_penalties()) {
            CvResult cv;
            report_["models"][to_string(kind)]["cv"] = run_cv(kind, cv);
        }
    }

    void evaluate_command()
    {
        load();
        report_["command"] = "evaluate";
        std::vector<ForecastReport> reports;
        const auto kinds = both_penalties();
        for (PenaltyKind kind : kinds) {
            json model;
            const auto [lphi, lb] = choose_lambdas(kind, model);
            SolverConfig sc = solver_config(kind);
            sc.lambda_phi = lphi;
            sc.lambda_b = lb;
            ForecastReport fr = expanding_window_eval(data_, spec_, sc);
            int nonconv = 0, failed = 0;
            for (std::size_t h = 0; h < fr.failed.size(); ++h) {
                nonconv += fr.nonconverged[h];
                failed += fr.failed[h];
            }
            if (nonconv > 0) any_nonconverged_ = true;
            model.update(full_sample_fit(kind, lphi, lb, file_prefix(kind)));
            model["forecast"] = {{"msfe", number_or_null(fr.msfe)},
                                 {"horizon", fr.horizon()},
                                 {"test_times", fr.test_times},
                                 {"forecasts", matrix_json(fr.forecasts)},
                                 {"actuals", matrix_json(fr.actuals)},
                                 {"failed_steps", fr.failed},
                                 {"nonconverged_steps", fr.nonconverged},
                                 {"failure_count", failed},
                                 {"nonconverged_count", nonconv}};
            info(to_string(kind) + ": msfe=" + std::to_string(fr.msfe));
            report_["models"][to_string(kind)] = model;
            reports.push_back(std::move(fr));
        }
        const auto dm = compare_forecasts(reports[0], reports[1]);
        for (std::size_t i = 0; i < kinds.size(); ++i) {
            auto& f = report_["models"][to_string(kinds[i])]["forecast"];
            f["dm_statistic"] = number_or_null(reports[i].dm_statistic);
            f["dm_pvalue"] = number_or_null(reports[i].dm_pvalue);
        }
        report_["diebold_mariano"] = {{"first", to_string(kinds[0])},
                                      {"second", to_string(kinds[1])},
                                      {"statistic", dm.statistic},
                                      {"pvalue", dm.pvalue},
                                      {"loss", "cross-series mean squared error differential"}};
    }

    void simulate()
    {
        if (cfg_.sim_m > 0 && cfg_.sim_order < 1) throw ValidationError("sim_order: must be >= 1");
        const int order = std::max(1, cfg_.sim_order);
        sim::SimDesign d = sim::random_sparse_design(cfg_.sim_k, cfg_.sim_m, order, cfg_.sim_m > 0 ? order : 0,
                                                     cfg_.sim_max_lag, cfg_.sim_density, cfg_.seed, cfg_.sim_T);
        d.target_spectral_radius = cfg_.sim_radius;
        d.innovation_sd = cfg_.sim_noise;
        d.coefficient_scale = cfg_.sim_scale;
        const auto res = sim::generate(d);
        data_ = res.data;
        write_dataset(data_, (out_dir_ / "endo.csv").string(), (out_dir_ / "exog.csv").string());
        write_model_files("true_", res.truth);
        report_["command"] = "simulate";
        report_["design"] = {{"k", d.k},
                             {"m", d.m},
                             {"p", d.p},
                             {"s", d.s},
                             {"T", d.T},
                             {"burn_in", d.burn_in},
                             {"seed", d.seed},
                             {"target_spectral_radius", d.target_spectral_radius},
                             {"innovation_sd", d.innovation_sd},
                             {"coefficient_scale", d.coefficient_scale},
                             {"true_lag_matrix_phi", int_matrix_json(d.true_lag_phi)},
                             {"true_lag_matrix_b", int_matrix_json(d.true_lag_b)}};
        report_["companion_spectral_radius"] = companion_spectral_radius(res.truth.Phi);
        report_["warnings"] = res.warnings;
    }
};

} // namespace detail

/**
 * Executes one subcommand and writes its artifacts to cfg.output_dir.
 * Returns 0 on success, 1 on invalid input (message on `log`), 2 when a
 * reported fit did not converge (artifacts are still written).
 */
inline int run(const RunConfig& cfg, std::ostream& log = std::cerr)
{
    try {
        detail::Runner runner(cfg, log);
        return runner.run();
    } catch (const std::exception& e) {
        log << "error: " << e.what() << '\n';
        return kValidationError;
    }
}

} // namespace hvarx::cli
