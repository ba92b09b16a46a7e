#pragma once

#include "hvarx/core.hpp"
#include "hvarx/solver.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

namespace hvarx {

/// Maximal nonzero lag per (equation, series) pair.
struct LagMatrices {
    IntMatrix L_phi;   // k x k, entries in [0, p]
    IntMatrix L_b;     // k x m, entries in [0, s]
    double zero_threshold = 0.0;
};

/**
 * Entry (i, d) of L_phi is max{l : |Phi_{l,id}| > zero_threshold}, or 0 when
 * the whole path is zero; L_b is defined the same way on B.
 */
inline LagMatrices extract_lag_matrices(const CoefficientSet& coefs, double zero_threshold = 0.0)
{
    const Index k = coefs.k(), m = coefs.m(), eqs = coefs.equations();
    LagMatrices out;
    out.zero_threshold = zero_threshold;
    out.L_phi = IntMatrix::Zero(eqs, k);
    out.L_b = IntMatrix::Zero(eqs, m);
    for (Index i = 0; i < eqs; ++i) {
        for (Index d = 0; d < k; ++d)
            for (int l = coefs.spec.p; l >= 1; --l)
                if (std::abs(coefs.phi(i, d, l)) > zero_threshold) {
                    out.L_phi(i, d) = l;
                    break;
                }
        for (Index r = 0; r < m; ++r)
            for (int l = coefs.spec.s; l >= 1; --l)
                if (std::abs(coefs.b(i, r, l)) > zero_threshold) {
                    out.L_b(i, r) = l;
                    break;
                }
    }
    return out;
}

/**
 * Forecast of y_{t+1} given raw histories whose last column is time t.
 * Histories are centered with the coefficient set's stored means and the
 * endogenous means are added back to the prediction.
 */
inline Vector one_step_forecast(const CoefficientSet& coefs, const Eigen::Ref<const Matrix>& history_endo,
                                const Eigen::Ref<const Matrix>& history_exog)
{
    const Index k = coefs.k(), m = coefs.m();
    const int p = coefs.spec.p, s = coefs.spec.s;
    if (history_endo.rows() != k || history_endo.cols() < p)
        throw std::invalid_argument("one_step_forecast: endogenous history needs " + std::to_string(k) +
                                    " rows and at least " + std::to_string(p) + " columns");
    if (s > 0 && (history_exog.rows() != m || history_exog.cols() < s))
        throw std::invalid_argument("one_step_forecast: exogenous history needs " + std::to_string(m) +
                                    " rows and at least " + std::to_string(s) + " columns");
    Vector yhat = coefs.endo_means;
    const Index te = history_endo.cols() - 1;
    for (int l = 1; l <= p; ++l)
        yhat.noalias() += coefs.Phi.middleCols((l - 1) * k, k) * (history_endo.col(te + 1 - l) - coefs.endo_means);
    if (s > 0) {
        const Index tx = history_exog.cols() - 1;
        for (int j = 1; j <= s; ++j)
            yhat.noalias() += coefs.B.middleCols((j - 1) * m, m) * (history_exog.col(tx + 1 - j) - coefs.exog_means);
    }
    return yhat;
}

/// ceil(0.15 * T) in integer arithmetic.
inline Index holdout_size(Index T) { return (15 * T + 99) / 100; }

struct DieboldMariano {
    double statistic = 0.0;
    double pvalue = 1.0;
};

/**
 * Diebold-Mariano test on one-step-ahead errors (k x H each).
 *
 * The loss differential at step t is the cross-series mean of
 * e_a^2 - e_b^2; its long-run variance is the lag-0 sample variance.
 * A positive statistic means `errors_a` is less accurate.
 */
inline DieboldMariano diebold_mariano(const Matrix& errors_a, const Matrix& errors_b)
{
    if (errors_a.rows() != errors_b.rows() || errors_a.cols() != errors_b.cols())
        throw std::invalid_argument("diebold_mariano: error matrices must have the same shape");
    const Index H = errors_a.cols();
    if (H < 2) throw std::invalid_argument("diebold_mariano: need at least 2 forecast steps");
    const Vector d = (errors_a.array().square() - errors_b.array().square()).colwise().mean().transpose();
    const double mean = d.mean();
    const double var = (d.array() - mean).square().sum() / double(H - 1);
    DieboldMariano out;
    if (!(var > 0.0)) return out;
    out.statistic = mean / std::sqrt(var / double(H));
    out.pvalue = std::erfc(std::abs(out.statistic) / std::sqrt(2.0));
    return out;
}

struct ForecastReport {
    Matrix forecasts;                 // k x H
    Matrix actuals;                   // k x H
    std::vector<Index> test_times;    // 0-based column index of each forecast target
    std::vector<bool> failed;         // fit threw; step excluded from msfe
    std::vector<bool> nonconverged;   // fit hit max_iter; best iterate used
    std::vector<std::string> failure_messages;
    double msfe = std::numeric_limits<double>::quiet_NaN();
    double dm_statistic = std::numeric_limits<double>::quiet_NaN();
    double dm_pvalue = std::numeric_limits<double>::quiet_NaN();
    CoefficientSet last_coefficients;

    Index horizon() const { return forecasts.cols(); }
    Matrix errors() const { return actuals - forecasts; }
};

struct ExpandingWindowOptions {
    bool warm_start = true;   // sequential steps seeded with the previous step's fit
    bool parallel = false;    // independent cold-start steps run concurrently
    int threads = 0;
};

/**
 * One-step-ahead expanding-window evaluation over the last ceil(0.15 T)
 * observations. For each test time t the model is re-centered and re-fit
 * on observations before t with the given penalty parameters, then used to
 * forecast t.
 */
inline ForecastReport expanding_window_eval(const VarxDataset& dataset, const VarxSpec& spec,
                                            const SolverConfig& solver,
                                            const ExpandingWindowOptions& opts = {})
{
    const Index T = dataset.T();
    const Index H = holdout_size(T);
    if (H < 2) throw ValidationError("evaluate: test block needs at least 2 points (T too small)");
    const Index first = T - H;
    validate_spec(spec, dataset.m(), first);

    const Matrix raw_endo = dataset.raw_endo();
    const Matrix raw_exog = dataset.raw_exog();
    ForecastReport rep;
    rep.forecasts = Matrix::Constant(dataset.k(), H, std::numeric_limits<double>::quiet_NaN());
    rep.actuals = raw_endo.rightCols(H);
    std::vector<char> failed(std::size_t(H), 0), nonconverged(std::size_t(H), 0);
    rep.failure_messages.assign(std::size_t(H), "");
    std::vector<CoefficientSet> fitted(static_cast<std::size_t>(H));

    auto step = [&](Index h, const CoefficientSet* warm) {
        const Index t = first + h;
        try {
            const CompactForm cf = build_compact(prefix(dataset, t), spec);
            SolverConfig cfg = solver;
            if (opts.parallel) cfg.threads = 1;
            FitResult fr = fit(cf, cfg, warm);
            nonconverged[std::size_t(h)] = !fr.converged;
            rep.forecasts.col(h) = one_step_forecast(fr.coefficients, raw_endo.leftCols(t), raw_exog.leftCols(t));
            fitted[std::size_t(h)] = std::move(fr.coefficients);
        } catch (const std::exception& e) {
            failed[std::size_t(h)] = 1;
            rep.failure_messages[std::size_t(h)] = e.what();
        }
    };

    if (opts.parallel) {
        parallel_for(int(H), opts.threads, [&](int h) { step(h, nullptr); });
    } else {
        const CoefficientSet* warm = nullptr;
        for (Index h = 0; h < H; ++h) {
            step(h, warm);
            if (opts.warm_start && !failed[std::size_t(h)]) warm = &fitted[std::size_t(h)];
        }
    }
    rep.failed.assign(failed.begin(), failed.end());
    rep.nonconverged.assign(nonconverged.begin(), nonconverged.end());

    for (Index h = 0; h < H; ++h) rep.test_times.push_back(first + h);
    double sum = 0.0;
    Index count = 0;
    for (Index h = 0; h < H; ++h) {
        if (rep.failed[std::size_t(h)]) continue;
        sum += (rep.actuals.col(h) - rep.forecasts.col(h)).squaredNorm();
        count += dataset.k();
    }
    if (count > 0) rep.msfe = sum / double(count);
    for (Index h = H - 1; h >= 0; --h)
        if (!rep.failed[std::size_t(h)]) {
            rep.last_coefficients = fitted[std::size_t(h)];
            break;
        }
    return rep;
}

/// Fills the DM fields of both reports; `a` carries the statistic as
/// computed with `a` first and `b` the negated one.
inline DieboldMariano compare_forecasts(ForecastReport& a, ForecastReport& b)
{
    Matrix ea = a.errors(), eb = b.errors();
    std::vector<Index> keep;
    for (Index h = 0; h < ea.cols(); ++h)
        if (!a.failed[std::size_t(h)] && !b.failed[std::size_t(h)]) keep.push_back(h);
    Matrix ka(ea.rows(), Index(keep.size())), kb(eb.rows(), Index(keep.size()));
    for (std::size_t j = 0; j < keep.size(); ++j) {
        ka.col(Index(j)) = ea.col(keep[j]);
        kb.col(Index(j)) = eb.col(keep[j]);
    }
    const auto dm = diebold_mariano(ka, kb);
    a.dm_statistic = dm.statistic;
    a.dm_pvalue = dm.pvalue;
    b.dm_statistic = -dm.statistic;
    b.dm_pvalue = dm.pvalue;
    return dm;
}

} // namespace hvarx
