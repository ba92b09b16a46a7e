#pragma once

#include "hvarx/core.hpp"
#include "hvarx/eval.hpp"
#include "hvarx/parallel.hpp"
#include "hvarx/prox.hpp"
#include "hvarx/solver.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>
#include <utility>
#include <vector>

namespace hvarx {

enum class GridPairing { cartesian, common_index };

struct LambdaGrid {
    std::vector<double> phi_values;  // strictly descending
    std::vector<double> b_values;    // strictly descending; {0} when there is no B block
    GridPairing pairing = GridPairing::cartesian;

    /// (phi index, b index) pairs in warm-start order: descending lambda_phi, then lambda_b.
    std::vector<std::pair<std::size_t, std::size_t>> pairs() const
    {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        if (pairing == GridPairing::cartesian) {
            for (std::size_t i = 0; i < phi_values.size(); ++i)
                for (std::size_t j = 0; j < b_values.size(); ++j) out.emplace_back(i, j);
        } else {
            for (std::size_t i = 0; i < phi_values.size(); ++i)
                out.emplace_back(i, b_values.size() == 1 ? 0 : i);
        }
        return out;
    }
};

struct LambdaMax {
    double phi = 0.0;
    double b = 0.0;
};

/**
 * Smallest penalty levels at which the fit is identically zero.
 *
 * At zero coefficients the negative gradient is Y Z' (resp. Y X'). For the
 * l1 penalty the threshold is its largest absolute entry. For the
 * hierarchical penalty it is, per coefficient path, the smallest tau for
 * which the exact suffix prox zeroes that path; the maximum over paths is
 * returned. `b` is 0 when there is no exogenous block.
 */
inline LambdaMax lambda_max(const CompactForm& data, PenaltyKind kind)
{
    if (data.Y.isZero(0.0)) throw ValidationError("lambda_max: response matrix Y is all zero");
    const Index k = data.k(), m = data.m, eqs = data.equations();
    const int p = data.spec.p, s = data.spec.s;
    const Matrix gphi = data.Y * data.Z.transpose();
    const Matrix gb = m > 0 ? Matrix(data.Y * data.X.transpose()) : Matrix(eqs, 0);
    LambdaMax out;
    if (kind == PenaltyKind::l1) {
        out.phi = gphi.size() ? gphi.cwiseAbs().maxCoeff() : 0.0;
        out.b = gb.size() ? gb.cwiseAbs().maxCoeff() : 0.0;
        return out;
    }
    Vector path;
    for (Index i = 0; i < eqs; ++i) {
        path.resize(p);
        for (Index d = 0; d < k; ++d) {
            for (int l = 0; l < p; ++l) path(l) = gphi(i, l * k + d);
            out.phi = std::max(out.phi, prox::hier_zeroing_threshold(path));
        }
        path.resize(s);
        for (Index r = 0; r < m; ++r) {
            for (int l = 0; l < s; ++l) path(l) = gb(i, l * m + r);
            out.b = std::max(out.b, prox::hier_zeroing_threshold(path));
        }
    }
    return out;
}

namespace detail {

inline std::vector<double> log_spaced(double top, int n, double ratio)
{
    if (!(top > 0.0)) return {0.0};
    std::vector<double> v(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) v[std::size_t(i)] = top * std::pow(ratio, double(i) / double(n - 1));
    v.front() = top;
    return v;
}

} // namespace detail

/// Log-spaced grid from lambda_max down to ratio * lambda_max on each axis.
/// An axis whose lambda_max is 0 collapses to the single value 0.
inline LambdaGrid build_grid(const LambdaMax& lmax, int n_points = 10, double ratio = 1e-3,
                             GridPairing pairing = GridPairing::cartesian)
{
    if (n_points < 2) throw std::invalid_argument("build_grid: n_points must be >= 2");
    if (!(ratio > 0.0 && ratio < 1.0)) throw std::invalid_argument("build_grid: ratio must be in (0, 1)");
    LambdaGrid g;
    g.phi_values = detail::log_spaced(lmax.phi, n_points, ratio);
    g.b_values = detail::log_spaced(lmax.b, n_points, ratio);
    g.pairing = pairing;
    return g;
}

/// Partition of 0..T-1 into training, validation and held-out test blocks.
struct SampleSplit {
    Index train_end = 0;        // training: [0, train_end)
    Index validation_end = 0;   // validation: [train_end, validation_end)
    Index T = 0;                // test: [validation_end, T)
};

inline SampleSplit cv_split(Index T)
{
    SampleSplit s;
    s.T = T;
    const Index test = holdout_size(T);
    const Index validation = std::max<Index>(2, holdout_size(T));
    s.validation_end = T - test;
    s.train_end = s.validation_end - validation;
    return s;
}

struct CvResult {
    double best_lambda_phi = 0.0;
    double best_lambda_b = 0.0;
    std::size_t best_phi_index = 0;
    std::size_t best_b_index = 0;
    Matrix cv_msfe_surface;     // phi_values x b_values; NaN where not evaluated or failed
    Index split_boundary = 0;   // first validation time index
    Index validation_end = 0;
    int nonconverged_fits = 0;
};

struct CvOptions {
    bool parallel_cold_start = false;
    int threads = 0;
};

/**
 * Grid search over (lambda_phi, lambda_b). Each pair is fitted once on the
 * training block and scored by the one-step-ahead MSFE over the validation
 * block with the coefficients held fixed. Ties go to the earlier pair in
 * warm-start order, i.e. the larger penalties.
 *
 * Sequential mode warm-starts each fit from its neighbour in the grid;
 * parallel mode cold-starts every pair.
 */
inline CvResult cross_validate(const VarxDataset& dataset, const VarxSpec& spec, const LambdaGrid& grid,
                               const SolverConfig& solver, const CvOptions& opts = {})
{
    if (grid.phi_values.empty() || grid.b_values.empty())
        throw std::invalid_argument("cross_validate: empty lambda grid");
    const auto split = cv_split(dataset.T());
    if (split.validation_end - split.train_end < 2)
        throw ValidationError("cv: validation block needs at least 2 points");
    if (split.train_end < spec.obar() + 2)
        throw ValidationError("cv: training block of " + std::to_string(split.train_end) +
                              " observations is too short for max(p, s) = " + std::to_string(spec.obar()));

    const CompactForm train = build_compact(prefix(dataset, split.train_end), spec);
    const Matrix raw_endo = dataset.raw_endo();
    const Matrix raw_exog = dataset.raw_exog();
    const auto pairs = grid.pairs();
    const std::size_t nb = grid.b_values.size();

    CvResult res;
    res.split_boundary = split.train_end;
    res.validation_end = split.validation_end;
    res.cv_msfe_surface = Matrix::Constant(Index(grid.phi_values.size()), Index(nb),
                                           std::numeric_limits<double>::quiet_NaN());

    std::vector<CoefficientSet> solutions(pairs.size());
    std::vector<char> ok(pairs.size(), 0), nonconv(pairs.size(), 0);

    auto score = [&](std::size_t idx, const CoefficientSet* warm) {
        const auto [i, j] = pairs[idx];
        SolverConfig cfg = solver;
        cfg.lambda_phi = grid.phi_values[i];
        cfg.lambda_b = grid.b_values[j];
        if (opts.parallel_cold_start) cfg.threads = 1;
        try {
            FitResult fr = fit(train, cfg, warm);
            nonconv[idx] = !fr.converged;
            double sse = 0.0;
            for (Index t = split.train_end; t < split.validation_end; ++t) {
                const Vector f = one_step_forecast(fr.coefficients, raw_endo.leftCols(t), raw_exog.leftCols(t));
                sse += (raw_endo.col(t) - f).squaredNorm();
            }
            const double msfe = sse / double(dataset.k() * (split.validation_end - split.train_end));
            res.cv_msfe_surface(Index(i), Index(j)) = msfe;
            solutions[idx] = std::move(fr.coefficients);
            ok[idx] = 1;
        } catch (const std::exception&) {
        }
    };

    if (opts.parallel_cold_start) {
        parallel_for(int(pairs.size()), opts.threads, [&](int idx) { score(std::size_t(idx), nullptr); });
    } else {
        for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
            const CoefficientSet* warm = nullptr;
            if (idx > 0) {
                // A new lambda_phi row starts from the previous row's first fit.
                std::size_t from = idx - 1;
                if (grid.pairing == GridPairing::cartesian && pairs[idx].second == 0 && idx >= nb) from = idx - nb;
                if (ok[from]) warm = &solutions[from];
            }
            score(idx, warm);
        }
    }

    double best = std::numeric_limits<double>::infinity();
    bool found = false;
    for (std::size_t idx = 0; idx < pairs.size(); ++idx) {
        res.nonconverged_fits += nonconv[idx];
        if (!ok[idx]) continue;
        const auto [i, j] = pairs[idx];
        const double v = res.cv_msfe_surface(Index(i), Index(j));
        if (std::isfinite(v) && v < best) {
            best = v;
            found = true;
            res.best_phi_index = i;
            res.best_b_index = j;
        }
    }
    if (!found) throw std::runtime_error("cv: every grid point failed to fit");
    res.best_lambda_phi = grid.phi_values[res.best_phi_index];
    res.best_lambda_b = grid.b_values[res.best_b_index];
    return res;
}

/// Default grid for cross_validate: lambda_max is taken on the training block.
inline LambdaGrid default_grid(const VarxDataset& dataset, const VarxSpec& spec, PenaltyKind kind,
                               int n_points = 10, double ratio = 1e-3,
                               GridPairing pairing = GridPairing::cartesian)
{
    const auto split = cv_split(dataset.T());
    if (split.train_end < spec.obar() + 2)
        throw ValidationError("cv: training block of " + std::to_string(split.train_end) +
                              " observations is too short for max(p, s) = " + std::to_string(spec.obar()));
    const CompactForm train = build_compact(prefix(dataset, split.train_end), spec);
    return build_grid(lambda_max(train, kind), n_points, ratio, pairing);
}

struct BicResult {
    double value = 0.0;
    Index df = 0;
    bool singular = false;   // residual covariance had eigenvalues below the floor
};

/**
 * log det(E E' / N) + (log N / N) * df, with df the number of nonzero
 * coefficients. Eigenvalues of E E' / N below 1e-12 are floored at 1e-12
 * and the result is flagged.
 */
inline BicResult bic(const CoefficientSet& coefs, const CompactForm& data)
{
    Matrix E = data.Y - coefs.Phi * data.Z;
    if (data.X.rows() > 0) E -= coefs.B * data.X;
    const double N = double(data.N());
    const Matrix S = (E * E.transpose()) / N;
    Eigen::SelfAdjointEigenSolver<Matrix> es(S, Eigen::EigenvaluesOnly);
    constexpr double floor = 1e-12;
    BicResult out;
    double logdet = 0.0;
    for (Index i = 0; i < es.eigenvalues().size(); ++i) {
        double ev = es.eigenvalues()(i);
        if (ev < floor) {
            ev = floor;
            out.singular = true;
        }
        logdet += std::log(ev);
    }
    out.df = Index((coefs.Phi.array() != 0.0).count() + (coefs.B.array() != 0.0).count());
    out.value = logdet + std::log(N) / N * double(out.df);
    return out;
}

inline BicResult bic(const FitResult& fit, const CompactForm& data) { return bic(fit.coefficients, data); }

} // namespace hvarx
