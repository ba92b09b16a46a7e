#pragma once

#include "hvarx/core.hpp"
#include "hvarx/parallel.hpp"
#include "hvarx/prox.hpp"

#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hvarx {

enum class PenaltyKind { hierarchical, l1 };

inline std::string to_string(PenaltyKind kind)
{
    return kind == PenaltyKind::hierarchical ? "hvarx" : "l1";
}

struct SolverConfig {
    double lambda_phi = 0.0;
    double lambda_b = 0.0;
    int max_iter = 10000;
    double tol = 1e-5;          // relative objective change, also bounds the relative final step
    bool acceleration = true;
    PenaltyKind penalty = PenaltyKind::hierarchical;
    Vector phi_group_weights;   // per-lag weights for the Phi suffix groups; empty = 1
    Vector b_group_weights;
    int threads = 1;            // equations solved concurrently; <= 0 uses default_thread_count()
};

struct FitResult {
    CoefficientSet coefficients;
    std::vector<double> objective_trace;  // initial value followed by one entry per iteration
    int iterations = 0;
    bool converged = false;
};

namespace detail {

inline void validate_config(const SolverConfig& c)
{
    if (!(c.tol > 0.0)) throw std::invalid_argument("solver tol must be > 0");
    if (c.max_iter < 1) throw std::invalid_argument("solver max_iter must be >= 1");
    if (!(c.lambda_phi >= 0.0) || !(c.lambda_b >= 0.0))
        throw std::invalid_argument("penalty parameters must be >= 0");
}

/// Row-parameter layout: [Phi row (kp) | B row (ms)].
struct RowLayout {
    Index k, m;
    int p, s;

    Index dim() const { return k * p + m * s; }
    Index phi_index(Index d, int lag0) const { return lag0 * k + d; }
    Index b_index(Index r, int lag0) const { return k * p + lag0 * m + r; }
};

inline RowLayout layout_of(const CompactForm& data)
{
    return RowLayout{data.k(), data.m, data.spec.p, data.spec.s};
}

inline Matrix stacked_design(const CompactForm& data)
{
    Matrix Zt(data.Z.rows() + data.X.rows(), data.N());
    Zt.topRows(data.Z.rows()) = data.Z;
    if (data.X.rows() > 0) Zt.bottomRows(data.X.rows()) = data.X;
    return Zt;
}

/// Penalty of one equation's parameters (without the 1/2 loss part).
inline double row_penalty(const Vector& beta, const RowLayout& lay, const SolverConfig& cfg)
{
    double total = 0.0;
    if (cfg.penalty == PenaltyKind::l1) {
        total += cfg.lambda_phi * beta.head(lay.k * lay.p).cwiseAbs().sum();
        total += cfg.lambda_b * beta.tail(lay.m * lay.s).cwiseAbs().sum();
        return total;
    }
    Vector path;
    const bool wphi = cfg.phi_group_weights.size() == lay.p;
    const bool wb = cfg.b_group_weights.size() == lay.s;
    path.resize(lay.p);
    for (Index d = 0; d < lay.k; ++d) {
        for (int l = 0; l < lay.p; ++l) path(l) = beta(lay.phi_index(d, l));
        for (int l = 0; l < lay.p; ++l)
            total += cfg.lambda_phi * (wphi ? cfg.phi_group_weights(l) : 1.0) * path.tail(lay.p - l).norm();
    }
    path.resize(lay.s);
    for (Index r = 0; r < lay.m; ++r) {
        for (int l = 0; l < lay.s; ++l) path(l) = beta(lay.b_index(r, l));
        for (int l = 0; l < lay.s; ++l)
            total += cfg.lambda_b * (wb ? cfg.b_group_weights(l) : 1.0) * path.tail(lay.s - l).norm();
    }
    return total;
}

/// Applies the penalty's proximal map with step `eta` to one equation in place.
inline void row_prox(Vector& beta, const RowLayout& lay, const SolverConfig& cfg, double eta)
{
    if (cfg.penalty == PenaltyKind::l1) {
        beta.head(lay.k * lay.p) = prox::prox_l1(beta.head(lay.k * lay.p), eta * cfg.lambda_phi);
        if (lay.m * lay.s > 0)
            beta.tail(lay.m * lay.s) = prox::prox_l1(beta.tail(lay.m * lay.s), eta * cfg.lambda_b);
        return;
    }
    Vector path(lay.p);
    for (Index d = 0; d < lay.k; ++d) {
        for (int l = 0; l < lay.p; ++l) path(l) = beta(lay.phi_index(d, l));
        path = prox::prox_hier_suffix(path, eta * cfg.lambda_phi, cfg.phi_group_weights);
        for (int l = 0; l < lay.p; ++l) beta(lay.phi_index(d, l)) = path(l);
    }
    path.resize(lay.s);
    for (Index r = 0; r < lay.m; ++r) {
        for (int l = 0; l < lay.s; ++l) path(l) = beta(lay.b_index(r, l));
        path = prox::prox_hier_suffix(path, eta * cfg.lambda_b, cfg.b_group_weights);
        for (int l = 0; l < lay.s; ++l) beta(lay.b_index(r, l)) = path(l);
    }
}

struct RowFit {
    Vector beta;
    std::vector<double> trace;
    int iterations = 0;
    bool converged = false;
};

/**
 * Proximal gradient on one marginal equation, y ~ beta' Zt.
 *
 * With acceleration, Nesterov momentum is reset whenever the extrapolated
 * step would raise the objective and a plain step from the current iterate
 * is taken instead, so the objective sequence is nonincreasing in both modes.
 *
 * Converged means the relative objective change stayed below tol on two
 * consecutive iterations and one plain step from the final iterate moves no
 * coefficient by more than tol times the largest coefficient.
 */
inline RowFit solve_row(const Matrix& Zt, const Vector& y, Vector beta, const RowLayout& lay,
                        const SolverConfig& cfg, double eta)
{
    auto objective = [&](const Vector& b, Vector& resid) {
        resid.noalias() = y;
        resid.noalias() -= Zt.transpose() * b;
        return 0.5 * resid.squaredNorm() + row_penalty(b, lay, cfg);
    };
    auto step_from = [&](const Vector& point, Vector& resid) {
        resid.noalias() = y;
        resid.noalias() -= Zt.transpose() * point;
        Vector next = point;
        next.noalias() += eta * (Zt * resid);
        row_prox(next, lay, cfg, eta);
        return next;
    };

    RowFit out;
    Vector resid(y.size());
    double f = objective(beta, resid);
    out.trace.push_back(f);
    Vector prev = beta;
    double t = 1.0;
    int small_changes = 0;

    for (int it = 1; it <= cfg.max_iter; ++it) {
        Vector next;
        double t_next = 1.0;
        if (cfg.acceleration) {
            t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const Vector look = beta + ((t - 1.0) / t_next) * (beta - prev);
            next = step_from(look, resid);
        } else {
            next = step_from(beta, resid);
        }
        double f_next = objective(next, resid);
        if (cfg.acceleration && f_next > f) {
            t_next = 1.0;
            next = step_from(beta, resid);
            f_next = objective(next, resid);
        }
        const double denom = std::max(std::abs(f), std::numeric_limits<double>::min());
        const double rel = std::abs(f - f_next) / denom;
        prev = std::move(beta);
        beta = std::move(next);
        f = f_next;
        t = t_next;
        out.trace.push_back(f);
        out.iterations = it;
        small_changes = rel < cfg.tol ? small_changes + 1 : 0;
        if (small_changes >= 2) {
            // Also require a plain step from the iterate to be small, so the
            // returned point is a fixed point of the prox-gradient map.
            Vector probe = step_from(beta, resid);
            const double scale = beta.size() ? beta.cwiseAbs().maxCoeff() : 0.0;
            const double move = beta.size() ? (probe - beta).cwiseAbs().maxCoeff() : 0.0;
            if (move <= 5.0 * cfg.tol * scale) {
                out.converged = true;
                break;
            }
            const double f_probe = objective(probe, resid);
            if (f_probe <= f) {
                prev = beta;
                beta = std::move(probe);
                f = f_probe;
                t = 1.0;
                out.trace.back() = f;
            }
            small_changes = 0;
        }
    }
    out.beta = std::move(beta);
    return out;
}

} // namespace detail

/**
 * Largest eigenvalue of Zt Zt' for the stacked design Zt = [Z; X], by power
 * iteration (relative tolerance 1e-8, at most 1000 iterations). Works on the
 * smaller of the two Gram matrices.
 */
inline double lipschitz_constant(const CompactForm& data)
{
    const Matrix Zt = detail::stacked_design(data);
    const Matrix G = Zt.rows() <= Zt.cols() ? Matrix(Zt * Zt.transpose()) : Matrix(Zt.transpose() * Zt);
    if (G.rows() == 0) return 0.0;
    std::mt19937_64 rng(0x5eed);
    std::uniform_real_distribution<double> unif(0.5, 1.5);
    Vector v(G.rows());
    for (Index i = 0; i < v.size(); ++i) v(i) = unif(rng);
    v.normalize();
    double lambda = 0.0;
    for (int it = 0; it < 1000; ++it) {
        Vector w = G * v;
        const double next = v.dot(w);
        const double norm = w.norm();
        if (norm == 0.0) return 0.0;
        v = w / norm;
        if (std::abs(next - lambda) <= 1e-8 * std::abs(next)) {
            lambda = next;
            break;
        }
        lambda = next;
    }
    return lambda;
}

/// 1/2 ||Y - Phi Z - B X||_F^2 plus the configured penalty.
inline double objective(const CoefficientSet& coefs, const CompactForm& data, const SolverConfig& cfg)
{
    const auto lay = detail::layout_of(data);
    if (coefs.Phi.rows() != data.equations() || coefs.Phi.cols() != data.Z.rows() ||
        coefs.B.rows() != data.equations() || coefs.B.cols() != data.X.rows())
        throw std::invalid_argument("objective: coefficient dimensions do not match the data");
    Matrix E = data.Y - coefs.Phi * data.Z;
    if (data.X.rows() > 0) E -= coefs.B * data.X;
    double total = 0.5 * E.squaredNorm();
    Vector beta(lay.dim());
    for (Index i = 0; i < data.equations(); ++i) {
        beta.head(coefs.Phi.cols()) = coefs.Phi.row(i).transpose();
        beta.tail(coefs.B.cols()) = coefs.B.row(i).transpose();
        total += detail::row_penalty(beta, lay, cfg);
    }
    return total;
}

/// One proximal gradient step of size 1/L from `coefs`.
inline CoefficientSet prox_gradient_step(const CoefficientSet& coefs, const CompactForm& data,
                                         const SolverConfig& cfg)
{
    const double L = lipschitz_constant(data);
    if (!(L > 0.0)) throw std::domain_error("step size undefined: stacked design [Z; X] is all zero");
    const auto lay = detail::layout_of(data);
    const Matrix Zt = detail::stacked_design(data);
    CoefficientSet out = coefs;
    for (Index i = 0; i < data.equations(); ++i) {
        Vector beta(lay.dim());
        beta.head(coefs.Phi.cols()) = coefs.Phi.row(i).transpose();
        beta.tail(coefs.B.cols()) = coefs.B.row(i).transpose();
        const Vector resid = data.Y.row(i).transpose() - Zt.transpose() * beta;
        beta += (1.0 / L) * (Zt * resid);
        detail::row_prox(beta, lay, cfg, 1.0 / L);
        out.Phi.row(i) = beta.head(coefs.Phi.cols()).transpose();
        out.B.row(i) = beta.tail(coefs.B.cols()).transpose();
    }
    return out;
}

/**
 * Minimizes the penalized least-squares objective by proximal gradient
 * with fixed step 1/L. Equations are independent and solved separately
 * (optionally in parallel); the returned trace is the summed objective,
 * with converged equations held at their final value.
 *
 * Non-convergence is reported through `converged`, not thrown.
 */
inline FitResult fit(const CompactForm& data, const SolverConfig& cfg,
                     const CoefficientSet* warm_start = nullptr)
{
    detail::validate_config(cfg);
    if (data.N() < 1) throw ValidationError("fit: no effective samples");
    const double L = lipschitz_constant(data);
    if (!(L > 0.0)) throw std::domain_error("step size undefined: stacked design [Z; X] is all zero");
    const double eta = 1.0 / L;
    const auto lay = detail::layout_of(data);
    const Matrix Zt = detail::stacked_design(data);

    const Index eqs = data.equations();
    CoefficientSet init;
    init.spec = data.spec;
    init.Phi = Matrix::Zero(eqs, data.Z.rows());
    init.B = Matrix::Zero(eqs, data.X.rows());
    if (warm_start && warm_start->Phi.rows() == init.Phi.rows() && warm_start->Phi.cols() == init.Phi.cols() &&
        warm_start->B.rows() == init.B.rows() && warm_start->B.cols() == init.B.cols()) {
        init.Phi = warm_start->Phi;
        init.B = warm_start->B;
    }

    std::vector<detail::RowFit> rows(static_cast<std::size_t>(eqs));
    parallel_for(int(eqs), cfg.threads, [&](int i) {
        Vector beta(lay.dim());
        beta.head(init.Phi.cols()) = init.Phi.row(i).transpose();
        beta.tail(init.B.cols()) = init.B.row(i).transpose();
        rows[std::size_t(i)] = detail::solve_row(Zt, data.Y.row(i).transpose(), std::move(beta), lay, cfg, eta);
    });

    FitResult res;
    res.coefficients = init;
    res.coefficients.endo_means = data.endo_means.size() == data.k() ? data.endo_means : Vector::Zero(data.k());
    res.coefficients.exog_means = data.exog_means.size() == data.m ? data.exog_means : Vector::Zero(data.m);
    res.converged = true;
    std::size_t longest = 0;
    for (Index i = 0; i < eqs; ++i) {
        const auto& r = rows[std::size_t(i)];
        res.coefficients.Phi.row(i) = r.beta.head(init.Phi.cols()).transpose();
        res.coefficients.B.row(i) = r.beta.tail(init.B.cols()).transpose();
        res.converged = res.converged && r.converged;
        res.iterations = std::max(res.iterations, r.iterations);
        longest = std::max(longest, r.trace.size());
    }
    res.objective_trace.assign(longest, 0.0);
    for (std::size_t t = 0; t < longest; ++t)
        for (const auto& r : rows) res.objective_trace[t] += r.trace[std::min(t, r.trace.size() - 1)];
    return res;
}

} // namespace hvarx
