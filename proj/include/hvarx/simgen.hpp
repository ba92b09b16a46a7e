#pragma once

#include "hvarx/core.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

namespace hvarx::sim {

struct SimDesign {
    Index k = 2, m = 0;
    int p = 1, s = 0;
    IntMatrix true_lag_phi;   // k x k, entries in [0, p]
    IntMatrix true_lag_b;     // k x m, entries in [0, s]
    double coefficient_scale = 1.0;
    double target_spectral_radius = 0.8;
    double innovation_sd = 1.0;
    std::uint64_t seed = 1;
    Index T = 100;
    Index burn_in = 200;
};

struct SimResult {
    VarxDataset data;
    CoefficientSet truth;
    std::vector<std::string> warnings;
};

/// Seed for replication r of a Monte Carlo study started from `base`.
inline std::uint64_t replication_seed(std::uint64_t base, std::uint64_t r) { return base + r; }

inline void validate_design(const SimDesign& d)
{
    if (d.k < 1) throw ValidationError("design.k must be >= 1");
    if (d.p < 1) throw ValidationError("design.p must be >= 1");
    if (d.m < 0 || d.s < 0) throw ValidationError("design.m and design.s must be >= 0");
    if ((d.m == 0) != (d.s == 0)) throw ValidationError("design.s must be 0 exactly when design.m is 0");
    if (d.true_lag_phi.rows() != d.k || d.true_lag_phi.cols() != d.k)
        throw ValidationError("design.true_lag_phi must be k x k");
    if (d.true_lag_b.rows() != d.k || d.true_lag_b.cols() != d.m)
        throw ValidationError("design.true_lag_b must be k x m");
    if (d.true_lag_phi.size() && (d.true_lag_phi.minCoeff() < 0 || d.true_lag_phi.maxCoeff() > d.p))
        throw ValidationError("design.true_lag_phi entries must lie in [0, p]");
    if (d.true_lag_b.size() && (d.true_lag_b.minCoeff() < 0 || d.true_lag_b.maxCoeff() > d.s))
        throw ValidationError("design.true_lag_b entries must lie in [0, s]");
    if (!(d.coefficient_scale > 0.0)) throw ValidationError("design.coefficient_scale must be > 0");
    if (!(d.target_spectral_radius > 0.0 && d.target_spectral_radius < 1.0))
        throw ValidationError("design.target_spectral_radius must be in (0, 1)");
    if (!(d.innovation_sd > 0.0)) throw ValidationError("design.innovation_sd must be > 0");
    if (d.T < 2) throw ValidationError("design.T must be >= 2");
    if (d.burn_in < 0) throw ValidationError("design.burn_in must be >= 0");
}

/**
 * Scales Phi by a scalar c so that the companion spectral radius equals
 * `target` within 1e-8. For p = 1 the radius is linear in c; otherwise c is
 * found by bisection (at most 200 steps).
 */
inline Matrix rescale_to_radius(const Matrix& Phi, double target)
{
    const double r0 = companion_spectral_radius(Phi);
    if (r0 == 0.0) throw std::domain_error("cannot rescale an all-zero coefficient block");
    Matrix scaled = (target / r0) * Phi;
    if (std::abs(companion_spectral_radius(scaled) - target) <= 1e-8) return scaled;

    double lo = 0.0, hi = target / r0;
    while (companion_spectral_radius(hi * Phi) < target) {
        hi *= 2.0;
        if (hi > 1e12) throw std::runtime_error("spectral radius rescaling: no upper bracket");
    }
    for (int it = 0; it < 200; ++it) {
        const double mid = 0.5 * (lo + hi);
        const double r = companion_spectral_radius(mid * Phi);
        if (std::abs(r - target) <= 1e-8) return mid * Phi;
        (r < target ? lo : hi) = mid;
    }
    throw std::runtime_error("spectral radius rescaling did not converge in 200 bisection steps");
}

/**
 * Simulates y_t = sum_l Phi_l y_{t-l} + sum_j B_j x_{t-j} + e_t.
 *
 * Coefficient (i, d) is drawn uniformly in [-scale, scale] at lags
 * 1..true_lag_phi(i, d) and is zero beyond; Phi is then rescaled to the
 * target companion spectral radius. B is drawn the same way without
 * rescaling. x_t is i.i.d. standard normal, e_t is N(0, innovation_sd^2),
 * and the first burn_in draws are discarded. The returned dataset is
 * centered; the truth has zero means.
 */
inline SimResult generate(const SimDesign& design)
{
    validate_design(design);
    const Index k = design.k, m = design.m;
    const int p = design.p, s = design.s;
    std::mt19937_64 rng(design.seed);
    std::uniform_real_distribution<double> unif(-design.coefficient_scale, design.coefficient_scale);
    std::normal_distribution<double> normal(0.0, 1.0);

    SimResult out;
    out.truth = CoefficientSet::zeros(k, m, VarxSpec{p, s});
    for (Index i = 0; i < k; ++i)
        for (Index d = 0; d < k; ++d)
            for (int l = 0; l < design.true_lag_phi(i, d); ++l) out.truth.Phi(i, l * k + d) = unif(rng);
    for (Index i = 0; i < k; ++i)
        for (Index r = 0; r < m; ++r)
            for (int l = 0; l < design.true_lag_b(i, r); ++l) out.truth.B(i, l * m + r) = unif(rng);

    if (out.truth.Phi.isZero(0.0))
        out.warnings.push_back("all-zero Phi support: generated without spectral radius rescaling");
    else
        out.truth.Phi = rescale_to_radius(out.truth.Phi, design.target_spectral_radius);

    const Index total = design.burn_in + design.T;
    const int o = std::max(p, s);
    Matrix y = Matrix::Zero(k, total + o);
    Matrix x(m, total + o);
    for (Index t = 0; t < total + o; ++t)
        for (Index r = 0; r < m; ++r) x(r, t) = normal(rng);
    for (Index t = o; t < total + o; ++t) {
        Vector yt(k);
        for (Index i = 0; i < k; ++i) yt(i) = design.innovation_sd * normal(rng);
        for (int l = 1; l <= p; ++l) yt.noalias() += out.truth.Phi.middleCols((l - 1) * k, k) * y.col(t - l);
        for (int j = 1; j <= s; ++j) yt.noalias() += out.truth.B.middleCols((j - 1) * m, m) * x.col(t - j);
        y.col(t) = yt;
    }

    const Index start = o + design.burn_in;
    std::vector<std::string> yn, xn;
    for (Index i = 0; i < k; ++i) yn.push_back("y" + std::to_string(i + 1));
    for (Index r = 0; r < m; ++r) xn.push_back("x" + std::to_string(r + 1));
    out.data = make_dataset(y.middleCols(start, design.T), yn, x.middleCols(start, design.T), xn);
    return out;
}

/// Design with random true lag matrices: every own-lag entry is active and
/// each cross entry is active with probability `density`; active lags are
/// drawn uniformly from 1..max_true_lag.
inline SimDesign random_sparse_design(Index k, Index m, int p, int s, int max_true_lag, double density,
                                      std::uint64_t seed, Index T)
{
    SimDesign d;
    d.k = k;
    d.m = m;
    d.p = p;
    d.s = s;
    d.T = T;
    d.seed = seed;
    std::mt19937_64 rng(seed ^ 0x9e3779b97f4a7c15ULL);
    std::uniform_int_distribution<int> lag_phi(1, std::min(max_true_lag, p));
    std::uniform_int_distribution<int> lag_b(1, std::max(1, std::min(max_true_lag, s)));
    std::bernoulli_distribution active(density);
    d.true_lag_phi = IntMatrix::Zero(k, k);
    d.true_lag_b = IntMatrix::Zero(k, m);
    for (Index i = 0; i < k; ++i) {
        for (Index j = 0; j < k; ++j)
            if (i == j || active(rng)) d.true_lag_phi(i, j) = lag_phi(rng);
        for (Index r = 0; r < m; ++r)
            if (active(rng)) d.true_lag_b(i, r) = lag_b(rng);
    }
    return d;
}

} // namespace hvarx::sim
