#pragma once

#include "hvarx/core.hpp"

#include <cmath>

namespace hvarx::prox {

/// Block soft-threshold: max(0, 1 - tau/||v||) v. Returns exact zeros when
/// ||v|| <= tau.
template <class Derived>
Vector group_soft_threshold(const Eigen::MatrixBase<Derived>& v, double tau)
{
    const double norm = v.norm();
    if (norm <= tau) return Vector::Zero(v.size());
    return (1.0 - tau / norm) * v;
}

/// In-place variant used on suffix segments.
template <class Derived>
void group_soft_threshold_inplace(Eigen::MatrixBase<Derived>& v, double tau)
{
    const double norm = v.norm();
    if (norm <= tau) v.setZero();
    else v *= (1.0 - tau / norm);
}

/**
 * Proximal map of w -> tau * sum_{l=1}^{q} weight_l ||w[l:q]||_2.
 *
 * The groups are nested suffixes, so composing the individual group
 * shrinkages from the innermost group (l = q) out to the full path (l = 1)
 * gives the exact minimizer. The zero set of the result is always a suffix.
 * `weights` may be empty (all ones) or hold q entries.
 */
template <class Derived>
Vector prox_hier_suffix(const Eigen::MatrixBase<Derived>& v, double tau, const Vector& weights = Vector())
{
    const Index q = v.size();
    Vector w = v;
    if (tau <= 0.0) return w;
    for (Index l = q - 1; l >= 0; --l) {
        const double wt = weights.size() == q ? weights(l) : 1.0;
        auto seg = w.segment(l, q - l);
        group_soft_threshold_inplace(seg, tau * wt);
    }
    return w;
}

/// Elementwise soft-threshold sign(v) max(0, |v| - tau).
template <class Derived>
Vector prox_l1(const Eigen::MatrixBase<Derived>& v, double tau)
{
    Vector w(v.size());
    for (Index i = 0; i < v.size(); ++i) {
        const double a = std::abs(v(i)) - tau;
        w(i) = a > 0.0 ? std::copysign(a, v(i)) : 0.0;
    }
    return w;
}

/// sum_l ||v[l:q]||_2, the per-path hierarchical penalty without lambda.
template <class Derived>
double hier_suffix_norm(const Eigen::MatrixBase<Derived>& v)
{
    double total = 0.0;
    for (Index l = 0; l < v.size(); ++l) total += v.tail(v.size() - l).norm();
    return total;
}

/// Smallest tau at which prox_hier_suffix(v, tau) is identically zero.
/// Found by bisection on the exact prox; the returned value always zeroes v.
inline double hier_zeroing_threshold(const Vector& v)
{
    const double upper = v.norm();
    if (upper == 0.0) return 0.0;
    double lo = upper / double(v.size()), hi = upper;
    if (prox_hier_suffix(v, lo).isZero(0.0)) return lo;
    for (int it = 0; it < 200 && hi - lo > 1e-15 * hi; ++it) {
        const double mid = 0.5 * (lo + hi);
        if (prox_hier_suffix(v, mid).isZero(0.0)) hi = mid;
        else lo = mid;
    }
    return hi;
}

} // namespace hvarx::prox
