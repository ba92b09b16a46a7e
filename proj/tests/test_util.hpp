#pragma once

#include "hvarx/core.hpp"

#include <random>

namespace testutil {

using hvarx::CompactForm;
using hvarx::Index;
using hvarx::Matrix;
using hvarx::Vector;

inline Matrix random_matrix(Index r, Index c, std::mt19937_64& rng)
{
    std::normal_distribution<double> n(0.0, 1.0);
    Matrix M(r, c);
    for (Index i = 0; i < M.size(); ++i) M(i) = n(rng);
    return M;
}

/// Compact form with i.i.d. normal design and response (no time structure).
inline CompactForm random_compact(Index k, Index m, int p, int s, Index N, std::mt19937_64& rng)
{
    CompactForm cf;
    cf.spec = hvarx::VarxSpec{p, s};
    cf.m = m;
    cf.Z = random_matrix(k * p, N, rng);
    cf.X = random_matrix(m * s, N, rng);
    cf.Y = random_matrix(k, N, rng);
    cf.endo_means = Vector::Zero(k);
    cf.exog_means = Vector::Zero(m);
    return cf;
}

} // namespace testutil
