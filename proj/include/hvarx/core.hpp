#pragma once

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <set>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace hvarx {

/// Thrown for malformed inputs: bad tables, inconsistent dimensions, invalid
/// orders. The message always names the offending field.
class ValidationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using IntMatrix = Eigen::MatrixXi;
using Index = Eigen::Index;

/**
 * Aligned endogenous and exogenous series.
 *
 * Rows are series, columns are time points in ascending order. After
 * centering, `endo_means` / `exog_means` hold the row means that were
 * removed. The raw input is kept as given, so slices of it do not pick up
 * rounding from means taken over later observations.
 */
struct VarxDataset {
    Matrix endo;                        // k x T
    Matrix exog;                        // m x T (m may be 0)
    std::vector<std::string> endo_names;
    std::vector<std::string> exog_names;
    Vector endo_means;
    Vector exog_means;
    std::vector<std::string> dates;     // optional labels, empty or size T

    Index k() const { return endo.rows(); }
    Index m() const { return exog.rows(); }
    Index T() const { return endo.cols(); }

    Matrix endo_raw;                    // as given; empty means endo + endo_means
    Matrix exog_raw;

    Matrix raw_endo() const
    {
        if (endo_raw.rows() == k() && endo_raw.cols() == T()) return endo_raw;
        return endo.colwise() + endo_means;
    }
    Matrix raw_exog() const
    {
        if (m() == 0) return Matrix(0, T());
        if (exog_raw.rows() == m() && exog_raw.cols() == T()) return exog_raw;
        return exog.colwise() + exog_means;
    }
};

struct VarxSpec {
    int p = 1;
    int s = 0;

    int obar() const { return std::max(p, s); }
};

/// Y = Phi Z + B X + E in stacked form; N = T - max(p, s) columns.
struct CompactForm {
    Matrix Y;   // k x N
    Matrix Z;   // kp x N
    Matrix X;   // ms x N
    VarxSpec spec;
    Index m = 0;
    Vector endo_means;
    Vector exog_means;

    Index k() const { return spec.p > 0 ? Z.rows() / spec.p : Y.rows(); }   // endogenous series
    Index equations() const { return Y.rows(); }
    Index N() const { return Y.cols(); }
};

/// The single marginal equation i of a compact system.
inline CompactForm marginal(const CompactForm& cf, Index i)
{
    CompactForm out = cf;
    out.Y = cf.Y.row(i);
    return out;
}

/**
 * Estimated coefficients. Phi is k x kp laid out as [Phi_1 ... Phi_p] and
 * B is k x ms laid out as [B_1 ... B_s]. Means are the centering constants
 * of the data the coefficients were fitted on.
 */
struct CoefficientSet {
    Matrix Phi;
    Matrix B;
    VarxSpec spec;
    Vector endo_means;
    Vector exog_means;

    Index k() const { return Phi.cols() / spec.p; }   // endogenous series
    Index m() const { return spec.s == 0 ? Index(0) : B.cols() / spec.s; }
    Index equations() const { return Phi.rows(); }

    /// Coefficient of series d at lag `lag` (1-based) in equation i.
    double phi(Index i, Index d, int lag) const { return Phi(i, (lag - 1) * k() + d); }
    double b(Index i, Index r, int lag) const { return B(i, (lag - 1) * m() + r); }

    /// Elementwise path [Phi_{1,id} ... Phi_{p,id}].
    Vector phi_path(Index i, Index d) const
    {
        Vector v(spec.p);
        for (int l = 0; l < spec.p; ++l) v(l) = Phi(i, l * k() + d);
        return v;
    }
    Vector b_path(Index i, Index r) const
    {
        Vector v(spec.s);
        for (int l = 0; l < spec.s; ++l) v(l) = B(i, l * m() + r);
        return v;
    }

    static CoefficientSet zeros(Index k, Index m, VarxSpec spec)
    {
        CoefficientSet c;
        c.Phi = Matrix::Zero(k, k * spec.p);
        c.B = Matrix::Zero(k, m * spec.s);
        c.spec = spec;
        c.endo_means = Vector::Zero(k);
        c.exog_means = Vector::Zero(m);
        return c;
    }
};

namespace detail {

inline void require_unique(const std::vector<std::string>& names, const std::string& block)
{
    std::set<std::string> seen;
    for (const auto& n : names) {
        if (!seen.insert(n).second)
            throw ValidationError("duplicate series name '" + n + "' in " + block);
    }
}

inline void require_finite(const Matrix& M, const std::vector<std::string>& names,
                           const std::string& block)
{
    for (Index i = 0; i < M.rows(); ++i) {
        for (Index t = 0; t < M.cols(); ++t) {
            if (!std::isfinite(M(i, t))) {
                const std::string name = i < Index(names.size()) ? names[i] : std::to_string(i);
                throw ValidationError("non-finite value in " + block + " series '" + name +
                                      "' at time index " + std::to_string(t));
            }
        }
    }
}

} // namespace detail

/// Subtracts row means in place and accumulates them into the stored means,
/// so repeated centering keeps `raw_endo()` unchanged.
inline void center(VarxDataset& data)
{
    if (data.endo_means.size() != data.k()) data.endo_means = Vector::Zero(data.k());
    if (data.exog_means.size() != data.m()) data.exog_means = Vector::Zero(data.m());
    if (data.T() == 0) return;
    const Vector em = data.endo.rowwise().mean();
    data.endo.colwise() -= em;
    data.endo_means += em;
    if (data.m() > 0) {
        const Vector xm = data.exog.rowwise().mean();
        data.exog.colwise() -= xm;
        data.exog_means += xm;
    }
}

/**
 * Validates raw series blocks and returns a centered dataset.
 *
 * `endo` is k x T and `exog` is m x T (pass a 0 x T or 0 x 0 matrix when
 * there are no exogenous series).
 */
inline VarxDataset make_dataset(Matrix endo, std::vector<std::string> endo_names, Matrix exog,
                                std::vector<std::string> exog_names,
                                std::vector<std::string> dates = {})
{
    if (endo.rows() == 0) throw ValidationError("endo: no endogenous series");
    if (Index(endo_names.size()) != endo.rows())
        throw ValidationError("endo: number of names does not match number of series");
    if (Index(exog_names.size()) != exog.rows())
        throw ValidationError("exog: number of names does not match number of series");
    if (exog.rows() == 0) exog.resize(0, endo.cols());
    if (exog.cols() != endo.cols())
        throw ValidationError("exog: has " + std::to_string(exog.cols()) +
                              " time points but endo has " + std::to_string(endo.cols()));
    if (endo.cols() < 2) throw ValidationError("endo: need at least 2 time points");
    if (!dates.empty() && Index(dates.size()) != endo.cols())
        throw ValidationError("dates: label count does not match number of time points");
    detail::require_finite(endo, endo_names, "endo");
    detail::require_finite(exog, exog_names, "exog");
    detail::require_unique(endo_names, "endo");
    detail::require_unique(exog_names, "exog");

    VarxDataset d;
    d.endo_raw = endo;
    d.exog_raw = exog;
    d.endo = std::move(endo);
    d.exog = std::move(exog);
    d.endo_names = std::move(endo_names);
    d.exog_names = std::move(exog_names);
    d.dates = std::move(dates);
    center(d);
    return d;
}

/// Re-centered copy holding raw columns [begin, begin + count).
inline VarxDataset window(const VarxDataset& data, Index begin, Index count)
{
    if (begin < 0 || count < 0 || begin + count > data.T())
        throw std::out_of_range("window exceeds dataset length");
    VarxDataset w;
    w.endo_raw = data.raw_endo().middleCols(begin, count);
    w.exog_raw = data.raw_exog().middleCols(begin, count);
    w.endo = w.endo_raw;
    w.exog = w.exog_raw;
    w.endo_names = data.endo_names;
    w.exog_names = data.exog_names;
    if (!data.dates.empty())
        w.dates.assign(data.dates.begin() + begin, data.dates.begin() + begin + count);
    center(w);
    return w;
}

inline VarxDataset prefix(const VarxDataset& data, Index count) { return window(data, 0, count); }

inline void validate_spec(const VarxSpec& spec, Index m, Index T)
{
    if (spec.p < 1) throw ValidationError("p: endogenous order must be >= 1");
    if (spec.s < 0) throw ValidationError("s: exogenous order must be >= 0");
    if (m == 0 && spec.s != 0) throw ValidationError("s: must be 0 when there are no exogenous series");
    if (m > 0 && spec.s == 0) throw ValidationError("s: must be >= 1 when exogenous series are present");
    if (spec.obar() > T - 2)
        throw ValidationError("p/s: max(p, s) = " + std::to_string(spec.obar()) +
                              " leaves fewer than 2 effective samples for T = " + std::to_string(T));
}

/**
 * Stacks the lagged regressors. Column n of the output corresponds to time
 * t = obar + n; Z's column holds y_{t-1}, ..., y_{t-p} and X's column holds
 * x_{t-1}, ..., x_{t-s}.
 */
inline CompactForm build_compact(const VarxDataset& data, const VarxSpec& spec)
{
    validate_spec(spec, data.m(), data.T());
    const Index k = data.k(), m = data.m();
    const Index o = spec.obar();
    const Index N = data.T() - o;

    CompactForm cf;
    cf.spec = spec;
    cf.m = m;
    cf.endo_means = data.endo_means;
    cf.exog_means = data.exog_means;
    cf.Y = data.endo.middleCols(o, N);
    cf.Z.resize(k * spec.p, N);
    cf.X.resize(m * spec.s, N);
    for (Index n = 0; n < N; ++n) {
        const Index t = o + n;
        for (int l = 1; l <= spec.p; ++l)
            cf.Z.block((l - 1) * k, n, k, 1) = data.endo.col(t - l);
        for (int j = 1; j <= spec.s; ++j)
            cf.X.block((j - 1) * m, n, m, 1) = data.exog.col(t - j);
    }
    return cf;
}

/// kp x kp companion matrix of [Phi_1 ... Phi_p].
inline Matrix companion_matrix(const Matrix& Phi)
{
    const Index k = Phi.rows();
    if (k == 0 || Phi.cols() % k != 0)
        throw std::invalid_argument("companion_matrix: Phi must be k x kp");
    const Index kp = Phi.cols();
    Matrix C = Matrix::Zero(kp, kp);
    C.topRows(k) = Phi;
    if (kp > k) C.bottomLeftCorner(kp - k, kp - k).setIdentity();
    return C;
}

inline double companion_spectral_radius(const Matrix& Phi)
{
    const Matrix C = companion_matrix(Phi);
    if (C.isZero(0.0)) return 0.0;
    Eigen::EigenSolver<Matrix> es(C, false);
    if (es.info() != Eigen::Success)
        throw std::runtime_error("companion_spectral_radius: eigenvalue computation failed");
    return es.eigenvalues().cwiseAbs().maxCoeff();
}

} // namespace hvarx
