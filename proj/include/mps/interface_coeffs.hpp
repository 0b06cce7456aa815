#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "mps/common.hpp"

namespace mps {

/// Values of the four cubic Hermite basis polynomials at t in [0,1].
struct HermiteBasisEval {
    double h0, h1, k0, k1;
};

inline HermiteBasisEval hermite_basis(double t) {
    require(t >= 0.0 && t <= 1.0, "hermite_basis: argument outside [0,1]");
    double u = 1.0 - t;
    return {u * u * (1.0 + 2.0 * t), t * t * (3.0 - 2.0 * t), u * u * t, t * t * (t - 1.0)};
}

/// Coefficients of the C2-matching relation between spline derivatives at
/// three consecutive interpolation points:
///   s'(x_i) = gamma . (f_{i-1}, f_i, f_{i+1}) + alpha s'(x_{i+1}) + beta s'(x_{i-1})
struct ThreePointCoeffs {
    double alpha;
    double beta;
    std::array<double, 3> gamma;   // units 1/length
};

inline ThreePointCoeffs three_point(double dx_left, double dx_right) {
    require(dx_left > 0.0 && dx_right > 0.0, "three_point: cell lengths must be positive");
    const double sum = dx_left + dx_right;
    ThreePointCoeffs tp;
    tp.alpha = -0.5 * dx_left / sum;
    tp.beta = -0.5 * dx_right / sum;
    const double s = 1.5 / sum;
    tp.gamma = {-s * dx_right / dx_left, s * (dx_right / dx_left - dx_left / dx_right),
                s * dx_left / dx_right};
    return tp;
}

enum class Side { Left, Right };

/// Boundary-cell variant of the three-point relation where the derivative
/// beyond the domain is eliminated using one extra interpolation point at
/// x_* inside the boundary cell. The companion coefficient is exactly zero.
/// Weights apply to (f_{i-1}, f_*, f_i, f_{i+1}) for the left variant and
/// to (f_{i-1}, f_i, f_*, f_{i+1}) for the right variant.
struct GrevilleClosureCoeffs {
    Side side;
    double alpha_star = 0.0;   // right-neighbour coefficient (left variant)
    double beta_star = 0.0;    // left-neighbour coefficient (right variant)
    std::array<double, 4> gamma_star{};
};

inline GrevilleClosureCoeffs greville_closure(Side side, const ThreePointCoeffs& tp,
                                              double t_star, double dx) {
    require(t_star > 0.0 && t_star < 1.0, "greville_closure: t_star must lie inside the cell");
    require(dx > 0.0, "greville_closure: cell length must be positive");
    HermiteBasisEval H = hermite_basis(t_star);
    GrevilleClosureCoeffs out;
    out.side = side;
    if (side == Side::Left) {
        const double den = 1.0 + tp.beta * H.k1 / H.k0;
        if (den == 0.0) throw InternalError("greville_closure: degenerate left closure");
        const double w = tp.beta / (dx * H.k0);
        out.alpha_star = tp.alpha / den;
        out.beta_star = 0.0;
        out.gamma_star = {(tp.gamma[0] - w * H.h0) / den, w / den, (tp.gamma[1] - w * H.h1) / den,
                          tp.gamma[2] / den};
    } else {
        const double den = 1.0 + tp.alpha * H.k0 / H.k1;
        if (den == 0.0) throw InternalError("greville_closure: degenerate right closure");
        const double w = tp.alpha / (dx * H.k1);
        out.alpha_star = 0.0;
        out.beta_star = tp.beta / den;
        out.gamma_star = {tp.gamma[0] / den, (tp.gamma[1] - w * H.h0) / den, w / den,
                          (tp.gamma[2] - w * H.h1) / den};
    }
    return out;
}

/// Memoized integer recursion u_0 = 0, u_1 = 1, u_{k+1} = 4 u_k - u_{k-1}.
/// (The closed form (2+sqrt(3))^k - (2-sqrt(3))^k differs by the constant
/// factor 2 sqrt(3); every formula using u is degree-0 homogeneous in it, so
/// the normalization is immaterial and the recursion avoids cancellation.)
inline double u_seq(std::size_t k) {
    constexpr std::size_t k_max = 370;
    if (k > k_max)
        throw Error("u_seq: overflow for k=" + std::to_string(k) + " (max " +
                    std::to_string(k_max) + ")");
    static const std::vector<double> table = [] {
        std::vector<double> u(k_max + 2);
        u[0] = 0.0;
        u[1] = 1.0;
        for (std::size_t i = 2; i < u.size(); ++i) u[i] = 4.0 * u[i - 1] - u[i - 2];
        return u;
    }();
    return table[k];
}

/// One relation of the chain the extension recursions consume:
///   s'(x_p) = w . (f_{p-1}, f_p, f_{p+1}) [+ w_star f_*] + alpha s'(x_{p+1}) + beta s'(x_{p-1})
/// Standard points come from three_point; boundary cells under a Greville
/// closure come from greville_closure (their alpha or beta is exactly 0).
struct PointRelation {
    double alpha = 0.0;
    double beta = 0.0;
    std::array<double, 3> w{};
    double w_star = 0.0;
    int star_side = 0;   // -1: star in the left patch, +1: star in the right patch

    static PointRelation from(const ThreePointCoeffs& tp) {
        return {tp.alpha, tp.beta, tp.gamma, 0.0, 0};
    }
    static PointRelation from(const GrevilleClosureCoeffs& g) {
        PointRelation r;
        if (g.side == Side::Left) {
            r.alpha = g.alpha_star;
            r.beta = 0.0;
            r.w = {g.gamma_star[0], g.gamma_star[2], g.gamma_star[3]};
            r.w_star = g.gamma_star[1];
            r.star_side = -1;
        } else {
            r.alpha = 0.0;
            r.beta = g.beta_star;
            r.w = {g.gamma_star[0], g.gamma_star[1], g.gamma_star[3]};
            r.w_star = g.gamma_star[2];
            r.star_side = +1;
        }
        return r;
    }
};

enum class StencilFlavor { Exact, Truncated, ExplicitUniform };

/// The extended relation at an interface node x_i:
///   s'(x_i) = sum_k omega_k f_{i+k} [+ star terms] + a s'(x_{i+n_right}) + b s'(x_{i-n_left})
/// omega is stored densely over k = -n_left..n_right.
struct InterfaceStencil {
    double a = 0.0;
    double b = 0.0;
    std::vector<double> omega;
    int n_left = 0;
    int n_right = 0;
    double omega_star_left = 0.0;
    double omega_star_right = 0.0;
    StencilFlavor flavor = StencilFlavor::Exact;

    double& w(int k) { return omega[static_cast<std::size_t>(k + n_left)]; }
    double w(int k) const { return omega[static_cast<std::size_t>(k + n_left)]; }

    /// Apply to values laid out over k = -n_left..n_right (f at x_{i+k}).
    double apply(std::span<const double> f, double star_left = 0.0,
                 double star_right = 0.0) const {
        require(f.size() == omega.size(), "stencil apply: value count mismatch");
        double c = 0.0;
        for (std::size_t j = 0; j < omega.size(); ++j) c += omega[j] * f[j];
        return c + omega_star_left * star_left + omega_star_right * star_right;
    }
};

namespace detail {

/// Shared state of the two recursions: the c functional tracked as a dense
/// omega vector (plus star slots) together with the a, b coefficients.
struct ExtensionState {
    std::vector<double> c;       // over offsets -m_cap..n_cap
    double c_star_l = 0.0, c_star_r = 0.0;
    double a = 0.0, b = 0.0;
    int base = 0;                // index of offset 0 in c

    double& at(int off) { return c[static_cast<std::size_t>(base + off)]; }
};

inline void guard_division(double d) {
    // cannot vanish for positive cell lengths; a zero here is a geometry bug
    if (std::abs(d) < 1e-14) throw InternalError("interface recursion: vanishing pivot");
}

} // namespace detail

/// Build the relation of span (n_left, n_right) at the interface node from
/// per-point relations. `right[j]` is the relation at x_{i+j} (j=0 at the
/// interface), `left[j]` the relation at x_{i-1-j}. A Greville-closed chain
/// ends with the corresponding boundary relation, which zeroes a or b.
inline InterfaceStencil extend_relation(std::span<const PointRelation> right,
                                        std::span<const PointRelation> left) {
    const int n = static_cast<int>(right.size());
    const int m = static_cast<int>(left.size()) + 1;
    require(n >= 1, "extend_relation: need at least the interface relation");

    const std::size_t width = static_cast<std::size_t>(m + n + 1);
    detail::ExtensionState cur, prev;
    cur.c.assign(width, 0.0);
    prev.c.assign(width, 0.0);
    cur.base = prev.base = m;

    auto spread = [&](detail::ExtensionState& st, const PointRelation& r, int off, double scale) {
        st.at(off - 1) += scale * r.w[0];
        st.at(off) += scale * r.w[1];
        st.at(off + 1) += scale * r.w[2];
        if (r.star_side < 0) st.c_star_l += scale * r.w_star;
        if (r.star_side > 0) st.c_star_r += scale * r.w_star;
    };

    // forward: spans (1,1) -> (1,n) using relations at x_i .. x_{i+n-1}
    prev.a = 1.0;
    prev.b = 0.0;
    cur.a = right[0].alpha;
    cur.b = right[0].beta;
    spread(cur, right[0], 0, 1.0);
    for (int j = 1; j < n; ++j) {
        const PointRelation& r = right[static_cast<std::size_t>(j)];
        const double q = r.beta * cur.a / prev.a;
        const double D = 1.0 - q;
        detail::guard_division(D);
        detail::ExtensionState next;
        next.c.assign(width, 0.0);
        next.base = m;
        for (std::size_t t = 0; t < width; ++t) next.c[t] = (cur.c[t] - q * prev.c[t]) / D;
        next.c_star_l = (cur.c_star_l - q * prev.c_star_l) / D;
        next.c_star_r = (cur.c_star_r - q * prev.c_star_r) / D;
        spread(next, r, j, cur.a / D);
        next.a = cur.a * r.alpha / D;
        next.b = (cur.b - q * prev.b) / D;
        prev = std::move(cur);
        cur = std::move(next);
    }

    // backward: spans (1,n) -> (m,n) using relations at x_{i-1} .. x_{i-m+1}
    prev.c.assign(width, 0.0);
    prev.c_star_l = prev.c_star_r = 0.0;
    prev.a = 0.0;
    prev.b = 1.0;
    for (int j = 0; j + 1 < m; ++j) {
        const PointRelation& r = left[static_cast<std::size_t>(j)];
        const double q = r.alpha * cur.b / prev.b;
        const double D = 1.0 - q;
        detail::guard_division(D);
        detail::ExtensionState next;
        next.c.assign(width, 0.0);
        next.base = m;
        for (std::size_t t = 0; t < width; ++t) next.c[t] = (cur.c[t] - q * prev.c[t]) / D;
        next.c_star_l = (cur.c_star_l - q * prev.c_star_l) / D;
        next.c_star_r = (cur.c_star_r - q * prev.c_star_r) / D;
        spread(next, r, -(j + 1), cur.b / D);
        next.a = (cur.a - q * prev.a) / D;
        next.b = cur.b * r.beta / D;
        prev = std::move(cur);
        cur = std::move(next);
    }

    InterfaceStencil st;
    st.a = cur.a;
    st.b = cur.b;
    st.omega = std::move(cur.c);
    st.n_left = m;
    st.n_right = n;
    st.omega_star_left = cur.c_star_l;
    st.omega_star_right = cur.c_star_r;
    st.flavor = StencilFlavor::Exact;
    return st;
}

/// Span (1, n) relation from the chain of relations at x_i .. x_{i+n-1}.
inline InterfaceStencil extend_forward(std::span<const PointRelation> relations) {
    return extend_relation(relations, {});
}

/// Extend a span (1, n_right) result to span (m, n_right) with the relations
/// at x_{i-1} .. x_{i-m+1}.
inline InterfaceStencil extend_backward(std::span<const PointRelation> right,
                                        std::span<const PointRelation> left) {
    return extend_relation(right, left);
}

/// Closed-form coefficients for per-side-uniform cells (Appendix-B result).
inline InterfaceStencil explicit_uniform(int m, int n, double dx_left, double dx_right) {
    require(m >= 1 && n >= 1, "explicit_uniform: spans must be at least 1");
    const double a11 = -0.5 * dx_left / (dx_left + dx_right);
    const double b11 = -0.5 * dx_right / (dx_left + dx_right);
    // normalized by u_m u_n to keep everything in range for large spans
    const double qn = 1.0 + (u_seq(n - 1) / u_seq(n)) * a11 + (u_seq(m - 1) / u_seq(m)) * b11;
    auto sgn = [](int k) { return (k % 2 == 0) ? 1.0 : -1.0; };

    InterfaceStencil st;
    st.n_left = m;
    st.n_right = n;
    st.flavor = StencilFlavor::ExplicitUniform;
    st.a = sgn(n - 1) * u_seq(1) * a11 / (u_seq(n) * qn);
    st.b = sgn(m - 1) * u_seq(1) * b11 / (u_seq(m) * qn);
    st.omega.assign(static_cast<std::size_t>(m + n + 1), 0.0);
    const double ar = a11 / dx_right;
    const double bl = b11 / dx_left;
    for (int k = -m; k <= n; ++k) {
        double w;
        if (k == n)
            w = 3.0 * sgn(k) * ar * u_seq(1) / (u_seq(n) * qn);
        else if (k >= 1)
            w = 3.0 * sgn(k) * ar * (u_seq(n - k + 1) - u_seq(n - k - 1)) / (u_seq(n) * qn);
        else if (k == 0)
            w = 3.0 *
                (ar * (u_seq(n) - u_seq(n - 1)) / u_seq(n) -
                 bl * (u_seq(m) - u_seq(m - 1)) / u_seq(m)) /
                qn;
        else if (k > -m)
            w = 3.0 * sgn(k + 1) * bl * (u_seq(m + k + 1) - u_seq(m + k - 1)) / (u_seq(m) * qn);
        else
            w = 3.0 * sgn(k + 1) * bl * u_seq(1) / (u_seq(m) * qn);
        st.w(k) = w;
    }
    return st;
}

/// Growth-rate bound used for picking a truncation span: asymptotically
/// |a_{N,N}| + |b_{N,N}| ~ (2-sqrt(3))^N * 4 (|a11| + |b11|), and
/// |a11| + |b11| = 1/2 for any cell lengths.
inline double truncation_bound(int n) {
    return 2.0 * std::pow(2.0 - std::sqrt(3.0), n);
}

/// Smallest span from the 5,10,15,... ladder whose residual coupling bound
/// lies below the target precision.
inline int choose_truncation_span(double target_precision, int max_available) {
    require(target_precision > 0.0, "truncated stencil: precision must be positive");
    for (int n = 5; n <= 370; n += 5) {
        if (truncation_bound(n) < target_precision) {
            if (n > max_available)
                throw InvalidInput("truncated stencil: requested span " + std::to_string(n) +
                                   " exceeds available cells (" + std::to_string(max_available) +
                                   ")");
            return n;
        }
    }
    throw InvalidInput("truncated stencil: precision below attainable range");
}

/// Exact recursion on the truncated subgrids of m (left) and n (right) cells
/// adjacent to the interface, with the derivative coupling dropped.
inline InterfaceStencil truncated_stencil(std::span<const double> cells_left,
                                          std::span<const double> cells_right) {
    const int m = static_cast<int>(cells_left.size());
    const int n = static_cast<int>(cells_right.size());
    require(m >= 1 && n >= 1, "truncated stencil: need at least one cell per side");
    std::vector<PointRelation> right, left;
    right.reserve(static_cast<std::size_t>(n));
    for (int j = 0; j < n; ++j) {
        double dxl = (j == 0) ? cells_left[static_cast<std::size_t>(m - 1)]
                              : cells_right[static_cast<std::size_t>(j - 1)];
        right.push_back(PointRelation::from(three_point(dxl, cells_right[static_cast<std::size_t>(j)])));
    }
    left.reserve(static_cast<std::size_t>(m - 1));
    for (int j = 0; j + 1 < m; ++j)
        left.push_back(PointRelation::from(
            three_point(cells_left[static_cast<std::size_t>(m - 2 - j)],
                        cells_left[static_cast<std::size_t>(m - 1 - j)])));
    InterfaceStencil st = extend_relation(right, left);
    st.a = 0.0;
    st.b = 0.0;
    st.flavor = StencilFlavor::Truncated;
    return st;
}

inline InterfaceStencil truncated_stencil(int m, int n, double dx_left, double dx_right) {
    std::vector<double> cl(static_cast<std::size_t>(m), dx_left);
    std::vector<double> cr(static_cast<std::size_t>(n), dx_right);
    return truncated_stencil(cl, cr);
}

} // namespace mps
