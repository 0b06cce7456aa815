#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <string>
#include <vector>

#include "mps/common.hpp"

namespace mps {

inline constexpr int kDegree = 3;

/// Strictly increasing cell boundaries. A cubic spline needs at least four
/// cells, so at least five points.
class BreakPoints {
public:
    explicit BreakPoints(std::vector<double> pts) : pts_(std::move(pts)) {
        require(pts_.size() >= 5, "break points: need at least 4 cells (5 points)");
        for (double x : pts_)
            require(finite(x), "break points: non-finite value");
        for (std::size_t i = 0; i + 1 < pts_.size(); ++i)
            require(pts_[i] < pts_[i + 1], "break points: must be strictly increasing");
    }

    /// Uniform grid with n cells on [a, b].
    static BreakPoints uniform(double a, double b, std::size_t n_cells) {
        require(n_cells >= 4, "break points: need at least 4 cells");
        require(a < b, "break points: empty interval");
        std::vector<double> p(n_cells + 1);
        for (std::size_t i = 0; i <= n_cells; ++i)
            p[i] = a + (b - a) * static_cast<double>(i) / static_cast<double>(n_cells);
        p[n_cells] = b;
        return BreakPoints(std::move(p));
    }

    std::size_t cells() const { return pts_.size() - 1; }
    double front() const { return pts_.front(); }
    double back() const { return pts_.back(); }
    double operator[](std::size_t i) const { return pts_[i]; }
    const std::vector<double>& points() const { return pts_; }

    double cell_width(std::size_t i) const { return pts_[i + 1] - pts_[i]; }
    std::vector<double> cell_widths() const {
        std::vector<double> w(cells());
        for (std::size_t i = 0; i < w.size(); ++i) w[i] = cell_width(i);
        return w;
    }

    bool is_uniform(double rel_tol = 1e-12) const {
        double h = (back() - front()) / static_cast<double>(cells());
        for (std::size_t i = 0; i < cells(); ++i)
            if (std::abs(cell_width(i) - h) > rel_tol * h) return false;
        return true;
    }

private:
    std::vector<double> pts_;
};

enum class KnotKind { UniformExtended, Open, Periodic };

/// Cell index plus the four non-zero cubic basis (or basis-derivative)
/// values at a point; the values belong to basis functions cell..cell+3.
struct BasisEval {
    std::size_t cell;
    std::array<double, 4> v;
};

/// Knot sequence of N_c + 7 points built from the break points, in one of the
/// three standard constructions (uniformly extended, open, periodic wrap).
class KnotVector {
public:
    static KnotVector build(const BreakPoints& breaks, KnotKind kind) {
        const std::size_t nc = breaks.cells();
        std::vector<double> k(nc + 7);
        for (std::size_t i = 0; i <= nc; ++i) k[i + 3] = breaks[i];
        switch (kind) {
        case KnotKind::UniformExtended: {
            double h = (breaks.back() - breaks.front()) / static_cast<double>(nc);
            for (int j = 1; j <= 3; ++j) {
                k[3 - j] = breaks.front() - j * h;
                k[nc + 3 + j] = breaks.back() + j * h;
            }
            break;
        }
        case KnotKind::Open:
            for (int j = 1; j <= 3; ++j) {
                k[3 - j] = breaks.front();
                k[nc + 3 + j] = breaks.back();
            }
            break;
        case KnotKind::Periodic: {
            double period = breaks.back() - breaks.front();
            for (int j = 1; j <= 3; ++j) {
                k[3 - j] = breaks[nc - j] - period;
                k[nc + 3 + j] = breaks[j] + period;
            }
            break;
        }
        }
        return KnotVector(std::move(k), kind, nc);
    }

    KnotKind kind() const { return kind_; }
    std::size_t cells() const { return nc_; }
    std::size_t basis_count() const { return nc_ + 3; }
    double domain_min() const { return k_[3]; }
    double domain_max() const { return k_[nc_ + 3]; }
    double period() const { return domain_max() - domain_min(); }
    const std::vector<double>& knots() const { return k_; }

    bool periodic() const { return kind_ == KnotKind::Periodic; }

    /// Map x into [min, max) by exact period subtraction.
    double wrap(double x) const {
        const double p = period();
        double y = x - p * std::floor((x - domain_min()) / p);
        if (y >= domain_max()) y -= p;   // floor rounding at the seam
        if (y < domain_min()) y += p;
        return y;
    }

    BasisEval eval(double x) const { return eval_impl(x, false); }
    BasisEval eval_deriv(double x) const { return eval_impl(x, true); }

    /// Greville abscissae (knot averages), N_c + 3 of them.
    std::vector<double> greville() const {
        require(kind_ != KnotKind::Periodic, "greville points: periodic knots have no closure points");
        std::vector<double> g(basis_count());
        for (std::size_t i = 0; i < g.size(); ++i)
            g[i] = (k_[i + 1] + k_[i + 2] + k_[i + 3]) / 3.0;
        return g;
    }

private:
    KnotVector(std::vector<double> k, KnotKind kind, std::size_t nc)
        : k_(std::move(k)), kind_(kind), nc_(nc) {}

    std::size_t find_cell(double x) const {
        // binary search over the break-point region k_[3..nc+3]
        auto lo = k_.begin() + 3;
        auto hi = k_.begin() + static_cast<long>(nc_) + 4;
        auto it = std::upper_bound(lo, hi, x);
        long c = (it - lo) - 1;
        c = std::clamp(c, 0L, static_cast<long>(nc_) - 1);
        return static_cast<std::size_t>(c);
    }

    BasisEval eval_impl(double x, bool deriv) const {
        if (periodic()) {
            x = wrap(x);
        } else {
            const double span = domain_max() - domain_min();
            const double eps = 1e-12 * span;
            if (x < domain_min() - eps || x > domain_max() + eps)
                throw DomainError("spline evaluation outside domain: x=" + std::to_string(x));
            x = std::clamp(x, domain_min(), domain_max());
        }
        const std::size_t cell = find_cell(x);
        const std::size_t j = cell + 3;   // k_[j] <= x <= k_[j+1]

        std::array<double, 4> N{1.0, 0.0, 0.0, 0.0};
        std::array<double, 4> left{}, right{};
        const int kmax = deriv ? 2 : 3;
        for (int k = 1; k <= kmax; ++k) {
            left[k] = x - k_[j + 1 - k];
            right[k] = k_[j + k] - x;
            double saved = 0.0;
            for (int r = 0; r < k; ++r) {
                double tmp = N[r] / (right[r + 1] + left[k - r]);
                N[r] = saved + right[r + 1] * tmp;
                saved = left[k - r] * tmp;
            }
            N[k] = saved;
        }
        if (!deriv) return {cell, N};

        // first derivative from the quadratic basis values N[0..2]
        std::array<double, 4> d{};
        auto span_inv = [&](std::size_t a, std::size_t b) {
            double dx = k_[b] - k_[a];
            return dx > 0.0 ? 1.0 / dx : 0.0;
        };
        std::array<double, 3> q;   // quadratic terms N_{j-2+r,2} / (k_{j+2+r-1+...})
        for (int r = 0; r < 3; ++r)
            q[r] = N[r] * span_inv(j - 2 + r, j + 1 + r);
        d[0] = 3.0 * (-q[0]);
        d[1] = 3.0 * (q[0] - q[1]);
        d[2] = 3.0 * (q[1] - q[2]);
        d[3] = 3.0 * q[2];
        return {cell, d};
    }

    std::vector<double> k_;
    KnotKind kind_;
    std::size_t nc_;
};

} // namespace mps
