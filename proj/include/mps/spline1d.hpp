#pragma once

#include <cmath>
#include <cstddef>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "mps/banded.hpp"
#include "mps/bspline.hpp"
#include "mps/common.hpp"

namespace mps {

/// Coefficients of one cubic spline, s(x) = sum c_k b_k(x).
/// Always N_c + 3 coefficients; periodic splines carry the wrapped copies
/// c_{N_c+j} = c_j so evaluation needs no index gymnastics.
struct SplineCoeffs1D {
    std::vector<double> c;
    KnotVector knots;

    double eval(double x) const {
        BasisEval e = knots.eval(x);
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += c[e.cell + r] * e.v[r];
        return s;
    }
    double eval_deriv(double x) const {
        BasisEval e = knots.eval_deriv(x);
        double s = 0.0;
        for (int r = 0; r < 4; ++r) s += c[e.cell + r] * e.v[r];
        return s;
    }
};

/// The three interpolation closures. Hermite carries the two boundary
/// derivatives; GrevillePoints expects N_c+3 values at the Greville points;
/// Periodic expects N_c values (the node at the far end is the first one).
struct Closure {
    enum class Kind { Hermite, Periodic, GrevillePoints };
    Kind kind;
    double d_left = 0.0;
    double d_right = 0.0;

    static Closure hermite(double dl, double dr) { return {Kind::Hermite, dl, dr}; }
    static Closure periodic() { return {Kind::Periodic, 0.0, 0.0}; }
    static Closure greville() { return {Kind::GrevillePoints, 0.0, 0.0}; }
};

/// How a non-periodic 1D build closes each end: either a prescribed
/// end derivative, or one extra interpolation point inside the end cell
/// (the open-knot Greville point at a third of the cell).
struct SideSpec {
    enum class Kind { HermiteDeriv, GrevilleStar };
    Kind kind = Kind::HermiteDeriv;

    static SideSpec hermite() { return {Kind::HermiteDeriv}; }
    static SideSpec greville_star() { return {Kind::GrevilleStar}; }
};

/// Greville closure point inside the first cell.
inline double star_point_left(const BreakPoints& b) { return b[0] + (b[1] - b[0]) / 3.0; }
/// Greville closure point inside the last cell.
inline double star_point_right(const BreakPoints& b) {
    std::size_t n = b.cells();
    return b[n] - (b[n] - b[n - 1]) / 3.0;
}

/// Collocation solver for one non-periodic grid: rows are function values at
/// the break points plus one closure row per end. The banded matrix is
/// factored once at construction and reused for every right-hand side.
class Spline1DBuilder {
public:
    Spline1DBuilder(const BreakPoints& breaks, SideSpec left, SideSpec right,
                    KnotKind kind = KnotKind::Open)
        : knots_(KnotVector::build(breaks, kind)), left_(left), right_(right),
          lu_(breaks.cells() + 3, 3, 3) {
        require(kind != KnotKind::Periodic, "Spline1DBuilder: use PeriodicSpline1DBuilder");
        const std::size_t nc = breaks.cells();
        std::vector<std::pair<double, int>> rows;   // (x, derivative order)
        rows.reserve(nc + 3);
        if (left.kind == SideSpec::Kind::HermiteDeriv) {
            rows.push_back({breaks[0], 1});
            rows.push_back({breaks[0], 0});
        } else {
            require(kind == KnotKind::Open,
                    "Greville closure points require an open knot sequence");
            rows.push_back({breaks[0], 0});
            rows.push_back({star_point_left(breaks), 0});
        }
        for (std::size_t i = 1; i < nc; ++i) rows.push_back({breaks[i], 0});
        if (right.kind == SideSpec::Kind::HermiteDeriv) {
            rows.push_back({breaks[nc], 0});
            rows.push_back({breaks[nc], 1});
        } else {
            require(kind == KnotKind::Open,
                    "Greville closure points require an open knot sequence");
            rows.push_back({star_point_right(breaks), 0});
            rows.push_back({breaks[nc], 0});
        }
        for (std::size_t r = 0; r < rows.size(); ++r) {
            BasisEval e = rows[r].second == 0 ? knots_.eval(rows[r].first)
                                              : knots_.eval_deriv(rows[r].first);
            for (int k = 0; k < 4; ++k) lu_.add(r, e.cell + k, e.v[k]);
        }
        lu_.factor();
    }

    const KnotVector& knots() const { return knots_; }

    /// values: N_c+1 nodal values; left/right data: the end derivative or the
    /// star-point value, matching the SideSpecs.
    SplineCoeffs1D solve(std::span<const double> values, double left_data,
                         double right_data) const {
        const std::size_t nc = knots_.cells();
        require(values.size() == nc + 1, "spline build: wrong value count");
        for (double v : values) require(finite(v), "spline build: non-finite value");
        require(finite(left_data) && finite(right_data), "spline build: non-finite closure data");
        std::vector<double> rhs;
        rhs.reserve(nc + 3);
        if (left_.kind == SideSpec::Kind::HermiteDeriv) {
            rhs.push_back(left_data);
            rhs.push_back(values[0]);
        } else {
            rhs.push_back(values[0]);
            rhs.push_back(left_data);
        }
        for (std::size_t i = 1; i < nc; ++i) rhs.push_back(values[i]);
        if (right_.kind == SideSpec::Kind::HermiteDeriv) {
            rhs.push_back(values[nc]);
            rhs.push_back(right_data);
        } else {
            rhs.push_back(right_data);
            rhs.push_back(values[nc]);
        }
        lu_.solve(rhs);
        return {std::move(rhs), knots_};
    }

private:
    KnotVector knots_;
    SideSpec left_, right_;
    mutable BandedLU lu_;
};

/// Collocation solver for a periodic grid: N_c unknowns, N_c value rows at
/// the first N_c break points, cyclic tridiagonal structure.
class PeriodicSpline1DBuilder {
public:
    explicit PeriodicSpline1DBuilder(const BreakPoints& breaks)
        : knots_(KnotVector::build(breaks, KnotKind::Periodic)) {
        const std::size_t nc = breaks.cells();
        sub_.assign(nc, 0.0);
        diag_.assign(nc, 0.0);
        sup_.assign(nc, 0.0);
        for (std::size_t i = 0; i < nc; ++i) {
            BasisEval e = knots_.eval(breaks[i]);
            // e.cell == i, basis indices i..i+2 carry the three non-zeros;
            // in the shifted unknowns e_j = c_{j+1} the row is (i-1, i, i+1)
            if (e.cell != i) throw InternalError("periodic collocation: unexpected cell");
            if (i == 0) corner_top_ = e.v[0]; else sub_[i] = e.v[0];
            diag_[i] = e.v[1];
            if (i + 1 == nc) corner_bot_ = e.v[2]; else sup_[i] = e.v[2];
        }
    }

    const KnotVector& knots() const { return knots_; }

    /// values: N_c values at break points x_0..x_{N_c-1}.
    SplineCoeffs1D solve(std::span<const double> values) const {
        const std::size_t nc = knots_.cells();
        require(values.size() == nc,
                "periodic spline build: expected N_c values (do not repeat the end point)");
        for (double v : values) require(finite(v), "spline build: non-finite value");
        std::vector<double> rhs(values.begin(), values.end());
        std::vector<double> e =
            solve_cyclic_tridiagonal(sub_, diag_, sup_, corner_top_, corner_bot_, std::move(rhs));
        std::vector<double> c(nc + 3);
        for (std::size_t j = 0; j < nc; ++j) c[j] = e[(j + nc - 1) % nc];
        for (std::size_t j = 0; j < 3; ++j) c[nc + j] = c[j];
        return {std::move(c), knots_};
    }

private:
    KnotVector knots_;
    std::vector<double> sub_, diag_, sup_;
    double corner_top_ = 0.0, corner_bot_ = 0.0;
};

/// One-shot interpolation with one of the three closures.
inline SplineCoeffs1D interpolate_1d(const BreakPoints& breaks, std::span<const double> values,
                                     const Closure& closure,
                                     std::optional<KnotKind> knot_kind = std::nullopt) {
    switch (closure.kind) {
    case Closure::Kind::Hermite: {
        Spline1DBuilder b(breaks, SideSpec::hermite(), SideSpec::hermite(),
                          knot_kind.value_or(KnotKind::Open));
        return b.solve(values, closure.d_left, closure.d_right);
    }
    case Closure::Kind::Periodic: {
        require(!knot_kind || *knot_kind == KnotKind::Periodic,
                "periodic closure requires periodic knots");
        PeriodicSpline1DBuilder b(breaks);
        return b.solve(values);
    }
    case Closure::Kind::GrevillePoints: {
        require(!knot_kind || *knot_kind == KnotKind::Open,
                "Greville-point closure requires an open knot sequence");
        KnotVector kn = KnotVector::build(breaks, KnotKind::Open);
        const std::size_t n = kn.basis_count();
        require(values.size() == n, "Greville closure: expected N_c+3 values");
        std::vector<double> g = kn.greville();
        BandedLU lu(n, 3, 3);
        for (std::size_t r = 0; r < n; ++r) {
            BasisEval e = kn.eval(g[r]);
            for (int k = 0; k < 4; ++k) lu.add(r, e.cell + k, e.v[k]);
        }
        lu.factor();
        std::vector<double> rhs(values.begin(), values.end());
        for (double v : rhs) require(finite(v), "spline build: non-finite value");
        lu.solve(rhs);
        return {std::move(rhs), kn};
    }
    }
    throw InternalError("interpolate_1d: unreachable");
}

} // namespace mps
