#pragma once

#include <array>
#include <cstddef>
#include <optional>
#include <vector>

#include "mps/common.hpp"
#include "mps/spline1d.hpp"

namespace mps {

/// Tensor-product cubic spline, coeffs(k, l) multiplying b_k(r) b_l(t).
struct Spline2D {
    Matrix coeffs;   // (N_r+3) x (N_t+3)
    KnotVector kr;
    KnotVector kt;

    double eval(double r, double t) const { return eval_impl(r, t, false, false); }
    double eval_dr(double r, double t) const { return eval_impl(r, t, true, false); }
    double eval_dt(double r, double t) const { return eval_impl(r, t, false, true); }
    double eval_drdt(double r, double t) const { return eval_impl(r, t, true, true); }

private:
    double eval_impl(double r, double t, bool dr, bool dt) const {
        BasisEval er = dr ? kr.eval_deriv(r) : kr.eval(r);
        BasisEval et = dt ? kt.eval_deriv(t) : kt.eval(t);
        double s = 0.0;
        for (int a = 0; a < 4; ++a) {
            double acc = 0.0;
            for (int b = 0; b < 4; ++b) acc += coeffs(er.cell + a, et.cell + b) * et.v[b];
            s += er.v[a] * acc;
        }
        return s;
    }
};

/// Boundary data for a 2D build. Vectors are indexed by the node grid of the
/// transverse dimension. For a Hermite side they hold the normal derivative
/// on that edge; for a Greville-star side they hold function values on the
/// star line. `corners` are the cross-derivatives, ordered
/// (r_lo,t_lo), (r_lo,t_hi), (r_hi,t_lo), (r_hi,t_hi); unused entries may be
/// left zero (periodic dimensions need no edge or corner data at all).
struct EdgeData2D {
    std::vector<double> r_lo, r_hi;
    std::vector<double> t_lo, t_hi;
    std::array<double, 4> corners{0.0, 0.0, 0.0, 0.0};
};

/// Two-pass tensor-product collocation: 1D solves along t for every r-level
/// data line, then 1D solves along r for every t-coefficient column. The 1D
/// factorizations are built once and shared by all lines.
class Spline2DBuilder {
public:
    struct Dim {
        bool periodic = false;
        SideSpec lo = SideSpec::hermite();
        SideSpec hi = SideSpec::hermite();

        static Dim periodic_dim() { return {true, {}, {}}; }
        static Dim hermite_dim() { return {false, SideSpec::hermite(), SideSpec::hermite()}; }
    };

    Spline2DBuilder(const BreakPoints& br, const BreakPoints& bt, Dim dim_r, Dim dim_t,
                    KnotKind kind_r = KnotKind::Open, KnotKind kind_t = KnotKind::Open)
        : br_(br), bt_(bt), dim_r_(dim_r), dim_t_(dim_t) {
        if (dim_t_.periodic) {
            t_per_.emplace(bt_);
        } else {
            t_builder_.emplace(bt_, dim_t_.lo, dim_t_.hi, kind_t);
        }
        if (dim_r_.periodic) throw InvalidInput("2d build: periodic r dimension not supported");
        r_builder_.emplace(br_, dim_r_.lo, dim_r_.hi, kind_r);
        if (!dim_t_.periodic &&
            (dim_r_.lo.kind == SideSpec::Kind::GrevilleStar ||
             dim_r_.hi.kind == SideSpec::Kind::GrevilleStar))
            throw InvalidInput("2d build: Greville star side combined with a non-periodic "
                               "transverse dimension is not supported");
    }

    const KnotVector& knots_r() const { return r_builder_->knots(); }
    const KnotVector& knots_t() const {
        return dim_t_.periodic ? t_per_->knots() : t_builder_->knots();
    }

    std::size_t t_nodes() const { return bt_.cells() + (dim_t_.periodic ? 0 : 1); }
    std::size_t r_nodes() const { return br_.cells() + 1; }

    /// values: r_nodes x t_nodes.
    Spline2D solve(const Matrix& values, const EdgeData2D& e) const {
        const std::size_t nr = br_.cells();
        const std::size_t nt = bt_.cells();
        const std::size_t tn = t_nodes();
        require(values.rows() == nr + 1 && values.cols() == tn, "2d build: value shape mismatch");
        require(e.r_lo.size() == tn && e.r_hi.size() == tn, "2d build: r edge data shape mismatch");
        if (!dim_t_.periodic)
            require(e.t_lo.size() == nr + 1 && e.t_hi.size() == nr + 1,
                    "2d build: t edge data shape mismatch");

        // pass 1: t-direction solve of every r-level line
        const std::size_t nlines = nr + 3;
        Matrix D(nlines, nt + 3);
        std::vector<double> line(tn);
        auto solve_line = [&](std::size_t out_row, const std::vector<double>& data, double lo,
                              double hi) {
            SplineCoeffs1D s = dim_t_.periodic ? t_per_->solve(data)
                                               : t_builder_->solve(data, lo, hi);
            for (std::size_t l = 0; l < nt + 3; ++l) D(out_row, l) = s.c[l];
        };
        // r-lo extra line (derivative or star values), then nodal lines, then r-hi
        solve_line(0, e.r_lo, e.corners[0], e.corners[1]);
        for (std::size_t i = 0; i <= nr; ++i) {
            for (std::size_t j = 0; j < tn; ++j) line[j] = values(i, j);
            solve_line(i + 1, line, dim_t_.periodic ? 0.0 : e.t_lo[i],
                       dim_t_.periodic ? 0.0 : e.t_hi[i]);
        }
        solve_line(nr + 2, e.r_hi, e.corners[2], e.corners[3]);

        // pass 2: r-direction solve per t-coefficient column
        Spline2D out{Matrix(nr + 3, nt + 3), knots_r(), knots_t()};
        std::vector<double> col(nr + 1);
        for (std::size_t l = 0; l < nt + 3; ++l) {
            for (std::size_t i = 0; i <= nr; ++i) col[i] = D(i + 1, l);
            SplineCoeffs1D s = r_builder_->solve(col, D(0, l), D(nr + 2, l));
            for (std::size_t k = 0; k < nr + 3; ++k) out.coeffs(k, l) = s.c[k];
        }
        return out;
    }

private:
    BreakPoints br_, bt_;
    Dim dim_r_, dim_t_;
    std::optional<Spline1DBuilder> r_builder_;
    std::optional<Spline1DBuilder> t_builder_;
    std::optional<PeriodicSpline1DBuilder> t_per_;
};

/// One-shot 2D interpolation with Hermite or periodic closures per dimension.
inline Spline2D interpolate_2d(const BreakPoints& br, const BreakPoints& bt,
                               const Matrix& values, const EdgeData2D& edges, bool periodic_t) {
    Spline2DBuilder::Dim dr = Spline2DBuilder::Dim::hermite_dim();
    Spline2DBuilder::Dim dt = periodic_t ? Spline2DBuilder::Dim::periodic_dim()
                                         : Spline2DBuilder::Dim::hermite_dim();
    Spline2DBuilder b(br, bt, dr, dt);
    return b.solve(values, edges);
}

} // namespace mps
