#pragma once

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

#include "mps/banded.hpp"
#include "mps/common.hpp"
#include "mps/interface_coeffs.hpp"

namespace mps {

/// Outer boundary treatment of a multi-patch direction.
enum class OuterBC { HermiteKnown, GrevilleExtra, Periodic };

/// Non-periodic end closure of one interface chain.
enum class EndBC { HermiteKnown, GrevilleExtra };

enum class PlanMode { ExactGlobalSolve, TruncatedLocal };

/// Boundary inputs for one 1D interface solve. Only the members matching the
/// end closures are read.
struct LineBoundary {
    double deriv_lo = 0.0;     // HermiteKnown ends
    double deriv_hi = 0.0;
    double star_lo = 0.0;      // GrevilleExtra ends: value at the closure point
    double star_hi = 0.0;
};

/// Interface-derivative plan for one 1D multi-patch direction: per-interface
/// stencils plus the small coupling system, assembled and factored once.
///
/// In exact mode the solved derivatives equal those of the equivalent global
/// spline; in truncated mode each interface uses only its local stencil and
/// the coupling matrix disappears.
class DerivativePlan1D {
public:
    /// `patch_cells[p]` holds the cell widths of patch p, left to right,
    /// patches in order.
    static DerivativePlan1D assemble(const std::vector<std::vector<double>>& patch_cells,
                                     EndBC lo, EndBC hi, PlanMode mode,
                                     int truncation_span = 0) {
        DerivativePlan1D plan;
        plan.periodic_ = false;
        plan.lo_ = lo;
        plan.hi_ = hi;
        plan.init(patch_cells, mode, truncation_span);
        return plan;
    }

    static DerivativePlan1D assemble_periodic(const std::vector<std::vector<double>>& patch_cells,
                                              PlanMode mode, int truncation_span = 0) {
        DerivativePlan1D plan;
        plan.periodic_ = true;
        plan.init(patch_cells, mode, truncation_span);
        return plan;
    }

    /// Convenience wrapper keyed by the domain-level boundary condition.
    static DerivativePlan1D assemble(const std::vector<std::vector<double>>& patch_cells,
                                     OuterBC bc, PlanMode mode, int truncation_span = 0) {
        if (bc == OuterBC::Periodic)
            return assemble_periodic(patch_cells, mode, truncation_span);
        EndBC e = bc == OuterBC::GrevilleExtra ? EndBC::GrevilleExtra : EndBC::HermiteKnown;
        return assemble(patch_cells, e, e, mode, truncation_span);
    }

    PlanMode mode() const { return mode_; }
    bool periodic() const { return periodic_; }
    std::size_t interfaces() const { return node_of_interface_.size(); }
    std::size_t total_cells() const { return total_cells_; }
    const std::vector<std::size_t>& interface_nodes() const { return node_of_interface_; }
    const InterfaceStencil& stencil(std::size_t i) const { return stencils_[i]; }

    /// Solve for the spline derivative at every interface from the node
    /// values along the line: total_cells()+1 values, or total_cells() for a
    /// periodic line (no duplicate end node).
    std::vector<double> solve(std::span<const double> values,
                              const LineBoundary& bdata = {}) const {
        const std::size_t expected = periodic_ ? total_cells_ : total_cells_ + 1;
        require(values.size() == expected, "plan solve: wrong number of node values");
        const std::size_t n = stencils_.size();
        if (n == 0) return {};

        std::vector<double> rhs(n);
        for (std::size_t i = 0; i < n; ++i) {
            const InterfaceStencil& st = stencils_[i];
            const long node = static_cast<long>(node_of_interface_[i]);
            double c = 0.0;
            for (int k = -st.n_left; k <= st.n_right; ++k) {
                long idx = node + k;
                if (periodic_)
                    idx = ((idx % static_cast<long>(total_cells_)) +
                           static_cast<long>(total_cells_)) %
                          static_cast<long>(total_cells_);
                c += st.w(k) * values[static_cast<std::size_t>(idx)];
            }
            c += st.omega_star_left * bdata.star_lo + st.omega_star_right * bdata.star_hi;
            rhs[i] = c;
        }
        if (mode_ == PlanMode::TruncatedLocal) return rhs;

        if (!periodic_) {
            if (lo_ == EndBC::HermiteKnown) rhs[0] += stencils_[0].b * bdata.deriv_lo;
            if (hi_ == EndBC::HermiteKnown) rhs[n - 1] += stencils_[n - 1].a * bdata.deriv_hi;
            return solve_tridiagonal(sub_, diag_, sup_, std::move(rhs));
        }
        return solve_cyclic_tridiagonal(sub_, diag_, sup_, cyc_top_, cyc_bot_, std::move(rhs));
    }

private:
    void init(const std::vector<std::vector<double>>& patch_cells, PlanMode mode,
              int truncation_span) {
        mode_ = mode;
        const std::size_t np = patch_cells.size();
        require(np >= 1, "plan: need at least one patch");
        for (const auto& cells : patch_cells)
            require(cells.size() >= 4, "plan: fewer than 4 cells in a patch");
        patch_cells_ = patch_cells;

        node_of_interface_.clear();
        std::size_t nodes = 0;
        for (std::size_t p = 0; p + 1 < np; ++p) {
            nodes += patch_cells[p].size();
            node_of_interface_.push_back(nodes);
        }
        total_cells_ = nodes + patch_cells[np - 1].size();
        if (periodic_) node_of_interface_.insert(node_of_interface_.begin(), 0);
        if (node_of_interface_.empty()) return;

        if (mode == PlanMode::TruncatedLocal) {
            require(truncation_span >= 1, "plan: truncation span must be at least 1");
            for (std::size_t i = 0; i < node_of_interface_.size(); ++i) {
                auto [cl, cr] = side_cells(i);
                require(static_cast<std::size_t>(truncation_span) <= cl.size() &&
                            static_cast<std::size_t>(truncation_span) <= cr.size(),
                        "plan: truncation span exceeds available cells");
                std::span<const double> sl(cl), sr(cr);
                stencils_.push_back(truncated_stencil(
                    sl.subspan(cl.size() - static_cast<std::size_t>(truncation_span)),
                    sr.first(static_cast<std::size_t>(truncation_span))));
            }
            return;
        }

        for (std::size_t i = 0; i < node_of_interface_.size(); ++i) {
            auto [cl, cr] = side_cells(i);
            bool grev_left = !periodic_ && i == 0 && lo_ == EndBC::GrevilleExtra;
            bool grev_right = !periodic_ && i + 1 == node_of_interface_.size() &&
                              hi_ == EndBC::GrevilleExtra;
            stencils_.push_back(exact_stencil(cl, cr, grev_left, grev_right));
        }

        const std::size_t nsys = stencils_.size();
        sub_.assign(nsys, 0.0);
        diag_.assign(nsys, 1.0);
        sup_.assign(nsys, 0.0);
        for (std::size_t i = 0; i < nsys; ++i) {
            // column of interface i+1 gets -a, column i-1 gets -b; periodic
            // wrap-around entries go to the cyclic corners
            if (i + 1 < nsys) sup_[i] = -stencils_[i].a;
            if (i > 0) sub_[i] = -stencils_[i].b;
        }
        if (periodic_) {
            if (nsys == 1) {
                diag_[0] = 1.0 - stencils_[0].a - stencils_[0].b;
            } else {
                cyc_top_ = -stencils_[0].b;
                cyc_bot_ = -stencils_[nsys - 1].a;
            }
        }
    }

    static InterfaceStencil exact_stencil(const std::vector<double>& cells_left,
                                          const std::vector<double>& cells_right,
                                          bool greville_left, bool greville_right) {
        const int m = static_cast<int>(cells_left.size());
        const int n = static_cast<int>(cells_right.size());
        std::vector<PointRelation> right, left;
        right.reserve(static_cast<std::size_t>(n));
        for (int j = 0; j < n; ++j) {
            double dxl = j == 0 ? cells_left[static_cast<std::size_t>(m - 1)]
                                : cells_right[static_cast<std::size_t>(j - 1)];
            double dxr = cells_right[static_cast<std::size_t>(j)];
            auto tp = three_point(dxl, dxr);
            if (greville_right && j == n - 1) {
                // the closure point sits one third of the boundary cell away
                // from the outer end
                right.push_back(
                    PointRelation::from(greville_closure(Side::Right, tp, 2.0 / 3, dxr)));
            } else {
                right.push_back(PointRelation::from(tp));
            }
        }
        left.reserve(static_cast<std::size_t>(m > 0 ? m - 1 : 0));
        for (int j = 0; j + 1 < m; ++j) {
            double dxl = cells_left[static_cast<std::size_t>(m - 2 - j)];
            double dxr = cells_left[static_cast<std::size_t>(m - 1 - j)];
            auto tp = three_point(dxl, dxr);
            if (greville_left && j == m - 2) {
                left.push_back(PointRelation::from(greville_closure(Side::Left, tp, 1.0 / 3, dxl)));
            } else {
                left.push_back(PointRelation::from(tp));
            }
        }
        return extend_relation(right, left);
    }

    /// Cell widths on both sides of interface i (periodic wraps).
    std::pair<std::vector<double>, std::vector<double>> side_cells(std::size_t i) const {
        const std::size_t np = patch_cells_.size();
        if (periodic_) {
            std::size_t pl = (i + np - 1) % np;
            return {patch_cells_[pl], patch_cells_[i]};
        }
        return {patch_cells_[i], patch_cells_[i + 1]};
    }

    bool periodic_ = false;
    EndBC lo_ = EndBC::HermiteKnown;
    EndBC hi_ = EndBC::HermiteKnown;
    PlanMode mode_ = PlanMode::ExactGlobalSolve;
    std::vector<std::vector<double>> patch_cells_;
    std::vector<std::size_t> node_of_interface_;
    std::size_t total_cells_ = 0;
    std::vector<InterfaceStencil> stencils_;
    std::vector<double> sub_, diag_, sup_;
    double cyc_top_ = 0.0, cyc_bot_ = 0.0;
};

} // namespace mps
