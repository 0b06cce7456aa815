#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <vector>

#include "mps/common.hpp"
#include "mps/multipatch.hpp"
#include "mps/plan.hpp"
#include "mps/spline1d.hpp"
#include "mps/spline2d.hpp"

namespace mps {

/// Derivative plans of a 2D layout: one radial plan shared by every theta
/// grid line, plus a theta plan per ring that has sector interfaces.
struct Plan2D {
    PlanMode mode = PlanMode::ExactGlobalSolve;
    int trunc_span = 0;
    DerivativePlan1D r_plan;
    std::vector<std::optional<DerivativePlan1D>> th_plans;
};

inline Plan2D assemble_plan(const MultipatchDomain2D& dom, PlanMode mode, int trunc_span = 0) {
    Plan2D plan;
    plan.mode = mode;
    plan.trunc_span = trunc_span;
    std::vector<std::vector<double>> rcells;
    for (const auto& ring : dom.rings()) rcells.push_back(ring.r.cell_widths());
    plan.r_plan = DerivativePlan1D::assemble(rcells, dom.r_bc(), mode, trunc_span);
    plan.th_plans.resize(dom.n_rings());
    for (std::size_t k = 0; k < dom.n_rings(); ++k) {
        const Ring& ring = dom.ring(k);
        if (ring.sectors.size() < 2) continue;
        require(dom.th_periodic() || dom.th_bc() == OuterBC::HermiteKnown,
                "theta interfaces need a periodic or Hermite-closed theta direction");
        std::vector<std::vector<double>> tcells;
        for (const auto& s : ring.sectors) tcells.push_back(s.th.cell_widths());
        plan.th_plans[k] = DerivativePlan1D::assemble(
            tcells, dom.th_periodic() ? OuterBC::Periodic : dom.th_bc(), mode, trunc_span);
    }
    return plan;
}

/// Analytic boundary data for the outer edges of the layout. The defaults
/// are homogeneous. Only the members matching the boundary conditions are
/// used (Greville closures read star lines from the field instead).
struct Boundary2D {
    std::function<double(double)> dr_lo = [](double) { return 0.0; };
    std::function<double(double)> dr_hi = [](double) { return 0.0; };
    std::function<double(double)> drdt_lo = [](double) { return 0.0; };
    std::function<double(double)> drdt_hi = [](double) { return 0.0; };
    std::function<double(double)> dt_lo = [](double) { return 0.0; };
    std::function<double(double)> dt_hi = [](double) { return 0.0; };
};

namespace detail {

inline void prepare_derivative_storage(const MultipatchDomain2D& dom, PatchField& f) {
    for (std::size_t p = 0; p < dom.n_patches(); ++p) {
        PatchData& d = f.patches[p];
        const std::size_t cols = patch_th_columns(dom, p);
        const std::size_t nr = dom.patch_r(p).cells();
        d.dr_lo.assign(cols, 0.0);
        d.dr_hi.assign(cols, 0.0);
        d.dt_lo.assign(nr + 1, 0.0);
        d.dt_hi.assign(nr + 1, 0.0);
        d.corners = {0.0, 0.0, 0.0, 0.0};
    }
}

/// Node values along one full radial line at ring-theta-node index t of each
/// ring (index_per_ring[k] < 0 means the ring lacks this line).
inline std::vector<double> radial_line_values(const MultipatchDomain2D& dom,
                                              const PatchField& f,
                                              const std::vector<long>& index_per_ring) {
    std::vector<double> line;
    const std::size_t nrings = dom.n_rings();
    for (std::size_t k = 0; k < nrings; ++k) {
        const std::size_t nr = dom.ring(k).r.cells();
        const std::size_t t = static_cast<std::size_t>(index_per_ring[k]);
        for (std::size_t i = 0; i < nr; ++i) line.push_back(ring_value(dom, f, k, i, t));
    }
    const std::size_t last = nrings - 1;
    line.push_back(ring_value(dom, f, last, dom.ring(last).r.cells(),
                              static_cast<std::size_t>(index_per_ring[last])));
    return line;
}

/// Store an interface derivative into the edge vectors of both rings.
inline void store_interface_dr(const MultipatchDomain2D& dom, PatchField& f, std::size_t iface,
                               std::size_t ring_lo_node, double value) {
    // iface between ring iface and iface+1; ring_lo_node indexes the lower
    // ring's theta table; the upper ring may or may not carry this node
    const double tol = 1e-9 * dom.th_period() / static_cast<double>(dom.ring_th_nodes(0).size());
    for (auto [s, j] : dom.ring_th_copies(iface, ring_lo_node))
        f.patches[dom.flat_id(iface, s)].dr_hi[j] = value;
    long t_up = dom.find_th_node(iface + 1, dom.ring_th_nodes(iface)[ring_lo_node], tol);
    if (t_up >= 0)
        for (auto [s, j] : dom.ring_th_copies(iface + 1, static_cast<std::size_t>(t_up)))
            f.patches[dom.flat_id(iface + 1, s)].dr_lo[j] = value;
}

/// 1D periodic spline of one ring's theta line of values (or any per-node
/// data vector over the ring's theta nodes).
inline SplineCoeffs1D ring_line_spline(const std::vector<double>& data,
                                       const BreakPoints& th_breaks) {
    PeriodicSpline1DBuilder b(th_breaks);
    return b.solve(data);
}

} // namespace detail

/// Reconstruct every edge and corner derivative on a conforming layout
/// (aligned sector grids or T-joints). Radial derivatives come first from
/// the radial plan applied to every theta line; theta derivatives follow
/// from the per-ring theta plans; cross derivatives at sector corners come
/// from the radial plan applied to the theta-derivative field.
inline void reconstruct_conforming(const MultipatchDomain2D& dom, PatchField& f,
                                   const Plan2D& plan, const Boundary2D& bd) {
    require(dom.conformity() == Conformity::Conforming,
            "conforming reconstruction on a non-conforming layout");
    detail::prepare_derivative_storage(dom, f);
    const std::size_t nrings = dom.n_rings();
    const auto& th0 = dom.ring_th_nodes(0);
    const std::size_t nt = th0.size();
    const bool grev = dom.r_bc() == OuterBC::GrevilleExtra;

    // --- radial derivatives along every theta line
    std::vector<long> idx(nrings);
    for (std::size_t t = 0; t < nt; ++t) {
        for (std::size_t k = 0; k < nrings; ++k) idx[k] = static_cast<long>(t);
        std::vector<double> line = detail::radial_line_values(dom, f, idx);
        LineBoundary lb;
        const double th = th0[t];
        if (grev) {
            auto own0 = dom.ring_th_owner(0)[t];
            lb.star_lo = f.patches[dom.flat_id(0, own0.first)].star_lo[own0.second];
            auto ownN = dom.ring_th_owner(nrings - 1)[t];
            lb.star_hi = f.patches[dom.flat_id(nrings - 1, ownN.first)].star_hi[ownN.second];
        } else {
            lb.deriv_lo = bd.dr_lo(th);
            lb.deriv_hi = bd.dr_hi(th);
        }
        std::vector<double> d = plan.r_plan.solve(line, lb);
        for (std::size_t I = 0; I + 1 < nrings; ++I)
            detail::store_interface_dr(dom, f, I, t, d[I]);
        if (!grev) {
            for (auto [s, j] : dom.ring_th_copies(0, t))
                f.patches[dom.flat_id(0, s)].dr_lo[j] = lb.deriv_lo;
            for (auto [s, j] : dom.ring_th_copies(nrings - 1, t))
                f.patches[dom.flat_id(nrings - 1, s)].dr_hi[j] = lb.deriv_hi;
        }
    }

    // --- theta derivatives per ring (sector interfaces and outer bounds)
    // th_solutions[k](i, b): derivative at ring k, r-node i, sector bound b
    std::vector<Matrix> th_solutions(nrings);
    for (std::size_t k = 0; k < nrings; ++k) {
        const Ring& ring = dom.ring(k);
        const std::size_t nr = ring.r.cells();
        const std::size_t ns = ring.sectors.size();
        if (ns < 2) {
            if (!dom.th_periodic()) {
                PatchData& d = f.patches[dom.flat_id(k, 0)];
                for (std::size_t i = 0; i <= nr; ++i) {
                    d.dt_lo[i] = bd.dt_lo(ring.r[i]);
                    d.dt_hi[i] = bd.dt_hi(ring.r[i]);
                }
            }
            continue;
        }
        const DerivativePlan1D& tp = *plan.th_plans[k];
        const std::size_t nbounds = tp.interfaces();
        th_solutions[k] = Matrix(nr + 1, nbounds);
        std::vector<double> line(dom.ring_th_nodes(k).size());
        for (std::size_t i = 0; i <= nr; ++i) {
            for (std::size_t t = 0; t < line.size(); ++t)
                line[t] = ring_value(dom, f, k, i, t);
            LineBoundary lb;
            if (!dom.th_periodic()) {
                lb.deriv_lo = bd.dt_lo(ring.r[i]);
                lb.deriv_hi = bd.dt_hi(ring.r[i]);
            }
            std::vector<double> d = tp.solve(line, lb);
            for (std::size_t b = 0; b < nbounds; ++b) th_solutions[k](i, b) = d[b];
            for (std::size_t s = 0; s < ns; ++s) {
                PatchData& pd = f.patches[dom.flat_id(k, s)];
                if (dom.th_periodic()) {
                    pd.dt_lo[i] = d[s];
                    pd.dt_hi[i] = d[(s + 1) % ns];
                } else {
                    pd.dt_lo[i] = s == 0 ? lb.deriv_lo : d[s - 1];
                    pd.dt_hi[i] = s + 1 == ns ? lb.deriv_hi : d[s];
                }
            }
        }
    }

    // --- cross derivatives at sector corners
    // positions where any patch has a theta edge
    std::set<double> cross_positions;
    for (std::size_t k = 0; k < nrings; ++k) {
        const Ring& ring = dom.ring(k);
        if (ring.sectors.size() < 2 && dom.th_periodic()) continue;
        for (std::size_t s = 0; s < ring.sectors.size(); ++s) {
            cross_positions.insert(ring.sectors[s].th.front());
            cross_positions.insert(ring.sectors[s].th.back());
        }
    }
    if (cross_positions.empty()) {
        f.derivs_ready = true;
        return;
    }

    // per-ring caches for theta-derivative extraction off the plan bounds
    std::vector<std::vector<std::optional<SplineCoeffs1D>>> line_splines(nrings);
    std::vector<std::optional<SplineCoeffs1D>> star_lo_spline(1), star_hi_spline(1);
    for (std::size_t k = 0; k < nrings; ++k)
        line_splines[k].resize(dom.ring(k).r.cells() + 1);

    auto ring_th_breaks = [&](std::size_t k) {
        std::vector<double> pts = dom.ring_th_nodes(k);
        if (dom.th_periodic()) pts.push_back(dom.th_hi());
        return BreakPoints(pts);
    };

    auto dtheta_at = [&](std::size_t k, std::size_t i, double th) -> double {
        // from the ring's theta plan when th is one of its bounds
        const Ring& ring = dom.ring(k);
        if (ring.sectors.size() >= 2) {
            const DerivativePlan1D& tp = *plan.th_plans[k];
            const std::size_t ns = ring.sectors.size();
            const double tol = 1e-12 * dom.th_period();
            for (std::size_t b = 0; b < tp.interfaces(); ++b) {
                double pos = dom.th_periodic()
                                 ? ring.sectors[b].th.front()
                                 : ring.sectors[b + 1].th.front();
                if (std::abs(pos - th) <= tol) return th_solutions[k](i, b);
            }
            if (!dom.th_periodic()) {
                if (std::abs(th - dom.th_lo()) <= tol) return bd.dt_lo(ring.r[i]);
                if (std::abs(th - dom.th_hi()) <= tol) return bd.dt_hi(ring.r[i]);
            }
            (void)ns;
        } else if (!dom.th_periodic()) {
            // single non-periodic sector: theta spline with Hermite ends
            const BreakPoints& tb = ring.sectors[0].th;
            if (!line_splines[k][i]) {
                std::vector<double> data(dom.ring_th_nodes(k).size());
                for (std::size_t t = 0; t < data.size(); ++t)
                    data[t] = ring_value(dom, f, k, i, t);
                Spline1DBuilder b1(tb, SideSpec::hermite(), SideSpec::hermite());
                line_splines[k][i] = b1.solve(data, bd.dt_lo(ring.r[i]), bd.dt_hi(ring.r[i]));
            }
            return line_splines[k][i]->eval_deriv(th);
        }
        // full periodic ring (or off-bound position): periodic line spline
        if (!line_splines[k][i]) {
            std::vector<double> data(dom.ring_th_nodes(k).size());
            for (std::size_t t = 0; t < data.size(); ++t) data[t] = ring_value(dom, f, k, i, t);
            line_splines[k][i] = detail::ring_line_spline(data, ring_th_breaks(k));
        }
        return line_splines[k][i]->eval_deriv(th);
    };

    auto star_dtheta = [&](bool hi, double th) -> double {
        std::size_t k = hi ? nrings - 1 : 0;
        auto& slot = hi ? star_hi_spline[0] : star_lo_spline[0];
        if (!slot) {
            std::vector<double> data(dom.ring_th_nodes(k).size());
            for (std::size_t t = 0; t < data.size(); ++t) {
                auto [s, j] = dom.ring_th_owner(k)[t];
                const PatchData& pd = f.patches[dom.flat_id(k, s)];
                data[t] = hi ? pd.star_hi[j] : pd.star_lo[j];
            }
            require(dom.th_periodic(), "star lines with non-periodic theta are not supported");
            slot = detail::ring_line_spline(data, ring_th_breaks(k));
        }
        return slot->eval_deriv(th);
    };

    for (double th : cross_positions) {
        std::vector<double> g;
        for (std::size_t k = 0; k < nrings; ++k) {
            const std::size_t nr = dom.ring(k).r.cells();
            for (std::size_t i = 0; i < nr; ++i) g.push_back(dtheta_at(k, i, th));
        }
        g.push_back(dtheta_at(nrings - 1, dom.ring(nrings - 1).r.cells(), th));
        LineBoundary lb;
        if (grev) {
            lb.star_lo = star_dtheta(false, th);
            lb.star_hi = star_dtheta(true, th);
        } else {
            lb.deriv_lo = bd.drdt_lo(th);
            lb.deriv_hi = bd.drdt_hi(th);
        }
        std::vector<double> x = plan.r_plan.solve(g, lb);

        const double tol = 1e-12 * dom.th_period();
        for (std::size_t k = 0; k < nrings; ++k) {
            const Ring& ring = dom.ring(k);
            for (std::size_t s = 0; s < ring.sectors.size(); ++s) {
                if (ring.sectors.size() < 2 && dom.th_periodic()) continue;
                PatchData& pd = f.patches[dom.flat_id(k, s)];
                double lo_val = k == 0 ? (grev ? 0.0 : bd.drdt_lo(th)) : x[k - 1];
                double hi_val = k + 1 == nrings ? (grev ? 0.0 : bd.drdt_hi(th)) : x[k];
                if (std::abs(ring.sectors[s].th.front() - th) <= tol) {
                    pd.corners[0] = lo_val;
                    pd.corners[2] = hi_val;
                }
                if (std::abs(ring.sectors[s].th.back() - th) <= tol) {
                    pd.corners[1] = lo_val;
                    pd.corners[3] = hi_val;
                }
            }
        }
    }
    f.derivs_ready = true;
}

/// Staged reconstruction on a non-conforming ring layout: exact solves along
/// the radial lines present in every ring, then 1D splines of the interface
/// derivative fields interpolated at the finer-only nodes, then segment
/// solves where lines end at interfaces whose values are already known,
/// repeated until everything is resolved.
inline void reconstruct_nonconforming(const MultipatchDomain2D& dom, PatchField& f,
                                      const Plan2D& plan, const Boundary2D& bd) {
    if (dom.conformity() == Conformity::Conforming) {
        reconstruct_conforming(dom, f, plan, bd);
        return;
    }
    require(dom.th_periodic(), "non-conforming layouts require a periodic theta direction");
    detail::prepare_derivative_storage(dom, f);
    const std::size_t nrings = dom.n_rings();
    const std::size_t nifc = nrings - 1;
    const bool grev = dom.r_bc() == OuterBC::GrevilleExtra;
    const double tol = 1e-9 * dom.th_period() / static_cast<double>(dom.ring_th_nodes(0).size());

    // interface derivative tables over the union of both sides' theta nodes
    struct IfaceTable {
        std::vector<double> th;               // union node positions
        std::vector<std::optional<double>> d; // derivative where known
        std::vector<long> lo_idx, hi_idx;     // per-ring node index or -1
    };
    std::vector<IfaceTable> tab(nifc);
    for (std::size_t I = 0; I < nifc; ++I) {
        const auto& a = dom.ring_th_nodes(I);
        const auto& b = dom.ring_th_nodes(I + 1);
        const auto& fine = a.size() >= b.size() ? a : b;
        tab[I].th = fine;
        tab[I].d.assign(fine.size(), std::nullopt);
        for (double x : tab[I].th) {
            tab[I].lo_idx.push_back(dom.find_th_node(I, x, tol));
            tab[I].hi_idx.push_back(dom.find_th_node(I + 1, x, tol));
        }
    }

    auto line_boundary = [&](double th) {
        LineBoundary lb;
        if (grev) {
            auto t0 = dom.find_th_node(0, th, tol);
            auto tN = dom.find_th_node(nrings - 1, th, tol);
            if (t0 >= 0) {
                auto own = dom.ring_th_owner(0)[static_cast<std::size_t>(t0)];
                lb.star_lo = f.patches[dom.flat_id(0, own.first)].star_lo[own.second];
            }
            if (tN >= 0) {
                auto own = dom.ring_th_owner(nrings - 1)[static_cast<std::size_t>(tN)];
                lb.star_hi = f.patches[dom.flat_id(nrings - 1, own.first)].star_hi[own.second];
            }
        } else {
            lb.deriv_lo = bd.dr_lo(th);
            lb.deriv_hi = bd.dr_hi(th);
        }
        return lb;
    };

    // stage A: full lines at theta nodes common to every ring
    for (std::size_t t0 = 0; t0 < dom.ring_th_nodes(0).size(); ++t0) {
        const double th = dom.ring_th_nodes(0)[t0];
        std::vector<long> idx(nrings);
        bool common = true;
        for (std::size_t k = 0; k < nrings; ++k) {
            idx[k] = dom.find_th_node(k, th, tol);
            if (idx[k] < 0) common = false;
        }
        if (!common) continue;
        std::vector<double> line = detail::radial_line_values(dom, f, idx);
        std::vector<double> d = plan.r_plan.solve(line, line_boundary(th));
        for (std::size_t I = 0; I < nifc; ++I)
            for (std::size_t q = 0; q < tab[I].th.size(); ++q)
                if (std::abs(tab[I].th[q] - th) <= tol) tab[I].d[q] = d[I];
    }

    // segment plan cache: (first ring, last ring) with the global closures
    // at true domain ends and Hermite-known values elsewhere
    std::map<std::pair<std::size_t, std::size_t>, DerivativePlan1D> segments;
    auto segment_plan = [&](std::size_t k1, std::size_t k2) -> const DerivativePlan1D& {
        auto key = std::make_pair(k1, k2);
        auto it = segments.find(key);
        if (it == segments.end()) {
            std::vector<std::vector<double>> cells;
            for (std::size_t k = k1; k <= k2; ++k) cells.push_back(dom.ring(k).r.cell_widths());
            EndBC lo = (k1 == 0 && grev) ? EndBC::GrevilleExtra : EndBC::HermiteKnown;
            EndBC hi = (k2 + 1 == nrings && grev) ? EndBC::GrevilleExtra : EndBC::HermiteKnown;
            it = segments
                     .emplace(key, DerivativePlan1D::assemble(cells, lo, hi, plan.mode,
                                                              plan.trunc_span))
                     .first;
        }
        return it->second;
    };

    bool progress = true;
    auto unresolved = [&]() {
        std::size_t n = 0;
        for (const auto& T : tab)
            for (const auto& v : T.d)
                if (!v) ++n;
        return n;
    };
    while (unresolved() > 0 && progress) {
        progress = false;

        // interpolation: coarse side complete -> spline of the derivative
        // field on the coarse grid, evaluated at the finer-only nodes
        for (std::size_t I = 0; I < nifc; ++I) {
            const bool lo_coarse = dom.ring_th_nodes(I).size() <= dom.ring_th_nodes(I + 1).size();
            const auto& coarse_idx = lo_coarse ? tab[I].lo_idx : tab[I].hi_idx;
            const std::size_t coarse_ring = lo_coarse ? I : I + 1;
            bool coarse_done = true;
            for (std::size_t q = 0; q < tab[I].th.size(); ++q)
                if (coarse_idx[q] >= 0 && !tab[I].d[q]) coarse_done = false;
            bool has_gap = false;
            for (const auto& v : tab[I].d)
                if (!v) has_gap = true;
            if (!coarse_done || !has_gap) continue;

            std::vector<double> data(dom.ring_th_nodes(coarse_ring).size());
            for (std::size_t q = 0; q < tab[I].th.size(); ++q)
                if (coarse_idx[q] >= 0)
                    data[static_cast<std::size_t>(coarse_idx[q])] = *tab[I].d[q];
            std::vector<double> pts = dom.ring_th_nodes(coarse_ring);
            pts.push_back(dom.th_hi());
            PeriodicSpline1DBuilder b1{BreakPoints(pts)};
            SplineCoeffs1D s = b1.solve(data);
            for (std::size_t q = 0; q < tab[I].th.size(); ++q)
                if (!tab[I].d[q]) {
                    tab[I].d[q] = s.eval(tab[I].th[q]);
                    progress = true;
                }
        }

        // segment solves: lines spanning a maximal run of rings whose end
        // interface values are already known
        for (std::size_t I = 0; I < nifc; ++I) {
            for (std::size_t q = 0; q < tab[I].th.size(); ++q) {
                if (tab[I].d[q]) continue;
                const double th = tab[I].th[q];
                // maximal run of rings containing this line
                std::size_t k1 = I, k2 = I + 1;
                if (tab[I].lo_idx[q] < 0 || tab[I].hi_idx[q] < 0) continue;
                while (k1 > 0 && dom.find_th_node(k1 - 1, th, tol) >= 0) --k1;
                while (k2 + 1 < nrings && dom.find_th_node(k2 + 1, th, tol) >= 0) ++k2;
                // end conditions
                LineBoundary lb = line_boundary(th);
                bool ready = true;
                if (k1 > 0) {
                    bool found = false;
                    for (std::size_t qq = 0; qq < tab[k1 - 1].th.size(); ++qq)
                        if (std::abs(tab[k1 - 1].th[qq] - th) <= tol && tab[k1 - 1].d[qq]) {
                            lb.deriv_lo = *tab[k1 - 1].d[qq];
                            found = true;
                        }
                    ready = ready && found;
                }
                if (k2 + 1 < nrings) {
                    bool found = false;
                    for (std::size_t qq = 0; qq < tab[k2].th.size(); ++qq)
                        if (std::abs(tab[k2].th[qq] - th) <= tol && tab[k2].d[qq]) {
                            lb.deriv_hi = *tab[k2].d[qq];
                            found = true;
                        }
                    ready = ready && found;
                }
                if (!ready) continue;

                std::vector<double> line;
                for (std::size_t k = k1; k <= k2; ++k) {
                    const std::size_t nr = dom.ring(k).r.cells();
                    std::size_t t = static_cast<std::size_t>(dom.find_th_node(k, th, tol));
                    for (std::size_t i = 0; i < nr; ++i)
                        line.push_back(ring_value(dom, f, k, i, t));
                }
                {
                    std::size_t t = static_cast<std::size_t>(dom.find_th_node(k2, th, tol));
                    line.push_back(ring_value(dom, f, k2, dom.ring(k2).r.cells(), t));
                }
                const DerivativePlan1D& sp = segment_plan(k1, k2);
                std::vector<double> d = sp.solve(line, lb);
                for (std::size_t J = k1; J < k2; ++J) {
                    for (std::size_t qq = 0; qq < tab[J].th.size(); ++qq)
                        if (std::abs(tab[J].th[qq] - th) <= tol && !tab[J].d[qq]) {
                            tab[J].d[qq] = d[J - k1];
                            progress = true;
                        }
                }
            }
        }
    }
    if (unresolved() > 0)
        throw InvalidInput(
            "non-conforming layout admits no elimination order for the exact relations; "
            "re-run with the truncated-local derivative mode");

    // write the interface tables into the patch edge vectors
    for (std::size_t I = 0; I < nifc; ++I) {
        for (std::size_t q = 0; q < tab[I].th.size(); ++q) {
            double v = *tab[I].d[q];
            if (tab[I].lo_idx[q] >= 0)
                for (auto [s, j] :
                     dom.ring_th_copies(I, static_cast<std::size_t>(tab[I].lo_idx[q])))
                    f.patches[dom.flat_id(I, s)].dr_hi[j] = v;
            if (tab[I].hi_idx[q] >= 0)
                for (auto [s, j] :
                     dom.ring_th_copies(I + 1, static_cast<std::size_t>(tab[I].hi_idx[q])))
                    f.patches[dom.flat_id(I + 1, s)].dr_lo[j] = v;
        }
    }
    if (!grev) {
        for (std::size_t t = 0; t < dom.ring_th_nodes(0).size(); ++t)
            for (auto [s, j] : dom.ring_th_copies(0, t))
                f.patches[dom.flat_id(0, s)].dr_lo[j] = bd.dr_lo(dom.ring_th_nodes(0)[t]);
        const std::size_t L = nrings - 1;
        for (std::size_t t = 0; t < dom.ring_th_nodes(L).size(); ++t)
            for (auto [s, j] : dom.ring_th_copies(L, t))
                f.patches[dom.flat_id(L, s)].dr_hi[j] = bd.dr_hi(dom.ring_th_nodes(L)[t]);
    }
    f.derivs_ready = true;
}

/// Single entry point: picks the conforming or staged algorithm.
inline void reconstruct_derivatives(const MultipatchDomain2D& dom, PatchField& f,
                                    const Plan2D& plan, const Boundary2D& bd = {}) {
    double mismatch = shared_value_mismatch(dom, f);
    if (mismatch > 1e-10)
        throw InvalidInput("shared interface values disagree between patches");
    if (dom.conformity() == Conformity::Conforming)
        reconstruct_conforming(dom, f, plan, bd);
    else
        reconstruct_nonconforming(dom, f, plan, bd);
}

/// Spec-named wrappers. The conforming wrapper rejects non-conforming input;
/// the T-joint wrapper insists on T-joints; the staged algorithm accepts
/// conforming layouts and degenerates to the two-step method.
inline void conforming_2d_derivs(const MultipatchDomain2D& dom, PatchField& f, const Plan2D& plan,
                                 const Boundary2D& bd = {}) {
    require(dom.conformity() == Conformity::Conforming, "conforming_2d_derivs: layout is not conforming");
    reconstruct_derivatives(dom, f, plan, bd);
}

inline void tjoint_derivs(const MultipatchDomain2D& dom, PatchField& f, const Plan2D& plan,
                          const Boundary2D& bd = {}) {
    require(dom.conformity() == Conformity::Conforming && dom.has_tjoints(),
            "tjoint_derivs: layout has no T-joints");
    reconstruct_derivatives(dom, f, plan, bd);
}

inline void nonconforming_derivs(const MultipatchDomain2D& dom, PatchField& f, const Plan2D& plan,
                                 const Boundary2D& bd = {}) {
    reconstruct_derivatives(dom, f, plan, bd);
}

/// Hermite-closed local spline of one patch from its values plus the
/// reconstructed edge and corner data.
inline Spline2D build_patch_spline(const MultipatchDomain2D& dom, const PatchField& f,
                                   std::size_t p) {
    require(f.derivs_ready, "build_local_splines: derivatives not reconstructed");
    const PatchId id = dom.patch_id(p);
    const BreakPoints& rb = dom.patch_r(p);
    const BreakPoints& tb = dom.patch_th(p);
    const bool full_ring = dom.th_periodic() && dom.ring(id.ring).sectors.size() == 1;
    const PatchData& d = f.patches[p];

    Spline2DBuilder::Dim dim_r = Spline2DBuilder::Dim::hermite_dim();
    const bool grev = dom.r_bc() == OuterBC::GrevilleExtra;
    if (grev && id.ring == 0) dim_r.lo = SideSpec::greville_star();
    if (grev && id.ring + 1 == dom.n_rings()) dim_r.hi = SideSpec::greville_star();
    Spline2DBuilder::Dim dim_t =
        full_ring ? Spline2DBuilder::Dim::periodic_dim() : Spline2DBuilder::Dim::hermite_dim();

    Spline2DBuilder builder(rb, tb, dim_r, dim_t, KnotKind::Open,
                            full_ring ? KnotKind::Periodic : KnotKind::Open);
    EdgeData2D e;
    e.r_lo = dim_r.lo.kind == SideSpec::Kind::GrevilleStar ? d.star_lo : d.dr_lo;
    e.r_hi = dim_r.hi.kind == SideSpec::Kind::GrevilleStar ? d.star_hi : d.dr_hi;
    if (!full_ring) {
        e.t_lo = d.dt_lo;
        e.t_hi = d.dt_hi;
        e.corners = d.corners;
    }
    return builder.solve(d.values, e);
}

inline std::vector<Spline2D> build_local_splines(const MultipatchDomain2D& dom,
                                                 const PatchField& f) {
    std::vector<Spline2D> out;
    out.reserve(dom.n_patches());
    for (std::size_t p = 0; p < dom.n_patches(); ++p) out.push_back(build_patch_spline(dom, f, p));
    return out;
}

/// The single spline on the merged conforming grid that the exact plan
/// reproduces; serves as the reference the paper compares against.
inline Spline2D equivalent_global_spline(const MultipatchDomain2D& dom, const PatchField& f,
                                         const Boundary2D& bd = {}) {
    require(dom.conformity() == Conformity::Conforming,
            "equivalent global spline requires a conforming layout");
    BreakPoints rb = dom.merged_r();
    BreakPoints tb = dom.merged_th();
    const std::size_t tn = tb.cells() + (dom.th_periodic() ? 0 : 1);
    Matrix values(rb.cells() + 1, tn);
    std::size_t row = 0;
    for (std::size_t k = 0; k < dom.n_rings(); ++k) {
        const std::size_t nr = dom.ring(k).r.cells();
        const bool last = k + 1 == dom.n_rings();
        for (std::size_t i = 0; i < nr + (last ? 1u : 0u); ++i, ++row)
            for (std::size_t t = 0; t < tn; ++t) values(row, t) = ring_value(dom, f, k, i, t);
    }

    const bool grev = dom.r_bc() == OuterBC::GrevilleExtra;
    Spline2DBuilder::Dim dim_r = Spline2DBuilder::Dim::hermite_dim();
    if (grev) {
        dim_r.lo = SideSpec::greville_star();
        dim_r.hi = SideSpec::greville_star();
    }
    Spline2DBuilder::Dim dim_t = dom.th_periodic() ? Spline2DBuilder::Dim::periodic_dim()
                                                   : Spline2DBuilder::Dim::hermite_dim();
    Spline2DBuilder builder(rb, tb, dim_r, dim_t, KnotKind::Open,
                            dom.th_periodic() ? KnotKind::Periodic : KnotKind::Open);
    EdgeData2D e;
    e.r_lo.resize(tn);
    e.r_hi.resize(tn);
    for (std::size_t t = 0; t < tn; ++t) {
        if (grev) {
            auto own0 = dom.ring_th_owner(0)[t];
            e.r_lo[t] = f.patches[dom.flat_id(0, own0.first)].star_lo[own0.second];
            auto ownN = dom.ring_th_owner(dom.n_rings() - 1)[t];
            e.r_hi[t] = f.patches[dom.flat_id(dom.n_rings() - 1, ownN.first)].star_hi[ownN.second];
        } else {
            e.r_lo[t] = bd.dr_lo(tb[t]);
            e.r_hi[t] = bd.dr_hi(tb[t]);
        }
    }
    if (!dom.th_periodic()) {
        e.t_lo.resize(rb.cells() + 1);
        e.t_hi.resize(rb.cells() + 1);
        for (std::size_t i = 0; i <= rb.cells(); ++i) {
            e.t_lo[i] = bd.dt_lo(rb[i]);
            e.t_hi[i] = bd.dt_hi(rb[i]);
        }
        e.corners = {bd.drdt_lo(tb.front()), bd.drdt_lo(tb.back()), bd.drdt_hi(tb.front()),
                     bd.drdt_hi(tb.back())};
    }
    return builder.solve(values, e);
}

// ---------------------------------------------------------------------------
// 1D counterparts (radial-only layouts and the 1D test problems)

inline std::vector<double> solve_interface_derivs_1d(const MultipatchDomain1D& dom,
                                                     const DerivativePlan1D& plan,
                                                     std::span<const double> values,
                                                     const LineBoundary& lb = {}) {
    return plan.solve(values, lb);
}

/// Per-patch Hermite splines from global node values and solved interface
/// derivatives (non-periodic direction).
inline std::vector<SplineCoeffs1D> build_local_splines_1d(const MultipatchDomain1D& dom,
                                                          std::span<const double> values,
                                                          std::span<const double> iface_derivs,
                                                          const LineBoundary& lb = {}) {
    require(dom.bc != OuterBC::Periodic, "1d local splines: periodic layout not supported here");
    std::vector<SplineCoeffs1D> out;
    std::size_t base = 0;
    const std::size_t np = dom.patches.size();
    for (std::size_t p = 0; p < np; ++p) {
        const BreakPoints& b = dom.patches[p];
        const std::size_t nc = b.cells();
        std::vector<double> v(values.begin() + static_cast<long>(base),
                              values.begin() + static_cast<long>(base + nc + 1));
        SideSpec lo = SideSpec::hermite(), hi = SideSpec::hermite();
        double lo_data, hi_data;
        if (p == 0 && dom.bc == OuterBC::GrevilleExtra) {
            lo = SideSpec::greville_star();
            lo_data = lb.star_lo;
        } else {
            lo_data = p == 0 ? lb.deriv_lo : iface_derivs[p - 1];
        }
        if (p + 1 == np && dom.bc == OuterBC::GrevilleExtra) {
            hi = SideSpec::greville_star();
            hi_data = lb.star_hi;
        } else {
            hi_data = p + 1 == np ? lb.deriv_hi : iface_derivs[p];
        }
        Spline1DBuilder bld(b, lo, hi);
        out.push_back(bld.solve(v, lo_data, hi_data));
        base += nc;
    }
    return out;
}

inline SplineCoeffs1D equivalent_global_spline_1d(const MultipatchDomain1D& dom,
                                                  std::span<const double> values,
                                                  const LineBoundary& lb = {}) {
    BreakPoints merged = dom.merged();
    if (dom.bc == OuterBC::Periodic) {
        PeriodicSpline1DBuilder b(merged);
        return b.solve(values.first(merged.cells()));
    }
    SideSpec lo = dom.bc == OuterBC::GrevilleExtra ? SideSpec::greville_star() : SideSpec::hermite();
    SideSpec hi = lo;
    Spline1DBuilder b(merged, lo, hi);
    double lo_data = dom.bc == OuterBC::GrevilleExtra ? lb.star_lo : lb.deriv_lo;
    double hi_data = dom.bc == OuterBC::GrevilleExtra ? lb.star_hi : lb.deriv_hi;
    return b.solve(values, lo_data, hi_data);
}

} // namespace mps
