#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "mps/common.hpp"
#include "mps/plan.hpp"
#include "mps/spline1d.hpp"

namespace mps {

/// 1D multi-patch direction: contiguous patches covering one interval.
struct MultipatchDomain1D {
    std::vector<BreakPoints> patches;
    OuterBC bc = OuterBC::HermiteKnown;

    MultipatchDomain1D(std::vector<BreakPoints> p, OuterBC bc_) : patches(std::move(p)), bc(bc_) {
        require(!patches.empty(), "1d domain: no patches");
        for (std::size_t k = 0; k + 1 < patches.size(); ++k) {
            double gap = std::abs(patches[k].back() - patches[k + 1].front());
            require(gap <= 1e-12 * span(), "1d domain: patches are not contiguous");
        }
    }

    double span() const { return patches.back().back() - patches.front().front(); }

    std::vector<std::vector<double>> patch_cells() const {
        std::vector<std::vector<double>> c;
        c.reserve(patches.size());
        for (const auto& p : patches) c.push_back(p.cell_widths());
        return c;
    }

    /// Union grid of all break points; shared interface nodes appear once.
    BreakPoints merged() const {
        std::vector<double> pts;
        pts.push_back(patches.front().front());
        for (const auto& p : patches)
            for (std::size_t i = 1; i <= p.cells(); ++i) pts.push_back(p[i]);
        return BreakPoints(std::move(pts));
    }
};

/// One angular sector of a ring. Full rings have a single sector spanning
/// the whole angular extent.
struct Sector {
    BreakPoints th;
};

/// One radial band, possibly split into sectors (T-joints arise when the
/// sector layout differs between adjacent rings).
struct Ring {
    BreakPoints r;
    std::vector<Sector> sectors;
};

struct PatchId {
    std::size_t ring = 0;
    std::size_t sector = 0;
};

enum class Conformity { Conforming, NonConformingResolvable };

/// Concentric-ring multi-patch layout on the logical rectangle
/// [r_lo, r_hi] x [th_lo, th_hi]: rings stacked in r, each ring divided into
/// sectors in theta. This covers the geometries studied here: 1D radial
/// splits, T-joint sector layouts, and per-ring theta refinement.
class MultipatchDomain2D {
public:
    MultipatchDomain2D(std::vector<Ring> rings, bool th_periodic, OuterBC r_bc,
                       OuterBC th_bc = OuterBC::Periodic)
        : rings_(std::move(rings)), th_periodic_(th_periodic), r_bc_(r_bc), th_bc_(th_bc) {
        require(!rings_.empty(), "2d domain: no rings");
        require(r_bc_ != OuterBC::Periodic, "2d domain: r direction cannot be periodic");
        if (th_periodic_) th_bc_ = OuterBC::Periodic;
        else require(th_bc_ != OuterBC::Periodic, "2d domain: theta marked non-periodic");

        th_lo_ = rings_.front().sectors.front().th.front();
        th_hi_ = rings_.front().sectors.back().th.back();
        const double rspan = rings_.back().r.back() - rings_.front().r.front();

        for (std::size_t k = 0; k < rings_.size(); ++k) {
            const Ring& ring = rings_[k];
            require(!ring.sectors.empty(), "2d domain: ring without sectors");
            if (k + 1 < rings_.size())
                require(std::abs(ring.r.back() - rings_[k + 1].r.front()) <= 1e-12 * rspan,
                        "2d domain: rings are not contiguous in r");
            require(std::abs(ring.sectors.front().th.front() - th_lo_) <= 1e-12 &&
                        std::abs(ring.sectors.back().th.back() - th_hi_) <= 1e-12,
                    "2d domain: ring angular extent mismatch");
            for (std::size_t s = 0; s + 1 < ring.sectors.size(); ++s)
                require(std::abs(ring.sectors[s].th.back() - ring.sectors[s + 1].th.front()) <=
                            1e-12,
                        "2d domain: sectors are not contiguous");
        }

        // flat patch ids, ring theta-node tables
        for (std::size_t k = 0; k < rings_.size(); ++k) {
            flat_.emplace_back();
            for (std::size_t s = 0; s < rings_[k].sectors.size(); ++s) {
                flat_[k].push_back(patch_ids_.size());
                patch_ids_.push_back({k, s});
            }
            build_theta_table(k);
        }
        classify();
    }

    std::size_t n_rings() const { return rings_.size(); }
    std::size_t n_patches() const { return patch_ids_.size(); }
    const Ring& ring(std::size_t k) const { return rings_[k]; }
    const std::vector<Ring>& rings() const { return rings_; }
    PatchId patch_id(std::size_t flat) const { return patch_ids_[flat]; }
    std::size_t flat_id(std::size_t ring_idx, std::size_t sector) const {
        return flat_[ring_idx][sector];
    }
    const BreakPoints& patch_r(std::size_t flat) const { return rings_[patch_ids_[flat].ring].r; }
    const BreakPoints& patch_th(std::size_t flat) const {
        const PatchId id = patch_ids_[flat];
        return rings_[id.ring].sectors[id.sector].th;
    }

    bool th_periodic() const { return th_periodic_; }
    double th_lo() const { return th_lo_; }
    double th_hi() const { return th_hi_; }
    double th_period() const { return th_hi_ - th_lo_; }
    OuterBC r_bc() const { return r_bc_; }
    OuterBC th_bc() const { return th_bc_; }
    Conformity conformity() const { return conformity_; }
    bool has_tjoints() const { return has_tjoints_; }
    bool has_pole() const { return rings_.front().r.front() == 0.0; }

    double r_lo() const { return rings_.front().r.front(); }
    double r_hi() const { return rings_.back().r.back(); }

    /// Inner interface radii, ordered.
    std::vector<double> interface_radii() const {
        std::vector<double> out;
        for (std::size_t k = 0; k + 1 < rings_.size(); ++k) out.push_back(rings_[k].r.back());
        return out;
    }

    /// Whether a sector patch's theta edge lies on an internal interface
    /// (as opposed to the non-periodic global boundary).
    bool th_edge_internal(std::size_t ring_idx, std::size_t sector, bool upper) const {
        const std::size_t ns = rings_[ring_idx].sectors.size();
        if (th_periodic_) return ns > 1;
        return upper ? sector + 1 < ns : sector > 0;
    }

    /// Theta nodes of one ring (union over its sectors; for a periodic
    /// direction the duplicate seam node is dropped).
    const std::vector<double>& ring_th_nodes(std::size_t k) const { return th_nodes_[k]; }
    /// Owner (sector, local column) of each ring theta node.
    const std::vector<std::pair<std::size_t, std::size_t>>& ring_th_owner(std::size_t k) const {
        return th_owner_[k];
    }

    /// All (sector, local column) slots that hold a copy of ring node t.
    std::vector<std::pair<std::size_t, std::size_t>> ring_th_copies(std::size_t k,
                                                                    std::size_t t) const {
        std::vector<std::pair<std::size_t, std::size_t>> out;
        const auto& starts = th_starts_[k];
        const Ring& ring = rings_[k];
        for (std::size_t s = 0; s < ring.sectors.size(); ++s) {
            const std::size_t n = ring.sectors[s].th.cells();
            const std::size_t lo = starts[s];
            if (t >= lo && t <= lo + n) out.push_back({s, t - lo});
        }
        if (th_periodic_ && t == 0 && ring.sectors.size() > 1) {
            const std::size_t last = ring.sectors.size() - 1;
            out.push_back({last, ring.sectors[last].th.cells()});
        }
        return out;
    }

    /// Index of a theta position in a ring's node table, or -1.
    long find_th_node(std::size_t k, double th, double tol) const {
        const auto& nodes = th_nodes_[k];
        auto it = std::lower_bound(nodes.begin(), nodes.end(), th - tol);
        if (it != nodes.end() && std::abs(*it - th) <= tol)
            return static_cast<long>(it - nodes.begin());
        return -1;
    }

    /// Merged radial grid over all rings.
    BreakPoints merged_r() const {
        std::vector<double> pts;
        pts.push_back(rings_.front().r.front());
        for (const auto& ring : rings_)
            for (std::size_t i = 1; i <= ring.r.cells(); ++i) pts.push_back(ring.r[i]);
        return BreakPoints(std::move(pts));
    }

    /// Merged theta grid (requires a conforming layout).
    BreakPoints merged_th() const {
        require(conformity_ == Conformity::Conforming,
                "merged theta grid requires a conforming layout");
        std::vector<double> pts = th_nodes_[0];
        if (th_periodic_) pts.push_back(th_hi_);
        return BreakPoints(std::move(pts));
    }

    /// (ring, logical coords) for a logical point; theta is wrapped into the
    /// periodic extent. Points exactly on an interface radius belong to the
    /// outer ring; points on a sector bound belong to the next sector.
    struct Located {
        std::size_t flat = 0;
        double r = 0.0;
        double th = 0.0;
    };

    Located locate_logical(double r, double th, bool clamp_r = false) const {
        const double eps = 1e-12 * (r_hi() - r_lo() > 0 ? r_hi() - r_lo() : 1.0);
        if (r < r_lo() - eps || r > r_hi() + eps) {
            if (!clamp_r)
                throw DomainError("point outside radial extent: r=" + std::to_string(r));
        }
        r = std::clamp(r, r_lo(), r_hi());
        if (th_periodic_) {
            const double p = th_period();
            th = th - p * std::floor((th - th_lo_) / p);
            if (th >= th_hi_) th -= p;
            if (th < th_lo_) th += p;
        } else {
            require(th >= th_lo_ - 1e-12 && th <= th_hi_ + 1e-12,
                    "point outside angular extent");
            th = std::clamp(th, th_lo_, th_hi_);
        }
        std::size_t k = 0;
        while (k + 1 < rings_.size() && r >= rings_[k].r.back()) ++k;
        const Ring& ring = rings_[k];
        std::size_t s = 0;
        while (s + 1 < ring.sectors.size() && th >= ring.sectors[s].th.back()) ++s;
        return {flat_[k][s], r, th};
    }

private:
    void build_theta_table(std::size_t k) {
        const Ring& ring = rings_[k];
        std::vector<double> nodes;
        std::vector<std::pair<std::size_t, std::size_t>> owner;
        std::vector<std::size_t> starts;
        std::size_t base = 0;
        for (std::size_t s = 0; s < ring.sectors.size(); ++s) {
            starts.push_back(base);
            const BreakPoints& th = ring.sectors[s].th;
            for (std::size_t j = 0; j < th.cells(); ++j) {
                nodes.push_back(th[j]);
                // a sector-bound node is owned by the lower sector's top edge
                if (j == 0 && s > 0)
                    owner.push_back({s - 1, ring.sectors[s - 1].th.cells()});
                else
                    owner.push_back({s, j});
            }
            base += th.cells();
        }
        if (!th_periodic_) {
            const std::size_t last = ring.sectors.size() - 1;
            nodes.push_back(ring.sectors[last].th.back());
            owner.push_back({last, ring.sectors[last].th.cells()});
        } else if (ring.sectors.size() > 1) {
            // the seam node (th_lo == th_hi) is owned by the last sector's
            // upper edge; it is node 0 of the table
            const std::size_t last = ring.sectors.size() - 1;
            owner[0] = {last, ring.sectors[last].th.cells()};
        }
        th_nodes_.push_back(std::move(nodes));
        th_owner_.push_back(std::move(owner));
        th_starts_.push_back(std::move(starts));
    }

    void classify() {
        conformity_ = Conformity::Conforming;
        has_tjoints_ = false;
        const double tol = 1e-9 * th_period() / static_cast<double>(th_nodes_[0].size());
        bool all_equal = true;
        for (std::size_t k = 1; k < rings_.size() && all_equal; ++k) {
            if (th_nodes_[k].size() != th_nodes_[0].size()) {
                all_equal = false;
                break;
            }
            for (std::size_t t = 0; t < th_nodes_[k].size(); ++t)
                if (std::abs(th_nodes_[k][t] - th_nodes_[0][t]) > tol) {
                    all_equal = false;
                    break;
                }
        }
        if (all_equal) {
            for (std::size_t k = 1; k < rings_.size(); ++k)
                if (rings_[k].sectors.size() != rings_[0].sectors.size()) has_tjoints_ = true;
            if (!has_tjoints_ && rings_.size() > 1) {
                for (std::size_t k = 1; k < rings_.size(); ++k)
                    for (std::size_t s = 0; s < rings_[k].sectors.size(); ++s)
                        if (std::abs(rings_[k].sectors[s].th.front() -
                                     rings_[0].sectors[s].th.front()) > tol)
                            has_tjoints_ = true;
            }
            conformity_ = Conformity::Conforming;
            return;
        }
        // non-conforming: only ring-per-band layouts with nested theta grids
        for (const auto& ring : rings_)
            require(ring.sectors.size() == 1,
                    "non-conforming layouts with sector splits are not supported; "
                    "use the truncated-local derivative mode instead");
        for (std::size_t k = 0; k + 1 < rings_.size(); ++k) {
            const auto& a = th_nodes_[k];
            const auto& b = th_nodes_[k + 1];
            const auto& small = a.size() <= b.size() ? a : b;
            const auto& big = a.size() <= b.size() ? b : a;
            for (double x : small) {
                bool found = false;
                for (double y : big)
                    if (std::abs(x - y) <= tol) {
                        found = true;
                        break;
                    }
                require(found,
                        "non-conforming interface without grid inclusion is not supported; "
                        "use the truncated-local derivative mode instead");
            }
        }
        conformity_ = Conformity::NonConformingResolvable;
    }

    std::vector<Ring> rings_;
    bool th_periodic_;
    OuterBC r_bc_, th_bc_;
    double th_lo_ = 0.0, th_hi_ = 0.0;
    Conformity conformity_ = Conformity::Conforming;
    bool has_tjoints_ = false;
    std::vector<PatchId> patch_ids_;
    std::vector<std::vector<std::size_t>> flat_;
    std::vector<std::vector<double>> th_nodes_;
    std::vector<std::vector<std::pair<std::size_t, std::size_t>>> th_owner_;
    std::vector<std::vector<std::size_t>> th_starts_;
};

/// Per-patch node values plus the reconstructed edge and corner derivatives.
struct PatchData {
    Matrix values;                        // (n_r+1) x theta columns
    std::vector<double> dr_lo, dr_hi;     // d/dr on the radial edges, per theta column
    std::vector<double> dt_lo, dt_hi;     // d/dtheta on the angular edges, per r node
    std::array<double, 4> corners{};      // d2/drdth at (lo,lo),(lo,hi),(hi,lo),(hi,hi)
    std::vector<double> star_lo, star_hi; // Greville star lines, per theta column
};

/// State of the advected field on every patch.
struct PatchField {
    std::vector<PatchData> patches;
    double time = 0.0;
    bool derivs_ready = false;
};

/// Number of theta value columns a patch stores: sectors store both edges,
/// full periodic rings drop the duplicate seam column.
inline std::size_t patch_th_columns(const MultipatchDomain2D& dom, std::size_t flat) {
    const BreakPoints& th = dom.patch_th(flat);
    const bool full_ring =
        dom.th_periodic() && dom.ring(dom.patch_id(flat).ring).sectors.size() == 1;
    return th.cells() + (full_ring ? 0 : 1);
}

/// Sample a logical-space function onto every patch (including Greville star
/// lines on the outer rings when the radial closure needs them).
inline PatchField make_field(const MultipatchDomain2D& dom,
                             const std::function<double(double, double)>& f) {
    PatchField field;
    field.patches.resize(dom.n_patches());
    for (std::size_t p = 0; p < dom.n_patches(); ++p) {
        const BreakPoints& r = dom.patch_r(p);
        const BreakPoints& th = dom.patch_th(p);
        const std::size_t cols = patch_th_columns(dom, p);
        PatchData& d = field.patches[p];
        d.values = Matrix(r.cells() + 1, cols);
        for (std::size_t i = 0; i <= r.cells(); ++i)
            for (std::size_t j = 0; j < cols; ++j) d.values(i, j) = f(r[i], th[j]);
        if (dom.r_bc() == OuterBC::GrevilleExtra) {
            const PatchId id = dom.patch_id(p);
            if (id.ring == 0) {
                d.star_lo.resize(cols);
                for (std::size_t j = 0; j < cols; ++j) d.star_lo[j] = f(star_point_left(r), th[j]);
            }
            if (id.ring + 1 == dom.n_rings()) {
                d.star_hi.resize(cols);
                for (std::size_t j = 0; j < cols; ++j)
                    d.star_hi[j] = f(star_point_right(r), th[j]);
            }
        }
    }
    return field;
}

/// Value at (ring, r node i, ring theta node t), read from the owner patch.
inline double ring_value(const MultipatchDomain2D& dom, const PatchField& f, std::size_t ring,
                         std::size_t i, std::size_t t) {
    auto [s, j] = dom.ring_th_owner(ring)[t];
    return f.patches[dom.flat_id(ring, s)].values(i, j);
}

inline void set_ring_value(const MultipatchDomain2D& dom, PatchField& f, std::size_t ring,
                           std::size_t i, std::size_t t, double v) {
    for (auto [s, j] : dom.ring_th_copies(ring, t))
        f.patches[dom.flat_id(ring, s)].values(i, j) = v;
}

/// Copy owner values onto every duplicate (sector seams, ring interfaces).
/// The lower patch owns a shared node.
inline void sync_shared_values(const MultipatchDomain2D& dom, PatchField& f) {
    const double tol = 1e-9 * dom.th_period() / static_cast<double>(dom.ring_th_nodes(0).size());
    // theta seams inside each ring
    for (std::size_t k = 0; k < dom.n_rings(); ++k) {
        const std::size_t nr = dom.ring(k).r.cells();
        for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
            auto copies = dom.ring_th_copies(k, t);
            if (copies.size() < 2) continue;
            for (std::size_t i = 0; i <= nr; ++i) {
                double v = ring_value(dom, f, k, i, t);
                for (auto [s, j] : copies) f.patches[dom.flat_id(k, s)].values(i, j) = v;
            }
        }
    }
    // ring interfaces: lower ring's top row is authoritative where nodes match
    for (std::size_t k = 0; k + 1 < dom.n_rings(); ++k) {
        const std::size_t top = dom.ring(k).r.cells();
        for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
            long t_up = dom.find_th_node(k + 1, dom.ring_th_nodes(k)[t], tol);
            if (t_up < 0) continue;
            double v = ring_value(dom, f, k, top, t);
            set_ring_value(dom, f, k + 1, 0, static_cast<std::size_t>(t_up), v);
        }
    }
}

/// Largest disagreement between duplicated copies of shared nodes.
inline double shared_value_mismatch(const MultipatchDomain2D& dom, const PatchField& f) {
    const double tol = 1e-9 * dom.th_period() / static_cast<double>(dom.ring_th_nodes(0).size());
    double worst = 0.0;
    for (std::size_t k = 0; k < dom.n_rings(); ++k) {
        const std::size_t nr = dom.ring(k).r.cells();
        for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
            auto copies = dom.ring_th_copies(k, t);
            for (std::size_t i = 0; i <= nr; ++i) {
                double v0 = ring_value(dom, f, k, i, t);
                for (auto [s, j] : copies)
                    worst = std::max(worst,
                                     std::abs(f.patches[dom.flat_id(k, s)].values(i, j) - v0));
            }
        }
    }
    for (std::size_t k = 0; k + 1 < dom.n_rings(); ++k) {
        const std::size_t top = dom.ring(k).r.cells();
        for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
            long t_up = dom.find_th_node(k + 1, dom.ring_th_nodes(k)[t], tol);
            if (t_up < 0) continue;
            double a = ring_value(dom, f, k, top, t);
            double b = ring_value(dom, f, k + 1, 0, static_cast<std::size_t>(t_up));
            worst = std::max(worst, std::abs(a - b));
        }
    }
    return worst;
}

} // namespace mps
