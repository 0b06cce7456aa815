#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "mps/reconstruct.hpp"
#include "oracles.hpp"
#include "test_functions.hpp"

using namespace mps;
using Catch::Approx;

namespace {
const double pi = std::numbers::pi;

MultipatchDomain2D small_tjoint_domain() {
    // shrunk version of the five-patch T-joint ring layout
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.0, 42.0 / 128, 14),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 30)}}});
    rings.push_back({BreakPoints::uniform(42.0 / 128, 80.0 / 128, 12),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi / 3, 10)},
                      Sector{BreakPoints::uniform(2 * pi / 3, 4 * pi / 3, 10)},
                      Sector{BreakPoints::uniform(4 * pi / 3, 2 * pi, 10)}}});
    rings.push_back({BreakPoints::uniform(80.0 / 128, 1.0, 16),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 30)}}});
    return MultipatchDomain2D(std::move(rings), true, OuterBC::HermiteKnown);
}

Boundary2D trig_boundary(const testf::MappedTrig& f, double r_lo, double r_hi) {
    Boundary2D bd;
    bd.dr_lo = [f, r_lo](double th) { return f.d_r(r_lo, th); };
    bd.dr_hi = [f, r_hi](double th) { return f.d_r(r_hi, th); };
    return bd;
}
} // namespace

TEST_CASE("conforming 2d: r*theta has unit cross-derivatives") {
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(1.0, 1.5, 6),
                     {Sector{BreakPoints::uniform(0.0, 0.5, 5)},
                      Sector{BreakPoints::uniform(0.5, 1.0, 6)}}});
    rings.push_back({BreakPoints::uniform(1.5, 2.0, 7),
                     {Sector{BreakPoints::uniform(0.0, 0.5, 5)},
                      Sector{BreakPoints::uniform(0.5, 1.0, 6)}}});
    MultipatchDomain2D dom(std::move(rings), false, OuterBC::HermiteKnown, OuterBC::HermiteKnown);
    REQUIRE(dom.conformity() == Conformity::Conforming);

    auto field = make_field(dom, [](double r, double th) { return r * th; });
    Boundary2D bd;
    bd.dr_lo = [](double th) { return th; };
    bd.dr_hi = [](double th) { return th; };
    bd.dt_lo = [](double r) { return r; };
    bd.dt_hi = [](double r) { return r; };
    bd.drdt_lo = [](double) { return 1.0; };
    bd.drdt_hi = [](double) { return 1.0; };
    auto plan = assemble_plan(dom, PlanMode::ExactGlobalSolve);
    conforming_2d_derivs(dom, field, plan, bd);

    for (std::size_t p = 0; p < dom.n_patches(); ++p)
        for (double c : field.patches[p].corners) REQUIRE(c == Approx(1.0).margin(1e-12));

    auto locals = build_local_splines(dom, field);
    std::mt19937 gen(5);
    std::uniform_real_distribution<double> Ur(1.0, 2.0), Ut(0.0, 1.0);
    for (int t = 0; t < 200; ++t) {
        double r = Ur(gen), th = Ut(gen);
        auto loc = dom.locate_logical(r, th);
        REQUIRE(locals[loc.flat].eval(r, th) == Approx(r * th).margin(1e-12));
    }
}

TEST_CASE("tjoint layout reproduces the global spline") {
    auto dom = small_tjoint_domain();
    REQUIRE(dom.has_tjoints());
    testf::MappedTrig f{Mapping::czarny(0.3, 1.4)};
    auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
    Boundary2D bd = trig_boundary(f, 0.0, 1.0);
    auto plan = assemble_plan(dom, PlanMode::ExactGlobalSolve);
    tjoint_derivs(dom, field, plan, bd);

    auto global = equivalent_global_spline(dom, field, bd);

    SECTION("interface radial derivatives match") {
        double worst = 0.0;
        for (std::size_t k = 0; k + 1 < dom.n_rings(); ++k) {
            double R = dom.ring(k).r.back();
            for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
                double th = dom.ring_th_nodes(k)[t];
                auto [s, j] = dom.ring_th_owner(k)[t];
                double mine = field.patches[dom.flat_id(k, s)].dr_hi[j];
                worst = std::max(worst, std::abs(mine - global.eval_dr(R, th)));
            }
        }
        REQUIRE(worst < 1e-11);
    }
    SECTION("sector theta derivatives and corners match") {
        double worst_t = 0.0, worst_x = 0.0;
        const Ring& mid = dom.ring(1);
        for (std::size_t s = 0; s < mid.sectors.size(); ++s) {
            const PatchData& pd = field.patches[dom.flat_id(1, s)];
            double th_lo = mid.sectors[s].th.front();
            double th_hi = mid.sectors[s].th.back();
            for (std::size_t i = 0; i <= mid.r.cells(); ++i) {
                double r = mid.r[i];
                worst_t = std::max(worst_t, std::abs(pd.dt_lo[i] - global.eval_dt(r, th_lo)));
                worst_t = std::max(worst_t, std::abs(pd.dt_hi[i] - global.eval_dt(r, th_hi)));
            }
            double Rl = mid.r.front(), Rh = mid.r.back();
            worst_x = std::max(worst_x, std::abs(pd.corners[0] - global.eval_drdt(Rl, th_lo)));
            worst_x = std::max(worst_x, std::abs(pd.corners[1] - global.eval_drdt(Rl, th_hi)));
            worst_x = std::max(worst_x, std::abs(pd.corners[2] - global.eval_drdt(Rh, th_lo)));
            worst_x = std::max(worst_x, std::abs(pd.corners[3] - global.eval_drdt(Rh, th_hi)));
        }
        REQUIRE(worst_t < 1e-11);
        REQUIRE(worst_x < 1e-10);
    }
    SECTION("local splines equal the global spline everywhere") {
        auto locals = build_local_splines(dom, field);
        std::mt19937 gen(7);
        std::uniform_real_distribution<double> Ur(0.0, 1.0), Ut(0.0, 2 * pi);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            double r = Ur(gen), th = Ut(gen);
            auto loc = dom.locate_logical(r, th);
            worst = std::max(worst,
                             std::abs(locals[loc.flat].eval(r, th) - global.eval(r, th)));
        }
        REQUIRE(worst < 1e-12);
    }
    SECTION("constant and theta-independent fields") {
        auto cfield = make_field(dom, [](double, double) { return 3.5; });
        Boundary2D zero;
        tjoint_derivs(dom, cfield, plan, zero);
        for (std::size_t p = 0; p < dom.n_patches(); ++p) {
            for (double v : cfield.patches[p].dr_lo) REQUIRE(v == Approx(0.0).margin(1e-12));
            for (double v : cfield.patches[p].dt_lo) REQUIRE(v == Approx(0.0).margin(1e-12));
            for (double v : cfield.patches[p].corners) REQUIRE(v == Approx(0.0).margin(1e-12));
        }
        auto rfield = make_field(dom, [](double r, double) { return r * r; });
        Boundary2D rb;
        rb.dr_lo = [](double) { return 0.0; };
        rb.dr_hi = [](double) { return 2.0; };
        tjoint_derivs(dom, rfield, plan, rb);
        for (std::size_t k = 0; k + 1 < dom.n_rings(); ++k) {
            double R = dom.ring(k).r.back();
            for (std::size_t t = 0; t < dom.ring_th_nodes(k).size(); ++t) {
                auto [s, j] = dom.ring_th_owner(k)[t];
                REQUIRE(field.patches[dom.flat_id(k, s)].dr_hi.size() > 0);
                double mine = rfield.patches[dom.flat_id(k, s)].dr_hi[j];
                REQUIRE(mine == Approx(2 * R).margin(1e-12));
            }
        }
        for (std::size_t s = 0; s < 3; ++s) {
            const PatchData& pd = rfield.patches[dom.flat_id(1, s)];
            for (double v : pd.dt_lo) REQUIRE(v == Approx(0.0).margin(1e-12));
            for (double v : pd.dt_hi) REQUIRE(v == Approx(0.0).margin(1e-12));
            for (double v : pd.corners) REQUIRE(v == Approx(0.0).margin(1e-12));
        }
    }
    SECTION("cross-derivatives via the theta direction agree") {
        // independent route: theta-plan applied to the radial-derivative
        // field along each interface circle
        const Ring& mid = dom.ring(1);
        const DerivativePlan1D& tp = *plan.th_plans[1];
        for (std::size_t I = 0; I < 2; ++I) {
            std::size_t klo = I;
            double R = dom.ring(klo).r.back();
            std::vector<double> h(dom.ring_th_nodes(klo).size());
            for (std::size_t t = 0; t < h.size(); ++t) {
                auto [s, j] = dom.ring_th_owner(klo)[t];
                h[t] = field.patches[dom.flat_id(klo, s)].dr_hi[j];
            }
            auto cross = tp.solve(h);
            for (std::size_t b = 0; b < 3; ++b) {
                double th_b = mid.sectors[b].th.front();
                REQUIRE(cross[b] == Approx(global.eval_drdt(R, th_b)).margin(1e-10));
            }
        }
    }
}

TEST_CASE("nonconforming rings") {
    testf::MappedTrig f{Mapping::czarny(0.3, 1.4)};

    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.0, 42.0 / 128, 10),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    rings.push_back({BreakPoints::uniform(42.0 / 128, 80.0 / 128, 18),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 32)}}});
    rings.push_back({BreakPoints::uniform(80.0 / 128, 1.0, 12),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    MultipatchDomain2D dom(std::move(rings), true, OuterBC::HermiteKnown);
    REQUIRE(dom.conformity() == Conformity::NonConformingResolvable);

    auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
    Boundary2D bd = trig_boundary(f, 0.0, 1.0);
    auto plan = assemble_plan(dom, PlanMode::ExactGlobalSolve);
    nonconforming_derivs(dom, field, plan, bd);

    SECTION("C1 at every shared interface node") {
        const double tol = 1e-9;
        for (std::size_t I = 0; I < 2; ++I) {
            const auto& lo_nodes = dom.ring_th_nodes(I);
            for (std::size_t t = 0; t < lo_nodes.size(); ++t) {
                long up = dom.find_th_node(I + 1, lo_nodes[t], tol);
                if (up < 0) continue;
                double a = field.patches[I].dr_hi[t];
                double b = field.patches[I + 1].dr_lo[static_cast<std::size_t>(up)];
                REQUIRE(a == Approx(b).margin(1e-12));
            }
        }
    }
    SECTION("fine-only values come from the coarse derivative spline") {
        // rebuild the interface-0 derivative spline on the coarse ring
        std::vector<double> d(dom.ring_th_nodes(0).size());
        for (std::size_t t = 0; t < d.size(); ++t) d[t] = field.patches[0].dr_hi[t];
        std::vector<double> pts = dom.ring_th_nodes(0);
        pts.push_back(2 * pi);
        PeriodicSpline1DBuilder b1{BreakPoints(pts)};
        auto s = b1.solve(d);
        for (std::size_t t = 0; t < dom.ring_th_nodes(1).size(); ++t) {
            double th = dom.ring_th_nodes(1)[t];
            REQUIRE(field.patches[1].dr_lo[t] == Approx(s.eval(th)).margin(1e-11));
        }
    }
    SECTION("interpolation error sits between the coarse and refined global splines") {
        auto locals = build_local_splines(dom, field);

        auto global_err = [&](std::size_t nr, std::size_t nt) {
            std::vector<Ring> r1;
            r1.push_back({BreakPoints::uniform(0.0, 1.0, nr),
                          {Sector{BreakPoints::uniform(0.0, 2 * pi, nt)}}});
            MultipatchDomain2D gd(std::move(r1), true, OuterBC::HermiteKnown);
            auto gf = make_field(gd, [&](double r, double th) { return f(r, th); });
            auto g = equivalent_global_spline(gd, gf, bd);
            double err = 0.0;
            for (int i = 0; i < 40; ++i)
                for (int j = 0; j < 80; ++j) {
                    double r = (i + 0.5) / 40.0, th = 2 * pi * (j + 0.5) / 80.0;
                    err = std::max(err, std::abs(g.eval(r, th) - f(r, th)));
                }
            return err;
        };
        double err_local = 0.0;
        for (int i = 0; i < 40; ++i)
            for (int j = 0; j < 80; ++j) {
                double r = (i + 0.5) / 40.0, th = 2 * pi * (j + 0.5) / 80.0;
                auto loc = dom.locate_logical(r, th);
                err_local = std::max(err_local, std::abs(locals[loc.flat].eval(r, th) - f(r, th)));
            }
        double err_coarse = global_err(40, 16);
        double err_fine = global_err(40, 32);
        REQUIRE(err_local <= err_coarse * 1.1);
        REQUIRE(err_local >= err_fine * 0.9);
    }
}

TEST_CASE("nonconforming chain needs staged segment solves") {
    testf::MappedTrig f{Mapping::czarny(0.3, 1.4)};
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.0, 0.3, 8),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 8)}}});
    rings.push_back({BreakPoints::uniform(0.3, 0.6, 8),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    rings.push_back({BreakPoints::uniform(0.6, 1.0, 8),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 32)}}});
    MultipatchDomain2D dom(std::move(rings), true, OuterBC::HermiteKnown);
    auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
    auto plan = assemble_plan(dom, PlanMode::ExactGlobalSolve);
    nonconforming_derivs(dom, field, plan, trig_boundary(f, 0.0, 1.0));
    // every interface slot filled and C1-consistent
    for (std::size_t I = 0; I < 2; ++I) {
        const auto& lo_nodes = dom.ring_th_nodes(I);
        for (std::size_t t = 0; t < lo_nodes.size(); ++t) {
            long up = dom.find_th_node(I + 1, lo_nodes[t], 1e-9);
            REQUIRE(up >= 0);
            REQUIRE(field.patches[I].dr_hi[t] ==
                    Approx(field.patches[I + 1].dr_lo[static_cast<std::size_t>(up)]).margin(1e-12));
        }
    }
}

TEST_CASE("local splines and the equivalent global spline") {
    testf::MappedTrig f{Mapping::czarny(0.3, 1.4)};
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.0, 42.0 / 128, 14),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 24)}}});
    rings.push_back({BreakPoints::uniform(42.0 / 128, 86.0 / 128, 15),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 24)}}});
    rings.push_back({BreakPoints::uniform(86.0 / 128, 1.0, 14),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 24)}}});

    for (OuterBC bc : {OuterBC::HermiteKnown, OuterBC::GrevilleExtra}) {
        auto rcopy = rings;
        MultipatchDomain2D dom(std::move(rcopy), true, bc);
        auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
        Boundary2D bd = trig_boundary(f, 0.0, 1.0);
        auto plan = assemble_plan(dom, PlanMode::ExactGlobalSolve);
        reconstruct_derivatives(dom, field, plan, bd);
        auto locals = build_local_splines(dom, field);
        auto global = equivalent_global_spline(dom, field, bd);

        std::mt19937 gen(11);
        std::uniform_real_distribution<double> Ur(0.0, 1.0), Ut(0.0, 2 * pi);
        double worst = 0.0;
        for (int t = 0; t < 1000; ++t) {
            double r = Ur(gen), th = Ut(gen);
            auto loc = dom.locate_logical(r, th);
            worst = std::max(worst, std::abs(locals[loc.flat].eval(r, th) - global.eval(r, th)));
        }
        REQUIRE(worst < 1e-12);

        // C1 trace agreement across interfaces at sampled edge points
        for (std::size_t I = 0; I + 1 < dom.n_rings(); ++I) {
            double R = dom.ring(I).r.back();
            double worst_v = 0.0, worst_d = 0.0;
            for (int q = 0; q < 200; ++q) {
                double th = 2 * pi * q / 200.0;
                worst_v = std::max(worst_v,
                                   std::abs(locals[I].eval(R, th) - locals[I + 1].eval(R, th)));
                worst_d = std::max(worst_d, std::abs(locals[I].eval_dr(R, th) -
                                                     locals[I + 1].eval_dr(R, th)));
            }
            REQUIRE(worst_v < 1e-11);
            REQUIRE(worst_d < 1e-11);
        }
    }
}

TEST_CASE("truncated plan keeps C1 and lands at the expected error level") {
    testf::MappedTrig f{Mapping::czarny(0.3, 1.4)};
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.0, 42.0 / 128, 42),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    rings.push_back({BreakPoints::uniform(42.0 / 128, 86.0 / 128, 44),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    rings.push_back({BreakPoints::uniform(86.0 / 128, 1.0, 42),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    MultipatchDomain2D dom(std::move(rings), true, OuterBC::HermiteKnown);
    auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
    Boundary2D bd = trig_boundary(f, 0.0, 1.0);

    auto plan5 = assemble_plan(dom, PlanMode::TruncatedLocal, 5);
    reconstruct_derivatives(dom, field, plan5, bd);
    auto locals = build_local_splines(dom, field);
    auto global = equivalent_global_spline(dom, field, bd);

    // C1 still holds: both sides use the same truncated stencil value
    for (std::size_t I = 0; I + 1 < dom.n_rings(); ++I)
        for (std::size_t t = 0; t < 16; ++t)
            REQUIRE(field.patches[I].dr_hi[t] == Approx(field.patches[I + 1].dr_lo[t]).margin(0.0));

    double worst = 0.0;
    for (int i = 0; i < 128; ++i)
        for (int j = 0; j < 32; ++j) {
            double r = (i + 0.5) / 128.0, th = 2 * pi * (j + 0.5) / 32.0;
            auto loc = dom.locate_logical(r, th);
            worst = std::max(worst, std::abs(locals[loc.flat].eval(r, th) - global.eval(r, th)));
        }
    // interface-derivative truncation error ~ 4e-2 scaled by the cell width
    REQUIRE(worst > 1e-6);
    REQUIRE(worst < 1e-3);
}

TEST_CASE("equivalent global spline on a single patch is a direct build") {
    std::vector<Ring> rings;
    rings.push_back({BreakPoints::uniform(0.2, 1.0, 12),
                     {Sector{BreakPoints::uniform(0.0, 2 * pi, 16)}}});
    MultipatchDomain2D dom(std::move(rings), true, OuterBC::HermiteKnown);
    testf::MappedTrig f{Mapping::circular()};
    auto field = make_field(dom, [&](double r, double th) { return f(r, th); });
    Boundary2D bd = trig_boundary(f, 0.2, 1.0);
    auto global = equivalent_global_spline(dom, field, bd);

    BreakPoints br = BreakPoints::uniform(0.2, 1.0, 12);
    BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 16);
    Matrix v(13, 16);
    for (std::size_t i = 0; i <= 12; ++i)
        for (std::size_t j = 0; j < 16; ++j) v(i, j) = f(br[i], bt[j]);
    EdgeData2D e;
    e.r_lo.resize(16);
    e.r_hi.resize(16);
    for (std::size_t j = 0; j < 16; ++j) {
        e.r_lo[j] = f.d_r(0.2, bt[j]);
        e.r_hi[j] = f.d_r(1.0, bt[j]);
    }
    auto direct = interpolate_2d(br, bt, v, e, true);
    for (std::size_t k = 0; k < global.coeffs.rows(); ++k)
        for (std::size_t l = 0; l < global.coeffs.cols(); ++l)
            REQUIRE(global.coeffs(k, l) == Approx(direct.coeffs(k, l)).margin(1e-13));
}
