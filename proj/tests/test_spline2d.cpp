#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <numbers>
#include <random>

#include "mps/spline2d.hpp"
#include "oracles.hpp"

using namespace mps;
using Catch::Approx;

namespace {
const double pi = std::numbers::pi;

Matrix sample(const BreakPoints& br, const BreakPoints& bt, bool periodic_t,
              double (*f)(double, double)) {
    std::size_t tn = bt.cells() + (periodic_t ? 0 : 1);
    Matrix v(br.cells() + 1, tn);
    for (std::size_t i = 0; i <= br.cells(); ++i)
        for (std::size_t j = 0; j < tn; ++j) v(i, j) = f(br[i], bt[j]);
    return v;
}
} // namespace

TEST_CASE("constant field gives the constant spline") {
    BreakPoints br = BreakPoints::uniform(0.0, 1.0, 6);
    BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 8);
    Matrix v(7, 8, 1.0);
    EdgeData2D e;
    e.r_lo.assign(8, 0.0);
    e.r_hi.assign(8, 0.0);
    auto s = interpolate_2d(br, bt, v, e, true);
    for (std::size_t k = 0; k < s.coeffs.rows(); ++k)
        for (std::size_t l = 0; l < s.coeffs.cols(); ++l)
            REQUIRE(s.coeffs(k, l) == Approx(1.0).margin(1e-13));
    REQUIRE(s.eval(0.5, 1.0) == Approx(1.0).margin(1e-14));
    REQUIRE(s.eval_dr(0.5, 1.0) == Approx(0.0).margin(1e-12));
    REQUIRE(s.eval_dt(0.5, 1.0) == Approx(0.0).margin(1e-12));
}

TEST_CASE("r sin(theta) with exact edge data is reproduced") {
    BreakPoints br = BreakPoints::uniform(0.0, 1.0, 8);
    BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 12);
    Matrix v = sample(br, bt, true, [](double r, double t) { return r * std::sin(t); });
    EdgeData2D e;
    e.r_lo.assign(12, 0.0);
    e.r_hi.assign(12, 0.0);
    for (std::size_t j = 0; j < 12; ++j) {
        e.r_lo[j] = std::sin(bt[j]);
        e.r_hi[j] = std::sin(bt[j]);
    }
    auto s = interpolate_2d(br, bt, v, e, true);
    for (std::size_t i = 0; i <= 8; ++i)
        for (std::size_t j = 0; j < 12; ++j)
            REQUIRE(s.eval(br[i], bt[j]) == Approx(v(i, j)).margin(1e-13));
    for (std::size_t j = 0; j < 12; ++j) {
        REQUIRE(s.eval_dr(0.0, bt[j]) == Approx(std::sin(bt[j])).margin(1e-12));
        REQUIRE(s.eval_dr(1.0, bt[j]) == Approx(std::sin(bt[j])).margin(1e-12));
    }
}

TEST_CASE("tensor cubic with exact data is point-exact, both dims Hermite") {
    auto f = [](double r, double t) { return (r * r * r - r) * (2 * t * t * t + t * t); };
    auto fr = [](double r, double t) { return (3 * r * r - 1) * (2 * t * t * t + t * t); };
    auto ft = [](double r, double t) { return (r * r * r - r) * (6 * t * t + 2 * t); };
    auto frt = [](double r, double t) { return (3 * r * r - 1) * (6 * t * t + 2 * t); };
    BreakPoints br = oracle::random_breaks(0.0, 1.0, 5);
    BreakPoints bt = oracle::random_breaks(0.0, 1.0, 6);
    Matrix v(6, 7);
    for (std::size_t i = 0; i <= 5; ++i)
        for (std::size_t j = 0; j <= 6; ++j) v(i, j) = f(br[i], bt[j]);
    EdgeData2D e;
    e.r_lo.resize(7);
    e.r_hi.resize(7);
    e.t_lo.resize(6);
    e.t_hi.resize(6);
    for (std::size_t j = 0; j <= 6; ++j) {
        e.r_lo[j] = fr(br[0], bt[j]);
        e.r_hi[j] = fr(br[5], bt[j]);
    }
    for (std::size_t i = 0; i <= 5; ++i) {
        e.t_lo[i] = ft(br[i], bt[0]);
        e.t_hi[i] = ft(br[i], bt[6]);
    }
    e.corners = {frt(br[0], bt[0]), frt(br[0], bt[6]), frt(br[5], bt[0]), frt(br[5], bt[6])};
    auto s = interpolate_2d(br, bt, v, e, false);
    std::mt19937 gen(17);
    std::uniform_real_distribution<double> U(0.0, 1.0);
    for (int k = 0; k < 300; ++k) {
        double r = U(gen), t = U(gen);
        REQUIRE(s.eval(r, t) == Approx(f(r, t)).margin(1e-12));
        REQUIRE(s.eval_dr(r, t) == Approx(fr(r, t)).margin(1e-11));
        REQUIRE(s.eval_drdt(r, t) == Approx(frt(r, t)).margin(1e-10));
    }
}

TEST_CASE("separable product equals product of 1d splines") {
    BreakPoints br = BreakPoints::uniform(0.0, 1.0, 7);
    BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 9);
    auto fr = [](double r) { return std::exp(-r) + r * r; };
    auto gt = [](double t) { return std::sin(2 * t) + 0.3 * std::cos(t); };
    auto drf = [](double r) { return -std::exp(-r) + 2 * r; };

    std::vector<double> vr(8), vt(9);
    for (std::size_t i = 0; i <= 7; ++i) vr[i] = fr(br[i]);
    for (std::size_t j = 0; j < 9; ++j) vt[j] = gt(bt[j]);
    auto sr = interpolate_1d(br, vr, Closure::hermite(drf(0.0), drf(1.0)));
    auto st = interpolate_1d(bt, vt, Closure::periodic());

    Matrix v(8, 9);
    for (std::size_t i = 0; i <= 7; ++i)
        for (std::size_t j = 0; j < 9; ++j) v(i, j) = fr(br[i]) * gt(bt[j]);
    EdgeData2D e;
    e.r_lo.resize(9);
    e.r_hi.resize(9);
    for (std::size_t j = 0; j < 9; ++j) {
        e.r_lo[j] = drf(0.0) * gt(bt[j]);
        e.r_hi[j] = drf(1.0) * gt(bt[j]);
    }
    auto s2 = interpolate_2d(br, bt, v, e, true);

    std::mt19937 gen(23);
    std::uniform_real_distribution<double> Ur(0.0, 1.0), Ut(0.0, 2 * pi);
    for (int k = 0; k < 100; ++k) {
        double r = Ur(gen), t = Ut(gen);
        REQUIRE(s2.eval(r, t) == Approx(sr.eval(r) * st.eval(t)).margin(1e-12));
    }
}

TEST_CASE("interpolation error decays at fourth order") {
    auto f = [](double r, double t) { return std::cos(2 * pi * r) * std::sin(t); };
    auto fdr = [](double r, double t) { return -2 * pi * std::sin(2 * pi * r) * std::sin(t); };
    double prev = 0.0;
    std::vector<double> errs;
    for (std::size_t n : {16u, 32u, 64u}) {
        BreakPoints br = BreakPoints::uniform(0.0, 1.0, n);
        BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 2 * n);
        Matrix v(n + 1, 2 * n);
        for (std::size_t i = 0; i <= n; ++i)
            for (std::size_t j = 0; j < 2 * n; ++j) v(i, j) = f(br[i], bt[j]);
        EdgeData2D e;
        e.r_lo.resize(2 * n);
        e.r_hi.resize(2 * n);
        for (std::size_t j = 0; j < 2 * n; ++j) {
            e.r_lo[j] = fdr(0.0, bt[j]);
            e.r_hi[j] = fdr(1.0, bt[j]);
        }
        auto s = interpolate_2d(br, bt, v, e, true);
        double err = 0.0;
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < 2 * n; ++j) {
                double r = 0.5 * (br[i] + br[i + 1]);
                double t = bt[j] + pi / (2 * n);
                err = std::max(err, std::abs(s.eval(r, t) - f(r, t)));
            }
        errs.push_back(err);
    }
    double order1 = std::log2(errs[0] / errs[1]);
    double order2 = std::log2(errs[1] / errs[2]);
    REQUIRE(order1 > 3.5);
    REQUIRE(order2 > 3.5);
    REQUIRE(order2 < 4.6);
    (void)prev;
}

TEST_CASE("dimension mismatch is rejected") {
    BreakPoints br = BreakPoints::uniform(0.0, 1.0, 6);
    BreakPoints bt = BreakPoints::uniform(0.0, 2 * pi, 8);
    Matrix bad(5, 8, 0.0);
    EdgeData2D e;
    e.r_lo.assign(8, 0.0);
    e.r_hi.assign(8, 0.0);
    REQUIRE_THROWS_AS(interpolate_2d(br, bt, bad, e, true), InvalidInput);
}
