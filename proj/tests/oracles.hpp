#pragma once

// Test-only reference implementations, kept deliberately naive and
// independent of the library's solve paths.

#include <cmath>
#include <cstddef>
#include <random>
#include <vector>

#include "mps/bspline.hpp"
#include "mps/common.hpp"

namespace oracle {

/// Dense Gaussian elimination with partial pivoting.
inline std::vector<double> dense_solve(mps::Matrix A, std::vector<double> b) {
    const std::size_t n = A.rows();
    for (std::size_t k = 0; k + 1 < n; ++k) {
        std::size_t piv = k;
        for (std::size_t i = k + 1; i < n; ++i)
            if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
        if (piv != k) {
            for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
            std::swap(b[k], b[piv]);
        }
        for (std::size_t i = k + 1; i < n; ++i) {
            double m = A(i, k) / A(k, k);
            for (std::size_t j = k; j < n; ++j) A(i, j) -= m * A(k, j);
            b[i] -= m * b[k];
        }
    }
    std::vector<double> x(n);
    for (std::size_t i = n; i-- > 0;) {
        double s = b[i];
        for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
        x[i] = s / A(i, i);
    }
    return x;
}

/// Periodic cubic spline coefficients by densely solving the collocation
/// system (N_c unknowns, wrap folded into the matrix).
inline std::vector<double> dense_periodic_spline(const mps::BreakPoints& breaks,
                                                 const std::vector<double>& values) {
    mps::KnotVector kn = mps::KnotVector::build(breaks, mps::KnotKind::Periodic);
    const std::size_t nc = breaks.cells();
    mps::Matrix A(nc, nc, 0.0);
    for (std::size_t i = 0; i < nc; ++i) {
        mps::BasisEval e = kn.eval(breaks[i]);
        for (int k = 0; k < 4; ++k) A(i, (e.cell + k) % nc) += e.v[k];
    }
    std::vector<double> c = dense_solve(A, values);
    c.resize(nc + 3);
    for (std::size_t j = 0; j < 3; ++j) c[nc + j] = c[j];
    return c;
}

/// Hermite-closed cubic spline coefficients by dense solve.
inline std::vector<double> dense_hermite_spline(const mps::BreakPoints& breaks,
                                                const std::vector<double>& values, double dl,
                                                double dr) {
    mps::KnotVector kn = mps::KnotVector::build(breaks, mps::KnotKind::Open);
    const std::size_t nc = breaks.cells();
    const std::size_t n = nc + 3;
    mps::Matrix A(n, n, 0.0);
    std::vector<double> rhs(n);
    auto put = [&](std::size_t r, mps::BasisEval e) {
        for (int k = 0; k < 4; ++k) A(r, e.cell + k) += e.v[k];
    };
    put(0, kn.eval_deriv(breaks[0]));
    rhs[0] = dl;
    for (std::size_t i = 0; i <= nc; ++i) {
        put(i + 1, kn.eval(breaks[i]));
        rhs[i + 1] = values[i];
    }
    put(n - 1, kn.eval_deriv(breaks[nc]));
    rhs[n - 1] = dr;
    return dense_solve(A, rhs);
}

inline std::mt19937& rng() {
    static std::mt19937 gen(20240817u);
    return gen;
}

inline double uniform(double a, double b) {
    std::uniform_real_distribution<double> d(a, b);
    return d(rng());
}

/// Random strictly increasing break points with n cells on [a, b].
inline mps::BreakPoints random_breaks(double a, double b, std::size_t n) {
    std::vector<double> w(n);
    for (auto& x : w) x = uniform(0.3, 1.7);
    double s = 0.0;
    for (double x : w) s += x;
    std::vector<double> p(n + 1);
    p[0] = a;
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        acc += w[i];
        p[i + 1] = a + (b - a) * acc / s;
    }
    p[n] = b;
    return mps::BreakPoints(p);
}

} // namespace oracle
