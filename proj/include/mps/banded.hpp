#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <vector>

#include "mps/common.hpp"

namespace mps {

/// LU factorization of a general banded matrix with partial pivoting.
///
/// Compact storage: row i of `a_` holds A(i, i-kl .. i+ku). Factor once,
/// solve many right-hand sides; this is the workhorse behind every spline
/// collocation grid.
class BandedLU {
public:
    BandedLU(std::size_t n, int kl, int ku)
        : n_(n), kl_(kl), ku_(ku), w_(kl + ku + 1),
          a_(n, std::vector<double>(kl + ku + 1 + kl, 0.0)),
          al_(n, std::vector<double>(kl, 0.0)), idx_(n, 0) {}

    void set(std::size_t i, std::size_t j, double v) {
        long off = static_cast<long>(j) - static_cast<long>(i) + kl_;
        if (off < 0 || off >= static_cast<long>(w_))
            throw InternalError("BandedLU: entry outside band");
        a_[i][static_cast<std::size_t>(off)] = v;
    }

    void add(std::size_t i, std::size_t j, double v) {
        long off = static_cast<long>(j) - static_cast<long>(i) + kl_;
        if (off < 0 || off >= static_cast<long>(w_))
            throw InternalError("BandedLU: entry outside band");
        a_[i][static_cast<std::size_t>(off)] += v;
    }

    void factor() {
        const int mm = kl_ + ku_ + 1;
        int l = kl_;
        for (std::size_t i = 0; i < static_cast<std::size_t>(kl_) && i < n_; ++i) {
            for (int j = kl_ - static_cast<int>(i); j < mm; ++j)
                a_[i][j - l] = a_[i][j];
            --l;
            for (int j = mm - l - 1; j < mm; ++j) a_[i][j] = 0.0;
        }
        l = kl_;
        for (std::size_t k = 0; k < n_; ++k) {
            double dum = a_[k][0];
            std::size_t i = k;
            if (l < static_cast<int>(n_)) ++l;
            for (std::size_t j = k + 1; j < static_cast<std::size_t>(l); ++j) {
                if (std::abs(a_[j][0]) > std::abs(dum)) {
                    dum = a_[j][0];
                    i = j;
                }
            }
            idx_[k] = i;
            if (dum == 0.0)
                throw InternalError("BandedLU: singular matrix");
            if (i != k) std::swap(a_[k], a_[i]);
            for (std::size_t j = k + 1; j < static_cast<std::size_t>(l); ++j) {
                double m = a_[j][0] / a_[k][0];
                al_[k][j - k - 1] = m;
                for (int jj = 1; jj < mm + kl_; ++jj)
                    a_[j][jj - 1] = a_[j][jj] - m * a_[k][jj];
                a_[j][mm + kl_ - 1] = 0.0;
            }
        }
        factored_ = true;
    }

    void solve(std::vector<double>& b) const {
        if (!factored_) throw InternalError("BandedLU: solve before factor");
        if (b.size() != n_) throw InternalError("BandedLU: rhs size mismatch");
        const int mm = kl_ + ku_ + 1;
        int l = kl_;
        for (std::size_t k = 0; k < n_; ++k) {
            std::size_t i = idx_[k];
            if (i != k) std::swap(b[k], b[i]);
            if (l < static_cast<int>(n_)) ++l;
            for (std::size_t j = k + 1; j < static_cast<std::size_t>(l); ++j)
                b[j] -= al_[k][j - k - 1] * b[k];
        }
        l = 1;
        for (std::size_t k = n_; k-- > 0;) {
            double dum = b[k];
            for (int j = 1; j < l; ++j) dum -= a_[k][j] * b[k + j];
            b[k] = dum / a_[k][0];
            if (l < mm + kl_ && k + static_cast<std::size_t>(l) < n_ + 1) ++l;
            l = std::min(l, mm + kl_);
        }
    }

    std::size_t size() const { return n_; }

private:
    std::size_t n_;
    int kl_, ku_;
    std::size_t w_;
    std::vector<std::vector<double>> a_;
    std::vector<std::vector<double>> al_;
    std::vector<std::size_t> idx_;
    bool factored_ = false;
};

/// Thomas algorithm for a tridiagonal system. `sub[0]` and `sup[n-1]` unused.
inline std::vector<double> solve_tridiagonal(const std::vector<double>& sub,
                                             const std::vector<double>& diag,
                                             const std::vector<double>& sup,
                                             std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return {};
    std::vector<double> c(n, 0.0);
    double beta = diag[0];
    if (beta == 0.0) throw InternalError("tridiagonal: zero pivot");
    rhs[0] /= beta;
    for (std::size_t i = 1; i < n; ++i) {
        c[i] = sup[i - 1] / beta;
        beta = diag[i] - sub[i] * c[i];
        if (beta == 0.0) throw InternalError("tridiagonal: zero pivot");
        rhs[i] = (rhs[i] - sub[i] * rhs[i - 1]) / beta;
    }
    for (std::size_t i = n - 1; i-- > 0;) rhs[i] -= c[i + 1] * rhs[i + 1];
    return rhs;
}

/// Cyclic tridiagonal solve via the Sherman-Morrison correction.
/// `corner_top` is A(0, n-1), `corner_bot` is A(n-1, 0). Sizes n <= 3 fall
/// back to a dense solve because the corners overlap the band there.
inline std::vector<double> solve_cyclic_tridiagonal(const std::vector<double>& sub,
                                                    const std::vector<double>& diag,
                                                    const std::vector<double>& sup,
                                                    double corner_top, double corner_bot,
                                                    std::vector<double> rhs) {
    const std::size_t n = diag.size();
    if (n == 0) return {};
    if (n <= 3) {
        Matrix A(n, n, 0.0);
        for (std::size_t i = 0; i < n; ++i) {
            A(i, i) += diag[i];
            if (i > 0) A(i, i - 1) += sub[i];
            if (i + 1 < n) A(i, i + 1) += sup[i];
        }
        A(0, n - 1) += corner_top;
        A(n - 1, 0) += corner_bot;
        // dense Gaussian elimination with partial pivoting
        std::vector<std::size_t> p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = i;
        for (std::size_t k = 0; k + 1 < n; ++k) {
            std::size_t piv = k;
            for (std::size_t i = k + 1; i < n; ++i)
                if (std::abs(A(i, k)) > std::abs(A(piv, k))) piv = i;
            if (piv != k) {
                for (std::size_t j = 0; j < n; ++j) std::swap(A(k, j), A(piv, j));
                std::swap(rhs[k], rhs[piv]);
            }
            if (A(k, k) == 0.0) throw InternalError("cyclic tridiagonal: singular");
            for (std::size_t i = k + 1; i < n; ++i) {
                double m = A(i, k) / A(k, k);
                for (std::size_t j = k; j < n; ++j) A(i, j) -= m * A(k, j);
                rhs[i] -= m * rhs[k];
            }
        }
        std::vector<double> x(n);
        for (std::size_t i = n; i-- > 0;) {
            double s = rhs[i];
            for (std::size_t j = i + 1; j < n; ++j) s -= A(i, j) * x[j];
            if (A(i, i) == 0.0) throw InternalError("cyclic tridiagonal: singular");
            x[i] = s / A(i, i);
        }
        return x;
    }
    double gamma = -diag[0];
    std::vector<double> d2 = diag;
    d2[0] = diag[0] - gamma;
    d2[n - 1] = diag[n - 1] - corner_top * corner_bot / gamma;
    std::vector<double> u(n, 0.0);
    u[0] = gamma;
    u[n - 1] = corner_bot;
    std::vector<double> x = solve_tridiagonal(sub, d2, sup, std::move(rhs));
    std::vector<double> z = solve_tridiagonal(sub, d2, sup, std::move(u));
    double fact = (x[0] + corner_top * x[n - 1] / gamma) /
                  (1.0 + z[0] + corner_top * z[n - 1] / gamma);
    for (std::size_t i = 0; i < n; ++i) x[i] -= fact * z[i];
    return x;
}

} // namespace mps
