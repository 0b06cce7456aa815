#pragma once

#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

namespace mps {

/// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Invalid user input: bad grids, mismatched sizes, malformed configs.
struct InvalidInput : Error {
    using Error::Error;
};

/// Malformed configuration file or CLI arguments (CLI exit code 2).
struct ConfigError : Error {
    using Error::Error;
};

/// Numerical-domain failure: out-of-domain points, feet leaving the grid
/// (CLI exit code 3).
struct DomainError : Error {
    using Error::Error;
};

/// A condition that cannot occur for valid inputs; indicates a library bug.
struct InternalError : Error {
    using Error::Error;
};

inline void require(bool cond, const std::string& msg) {
    if (!cond) throw InvalidInput(msg);
}

/// Dense row-major matrix of doubles. Small utility type; no BLAS behind it.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols, double value = 0.0)
        : rows_(rows), cols_(cols), d_(rows * cols, value) {}

    double& operator()(std::size_t i, std::size_t j) { return d_[i * cols_ + j]; }
    double operator()(std::size_t i, std::size_t j) const { return d_[i * cols_ + j]; }

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double* data() { return d_.data(); }
    const double* data() const { return d_.data(); }

    bool same_shape(const Matrix& o) const { return rows_ == o.rows_ && cols_ == o.cols_; }

private:
    std::size_t rows_ = 0, cols_ = 0;
    std::vector<double> d_;
};

inline bool finite(double x) { return std::isfinite(x); }

inline double max_abs(const std::vector<double>& v) {
    double m = 0.0;
    for (double x : v) m = std::max(m, std::abs(x));
    return m;
}

} // namespace mps
