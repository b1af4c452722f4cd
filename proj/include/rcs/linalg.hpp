#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <string>
#include <vector>

#include "rcs/error.hpp"
#include "rcs/rng.hpp"

namespace rcs {

using Vector = std::vector<double>;

/// Dense row-major matrix of doubles.
class Matrix {
public:
    Matrix() = default;

    Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
        : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

    Matrix(std::initializer_list<std::initializer_list<double>> init) {
        rows_ = init.size();
        cols_ = rows_ ? init.begin()->size() : 0;
        data_.reserve(rows_ * cols_);
        for (const auto& row : init) {
            if (row.size() != cols_) throw ShapeMismatch("Matrix: ragged initializer");
            data_.insert(data_.end(), row.begin(), row.end());
        }
    }

    static Matrix identity(std::size_t n) {
        Matrix m(n, n);
        for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
        return m;
    }

    [[nodiscard]] std::size_t rows() const { return rows_; }
    [[nodiscard]] std::size_t cols() const { return cols_; }
    [[nodiscard]] bool square() const { return rows_ == cols_; }

    double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
    double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

    [[nodiscard]] const std::vector<double>& data() const { return data_; }
    [[nodiscard]] std::vector<double>& data() { return data_; }

    [[nodiscard]] double trace() const {
        if (!square()) throw ShapeMismatch("trace: matrix not square");
        double t = 0.0;
        for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
        return t;
    }

    Matrix& operator+=(const Matrix& o) {
        if (rows_ != o.rows_ || cols_ != o.cols_) throw ShapeMismatch("Matrix +=: shape mismatch");
        for (std::size_t i = 0; i < data_.size(); ++i) data_[i] += o.data_[i];
        return *this;
    }

    Matrix& operator*=(double s) {
        for (double& v : data_) v *= s;
        return *this;
    }

    friend Matrix operator*(double s, Matrix m) {
        m *= s;
        return m;
    }

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

/// Lower-triangular Cholesky factor L with L L^T = A.
struct CholeskyFactor {
    Matrix lower;

    [[nodiscard]] std::size_t dim() const { return lower.rows(); }

    /// log det(A) = 2 * sum(log L_ii)
    [[nodiscard]] double log_det() const {
        double s = 0.0;
        for (std::size_t i = 0; i < dim(); ++i) s += std::log(lower(i, i));
        return 2.0 * s;
    }

    /// Solve L y = b by forward substitution.
    [[nodiscard]] Vector forward_solve(const Vector& b) const {
        const std::size_t n = dim();
        if (b.size() != n) throw ShapeMismatch("forward_solve: dimension mismatch");
        Vector y(n);
        for (std::size_t i = 0; i < n; ++i) {
            double s = b[i];
            for (std::size_t j = 0; j < i; ++j) s -= lower(i, j) * y[j];
            y[i] = s / lower(i, i);
        }
        return y;
    }
};

inline double dot(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeMismatch("dot: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline double squared_distance(const Vector& a, const Vector& b) {
    if (a.size() != b.size()) throw ShapeMismatch("squared_distance: dimension mismatch");
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

/// Coordinate-wise arithmetic mean of a set of equal-length vectors.
inline Vector mean_vector(const std::vector<Vector>& rows) {
    if (rows.empty()) throw EmptyInput("mean_vector: no rows");
    const std::size_t d = rows.front().size();
    Vector mean(d, 0.0);
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeMismatch("mean_vector: inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) mean[j] += r[j];
    }
    const double inv = 1.0 / static_cast<double>(rows.size());
    for (double& v : mean) v *= inv;
    return mean;
}

/// Sample covariance with the unbiased N-1 divisor.
/// Callers that cannot supply two rows substitute a ridge of the identity.
inline Matrix covariance_matrix(const std::vector<Vector>& rows, const Vector& mean) {
    if (rows.size() < 2) throw InsufficientSamples("covariance_matrix: need at least 2 rows");
    const std::size_t d = mean.size();
    Matrix cov(d, d);
    Vector centered(d);
    for (const auto& r : rows) {
        if (r.size() != d) throw ShapeMismatch("covariance_matrix: inconsistent dimensions");
        for (std::size_t j = 0; j < d; ++j) centered[j] = r[j] - mean[j];
        for (std::size_t i = 0; i < d; ++i) {
            for (std::size_t j = i; j < d; ++j) cov(i, j) += centered[i] * centered[j];
        }
    }
    const double inv = 1.0 / static_cast<double>(rows.size() - 1);
    for (std::size_t i = 0; i < d; ++i) {
        for (std::size_t j = i; j < d; ++j) {
            cov(i, j) *= inv;
            cov(j, i) = cov(i, j);
        }
    }
    return cov;
}

/// m + eps * I.
inline Matrix ridge_regularize(const Matrix& m, double eps) {
    if (!m.square()) throw ShapeMismatch("ridge_regularize: matrix not square");
    if (eps < 0.0) throw InvalidArgument("ridge_regularize: eps must be non-negative");
    Matrix out = m;
    for (std::size_t i = 0; i < m.rows(); ++i) out(i, i) += eps;
    return out;
}

/// Scale-aware default ridge: 1e-6 * mean diagonal magnitude, floored at 1e-9.
inline double default_ridge_eps(const Matrix& cov) {
    const double d = static_cast<double>(cov.rows());
    const double scale = d > 0.0 ? std::abs(cov.trace()) / d : 0.0;
    return std::max(1e-9, 1e-6 * scale);
}

/// Cholesky factorization of a symmetric positive-definite matrix.
/// Throws NotPositiveDefinite when a pivot is not strictly positive.
inline CholeskyFactor cholesky(const Matrix& m) {
    if (!m.square()) throw ShapeMismatch("cholesky: matrix not square");
    const std::size_t n = m.rows();
    Matrix lower(n, n);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j <= i; ++j) {
            double s = m(i, j);
            for (std::size_t k = 0; k < j; ++k) s -= lower(i, k) * lower(j, k);
            if (i == j) {
                if (s <= 0.0 || !std::isfinite(s)) {
                    throw NotPositiveDefinite("cholesky: pivot " + std::to_string(i) +
                                              " is not positive");
                }
                lower(i, i) = std::sqrt(s);
            } else {
                lower(i, j) = s / lower(j, j);
            }
        }
    }
    return CholeskyFactor{std::move(lower)};
}

/// n draws from N(mean, L L^T): mean + L z with z standard normal.
inline std::vector<Vector> sample_gaussian(const Vector& mean, const CholeskyFactor& chol,
                                           std::size_t n, SeededRng& rng) {
    const std::size_t d = mean.size();
    if (chol.dim() != d) throw ShapeMismatch("sample_gaussian: dimension mismatch");
    std::vector<Vector> out;
    out.reserve(n);
    Vector z(d);
    for (std::size_t s = 0; s < n; ++s) {
        for (std::size_t j = 0; j < d; ++j) z[j] = rng.normal();
        Vector x = mean;
        for (std::size_t i = 0; i < d; ++i) {
            double acc = 0.0;
            for (std::size_t j = 0; j <= i; ++j) acc += chol.lower(i, j) * z[j];
            x[i] += acc;
        }
        out.push_back(std::move(x));
    }
    return out;
}

/// Log density of N(mean, cov) at x, with the standard multivariate
/// normalization (2 pi)^(-d/2) |cov|^(-1/2). cov is ridge-regularized with the
/// scale-aware default before factorization.
inline double gaussian_log_density(const Vector& x, const Vector& mean, const Matrix& cov) {
    const std::size_t d = mean.size();
    if (x.size() != d || cov.rows() != d || cov.cols() != d) {
        throw ShapeMismatch("gaussian_log_density: dimension mismatch");
    }
    const CholeskyFactor chol = cholesky(ridge_regularize(cov, default_ridge_eps(cov)));
    Vector diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = x[j] - mean[j];
    const Vector y = chol.forward_solve(diff);
    const double quad = dot(y, y);
    constexpr double kLog2Pi = 1.8378770664093454836;
    return -0.5 * (static_cast<double>(d) * kLog2Pi + chol.log_det() + quad);
}

/// Log density against a pre-factorized covariance (GMM inner loop).
inline double gaussian_log_density(const Vector& x, const Vector& mean,
                                   const CholeskyFactor& chol) {
    const std::size_t d = mean.size();
    if (x.size() != d || chol.dim() != d) {
        throw ShapeMismatch("gaussian_log_density: dimension mismatch");
    }
    Vector diff(d);
    for (std::size_t j = 0; j < d; ++j) diff[j] = x[j] - mean[j];
    const Vector y = chol.forward_solve(diff);
    constexpr double kLog2Pi = 1.8378770664093454836;
    return -0.5 * (static_cast<double>(d) * kLog2Pi + chol.log_det() + dot(y, y));
}

/// log(sum(exp(v))) without overflow.
inline double log_sum_exp(const std::vector<double>& v) {
    if (v.empty()) throw EmptyInput("log_sum_exp: empty input");
    const double m = *std::max_element(v.begin(), v.end());
    if (!std::isfinite(m)) return m;
    double s = 0.0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

} // namespace rcs
