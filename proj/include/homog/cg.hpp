#pragma once

#include <algorithm>
#include <cmath>
#include <concepts>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "homog/errors.hpp"

namespace homog {

struct CgOptions {
    double tol = 1e-10;
    int max_iter = 1000;
    /// Work in the zero-mean subspace (singular periodic systems).
    bool project_mean = false;
};

struct SolveStats {
    int iterations = 0;
    /// Final relative residual |Ax - b| / |b|.
    double residual = 0.0;
};

/// A matrix-free symmetric positive (semi)definite operator.
template <class Op>
concept LinearOperator = requires(const Op& op, std::span<const double> x, std::span<double> y) {
    { op.size() } -> std::convertible_to<std::size_t>;
    op.apply(x, y);
    op.diagonal(y);
};

namespace detail {

inline double dot(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
    return s;
}

inline void remove_mean(std::span<double> v) {
    if (v.empty()) return;
    const double m = std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
    for (double& x : v) x -= m;
}

}  // namespace detail

/// Jacobi-preconditioned conjugate gradient from x = 0. On return x solves
/// op x = rhs to relative residual <= tol. Throws SolverError when max_iter is
/// exhausted first.
template <LinearOperator Op>
SolveStats cg_solve(const Op& op, std::span<const double> rhs, std::span<double> x, const CgOptions& options) {
    const std::size_t n = op.size();
    std::fill(x.begin(), x.end(), 0.0);

    std::vector<double> b(rhs.begin(), rhs.end());
    if (options.project_mean) detail::remove_mean(b);
    std::vector<double> r = b;
    const double rhs_norm = std::sqrt(detail::dot(b, b));
    if (rhs_norm == 0.0) return {0, 0.0};

    std::vector<double> inv_diag(n);
    op.diagonal(inv_diag);
    for (double& v : inv_diag) v = v > 0.0 ? 1.0 / v : 1.0;

    std::vector<double> z(n), p(n), q(n);
    for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
    p = z;
    double rz = detail::dot(r, z);
    double res = 1.0;

    for (int it = 1; it <= options.max_iter; ++it) {
        op.apply(p, q);
        const double pq = detail::dot(p, q);
        if (!(pq > 0.0)) throw SolverError("cg_solve: operator is not positive on the search direction", it, res);
        const double step = rz / pq;
        for (std::size_t i = 0; i < n; ++i) {
            x[i] += step * p[i];
            r[i] -= step * q[i];
        }
        if (options.project_mean) {
            detail::remove_mean(x);
            detail::remove_mean(r);
        }
        res = std::sqrt(detail::dot(r, r)) / rhs_norm;
        if (res <= options.tol) {
            // Confirm with the true residual; the recursive one can drift.
            op.apply(x, q);
            double true_sq = 0.0;
            for (std::size_t i = 0; i < n; ++i) true_sq += (b[i] - q[i]) * (b[i] - q[i]);
            const double true_res = std::sqrt(true_sq) / rhs_norm;
            if (true_res <= options.tol) return {it, true_res};
            for (std::size_t i = 0; i < n; ++i) r[i] = b[i] - q[i];
            if (options.project_mean) detail::remove_mean(r);
        }
        for (std::size_t i = 0; i < n; ++i) z[i] = inv_diag[i] * r[i];
        const double rz_next = detail::dot(r, z);
        const double beta = rz_next / rz;
        rz = rz_next;
        for (std::size_t i = 0; i < n; ++i) p[i] = z[i] + beta * p[i];
    }
    throw SolverError("cg_solve: no convergence after " + std::to_string(options.max_iter) +
                          " iterations (residual " + std::to_string(res) + ")",
                      options.max_iter, res);
}

/// Dense symmetric matrix wrapper, mostly for tests.
class DenseOperator {
public:
    DenseOperator(std::size_t n, std::vector<double> a) : n_(n), a_(std::move(a)) {}
    std::size_t size() const { return n_; }
    void apply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double s = 0.0;
            for (std::size_t j = 0; j < n_; ++j) s += a_[i * n_ + j] * x[j];
            y[i] = s;
        }
    }
    void diagonal(std::span<double> y) const {
        for (std::size_t i = 0; i < n_; ++i) y[i] = a_[i * n_ + i];
    }

private:
    std::size_t n_;
    std::vector<double> a_;
};

}  // namespace homog
