#pragma once

#include <cmath>
#include <cstddef>
#include <vector>

#include "tacflow/common.hpp"

namespace tacflow {

// Row-major dense matrix, sized for small regression problems.
struct Mat {
    size_t rows = 0;
    size_t cols = 0;
    std::vector<double> a;

    Mat() = default;
    Mat(size_t r, size_t c) : rows(r), cols(c), a(r * c, 0.0) {}

    double& operator()(size_t r, size_t c) { return a[r * cols + c]; }
    double operator()(size_t r, size_t c) const { return a[r * cols + c]; }
};

// Least squares min ||A x - b|| via Householder QR. Requires rows >= cols
// and full column rank; returns the coefficient vector of length cols.
inline std::vector<double> lstsq(Mat A, std::vector<double> b) {
    const size_t m = A.rows, n = A.cols;
    require(m >= n, "lstsq: need rows >= cols");
    require(b.size() == m, "lstsq: rhs size mismatch");

    double col_scale = 0.0;
    for (size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (size_t i = 0; i < m; ++i) norm += A(i, k) * A(i, k);
        col_scale = std::max(col_scale, std::sqrt(norm));
    }

    for (size_t k = 0; k < n; ++k) {
        double norm = 0.0;
        for (size_t i = k; i < m; ++i) norm += A(i, k) * A(i, k);
        norm = std::sqrt(norm);
        if (norm <= 1e-12 * col_scale) fail("lstsq: rank deficient column");
        if (A(k, k) > 0) norm = -norm;

        // Householder vector stored in column k below the diagonal
        const double vk = A(k, k) - norm;
        A(k, k) = norm;
        std::vector<double> v(m - k);
        v[0] = vk;
        for (size_t i = k + 1; i < m; ++i) v[i - k] = A(i, k);
        double vtv = 0.0;
        for (double t : v) vtv += t * t;
        if (vtv == 0.0) continue;

        for (size_t j = k + 1; j < n; ++j) {
            double dot = v[0] * A(k, j);
            for (size_t i = k + 1; i < m; ++i) dot += v[i - k] * A(i, j);
            const double f = 2.0 * dot / vtv;
            A(k, j) -= f * v[0];
            for (size_t i = k + 1; i < m; ++i) A(i, j) -= f * v[i - k];
        }
        double dotb = v[0] * b[k];
        for (size_t i = k + 1; i < m; ++i) dotb += v[i - k] * b[i];
        const double fb = 2.0 * dotb / vtv;
        b[k] -= fb * v[0];
        for (size_t i = k + 1; i < m; ++i) b[i] -= fb * v[i - k];
    }

    std::vector<double> x(n, 0.0);
    for (size_t k = n; k-- > 0;) {
        double s = b[k];
        for (size_t j = k + 1; j < n; ++j) s -= A(k, j) * x[j];
        x[k] = s / A(k, k);
    }
    return x;
}

// Solve the symmetric positive system [g11 g12; g12 g22] d = (h1, h2).
// Returns false (d set to zero) when the system is near singular.
inline bool solve_sym2x2(double g11, double g12, double g22, double h1, double h2,
                         double& dx, double& dy, double rel_eps = 1e-12) {
    const double det = g11 * g22 - g12 * g12;
    const double tr = g11 + g22;
    if (!(det > rel_eps * tr * tr) || !(det > 0.0)) {
        dx = 0.0;
        dy = 0.0;
        return false;
    }
    const double inv = 1.0 / det;
    dx = (g22 * h1 - g12 * h2) * inv;
    dy = (g11 * h2 - g12 * h1) * inv;
    return true;
}

} // namespace tacflow
