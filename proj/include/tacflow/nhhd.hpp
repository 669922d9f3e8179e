#pragma once

// Natural (boundary-free) Helmholtz-Hodge decomposition of a 2D vector
// field: V = d + r + h with d curl-free, r divergence-free, h the harmonic
// remainder. The scalar potential solves the free-space Poisson equation
// via convolution with the 2D Green's function K = ln(rho)/(2 pi), realized
// as a zero-padded spectral product; no boundary conditions are imposed.

#include <cmath>
#include <complex>
#include <map>
#include <mutex>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/fft.hpp"
#include "tacflow/image.hpp"

namespace tacflow::nhhd {

struct NHHDComponents {
    int w = 0, h = 0;
    Field dx, dy; // curl-free
    Field rx, ry; // divergence-free
    Field hx, hy; // harmonic remainder
};

namespace detail {

// central differences, one-sided at the borders
inline Field ddx(const Field& f) {
    Field out(f.w, f.h);
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            if (f.w == 1)
                out.at(y, x) = 0.0;
            else if (x == 0)
                out.at(y, x) = f.at(y, 1) - f.at(y, 0);
            else if (x == f.w - 1)
                out.at(y, x) = f.at(y, x) - f.at(y, x - 1);
            else
                out.at(y, x) = 0.5 * (f.at(y, x + 1) - f.at(y, x - 1));
        }
    return out;
}

inline Field ddy(const Field& f) {
    Field out(f.w, f.h);
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            if (f.h == 1)
                out.at(y, x) = 0.0;
            else if (y == 0)
                out.at(y, x) = f.at(1, x) - f.at(0, x);
            else if (y == f.h - 1)
                out.at(y, x) = f.at(y, x) - f.at(y - 1, x);
            else
                out.at(y, x) = 0.5 * (f.at(y + 1, x) - f.at(y - 1, x));
        }
    return out;
}

// cell-averaged value of ln(rho)/(2 pi) over the unit cell at the origin
inline double greens_origin() {
    static const double val = [] {
        const int n = 256;
        double acc = 0.0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                const double x = (i + 0.5) / n - 0.5;
                const double y = (j + 0.5) / n - 0.5;
                acc += 0.5 * std::log(x * x + y * y);
            }
        return acc / (n * n) / (2.0 * kPi);
    }();
    return val;
}

// spectral kernel for a padded grid, cached per size
inline const std::vector<cplx>& kernel_fft(size_t ph, size_t pw) {
    static std::map<std::pair<size_t, size_t>, std::vector<cplx>> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find({ph, pw});
    if (it != cache.end()) return it->second;

    std::vector<cplx> K(ph * pw);
    for (size_t py = 0; py < ph; ++py) {
        const double dy = py <= ph / 2 ? double(py) : double(py) - double(ph);
        for (size_t px = 0; px < pw; ++px) {
            const double dx = px <= pw / 2 ? double(px) : double(px) - double(pw);
            K[py * pw + px] = (dx == 0.0 && dy == 0.0)
                                  ? greens_origin()
                                  : std::log(std::hypot(dx, dy)) / (2.0 * kPi);
        }
    }
    fft2_pow2(K, ph, pw, false);
    return cache.emplace(std::make_pair(ph, pw), std::move(K)).first->second;
}

// free-space Poisson solve: laplacian(phi) = rhs
inline Field greens_solve(const Field& rhs) {
    const size_t ph = next_pow2(size_t(rhs.h) * 2);
    const size_t pw = next_pow2(size_t(rhs.w) * 2);
    std::vector<cplx> buf(ph * pw, cplx(0.0, 0.0));
    for (int y = 0; y < rhs.h; ++y)
        for (int x = 0; x < rhs.w; ++x) buf[size_t(y) * pw + x] = rhs.at(y, x);
    fft2_pow2(buf, ph, pw, false);
    const auto& K = kernel_fft(ph, pw);
    for (size_t i = 0; i < buf.size(); ++i) buf[i] *= K[i];
    fft2_pow2(buf, ph, pw, true);
    Field out(rhs.w, rhs.h);
    for (int y = 0; y < rhs.h; ++y)
        for (int x = 0; x < rhs.w; ++x) out.at(y, x) = buf[size_t(y) * pw + x].real();
    return out;
}

} // namespace detail

inline NHHDComponents nhhd(const Field& vx, const Field& vy) {
    require(vx.w == vy.w && vx.h == vy.h, "nhhd: component dimension mismatch");
    NHHDComponents c;
    c.w = vx.w;
    c.h = vx.h;

    const Field div = [&] {
        Field dxx = detail::ddx(vx), dyy = detail::ddy(vy);
        for (size_t i = 0; i < dxx.v.size(); ++i) dxx.v[i] += dyy.v[i];
        return dxx;
    }();
    const Field curl = [&] {
        Field cyx = detail::ddx(vy), cxy = detail::ddy(vx);
        for (size_t i = 0; i < cyx.v.size(); ++i) cyx.v[i] -= cxy.v[i];
        return cyx;
    }();

    const Field phi = detail::greens_solve(div);
    c.dx = detail::ddx(phi);
    c.dy = detail::ddy(phi);

    Field neg_curl = curl;
    for (auto& v : neg_curl.v) v = -v;
    const Field psi = detail::greens_solve(neg_curl);
    c.rx = detail::ddy(psi);
    c.ry = detail::ddx(psi);
    for (auto& v : c.ry.v) v = -v;

    c.hx = Field(c.w, c.h);
    c.hy = Field(c.w, c.h);
    for (size_t i = 0; i < c.hx.v.size(); ++i) {
        c.hx.v[i] = vx.v[i] - c.dx.v[i] - c.rx.v[i];
        c.hy.v[i] = vy.v[i] - c.dy.v[i] - c.ry.v[i];
    }
    return c;
}

inline NHHDComponents nhhd(const FlowField& flw) {
    Field vx(flw.w, flw.h), vy(flw.w, flw.h);
    for (size_t i = 0; i < vx.v.size(); ++i) {
        vx.v[i] = flw.u[i];
        vy.v[i] = flw.v[i];
    }
    return nhhd(vx, vy);
}

struct QuickForce {
    double normal_proxy = 0.0; // sum of |d| over the raster
    Vec2 shear_proxy{0.0, 0.0}; // vector sum of V
};

inline QuickForce quick_total_force(const NHHDComponents& c) {
    QuickForce q;
    for (size_t i = 0; i < c.dx.v.size(); ++i) {
        q.normal_proxy += std::hypot(c.dx.v[i], c.dy.v[i]);
        q.shear_proxy.x += c.dx.v[i] + c.rx.v[i] + c.hx.v[i];
        q.shear_proxy.y += c.dy.v[i] + c.ry.v[i] + c.hy.v[i];
    }
    return q;
}

} // namespace tacflow::nhhd
