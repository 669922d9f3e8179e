#pragma once

// Iterative radix-2 complex FFT for power-of-two sizes, plus a 2D wrapper.
// Only used for spectral convolution on zero-padded grids, so the
// power-of-two restriction costs nothing.

#include <complex>
#include <vector>

#include "tacflow/common.hpp"

namespace tacflow {

using cplx = std::complex<double>;

inline bool is_pow2(size_t n) { return n != 0 && (n & (n - 1)) == 0; }

inline size_t next_pow2(size_t n) {
    size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

// In-place FFT; inverse includes the 1/n scale.
inline void fft_pow2(std::vector<cplx>& a, bool inverse) {
    const size_t n = a.size();
    require(is_pow2(n), "fft: size must be a power of two");
    if (n == 1) return;

    for (size_t i = 1, j = 0; i < n; ++i) {
        size_t bit = n >> 1;
        for (; j & bit; bit >>= 1) j ^= bit;
        j ^= bit;
        if (i < j) std::swap(a[i], a[j]);
    }

    for (size_t len = 2; len <= n; len <<= 1) {
        const double ang = (inverse ? 2.0 : -2.0) * kPi / double(len);
        const cplx wl(std::cos(ang), std::sin(ang));
        for (size_t i = 0; i < n; i += len) {
            cplx w(1.0, 0.0);
            for (size_t k = 0; k < len / 2; ++k) {
                const cplx u = a[i + k];
                const cplx v = a[i + k + len / 2] * w;
                a[i + k] = u + v;
                a[i + k + len / 2] = u - v;
                w *= wl;
            }
        }
    }
    if (inverse) {
        const double s = 1.0 / double(n);
        for (auto& z : a) z *= s;
    }
}

// In-place 2D FFT on a row-major h x w grid (both powers of two).
inline void fft2_pow2(std::vector<cplx>& a, size_t h, size_t w, bool inverse) {
    require(a.size() == h * w, "fft2: size mismatch");
    std::vector<cplx> tmp;
    for (size_t y = 0; y < h; ++y) {
        tmp.assign(a.begin() + y * w, a.begin() + (y + 1) * w);
        fft_pow2(tmp, inverse);
        std::copy(tmp.begin(), tmp.end(), a.begin() + y * w);
    }
    tmp.resize(h);
    for (size_t x = 0; x < w; ++x) {
        for (size_t y = 0; y < h; ++y) tmp[y] = a[y * w + x];
        fft_pow2(tmp, inverse);
        for (size_t y = 0; y < h; ++y) a[y * w + x] = tmp[y];
    }
}

} // namespace tacflow
