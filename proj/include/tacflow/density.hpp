#pragma once

// Contact depth from flow via Gaussian density splatting. Every valid
// source pixel deposits a unit-mass isotropic Gaussian at its displaced
// position; indentation spreads mass apart, so depth is read from the
// density drop against the zero-flow baseline.
//
// Splats use a separable truncated kernel renormalized per splat, which
// makes total deposited mass exactly one per source regardless of the
// fractional center, and keeps the truncated result within the kernel's
// tail mass of the untruncated sum.

#include <cmath>
#include <cstdint>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"

namespace tacflow::depth {

struct DensityParams {
    double sigma = 3.0;            // px, on the full-resolution raster
    double kernel_truncation = 3.0; // kernel support radius in sigmas
    int downsample_stride = 2;      // source lattice and splat grid stride

    void check() const {
        require(sigma > 0.0, "DensityParams: sigma > 0");
        require(kernel_truncation > 0.0, "DensityParams: truncation > 0");
        require(downsample_stride >= 1, "DensityParams: stride >= 1");
    }
};

struct DensityMap {
    Field density;        // accumulated density, upsampled to the raster
    Field relative_depth; // baseline - density
    Field d_p;            // max(relative_depth, 0)
    double total_mass = 0.0;  // sum over the padded splat buffer
    uint64_t n_sources = 0;   // source pixels that splatted
};

namespace detail {

struct SplatGrid {
    int gw = 0, gh = 0, pad = 0;
    std::vector<double> buf; // (gh + 2 pad) x (gw + 2 pad)

    double& at(int gy, int gx) { return buf[size_t(gy + pad) * (gw + 2 * pad) + gx + pad]; }
};

// Deposit a unit-mass separable Gaussian centered at (cx, cy) on the grid.
inline void splat_one(SplatGrid& g, double cx, double cy, double sigma, double trunc) {
    const double rad = trunc * sigma;
    const int x0 = int(std::ceil(cx - rad)), x1 = int(std::floor(cx + rad));
    const int y0 = int(std::ceil(cy - rad)), y1 = int(std::floor(cy + rad));
    if (x1 < x0 || y1 < y0) return;
    const int nx = x1 - x0 + 1, ny = y1 - y0 + 1;
    double wx[64], wy[64];
    if (nx > 64 || ny > 64) fail("splat_one: kernel support too large");
    const double inv2s2 = 1.0 / (2.0 * sigma * sigma);
    double sx = 0.0, sy = 0.0;
    for (int i = 0; i < nx; ++i) {
        const double d = (x0 + i) - cx;
        wx[i] = std::exp(-d * d * inv2s2);
        sx += wx[i];
    }
    for (int j = 0; j < ny; ++j) {
        const double d = (y0 + j) - cy;
        wy[j] = std::exp(-d * d * inv2s2);
        sy += wy[j];
    }
    const double norm = 1.0 / (sx * sy);
    for (int j = 0; j < ny; ++j) {
        const int gy = y0 + j;
        if (gy < -g.pad || gy >= g.gh + g.pad) continue;
        const double wyn = wy[j] * norm;
        for (int i = 0; i < nx; ++i) {
            const int gx = x0 + i;
            if (gx < -g.pad || gx >= g.gw + g.pad) continue;
            g.at(gy, gx) += wx[i] * wyn;
        }
    }
}

struct SplatResult {
    Field coarse;
    double total_mass = 0.0;
    uint64_t n_sources = 0;
};

// Splat the strided source lattice displaced by the flow (or by nothing,
// for the baseline). Grid coordinates are raster coordinates / stride.
inline SplatResult splat(const FlowField* flw, int W, int H, const std::vector<uint8_t>* valid,
                         const DensityParams& p) {
    const int s = p.downsample_stride;
    SplatGrid g;
    g.gw = (W + s - 1) / s;
    g.gh = (H + s - 1) / s;
    const double sg = p.sigma / s;

    double max_disp = 0.0;
    if (flw)
        for (size_t i = 0; i < flw->u.size(); ++i) {
            max_disp = std::max(max_disp, std::fabs(double(flw->u[i])));
            max_disp = std::max(max_disp, std::fabs(double(flw->v[i])));
        }
    g.pad = int(std::ceil(p.kernel_truncation * sg + max_disp / s)) + 2;
    g.buf.assign(size_t(g.gh + 2 * g.pad) * (g.gw + 2 * g.pad), 0.0);

    SplatResult r;
    for (int y = 0; y < H; y += s)
        for (int x = 0; x < W; x += s) {
            const size_t i = size_t(y) * W + x;
            if (valid && !(*valid)[i]) continue;
            double cx = x, cy = y;
            if (flw) {
                cx += flw->u[i];
                cy += flw->v[i];
            }
            splat_one(g, cx / s, cy / s, sg, p.kernel_truncation);
            r.n_sources += 1;
        }
    for (double v : g.buf) r.total_mass += v;

    r.coarse = Field(g.gw, g.gh);
    for (int y = 0; y < g.gh; ++y)
        for (int x = 0; x < g.gw; ++x) r.coarse.at(y, x) = g.at(y, x);
    return r;
}

inline Field upsample(const Field& f, int W, int H, int s) {
    if (s == 1 && f.w == W && f.h == H) return f;
    Field out(W, H);
    for (int y = 0; y < H; ++y) {
        const double fy = clamp(double(y) / s, 0.0, double(f.h - 1));
        const int y0 = std::min(int(fy), f.h - 2 < 0 ? 0 : f.h - 2);
        const int y1 = std::min(y0 + 1, f.h - 1);
        const double ay = fy - y0;
        for (int x = 0; x < W; ++x) {
            const double fx = clamp(double(x) / s, 0.0, double(f.w - 1));
            const int x0 = std::min(int(fx), f.w - 2 < 0 ? 0 : f.w - 2);
            const int x1 = std::min(x0 + 1, f.w - 1);
            const double ax = fx - x0;
            out.at(y, x) = f.at(y0, x0) * (1 - ax) * (1 - ay) + f.at(y0, x1) * ax * (1 - ay) +
                           f.at(y1, x0) * (1 - ax) * ay + f.at(y1, x1) * ax * ay;
        }
    }
    return out;
}

struct BaselineKey {
    int w, h, stride;
    double sigma, trunc;
    bool operator<(const BaselineKey& o) const {
        return std::tie(w, h, stride, sigma, trunc) <
               std::tie(o.w, o.h, o.stride, o.sigma, o.trunc);
    }
};

// zero-flow baseline, cached for the all-valid case
inline const Field& baseline(int W, int H, const DensityParams& p) {
    static std::map<BaselineKey, Field> cache;
    static std::mutex mu;
    std::lock_guard<std::mutex> lock(mu);
    const BaselineKey key{W, H, p.downsample_stride, p.sigma, p.kernel_truncation};
    auto it = cache.find(key);
    if (it == cache.end())
        it = cache.emplace(key, splat(nullptr, W, H, nullptr, p).coarse).first;
    return it->second;
}

} // namespace detail

inline DensityMap gaussian_density(const FlowField& flw, const DensityParams& params) {
    params.check();
    const int W = flw.w, H = flw.h;
    bool all_valid = true;
    for (uint8_t v : flw.valid)
        if (!v) {
            all_valid = false;
            break;
        }

    const detail::SplatResult main =
        detail::splat(&flw, W, H, all_valid ? nullptr : &flw.valid, params);
    Field base;
    if (all_valid) {
        base = detail::baseline(W, H, params);
    } else {
        DensityParams p = params;
        base = detail::splat(nullptr, W, H, &flw.valid, p).coarse;
    }

    DensityMap out;
    out.total_mass = main.total_mass;
    out.n_sources = main.n_sources;
    Field rel(main.coarse.w, main.coarse.h);
    for (size_t i = 0; i < rel.v.size(); ++i) rel.v[i] = base.v[i] - main.coarse.v[i];
    out.density = detail::upsample(main.coarse, W, H, params.downsample_stride);
    out.relative_depth = detail::upsample(rel, W, H, params.downsample_stride);
    out.d_p = out.relative_depth;
    for (auto& v : out.d_p.v) v = std::max(v, 0.0);
    return out;
}

// He-style guided filter on a scalar field with an image guide.
inline Field guided_filter_field(const Field& input, const Image& guide_in, int radius, double eps) {
    require(radius >= 1, "guided_filter: radius >= 1");
    require(eps > 0.0, "guided_filter: eps > 0");
    require(guide_in.w == input.w && guide_in.h == input.h, "guided_filter: guide dimension mismatch");
    const Image guide = luminance(guide_in);
    const int W = input.w, H = input.h;

    Image packed(W, H, 4); // I, p, I*p, I*I
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const float I = guide.at(y, x);
            const float p = float(input.at(y, x));
            packed.at(y, x, 0) = I;
            packed.at(y, x, 1) = p;
            packed.at(y, x, 2) = I * p;
            packed.at(y, x, 3) = I * I;
        }
    const Image m = box_filter(packed, radius);

    Image ab(W, H, 2);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double mean_I = m.at(y, x, 0), mean_p = m.at(y, x, 1);
            const double var_I = m.at(y, x, 3) - mean_I * mean_I;
            const double cov_Ip = m.at(y, x, 2) - mean_I * mean_p;
            const double a = cov_Ip / (var_I + eps);
            ab.at(y, x, 0) = float(a);
            ab.at(y, x, 1) = float(mean_p - a * mean_I);
        }
    const Image mab = box_filter(ab, radius);

    Field out(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x)
            out.at(y, x) = double(mab.at(y, x, 0)) * guide.at(y, x) + mab.at(y, x, 1);
    return out;
}

inline DensityMap guided_filter(const DensityMap& input, const Image& guide, int radius, double eps) {
    DensityMap out = input;
    out.relative_depth = guided_filter_field(input.relative_depth, guide, radius, eps);
    out.d_p = out.relative_depth;
    for (auto& v : out.d_p.v) v = std::max(v, 0.0);
    return out;
}

inline DensityMap reconstruct_surface(const FlowField& flw, const Image& frame,
                                      const DensityParams& params, int gf_radius = 8,
                                      double gf_eps = 1e-3) {
    DensityMap dm = gaussian_density(flw, params);
    return guided_filter(dm, frame, gf_radius, gf_eps);
}

// 8-bit hot-map rendering of a field for visual inspection.
inline Image heat_map(const Field& f) {
    double lo = f.v.empty() ? 0.0 : f.v[0], hi = lo;
    for (double v : f.v) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi - lo > 1e-30 ? hi - lo : 1.0;
    Image img(f.w, f.h, 3);
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            const double t = (f.at(y, x) - lo) / span;
            img.at(y, x, 0) = float(clamp(t * 3.0, 0.0, 1.0));
            img.at(y, x, 1) = float(clamp(t * 3.0 - 1.0, 0.0, 1.0));
            img.at(y, x, 2) = float(clamp(t * 3.0 - 2.0, 0.0, 1.0));
        }
    return img;
}

} // namespace tacflow::depth
