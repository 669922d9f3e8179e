#pragma once

// Dense optical flow via local quadratic polynomial expansion, estimated
// coarse-to-fine, plus the adaptive referencing tracker and the mean marker
// error metric.
//
// Per pixel both images are approximated by f(p + o) ~ c + b.o + o^T M o
// over a Gaussian-weighted neighborhood. For a displacement d the expansion
// coefficients of the two images relate by b1 = b0 - 2 M d, which gives the
// per-pixel constraint Mavg d = db with db = -(b1 - b0)/2. Constraints are
// aggregated over a box window and solved as a 2x2 system.

#include <cmath>
#include <cstdint>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"
#include "tacflow/linalg.hpp"
#include "tacflow/parallel.hpp"

namespace tacflow::flow {

struct FlowParams {
    int pyramid_levels = 4;
    double pyramid_scale = 0.5;
    int window_size = 21;          // box aggregation window, odd
    int iterations_per_level = 3;
    int poly_neighborhood = 7;     // expansion window side, odd
    double poly_sigma = 1.5;

    void check() const {
        require(pyramid_levels >= 1, "FlowParams: pyramid_levels >= 1");
        require(pyramid_scale > 0.0 && pyramid_scale < 1.0, "FlowParams: scale in (0,1)");
        require(window_size >= 3 && window_size % 2 == 1, "FlowParams: window odd >= 3");
        require(iterations_per_level >= 1, "FlowParams: iterations >= 1");
        require(poly_neighborhood >= 3 && poly_neighborhood % 2 == 1, "FlowParams: poly window odd >= 3");
        require(poly_sigma > 0.0, "FlowParams: poly_sigma > 0");
    }
};

namespace detail {

// Quadratic expansion planes per pixel: (bx, by, mxx, myy, mxy) where the
// local model is c + bx x + by y + mxx x^2 + myy y^2 + mxy x y.
inline Image poly_expansion(const Image& img, int poly_n, double sigma) {
    const int n = poly_n / 2;
    const int W = img.w, H = img.h;
    std::vector<double> g(size_t(2 * n + 1)), xg(g.size()), xxg(g.size());
    double gsum = 0.0;
    for (int i = -n; i <= n; ++i) gsum += std::exp(-0.5 * i * i / (sigma * sigma));
    double s2 = 0.0, s4 = 0.0;
    for (int i = -n; i <= n; ++i) {
        const double w = std::exp(-0.5 * i * i / (sigma * sigma)) / gsum;
        g[size_t(i + n)] = w;
        xg[size_t(i + n)] = w * i;
        xxg[size_t(i + n)] = w * i * i;
        s2 += w * i * i;
        s4 += w * i * i * i * i;
    }
    const double inv_s2 = 1.0 / s2;
    const double inv_s22 = 1.0 / (s2 * s2);
    const double inv_det = 1.0 / (s4 - s2 * s2);

    // horizontal pass: t0 = g*f, t1 = xg*f, t2 = xxg*f (replicate borders)
    Image tmp(W, H, 3);
    parallel_rows(H, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < W; ++x) {
                double a0 = 0.0, a1 = 0.0, a2 = 0.0;
                for (int i = -n; i <= n; ++i) {
                    const double v = img.at(y, clamp(x + i, 0, W - 1));
                    a0 += g[size_t(i + n)] * v;
                    a1 += xg[size_t(i + n)] * v;
                    a2 += xxg[size_t(i + n)] * v;
                }
                tmp.at(y, x, 0) = float(a0);
                tmp.at(y, x, 1) = float(a1);
                tmp.at(y, x, 2) = float(a2);
            }
    });

    Image out(W, H, 5);
    parallel_rows(H, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < W; ++x) {
                double m00 = 0.0, m01 = 0.0, m02 = 0.0, m10 = 0.0, m11 = 0.0, m20 = 0.0;
                for (int i = -n; i <= n; ++i) {
                    const int yy = clamp(y + i, 0, H - 1);
                    const double t0 = tmp.at(yy, x, 0);
                    const double t1 = tmp.at(yy, x, 1);
                    const double t2 = tmp.at(yy, x, 2);
                    m00 += g[size_t(i + n)] * t0;
                    m01 += xg[size_t(i + n)] * t0;
                    m02 += xxg[size_t(i + n)] * t0;
                    m10 += g[size_t(i + n)] * t1;
                    m11 += xg[size_t(i + n)] * t1;
                    m20 += g[size_t(i + n)] * t2;
                }
                out.at(y, x, 0) = float(m10 * inv_s2);                      // bx
                out.at(y, x, 1) = float(m01 * inv_s2);                      // by
                const double diff = (m20 - m02) * inv_det;                  // mxx - myy
                const double ssum = (m20 + m02 - 2.0 * s2 * m00) * inv_det; // mxx + myy
                out.at(y, x, 2) = float(0.5 * (ssum + diff));               // mxx
                out.at(y, x, 3) = float(0.5 * (ssum - diff));               // myy
                out.at(y, x, 4) = float(m11 * inv_s22);                     // mxy
            }
    });
    return out;
}

inline void flow_iteration(const Image& E0, const Image& E1, FlowField& flw,
                           int window, bool mark_valid) {
    const int W = E0.w, H = E0.h;
    Image acc(W, H, 5); // G11, G12, G22, h1, h2
    parallel_rows(H, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < W; ++x) {
                const size_t i = flw.idx(y, x);
                const double fx = flw.u[i], fy = flw.v[i];
                const double bx0 = E0.at(y, x, 0), by0 = E0.at(y, x, 1);
                const double mxx0 = E0.at(y, x, 2), myy0 = E0.at(y, x, 3), mxy0 = E0.at(y, x, 4);
                const double qx = x + fx, qy = y + fy;
                const double bx1 = E1.sample(qx, qy, 0), by1 = E1.sample(qx, qy, 1);
                const double mxx1 = E1.sample(qx, qy, 2), myy1 = E1.sample(qx, qy, 3);
                const double mxy1 = E1.sample(qx, qy, 4);

                const double a11 = 0.5 * (mxx0 + mxx1);
                const double a22 = 0.5 * (myy0 + myy1);
                const double a12 = 0.25 * (mxy0 + mxy1); // half the averaged cross term
                double dbx = -0.5 * (bx1 - bx0) + a11 * fx + a12 * fy;
                double dby = -0.5 * (by1 - by0) + a12 * fx + a22 * fy;

                acc.at(y, x, 0) = float(a11 * a11 + a12 * a12);
                acc.at(y, x, 1) = float((a11 + a22) * a12);
                acc.at(y, x, 2) = float(a22 * a22 + a12 * a12);
                acc.at(y, x, 3) = float(a11 * dbx + a12 * dby);
                acc.at(y, x, 4) = float(a12 * dbx + a22 * dby);
            }
    });
    const Image agg = box_filter(acc, window / 2);
    parallel_rows(H, [&](int y0, int y1) {
        for (int y = y0; y < y1; ++y)
            for (int x = 0; x < W; ++x) {
                const size_t i = flw.idx(y, x);
                double dx = 0.0, dy = 0.0;
                const bool ok = solve_sym2x2(agg.at(y, x, 0), agg.at(y, x, 1), agg.at(y, x, 2),
                                             agg.at(y, x, 3), agg.at(y, x, 4), dx, dy);
                flw.u[i] = float(dx);
                flw.v[i] = float(dy);
                if (mark_valid) flw.valid[i] = ok ? 1 : 0;
            }
    });
}

inline FlowField resize_flow(const FlowField& f, int w2, int h2) {
    FlowField out(w2, h2);
    const double sx = double(w2) / f.w, sy = double(h2) / f.h;
    for (int y = 0; y < h2; ++y) {
        const double fy = (y + 0.5) / sy - 0.5;
        for (int x = 0; x < w2; ++x) {
            const double fx = (x + 0.5) / sx - 0.5;
            const Vec2 u = f.sample(fx, fy);
            out.u[out.idx(y, x)] = float(u.x * sx);
            out.v[out.idx(y, x)] = float(u.y * sy);
        }
    }
    return out;
}

} // namespace detail

inline FlowField dense_flow(const Image& reference, const Image& query, const FlowParams& params) {
    params.check();
    require(reference.w == query.w && reference.h == query.h,
            "dense_flow: dimension mismatch");
    const Image ref = luminance(reference);
    const Image qry = luminance(query);

    // pyramid sizes: stop once further halving would leave too little support
    std::vector<std::pair<int, int>> sizes{{ref.w, ref.h}};
    for (int k = 1; k < params.pyramid_levels; ++k) {
        const int w2 = int(std::lround(sizes.back().first * params.pyramid_scale));
        const int h2 = int(std::lround(sizes.back().second * params.pyramid_scale));
        if (w2 < 12 || h2 < 12) break;
        sizes.emplace_back(w2, h2);
    }

    std::vector<Image> pr{ref}, pq{qry};
    const double blur_sigma = 0.5 / params.pyramid_scale;
    for (size_t k = 1; k < sizes.size(); ++k) {
        pr.push_back(resize_bilinear(gaussian_blur(pr[k - 1], blur_sigma), sizes[k].first, sizes[k].second));
        pq.push_back(resize_bilinear(gaussian_blur(pq[k - 1], blur_sigma), sizes[k].first, sizes[k].second));
    }

    FlowField flw;
    for (size_t k = sizes.size(); k-- > 0;) {
        const int W = sizes[k].first, H = sizes[k].second;
        flw = (flw.w == 0) ? FlowField(W, H) : detail::resize_flow(flw, W, H);
        const Image E0 = detail::poly_expansion(pr[k], params.poly_neighborhood, params.poly_sigma);
        const Image E1 = detail::poly_expansion(pq[k], params.poly_neighborhood, params.poly_sigma);
        for (int it = 0; it < params.iterations_per_level; ++it) {
            const bool last = k == 0 && it == params.iterations_per_level - 1;
            detail::flow_iteration(E0, E1, flw, params.window_size, last);
        }
    }
    return flw;
}

// Cumulative tracker with photometric rebase. The cumulative field lives on
// the initial-frame grid: material at initial pixel X sits at X + total(X)
// in the newest frame. On each step the fresh pair flow f (reference ->
// frame) is composed as total'(X) = total_ref(X) + f(X + total_ref(X)).
struct AdaptiveTracker {
    Image reference;        // luminance of current reference
    FlowField total;        // initial -> current reference
    double rebase_threshold = 6.0 / 255.0;
    int rebase_count = 0;

    AdaptiveTracker() = default;
    AdaptiveTracker(const Image& initial_frame, double threshold = 6.0 / 255.0)
        : reference(luminance(initial_frame)), total(initial_frame.w, initial_frame.h),
          rebase_threshold(threshold) {}
};

inline FlowField adaptive_step(AdaptiveTracker& state, const Image& frame, const FlowParams& params) {
    require(frame.w == state.reference.w && frame.h == state.reference.h,
            "adaptive_step: frame dimension mismatch");
    const Image lum = luminance(frame);
    const FlowField f = dense_flow(state.reference, lum, params);
    const int W = lum.w, H = lum.h;

    FlowField cum(W, H);
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const size_t i = cum.idx(y, x);
            const double px = x + state.total.u[i];
            const double py = y + state.total.v[i];
            bool ok = false;
            const Vec2 fv = f.sample(px, py, &ok);
            const bool inb = px >= 0.0 && px <= W - 1.0 && py >= 0.0 && py <= H - 1.0;
            cum.u[i] = state.total.u[i] + float(fv.x);
            cum.v[i] = state.total.v[i] + float(fv.y);
            cum.valid[i] = (state.total.valid[i] && ok && inb) ? 1 : 0;
        }

    // photometric residual of the pair flow: frame inverse-warped onto the
    // reference grid vs the reference
    double err_sum = 0.0;
    uint64_t err_n = 0;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const size_t i = f.idx(y, x);
            if (!f.valid[i]) continue;
            const double qx = x + f.u[i], qy = y + f.v[i];
            if (qx < 0.0 || qx > W - 1.0 || qy < 0.0 || qy > H - 1.0) continue;
            err_sum += std::fabs(lum.sample(qx, qy, 0) - state.reference.at(y, x));
            ++err_n;
        }
    const double photo_err = err_n ? err_sum / double(err_n) : 0.0;
    if (photo_err > state.rebase_threshold) {
        state.reference = lum;
        state.total = cum;
        state.rebase_count += 1;
    }
    return cum;
}

struct TrackingError {
    double delta_bar = 0.0; // mean marker endpoint error, px
    int excluded = 0;       // markers outside the valid region
};

inline TrackingError tracking_error(const FlowField& flw, const std::vector<Vec2>& marker_pos,
                                    const std::vector<Vec2>& marker_disp) {
    require(marker_pos.size() == marker_disp.size(), "tracking_error: marker size mismatch");
    TrackingError r;
    double sum = 0.0;
    int n = 0;
    for (size_t i = 0; i < marker_pos.size(); ++i) {
        bool ok = false;
        const Vec2 u = flw.sample(marker_pos[i].x, marker_pos[i].y, &ok);
        if (!ok) {
            r.excluded += 1;
            continue;
        }
        sum += std::hypot(u.x - marker_disp[i].x, u.y - marker_disp[i].y);
        ++n;
    }
    r.delta_bar = n ? sum / n : 0.0;
    return r;
}

} // namespace tacflow::flow
