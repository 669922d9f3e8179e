#pragma once

// Dense random color pattern generation. Patches are filled row-major,
// each conditioned on its already-placed causal neighbors (left, up); a
// candidate is admissible when every channel differs from every causal
// neighbor by at least sqrt(r).
//
// Sampling runs rejection draws first and then, if those exhaust, samples
// uniformly from the exact admissible interval set (same distribution as
// rejection, but total). The best-of-K fallback is reserved for patches
// whose admissible set is empty, which cannot happen for r <= 0.25 with
// at most two causal neighbors.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"
#include "tacflow/io.hpp"
#include "tacflow/rng.hpp"

namespace tacflow::pattern {

struct PatternParams {
    int resolution_px = 700;       // square raster side
    double patch_size_mm = 0.15;   // color patch side, mm
    double randomness = 0.0;       // lower bound on squared channel difference
    double print_area_mm = 35.0;   // printed square side, mm
    uint64_t seed = 0;

    int patch_px() const {
        return int(std::lround(patch_size_mm / print_area_mm * resolution_px));
    }
};

struct GenStats {
    uint64_t draws = 0;                 // rejection-phase candidate draws
    uint64_t rejection_accepts = 0;     // patches placed by a rejection draw
    uint64_t single_nb_draws = 0;       // draws for one-neighbor patches
    uint64_t single_nb_accepts = 0;
    uint64_t interval_placements = 0;   // exact-interval placements after exhaustion
    uint64_t fallback_count = 0;        // best-of-K placements (empty admissible set)
};

struct PatternImage {
    Image pixels;                 // H x W x 3
    PatternParams params;
    int patches_x = 0;
    int patches_y = 0;
    std::vector<std::array<double, 3>> patch_rgb; // row-major patch lattice
    GenStats stats;
};

struct PatternReport {
    double constraint_satisfaction_rate = 0.0; // interior patches, 4-neighbor check
    double min_neighbor_gap = 0.0;             // min squared channel difference anywhere
    uint64_t fallback_count = 0;
};

namespace detail {

struct Interval {
    double lo, hi;
};

// Closed admissible subset of [0,1] for one channel: the complement of
// the union of (n - s, n + s) over neighbor values n.
inline int admissible_intervals(const double* nbs, int n_nbs, double s,
                                Interval out[3]) {
    Interval forbid[2];
    int nf = 0;
    for (int i = 0; i < n_nbs; ++i) {
        double lo = nbs[i] - s, hi = nbs[i] + s;
        if (hi <= 0.0 || lo >= 1.0) continue;
        forbid[nf++] = {std::max(lo, 0.0), std::min(hi, 1.0)};
    }
    if (nf == 2 && forbid[0].lo > forbid[1].lo) std::swap(forbid[0], forbid[1]);
    if (nf == 2 && forbid[1].lo <= forbid[0].hi) {
        forbid[0].hi = std::max(forbid[0].hi, forbid[1].hi);
        nf = 1;
    }
    int na = 0;
    double cur = 0.0;
    for (int i = 0; i < nf; ++i) {
        if (forbid[i].lo > cur) out[na++] = {cur, forbid[i].lo};
        cur = std::max(cur, forbid[i].hi);
    }
    if (cur < 1.0) out[na++] = {cur, 1.0};
    return na;
}

inline double interval_total(const Interval* iv, int n) {
    double t = 0.0;
    for (int i = 0; i < n; ++i) t += iv[i].hi - iv[i].lo;
    return t;
}

// Uniform sample from the union of closed intervals, nudged inward so the
// constraint holds strictly after rounding.
inline double sample_intervals(Rng& rng, const Interval* iv, int n, double total) {
    constexpr double kGuard = 1e-9;
    if (total <= 4.0 * kGuard * n) {
        // (near-)degenerate admissible set: take the first endpoint
        return iv[0].lo;
    }
    double t = rng.uniform() * total;
    for (int i = 0; i < n; ++i) {
        const double len = iv[i].hi - iv[i].lo;
        if (t <= len || i == n - 1) {
            double v = iv[i].lo + clamp(t, 0.0, len);
            const double lo = iv[i].lo + kGuard, hi = iv[i].hi - kGuard;
            if (lo <= hi) v = clamp(v, lo, hi);
            return v;
        }
        t -= len;
    }
    return iv[n - 1].hi;
}

inline double min_sq_gap(const std::array<double, 3>& a, const std::array<double, 3>& b) {
    double m = 1.0;
    for (int c = 0; c < 3; ++c) {
        const double d = a[c] - b[c];
        m = std::min(m, d * d);
    }
    return m;
}

} // namespace detail

inline PatternImage generate_pattern(const PatternParams& params) {
    require(params.randomness >= 0.0 && params.randomness < 1.0,
            "generate_pattern: randomness must be in [0,1)");
    const int side = params.patch_px();
    require(side >= 1, "generate_pattern: patch pixel side rounds below 1");
    require(params.resolution_px >= side, "generate_pattern: resolution below one patch");

    const int res = params.resolution_px;
    const int np = (res + side - 1) / side; // trailing patches cropped at the raster edge
    const double s = std::sqrt(params.randomness);
    constexpr int kRejectionDraws = 64;
    constexpr int kFallbackDraws = 1024;

    PatternImage out;
    out.params = params;
    out.patches_x = np;
    out.patches_y = np;
    out.patch_rgb.assign(size_t(np) * np, {0.0, 0.0, 0.0});

    Rng rng(params.seed);
    double nbs[3][2]; // per channel, up to two causal neighbor values
    detail::Interval iv[3][3];
    int n_iv[3];

    for (int py = 0; py < np; ++py) {
        for (int px = 0; px < np; ++px) {
            auto& dst = out.patch_rgb[size_t(py) * np + px];
            int n_nbs = 0;
            const std::array<double, 3>* left = px > 0 ? &out.patch_rgb[size_t(py) * np + px - 1] : nullptr;
            const std::array<double, 3>* up = py > 0 ? &out.patch_rgb[size_t(py - 1) * np + px] : nullptr;
            for (int c = 0; c < 3; ++c) {
                int k = 0;
                if (left) nbs[c][k++] = (*left)[c];
                if (up) nbs[c][k++] = (*up)[c];
                n_nbs = k;
            }

            if (n_nbs == 0 || s == 0.0) {
                for (int c = 0; c < 3; ++c) dst[c] = rng.uniform();
                out.stats.draws += 1;
                out.stats.rejection_accepts += 1;
                continue;
            }

            bool placed = false;
            for (int attempt = 0; attempt < kRejectionDraws && !placed; ++attempt) {
                std::array<double, 3> cand{rng.uniform(), rng.uniform(), rng.uniform()};
                out.stats.draws += 1;
                if (n_nbs == 1) out.stats.single_nb_draws += 1;
                bool ok = true;
                for (int c = 0; c < 3 && ok; ++c)
                    for (int k = 0; k < n_nbs && ok; ++k) {
                        const double d = cand[c] - nbs[c][k];
                        ok = d * d >= params.randomness;
                    }
                if (ok) {
                    dst = cand;
                    placed = true;
                    out.stats.rejection_accepts += 1;
                    if (n_nbs == 1) out.stats.single_nb_accepts += 1;
                }
            }
            if (placed) continue;

            bool feasible = true;
            for (int c = 0; c < 3; ++c) {
                n_iv[c] = detail::admissible_intervals(nbs[c], n_nbs, s, iv[c]);
                if (n_iv[c] == 0) feasible = false;
            }
            if (feasible) {
                for (int c = 0; c < 3; ++c) {
                    const double total = detail::interval_total(iv[c], n_iv[c]);
                    dst[c] = detail::sample_intervals(rng, iv[c], n_iv[c], total);
                }
                out.stats.interval_placements += 1;
                continue;
            }

            // empty admissible set: best-of-K on the min squared difference
            double best_score = -1.0;
            std::array<double, 3> best{0.0, 0.0, 0.0};
            for (int attempt = 0; attempt < kFallbackDraws; ++attempt) {
                std::array<double, 3> cand{rng.uniform(), rng.uniform(), rng.uniform()};
                double score = 1.0;
                for (int c = 0; c < 3; ++c)
                    for (int k = 0; k < n_nbs; ++k) {
                        const double d = cand[c] - nbs[c][k];
                        score = std::min(score, d * d);
                    }
                if (score > best_score) {
                    best_score = score;
                    best = cand;
                }
            }
            dst = best;
            out.stats.fallback_count += 1;
        }
    }

    out.pixels = Image(res, res, 3);
    for (int y = 0; y < res; ++y) {
        const int py = y / side;
        for (int x = 0; x < res; ++x) {
            const auto& rgb = out.patch_rgb[size_t(py) * np + x / side];
            for (int c = 0; c < 3; ++c) out.pixels.at(y, x, c) = float(rgb[c]);
        }
    }
    return out;
}

// Re-scan against the full 4-neighbor system. Patch colors are re-derived
// from pixels so the check is independent of generator bookkeeping.
inline PatternReport validate_pattern(const PatternImage& image, const PatternParams& params) {
    const int side = params.patch_px();
    require(side >= 1, "validate_pattern: invalid patch size");
    require(image.pixels.w == params.resolution_px && image.pixels.h == params.resolution_px,
            "validate_pattern: image does not match params");

    const int res = params.resolution_px;
    const int np = (res + side - 1) / side;
    std::vector<std::array<double, 3>> patch(size_t(np) * np);
    for (int py = 0; py < np; ++py)
        for (int px = 0; px < np; ++px) {
            const int y = py * side, x = px * side;
            for (int c = 0; c < 3; ++c) patch[size_t(py) * np + px][c] = image.pixels.at(y, x, c);
        }

    PatternReport rep;
    rep.fallback_count = image.stats.fallback_count;
    rep.min_neighbor_gap = 1.0;
    uint64_t interior = 0, satisfied = 0;
    const int dx[4] = {-1, 1, 0, 0};
    const int dy[4] = {0, 0, -1, 1};
    for (int py = 0; py < np; ++py)
        for (int px = 0; px < np; ++px) {
            double m = 1.0;
            int nnb = 0;
            for (int k = 0; k < 4; ++k) {
                const int qx = px + dx[k], qy = py + dy[k];
                if (qx < 0 || qy < 0 || qx >= np || qy >= np) continue;
                ++nnb;
                m = std::min(m, detail::min_sq_gap(patch[size_t(py) * np + px],
                                                   patch[size_t(qy) * np + qx]));
            }
            rep.min_neighbor_gap = std::min(rep.min_neighbor_gap, m);
            if (nnb == 4) {
                ++interior;
                if (m >= params.randomness) ++satisfied;
            }
        }
    rep.constraint_satisfaction_rate = interior == 0 ? 1.0 : double(satisfied) / double(interior);
    return rep;
}

inline io::Manifest pattern_manifest(const PatternImage& p) {
    io::Manifest m;
    m["h"] = std::to_string(p.params.resolution_px);
    m["w"] = std::to_string(p.params.resolution_px);
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", p.params.patch_size_mm);
    m["d"] = buf;
    std::snprintf(buf, sizeof buf, "%.17g", p.params.randomness);
    m["r"] = buf;
    m["seed"] = std::to_string(p.params.seed);
    m["fallback_count"] = std::to_string(p.stats.fallback_count);
    return m;
}

} // namespace tacflow::pattern
