#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/parallel.hpp"

namespace tacflow {

// Interleaved float raster; values nominally in [0,1].
struct Image {
    int w = 0;
    int h = 0;
    int c = 0;
    std::vector<float> data;

    Image() = default;
    Image(int width, int height, int channels, float fill = 0.0f)
        : w(width), h(height), c(channels), data(size_t(width) * height * channels, fill) {}

    float& at(int y, int x, int ch = 0) { return data[(size_t(y) * w + x) * c + ch]; }
    float at(int y, int x, int ch = 0) const { return data[(size_t(y) * w + x) * c + ch]; }

    bool same_shape(const Image& o) const { return w == o.w && h == o.h && c == o.c; }

    // Clamped bilinear sample of one channel at (fx, fy).
    float sample(double fx, double fy, int ch) const {
        const double cx = clamp(fx, 0.0, double(w - 1));
        const double cy = clamp(fy, 0.0, double(h - 1));
        int x0 = int(cx), y0 = int(cy);
        if (x0 > w - 2) x0 = w - 2 < 0 ? 0 : w - 2;
        if (y0 > h - 2) y0 = h - 2 < 0 ? 0 : h - 2;
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double ax = cx - x0, ay = cy - y0;
        const double v00 = at(y0, x0, ch), v01 = at(y0, x1, ch);
        const double v10 = at(y1, x0, ch), v11 = at(y1, x1, ch);
        return float(v00 * (1 - ax) * (1 - ay) + v01 * ax * (1 - ay) +
                     v10 * (1 - ax) * ay + v11 * ax * ay);
    }
};

inline Image luminance(const Image& img) {
    if (img.c == 1) return img;
    require(img.c == 3, "luminance: expected 1 or 3 channels");
    Image out(img.w, img.h, 1);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            out.at(y, x) = 0.299f * img.at(y, x, 0) + 0.587f * img.at(y, x, 1) + 0.114f * img.at(y, x, 2);
    return out;
}

// Separable Gaussian blur with replicate borders; radius = round(3 sigma).
inline Image gaussian_blur(const Image& img, double sigma) {
    if (sigma <= 0.0) return img;
    const int n = std::max(1, int(std::lround(3.0 * sigma)));
    std::vector<double> k(size_t(2 * n + 1));
    double sum = 0.0;
    for (int i = -n; i <= n; ++i) {
        k[size_t(i + n)] = std::exp(-0.5 * i * i / (sigma * sigma));
        sum += k[size_t(i + n)];
    }
    for (auto& v : k) v /= sum;

    Image tmp(img.w, img.h, img.c), out(img.w, img.h, img.c);
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int i = -n; i <= n; ++i)
                    acc += k[size_t(i + n)] * img.at(y, clamp(x + i, 0, img.w - 1), ch);
                tmp.at(y, x, ch) = float(acc);
            }
    for (int y = 0; y < img.h; ++y)
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int i = -n; i <= n; ++i)
                    acc += k[size_t(i + n)] * tmp.at(clamp(y + i, 0, img.h - 1), x, ch);
                out.at(y, x, ch) = float(acc);
            }
    return out;
}

// Area-consistent bilinear resize with pixel-center alignment.
inline Image resize_bilinear(const Image& img, int w2, int h2) {
    Image out(w2, h2, img.c);
    for (int y = 0; y < h2; ++y) {
        const double fy = (y + 0.5) * double(img.h) / h2 - 0.5;
        for (int x = 0; x < w2; ++x) {
            const double fx = (x + 0.5) * double(img.w) / w2 - 0.5;
            for (int ch = 0; ch < img.c; ++ch) out.at(y, x, ch) = img.sample(fx, fy, ch);
        }
    }
    return out;
}

// Double-precision scalar field on the raster.
struct Field {
    int w = 0;
    int h = 0;
    std::vector<double> v;

    Field() = default;
    Field(int width, int height, double fill = 0.0)
        : w(width), h(height), v(size_t(width) * height, fill) {}

    double& at(int y, int x) { return v[size_t(y) * w + x]; }
    double at(int y, int x) const { return v[size_t(y) * w + x]; }
};

// Mean over a clipped square window via per-channel integral images.
inline Image box_filter(const Image& img, int radius) {
    const int W = img.w, H = img.h, C = img.c;
    Image out(W, H, C);
    std::vector<double> integral(size_t(W + 1) * (H + 1));
    for (int ch = 0; ch < C; ++ch) {
        for (int y = 0; y < H; ++y) {
            double rowsum = 0.0;
            for (int x = 0; x < W; ++x) {
                rowsum += img.at(y, x, ch);
                integral[size_t(y + 1) * (W + 1) + x + 1] =
                    integral[size_t(y) * (W + 1) + x + 1] + rowsum;
            }
        }
        for (int y = 0; y < H; ++y) {
            const int y0 = std::max(0, y - radius), y1 = std::min(H, y + radius + 1);
            for (int x = 0; x < W; ++x) {
                const int x0 = std::max(0, x - radius), x1 = std::min(W, x + radius + 1);
                const double s = integral[size_t(y1) * (W + 1) + x1] -
                                 integral[size_t(y0) * (W + 1) + x1] -
                                 integral[size_t(y1) * (W + 1) + x0] +
                                 integral[size_t(y0) * (W + 1) + x0];
                out.at(y, x, ch) = float(s / (double(y1 - y0) * (x1 - x0)));
            }
        }
    }
    return out;
}

// Dense displacement field on the reference grid: material at reference
// pixel x appears at x + u(x) in the query frame.
struct FlowField {
    int w = 0;
    int h = 0;
    std::vector<float> u;
    std::vector<float> v;
    std::vector<uint8_t> valid;

    FlowField() = default;
    FlowField(int width, int height)
        : w(width), h(height), u(size_t(width) * height, 0.0f),
          v(size_t(width) * height, 0.0f), valid(size_t(width) * height, 1) {}

    size_t idx(int y, int x) const { return size_t(y) * w + x; }

    // Clamped bilinear sample; ok reports whether all four corners are valid.
    Vec2 sample(double fx, double fy, bool* ok = nullptr) const {
        const double cx = clamp(fx, 0.0, double(w - 1));
        const double cy = clamp(fy, 0.0, double(h - 1));
        int x0 = int(cx), y0 = int(cy);
        if (x0 > w - 2) x0 = w - 2 < 0 ? 0 : w - 2;
        if (y0 > h - 2) y0 = h - 2 < 0 ? 0 : h - 2;
        const int x1 = std::min(x0 + 1, w - 1);
        const int y1 = std::min(y0 + 1, h - 1);
        const double ax = cx - x0, ay = cy - y0;
        const double w00 = (1 - ax) * (1 - ay), w01 = ax * (1 - ay);
        const double w10 = (1 - ax) * ay, w11 = ax * ay;
        Vec2 r;
        r.x = w00 * u[idx(y0, x0)] + w01 * u[idx(y0, x1)] + w10 * u[idx(y1, x0)] + w11 * u[idx(y1, x1)];
        r.y = w00 * v[idx(y0, x0)] + w01 * v[idx(y0, x1)] + w10 * v[idx(y1, x0)] + w11 * v[idx(y1, x1)];
        if (ok)
            *ok = valid[idx(y0, x0)] && valid[idx(y0, x1)] && valid[idx(y1, x0)] && valid[idx(y1, x1)];
        return r;
    }
};

} // namespace tacflow
