#pragma once

// Indentation simulator: parametric ground-truth displacement fields on the
// camera raster, plus deformed-frame rendering.
//
// Contact model: each indenter part is a signed distance function phi(p) in
// mm (negative inside the contact patch). With t = 1 - clamp(-phi/band, 0, 1)
// the in-contact displacement is
//   radial:  peak_px * 3.49385 * t (1 - t^2)^2  along grad(phi)
//   shear:   shear_px * (1 - t^2)^2             along the shear offset
// Both vanish with zero slope at the rim (C1 across the contact boundary);
// the 3.49385 factor normalizes the radial profile to unit peak. For a
// circular contact of radius a with band = a this reduces to the classic
// bump (1 - (rho/a)^2)^2 scaled by the radial ramp rho/a.

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"
#include "tacflow/io.hpp"
#include "tacflow/rng.hpp"

namespace tacflow::sim {

inline constexpr double kRadialPeakNorm = 3.4938562148434216; // 1 / max_t t(1-t^2)^2

enum class Shape { sphere, multi_dot, edge, ellipsoid, hex_prism, star };

inline const char* shape_name(Shape s) {
    switch (s) {
        case Shape::sphere: return "sphere";
        case Shape::multi_dot: return "multi_dot";
        case Shape::edge: return "edge";
        case Shape::ellipsoid: return "ellipsoid";
        case Shape::hex_prism: return "hex_prism";
        case Shape::star: return "star";
    }
    return "?";
}

inline Shape shape_from_name(const std::string& n) {
    if (n == "sphere") return Shape::sphere;
    if (n == "multi_dot") return Shape::multi_dot;
    if (n == "edge") return Shape::edge;
    if (n == "ellipsoid") return Shape::ellipsoid;
    if (n == "hex_prism") return Shape::hex_prism;
    if (n == "star") return Shape::star;
    fail("unknown indenter shape: " + n);
}

struct IndenterScenario {
    Shape shape = Shape::sphere;
    double diameter_mm = 15.0;      // sphere diameter / edge length
    int dot_count = 4;              // multi_dot only
    double dot_spacing_mm = 6.0;    // multi_dot only
    Vec2 center_mm{17.5, 17.5};
    double press_depth_mm = 1.0;
    Vec2 shear_offset_mm{0.0, 0.0};
    double contact_radius_mm = 0.0; // 0 = derive from shape geometry
};

struct CameraModel {
    int width = 798;
    int height = 586;
    double px_per_mm = 798.0 / 36.0;
    double noise_sigma = 0.0;   // additive Gaussian, [0,1] units
    double blur_sigma = 0.0;    // pre-capture blur, px
    double gain = 1.0;
    double lateral_gain = 0.08; // peak lateral surface motion per mm of press
    double shear_gain = 0.15;   // surface stick fraction of indenter shear
};

struct GroundTruthFlow {
    FlowField field;                  // px displacement on the raster
    std::vector<Vec2> marker_pos;     // 169 integer-px sample positions
    std::vector<Vec2> marker_disp;    // field sampled at marker_pos
};

namespace detail {

// contact patch radius in mm for one part
inline double part_radius(const IndenterScenario& sc) {
    if (sc.contact_radius_mm > 0.0) return sc.contact_radius_mm;
    switch (sc.shape) {
        case Shape::sphere: {
            const double h = std::min(sc.press_depth_mm, sc.diameter_mm * 0.5);
            const double a = std::sqrt(std::max(h * (sc.diameter_mm - h), 1e-12));
            return a;
        }
        case Shape::multi_dot: return 1.5;
        default: return sc.diameter_mm * 0.5;
    }
}

struct Part {
    Shape shape;
    Vec2 center_mm;
    double a;        // patch scale, mm
    double half_len; // edge only
    double ell_ratio = 0.6;
};

inline double sdf(const Part& part, Vec2 p) {
    const double x = p.x - part.center_mm.x;
    const double y = p.y - part.center_mm.y;
    switch (part.shape) {
        case Shape::sphere:
        case Shape::multi_dot:
            return std::hypot(x, y) - part.a;
        case Shape::edge: {
            const double qx = std::max(std::fabs(x) - part.half_len, 0.0);
            return std::hypot(qx, y) - part.a;
        }
        case Shape::ellipsoid: {
            const double k = std::hypot(x / 1.0, y / part.ell_ratio);
            return (k - part.a) * part.ell_ratio;
        }
        case Shape::hex_prism: {
            const double ax = std::fabs(x), ay = std::fabs(y);
            const double c = 0.8660254037844386;
            return std::max(ax * c + ay * 0.5, ay) - part.a;
        }
        case Shape::star: {
            const double rho = std::hypot(x, y);
            const double th = std::atan2(y, x);
            const double edge = part.a * (0.62 + 0.38 * std::cos(5.0 * th));
            return rho - edge;
        }
    }
    return 1e9;
}

inline std::vector<Part> make_parts(const IndenterScenario& sc) {
    std::vector<Part> parts;
    const double a = part_radius(sc);
    if (sc.shape == Shape::multi_dot) {
        const int n = std::max(1, sc.dot_count);
        for (int k = 0; k < n; ++k) {
            const double ang = 2.0 * kPi * k / n + kPi / 4.0;
            Part p{Shape::multi_dot,
                   {sc.center_mm.x + 0.5 * sc.dot_spacing_mm * std::cos(ang),
                    sc.center_mm.y + 0.5 * sc.dot_spacing_mm * std::sin(ang)},
                   a, 0.0};
            parts.push_back(p);
        }
    } else {
        Part p{sc.shape, sc.center_mm, a, sc.shape == Shape::edge ? sc.diameter_mm * 0.5 : 0.0};
        parts.push_back(p);
    }
    return parts;
}

// extent of a part's support beyond its center, mm
inline double part_extent(const Part& p) {
    double e = p.a + p.half_len;
    if (p.shape == Shape::star) e = p.a; // max edge radius is a
    return e;
}

} // namespace detail

// Closed-form displacement (px) of one scenario at a raster position (px).
inline Vec2 displacement_at(const IndenterScenario& sc, const CameraModel& cam, Vec2 pos_px) {
    const Vec2 p_mm{pos_px.x / cam.px_per_mm, pos_px.y / cam.px_per_mm};
    const double peak_px = cam.lateral_gain * sc.press_depth_mm * cam.px_per_mm;
    const Vec2 shear_px{sc.shear_offset_mm.x * cam.shear_gain * cam.px_per_mm,
                        sc.shear_offset_mm.y * cam.shear_gain * cam.px_per_mm};
    Vec2 u{0.0, 0.0};
    for (const auto& part : detail::make_parts(sc)) {
        const double phi = detail::sdf(part, p_mm);
        if (phi >= 0.0) continue;
        const double band = part.a;
        const double t = 1.0 - clamp(-phi / band, 0.0, 1.0);
        const double bump = (1.0 - t * t) * (1.0 - t * t);
        const double mag = peak_px * kRadialPeakNorm * t * bump;
        if (mag != 0.0) {
            const double eps = 0.05;
            const double gx = detail::sdf(part, {p_mm.x + eps, p_mm.y}) -
                              detail::sdf(part, {p_mm.x - eps, p_mm.y});
            const double gy = detail::sdf(part, {p_mm.x, p_mm.y + eps}) -
                              detail::sdf(part, {p_mm.x, p_mm.y - eps});
            const double gn = std::hypot(gx, gy);
            if (gn > 1e-12) {
                u.x += mag * gx / gn;
                u.y += mag * gy / gn;
            }
        }
        u.x += shear_px.x * bump;
        u.y += shear_px.y * bump;
    }
    return u;
}

inline GroundTruthFlow displacement_field(const IndenterScenario& sc, const CameraModel& cam) {
    require(sc.press_depth_mm >= 0.0 && sc.press_depth_mm <= 12.0,
            "displacement_field: press depth outside [0,12] mm");
    require(std::fabs(sc.shear_offset_mm.x) <= 10.0 && std::fabs(sc.shear_offset_mm.y) <= 10.0,
            "displacement_field: shear offset above 10 mm");

    if (sc.press_depth_mm > 0.0 || sc.shear_offset_mm.norm() > 0.0) {
        const double wm = cam.width / cam.px_per_mm, hm = cam.height / cam.px_per_mm;
        for (const auto& part : detail::make_parts(sc)) {
            const double e = detail::part_extent(part);
            if (part.center_mm.x - e < 0.0 || part.center_mm.x + e > wm ||
                part.center_mm.y - e < 0.0 || part.center_mm.y + e > hm)
                fail(std::string("displacement_field: contact leaves raster: ") + shape_name(sc.shape));
        }
    }

    GroundTruthFlow gt;
    gt.field = FlowField(cam.width, cam.height);
    for (int y = 0; y < cam.height; ++y)
        for (int x = 0; x < cam.width; ++x) {
            const Vec2 u = displacement_at(sc, cam, {double(x), double(y)});
            gt.field.u[gt.field.idx(y, x)] = float(u.x);
            gt.field.v[gt.field.idx(y, x)] = float(u.y);
        }

    gt.marker_pos.reserve(169);
    gt.marker_disp.reserve(169);
    for (int iy = 0; iy < 13; ++iy)
        for (int ix = 0; ix < 13; ++ix) {
            const double fx = std::round((0.1 + 0.8 * ix / 12.0) * (cam.width - 1));
            const double fy = std::round((0.1 + 0.8 * iy / 12.0) * (cam.height - 1));
            gt.marker_pos.push_back({fx, fy});
            gt.marker_disp.push_back(gt.field.sample(fx, fy));
        }
    return gt;
}

struct RenderResult {
    Image frame;
    std::vector<uint8_t> valid;
};

// Backward-maps each output pixel to its source by solving x_src + u(x_src) = x
// with fixed-point iteration, so the rendered frame realizes the forward
// ground-truth field exactly (up to interpolation). pattern_scale is the
// number of pattern pixels per camera pixel: above 1 the pattern acts as a
// higher-resolution print that the sensor samples, so patch edges land at
// fractional sensor positions the way a printed sheet's do.
inline RenderResult render_deformed(const Image& pattern, const GroundTruthFlow& gt,
                                    const CameraModel& cam, uint64_t noise_seed = 0,
                                    double pattern_scale = 1.0) {
    if (pattern_scale == 1.0)
        require(pattern.w == gt.field.w && pattern.h == gt.field.h,
                "render_deformed: pattern raster does not match field");
    else
        require(double(pattern.w) >= (gt.field.w - 0.5) * pattern_scale - 0.5 &&
                    double(pattern.h) >= (gt.field.h - 0.5) * pattern_scale - 0.5,
                "render_deformed: pattern does not cover the field");
    const int W = gt.field.w, H = gt.field.h;
    RenderResult out;
    out.frame = Image(W, H, pattern.c);
    out.valid.assign(size_t(W) * H, 1);

    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            double sx = x, sy = y;
            for (int it = 0; it < 8; ++it) {
                const Vec2 u = gt.field.sample(sx, sy);
                sx = x - u.x;
                sy = y - u.y;
            }
            const bool inside = sx >= 0.0 && sx <= W - 1.0 && sy >= 0.0 && sy <= H - 1.0;
            out.valid[size_t(y) * W + x] = inside ? 1 : 0;
            // The pattern raster is a piecewise-constant world, so the sensor
            // pixel integrates nearest-neighbor taps over its footprint. This
            // keeps warped texture as crisp as the reference frame instead of
            // smearing it with interpolation.
            constexpr int kTaps = 4;
            for (int c = 0; c < pattern.c; ++c) {
                double acc = 0.0;
                for (int jy = 0; jy < kTaps; ++jy)
                    for (int jx = 0; jx < kTaps; ++jx) {
                        const double ox = (jx + 0.5) / kTaps - 0.5;
                        const double oy = (jy + 0.5) / kTaps - 0.5;
                        const double px = (sx + ox + 0.5) * pattern_scale - 0.5;
                        const double py = (sy + oy + 0.5) * pattern_scale - 0.5;
                        const int tx = int(clamp(std::lround(px), long(0), long(pattern.w - 1)));
                        const int ty = int(clamp(std::lround(py), long(0), long(pattern.h - 1)));
                        acc += pattern.at(ty, tx, c);
                    }
                out.frame.at(y, x, c) = float(acc / (kTaps * kTaps));
            }
        }

    if (cam.blur_sigma > 0.0) out.frame = gaussian_blur(out.frame, cam.blur_sigma);
    if (cam.gain != 1.0 || cam.noise_sigma > 0.0) {
        Rng rng(noise_seed);
        for (auto& v : out.frame.data) {
            double t = double(v) * cam.gain;
            if (cam.noise_sigma > 0.0) t += cam.noise_sigma * rng.normal();
            v = float(clamp(t, 0.0, 1.0));
        }
    }
    return out;
}

// Scenario (de)serialization: key=value text, one scenario per file, or CSV
// rows (shape, diameter, cx, cy, depth, sx, sy).
inline io::Manifest scenario_manifest(const IndenterScenario& sc) {
    io::Manifest m;
    char buf[32];
    auto put = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        m[k] = buf;
    };
    m["shape"] = shape_name(sc.shape);
    put("diameter", sc.diameter_mm);
    m["dot_count"] = std::to_string(sc.dot_count);
    put("dot_spacing", sc.dot_spacing_mm);
    put("cx", sc.center_mm.x);
    put("cy", sc.center_mm.y);
    put("depth", sc.press_depth_mm);
    put("sx", sc.shear_offset_mm.x);
    put("sy", sc.shear_offset_mm.y);
    put("contact_radius", sc.contact_radius_mm);
    return m;
}

inline IndenterScenario scenario_from_manifest(const io::Manifest& m) {
    IndenterScenario sc;
    sc.shape = shape_from_name(io::get_str(m, "shape", "sphere"));
    sc.diameter_mm = io::get_num(m, "diameter", sc.diameter_mm);
    sc.dot_count = int(io::get_num(m, "dot_count", sc.dot_count));
    sc.dot_spacing_mm = io::get_num(m, "dot_spacing", sc.dot_spacing_mm);
    sc.center_mm.x = io::get_num(m, "cx", sc.center_mm.x);
    sc.center_mm.y = io::get_num(m, "cy", sc.center_mm.y);
    sc.press_depth_mm = io::get_num(m, "depth", sc.press_depth_mm);
    sc.shear_offset_mm.x = io::get_num(m, "sx", sc.shear_offset_mm.x);
    sc.shear_offset_mm.y = io::get_num(m, "sy", sc.shear_offset_mm.y);
    sc.contact_radius_mm = io::get_num(m, "contact_radius", sc.contact_radius_mm);
    return sc;
}

} // namespace tacflow::sim
