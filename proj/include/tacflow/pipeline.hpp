#pragma once

// End-to-end orchestration: per-frame tracking -> depth -> decomposition ->
// force, the pattern-selection sweep harness, the synthetic force-protocol
// dataset builder, and throughput benchmarking.

#include <algorithm>
#include <chrono>
#include <cstdint>
#include <cstdio>
#include <functional>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/density.hpp"
#include "tacflow/flow.hpp"
#include "tacflow/force.hpp"
#include "tacflow/image.hpp"
#include "tacflow/io.hpp"
#include "tacflow/nhhd.hpp"
#include "tacflow/pattern.hpp"
#include "tacflow/rng.hpp"
#include "tacflow/simulate.hpp"

namespace tacflow::pipe {

struct PipelineConfig {
    int raster_w = 798;
    int raster_h = 586;
    flow::FlowParams flow_params;
    depth::DensityParams density_params; // includes the density splat stride
    double rebase_threshold = 6.0 / 255.0;
    int nhhd_stride = 2; // decimation for decomposition + features
    int guided_radius = 8;
    double guided_eps = 1e-3;
};

inline io::Manifest config_manifest(const PipelineConfig& c) {
    io::Manifest m;
    char buf[40];
    auto put = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        m[k] = buf;
    };
    m["raster_w"] = std::to_string(c.raster_w);
    m["raster_h"] = std::to_string(c.raster_h);
    m["flow.levels"] = std::to_string(c.flow_params.pyramid_levels);
    put("flow.scale", c.flow_params.pyramid_scale);
    m["flow.window"] = std::to_string(c.flow_params.window_size);
    m["flow.iterations"] = std::to_string(c.flow_params.iterations_per_level);
    m["flow.poly_n"] = std::to_string(c.flow_params.poly_neighborhood);
    put("flow.poly_sigma", c.flow_params.poly_sigma);
    put("density.sigma", c.density_params.sigma);
    put("density.truncation", c.density_params.kernel_truncation);
    m["density.stride"] = std::to_string(c.density_params.downsample_stride);
    put("rebase_threshold", c.rebase_threshold);
    m["nhhd_stride"] = std::to_string(c.nhhd_stride);
    m["guided_radius"] = std::to_string(c.guided_radius);
    put("guided_eps", c.guided_eps);
    return m;
}

inline PipelineConfig config_from_manifest(const io::Manifest& m, PipelineConfig c = {}) {
    c.raster_w = int(io::get_num(m, "raster_w", c.raster_w));
    c.raster_h = int(io::get_num(m, "raster_h", c.raster_h));
    c.flow_params.pyramid_levels = int(io::get_num(m, "flow.levels", c.flow_params.pyramid_levels));
    c.flow_params.pyramid_scale = io::get_num(m, "flow.scale", c.flow_params.pyramid_scale);
    c.flow_params.window_size = int(io::get_num(m, "flow.window", c.flow_params.window_size));
    c.flow_params.iterations_per_level =
        int(io::get_num(m, "flow.iterations", c.flow_params.iterations_per_level));
    c.flow_params.poly_neighborhood =
        int(io::get_num(m, "flow.poly_n", c.flow_params.poly_neighborhood));
    c.flow_params.poly_sigma = io::get_num(m, "flow.poly_sigma", c.flow_params.poly_sigma);
    c.density_params.sigma = io::get_num(m, "density.sigma", c.density_params.sigma);
    c.density_params.kernel_truncation =
        io::get_num(m, "density.truncation", c.density_params.kernel_truncation);
    c.density_params.downsample_stride =
        int(io::get_num(m, "density.stride", c.density_params.downsample_stride));
    c.rebase_threshold = io::get_num(m, "rebase_threshold", c.rebase_threshold);
    c.nhhd_stride = int(io::get_num(m, "nhhd_stride", c.nhhd_stride));
    c.guided_radius = int(io::get_num(m, "guided_radius", c.guided_radius));
    c.guided_eps = io::get_num(m, "guided_eps", c.guided_eps);
    return c;
}

// every stride-th sample of the cumulative flow, as double fields
inline void decimate_flow(const FlowField& f, int stride, Field& vx, Field& vy) {
    const int w = (f.w + stride - 1) / stride, h = (f.h + stride - 1) / stride;
    vx = Field(w, h);
    vy = Field(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            const size_t i = f.idx(y * stride, x * stride);
            vx.at(y, x) = f.u[i];
            vy.at(y, x) = f.v[i];
        }
}

inline Field decimate_field(const Field& f, int stride) {
    const int w = (f.w + stride - 1) / stride, h = (f.h + stride - 1) / stride;
    Field out(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) out.at(y, x) = f.at(y * stride, x * stride);
    return out;
}

struct StageTimes {
    double flow_ms = 0.0;
    double density_ms = 0.0;
    double nhhd_ms = 0.0;
    double features_ms = 0.0;
    double total_ms = 0.0;
};

struct FrameResult {
    FlowField cumulative;
    depth::DensityMap density_map;
    nhhd::NHHDComponents components;
    force::Features X;
    force::ForceDistribution forces; // populated only when a model is set
    bool has_forces = false;
    int rebase_count = 0;
    StageTimes times;
};

class PipelineRunner {
public:
    PipelineRunner(const PipelineConfig& config, const Image& initial_frame,
                   std::optional<force::ForceModel> model = std::nullopt)
        : cfg_(config), tracker_(initial_frame, config.rebase_threshold), model_(std::move(model)) {
        require(initial_frame.w == cfg_.raster_w && initial_frame.h == cfg_.raster_h,
                "pipeline: initial frame does not match configured raster");
    }

    FrameResult step(const Image& frame) {
        using clock = std::chrono::steady_clock;
        FrameResult r;
        const auto t0 = clock::now();
        r.cumulative = flow::adaptive_step(tracker_, frame, cfg_.flow_params);
        r.rebase_count = tracker_.rebase_count;
        const auto t1 = clock::now();
        r.density_map = depth::reconstruct_surface(r.cumulative, frame, cfg_.density_params,
                                                   cfg_.guided_radius, cfg_.guided_eps);
        const auto t2 = clock::now();
        Field vx, vy;
        decimate_flow(r.cumulative, cfg_.nhhd_stride, vx, vy);
        r.components = nhhd::nhhd(vx, vy);
        const auto t3 = clock::now();
        const Field dp = decimate_field(r.density_map.d_p, cfg_.nhhd_stride);
        const force::PointFeatures pf = force::build_point_features(
            dp, r.components, double(cfg_.nhhd_stride) * cfg_.nhhd_stride);
        r.X = force::aggregate_features(pf);
        if (model_) {
            r.forces = force::force_distribution(*model_, pf);
            r.has_forces = true;
        }
        const auto t4 = clock::now();
        const auto ms = [](auto a, auto b) {
            return std::chrono::duration<double, std::milli>(b - a).count();
        };
        r.times.flow_ms = ms(t0, t1);
        r.times.density_ms = ms(t1, t2);
        r.times.nhhd_ms = ms(t2, t3);
        r.times.features_ms = ms(t3, t4);
        r.times.total_ms = ms(t0, t4);
        return r;
    }

    const flow::AdaptiveTracker& tracker() const { return tracker_; }

private:
    PipelineConfig cfg_;
    flow::AdaptiveTracker tracker_;
    std::optional<force::ForceModel> model_;
};

// --------------------------------------------------------------- force protocol

// Synthetic pressing protocol shaped like the physical calibration run:
// per sphere diameter, per position, one no-contact base sample plus a
// depth x shear grid. 5 x 9 x (5*9 + 1) = 2070 scenarios.
inline std::vector<sim::IndenterScenario> force_protocol_scenarios(const sim::CameraModel& cam) {
    const double wm = cam.width / cam.px_per_mm;
    const double hm = cam.height / cam.px_per_mm;
    const double depths[5] = {0.6, 0.9, 1.2, 1.5, 1.8};
    const double diam[5] = {10.0, 12.0, 15.0, 18.0, 22.0};
    std::vector<sim::IndenterScenario> out;
    out.reserve(2070);
    for (double D : diam)
        for (int py = 0; py < 3; ++py)
            for (int px = 0; px < 3; ++px) {
                sim::IndenterScenario base;
                base.shape = sim::Shape::sphere;
                base.diameter_mm = D;
                base.center_mm = {wm * (0.35 + 0.15 * px), hm * (0.32 + 0.18 * py)};
                base.press_depth_mm = 0.0;
                out.push_back(base);
                for (double depth : depths)
                    for (int sy = -1; sy <= 1; ++sy)
                        for (int sx = -1; sx <= 1; ++sx) {
                            sim::IndenterScenario sc = base;
                            sc.press_depth_mm = depth;
                            // stage offsets are fixed, not scaled with depth, so
                            // shear force spreads across the contact-area range
                            sc.shear_offset_mm = {1.2 * sx, 1.2 * sy};
                            out.push_back(sc);
                        }
            }
    return out;
}

// Features for one scenario via the full static-pair pipeline. The clean
// pattern is warped per scenario; the reference frame is a separate
// zero-deformation render (its own noise draw).
inline force::Features scenario_features(const sim::IndenterScenario& sc, const Image& pattern,
                                         const Image& reference_frame, const sim::CameraModel& cam,
                                         const PipelineConfig& cfg, uint64_t noise_seed) {
    const sim::GroundTruthFlow gt = sim::displacement_field(sc, cam);
    const sim::RenderResult rr = sim::render_deformed(pattern, gt, cam, noise_seed);
    const FlowField flw = flow::dense_flow(reference_frame, rr.frame, cfg.flow_params);
    const depth::DensityMap dm = depth::reconstruct_surface(flw, rr.frame, cfg.density_params,
                                                            cfg.guided_radius, cfg.guided_eps);
    Field vx, vy;
    decimate_flow(flw, cfg.nhhd_stride, vx, vy);
    const nhhd::NHHDComponents comps = nhhd::nhhd(vx, vy);
    const Field dp = decimate_field(dm.d_p, cfg.nhhd_stride);
    const force::PointFeatures pf =
        force::build_point_features(dp, comps, double(cfg.nhhd_stride) * cfg.nhhd_stride);
    return force::aggregate_features(pf);
}

// Reference model scaled so protocol totals span roughly the physical rig's
// ranges (normal up to ~9.67 N, shear a few N).
inline force::ForceModel make_reference_model(const std::vector<force::Features>& feats,
                                              double normal_max = 9.67, double shear_max = 2.9) {
    double scale1[3] = {0.0, 0.0, 0.0};
    double scale23[6] = {0.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    for (const auto& X : feats) {
        for (int j = 0; j < 3; ++j) scale1[j] = std::max(scale1[j], std::fabs(X.col[0][size_t(j)]));
        for (int j = 0; j < 6; ++j) scale23[j] = std::max(scale23[j], std::fabs(X.col[1][size_t(j)]));
    }
    for (double& s : scale1) s = s > 0.0 ? s : 1.0;
    for (double& s : scale23) s = s > 0.0 ? s : 1.0;

    force::ForceModel m;
    // shear rows lean on the odd (sign-carrying) terms so synthetic shear
    // forces spread over both signs the way stage-driven shear does
    const double w1[3] = {1.0, 0.45, 0.2};
    const double w2[6] = {1.0, 0.06, 0.03, 0.22, -0.03, 0.01};
    const double w3[6] = {0.22, -0.03, 0.01, 1.0, 0.06, 0.03};
    for (int j = 0; j < 3; ++j) m.A[0][size_t(j)] = w1[j] / scale1[j];
    for (int j = 0; j < 6; ++j) {
        m.A[1][size_t(j)] = w2[j] / scale23[j];
        m.A[2][size_t(j)] = w3[j] / scale23[j];
    }

    double raw_max1 = 1e-12, raw_max2 = 1e-12, raw_max3 = 1e-12;
    for (const auto& X : feats) {
        const auto F = force::total_force(m, X);
        raw_max1 = std::max(raw_max1, std::fabs(F[0]));
        raw_max2 = std::max(raw_max2, std::fabs(F[1]));
        raw_max3 = std::max(raw_max3, std::fabs(F[2]));
    }
    for (int j = 0; j < 3; ++j) m.A[0][size_t(j)] *= normal_max / raw_max1;
    for (int j = 0; j < 6; ++j) {
        m.A[1][size_t(j)] *= shear_max / raw_max2;
        m.A[2][size_t(j)] *= shear_max / raw_max3;
    }
    return m;
}

// noise = force measurement noise sigma in N; samples are shuffled
// deterministically so a leading-fraction split is representative.
inline std::vector<force::ForceSample> protocol_samples(const std::vector<force::Features>& feats,
                                                        const force::ForceModel& model,
                                                        double noise, uint64_t seed) {
    Rng rng(seed + 0x5eedf00dULL);
    std::vector<force::ForceSample> out;
    out.reserve(feats.size());
    for (const auto& X : feats) {
        force::ForceSample s;
        s.X = X;
        s.F = force::total_force(model, X);
        if (noise > 0.0)
            for (auto& f : s.F) f += noise * rng.normal();
        out.push_back(s);
    }
    for (size_t i = out.size(); i > 1; --i)
        std::swap(out[i - 1], out[rng.uniform_index(i)]);
    return out;
}

struct ProtocolDataset {
    std::vector<force::Features> features; // one per scenario, protocol order
    force::ForceModel reference_model;
    std::vector<force::ForceSample> samples;
};

inline ProtocolDataset synth_force_dataset(const Image& pattern, const sim::CameraModel& cam,
                                           const PipelineConfig& cfg, double noise, uint64_t seed,
                                           const std::function<void(size_t, size_t)>& progress = {}) {
    sim::GroundTruthFlow zero;
    zero.field = FlowField(cam.width, cam.height);
    const Image reference_frame = sim::render_deformed(pattern, zero, cam, seed + 1).frame;

    const auto scenarios = force_protocol_scenarios(cam);
    ProtocolDataset out;
    out.features.reserve(scenarios.size());
    for (size_t i = 0; i < scenarios.size(); ++i) {
        out.features.push_back(scenario_features(scenarios[i], pattern, reference_frame, cam, cfg,
                                                 seed ^ (i * 7919 + 13)));
        if (progress) progress(i + 1, scenarios.size());
    }
    out.reference_model = make_reference_model(out.features);
    out.samples = protocol_samples(out.features, out.reference_model, noise, seed);
    return out;
}

// ----------------------------------------------------------------------- sweep

struct SweepSpec {
    std::vector<double> d_values{0.05, 0.1, 0.15, 0.2};
    std::vector<double> r_values{0.1, 0.3, 0.5};
    std::vector<sim::Shape> indenters{sim::Shape::multi_dot, sim::Shape::edge,
                                      sim::Shape::ellipsoid, sim::Shape::hex_prism,
                                      sim::Shape::star};
    int patches_per_side = 96;
    double px_per_mm = 798.0 / 36.0;
    double blur_sigma = 0.7;
    double noise_sigma = 0.02;
    // the printed sheet: pattern raster resolution per patch, the printer's
    // color cell pitch (patches below it merge into averaged cells), and ink
    // dot-gain blur
    int print_patch_px = 8;
    double print_pitch_mm = 0.07;
    double print_blur_mm = 0.02;
    uint64_t seed = 17;
};

struct SweepRow {
    double d = 0.0, r = 0.0;
    sim::Shape indenter = sim::Shape::sphere;
    int patch_px = 0;
    int raster = 0;
    double delta_bar_px = 0.0;
    int n_scenarios = 0;
    bool ok = true;
    std::string error;
};

// Box-averages an image over a grid of roughly cell_px-sized cells, the way a
// printer merges everything inside one of its color cells.
inline Image quantize_to_grid(const Image& img, double cell_px) {
    Image out(img.w, img.h, img.c);
    const int ny = int(std::ceil(img.h / cell_px)), nx = int(std::ceil(img.w / cell_px));
    for (int cy = 0; cy < ny; ++cy)
        for (int cx = 0; cx < nx; ++cx) {
            const int y0 = int(cy * cell_px), y1 = std::min(img.h, int((cy + 1) * cell_px));
            const int x0 = int(cx * cell_px), x1 = std::min(img.w, int((cx + 1) * cell_px));
            if (y0 >= y1 || x0 >= x1) continue;
            for (int ch = 0; ch < img.c; ++ch) {
                double acc = 0.0;
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) acc += img.at(y, x, ch);
                const float v = float(acc / (double(y1 - y0) * (x1 - x0)));
                for (int y = y0; y < y1; ++y)
                    for (int x = x0; x < x1; ++x) out.at(y, x, ch) = v;
            }
        }
    return out;
}

inline std::vector<SweepRow> pattern_sweep(const SweepSpec& spec, const PipelineConfig& base_cfg) {
    require(!spec.d_values.empty() && !spec.r_values.empty() && !spec.indenters.empty(),
            "pattern_sweep: empty grid");
    require(spec.print_patch_px >= 1, "pattern_sweep: print resolution below one px per patch");

    // Each cell is a scale model of the same bench: a printed sheet of
    // patches_per_side patches on a side, pressed at four positions to two
    // depths and stroked along both axes, with every frame tracked against
    // the initial frame. The bench geometry scales with the sheet's physical
    // side, so displacements measured in px grow with patch size while the
    // pattern under the camera is the only other thing that changes.
    const double kBenchSide = 36.0;
    const double kContactDia = 8.0;
    const double kDepths[2] = {5.0, 10.0};
    const double kShearSpan = 10.0;
    const double kPosOff[4][2] = {{-4.0, -4.0}, {4.0, -4.0}, {-4.0, 4.0}, {4.0, 4.0}};
    const int kShearPositions = 2;

    std::vector<SweepRow> rows;
    for (double d : spec.d_values)
        for (double r : spec.r_values) {
            const double view_mm = spec.patches_per_side * d;
            const double s = view_mm / kBenchSide;
            const int raster = int(std::lround(view_mm * spec.px_per_mm));
            const double print_scale = spec.print_patch_px / (d * spec.px_per_mm);

            pattern::PatternParams pp;
            pp.resolution_px = spec.patches_per_side * spec.print_patch_px;
            pp.patch_size_mm = d;
            pp.print_area_mm = view_mm;
            pp.randomness = r;
            pp.seed = spec.seed ^ (uint64_t(std::lround(d * 1000)) << 20) ^
                      uint64_t(std::lround(r * 1000));
            pattern::PatternImage pat = pattern::generate_pattern(pp);
            const double print_ppm = spec.print_patch_px / d;
            if (spec.print_pitch_mm > 0.0 && spec.print_pitch_mm * print_ppm > 1.0) {
                pat.pixels = quantize_to_grid(pat.pixels, spec.print_pitch_mm * print_ppm);
                // a cell straddling several patches realizes their ink mixture,
                // so each color survives only by its area share of the cell and
                // the rest collapses toward mud
                const double fidelity =
                    std::min(1.0, (d / spec.print_pitch_mm) * (d / spec.print_pitch_mm));
                if (fidelity < 1.0)
                    for (auto& v : pat.pixels.data)
                        v = float(0.5 + fidelity * (double(v) - 0.5));
            }
            if (spec.print_blur_mm > 0.0)
                pat.pixels = gaussian_blur(pat.pixels, spec.print_blur_mm * print_ppm);

            sim::CameraModel cam;
            cam.width = raster;
            cam.height = raster;
            cam.px_per_mm = spec.px_per_mm;
            cam.blur_sigma = spec.blur_sigma;
            cam.noise_sigma = spec.noise_sigma;

            sim::GroundTruthFlow zero;
            zero.field = FlowField(raster, raster);
            const sim::RenderResult ref =
                sim::render_deformed(pat.pixels, zero, cam, pp.seed + 1, print_scale);

            for (sim::Shape shape : spec.indenters) {
                SweepRow row;
                row.d = d;
                row.r = r;
                row.indenter = shape;
                row.patch_px = std::max(1, int(std::lround(d * spec.px_per_mm)));
                row.raster = raster;
                try {
                    double sum = 0.0;
                    int n = 0;
                    uint64_t sseed = pp.seed + 101;
                    for (int pos = 0; pos < 4; ++pos)
                        for (double depth : kDepths) {
                            sim::IndenterScenario sc;
                            sc.shape = shape;
                            sc.diameter_mm = kContactDia * s;
                            sc.contact_radius_mm = 0.5 * kContactDia * s;
                            sc.dot_spacing_mm = 0.8 * kContactDia * s;
                            sc.center_mm = {(0.5 * kBenchSide + kPosOff[pos][0]) * s,
                                            (0.5 * kBenchSide + kPosOff[pos][1]) * s};
                            sc.press_depth_mm = depth * s;

                            std::vector<Vec2> steps{{0.0, 0.0}};
                            if (depth == kDepths[1] && pos < kShearPositions) {
                                steps.push_back({kShearSpan * s, 0.0});
                                steps.push_back({-kShearSpan * s, 0.0});
                                steps.push_back({0.0, kShearSpan * s});
                                steps.push_back({0.0, -kShearSpan * s});
                            }
                            for (const Vec2& sh : steps) {
                                sc.shear_offset_mm = sh;
                                const sim::GroundTruthFlow gt = sim::displacement_field(sc, cam);
                                const sim::RenderResult rr = sim::render_deformed(
                                    pat.pixels, gt, cam, ++sseed, print_scale);
                                const FlowField flw =
                                    flow::dense_flow(ref.frame, rr.frame, base_cfg.flow_params);
                                const flow::TrackingError te =
                                    flow::tracking_error(flw, gt.marker_pos, gt.marker_disp);
                                sum += te.delta_bar;
                                n += 1;
                            }
                        }
                    row.delta_bar_px = n ? sum / n : 0.0;
                    row.n_scenarios = n;
                } catch (const std::exception& e) {
                    row.ok = false;
                    row.error = e.what();
                }
                rows.push_back(row);
            }
        }
    return rows;
}

inline io::Csv sweep_csv(const std::vector<SweepRow>& rows) {
    io::Csv t;
    t.header = {"d_mm", "r", "indenter_id", "patch_px", "raster_px", "delta_bar_px", "n_scenarios", "ok"};
    for (const auto& row : rows)
        t.rows.push_back({row.d, row.r, double(int(row.indenter)), double(row.patch_px),
                          double(row.raster), row.delta_bar_px, double(row.n_scenarios),
                          row.ok ? 1.0 : 0.0});
    return t;
}

// per-cell stacked columns (one column per indenter), mirroring a stacked
// bar chart of delta_bar by (d, r)
inline io::Csv sweep_stacked_csv(const std::vector<SweepRow>& rows,
                                 const std::vector<sim::Shape>& indenters) {
    io::Csv t;
    t.header = {"d_mm", "r"};
    for (sim::Shape s : indenters) t.header.push_back(std::string("delta_") + sim::shape_name(s));
    for (const auto& row : rows) {
        if (row.indenter != indenters.front()) continue;
        std::vector<double> line{row.d, row.r};
        for (sim::Shape s : indenters) {
            double v = 0.0;
            for (const auto& q : rows)
                if (q.d == row.d && q.r == row.r && q.indenter == s) v = q.delta_bar_px;
            line.push_back(v);
        }
        t.rows.push_back(std::move(line));
    }
    return t;
}

// ----------------------------------------------------------------------- bench

struct BenchReport {
    StageTimes median;
    double fps = 0.0;
    int raster_w = 0, raster_h = 0;
    int threads = 0;
    int frames = 0;
};

inline BenchReport bench(const PipelineConfig& cfg, int n_frames, uint64_t seed = 99) {
    require(n_frames >= 1, "bench: stream length must be >= 1");

    pattern::PatternParams pp;
    pp.resolution_px = std::max(cfg.raster_w, cfg.raster_h);
    pp.patch_size_mm = 0.15;
    pp.print_area_mm = pp.resolution_px / (798.0 / 36.0);
    pp.randomness = 0.1;
    pp.seed = seed;
    const pattern::PatternImage pat = pattern::generate_pattern(pp);
    Image pattern_raster(cfg.raster_w, cfg.raster_h, 3);
    for (int y = 0; y < cfg.raster_h; ++y)
        for (int x = 0; x < cfg.raster_w; ++x)
            for (int c = 0; c < 3; ++c) pattern_raster.at(y, x, c) = pat.pixels.at(y, x, c);

    sim::CameraModel cam;
    cam.width = cfg.raster_w;
    cam.height = cfg.raster_h;
    cam.noise_sigma = 1.0 / 255.0;

    const double wm = cfg.raster_w / cam.px_per_mm;
    const double hm = cfg.raster_h / cam.px_per_mm;
    // shrink the probe on small rasters; the full-depth contact radius of the
    // standard 15 mm / 2 mm press is 5.1 mm, which must stay inside the view
    const double fit = std::min(1.0, 0.38 * std::min(wm, hm) / 5.1);
    sim::IndenterScenario sc;
    sc.shape = sim::Shape::sphere;
    sc.diameter_mm = 15.0 * fit;
    sc.center_mm = {wm * 0.5, hm * 0.5};

    std::vector<Image> frames;
    frames.reserve(size_t(n_frames) + 1);
    for (int k = 0; k <= n_frames; ++k) {
        sc.press_depth_mm = 2.0 * fit * k / std::max(1, n_frames);
        const sim::GroundTruthFlow gt = sim::displacement_field(sc, cam);
        frames.push_back(sim::render_deformed(pattern_raster, gt, cam, seed + 7 + k).frame);
    }

    PipelineRunner runner(cfg, frames[0]);
    runner.step(frames[0]); // warmup, excluded
    std::vector<StageTimes> times;
    times.reserve(size_t(n_frames));
    for (int k = 1; k <= n_frames; ++k) times.push_back(runner.step(frames[size_t(k)]).times);

    auto median_of = [&](auto sel) {
        std::vector<double> v;
        v.reserve(times.size());
        for (const auto& t : times) v.push_back(sel(t));
        std::sort(v.begin(), v.end());
        const size_t n = v.size();
        return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
    };
    BenchReport rep;
    rep.median.flow_ms = median_of([](const StageTimes& t) { return t.flow_ms; });
    rep.median.density_ms = median_of([](const StageTimes& t) { return t.density_ms; });
    rep.median.nhhd_ms = median_of([](const StageTimes& t) { return t.nhhd_ms; });
    rep.median.features_ms = median_of([](const StageTimes& t) { return t.features_ms; });
    rep.median.total_ms = median_of([](const StageTimes& t) { return t.total_ms; });
    rep.fps = rep.median.total_ms > 0.0 ? 1000.0 / rep.median.total_ms : 0.0;
    rep.raster_w = cfg.raster_w;
    rep.raster_h = cfg.raster_h;
    rep.threads = worker_count();
    rep.frames = n_frames;
    return rep;
}

inline io::Manifest bench_manifest(const BenchReport& r) {
    io::Manifest m;
    char buf[40];
    auto put = [&](const char* k, double v) {
        std::snprintf(buf, sizeof buf, "%.3f", v);
        m[k] = buf;
    };
    put("flow_ms", r.median.flow_ms);
    put("density_ms", r.median.density_ms);
    put("nhhd_ms", r.median.nhhd_ms);
    put("features_ms", r.median.features_ms);
    put("total_ms", r.median.total_ms);
    put("fps", r.fps);
    m["raster"] = std::to_string(r.raster_w) + "x" + std::to_string(r.raster_h);
    m["threads"] = std::to_string(r.threads);
    m["frames"] = std::to_string(r.frames);
    m["reference_fps_target"] = "40";
    return m;
}

} // namespace tacflow::pipe
