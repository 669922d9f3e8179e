// tacflow command-line front end: pattern generation, scenario simulation,
// tracking, depth, decomposition, calibration, force estimation, the full
// per-frame pipeline, the pattern sweep, and benchmarking.

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <functional>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "tacflow/density.hpp"
#include "tacflow/flow.hpp"
#include "tacflow/force.hpp"
#include "tacflow/image.hpp"
#include "tacflow/io.hpp"
#include "tacflow/nhhd.hpp"
#include "tacflow/pattern.hpp"
#include "tacflow/pipeline.hpp"
#include "tacflow/simulate.hpp"

namespace fs = std::filesystem;
using namespace tacflow;

namespace {

std::string fmt(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

Image apply_remap(const Image& frame, const std::vector<float>& xy, int rw, int rh) {
    require(rw == frame.w && rh == frame.h, "remap: raster mismatch");
    Image out(frame.w, frame.h, frame.c);
    for (int y = 0; y < frame.h; ++y)
        for (int x = 0; x < frame.w; ++x) {
            const size_t i = (size_t(y) * frame.w + x) * 2;
            for (int c = 0; c < frame.c; ++c)
                out.at(y, x, c) = frame.sample(xy[i], xy[i + 1], c);
        }
    return out;
}

FlowField field_pair_to_flow(const Field& fx, const Field& fy) {
    FlowField f(fx.w, fx.h);
    for (size_t i = 0; i < fx.v.size(); ++i) {
        f.u[i] = float(fx.v[i]);
        f.v[i] = float(fy.v[i]);
    }
    return f;
}

std::string seq_name(const std::string& prefix, size_t k, size_t total, const char* ext) {
    if (total <= 1) return prefix + ext;
    char buf[16];
    std::snprintf(buf, sizeof buf, "_%03zu", k);
    return prefix + buf + ext;
}

// echo the effective config plus extras into <prefix>.txt
void write_manifest(const std::string& path, const pipe::PipelineConfig& cfg,
                    const io::Manifest& extra) {
    io::Manifest m = pipe::config_manifest(cfg);
    for (const auto& [k, v] : extra) m[k] = v;
    io::save_manifest(path, m);
}

// Layered configuration: defaults, then --config file, then explicit flags.
// Options bind straight into cfg; resolve() replays only the flags the user
// actually passed on top of the loaded file.
struct ConfigCli {
    pipe::PipelineConfig cfg;
    std::string config_path;
    CLI::Option* o_config = nullptr;
    std::vector<std::pair<CLI::Option*, std::function<void(pipe::PipelineConfig&)>>> overrides;

    void attach(CLI::App* app) {
        o_config = app->add_option("--config", config_path, "key=value config file");
    }

    template <typename T>
    void opt(CLI::App* app, const std::string& flag, T pipe::PipelineConfig::* field,
             const std::string& help) {
        CLI::Option* o = app->add_option(flag, cfg.*field, help);
        overrides.emplace_back(o, [this, field](pipe::PipelineConfig& c) { c.*field = cfg.*field; });
    }

    template <typename S, typename T>
    void opt_sub(CLI::App* app, const std::string& flag, S pipe::PipelineConfig::* sub,
                 T S::* field, const std::string& help) {
        CLI::Option* o = app->add_option(flag, (cfg.*sub).*field, help);
        overrides.emplace_back(o, [this, sub, field](pipe::PipelineConfig& c) {
            (c.*sub).*field = (cfg.*sub).*field;
        });
    }

    pipe::PipelineConfig resolve() const {
        if (!o_config || o_config->count() == 0) return cfg;
        pipe::PipelineConfig out = pipe::config_from_manifest(io::load_manifest(config_path));
        for (const auto& [o, apply] : overrides)
            if (o->count() > 0) apply(out);
        return out;
    }
};

void add_flow_opts(CLI::App* app, ConfigCli& cc) {
    cc.opt_sub(app, "--levels", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::pyramid_levels, "pyramid levels");
    cc.opt_sub(app, "--scale", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::pyramid_scale, "pyramid scale");
    cc.opt_sub(app, "--window", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::window_size, "aggregation window");
    cc.opt_sub(app, "--iters", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::iterations_per_level, "iterations per level");
    cc.opt_sub(app, "--poly-n", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::poly_neighborhood, "expansion window");
    cc.opt_sub(app, "--poly-sigma", &pipe::PipelineConfig::flow_params,
               &flow::FlowParams::poly_sigma, "expansion weighting sigma");
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"tacflow: dense-pattern tactile sensing pipeline"};
    app.require_subcommand(1);

    int threads = 0;
    app.add_option("--threads", threads, "worker thread count")->each([](const std::string& v) {
        setenv("TACFLOW_THREADS", v.c_str(), 1);
    });

    // ------------------------------------------------------------ gen-pattern
    auto* c_pat = app.add_subcommand("gen-pattern", "generate a dense random color pattern");
    pattern::PatternParams pp;
    std::string pat_out = "pattern.ppm";
    c_pat->add_option("--res", pp.resolution_px, "square raster side, px");
    c_pat->add_option("--d", pp.patch_size_mm, "patch size, mm");
    c_pat->add_option("--r", pp.randomness, "randomness regulation factor");
    c_pat->add_option("--area", pp.print_area_mm, "print area side, mm");
    c_pat->add_option("--seed", pp.seed, "random seed");
    c_pat->add_option("-o,--out", pat_out, "output image path");

    // -------------------------------------------------------------- simulate
    auto* c_sim = app.add_subcommand("simulate", "render deformed frames for a contact scenario");
    std::string sim_pattern, sim_out = "sim", sim_shape = "sphere";
    sim::IndenterScenario sc;
    sim::CameraModel sim_cam;
    int sim_frames = 1;
    uint64_t sim_seed = 0;
    c_sim->add_option("--pattern", sim_pattern, "pattern image")->required();
    c_sim->add_option("--shape", sim_shape, "sphere|multi_dot|edge|ellipsoid|hex_prism|star");
    c_sim->add_option("--diameter", sc.diameter_mm, "indenter diameter, mm");
    c_sim->add_option("--dots", sc.dot_count, "dot count (multi_dot)");
    c_sim->add_option("--dot-spacing", sc.dot_spacing_mm, "dot spacing, mm");
    c_sim->add_option("--cx", sc.center_mm.x, "contact center x, mm");
    c_sim->add_option("--cy", sc.center_mm.y, "contact center y, mm");
    c_sim->add_option("--depth", sc.press_depth_mm, "press depth, mm");
    c_sim->add_option("--sx", sc.shear_offset_mm.x, "shear offset x, mm");
    c_sim->add_option("--sy", sc.shear_offset_mm.y, "shear offset y, mm");
    c_sim->add_option("--contact-radius", sc.contact_radius_mm, "explicit contact radius, mm");
    c_sim->add_option("--px-per-mm", sim_cam.px_per_mm, "camera scale");
    c_sim->add_option("--noise", sim_cam.noise_sigma, "camera noise sigma, [0,1]");
    c_sim->add_option("--blur", sim_cam.blur_sigma, "camera blur sigma, px");
    c_sim->add_option("--gain", sim_cam.gain, "camera gain");
    c_sim->add_option("--frames", sim_frames, "ramp frame count (frame 0 is undeformed)");
    c_sim->add_option("--seed", sim_seed, "noise seed");
    c_sim->add_option("-o,--out", sim_out, "output prefix");

    // ----------------------------------------------------------------- track
    auto* c_trk = app.add_subcommand("track", "dense flow with adaptive referencing");
    ConfigCli trk_cc;
    trk_cc.attach(c_trk);
    add_flow_opts(c_trk, trk_cc);
    trk_cc.opt(c_trk, "--rebase-threshold", &pipe::PipelineConfig::rebase_threshold,
               "photometric rebase threshold");
    std::string trk_ref, trk_out = "flow", trk_remap;
    std::vector<std::string> trk_frames;
    c_trk->add_option("--ref", trk_ref, "reference frame")->required();
    c_trk->add_option("--frames", trk_frames, "frame sequence")->required()->expected(-1);
    c_trk->add_option("--remap", trk_remap, "per-pixel remap file applied to all inputs");
    c_trk->add_option("-o,--out", trk_out, "output prefix");

    // ----------------------------------------------------------------- depth
    auto* c_dep = app.add_subcommand("depth", "density-based depth reconstruction");
    ConfigCli dep_cc;
    dep_cc.attach(c_dep);
    dep_cc.opt_sub(c_dep, "--sigma", &pipe::PipelineConfig::density_params,
                   &depth::DensityParams::sigma, "splat sigma, px");
    dep_cc.opt_sub(c_dep, "--trunc", &pipe::PipelineConfig::density_params,
                   &depth::DensityParams::kernel_truncation, "kernel truncation, sigmas");
    dep_cc.opt_sub(c_dep, "--stride", &pipe::PipelineConfig::density_params,
                   &depth::DensityParams::downsample_stride, "splat grid stride");
    dep_cc.opt(c_dep, "--radius", &pipe::PipelineConfig::guided_radius, "guided filter radius");
    dep_cc.opt(c_dep, "--eps", &pipe::PipelineConfig::guided_eps, "guided filter regularization");
    std::string dep_flow, dep_frame, dep_out = "depth";
    c_dep->add_option("--flow", dep_flow, "input flow file")->required();
    c_dep->add_option("--frame", dep_frame, "guide frame image")->required();
    c_dep->add_option("-o,--out", dep_out, "output prefix");

    // ------------------------------------------------------------------ nhhd
    auto* c_nh = app.add_subcommand("nhhd", "Helmholtz-Hodge decomposition of a flow field");
    std::string nh_flow, nh_out = "nhhd";
    int nh_stride = 2;
    c_nh->add_option("--flow", nh_flow, "input flow file")->required();
    c_nh->add_option("--stride", nh_stride, "decimation stride");
    c_nh->add_option("-o,--out", nh_out, "output prefix");

    // ------------------------------------------------------------- calibrate
    auto* c_cal = app.add_subcommand("calibrate", "fit the force model on a dataset");
    std::string cal_data, cal_out = "model.txt";
    double cal_split = 0.8;
    c_cal->add_option("--data", cal_data, "force dataset CSV")->required();
    c_cal->add_option("--split", cal_split, "leading training fraction");
    c_cal->add_option("-o,--out", cal_out, "output model path");

    // -------------------------------------------------------------- estimate
    auto* c_est = app.add_subcommand("estimate", "force estimate from flow + depth");
    std::string est_flow, est_depth, est_model, est_out = "force";
    int est_stride = 2;
    c_est->add_option("--flow", est_flow, "input flow file")->required();
    c_est->add_option("--depth", est_depth, "input depth file")->required();
    c_est->add_option("--model", est_model, "force model file")->required();
    c_est->add_option("--stride", est_stride, "decimation stride");
    c_est->add_option("-o,--out", est_out, "output prefix");

    // ------------------------------------------------------------------- run
    auto* c_run = app.add_subcommand("run", "full per-frame pipeline over a frame stream");
    ConfigCli run_cc;
    run_cc.attach(c_run);
    add_flow_opts(c_run, run_cc);
    run_cc.opt(c_run, "--rebase-threshold", &pipe::PipelineConfig::rebase_threshold,
               "photometric rebase threshold");
    run_cc.opt_sub(c_run, "--sigma", &pipe::PipelineConfig::density_params,
                   &depth::DensityParams::sigma, "splat sigma, px");
    run_cc.opt_sub(c_run, "--density-stride", &pipe::PipelineConfig::density_params,
                   &depth::DensityParams::downsample_stride, "splat grid stride");
    run_cc.opt(c_run, "--nhhd-stride", &pipe::PipelineConfig::nhhd_stride,
               "decomposition stride");
    std::string run_model, run_remap, run_dir = "out";
    std::vector<std::string> run_frames;
    c_run->add_option("--frames", run_frames, "frame stream; first frame is the initial reference")
        ->required()
        ->expected(-1);
    c_run->add_option("--model", run_model, "force model file (omit to skip the force stage)");
    c_run->add_option("--remap", run_remap, "per-pixel remap file applied to all inputs");
    c_run->add_option("-o,--out", run_dir, "output directory");

    // ----------------------------------------------------------------- sweep
    auto* c_sw = app.add_subcommand("sweep", "pattern parameter sweep");
    pipe::SweepSpec sw_spec;
    std::vector<std::string> sw_names{"multi_dot", "edge", "ellipsoid", "hex_prism", "star"};
    std::string sw_dir = "sweep";
    c_sw->add_option("--d", sw_spec.d_values, "patch sizes, mm")->expected(-1);
    c_sw->add_option("--r", sw_spec.r_values, "randomness factors")->expected(-1);
    c_sw->add_option("--indenters", sw_names, "indenter shape names")->expected(-1);
    c_sw->add_option("--patches", sw_spec.patches_per_side, "patches per raster side");
    c_sw->add_option("--px-per-mm", sw_spec.px_per_mm, "raster scale");
    c_sw->add_option("--blur", sw_spec.blur_sigma, "camera blur sigma, px");
    c_sw->add_option("--noise", sw_spec.noise_sigma, "sensor noise sigma");
    c_sw->add_option("--print-res", sw_spec.print_patch_px, "printed pattern pixels per patch");
    c_sw->add_option("--print-pitch", sw_spec.print_pitch_mm, "printer color cell pitch, mm");
    c_sw->add_option("--print-blur", sw_spec.print_blur_mm, "ink dot gain blur, mm");
    c_sw->add_option("--seed", sw_spec.seed, "random seed");
    c_sw->add_option("-o,--out", sw_dir, "output directory");

    // ----------------------------------------------------------------- bench
    auto* c_bn = app.add_subcommand("bench", "throughput benchmark on a synthetic stream");
    ConfigCli bn_cc;
    bn_cc.attach(c_bn);
    bn_cc.opt_sub(c_bn, "--density-stride", &pipe::PipelineConfig::density_params,
                  &depth::DensityParams::downsample_stride, "splat grid stride");
    bn_cc.opt(c_bn, "--nhhd-stride", &pipe::PipelineConfig::nhhd_stride, "decomposition stride");
    int bn_frames = 12, bn_stride = 0;
    uint64_t bn_seed = 99;
    std::string bn_out;
    c_bn->add_option("--frames", bn_frames, "timed stream length");
    c_bn->add_option("--stride", bn_stride, "set density and decomposition stride together");
    c_bn->add_option("--seed", bn_seed, "stream seed");
    c_bn->add_option("-o,--out", bn_out, "report file (optional)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*c_pat) {
            const pattern::PatternImage img = pattern::generate_pattern(pp);
            const pattern::PatternReport rep = pattern::validate_pattern(img, pp);
            io::save_pnm(pat_out, img.pixels);
            io::Manifest m = pattern::pattern_manifest(img);
            m["constraint_satisfaction_rate"] = fmt(rep.constraint_satisfaction_rate);
            m["min_neighbor_gap"] = fmt(rep.min_neighbor_gap);
            io::save_manifest(pat_out + ".txt", m);
            std::cout << "pattern " << pp.resolution_px << "x" << pp.resolution_px
                      << " rate=" << rep.constraint_satisfaction_rate
                      << " min_gap=" << rep.min_neighbor_gap
                      << " fallbacks=" << rep.fallback_count << " -> " << pat_out << "\n";
        } else if (*c_sim) {
            sc.shape = sim::shape_from_name(sim_shape);
            const Image pat = io::load_pnm(sim_pattern);
            sim_cam.width = pat.w;
            sim_cam.height = pat.h;
            require(sim_frames >= 1, "simulate: --frames must be >= 1");
            const size_t total = size_t(sim_frames) + (sim_frames > 1 ? 1 : 0);
            const double full_depth = sc.press_depth_mm;
            const Vec2 full_shear = sc.shear_offset_mm;
            for (size_t k = 0; k < total; ++k) {
                sim::IndenterScenario step = sc;
                const double t = (sim_frames > 1) ? double(k) / sim_frames : 1.0;
                step.press_depth_mm = full_depth * t;
                step.shear_offset_mm = {full_shear.x * t, full_shear.y * t};
                const sim::GroundTruthFlow gt = sim::displacement_field(step, sim_cam);
                const sim::RenderResult rr = sim::render_deformed(pat, gt, sim_cam, sim_seed + k);
                io::save_pnm(seq_name(sim_out, k, total, ".ppm"), rr.frame);
                io::save_flo(seq_name(sim_out, k, total, ".flo"), gt.field, false);
            }
            io::Manifest m = sim::scenario_manifest(sc);
            m["frames"] = std::to_string(total);
            m["seed"] = std::to_string(sim_seed);
            m["px_per_mm"] = fmt(sim_cam.px_per_mm);
            io::save_manifest(sim_out + ".txt", m);
            std::cout << "simulated " << total << " frame(s) -> " << sim_out << "\n";
        } else if (*c_trk) {
            const pipe::PipelineConfig cfg = trk_cc.resolve();
            Image ref = io::load_pnm(trk_ref);
            std::vector<float> rmap;
            int rw = 0, rh = 0;
            if (!trk_remap.empty()) {
                rmap = io::load_rmap(trk_remap, rw, rh);
                ref = apply_remap(ref, rmap, rw, rh);
            }
            flow::AdaptiveTracker tracker(ref, cfg.rebase_threshold);
            for (size_t k = 0; k < trk_frames.size(); ++k) {
                Image frame = io::load_pnm(trk_frames[k]);
                if (!rmap.empty()) frame = apply_remap(frame, rmap, rw, rh);
                const FlowField cum = flow::adaptive_step(tracker, frame, cfg.flow_params);
                io::save_flo(seq_name(trk_out, k, trk_frames.size(), ".flo"), cum);
            }
            io::Manifest extra;
            extra["command"] = "track";
            extra["frames"] = std::to_string(trk_frames.size());
            extra["rebase_count"] = std::to_string(tracker.rebase_count);
            write_manifest(trk_out + ".txt", cfg, extra);
            std::cout << "tracked " << trk_frames.size() << " frame(s), rebases="
                      << tracker.rebase_count << " -> " << trk_out << "\n";
        } else if (*c_dep) {
            const pipe::PipelineConfig cfg = dep_cc.resolve();
            const FlowField flw = io::load_flo(dep_flow);
            const Image frame = io::load_pnm(dep_frame);
            const depth::DensityMap dm = depth::reconstruct_surface(
                flw, frame, cfg.density_params, cfg.guided_radius, cfg.guided_eps);
            io::save_dpth(dep_out + ".dpth", dm.d_p.w, dm.d_p.h, dm.d_p.v);
            io::save_pnm(dep_out + ".ppm", depth::heat_map(dm.d_p));
            io::Manifest extra;
            extra["command"] = "depth";
            extra["total_mass"] = fmt(dm.total_mass);
            extra["n_sources"] = std::to_string(dm.n_sources);
            write_manifest(dep_out + ".txt", cfg, extra);
            std::cout << "depth " << dm.d_p.w << "x" << dm.d_p.h << " mass=" << dm.total_mass
                      << " -> " << dep_out << ".dpth\n";
        } else if (*c_nh) {
            const FlowField flw = io::load_flo(nh_flow);
            Field vx, vy;
            pipe::decimate_flow(flw, nh_stride, vx, vy);
            const nhhd::NHHDComponents c = nhhd::nhhd(vx, vy);
            io::save_flo(nh_out + "_d.flo", field_pair_to_flow(c.dx, c.dy), false);
            io::save_flo(nh_out + "_r.flo", field_pair_to_flow(c.rx, c.ry), false);
            io::save_flo(nh_out + "_h.flo", field_pair_to_flow(c.hx, c.hy), false);
            const nhhd::QuickForce q = nhhd::quick_total_force(c);
            io::Manifest m;
            m["command"] = "nhhd";
            m["stride"] = std::to_string(nh_stride);
            m["normal_proxy"] = fmt(q.normal_proxy);
            m["shear_proxy_x"] = fmt(q.shear_proxy.x);
            m["shear_proxy_y"] = fmt(q.shear_proxy.y);
            io::save_manifest(nh_out + ".txt", m);
            std::cout << "nhhd " << c.w << "x" << c.h << " -> " << nh_out << "_{d,r,h}.flo\n";
        } else if (*c_cal) {
            const auto samples = force::samples_from_csv(io::load_csv(cal_data));
            const auto [model, report] = force::calibrate(samples, cal_split);
            force::save_model(cal_out, model);
            io::Manifest m;
            m["command"] = "calibrate";
            m["n_train"] = std::to_string(report.n_train);
            m["n_test"] = std::to_string(report.n_test);
            const char* axes[3] = {"normal", "shear_x", "shear_y"};
            for (int a = 0; a < 3; ++a) {
                m[std::string(axes[a]) + ".adjusted_r2"] = fmt(report.axis[size_t(a)].adjusted_r2);
                m[std::string(axes[a]) + ".rmse"] = fmt(report.axis[size_t(a)].rmse);
                m[std::string(axes[a]) + ".r2_defined"] =
                    report.axis[size_t(a)].r2_defined ? "1" : "0";
            }
            io::save_manifest(cal_out + ".report.txt", m);
            std::cout << "calibrated on " << report.n_train << "/" << samples.size() << " samples";
            for (int a = 0; a < 3; ++a)
                std::cout << " " << axes[a] << ": R2adj=" << report.axis[size_t(a)].adjusted_r2
                          << " rmse=" << report.axis[size_t(a)].rmse;
            std::cout << " -> " << cal_out << "\n";
        } else if (*c_est) {
            const FlowField flw = io::load_flo(est_flow);
            int dw = 0, dh = 0;
            const std::vector<double> dp_raw = io::load_dpth(est_depth, dw, dh);
            require(dw == flw.w && dh == flw.h, "estimate: depth raster does not match flow");
            const force::ForceModel model = force::load_model(est_model);
            Field dp_full(dw, dh);
            dp_full.v = dp_raw;
            for (double& v : dp_full.v) v = std::max(v, 0.0);
            Field vx, vy;
            pipe::decimate_flow(flw, est_stride, vx, vy);
            const Field dp = pipe::decimate_field(dp_full, est_stride);
            const nhhd::NHHDComponents comps = nhhd::nhhd(vx, vy);
            const force::PointFeatures pf =
                force::build_point_features(dp, comps, double(est_stride) * est_stride);
            const force::ForceDistribution dist = force::force_distribution(model, pf);
            io::save_dpth(est_out + "_fn.dpth", dist.f_normal.w, dist.f_normal.h,
                          dist.f_normal.v);
            io::Manifest m;
            m["command"] = "estimate";
            m["stride"] = std::to_string(est_stride);
            m["f_normal"] = fmt(dist.totals[0]);
            m["f_shear_x"] = fmt(dist.totals[1]);
            m["f_shear_y"] = fmt(dist.totals[2]);
            m["units"] = model.units;
            io::save_manifest(est_out + ".txt", m);
            std::cout << "force: normal=" << dist.totals[0] << " shear=(" << dist.totals[1] << ", "
                      << dist.totals[2] << ") " << model.units << " -> " << est_out << ".txt\n";
        } else if (*c_run) {
            const pipe::PipelineConfig base = run_cc.resolve();
            require(run_frames.size() >= 2, "run: need an initial reference plus frames");
            std::vector<float> rmap;
            int rw = 0, rh = 0;
            if (!run_remap.empty()) rmap = io::load_rmap(run_remap, rw, rh);
            auto load_frame = [&](const std::string& p) {
                Image f = io::load_pnm(p);
                return rmap.empty() ? f : apply_remap(f, rmap, rw, rh);
            };
            const Image initial = load_frame(run_frames[0]);
            pipe::PipelineConfig cfg = base;
            cfg.raster_w = initial.w;
            cfg.raster_h = initial.h;

            std::optional<force::ForceModel> model;
            if (!run_model.empty()) model = force::load_model(run_model);
            else
                std::cerr << "run: no model given; force stage disabled\n";

            fs::create_directories(run_dir);
            pipe::PipelineRunner runner(cfg, initial, model);
            int failures = 0, rebases = 0;
            for (size_t k = 1; k < run_frames.size(); ++k) {
                char idx[16];
                std::snprintf(idx, sizeof idx, "%03zu", k);
                try {
                    const Image frame = load_frame(run_frames[k]);
                    const pipe::FrameResult r = runner.step(frame);
                    rebases = r.rebase_count;
                    io::save_flo(run_dir + "/flow_" + idx + ".flo", r.cumulative);
                    io::save_dpth(run_dir + "/depth_" + idx + ".dpth", r.density_map.d_p.w,
                                  r.density_map.d_p.h, r.density_map.d_p.v);
                    if (r.has_forces) {
                        io::Manifest fm;
                        fm["f_normal"] = fmt(r.forces.totals[0]);
                        fm["f_shear_x"] = fmt(r.forces.totals[1]);
                        fm["f_shear_y"] = fmt(r.forces.totals[2]);
                        io::save_manifest(run_dir + "/force_" + idx + ".txt", fm);
                    }
                    std::cout << "frame " << idx << ": flow " << r.times.flow_ms << " ms, density "
                              << r.times.density_ms << " ms, nhhd " << r.times.nhhd_ms
                              << " ms, features " << r.times.features_ms << " ms\n";
                } catch (const std::exception& e) {
                    ++failures;
                    std::cerr << "frame " << idx << " failed: " << e.what() << "\n";
                }
            }
            io::Manifest extra;
            extra["command"] = "run";
            extra["frames"] = std::to_string(run_frames.size() - 1);
            extra["failures"] = std::to_string(failures);
            extra["rebase_count"] = std::to_string(rebases);
            extra["force_stage"] = model ? "1" : "0";
            write_manifest(run_dir + "/run.txt", cfg, extra);
            std::cout << "run complete: " << (run_frames.size() - 1 - size_t(failures)) << "/"
                      << run_frames.size() - 1 << " frames -> " << run_dir << "\n";
        } else if (*c_sw) {
            sw_spec.indenters.clear();
            for (const auto& n : sw_names) sw_spec.indenters.push_back(sim::shape_from_name(n));
            fs::create_directories(sw_dir);
            const pipe::PipelineConfig cfg;
            const auto rows = pipe::pattern_sweep(sw_spec, cfg);
            io::save_csv(sw_dir + "/sweep.csv", pipe::sweep_csv(rows));
            io::save_csv(sw_dir + "/sweep_stacked.csv",
                         pipe::sweep_stacked_csv(rows, sw_spec.indenters));
            const auto join = [](const std::vector<double>& v) {
                std::string s;
                for (size_t i = 0; i < v.size(); ++i) s += (i ? " " : "") + fmt(v[i]);
                return s;
            };
            std::string names;
            for (size_t i = 0; i < sw_names.size(); ++i) names += (i ? " " : "") + sw_names[i];
            io::Manifest m;
            m["command"] = "sweep";
            m["d_values"] = join(sw_spec.d_values);
            m["r_values"] = join(sw_spec.r_values);
            m["indenters"] = names;
            m["patches_per_side"] = std::to_string(sw_spec.patches_per_side);
            m["px_per_mm"] = fmt(sw_spec.px_per_mm);
            m["blur_sigma"] = fmt(sw_spec.blur_sigma);
            m["noise_sigma"] = fmt(sw_spec.noise_sigma);
            m["print_patch_px"] = std::to_string(sw_spec.print_patch_px);
            m["print_pitch_mm"] = fmt(sw_spec.print_pitch_mm);
            m["print_blur_mm"] = fmt(sw_spec.print_blur_mm);
            m["seed"] = std::to_string(sw_spec.seed);
            io::save_manifest(sw_dir + "/sweep.txt", m);
            for (const auto& row : rows)
                if (row.indenter == sw_spec.indenters.front())
                    std::cout << "d=" << row.d << " r=" << row.r << " patch_px=" << row.patch_px
                              << " delta_bar(first indenter)=" << row.delta_bar_px << "\n";
            std::cout << "sweep -> " << sw_dir << "/sweep.csv\n";
        } else if (*c_bn) {
            pipe::PipelineConfig cfg = bn_cc.resolve();
            if (bn_stride > 0) {
                cfg.density_params.downsample_stride = bn_stride;
                cfg.nhhd_stride = bn_stride;
            }
            const pipe::BenchReport rep = pipe::bench(cfg, bn_frames, bn_seed);
            const io::Manifest m = pipe::bench_manifest(rep);
            for (const auto& [k, v] : m) std::cout << k << "=" << v << "\n";
            if (!bn_out.empty()) io::save_manifest(bn_out, m);
        }
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    }
    return 0;
}
