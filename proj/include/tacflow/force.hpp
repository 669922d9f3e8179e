#pragma once

// Cubic-feature linear force model. Per point the 6x3 term matrix x(p)
// stacks powers 1..3 of the processed density D_p (column 1, rows 1-3) and
// powers 1..3 of the tangential components s_x = h_px + r_px (rows 1-3)
// and s_y = h_py + r_py (rows 4-6) in columns 2 and 3, which are equal by
// construction. Forces are f(p) = diag(A x(p)) with A 3x6, a_14..16 = 0;
// totals use the field-aggregated X (sums of powers).

#include <array>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"
#include "tacflow/io.hpp"
#include "tacflow/linalg.hpp"
#include "tacflow/nhhd.hpp"

namespace tacflow::force {

struct ForceModel {
    // rows: normal, shearX, shearY; a[0][3..5] must stay zero
    std::array<std::array<double, 6>, 3> A{};
    int feature_order = 3;
    int stride = 1;
    std::string units = "N";
};

// X (and per-point x) in column-major storage: col(k) is a 6-vector.
struct Features {
    std::array<std::array<double, 6>, 3> col{}; // col[k][row]
};

struct PointFeatures {
    Field d1, d2, d3;    // D_p powers
    Field sx1, sx2, sx3; // (h_px + r_px) powers
    Field sy1, sy2, sy3; // (h_py + r_py) powers
    double area_scale = 1.0;
};

inline PointFeatures build_point_features(const Field& d_p, const nhhd::NHHDComponents& c,
                                          double area_scale = 1.0) {
    require(d_p.w == c.w && d_p.h == c.h, "build_features: raster mismatch");
    for (double v : d_p.v) require(v >= 0.0, "build_features: negative D_p input");
    PointFeatures f;
    f.area_scale = area_scale;
    const int W = d_p.w, H = d_p.h;
    f.d1 = Field(W, H);
    f.d2 = Field(W, H);
    f.d3 = Field(W, H);
    f.sx1 = Field(W, H);
    f.sx2 = Field(W, H);
    f.sx3 = Field(W, H);
    f.sy1 = Field(W, H);
    f.sy2 = Field(W, H);
    f.sy3 = Field(W, H);
    for (size_t i = 0; i < d_p.v.size(); ++i) {
        const double d = d_p.v[i];
        const double sx = c.hx.v[i] + c.rx.v[i];
        const double sy = c.hy.v[i] + c.ry.v[i];
        f.d1.v[i] = d;
        f.d2.v[i] = d * d;
        f.d3.v[i] = d * d * d;
        f.sx1.v[i] = sx;
        f.sx2.v[i] = sx * sx;
        f.sx3.v[i] = sx * sx * sx;
        f.sy1.v[i] = sy;
        f.sy2.v[i] = sy * sy;
        f.sy3.v[i] = sy * sy * sy;
    }
    return f;
}

namespace detail {

inline double kahan_sum(const std::vector<double>& v) {
    double s = 0.0, comp = 0.0;
    for (double x : v) {
        const double y = x - comp;
        const double t = s + y;
        comp = (t - s) - y;
        s = t;
    }
    return s;
}

} // namespace detail

// Field aggregation per Eq-of-sums reading: X entries are sums of powers
// over the raster, scaled by the represented area per sample point.
inline Features aggregate_features(const PointFeatures& f) {
    Features X;
    const double a = f.area_scale;
    const std::array<const Field*, 6> col1{&f.d1, &f.d2, &f.d3, nullptr, nullptr, nullptr};
    const std::array<const Field*, 6> col23{&f.sx1, &f.sx2, &f.sx3, &f.sy1, &f.sy2, &f.sy3};
    for (int row = 0; row < 6; ++row) {
        X.col[0][size_t(row)] = col1[size_t(row)] ? a * detail::kahan_sum(col1[size_t(row)]->v) : 0.0;
        const double s = a * detail::kahan_sum(col23[size_t(row)]->v);
        X.col[1][size_t(row)] = s;
        X.col[2][size_t(row)] = s;
    }
    return X;
}

inline std::array<double, 3> total_force(const ForceModel& m, const Features& X) {
    std::array<double, 3> F{};
    for (int k = 0; k < 3; ++k)
        for (int j = 0; j < 6; ++j) F[size_t(k)] += m.A[size_t(k)][size_t(j)] * X.col[size_t(k)][size_t(j)];
    return F;
}

struct ForceDistribution {
    Field f_normal, f_shear_x, f_shear_y; // N per represented cell
    std::array<double, 3> totals{};       // diag(A X)
};

inline ForceDistribution force_distribution(const ForceModel& m, const PointFeatures& f) {
    ForceDistribution out;
    const int W = f.d1.w, H = f.d1.h;
    out.f_normal = Field(W, H);
    out.f_shear_x = Field(W, H);
    out.f_shear_y = Field(W, H);
    const double a = f.area_scale;
    for (size_t i = 0; i < f.d1.v.size(); ++i) {
        out.f_normal.v[i] = a * (m.A[0][0] * f.d1.v[i] + m.A[0][1] * f.d2.v[i] + m.A[0][2] * f.d3.v[i]);
        const double c2[6] = {f.sx1.v[i], f.sx2.v[i], f.sx3.v[i], f.sy1.v[i], f.sy2.v[i], f.sy3.v[i]};
        double fx = 0.0, fy = 0.0;
        for (int j = 0; j < 6; ++j) {
            fx += m.A[1][size_t(j)] * c2[j];
            fy += m.A[2][size_t(j)] * c2[j];
        }
        out.f_shear_x.v[i] = a * fx;
        out.f_shear_y.v[i] = a * fy;
    }
    out.totals = total_force(m, aggregate_features(f));
    return out;
}

// ------------------------------------------------------------------ datasets

struct ForceSample {
    Features X;
    std::array<double, 3> F{};
};

inline io::Csv samples_to_csv(const std::vector<ForceSample>& samples) {
    io::Csv t;
    for (int row = 1; row <= 6; ++row)
        for (int col = 1; col <= 3; ++col)
            t.header.push_back("x_" + std::to_string(row) + std::to_string(col));
    t.header.insert(t.header.end(), {"f_normal", "f_shear_x", "f_shear_y"});
    for (const auto& s : samples) {
        std::vector<double> r;
        for (int row = 0; row < 6; ++row)
            for (int col = 0; col < 3; ++col) r.push_back(s.X.col[size_t(col)][size_t(row)]);
        r.insert(r.end(), {s.F[0], s.F[1], s.F[2]});
        t.rows.push_back(std::move(r));
    }
    return t;
}

inline std::vector<ForceSample> samples_from_csv(const io::Csv& t) {
    require(t.header.size() == 21, "force dataset: expected 18 feature + 3 force columns");
    std::vector<ForceSample> out;
    out.reserve(t.rows.size());
    for (const auto& r : t.rows) {
        ForceSample s;
        size_t k = 0;
        for (int row = 0; row < 6; ++row)
            for (int col = 0; col < 3; ++col) s.X.col[size_t(col)][size_t(row)] = r[k++];
        s.F = {r[18], r[19], r[20]};
        out.push_back(s);
    }
    return out;
}

// ----------------------------------------------------------------- calibration

struct AxisFit {
    double adjusted_r2 = 0.0;
    double rmse = 0.0;
    bool r2_defined = true;
};

struct FitReport {
    std::array<AxisFit, 3> axis{};
    size_t n_train = 0;
    size_t n_test = 0;
};

namespace detail {

inline AxisFit evaluate_axis(const std::vector<double>& truth, const std::vector<double>& pred,
                             int n_predictors) {
    AxisFit fit;
    const size_t n = truth.size();
    double mean = 0.0;
    for (double v : truth) mean += v;
    mean /= double(n);
    double ss_res = 0.0, ss_tot = 0.0;
    for (size_t i = 0; i < n; ++i) {
        ss_res += (truth[i] - pred[i]) * (truth[i] - pred[i]);
        ss_tot += (truth[i] - mean) * (truth[i] - mean);
    }
    fit.rmse = std::sqrt(ss_res / double(n));
    if (ss_tot <= 0.0) {
        fit.r2_defined = false;
        return fit;
    }
    const double r2 = 1.0 - ss_res / ss_tot;
    const double denom = double(n) - n_predictors - 1.0;
    fit.adjusted_r2 = denom > 0.0 ? 1.0 - (1.0 - r2) * (double(n) - 1.0) / denom : r2;
    return fit;
}

} // namespace detail

// Per-row ordinary least squares honoring the structural zeros: the normal
// row uses the three density aggregates, the shear rows use all six
// tangential aggregates. split = leading fraction used for training.
inline std::pair<ForceModel, FitReport> calibrate(const std::vector<ForceSample>& dataset,
                                                  double split = 0.8) {
    require(dataset.size() >= 20, "calibrate: need at least 20 samples");
    require(split > 0.0 && split < 1.0, "calibrate: split in (0,1)");
    const size_t n_train = size_t(std::llround(split * double(dataset.size())));
    require(n_train >= 7 && n_train < dataset.size(), "calibrate: degenerate split");

    ForceModel model;
    FitReport report;
    report.n_train = n_train;
    report.n_test = dataset.size() - n_train;

    const int active[3] = {3, 6, 6};
    for (int axis = 0; axis < 3; ++axis) {
        const int p = active[axis];
        Mat A(n_train, size_t(p));
        std::vector<double> b(n_train);
        for (size_t i = 0; i < n_train; ++i) {
            for (int j = 0; j < p; ++j) A(i, size_t(j)) = dataset[i].X.col[size_t(axis)][size_t(j)];
            b[i] = dataset[i].F[size_t(axis)];
        }
        // equilibrate columns so power features of different orders do not
        // wreck the conditioning
        std::vector<double> cscale(size_t(p), 1.0);
        for (int j = 0; j < p; ++j) {
            double mx = 0.0;
            for (size_t i = 0; i < n_train; ++i) mx = std::max(mx, std::fabs(A(i, size_t(j))));
            if (mx > 0.0) {
                cscale[size_t(j)] = mx;
                for (size_t i = 0; i < n_train; ++i) A(i, size_t(j)) /= mx;
            }
        }
        std::vector<double> coef;
        try {
            coef = lstsq(A, b);
        } catch (const std::exception&) {
            fail("calibrate: rank-deficient design matrix on axis " + std::to_string(axis) +
                 "; add more diverse contact scenarios");
        }
        for (int j = 0; j < p; ++j)
            model.A[size_t(axis)][size_t(j)] = coef[size_t(j)] / cscale[size_t(j)];

        std::vector<double> truth, pred;
        truth.reserve(report.n_test);
        pred.reserve(report.n_test);
        for (size_t i = n_train; i < dataset.size(); ++i) {
            double yhat = 0.0;
            for (int j = 0; j < p; ++j)
                yhat += model.A[size_t(axis)][size_t(j)] * dataset[i].X.col[size_t(axis)][size_t(j)];
            truth.push_back(dataset[i].F[size_t(axis)]);
            pred.push_back(yhat);
        }
        report.axis[size_t(axis)] = detail::evaluate_axis(truth, pred, p);
    }
    return {model, report};
}

// ----------------------------------------------------------------- model files

inline void save_model(const std::string& path, const ForceModel& m) {
    io::Manifest man;
    char buf[40];
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j) {
            std::snprintf(buf, sizeof buf, "%.17g", m.A[size_t(i)][size_t(j)]);
            man["a_" + std::to_string(i + 1) + std::to_string(j + 1)] = buf;
        }
    man["feature_order"] = std::to_string(m.feature_order);
    man["stride"] = std::to_string(m.stride);
    man["units"] = m.units;
    io::save_manifest(path, man);
}

inline ForceModel load_model(const std::string& path) {
    const io::Manifest man = io::load_manifest(path);
    ForceModel m;
    for (int i = 0; i < 3; ++i)
        for (int j = 0; j < 6; ++j)
            m.A[size_t(i)][size_t(j)] =
                io::get_num(man, "a_" + std::to_string(i + 1) + std::to_string(j + 1), 0.0);
    m.feature_order = int(io::get_num(man, "feature_order", 3));
    m.stride = int(io::get_num(man, "stride", 1));
    m.units = io::get_str(man, "units", "N");
    require(m.A[0][3] == 0.0 && m.A[0][4] == 0.0 && m.A[0][5] == 0.0,
            "load_model: normal-row tangential coefficients must be zero");
    return m;
}

} // namespace tacflow::force
