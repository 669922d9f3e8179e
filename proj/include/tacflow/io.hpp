#pragma once

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "tacflow/common.hpp"
#include "tacflow/image.hpp"

namespace tacflow::io {

// ---------------------------------------------------------------- raw helpers

inline void write_u32le(std::ostream& os, uint32_t v) {
    unsigned char b[4] = {(unsigned char)(v & 0xff), (unsigned char)((v >> 8) & 0xff),
                          (unsigned char)((v >> 16) & 0xff), (unsigned char)((v >> 24) & 0xff)};
    os.write(reinterpret_cast<const char*>(b), 4);
}

inline uint32_t read_u32le(std::istream& is) {
    unsigned char b[4];
    is.read(reinterpret_cast<char*>(b), 4);
    require(bool(is), "read_u32le: truncated stream");
    return uint32_t(b[0]) | uint32_t(b[1]) << 8 | uint32_t(b[2]) << 16 | uint32_t(b[3]) << 24;
}

inline void write_f32le(std::ostream& os, float v) {
    uint32_t u;
    std::memcpy(&u, &v, 4);
    write_u32le(os, u);
}

inline float read_f32le(std::istream& is) {
    const uint32_t u = read_u32le(is);
    float v;
    std::memcpy(&v, &u, 4);
    return v;
}

// ------------------------------------------------------------- pixmaps (P5/P6)

inline int pnm_next_int(std::istream& is) {
    int ch = is.get();
    for (;;) {
        while (ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n') ch = is.get();
        if (ch == '#') {
            while (ch != '\n' && ch != EOF) ch = is.get();
            continue;
        }
        break;
    }
    int val = 0;
    bool any = false;
    while (ch >= '0' && ch <= '9') {
        val = val * 10 + (ch - '0');
        any = true;
        ch = is.get();
    }
    require(any, "pnm: malformed header");
    return val;
}

inline void save_pnm(const std::string& path, const Image& img) {
    require(img.c == 1 || img.c == 3, "save_pnm: 1 or 3 channels");
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "save_pnm: cannot open " + path);
    os << (img.c == 3 ? "P6" : "P5") << "\n" << img.w << " " << img.h << "\n255\n";
    std::vector<unsigned char> row(size_t(img.w) * img.c);
    for (int y = 0; y < img.h; ++y) {
        for (int x = 0; x < img.w; ++x)
            for (int ch = 0; ch < img.c; ++ch) {
                const float v = clamp(img.at(y, x, ch), 0.0f, 1.0f);
                row[size_t(x) * img.c + ch] = (unsigned char)std::lround(v * 255.0f);
            }
        os.write(reinterpret_cast<const char*>(row.data()), std::streamsize(row.size()));
    }
    require(bool(os), "save_pnm: write failed " + path);
}

inline Image load_pnm(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "load_pnm: cannot open " + path);
    char m0 = 0, m1 = 0;
    is.get(m0);
    is.get(m1);
    require(m0 == 'P' && (m1 == '5' || m1 == '6'), "load_pnm: not a binary pixmap");
    const int c = (m1 == '6') ? 3 : 1;
    const int w = pnm_next_int(is);
    const int h = pnm_next_int(is);
    const int maxv = pnm_next_int(is);
    require(maxv == 255, "load_pnm: only 8-bit rasters supported");
    Image img(w, h, c);
    std::vector<unsigned char> row(size_t(w) * c);
    for (int y = 0; y < h; ++y) {
        is.read(reinterpret_cast<char*>(row.data()), std::streamsize(row.size()));
        require(bool(is), "load_pnm: truncated pixel data");
        for (int x = 0; x < w; ++x)
            for (int ch = 0; ch < c; ++ch)
                img.at(y, x, ch) = float(row[size_t(x) * c + ch]) / 255.0f;
    }
    return img;
}

// ------------------------------------------------------------------ flow files

// Middlebury-style: magic "PIEH" (the float 202021.25 LE), int32 width and
// height, then row-major interleaved (u, v) float32. The validity mask goes
// to a sidecar 8-bit raster at <path>.mask.pgm.
inline void save_flo(const std::string& path, const FlowField& f, bool with_mask = true) {
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "save_flo: cannot open " + path);
    os.write("PIEH", 4);
    write_u32le(os, uint32_t(f.w));
    write_u32le(os, uint32_t(f.h));
    for (int y = 0; y < f.h; ++y)
        for (int x = 0; x < f.w; ++x) {
            write_f32le(os, f.u[f.idx(y, x)]);
            write_f32le(os, f.v[f.idx(y, x)]);
        }
    require(bool(os), "save_flo: write failed " + path);
    if (with_mask) {
        Image m(f.w, f.h, 1);
        for (size_t i = 0; i < f.valid.size(); ++i) m.data[i] = f.valid[i] ? 1.0f : 0.0f;
        save_pnm(path + ".mask.pgm", m);
    } else {
        std::remove((path + ".mask.pgm").c_str()); // drop any stale sidecar
    }
}

inline FlowField load_flo(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "load_flo: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, "PIEH", 4) == 0, "load_flo: bad magic");
    const int w = int(read_u32le(is));
    const int h = int(read_u32le(is));
    require(w > 0 && h > 0 && w < 1 << 16 && h < 1 << 16, "load_flo: bad dimensions");
    FlowField f(w, h);
    for (int y = 0; y < h; ++y)
        for (int x = 0; x < w; ++x) {
            f.u[f.idx(y, x)] = read_f32le(is);
            f.v[f.idx(y, x)] = read_f32le(is);
        }
    std::ifstream ms(path + ".mask.pgm", std::ios::binary);
    if (ms) {
        ms.close();
        const Image m = load_pnm(path + ".mask.pgm");
        if (m.w == w && m.h == h && m.c == 1)
            for (size_t i = 0; i < f.valid.size(); ++i) f.valid[i] = m.data[i] > 0.5f ? 1 : 0;
    }
    return f;
}

// ----------------------------------------------------------------- depth files

// Same header style as the flow format, magic "DPTH", single float32 channel.
inline void save_dpth(const std::string& path, int w, int h, const std::vector<double>& depth) {
    require(depth.size() == size_t(w) * h, "save_dpth: size mismatch");
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "save_dpth: cannot open " + path);
    os.write("DPTH", 4);
    write_u32le(os, uint32_t(w));
    write_u32le(os, uint32_t(h));
    for (double v : depth) write_f32le(os, float(v));
    require(bool(os), "save_dpth: write failed " + path);
}

inline std::vector<double> load_dpth(const std::string& path, int& w, int& h) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "load_dpth: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, "DPTH", 4) == 0, "load_dpth: bad magic");
    w = int(read_u32le(is));
    h = int(read_u32le(is));
    require(w > 0 && h > 0 && w < 1 << 16 && h < 1 << 16, "load_dpth: bad dimensions");
    std::vector<double> depth(size_t(w) * h);
    for (auto& v : depth) v = read_f32le(is);
    return depth;
}

// ------------------------------------------------------------------ remap files

// Optional undistortion: per-pixel source coordinates, magic "RMAP", then
// int32 width/height and row-major interleaved (src_x, src_y) float32.
inline void save_rmap(const std::string& path, int w, int h, const std::vector<float>& xy) {
    require(xy.size() == size_t(w) * h * 2, "save_rmap: size mismatch");
    std::ofstream os(path, std::ios::binary);
    require(bool(os), "save_rmap: cannot open " + path);
    os.write("RMAP", 4);
    write_u32le(os, uint32_t(w));
    write_u32le(os, uint32_t(h));
    for (float v : xy) write_f32le(os, v);
    require(bool(os), "save_rmap: write failed " + path);
}

inline std::vector<float> load_rmap(const std::string& path, int& w, int& h) {
    std::ifstream is(path, std::ios::binary);
    require(bool(is), "load_rmap: cannot open " + path);
    char magic[4];
    is.read(magic, 4);
    require(bool(is) && std::memcmp(magic, "RMAP", 4) == 0, "load_rmap: bad magic");
    w = int(read_u32le(is));
    h = int(read_u32le(is));
    require(w > 0 && h > 0 && w < 1 << 16 && h < 1 << 16, "load_rmap: bad dimensions");
    std::vector<float> xy(size_t(w) * h * 2);
    for (auto& v : xy) v = read_f32le(is);
    return xy;
}

// ------------------------------------------------------------------- manifests

using Manifest = std::map<std::string, std::string>;

inline std::string trim(const std::string& s) {
    size_t a = s.find_first_not_of(" \t\r\n");
    size_t b = s.find_last_not_of(" \t\r\n");
    return a == std::string::npos ? "" : s.substr(a, b - a + 1);
}

inline Manifest parse_manifest(std::istream& is) {
    Manifest m;
    std::string line;
    while (std::getline(is, line)) {
        const std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        const size_t eq = t.find('=');
        require(eq != std::string::npos, "manifest: expected key=value: " + t);
        m[trim(t.substr(0, eq))] = trim(t.substr(eq + 1));
    }
    return m;
}

inline Manifest load_manifest(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "load_manifest: cannot open " + path);
    return parse_manifest(is);
}

inline void save_manifest(const std::string& path, const Manifest& m) {
    std::ofstream os(path);
    require(bool(os), "save_manifest: cannot open " + path);
    for (const auto& [k, v] : m) os << k << "=" << v << "\n";
    require(bool(os), "save_manifest: write failed " + path);
}

inline double get_num(const Manifest& m, const std::string& key, double fallback) {
    auto it = m.find(key);
    return it == m.end() ? fallback : std::stod(it->second);
}

inline std::string get_str(const Manifest& m, const std::string& key, const std::string& fallback) {
    auto it = m.find(key);
    return it == m.end() ? fallback : it->second;
}

// ------------------------------------------------------------------------- csv

struct Csv {
    std::vector<std::string> header;
    std::vector<std::vector<double>> rows;
};

inline void save_csv(const std::string& path, const Csv& t) {
    std::ofstream os(path);
    require(bool(os), "save_csv: cannot open " + path);
    char buf[64];
    for (size_t i = 0; i < t.header.size(); ++i) os << (i ? "," : "") << t.header[i];
    os << "\n";
    for (const auto& row : t.rows) {
        for (size_t i = 0; i < row.size(); ++i) {
            std::snprintf(buf, sizeof buf, "%.17g", row[i]);
            os << (i ? "," : "") << buf;
        }
        os << "\n";
    }
    require(bool(os), "save_csv: write failed " + path);
}

inline Csv load_csv(const std::string& path) {
    std::ifstream is(path);
    require(bool(is), "load_csv: cannot open " + path);
    Csv t;
    std::string line;
    require(bool(std::getline(is, line)), "load_csv: empty file " + path);
    std::stringstream hs(line);
    std::string cell;
    while (std::getline(hs, cell, ',')) t.header.push_back(trim(cell));
    while (std::getline(is, line)) {
        if (trim(line).empty()) continue;
        std::stringstream rs(line);
        std::vector<double> row;
        while (std::getline(rs, cell, ',')) row.push_back(std::stod(trim(cell)));
        require(row.size() == t.header.size(), "load_csv: ragged row in " + path);
        t.rows.push_back(std::move(row));
    }
    return t;
}

} // namespace tacflow::io
