#include "irsr/synth/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <map>
#include <stdexcept>

#include "irsr/core/kv.hpp"
#include "irsr/core/rng.hpp"
#include "irsr/io/png_io.hpp"
#include "irsr/synth/mask_codec.hpp"

namespace fs = std::filesystem;

namespace irsr::synth {

const char* shape_kind_name(ShapeKind k) {
    switch (k) {
        case ShapeKind::Disk: return "disk";
        case ShapeKind::Rectangle: return "rectangle";
        case ShapeKind::Triangle: return "triangle";
        case ShapeKind::Ring: return "ring";
    }
    return "?";
}

ShapeKind shape_kind_from_name(const std::string& name) {
    if (name == "disk") return ShapeKind::Disk;
    if (name == "rectangle") return ShapeKind::Rectangle;
    if (name == "triangle") return ShapeKind::Triangle;
    if (name == "ring") return ShapeKind::Ring;
    throw std::runtime_error("unknown shape kind: " + name);
}

namespace {

struct Color {
    double r, g, b;
};

Color random_color(Rng& rng, double lo, double hi) {
    return {rng.uniform(lo, hi), rng.uniform(lo, hi), rng.uniform(lo, hi)};
}

struct Texture {
    TextureKind kind = TextureKind::Flat;
    Color c1{0, 0, 0}, c2{0, 0, 0};
    double dir_x = 1.0, dir_y = 0.0;  // gradient / stripe direction
    double period = 6.0;              // stripes
    int cell = 4;                     // checker
    double proj_min = 0.0, proj_range = 1.0;

    Color sample(int x, int y) const {
        switch (kind) {
            case TextureKind::Flat:
                return c1;
            case TextureKind::Gradient: {
                double t = (x * dir_x + y * dir_y - proj_min) / proj_range;
                t = std::clamp(t, 0.0, 1.0);
                return {c1.r + t * (c2.r - c1.r), c1.g + t * (c2.g - c1.g), c1.b + t * (c2.b - c1.b)};
            }
            case TextureKind::Stripes: {
                double p = x * dir_x + y * dir_y;
                long band = static_cast<long>(std::floor(p / period));
                return (band % 2 + 2) % 2 == 0 ? c1 : c2;
            }
            case TextureKind::Checker: {
                int parity = (x / cell + y / cell) % 2;
                return parity == 0 ? c1 : c2;
            }
        }
        return c1;
    }
};

struct Shape {
    ShapeKind kind = ShapeKind::Disk;
    double cx = 0, cy = 0;
    double r_out = 0, r_in = 0;     // disk / ring
    double hx = 0, hy = 0, rot = 0; // rectangle
    double vx[3] = {0, 0, 0}, vy[3] = {0, 0, 0};  // triangle
    Texture tex;

    bool contains(double x, double y) const {
        switch (kind) {
            case ShapeKind::Disk: {
                double dx = x - cx, dy = y - cy;
                return dx * dx + dy * dy <= r_out * r_out;
            }
            case ShapeKind::Ring: {
                double dx = x - cx, dy = y - cy;
                double d2 = dx * dx + dy * dy;
                return d2 <= r_out * r_out && d2 >= r_in * r_in;
            }
            case ShapeKind::Rectangle: {
                double dx = x - cx, dy = y - cy;
                double u = dx * std::cos(rot) + dy * std::sin(rot);
                double v = -dx * std::sin(rot) + dy * std::cos(rot);
                return std::abs(u) <= hx && std::abs(v) <= hy;
            }
            case ShapeKind::Triangle: {
                auto side = [&](int i, int j) {
                    return (vx[j] - vx[i]) * (y - vy[i]) - (vy[j] - vy[i]) * (x - vx[i]);
                };
                double s0 = side(0, 1), s1 = side(1, 2), s2 = side(2, 0);
                bool has_neg = s0 < 0 || s1 < 0 || s2 < 0;
                bool has_pos = s0 > 0 || s1 > 0 || s2 > 0;
                return !(has_neg && has_pos);
            }
        }
        return false;
    }
};

Texture random_texture(Rng& rng, const std::vector<TextureKind>& kinds, int width, int height) {
    Texture t;
    t.kind = kinds[rng.next_below(kinds.size())];
    t.c1 = random_color(rng, 0.2, 1.0);
    t.c2 = random_color(rng, 0.2, 1.0);
    double angle = rng.uniform(0.0, 2.0 * M_PI);
    t.dir_x = std::cos(angle);
    t.dir_y = std::sin(angle);
    t.period = rng.uniform(4.0, 12.0);
    t.cell = rng.uniform_int(3, 8);
    // normalize gradient projection over the canvas extent
    double corners[4] = {0.0, width * t.dir_x, height * t.dir_y, width * t.dir_x + height * t.dir_y};
    double pmin = *std::min_element(corners, corners + 4);
    double pmax = *std::max_element(corners, corners + 4);
    t.proj_min = pmin;
    t.proj_range = std::max(pmax - pmin, 1e-9);
    return t;
}

Shape random_shape(Rng& rng, const SceneSpec& spec) {
    Shape s;
    s.kind = spec.shape_palette[rng.next_below(spec.shape_palette.size())];
    const double W = spec.width, H = spec.height;
    const double dim = std::min(W, H);
    s.cx = rng.uniform(0.2 * W, 0.8 * W);
    s.cy = rng.uniform(0.2 * H, 0.8 * H);
    s.r_out = std::max(3.0, rng.uniform(0.10, 0.28) * dim);
    s.r_in = std::max(s.r_out * rng.uniform(0.4, 0.65), s.r_out - std::max(2.0, 0.12 * dim));
    s.hx = std::max(2.0, rng.uniform(0.08, 0.24) * W);
    s.hy = std::max(2.0, rng.uniform(0.08, 0.24) * H);
    s.rot = rng.uniform(0.0, M_PI);
    double base = rng.uniform(0.0, 2.0 * M_PI);
    double tr = std::max(4.0, rng.uniform(0.12, 0.30) * dim);
    for (int k = 0; k < 3; ++k) {
        double phi = base + k * 2.0 * M_PI / 3.0 + rng.uniform(-0.3, 0.3);
        s.vx[k] = s.cx + tr * std::cos(phi);
        s.vy[k] = s.cy + tr * std::sin(phi);
    }
    s.tex = random_texture(rng, spec.texture_kinds, spec.width, spec.height);
    return s;
}

}  // namespace

SceneSample generate_scene(const SceneSpec& spec, int patch_size) {
    if (patch_size < 1)
        throw std::invalid_argument("generate_scene: patch_size must be >= 1");
    if (spec.width % patch_size != 0 || spec.height % patch_size != 0)
        throw std::invalid_argument("generate_scene: scene dims must be divisible by the patch size");
    if (spec.num_instances < 1 || spec.num_instances > 16)
        throw std::invalid_argument("generate_scene: num_instances must lie in [1, 16]");
    if (spec.shape_palette.empty() || spec.texture_kinds.empty())
        throw std::invalid_argument("generate_scene: empty shape or texture palette");

    Rng rng(spec.seed);

    SceneSample out;
    out.image = Image(spec.height, spec.width);
    out.mask = IdMask(spec.height, spec.width, 0);

    // muted background gradient so instances stand out
    Color b1 = random_color(rng, 0.05, 0.35);
    Color b2 = random_color(rng, 0.05, 0.35);
    double bg_angle = rng.uniform(0.0, 2.0 * M_PI);
    double gx = std::cos(bg_angle), gy = std::sin(bg_angle);
    double corners[4] = {0.0, spec.width * gx, spec.height * gy, spec.width * gx + spec.height * gy};
    double pmin = *std::min_element(corners, corners + 4);
    double prange = std::max(*std::max_element(corners, corners + 4) - pmin, 1e-9);
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            double t = (x * gx + y * gy - pmin) / prange;
            out.image.at(y, x, 0) = b1.r + t * (b2.r - b1.r);
            out.image.at(y, x, 1) = b1.g + t * (b2.g - b1.g);
            out.image.at(y, x, 2) = b1.b + t * (b2.b - b1.b);
        }

    // painter's algorithm, draw order = provisional id
    std::vector<Shape> shapes;
    shapes.reserve(spec.num_instances);
    for (int i = 0; i < spec.num_instances; ++i)
        shapes.push_back(random_shape(rng, spec));

    for (int i = 0; i < static_cast<int>(shapes.size()); ++i) {
        const Shape& s = shapes[i];
        for (int y = 0; y < spec.height; ++y)
            for (int x = 0; x < spec.width; ++x) {
                if (!s.contains(x + 0.5, y + 0.5))
                    continue;
                Color c = s.tex.sample(x, y);
                out.image.at(y, x, 0) = c.r;
                out.image.at(y, x, 1) = c.g;
                out.image.at(y, x, 2) = c.b;
                out.mask.at(y, x) = i + 1;
            }
    }

    // drop fully occluded shapes, re-compact ids to 1..N in draw order
    std::vector<int64_t> area(shapes.size() + 1, 0);
    for (int32_t v : out.mask.data)
        ++area[v];
    std::vector<int32_t> remap(shapes.size() + 1, 0);
    int32_t next_id = 0;
    for (size_t i = 1; i < area.size(); ++i)
        if (area[i] > 0)
            remap[i] = ++next_id;
    for (int32_t& v : out.mask.data)
        v = remap[v];

    out.instances.resize(next_id);
    for (size_t i = 1; i < remap.size(); ++i) {
        if (remap[i] == 0)
            continue;
        InstanceInfo& info = out.instances[remap[i] - 1];
        info.id = remap[i];
        info.category = shapes[i - 1].kind;
        info.x0 = spec.width;
        info.y0 = spec.height;
        info.x1 = -1;
        info.y1 = -1;
    }
    for (int y = 0; y < spec.height; ++y)
        for (int x = 0; x < spec.width; ++x) {
            int32_t id = out.mask.at(y, x);
            if (id == 0)
                continue;
            InstanceInfo& info = out.instances[id - 1];
            info.area++;
            info.x0 = std::min(info.x0, x);
            info.y0 = std::min(info.y0, y);
            info.x1 = std::max(info.x1, x);
            info.y1 = std::max(info.y1, y);
        }

    out.image.clamp01();
    return out;
}

void save_scene(const std::string& dir, const std::string& name, const SceneSample& sample) {
    fs::create_directories(dir);
    write_png_rgb8((fs::path(dir) / (name + "_img.png")).string(), sample.image);
    write_png_rgb8((fs::path(dir) / (name + "_mask.png")).string(), encode_mask_rgb(sample.mask));

    KvFile meta;
    meta.set_int("schema_version", 1);
    meta.set_int("width", sample.image.width);
    meta.set_int("height", sample.image.height);
    meta.set_int("num_instances", static_cast<int64_t>(sample.instances.size()));
    for (const InstanceInfo& ins : sample.instances) {
        char buf[160];
        std::snprintf(buf, sizeof(buf), "kind:%s bbox:%d,%d,%d,%d area:%lld", shape_kind_name(ins.category), ins.x0,
                      ins.y0, ins.x1, ins.y1, static_cast<long long>(ins.area));
        meta.set("instance." + std::to_string(ins.id), buf);
    }
    meta.save((fs::path(dir) / (name + "_meta.txt")).string());
}

SceneSample load_scene(const std::string& dir, const std::string& name) {
    SceneSample s;
    s.image = read_png_rgb8((fs::path(dir) / (name + "_img.png")).string());
    s.mask = decode_mask_rgb(read_png_rgb8((fs::path(dir) / (name + "_mask.png")).string()));

    KvFile meta = KvFile::load((fs::path(dir) / (name + "_meta.txt")).string());
    int n = static_cast<int>(meta.get_int("num_instances"));
    for (int id = 1; id <= n; ++id) {
        std::string row = meta.get("instance." + std::to_string(id));
        InstanceInfo info;
        info.id = id;
        char kind[32];
        long long a = 0;
        if (std::sscanf(row.c_str(), "kind:%31s bbox:%d,%d,%d,%d area:%lld", kind, &info.x0, &info.y0, &info.x1,
                        &info.y1, &a) != 6)
            throw std::runtime_error("malformed instance row in " + name + "_meta.txt");
        info.area = a;
        info.category = shape_kind_from_name(kind);
        s.instances.push_back(info);
    }
    return s;
}

}  // namespace irsr::synth
