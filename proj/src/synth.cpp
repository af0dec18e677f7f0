#include "hc/synth.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace hc {

const char* joint_name(int j) {
    static const char* names[] = {"head", "l_shoulder", "r_shoulder", "l_elbow",
                                  "r_elbow", "l_wrist", "r_wrist"};
    return (j >= 0 && j < kJointCount) ? names[j] : "joint";
}

namespace {

struct Rgb {
    float r, g, b;
};

// One saturated marker color per joint so the detector has something local to
// latch onto; limbs and torso are drawn in muted grays.
const Rgb kJointColor[kJointCount] = {
    {0.95f, 0.20f, 0.20f},  // head
    {0.20f, 0.90f, 0.25f},  // l_shoulder
    {0.25f, 0.45f, 0.95f},  // r_shoulder
    {0.95f, 0.85f, 0.15f},  // l_elbow
    {0.90f, 0.25f, 0.90f},  // r_elbow
    {0.15f, 0.90f, 0.90f},  // l_wrist
    {0.95f, 0.55f, 0.15f},  // r_wrist
};

void blend(Tensor<float>& img, int x, int y, const Rgb& c, float a) {
    if (a <= 0.f) return;
    const int H = img.dim(1), W = img.dim(2);
    if (x < 0 || x >= W || y < 0 || y >= H) return;
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    const std::size_t i = static_cast<std::size_t>(y) * W + x;
    img.v[i] = img.v[i] * (1 - a) + c.r * a;
    img.v[plane + i] = img.v[plane + i] * (1 - a) + c.g * a;
    img.v[2 * plane + i] = img.v[2 * plane + i] * (1 - a) + c.b * a;
}

// Coverage-style anti-aliasing: alpha ramps linearly over the last pixel.
void draw_disk(Tensor<float>& img, Pt c, double radius, const Rgb& col, float alpha = 1.f) {
    const int x0 = static_cast<int>(std::floor(c.x - radius - 1)), x1 = static_cast<int>(std::ceil(c.x + radius + 1));
    const int y0 = static_cast<int>(std::floor(c.y - radius - 1)), y1 = static_cast<int>(std::ceil(c.y + radius + 1));
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double d = std::hypot(x - c.x, y - c.y);
            const float cov = static_cast<float>(std::clamp(radius - d + 0.5, 0.0, 1.0));
            blend(img, x, y, col, cov * alpha);
        }
}

void draw_line(Tensor<float>& img, Pt a, Pt b, double halfwidth, const Rgb& col, float alpha = 1.f) {
    const double pad = halfwidth + 1.5;
    const int x0 = static_cast<int>(std::floor(std::min(a.x, b.x) - pad));
    const int x1 = static_cast<int>(std::ceil(std::max(a.x, b.x) + pad));
    const int y0 = static_cast<int>(std::floor(std::min(a.y, b.y) - pad));
    const int y1 = static_cast<int>(std::ceil(std::max(a.y, b.y) + pad));
    const double dx = b.x - a.x, dy = b.y - a.y;
    const double len2 = std::max(1e-9, dx * dx + dy * dy);
    for (int y = y0; y <= y1; ++y)
        for (int x = x0; x <= x1; ++x) {
            const double t = std::clamp(((x - a.x) * dx + (y - a.y) * dy) / len2, 0.0, 1.0);
            const double d = std::hypot(x - (a.x + t * dx), y - (a.y + t * dy));
            const float cov = static_cast<float>(std::clamp(halfwidth - d + 0.5, 0.0, 1.0));
            blend(img, x, y, col, cov * alpha);
        }
}

}  // namespace

FigureGeom sample_figure(Rng& rng, const SampleSpec& spec, double center_x_frac) {
    FigureGeom f;
    f.joints.resize(kJointCount);
    const double m = std::min(spec.h, spec.w);
    f.unit = m * rng.uniform(0.85, 1.1);
    const double px = spec.w * (center_x_frac + rng.uniform(-0.04, 0.04));
    const double py = spec.h * rng.uniform(0.74, 0.84);
    f.pelvis = {px, py};
    const double torso_len = 0.36 * f.unit;
    const double torso_ang = rng.uniform(-0.14, 0.14);  // radians off vertical
    f.neck = {px + torso_len * std::sin(torso_ang), py - torso_len * std::cos(torso_ang)};
    f.torso = {(f.neck.x + f.pelvis.x) * 0.5, (f.neck.y + f.pelvis.y) * 0.5};
    f.joints[kHead] = {f.neck.x + 0.13 * f.unit * std::sin(torso_ang + rng.uniform(-0.2, 0.2)),
                       f.neck.y - 0.13 * f.unit * std::cos(torso_ang + rng.uniform(-0.2, 0.2))};
    // shoulders sit on the line through the neck perpendicular to the torso
    const double shoulder_half = 0.15 * f.unit;
    const double px_ = std::cos(torso_ang), py_ = std::sin(torso_ang);
    f.joints[kLShoulder] = {f.neck.x - shoulder_half * px_, f.neck.y - shoulder_half * py_};
    f.joints[kRShoulder] = {f.neck.x + shoulder_half * px_, f.neck.y + shoulder_half * py_};
    // arms: angles measured from straight down, biased outward
    for (int side = 0; side < 2; ++side) {
        const int sh = side == 0 ? kLShoulder : kRShoulder;
        const int el = side == 0 ? kLElbow : kRElbow;
        const int wr = side == 0 ? kLWrist : kRWrist;
        const double sgn = side == 0 ? -1.0 : 1.0;
        const double upper = 0.17 * f.unit, lower = 0.15 * f.unit;
        const double a1 = rng.uniform(-0.5, 1.2) * sgn;
        f.joints[el] = {f.joints[sh].x + upper * std::sin(a1), f.joints[sh].y + upper * std::cos(a1)};
        const double a2 = a1 + rng.uniform(-1.2, 1.2);
        f.joints[wr] = {f.joints[el].x + lower * std::sin(a2), f.joints[el].y + lower * std::cos(a2)};
    }
    // keep every joint (and the head disk) inside the canvas
    const double margin = 0.06 * f.unit + 2.0;
    for (auto& p : f.joints) {
        p.x = std::clamp(p.x, margin, spec.w - 1 - margin);
        p.y = std::clamp(p.y, margin, spec.h - 1 - margin);
    }
    return f;
}

void render_figure(Tensor<float>& img, const FigureGeom& f) {
    const Rgb body{0.55f, 0.52f, 0.50f};
    const Rgb limb{0.62f, 0.60f, 0.58f};
    const double lw = std::max(0.9, 0.016 * f.unit);
    draw_line(img, f.pelvis, f.neck, lw * 1.8, body);
    draw_line(img, f.joints[kLShoulder], f.joints[kRShoulder], lw * 1.2, body);
    draw_disk(img, f.joints[kHead], 0.055 * f.unit, {0.70f, 0.62f, 0.55f});
    for (int side = 0; side < 2; ++side) {
        const int sh = side == 0 ? kLShoulder : kRShoulder;
        const int el = side == 0 ? kLElbow : kRElbow;
        const int wr = side == 0 ? kLWrist : kRWrist;
        draw_line(img, f.joints[sh], f.joints[el], lw, limb);
        draw_line(img, f.joints[el], f.joints[wr], lw, limb);
    }
    const double mr = std::max(1.3, 0.028 * f.unit);
    for (int j = 0; j < kJointCount; ++j) draw_disk(img, f.joints[j], mr, kJointColor[j]);
}

AnnotatedSample generate_sample(Rng& rng, const SampleSpec& spec) {
    AnnotatedSample s;
    s.image = Tensor<float>({3, spec.h, spec.w});
    const float base = static_cast<float>(rng.uniform(0.06, 0.14));
    s.image.fill(base);

    const int nblobs = spec.clutter_min + rng.uniform_int(spec.clutter_max - spec.clutter_min + 1);
    for (int i = 0; i < nblobs; ++i) {
        const Pt c{rng.uniform(0, spec.w), rng.uniform(0, spec.h)};
        const double r = rng.uniform(2.0, 6.0);
        const Rgb col{static_cast<float>(rng.uniform(0.1, 0.4)), static_cast<float>(rng.uniform(0.1, 0.4)),
                      static_cast<float>(rng.uniform(0.1, 0.4))};
        draw_disk(s.image, c, r, col, 0.5f);
    }

    const bool distractor = rng.bernoulli(spec.distractor_prob);
    const bool main_left = distractor ? rng.bernoulli(0.5) : false;
    if (distractor) {
        FigureGeom d = sample_figure(rng, spec, main_left ? 0.74 : 0.26);
        render_figure(s.image, d);
    }
    FigureGeom f = sample_figure(rng, spec, distractor ? (main_left ? 0.26 : 0.74) : 0.5);
    render_figure(s.image, f);

    s.joints = f.joints;
    s.valid.assign(kJointCount, 1);
    s.torso = f.torso;
    s.person_scale = static_cast<float>(f.unit / std::min(spec.h, spec.w));
    return s;
}

AnnotatedSample augment_with(const AnnotatedSample& s, const AffineDraw& d) {
    const int H = s.image.dim(1), W = s.image.dim(2);
    const double cx = (W - 1) * 0.5, cy = (H - 1) * 0.5;
    const double th = d.rot_deg * 3.14159265358979323846 / 180.0;
    const double fs = d.flip ? -1.0 : 1.0;
    // forward map: p' = C + R(th) * S * F * (p - C)
    const double a00 = std::cos(th) * d.scale * fs, a01 = -std::sin(th) * d.scale;
    const double a10 = std::sin(th) * d.scale * fs, a11 = std::cos(th) * d.scale;
    // inverse for image resampling
    const double det = a00 * a11 - a01 * a10;
    const double i00 = a11 / det, i01 = -a01 / det, i10 = -a10 / det, i11 = a00 / det;

    AnnotatedSample out;
    out.image = Tensor<float>({3, H, W});
    out.person_scale = static_cast<float>(s.person_scale * d.scale);
    const std::size_t plane = static_cast<std::size_t>(H) * W;
    for (int y = 0; y < H; ++y)
        for (int x = 0; x < W; ++x) {
            const double rx = x - cx, ry = y - cy;
            const double sx = cx + i00 * rx + i01 * ry;
            const double sy = cy + i10 * rx + i11 * ry;
            const int ix = static_cast<int>(std::floor(sx)), iy = static_cast<int>(std::floor(sy));
            const double fx = sx - ix, fy = sy - iy;
            for (int c = 0; c < 3; ++c) {
                auto tap = [&](int yy, int xx) -> double {
                    if (xx < 0 || xx >= W || yy < 0 || yy >= H) return 0.0;
                    return s.image.v[c * plane + static_cast<std::size_t>(yy) * W + xx];
                };
                const double v = (1 - fy) * ((1 - fx) * tap(iy, ix) + fx * tap(iy, ix + 1)) +
                                 fy * ((1 - fx) * tap(iy + 1, ix) + fx * tap(iy + 1, ix + 1));
                out.image.v[c * plane + static_cast<std::size_t>(y) * W + x] = static_cast<float>(v);
            }
        }

    auto map_pt = [&](const Pt& p) -> Pt {
        return {cx + a00 * (p.x - cx) + a01 * (p.y - cy), cy + a10 * (p.x - cx) + a11 * (p.y - cy)};
    };
    out.joints.resize(s.joints.size());
    out.valid.assign(s.joints.size(), 0);
    for (std::size_t j = 0; j < s.joints.size(); ++j) {
        std::size_t src = j;
        if (d.flip) {  // swap left/right labels
            if (j == kLShoulder) src = kRShoulder;
            else if (j == kRShoulder) src = kLShoulder;
            else if (j == kLElbow) src = kRElbow;
            else if (j == kRElbow) src = kLElbow;
            else if (j == kLWrist) src = kRWrist;
            else if (j == kRWrist) src = kLWrist;
        }
        const Pt p = map_pt(s.joints[src]);
        out.joints[j] = p;
        out.valid[j] = (s.valid[src] && p.x >= 0 && p.x <= W - 1 && p.y >= 0 && p.y <= H - 1) ? 1 : 0;
    }
    out.torso = map_pt(s.torso);
    out.torso.x = std::clamp(out.torso.x, 0.0, double(W - 1));
    out.torso.y = std::clamp(out.torso.y, 0.0, double(H - 1));
    return out;
}

AnnotatedSample augment(const AnnotatedSample& s, Rng& rng) {
    AffineDraw d;
    d.rot_deg = rng.uniform(-20.0, 20.0);
    d.scale = rng.uniform(0.5, 1.5);
    d.flip = rng.bernoulli(0.5);
    return augment_with(s, d);
}

Dataset make_dataset(std::uint64_t seed, int count, const SampleSpec& spec) {
    Dataset ds;
    ds.spec = spec;
    ds.samples.resize(count);
    Rng master(seed);
#pragma omp parallel for schedule(dynamic)
    for (int i = 0; i < count; ++i) {
        Rng r = master.split(i);
        ds.samples[i] = generate_sample(r, spec);
    }
    return ds;
}

namespace {

constexpr char kMagic[4] = {'H', 'C', 'D', 'S'};

template <typename T>
void put(std::ofstream& f, T v) {
    f.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

struct Reader {
    std::ifstream f;
    std::size_t off = 0;
    explicit Reader(const std::string& path) : f(path, std::ios::binary) {
        if (!f) throw std::runtime_error("dataset: cannot open " + path);
    }
    template <typename T>
    T get(const char* what) {
        T v;
        f.read(reinterpret_cast<char*>(&v), sizeof(T));
        if (!f)
            throw std::runtime_error(std::string("dataset: truncated reading ") + what + " at byte " +
                                     std::to_string(off));
        off += sizeof(T);
        return v;
    }
    void get_bytes(void* dst, std::size_t n, const char* what) {
        f.read(reinterpret_cast<char*>(dst), static_cast<std::streamsize>(n));
        if (!f)
            throw std::runtime_error(std::string("dataset: truncated reading ") + what + " at byte " +
                                     std::to_string(off));
        off += n;
    }
};

}  // namespace

void save_dataset(const Dataset& ds, const std::string& path, int image_format) {
    if (image_format != 0 && image_format != 1)
        throw std::invalid_argument("dataset: image_format must be 0 (f32) or 1 (u8)");
    std::ofstream f(path, std::ios::binary);
    if (!f) throw std::runtime_error("dataset: cannot write " + path);
    f.write(kMagic, 4);
    put<std::uint32_t>(f, 1);  // version
    put<std::uint32_t>(f, static_cast<std::uint32_t>(ds.samples.size()));
    put<std::uint16_t>(f, static_cast<std::uint16_t>(ds.spec.h));
    put<std::uint16_t>(f, static_cast<std::uint16_t>(ds.spec.w));
    put<std::uint8_t>(f, 3);
    put<std::uint8_t>(f, static_cast<std::uint8_t>(ds.spec.joints));
    put<std::uint8_t>(f, static_cast<std::uint8_t>(image_format));
    put<std::uint8_t>(f, 0);
    for (const auto& s : ds.samples) {
        for (std::size_t j = 0; j < s.joints.size(); ++j) {
            put<float>(f, static_cast<float>(s.joints[j].x));
            put<float>(f, static_cast<float>(s.joints[j].y));
        }
        f.write(reinterpret_cast<const char*>(s.valid.data()), static_cast<std::streamsize>(s.valid.size()));
        put<float>(f, static_cast<float>(s.torso.x));
        put<float>(f, static_cast<float>(s.torso.y));
        put<float>(f, s.person_scale);
        if (image_format == 0) {
            f.write(reinterpret_cast<const char*>(s.image.data()),
                    static_cast<std::streamsize>(s.image.numel() * sizeof(float)));
        } else {
            std::vector<std::uint8_t> q(s.image.numel());
            for (std::size_t i = 0; i < q.size(); ++i)
                q[i] = static_cast<std::uint8_t>(std::clamp(s.image.v[i], 0.f, 1.f) * 255.f + 0.5f);
            f.write(reinterpret_cast<const char*>(q.data()), static_cast<std::streamsize>(q.size()));
        }
    }
    if (!f) throw std::runtime_error("dataset: write failed for " + path);
}

Dataset load_dataset(const std::string& path) {
    Reader r(path);
    char magic[4];
    r.get_bytes(magic, 4, "magic");
    if (std::memcmp(magic, kMagic, 4) != 0)
        throw std::runtime_error("dataset: bad magic at byte 0 in " + path);
    const auto version = r.get<std::uint32_t>("version");
    if (version != 1) throw std::runtime_error("dataset: unsupported version " + std::to_string(version));
    const auto count = r.get<std::uint32_t>("count");
    Dataset ds;
    ds.spec.h = r.get<std::uint16_t>("height");
    ds.spec.w = r.get<std::uint16_t>("width");
    const auto channels = r.get<std::uint8_t>("channels");
    if (channels != 3) throw std::runtime_error("dataset: expected 3 channels");
    ds.spec.joints = r.get<std::uint8_t>("joints");
    const auto image_format = r.get<std::uint8_t>("image_format");
    r.get<std::uint8_t>("reserved");
    ds.samples.resize(count);
    for (auto& s : ds.samples) {
        s.joints.resize(ds.spec.joints);
        s.valid.resize(ds.spec.joints);
        for (int j = 0; j < ds.spec.joints; ++j) {
            s.joints[j].x = r.get<float>("joint x");
            s.joints[j].y = r.get<float>("joint y");
        }
        r.get_bytes(s.valid.data(), s.valid.size(), "valid flags");
        s.torso.x = r.get<float>("torso x");
        s.torso.y = r.get<float>("torso y");
        s.person_scale = r.get<float>("person scale");
        s.image = Tensor<float>({3, ds.spec.h, ds.spec.w});
        if (image_format == 0) {
            r.get_bytes(s.image.data(), s.image.numel() * sizeof(float), "image");
        } else {
            std::vector<std::uint8_t> q(s.image.numel());
            r.get_bytes(q.data(), q.size(), "image");
            for (std::size_t i = 0; i < q.size(); ++i) s.image.v[i] = q[i] / 255.f;
        }
    }
    return ds;
}

}  // namespace hc
