#include "nudgesim/flow.hpp"

#include <cmath>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace nudgesim {

FlowField ground_truth_flow(const SceneState& before, const SceneState& after) {
    if (before.width != after.width || before.height != after.height ||
        before.objects.size() != after.objects.size())
        throw std::runtime_error("scene topology changed");
    for (size_t i = 0; i < before.objects.size(); ++i)
        if (after.find(before.objects[i].id) == nullptr)
            throw std::runtime_error("scene topology changed");

    const LabelImage labels_before = render_labels(before);
    const LabelImage labels_after = render_labels(after);

    // Per-object motion, body point p_world -> pose_after(pose_before^-1(p)).
    std::vector<Pose> motion(before.objects.size());
    std::vector<int> idx_of_id(1, -1);
    for (size_t i = 0; i < before.objects.size(); ++i) {
        const RigidObject& b = before.objects[i];
        const RigidObject* a = after.find(b.id);
        motion[i] = a->pose.compose(b.pose.inverse());
        if (static_cast<size_t>(b.id) >= idx_of_id.size()) idx_of_id.resize(b.id + 1, -1);
        idx_of_id[b.id] = static_cast<int>(i);
    }

    FlowField flow(before.width, before.height);
    for (int y = 0; y < flow.height; ++y) {
        for (int x = 0; x < flow.width; ++x) {
            const size_t i = flow.idx(x, y);
            const uint16_t label = labels_before.data[i];
            if (label == 0) {
                // Static plane; hidden when an object moves over it.
                flow.valid[i] = labels_after.data[i] == 0 ? 1 : 0;
                continue;
            }
            const Pose& m = motion[idx_of_id[label]];
            const Vec2 p{x + 0.5, y + 0.5};
            const Vec2 q = m.apply(p);
            flow.u[i] = q.x - p.x;
            flow.v[i] = q.y - p.y;
            const int qx = static_cast<int>(std::lround(q.x - 0.5));
            const int qy = static_cast<int>(std::lround(q.y - 0.5));
            flow.valid[i] = labels_after.in_bounds(qx, qy) && labels_after.at(qx, qy) == label ? 1 : 0;
        }
    }
    return flow;
}

UncertaintyMap synthesize_uncertainty(const SceneState& before, const Vec2& cam_shift, Rng rng) {
    const int w = before.width, h = before.height;

    // Foreground silhouette of the pile.
    const LabelImage labels = render_labels(before);
    auto fg_at = [&](int x, int y) { return labels.in_bounds(x, y) && labels.at(x, y) != 0; };

    const Vec2 bg_shift = cam_shift / 4.0;
    RealImage indicator(w, h, 0.0);
    for (int y = 0; y < h; ++y) {
        for (int x = 0; x < w; ++x) {
            // Where would this pixel's content come from under the two
            // displacement layers? Mismatch marks occlusion/disocclusion.
            const int ox = x - static_cast<int>(std::lround(cam_shift.x));
            const int oy = y - static_cast<int>(std::lround(cam_shift.y));
            const int bx = x - static_cast<int>(std::lround(bg_shift.x));
            const int by = y - static_cast<int>(std::lround(bg_shift.y));
            if (fg_at(ox, oy) != fg_at(bx, by)) indicator.at(x, y) = 1.0;
        }
    }

    const RealImage blurred = gaussian_blur(indicator, 3.0);
    UncertaintyMap map(w, h);
    for (size_t i = 0; i < map.rho.size(); ++i)
        map.rho[i] = blurred.data[i] + rng.uniform(0.0, 0.05);
    return map;
}

FlowField inject_noise(const FlowField& flow, const NoiseSpec& spec) {
    if (spec.eps_m == 0.0 && spec.eps_a == 0.0) return flow;

    FlowField out = flow;
    Rng rng(spec.rng_seed);
    const double eps_a_rad = spec.eps_a * M_PI / 180.0;
    for (size_t i = 0; i < flow.size(); ++i) {
        // Unit draws scaled by the bounds, so sweeps over eps share draws.
        const double um = rng.uniform(-1.0, 1.0);
        const double ua = rng.uniform(-1.0, 1.0);
        const double mag = flow.magnitude(i) * (1.0 + spec.eps_m * um / 100.0);
        double ang = flow.angle(i);
        if (spec.angle_mode == AngleNoiseMode::Additive)
            ang += eps_a_rad * ua;
        else
            ang *= 1.0 + spec.eps_a * ua;
        out.u[i] = mag * std::cos(ang);
        out.v[i] = mag * std::sin(ang);
    }
    return out;
}

namespace {

constexpr char kFloMagic[4] = {'P', 'I', 'E', 'H'};

void put_u32(std::string& buf, uint32_t v) {
    buf.push_back(static_cast<char>(v & 0xff));
    buf.push_back(static_cast<char>((v >> 8) & 0xff));
    buf.push_back(static_cast<char>((v >> 16) & 0xff));
    buf.push_back(static_cast<char>((v >> 24) & 0xff));
}

void put_f32(std::string& buf, float f) {
    uint32_t v;
    std::memcpy(&v, &f, 4);
    put_u32(buf, v);
}

uint32_t get_u32(const unsigned char* p) {
    return static_cast<uint32_t>(p[0]) | (static_cast<uint32_t>(p[1]) << 8) |
           (static_cast<uint32_t>(p[2]) << 16) | (static_cast<uint32_t>(p[3]) << 24);
}

float get_f32(const unsigned char* p) {
    const uint32_t v = get_u32(p);
    float f;
    std::memcpy(&f, &v, 4);
    return f;
}

} // namespace

void write_flo(const std::string& path, const FlowField& flow) {
    std::string buf;
    buf.reserve(12 + flow.size() * 8);
    buf.append(kFloMagic, 4);
    put_u32(buf, static_cast<uint32_t>(flow.width));
    put_u32(buf, static_cast<uint32_t>(flow.height));
    for (size_t i = 0; i < flow.size(); ++i) {
        put_f32(buf, static_cast<float>(flow.u[i]));
        put_f32(buf, static_cast<float>(flow.v[i]));
    }
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open for writing: " + path);
    out.write(buf.data(), static_cast<std::streamsize>(buf.size()));
    if (!out) throw std::runtime_error("short write: " + path);
}

FlowField read_flo(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open: " + path);
    std::string buf((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    if (buf.size() < 12 || std::memcmp(buf.data(), kFloMagic, 4) != 0)
        throw std::runtime_error("flo: bad magic");
    const unsigned char* p = reinterpret_cast<const unsigned char*>(buf.data());
    const int w = static_cast<int32_t>(get_u32(p + 4));
    const int h = static_cast<int32_t>(get_u32(p + 8));
    if (w <= 0 || h <= 0 || buf.size() != 12 + static_cast<size_t>(w) * h * 8)
        throw std::runtime_error("flo: truncated file");
    FlowField flow(w, h);
    for (size_t i = 0; i < flow.size(); ++i) {
        flow.u[i] = get_f32(p + 12 + i * 8);
        flow.v[i] = get_f32(p + 12 + i * 8 + 4);
    }
    return flow;
}

LabelImage uncertainty_to_pgm(const UncertaintyMap& map) {
    LabelImage img(map.width, map.height, 0);
    for (size_t i = 0; i < map.rho.size(); ++i) {
        const double scaled = map.rho[i] * 10000.0;
        img.data[i] = static_cast<uint16_t>(std::min(65535.0, std::max(0.0, scaled)));
    }
    return img;
}

} // namespace nudgesim
