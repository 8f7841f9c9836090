#include "nudgesim/scene.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

namespace nudgesim {

ShapeSet parse_shape_set(const std::string& name) {
    if (name == "convex") return ShapeSet::Convex;
    if (name == "concave") return ShapeSet::Concave;
    if (name == "mixed") return ShapeSet::Mixed;
    if (name == "squares") return ShapeSet::Squares;
    throw std::runtime_error("unknown shape_set: " + name);
}

std::string shape_set_name(ShapeSet s) {
    switch (s) {
        case ShapeSet::Convex: return "convex";
        case ShapeSet::Concave: return "concave";
        case ShapeSet::Mixed: return "mixed";
        case ShapeSet::Squares: return "squares";
    }
    return "mixed";
}

namespace {

Polygon centered(Polygon poly) {
    const Vec2 c = polygon_centroid(poly);
    for (Vec2& v : poly) v = v - c;
    // Enforce CCW orientation.
    if (polygon_area(poly) < 0.0) std::reverse(poly.begin(), poly.end());
    return poly;
}

Polygon make_convex(Rng& rng, double radius) {
    for (int attempt = 0; attempt < 16; ++attempt) {
        const int n = rng.uniform_int(4, 12);
        std::vector<Vec2> pts;
        pts.reserve(n);
        for (int i = 0; i < n; ++i) {
            const double ang = rng.uniform(0.0, 2.0 * M_PI);
            const double r = radius * rng.uniform(0.55, 1.0);
            pts.push_back({r * std::cos(ang), r * std::sin(ang)});
        }
        Polygon hull = convex_hull(pts);
        if (hull.size() >= 3 && std::abs(polygon_area(hull)) > 0.15 * radius * radius)
            return centered(hull);
    }
    // Fall back to a regular hexagon.
    Polygon hex;
    for (int i = 0; i < 6; ++i) {
        const double a = i * M_PI / 3.0;
        hex.push_back({radius * std::cos(a), radius * std::sin(a)});
    }
    return centered(hex);
}

Polygon make_concave(Rng& rng, double radius) {
    // Star polygon: alternating outer/inner radii, 6..12 vertices.
    const int spikes = rng.uniform_int(3, 6);
    Polygon poly;
    const double phase = rng.uniform(0.0, 2.0 * M_PI);
    for (int i = 0; i < spikes * 2; ++i) {
        const double a = phase + i * M_PI / spikes;
        const double r = (i % 2 == 0) ? radius : radius * rng.uniform(0.5, 0.72);
        poly.push_back({r * std::cos(a), r * std::sin(a)});
    }
    return centered(poly);
}

Polygon make_square(Rng& rng, double radius) {
    const double h = radius / std::sqrt(2.0);
    (void)rng;
    return {{-h, -h}, {h, -h}, {h, h}, {-h, h}};
}

Polygon make_shape(ShapeSet set, Rng& rng, double radius) {
    switch (set) {
        case ShapeSet::Convex: return make_convex(rng, radius);
        case ShapeSet::Concave: return make_concave(rng, radius);
        case ShapeSet::Squares: return make_square(rng, radius);
        case ShapeSet::Mixed:
            return rng.uniform01() < 0.5 ? make_convex(rng, radius) : make_concave(rng, radius);
    }
    return make_convex(rng, radius);
}

double bounding_radius(const Polygon& poly) {
    double r = 0.0;
    for (const Vec2& v : poly) r = std::max(r, v.norm());
    return r;
}

// Sutherland-Hodgman clip of convex `subject` against convex CCW `clip`.
Polygon clip_convex(const Polygon& subject, const Polygon& clip) {
    Polygon out = subject;
    const size_t n = clip.size();
    for (size_t i = 0; i < n && !out.empty(); ++i) {
        const Vec2 a = clip[i];
        const Vec2 b = clip[(i + 1) % n];
        const Vec2 edge = b - a;
        Polygon in = std::move(out);
        out.clear();
        for (size_t j = 0; j < in.size(); ++j) {
            const Vec2 p = in[j];
            const Vec2 q = in[(j + 1) % in.size()];
            const bool pin = edge.cross(p - a) >= 0.0;
            const bool qin = edge.cross(q - a) >= 0.0;
            if (pin) out.push_back(p);
            if (pin != qin) {
                const double denom = edge.cross(q - p);
                const double s = denom != 0.0 ? edge.cross(a - p) / denom : 0.0;
                out.push_back(p + (q - p) * s);
            }
        }
    }
    return out;
}

double hull_overlap_fraction(const RigidObject& a, const RigidObject& b) {
    const Polygon ha = convex_hull(a.world_vertices());
    const Polygon hb = convex_hull(b.world_vertices());
    if (ha.size() < 3 || hb.size() < 3) return 0.0;
    const Polygon inter = clip_convex(ha, hb);
    if (inter.size() < 3) return 0.0;
    const double ai = std::abs(polygon_area(inter));
    const double amin = std::min(std::abs(polygon_area(ha)), std::abs(polygon_area(hb)));
    return amin > 0.0 ? ai / amin : 0.0;
}

} // namespace

SceneState generate_scene(const SceneConfig& config, uint64_t seed) {
    if (config.n_min < 1 || config.n_max < config.n_min)
        throw std::runtime_error("invalid object count range");
    Rng rng = Rng(seed).fork(rng_stream::kScene);

    const int n = rng.uniform_int(config.n_min, config.n_max);
    if (2 * config.glue_pairs > n)
        throw std::runtime_error("glue_pairs exceeds object count");

    SceneState scene;
    scene.width = config.table_w;
    scene.height = config.table_h;
    scene.table_bounds = {0.0, 0.0, static_cast<double>(config.table_w),
                          static_cast<double>(config.table_h)};
    scene.rng_seed = seed;

    for (int round = 0; round < 20; ++round) {
        scene.objects.clear();
        std::vector<double> radii;
        bool ok = true;

        for (int i = 0; i < n && ok; ++i) {
            const double radius = rng.uniform(config.radius_min, config.radius_max);
            RigidObject obj;
            obj.id = i + 1;
            obj.vertices = make_shape(config.shape_set, rng, radius);
            const double r = bounding_radius(obj.vertices);
            const double margin = r + 4.0;
            const bool is_glue_partner = config.glue_pairs > 0 && i < 2 * config.glue_pairs && (i % 2 == 1);
            if (i < 2 * config.glue_pairs) obj.glue_group = i / 2;

            const double cx0 = scene.table_bounds.x1 / 2.0;
            const double cy0 = scene.table_bounds.y1 / 2.0;

            bool placed = false;
            for (int attempt = 0; attempt < 300 && !placed; ++attempt) {
                Vec2 c;
                if (i == 0) {
                    c = {cx0 + rng.uniform(-40.0, 40.0), cy0 + rng.uniform(-40.0, 40.0)};
                } else {
                    const int anchor_idx = is_glue_partner ? i - 1 : rng.uniform_int(0, i - 1);
                    const RigidObject& anchor = scene.objects[anchor_idx];
                    const double d = is_glue_partner
                        ? rng.uniform(0.62, 0.80) * (radii[anchor_idx] + r)
                        : rng.uniform(0.52, 0.85) * (radii[anchor_idx] + r);
                    const double phi = rng.uniform(0.0, 2.0 * M_PI);
                    c = anchor.centroid() + Vec2{d * std::cos(phi), d * std::sin(phi)};
                }
                if (c.x < margin || c.x > scene.table_bounds.x1 - margin ||
                    c.y < margin || c.y > scene.table_bounds.y1 - margin)
                    continue;

                obj.pose = {c.x, c.y, 0.0};
                bool valid = true;
                for (size_t j = 0; j < scene.objects.size() && valid; ++j) {
                    const RigidObject& other = scene.objects[j];
                    if ((c - other.centroid()).norm() >= config.clutter_threshold) valid = false;
                    const bool mate = is_glue_partner && static_cast<int>(j) == i - 1;
                    const double cap = mate ? 0.6 : config.overlap_cap;
                    if (valid && hull_overlap_fraction(obj, other) > cap) valid = false;
                }
                if (valid) placed = true;
            }
            if (!placed) { ok = false; break; }
            scene.objects.push_back(obj);
            radii.push_back(r);
        }

        if (ok) {
            // Random draw order for occlusion.
            std::vector<int> ranks(n);
            for (int i = 0; i < n; ++i) ranks[i] = i;
            for (int i = n - 1; i > 0; --i)
                std::swap(ranks[i], ranks[rng.uniform_int(0, i)]);
            for (int i = 0; i < n; ++i) scene.objects[i].z_rank = ranks[i];
            return scene;
        }
    }
    throw std::runtime_error("cannot pack pile");
}

namespace {

void fill_polygon(LabelImage& img, const Polygon& poly, uint16_t label) {
    double ymin = 1e18, ymax = -1e18;
    for (const Vec2& v : poly) {
        ymin = std::min(ymin, v.y);
        ymax = std::max(ymax, v.y);
    }
    const int y0 = std::max(0, static_cast<int>(std::floor(ymin - 0.5)));
    const int y1 = std::min(img.height - 1, static_cast<int>(std::ceil(ymax)));
    const size_t n = poly.size();
    std::vector<double> xs;
    for (int y = y0; y <= y1; ++y) {
        const double yc = y + 0.5;
        xs.clear();
        for (size_t i = 0; i < n; ++i) {
            const Vec2& a = poly[i];
            const Vec2& b = poly[(i + 1) % n];
            // Half-open span in y so shared vertices are counted once.
            if ((a.y <= yc && yc < b.y) || (b.y <= yc && yc < a.y))
                xs.push_back(a.x + (yc - a.y) / (b.y - a.y) * (b.x - a.x));
        }
        std::sort(xs.begin(), xs.end());
        for (size_t i = 0; i + 1 < xs.size(); i += 2) {
            int xlo = static_cast<int>(std::ceil(xs[i] - 0.5));
            int xhi = static_cast<int>(std::ceil(xs[i + 1] - 0.5)) - 1;
            xlo = std::max(xlo, 0);
            xhi = std::min(xhi, img.width - 1);
            for (int x = xlo; x <= xhi; ++x) img.at(x, y) = label;
        }
    }
}

Pose nudge_transform(const NudgeCommand& cmd) {
    // Rotation by twist about the contact point, then the commanded shove.
    const double c = std::cos(cmd.twist), s = std::sin(cmd.twist);
    const Vec2 t{cmd.point.x - (c * cmd.point.x - s * cmd.point.y) + cmd.magnitude * cmd.direction.x,
                 cmd.point.y - (s * cmd.point.x + c * cmd.point.y) + cmd.magnitude * cmd.direction.y};
    return {t.x, t.y, cmd.twist};
}

std::vector<int> group_members(const SceneState& scene, int idx) {
    std::vector<int> out{idx};
    const auto& g = scene.objects[idx].glue_group;
    if (!g) return out;
    out.clear();
    for (size_t i = 0; i < scene.objects.size(); ++i)
        if (scene.objects[i].glue_group == g) out.push_back(static_cast<int>(i));
    return out;
}

void translate_group(SceneState& scene, const std::vector<int>& members, const Vec2& d) {
    for (int idx : members) {
        scene.objects[idx].pose.x += d.x;
        scene.objects[idx].pose.y += d.y;
    }
}

void clamp_group(SceneState& scene, const std::vector<int>& members) {
    const Rect& tb = scene.table_bounds;
    double dx = 0.0, dy = 0.0;
    for (int idx : members) {
        const Vec2 c = scene.objects[idx].centroid();
        dx = std::max(dx, tb.x0 - c.x);
        dy = std::max(dy, tb.y0 - c.y);
    }
    double dx2 = 0.0, dy2 = 0.0;
    for (int idx : members) {
        const Vec2 c = scene.objects[idx].centroid();
        dx2 = std::min(dx2, tb.x1 - c.x);
        dy2 = std::min(dy2, tb.y1 - c.y);
    }
    const Vec2 d{dx != 0.0 ? dx : dx2, dy != 0.0 ? dy : dy2};
    if (d.x != 0.0 || d.y != 0.0) translate_group(scene, members, d);
}

} // namespace

int topmost_object_at(const SceneState& scene, const Vec2& p) {
    int best_id = 0;
    int best_rank = -1;
    for (const RigidObject& obj : scene.objects) {
        if (obj.z_rank > best_rank && point_in_polygon(obj.world_vertices(), p)) {
            best_rank = obj.z_rank;
            best_id = obj.id;
        }
    }
    return best_id;
}

std::optional<NudgeCommand> resolve_contact(const SceneState& scene, const NudgeCommand& cmd,
                                            double max_travel) {
    constexpr double kStep = 0.5;
    for (double t = 0.0; t <= max_travel; t += kStep) {
        const Vec2 p = cmd.point + cmd.direction * t;
        if (topmost_object_at(scene, p) != 0) {
            NudgeCommand hit = cmd;
            hit.point = p;
            return hit;
        }
    }
    return std::nullopt;
}

SceneState apply_nudge(const SceneState& scene, const NudgeCommand& cmd) {
    const int contact_id = topmost_object_at(scene, cmd.point);
    if (contact_id == 0) throw std::runtime_error("nudge missed pile");

    SceneState out = scene;
    int contact_idx = -1;
    for (size_t i = 0; i < out.objects.size(); ++i)
        if (out.objects[i].id == contact_id) contact_idx = static_cast<int>(i);

    const Pose w = nudge_transform(cmd);
    const std::vector<int> contacted = group_members(out, contact_idx);
    for (int idx : contacted)
        out.objects[idx].pose = w.compose(out.objects[idx].pose);
    clamp_group(out, contacted);

    std::vector<uint8_t> fixed(out.objects.size(), 0);
    for (int idx : contacted) fixed[idx] = 1;

    // Chain resolution: anything the moving body overlaps gets shoved along
    // the minimum-separation axis, and may in turn shove its own neighbours.
    // The separation slack is jittered per contact event; a fixed slack makes
    // repeated head-on pushes transmit motion exactly, which reads as rigid
    // common fate downstream.
    constexpr double kMaxPen = 0.5;
    auto slack_for = [](const RigidObject& a, const RigidObject& b) {
        uint64_t h = 0x9e3779b97f4a7c15ull;
        auto mix = [&h](uint64_t v) {
            h ^= v + 0x9e3779b97f4a7c15ull + (h << 6) + (h >> 2);
        };
        mix(static_cast<uint64_t>(a.id) << 32 | static_cast<uint64_t>(b.id));
        uint64_t bits;
        double px = a.pose.x + b.pose.x, py = a.pose.y + b.pose.y;
        std::memcpy(&bits, &px, 8);
        mix(bits);
        std::memcpy(&bits, &py, 8);
        mix(bits);
        Rng r(h);
        return r.uniform(0.4, 8.0);
    };
    std::vector<int> queue = contacted;
    std::vector<Polygon> hulls(out.objects.size());
    auto hull_of = [&](int idx) { return convex_hull(out.objects[idx].world_vertices()); };
    for (size_t i = 0; i < out.objects.size(); ++i) hulls[i] = hull_of(static_cast<int>(i));

    int steps = 0;
    for (size_t qi = 0; qi < queue.size() && steps < 512; ++qi) {
        const int a = queue[qi];
        for (size_t b = 0; b < out.objects.size(); ++b) {
            const int bi = static_cast<int>(b);
            if (bi == a || steps >= 512) continue;
            if (out.objects[a].glue_group && out.objects[a].glue_group == out.objects[bi].glue_group)
                continue;
            if (fixed[bi]) continue;
            const Penetration pen = convex_penetration(hulls[a], hulls[bi]);
            if (pen.depth < kMaxPen) continue;
            const std::vector<int> grp = group_members(out, bi);
            translate_group(out, grp, pen.axis * (pen.depth + slack_for(out.objects[a], out.objects[bi])));
            clamp_group(out, grp);
            for (int m : grp) {
                hulls[m] = hull_of(m);
                queue.push_back(m);
            }
            ++steps;
        }
    }
    return out;
}

LabelImage render_labels(const SceneState& scene) {
    LabelImage img(scene.width, scene.height, 0);
    std::vector<const RigidObject*> order;
    order.reserve(scene.objects.size());
    for (const RigidObject& o : scene.objects) order.push_back(&o);
    std::sort(order.begin(), order.end(),
              [](const RigidObject* a, const RigidObject* b) { return a->z_rank < b->z_rank; });
    for (const RigidObject* o : order)
        fill_polygon(img, o->world_vertices(), static_cast<uint16_t>(o->id));
    return img;
}

} // namespace nudgesim
