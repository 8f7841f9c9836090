#pragma once

#include <optional>
#include <string>
#include <vector>

#include "nudgesim/geometry.hpp"
#include "nudgesim/image.hpp"
#include "nudgesim/rng.hpp"

namespace nudgesim {

struct RigidObject {
    int id = 0;
    Polygon vertices;               // body frame, centroid at origin
    Pose pose;                      // body -> world (px, rad)
    std::optional<int> glue_group;  // objects sharing a group move as one body
    int z_rank = 0;                 // larger occludes smaller

    Polygon world_vertices() const {
        Polygon out;
        out.reserve(vertices.size());
        for (const Vec2& v : vertices) out.push_back(pose.apply(v));
        return out;
    }
    Vec2 centroid() const { return {pose.x, pose.y}; }
};

struct Rect {
    double x0 = 0.0, y0 = 0.0, x1 = 0.0, y1 = 0.0;
    bool contains(const Vec2& p) const { return p.x >= x0 && p.x <= x1 && p.y >= y0 && p.y <= y1; }
};

struct SceneState {
    std::vector<RigidObject> objects;
    int width = 800;
    int height = 600;
    Rect table_bounds;
    uint64_t rng_seed = 0;

    const RigidObject* find(int id) const {
        for (const RigidObject& o : objects)
            if (o.id == id) return &o;
        return nullptr;
    }
};

struct NudgeCommand {
    Vec2 point;
    Vec2 direction;   // unit vector
    double magnitude = 0.0;  // px, > 0
    double twist = 0.0;      // rad, about the contact point
};

enum class ShapeSet { Convex, Concave, Mixed, Squares };

struct SceneConfig {
    int n_min = 5;
    int n_max = 8;
    ShapeSet shape_set = ShapeSet::Mixed;
    int table_w = 800;
    int table_h = 600;
    double twist_max = 0.15;      // rad; per-nudge twist drawn in [-twist_max, twist_max]
    int glue_pairs = 0;           // number of glued pairs among the N objects
    double clutter_threshold = 260.0;  // max pairwise centroid distance in the pile
    double overlap_cap = 0.35;    // max silhouette overlap fraction at placement
    double radius_min = 30.0;
    double radius_max = 90.0;
};

ShapeSet parse_shape_set(const std::string& name);
std::string shape_set_name(ShapeSet s);

/// Randomized contiguous pile of N objects, N uniform in [n_min, n_max].
/// Deterministic for a given (config, seed). Throws "cannot pack pile" when
/// placement keeps failing (table too small for the requested clutter).
SceneState generate_scene(const SceneConfig& config, uint64_t seed);

/// Quasi-static push. The topmost object under cmd.point (and its glue group)
/// receives the commanded rigid motion; objects it runs into are shoved along
/// the separation axis until interpenetration is below 0.5 px. Throws
/// "nudge missed pile" when cmd.point is on background.
SceneState apply_nudge(const SceneState& scene, const NudgeCommand& cmd);

/// Per-pixel instance labels, 0 = background, occlusion resolved by z_rank.
/// Object ids are used directly as label values (glued objects stay distinct).
LabelImage render_labels(const SceneState& scene);

/// Topmost object id at a continuous point, or 0 for background.
int topmost_object_at(const SceneState& scene, const Vec2& p);

/// Servo model for the poker: if cmd.point is on background, march along
/// cmd.direction (up to max_travel px) until an object silhouette is hit and
/// nudge there instead. Returns nothing when the poke never makes contact.
std::optional<NudgeCommand> resolve_contact(const SceneState& scene, const NudgeCommand& cmd,
                                            double max_travel);

} // namespace nudgesim
