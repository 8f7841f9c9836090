#pragma once

#include <string>
#include <vector>

#include "nudgesim/image.hpp"
#include "nudgesim/rng.hpp"
#include "nudgesim/scene.hpp"

namespace nudgesim {

struct FlowField {
    int width = 0;
    int height = 0;
    std::vector<double> u;        // horizontal displacement, px
    std::vector<double> v;        // vertical displacement, px
    std::vector<uint8_t> valid;   // false where the correspondence is hidden

    FlowField() = default;
    FlowField(int w, int h)
        : width(w), height(h),
          u(static_cast<size_t>(w) * h, 0.0),
          v(static_cast<size_t>(w) * h, 0.0),
          valid(static_cast<size_t>(w) * h, 1) {}

    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
    size_t size() const { return u.size(); }

    double magnitude(size_t i) const { return std::hypot(u[i], v[i]); }
    /// Flow angle in [0, 2*pi).
    double angle(size_t i) const { return wrap_angle(std::atan2(v[i], u[i])); }
};

struct UncertaintyMap {
    int width = 0;
    int height = 0;
    std::vector<double> rho;  // nonnegative

    UncertaintyMap() = default;
    UncertaintyMap(int w, int h) : width(w), height(h), rho(static_cast<size_t>(w) * h, 0.0) {}
    size_t idx(int x, int y) const { return static_cast<size_t>(y) * width + x; }
};

enum class AngleNoiseMode {
    Additive,        // perturbed angle = angle + U(-eps_a, eps_a) in radians
    Multiplicative,  // perturbed angle = (1 + U(-eps_a, eps_a)) * angle, eps_a unitless
};

struct NoiseSpec {
    double eps_m = 0.0;   // percent bound on magnitude noise
    double eps_a = 0.0;   // degree bound on angle noise
    uint64_t rng_seed = 0;
    AngleNoiseMode angle_mode = AngleNoiseMode::Additive;
};

/// Exact flow between two states of the same scene. Background gets zero
/// flow; validity is false where the correspondence is covered in `after`
/// (or where background gets covered), resolved against the rendered labels.
FlowField ground_truth_flow(const SceneState& before, const SceneState& after);

/// Sensing model for the active camera move: objects (raised off the plane)
/// shift by cam_shift, the plane by cam_shift/4, and rho is a blurred
/// occlusion indicator of that virtual motion plus a uniform noise floor.
UncertaintyMap synthesize_uncertainty(const SceneState& before, const Vec2& cam_shift, Rng rng);

/// Per-pixel uniform noise on flow magnitude (percent, multiplicative) and
/// angle. eps_m = eps_a = 0 returns the input bit-exactly.
FlowField inject_noise(const FlowField& flow, const NoiseSpec& spec);

/// Middlebury .flo: "PIEH" magic, int32 w/h, row-major float32 (u, v) pairs,
/// little-endian. The valid mask is not stored; reads come back all-true.
void write_flo(const std::string& path, const FlowField& flow);
FlowField read_flo(const std::string& path);

/// rho scaled by 10000 and clamped to 16 bits, for PGM dumps.
LabelImage uncertainty_to_pgm(const UncertaintyMap& map);

} // namespace nudgesim
