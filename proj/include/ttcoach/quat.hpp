#pragma once

/**
 * Unit quaternions for joint and paddle orientations.
 *
 * Components are stored scalar-first (w, x, y, z). Rotations compose with the
 * Hamilton product: (a * b) applies b first, then a.
 */

#include "ttcoach/vec3.hpp"

#include <cmath>

namespace ttcoach {

struct Quat {
    double w = 1, x = 0, y = 0, z = 0;

    static Quat identity() { return {}; }

    // Rotation of `angle_rad` about `axis`; the axis need not be unit length.
    static Quat from_axis_angle(const Vec3& axis, double angle_rad);

    constexpr Quat operator*(const Quat& o) const {
        return {w * o.w - x * o.x - y * o.y - z * o.z,
                w * o.x + x * o.w + y * o.z - z * o.y,
                w * o.y - x * o.z + y * o.w + z * o.x,
                w * o.z + x * o.y - y * o.x + z * o.w};
    }
    constexpr Quat operator-() const { return {-w, -x, -y, -z}; }
    constexpr bool operator==(const Quat&) const = default;

    constexpr Quat conjugate() const { return {w, -x, -y, -z}; }
    double norm() const { return std::sqrt(w * w + x * x + y * y + z * z); }
    bool finite() const {
        return std::isfinite(w) && std::isfinite(x) && std::isfinite(y) && std::isfinite(z);
    }

    Vec3 rotate(const Vec3& v) const;
};

constexpr double dot(const Quat& a, const Quat& b) {
    return a.w * b.w + a.x * b.x + a.y * b.y + a.z * b.z;
}

inline constexpr double kDegenerateNorm = 1e-9;
inline constexpr double kUnitTolerance = 1e-6;

// Throws Errc::DegenerateQuaternion when the norm is at or below 1e-9.
Quat normalize(const Quat& q);

// Picks q or -q so that w >= 0; when w == 0 the first nonzero of x, y, z is
// made positive. Both represent the same rotation.
Quat canonicalize(const Quat& q);

bool is_unit(const Quat& q, double tolerance = kUnitTolerance);

// 1 - <q1, q2> evaluated with both operands in a common hemisphere, i.e.
// 1 - |<q1, q2>|. Zero iff the rotations coincide, in [0, 1] for unit input.
// Operands are normalized first.
double quaternion_dissimilarity(const Quat& q1, const Quat& q2);

// Rotation angle (radians, in [0, pi]) between two orientations.
double angular_distance(const Quat& a, const Quat& b);

// Spherical interpolation along the shorter arc; t in [0, 1].
Quat slerp(const Quat& a, const Quat& b, double t);

// Shortest-arc rotation taking unit vector `from` onto unit vector `to`.
// For antiparallel input the result is a half turn about `fallback_axis`,
// which must be perpendicular to `from`.
Quat shortest_arc(const Vec3& from, const Vec3& to, const Vec3& fallback_axis);

}  // namespace ttcoach
