#include "ttcoach/quat.hpp"

#include "ttcoach/error.hpp"

#include <algorithm>
#include <sstream>

namespace ttcoach {

Quat Quat::from_axis_angle(const Vec3& axis, double angle_rad) {
    const double n = axis.norm();
    if (n <= kDegenerateNorm) {
        fail(Errc::InvalidParameter, "rotation axis has zero length");
    }
    const double s = std::sin(angle_rad / 2) / n;
    return {std::cos(angle_rad / 2), axis.x * s, axis.y * s, axis.z * s};
}

Vec3 Quat::rotate(const Vec3& v) const {
    // v' = v + 2w (u x v) + 2 u x (u x v), u = vector part
    const Vec3 u{x, y, z};
    const Vec3 t = cross(u, v) * 2.0;
    return v + t * w + cross(u, t);
}

Quat normalize(const Quat& q) {
    const double n = q.norm();
    if (!(n > kDegenerateNorm)) {
        std::ostringstream os;
        os << "cannot normalize quaternion with norm " << n;
        fail(Errc::DegenerateQuaternion, os.str());
    }
    return {q.w / n, q.x / n, q.y / n, q.z / n};
}

Quat canonicalize(const Quat& q) {
    if (q.w > 0) return q;
    if (q.w < 0) return -q;
    for (double c : {q.x, q.y, q.z}) {
        if (c > 0) return q;
        if (c < 0) return {0.0, -q.x, -q.y, -q.z};
    }
    return q;
}

bool is_unit(const Quat& q, double tolerance) {
    return std::abs(q.norm() - 1.0) <= tolerance;
}

double quaternion_dissimilarity(const Quat& q1, const Quat& q2) {
    const double d = std::abs(dot(normalize(q1), normalize(q2)));
    return std::clamp(1.0 - d, 0.0, 1.0);
}

double angular_distance(const Quat& a, const Quat& b) {
    const double d = std::min(1.0, std::abs(dot(normalize(a), normalize(b))));
    return 2.0 * std::acos(d);
}

Quat slerp(const Quat& a, const Quat& b_in, double t) {
    Quat b = b_in;
    double c = dot(a, b);
    if (c < 0) {
        b = -b;
        c = -c;
    }
    if (c > 1.0 - 1e-12) {
        return normalize(Quat{a.w + t * (b.w - a.w), a.x + t * (b.x - a.x),
                              a.y + t * (b.y - a.y), a.z + t * (b.z - a.z)});
    }
    const double theta = std::acos(std::min(c, 1.0));
    const double s = std::sin(theta);
    const double wa = std::sin((1 - t) * theta) / s;
    const double wb = std::sin(t * theta) / s;
    return normalize(Quat{wa * a.w + wb * b.w, wa * a.x + wb * b.x,
                          wa * a.y + wb * b.y, wa * a.z + wb * b.z});
}

Quat shortest_arc(const Vec3& from, const Vec3& to, const Vec3& fallback_axis) {
    const double c = dot(from, to);
    if (c < -1.0 + 1e-12) {
        const Vec3 a = fallback_axis / fallback_axis.norm();
        return {0.0, a.x, a.y, a.z};
    }
    const Vec3 v = cross(from, to);
    return normalize(Quat{1.0 + c, v.x, v.y, v.z});
}

}  // namespace ttcoach
