#include "ttcoach/skeleton.hpp"

#include "ttcoach/error.hpp"

#include <nlohmann/json.hpp>

#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

namespace ttcoach {

namespace {

constexpr double kMinBone = 1e-6;
constexpr double kReferenceHeight = 1.80;
constexpr Vec3 kUp{0, 1, 0};
constexpr Vec3 kRight{1, 0, 0};
constexpr Vec3 kDown{0, -1, 0};
constexpr Vec3 kLeft{-1, 0, 0};
constexpr Vec3 kForward{0, 0, 1};

Vec3 pick_fallback_axis(const Vec3& rest) {
    for (const Vec3& candidate : {kUp, kRight}) {
        if (std::abs(dot(candidate, rest)) < 1.0 - 1e-9) {
            const Vec3 ortho = candidate - rest * dot(candidate, rest);
            return ortho / ortho.norm();
        }
    }
    // unreachable: up and right cannot both be collinear with a unit vector
    return kRight;
}

}  // namespace

SkeletonTopology::SkeletonTopology(std::string name, std::vector<Joint> joints,
                                   std::map<std::string, std::string> name_map)
    : name_(std::move(name)), joints_(std::move(joints)), name_map_(std::move(name_map)) {
    if (joints_.empty()) fail(Errc::InvalidParameter, "topology has no joints");

    std::set<std::string> seen;
    std::size_t roots = 0;
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        const Joint& j = joints_[i];
        if (!seen.insert(j.name).second) {
            fail(Errc::InvalidParameter, "duplicate joint name '" + j.name + "'");
        }
        if (!j.parent) {
            ++roots;
            root_ = i;
            continue;
        }
        // Parents must precede children, which also rules out cycles.
        if (*j.parent >= i) {
            fail(Errc::InvalidParameter, "joint '" + j.name + "' listed before its parent");
        }
        if (std::abs(j.rest_direction.norm() - 1.0) > 1e-9) {
            fail(Errc::InvalidParameter, "rest direction of '" + j.name + "' is not unit length");
        }
    }
    if (roots != 1) fail(Errc::InvalidParameter, "topology must have exactly one root");
    if (joints_[root_].name != "pelvis") {
        fail(Errc::InvalidParameter, "topology root must be 'pelvis'");
    }
    if (!find("L_hip") || !find("R_hip")) {
        fail(Errc::InvalidParameter, "topology needs L_hip and R_hip for body alignment");
    }

    fallback_.resize(joints_.size(), kRight);
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        if (!joints_[i].parent) continue;
        fallback_[i] = pick_fallback_axis(joints_[i].rest_direction);
        if (!joints_[i].end_joint) comparison_.push_back(i);
    }
}

std::optional<std::size_t> SkeletonTopology::find(std::string_view joint_name) const {
    for (std::size_t i = 0; i < joints_.size(); ++i) {
        if (joints_[i].name == joint_name) return i;
    }
    return std::nullopt;
}

std::size_t SkeletonTopology::index_of(std::string_view joint_name) const {
    if (auto i = find(joint_name)) return *i;
    fail(Errc::NotFound, "unknown joint '" + std::string(joint_name) + "'");
}

std::vector<std::string> SkeletonTopology::comparison_joint_names() const {
    std::vector<std::string> names;
    names.reserve(comparison_.size());
    for (std::size_t i : comparison_) names.push_back(joints_[i].name);
    return names;
}

std::string_view SkeletonTopology::map_name(std::string_view raw) const {
    auto it = name_map_.find(std::string(raw));
    return it == name_map_.end() ? raw : std::string_view(it->second);
}

bool SkeletonTopology::is_descendant(std::size_t descendant, std::size_t j) const {
    for (auto p = joints_.at(descendant).parent; p; p = joints_[*p].parent) {
        if (*p == j) return true;
    }
    return false;
}

const SkeletonTopology& default_topology() {
    static const SkeletonTopology topo = [] {
        using J = SkeletonTopology::Joint;
        std::vector<J> joints;
        auto add = [&](std::string name, std::optional<std::string> parent, Vec3 dir,
                       double length, bool end = false) {
            std::optional<std::size_t> parent_index;
            if (parent) {
                for (std::size_t i = 0; i < joints.size(); ++i) {
                    if (joints[i].name == *parent) parent_index = i;
                }
            }
            joints.push_back(J{std::move(name), parent_index, end, dir, length});
        };
        add("pelvis", std::nullopt, {}, 0);
        add("spine", "pelvis", kUp, 0.45);
        add("head", "spine", kUp, 0.30, true);
        for (const char* side : {"L", "R"}) {
            const std::string s = side;
            const Vec3 lateral = s == "L" ? kLeft : kRight;
            add(s + "_shoulder", "spine", lateral, 0.19);
            add(s + "_elbow", s + "_shoulder", kDown, 0.30);
            add(s + "_wrist", s + "_elbow", kDown, 0.26, true);
        }
        for (const char* side : {"L", "R"}) {
            const std::string s = side;
            const Vec3 lateral = s == "L" ? kLeft : kRight;
            add(s + "_hip", "pelvis", lateral, 0.10);
            add(s + "_knee", s + "_hip", kDown, 0.44);
            add(s + "_ankle", s + "_knee", kDown, 0.43);
            add(s + "_toe", s + "_ankle", kForward, 0.15, true);
        }
        return SkeletonTopology("default17", std::move(joints));
    }();
    return topo;
}

SkeletonTopology load_topology(const std::string& name_or_path) {
    if (name_or_path.empty() || name_or_path == default_topology().name()) {
        return default_topology();
    }
    std::ifstream in(name_or_path);
    if (!in) fail(Errc::NotFound, "unknown topology '" + name_or_path + "'");

    try {
        const auto doc = nlohmann::json::parse(in);
        std::vector<SkeletonTopology::Joint> joints;
        std::map<std::string, std::size_t> index;
        for (const auto& j : doc.at("joints")) {
            SkeletonTopology::Joint joint;
            joint.name = j.at("name").get<std::string>();
            if (j.contains("parent") && !j["parent"].is_null()) {
                const auto p = j["parent"].get<std::string>();
                auto it = index.find(p);
                if (it == index.end()) {
                    fail(Errc::InvalidParameter, "joint '" + joint.name + "' listed before its parent");
                }
                joint.parent = it->second;
                const auto d = j.at("rest_direction").get<std::vector<double>>();
                if (d.size() != 3) fail(Errc::InvalidParameter, "rest_direction needs 3 values");
                joint.rest_direction = {d[0], d[1], d[2]};
                joint.rest_length = j.value("rest_length", 0.1);
            }
            joint.end_joint = j.value("end_joint", false);
            index[joint.name] = joints.size();
            joints.push_back(std::move(joint));
        }
        auto name_map = doc.value("name_map", std::map<std::string, std::string>{});
        return SkeletonTopology(doc.at("name").get<std::string>(), std::move(joints),
                                std::move(name_map));
    } catch (const nlohmann::json::exception& e) {
        fail(Errc::InvalidParameter, "topology '" + name_or_path + "': " + e.what());
    }
}

void validate_pose(const PoseFrame& frame, const SkeletonTopology& topo) {
    if (!std::isfinite(frame.timestamp_ms)) fail(Errc::SchemaError, "pose timestamp is not finite");
    if (frame.positions.size() != topo.size()) {
        std::ostringstream os;
        os << "pose has " << frame.positions.size() << " joints, topology '" << topo.name()
           << "' expects " << topo.size();
        fail(Errc::SchemaError, os.str());
    }
    for (std::size_t i = 0; i < frame.positions.size(); ++i) {
        if (!frame.positions[i].finite()) {
            fail(Errc::SchemaError, "non-finite position for joint '" + topo.joint(i).name + "'");
        }
    }
}

PoseFrame rest_pose(const SkeletonTopology& topo, double height_m, double timestamp_ms) {
    const double s = height_m / kReferenceHeight;
    PoseFrame frame{timestamp_ms, std::vector<Vec3>(topo.size())};
    for (std::size_t i = 0; i < topo.size(); ++i) {
        const auto& j = topo.joint(i);
        if (j.parent) {
            frame.positions[i] = frame.positions[*j.parent] + j.rest_direction * (j.rest_length * s);
        }
    }
    return frame;
}

PoseFrame normalize_pose(const PoseFrame& frame, const SkeletonTopology& topo) {
    validate_pose(frame, topo);
    const Vec3 origin = frame.positions[topo.root()];
    const Vec3 hips = frame.positions[topo.index_of("R_hip")] - frame.positions[topo.index_of("L_hip")];
    const double ground = std::hypot(hips.x, hips.z);
    if (ground < 1e-6) {
        fail(Errc::DegeneratePose, "hip line is vertical; cannot determine facing");
    }
    // Yaw about +y taking the hip line's ground projection onto +x.
    const double c = hips.x / ground;
    const double s = hips.z / ground;

    PoseFrame out{frame.timestamp_ms, {}};
    out.positions.reserve(frame.positions.size());
    for (const Vec3& p : frame.positions) {
        const Vec3 d = p - origin;
        out.positions.push_back({d.x * c + d.z * s, d.y, -d.x * s + d.z * c});
    }
    return out;
}

JointAngleFrame joint_angles(const PoseFrame& frame, const SkeletonTopology& topo) {
    const PoseFrame pose = normalize_pose(frame, topo);
    JointAngleFrame out{frame.timestamp_ms, {}};
    out.angles.reserve(topo.comparison_joints().size());
    for (std::size_t j : topo.comparison_joints()) {
        const auto& joint = topo.joint(j);
        const Vec3 bone = pose.positions[j] - pose.positions[*joint.parent];
        const double len = bone.norm();
        if (len < kMinBone) {
            fail(Errc::DegenerateBone, "bone ending at '" + joint.name + "' has zero length");
        }
        out.angles.push_back(
            canonicalize(shortest_arc(joint.rest_direction, bone / len, topo.fallback_axis(j))));
    }
    return out;
}

void validate_height(double height_m) {
    if (!(height_m > 0.5 && height_m < 2.5)) {
        std::ostringstream os;
        os << "height " << height_m << " m outside (0.5, 2.5)";
        fail(Errc::InvalidHeight, os.str());
    }
}

double height_scale(double user_height_m, double expert_height_m) {
    validate_height(user_height_m);
    validate_height(expert_height_m);
    return user_height_m / expert_height_m;
}

}  // namespace ttcoach
