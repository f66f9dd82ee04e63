#pragma once

#include "ttcoach/quat.hpp"
#include "ttcoach/vec3.hpp"

#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace ttcoach {

/**
 * Joint tree used to turn 3D joint positions into per-bone orientations.
 *
 * Coordinates follow a y-up convention. In the body-centered frame the hip
 * line (L_hip -> R_hip) points along +x and the player faces +z.
 *
 * Each non-root joint owns the bone from its parent to itself. Its rest
 * direction is the unit bone direction in the reference pose, and its
 * fallback axis is the fixed half-turn axis used when the bone points exactly
 * opposite to rest.
 */
class SkeletonTopology {
public:
    struct Joint {
        std::string name;
        std::optional<std::size_t> parent;
        bool end_joint = false;
        Vec3 rest_direction;
        double rest_length = 0;  // meters, reference skeleton of height 1.80 m
    };

    // Validates the tree (single root named `root_name`, no cycles, parents
    // listed before children, unit rest directions). Throws
    // Errc::InvalidParameter on violation.
    SkeletonTopology(std::string name, std::vector<Joint> joints,
                     std::map<std::string, std::string> name_map = {});

    const std::string& name() const { return name_; }
    std::size_t size() const { return joints_.size(); }
    const std::vector<Joint>& joints() const { return joints_; }
    const Joint& joint(std::size_t i) const { return joints_.at(i); }
    std::size_t root() const { return root_; }

    std::optional<std::size_t> find(std::string_view joint_name) const;
    std::size_t index_of(std::string_view joint_name) const;  // throws NotFound

    // Joints compared by the aligner: every joint except the root and the end
    // joints, in topology order.
    const std::vector<std::size_t>& comparison_joints() const { return comparison_; }
    std::vector<std::string> comparison_joint_names() const;

    const Vec3& fallback_axis(std::size_t joint) const { return fallback_.at(joint); }

    // Maps estimator joint names (e.g. a 21-joint network output) onto
    // topology names. Names absent from the map pass through unchanged.
    const std::map<std::string, std::string>& name_map() const { return name_map_; }
    std::string_view map_name(std::string_view raw) const;

    // True when the child lists of `j` contain `descendant` transitively.
    bool is_descendant(std::size_t descendant, std::size_t j) const;

private:
    std::string name_;
    std::vector<Joint> joints_;
    std::map<std::string, std::string> name_map_;
    std::size_t root_ = 0;
    std::vector<std::size_t> comparison_;
    std::vector<Vec3> fallback_;
};

struct PoseFrame {
    double timestamp_ms = 0;
    std::vector<Vec3> positions;  // indexed like SkeletonTopology::joints()
};

struct JointAngleFrame {
    double timestamp_ms = 0;
    std::vector<Quat> angles;  // indexed like comparison_joints()
};

struct PaddleFrame {
    double timestamp_ms = 0;
    Quat orientation;
};

// 17-joint tree rooted at the pelvis. End joints are head, toes and wrists,
// which leaves 11 comparison joints.
const SkeletonTopology& default_topology();

// Built-in name ("default17") or a path to a topology JSON document.
SkeletonTopology load_topology(const std::string& name_or_path);

// Checks the PoseFrame invariants against `topo`; throws SchemaError.
void validate_pose(const PoseFrame& frame, const SkeletonTopology& topo);

// Reference pose for a player of `height_m`, pelvis at the origin, facing +z.
PoseFrame rest_pose(const SkeletonTopology& topo, double height_m = 1.80,
                    double timestamp_ms = 0);

// Moves the pelvis to the origin and yaws the body so the ground projection
// of the hip line lies on +x. Throws DegeneratePose if that projection is
// shorter than 1e-6 m.
PoseFrame normalize_pose(const PoseFrame& frame, const SkeletonTopology& topo);

// Per comparison joint: the canonical shortest-arc rotation taking the rest
// direction onto the normalized bone direction. Throws DegenerateBone when a
// bone is shorter than 1e-6 m.
JointAngleFrame joint_angles(const PoseFrame& frame, const SkeletonTopology& topo);

// user_height / expert_height; both must lie in (0.5, 2.5) m.
double height_scale(double user_height_m, double expert_height_m);

void validate_height(double height_m);

}  // namespace ttcoach
