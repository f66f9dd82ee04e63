#pragma once

// Test-only helpers: a portable seeded RNG, synthetic strokes with known
// joint rotations, and a brute-force DTW oracle that shares no code with the
// aligner.

#include "ttcoach/recording.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <random>
#include <string>
#include <vector>

namespace ttcoach::testing {

// mt19937_64 is fully specified by the standard; the distributions below are
// hand-rolled so frozen fixture values do not depend on the library vendor.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}
    double uniform();  // [0, 1)
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }
    double normal();   // N(0, 1), Box-Muller
    std::size_t index(std::size_t n) { return static_cast<std::size_t>(uniform() * static_cast<double>(n)); }
    Vec3 unit_vector();
    Quat unit_quat();

private:
    std::mt19937_64 engine_;
};

constexpr double kPi = 3.14159265358979323846;
inline double deg(double d) { return d * kPi / 180.0; }

// Unit vector perpendicular to `v`, drawn at random.
Vec3 random_perpendicular(Rng& rng, const Vec3& v);

// Exhaustive minimum over every monotone warping path from (0, 0) to
// (n-1, m-1) with unit steps right, down and diagonal. Paths are enumerated
// one by one; there is no memoization.
double brute_force_dtw(std::size_t n, std::size_t m,
                       const std::function<double(std::size_t, std::size_t)>& cost);

std::size_t count_warping_paths(std::size_t n, std::size_t m);

struct StrokeShape {
    std::size_t frames = 60;
    double fps = 30.0;
    double amplitude_deg = 30.0;  // per-joint swing amplitude
    double frequency_hz = 1.0;
    double paddle_amplitude_deg = 30.0;
    double height_m = 1.80;
    bool random_placement = true;  // world yaw and translation
};

/**
 * Synthetic take in which every non-hip comparison joint swings in a fixed
 * plane that contains its rest direction. Joint j's bone direction at frame t
 * is rotate(axis_j, angle_j(t)) applied to its rest direction, so its joint
 * angle is exactly that rotation. Hips stay rigid, keeping the body yaw fixed.
 */
struct SyntheticStroke {
    SyntheticStroke(std::uint64_t seed, StrokeShape shape = {});

    std::vector<PoseFrame> poses;
    std::vector<PaddleFrame> paddle;  // at pose timestamps
    std::vector<PaddleFrame> imu;     // 250 Hz samples covering the take
    std::vector<Vec3> axes;           // per topology joint; zero for static joints
    Vec3 paddle_axis;
    StrokeShape shape;

    // Angle of joint j at frame t (radians) about axes[j].
    double joint_angle(std::size_t j, std::size_t t) const;

    StrokeRecording recording(const std::string& name = "synthetic") const;

    // Same take with joint j's bone rotated by `offset_rad` about its swing
    // axis at every frame; descendants translate along so no other joint
    // angle changes.
    std::vector<PoseFrame> with_joint_offset(std::size_t joint, double offset_rad) const;
    std::vector<PaddleFrame> paddle_with_offset(double offset_rad) const;

private:
    std::vector<double> base_, amp_, phase_;
    double paddle_phase_ = 0;
    double world_yaw_ = 0;
    Vec3 world_offset_;
    PoseFrame pose_at(std::size_t t, std::size_t offset_joint, double offset_rad) const;
};

// Joints whose swing axis is set (the non-hip comparison joints).
std::vector<std::size_t> moving_joints(const SkeletonTopology& topo);

// Per comparison-joint random angle frames.
std::vector<JointAngleFrame> random_angle_frames(Rng& rng, std::size_t n, std::size_t joints);
std::vector<PaddleFrame> random_paddle_frames(Rng& rng, std::size_t n);

// Fresh empty directory under the system temp dir, removed on destruction.
class TempDir {
public:
    explicit TempDir(const std::string& prefix = "ttcoach");
    ~TempDir();
    const std::filesystem::path& path() const { return path_; }

private:
    std::filesystem::path path_;
};

struct CommandResult {
    int exit_code = -1;
    std::string output;  // stdout and stderr combined
};

CommandResult run_command(const std::string& command);

}  // namespace ttcoach::testing
