#include "fixtures.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <sys/wait.h>

namespace ttcoach::testing {

double Rng::uniform() {
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
    double u1 = uniform();
    while (u1 <= 0) u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * kPi * u2);
}

Vec3 Rng::unit_vector() {
    while (true) {
        const Vec3 v{normal(), normal(), normal()};
        const double n = v.norm();
        if (n > 1e-6) return v / n;
    }
}

Quat Rng::unit_quat() {
    while (true) {
        const Quat q{normal(), normal(), normal(), normal()};
        if (q.norm() > 1e-6) return normalize(q);
    }
}

Vec3 random_perpendicular(Rng& rng, const Vec3& v) {
    while (true) {
        const Vec3 r = rng.unit_vector();
        const Vec3 p = cross(v, r);
        const double n = p.norm();
        if (n > 1e-3) return p / n;
    }
}

namespace {

void enumerate(std::size_t i, std::size_t j, std::size_t n, std::size_t m, double acc,
               const std::function<double(std::size_t, std::size_t)>& cost, double& best,
               std::size_t* count) {
    acc += cost(i, j);
    if (i == n - 1 && j == m - 1) {
        best = std::min(best, acc);
        if (count) ++*count;
        return;
    }
    if (i + 1 < n) enumerate(i + 1, j, n, m, acc, cost, best, count);
    if (j + 1 < m) enumerate(i, j + 1, n, m, acc, cost, best, count);
    if (i + 1 < n && j + 1 < m) enumerate(i + 1, j + 1, n, m, acc, cost, best, count);
}

}  // namespace

double brute_force_dtw(std::size_t n, std::size_t m,
                       const std::function<double(std::size_t, std::size_t)>& cost) {
    double best = std::numeric_limits<double>::infinity();
    enumerate(0, 0, n, m, 0.0, cost, best, nullptr);
    return best;
}

std::size_t count_warping_paths(std::size_t n, std::size_t m) {
    double best = 0;
    std::size_t count = 0;
    enumerate(0, 0, n, m, 0.0, [](std::size_t, std::size_t) { return 0.0; }, best, &count);
    return count;
}

std::vector<std::size_t> moving_joints(const SkeletonTopology& topo) {
    std::vector<std::size_t> out;
    for (std::size_t j : topo.comparison_joints()) {
        const auto& name = topo.joint(j).name;
        if (name != "L_hip" && name != "R_hip") out.push_back(j);
    }
    return out;
}

SyntheticStroke::SyntheticStroke(std::uint64_t seed, StrokeShape s) : shape(s) {
    Rng rng(seed);
    const auto& topo = default_topology();
    axes.assign(topo.size(), Vec3{});
    base_.assign(topo.size(), 0);
    amp_.assign(topo.size(), 0);
    phase_.assign(topo.size(), 0);
    for (std::size_t j : moving_joints(topo)) {
        axes[j] = random_perpendicular(rng, topo.joint(j).rest_direction);
        base_[j] = deg(rng.uniform(-40, 40));
        amp_[j] = deg(shape.amplitude_deg) * rng.uniform(0.5, 1.0);
        phase_[j] = rng.uniform(0, 2 * kPi);
    }
    paddle_axis = rng.unit_vector();
    paddle_phase_ = rng.uniform(0, 2 * kPi);
    if (shape.random_placement) {
        world_yaw_ = rng.uniform(-kPi, kPi);
        world_offset_ = {rng.uniform(-2, 2), rng.uniform(-0.2, 0.2), rng.uniform(-2, 2)};
    }

    const double dt = 1000.0 / shape.fps;
    for (std::size_t t = 0; t < shape.frames; ++t) {
        poses.push_back(pose_at(t, topo.size(), 0.0));
    }
    paddle = paddle_with_offset(0.0);

    // 250 Hz IMU stream from the same analytic orientation.
    const double end_ms = dt * static_cast<double>(shape.frames - 1);
    for (double ms = -8.0; ms <= end_ms + 8.0; ms += 4.0) {
        const double tt = ms / 1000.0;
        const double a = deg(shape.paddle_amplitude_deg) *
                         std::sin(2 * kPi * shape.frequency_hz * tt + paddle_phase_);
        imu.push_back({ms, canonicalize(Quat::from_axis_angle(paddle_axis, a))});
    }
}

double SyntheticStroke::joint_angle(std::size_t j, std::size_t t) const {
    const double tt = static_cast<double>(t) / shape.fps;
    return base_[j] + amp_[j] * std::sin(2 * kPi * shape.frequency_hz * tt + phase_[j]);
}

PoseFrame SyntheticStroke::pose_at(std::size_t t, std::size_t offset_joint, double offset_rad) const {
    const auto& topo = default_topology();
    const double scale = shape.height_m / 1.80;
    std::vector<Vec3> body(topo.size());
    for (std::size_t j = 0; j < topo.size(); ++j) {
        const auto& joint = topo.joint(j);
        if (!joint.parent) continue;
        Vec3 dir = joint.rest_direction;
        if (axes[j].norm() > 0) {
            double angle = joint_angle(j, t);
            if (j == offset_joint) angle += offset_rad;
            dir = Quat::from_axis_angle(axes[j], angle).rotate(dir);
        }
        body[j] = body[*joint.parent] + dir * (joint.rest_length * scale);
    }
    const Quat yaw = Quat::from_axis_angle({0, 1, 0}, world_yaw_);
    PoseFrame frame{static_cast<double>(t) * 1000.0 / shape.fps, {}};
    for (const auto& p : body) frame.positions.push_back(yaw.rotate(p) + world_offset_);
    return frame;
}

std::vector<PoseFrame> SyntheticStroke::with_joint_offset(std::size_t joint, double offset_rad) const {
    std::vector<PoseFrame> out;
    for (std::size_t t = 0; t < shape.frames; ++t) out.push_back(pose_at(t, joint, offset_rad));
    return out;
}

std::vector<PaddleFrame> SyntheticStroke::paddle_with_offset(double offset_rad) const {
    std::vector<PaddleFrame> out;
    for (std::size_t t = 0; t < shape.frames; ++t) {
        const double tt = static_cast<double>(t) / shape.fps;
        const double a = deg(shape.paddle_amplitude_deg) *
                         std::sin(2 * kPi * shape.frequency_hz * tt + paddle_phase_);
        out.push_back({poses[t].timestamp_ms,
                       canonicalize(Quat::from_axis_angle(paddle_axis, a + offset_rad))});
    }
    return out;
}

StrokeRecording SyntheticStroke::recording(const std::string& name) const {
    return ingest(poses, paddle, default_topology(), name, shape.height_m);
}

std::vector<JointAngleFrame> random_angle_frames(Rng& rng, std::size_t n, std::size_t joints) {
    std::vector<JointAngleFrame> out(n);
    for (std::size_t t = 0; t < n; ++t) {
        out[t].timestamp_ms = static_cast<double>(t) * 33.0;
        for (std::size_t k = 0; k < joints; ++k) out[t].angles.push_back(rng.unit_quat());
    }
    return out;
}

std::vector<PaddleFrame> random_paddle_frames(Rng& rng, std::size_t n) {
    std::vector<PaddleFrame> out(n);
    for (std::size_t t = 0; t < n; ++t) out[t] = {static_cast<double>(t) * 33.0, rng.unit_quat()};
    return out;
}

TempDir::TempDir(const std::string& prefix) {
    static std::uint64_t counter = 0;
    std::random_device rd;
    path_ = std::filesystem::temp_directory_path() /
            (prefix + "-" + std::to_string(rd()) + "-" + std::to_string(counter++));
    std::filesystem::create_directories(path_);
}

TempDir::~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
}

CommandResult run_command(const std::string& command) {
    CommandResult r;
    FILE* pipe = popen((command + " 2>&1").c_str(), "r");
    if (!pipe) return r;
    std::array<char, 4096> buf{};
    while (std::size_t n = fread(buf.data(), 1, buf.size(), pipe)) r.output.append(buf.data(), n);
    const int status = pclose(pipe);
    r.exit_code = WIFEXITED(status) ? WEXITSTATUS(status) : -1;
    return r;
}

}  // namespace ttcoach::testing
