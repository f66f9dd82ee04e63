#pragma once

#include "ttcoach/align.hpp"
#include "ttcoach/recording.hpp"

#include <array>
#include <deque>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace ttcoach {

// Playback speeds offered by the step buttons.
inline constexpr std::array<double, 7> kSpeedSteps{0.25, 0.5, 0.75, 1.0, 1.25, 1.5, 2.0};

enum class Cue { DetachedExpert, DetachedUser, OnbodyBody, OnbodyPaddle };

std::string_view to_string(Cue cue);
std::optional<Cue> cue_from_string(std::string_view name);

struct CueToggles {
    bool detached_expert = true;
    bool detached_user = true;
    bool onbody_body = true;
    bool onbody_paddle = true;

    bool& operator[](Cue cue);
    bool operator[](Cue cue) const;
    bool operator==(const CueToggles&) const = default;
};

// position is measured in expert frames from the trim start.
struct Playback {
    double position = 0;
    double speed = 1.0;
    bool paused = true;
    bool looping = false;

    bool operator==(const Playback&) const = default;
};

struct SessionState {
    std::string session_id;
    std::string stroke_id;
    double user_height_m = 0;
    double scale = 1;
    Playback playback;
    CueToggles cue_toggles;
    Vec3 anchor;  // user's starting pelvis position, meters
};

struct SessionConfig {
    AlignConfig align;
    std::size_t guidance_horizon = 10;   // expert frames ahead
    std::string paddle_hand = "R_wrist";
    Vec3 paddle_offset{0, 0, 0.15};      // paddle face center in the paddle frame
    double detached_distance_m = 3.0;    // where a UI places the detached avatars

    void validate() const;
};

namespace command {
struct Pause {};
struct Resume {};
struct SetSpeed { double value = 1.0; };
struct Seek { long long frame = 0; };  // absolute recording frame, clamped to the trim bounds
struct Toggle { Cue cue; };
struct Loop { bool on = false; };
}  // namespace command

using Command = std::variant<command::Pause, command::Resume, command::SetSpeed, command::Seek,
                             command::Toggle, command::Loop>;

struct FeedbackEvent {
    std::string session_id;
    std::uint64_t sequence = 0;  // 0-based count of events emitted by the session
    double user_frame_timestamp_ms = 0;
    double playback_position = 0;
    std::size_t expert_frame = 0;  // absolute recording frame under the playhead
    std::vector<double> per_joint_score;
    std::vector<std::size_t> joint_errors;
    double paddle_score = 0;
    bool paddle_error = false;
    WindowSpan window_span;  // user indices count ingested frames; expert are absolute
    JointAngleFrame expert_angle_frame;
    JointAngleFrame user_angle_frame;
    Quat expert_paddle;
    Quat user_paddle;
};

struct GuidanceCue {
    std::string joint;  // topology joint name, or "paddle"
    std::vector<Vec3> trajectory;
};

/**
 * One trainee practicing one stroke.
 *
 * The expert playhead moves with the user's frame clock: each ingested pose
 * advances playback by the timestamp delta to the previous pose (scaled by
 * the speed), so replaying identical timelines yields identical feedback.
 *
 * Not thread-safe; the owner serializes commands and frames.
 */
class Session {
public:
    // Throws InvalidHeight, WindowUnderfilled if the trimmed stroke is shorter
    // than the comparison window, and InvalidParameter for bad config.
    Session(std::string session_id, std::shared_ptr<const StrokeRecording> stroke,
            const SkeletonTopology& topo, double user_height_m, Vec3 anchor,
            SessionConfig config = {});

    const SessionState& state() const { return state_; }
    const StrokeRecording& stroke() const { return *stroke_; }
    const SkeletonTopology& topology() const { return topo_; }
    const SessionConfig& config() const { return config_; }

    // Largest playback position: trimmed length - 1.
    double max_position() const;

    // Throws InvalidSpeed for speeds outside kSpeedSteps.
    void control(const Command& cmd);

    // Moves the playhead by wall_dt_ms of playback time; wraps when looping,
    // otherwise clamps at the last frame. No-op while paused.
    void advance_clock(double wall_dt_ms);

    // Buffers IMU samples ahead of the pose they bracket.
    void add_paddle_samples(std::span<const PaddleFrame> samples);

    // Converts the pose, resamples the paddle at its timestamp and pushes both
    // into the comparison windows. Returns nullopt (pending) until both
    // windows are full, then one event per call.
    // Throws NonMonotonicTimestamps, EmptyStream if no paddle sample was ever
    // received, or the skeleton errors for a malformed pose.
    std::optional<FeedbackEvent> ingest_user(const PoseFrame& pose,
                                             std::span<const PaddleFrame> paddle_samples = {});

    // Expert trajectories for the flagged joints (and the paddle) over the
    // guidance horizon, mapped into the user's space.
    std::vector<GuidanceCue> guidance(std::span<const std::size_t> joint_errors,
                                      bool paddle_error) const;

    // Absolute frame index under the playhead.
    std::size_t expert_frame() const;

    // Half-open absolute range of expert frames compared at the current
    // playhead: window frames centered on it, clamped to the trim bounds.
    std::pair<std::size_t, std::size_t> expert_window() const;

    // Expert pose `frame` scaled by the calibration factor about the expert's
    // starting pelvis and translated onto the anchor.
    PoseFrame mapped_expert_pose(std::size_t frame) const;
    Vec3 map_point(const Vec3& expert_point) const;

    const std::optional<PoseFrame>& latest_user_pose() const { return last_pose_; }
    std::size_t frames_ingested() const { return frames_ingested_; }

    // Describes the first violated SessionState invariant, if any.
    std::optional<std::string> check_invariants() const;

private:
    Vec3 paddle_point(std::size_t frame) const;

    SessionConfig config_;
    std::shared_ptr<const StrokeRecording> stroke_;
    SkeletonTopology topo_;
    SessionState state_;
    Vec3 expert_origin_;

    std::deque<JointAngleFrame> user_angles_;
    std::deque<PaddleFrame> user_paddle_;
    std::deque<PaddleFrame> paddle_buffer_;
    std::optional<PoseFrame> last_pose_;
    std::size_t frames_ingested_ = 0;
    std::uint64_t events_ = 0;
};

}  // namespace ttcoach
