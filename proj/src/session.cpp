#include "ttcoach/session.hpp"

#include "ttcoach/error.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace ttcoach {

std::string_view to_string(Cue cue) {
    switch (cue) {
    case Cue::DetachedExpert: return "detached_expert";
    case Cue::DetachedUser: return "detached_user";
    case Cue::OnbodyBody: return "onbody_body";
    case Cue::OnbodyPaddle: return "onbody_paddle";
    }
    return "unknown";
}

std::optional<Cue> cue_from_string(std::string_view name) {
    for (Cue c : {Cue::DetachedExpert, Cue::DetachedUser, Cue::OnbodyBody, Cue::OnbodyPaddle}) {
        if (to_string(c) == name) return c;
    }
    return std::nullopt;
}

bool& CueToggles::operator[](Cue cue) {
    switch (cue) {
    case Cue::DetachedExpert: return detached_expert;
    case Cue::DetachedUser: return detached_user;
    case Cue::OnbodyBody: return onbody_body;
    case Cue::OnbodyPaddle: break;
    }
    return onbody_paddle;
}

bool CueToggles::operator[](Cue cue) const {
    return const_cast<CueToggles&>(*this)[cue];
}

void SessionConfig::validate() const {
    align.validate();
    if (guidance_horizon == 0) fail(Errc::InvalidParameter, "guidance horizon must be positive");
}

Session::Session(std::string session_id, std::shared_ptr<const StrokeRecording> stroke,
                 const SkeletonTopology& topo, double user_height_m, Vec3 anchor,
                 SessionConfig config)
    : config_(std::move(config)), stroke_(std::move(stroke)), topo_(topo) {
    config_.validate();
    if (!stroke_) fail(Errc::StrokeNotFound, "no stroke given");
    if (stroke_->topology != topo_.name()) {
        fail(Errc::TopologyMismatch, "stroke uses topology '" + stroke_->topology + "'");
    }
    if (stroke_->trimmed_length() < config_.align.window) {
        std::ostringstream os;
        os << "stroke '" << stroke_->id << "' has " << stroke_->trimmed_length()
           << " trimmed frames, comparison window needs " << config_.align.window;
        fail(Errc::WindowUnderfilled, os.str());
    }
    topo_.index_of(config_.paddle_hand);

    state_.session_id = std::move(session_id);
    state_.stroke_id = stroke_->id;
    state_.user_height_m = user_height_m;
    state_.scale = height_scale(user_height_m, stroke_->expert_height_m);
    state_.anchor = anchor;
    expert_origin_ = stroke_->pose_frames[stroke_->start_frame].positions[topo_.root()];
}

double Session::max_position() const {
    return static_cast<double>(stroke_->trimmed_length() - 1);
}

void Session::control(const Command& cmd) {
    auto& pb = state_.playback;
    std::visit(
        [&](const auto& c) {
            using T = std::decay_t<decltype(c)>;
            if constexpr (std::is_same_v<T, command::Pause>) {
                pb.paused = true;
            } else if constexpr (std::is_same_v<T, command::Resume>) {
                pb.paused = false;
            } else if constexpr (std::is_same_v<T, command::SetSpeed>) {
                auto it = std::find_if(kSpeedSteps.begin(), kSpeedSteps.end(),
                                       [&](double s) { return std::abs(s - c.value) < 1e-9; });
                if (it == kSpeedSteps.end()) {
                    std::ostringstream os;
                    os << "speed " << c.value << " is not one of the playback steps";
                    fail(Errc::InvalidSpeed, os.str());
                }
                pb.speed = *it;
            } else if constexpr (std::is_same_v<T, command::Seek>) {
                const auto lo = static_cast<long long>(stroke_->start_frame);
                const auto hi = static_cast<long long>(stroke_->end_frame);
                pb.position = static_cast<double>(std::clamp(c.frame, lo, hi) - lo);
            } else if constexpr (std::is_same_v<T, command::Toggle>) {
                state_.cue_toggles[c.cue] = !state_.cue_toggles[c.cue];
            } else if constexpr (std::is_same_v<T, command::Loop>) {
                pb.looping = c.on;
            }
        },
        cmd);
}

void Session::advance_clock(double wall_dt_ms) {
    auto& pb = state_.playback;
    if (pb.paused || !(wall_dt_ms > 0)) return;
    const double limit = max_position();
    pb.position += wall_dt_ms * pb.speed * stroke_->native_fps() / 1000.0;
    if (pb.looping) {
        pb.position = limit > 0 ? std::fmod(pb.position, limit) : 0.0;
    } else {
        pb.position = std::min(pb.position, limit);
    }
}

void Session::add_paddle_samples(std::span<const PaddleFrame> samples) {
    double last = paddle_buffer_.empty() ? -std::numeric_limits<double>::infinity()
                                         : paddle_buffer_.back().timestamp_ms;
    for (std::size_t i = 0; i < samples.size(); ++i) {
        if (!(samples[i].timestamp_ms > last)) {
            std::ostringstream os;
            os << "paddle sample " << i << " at t=" << samples[i].timestamp_ms
               << " ms does not follow t=" << last << " ms";
            fail(Errc::NonMonotonicTimestamps, os.str());
        }
        if (!is_unit(samples[i].orientation)) {
            fail(Errc::SchemaError, "paddle quaternion is not unit-norm");
        }
        last = samples[i].timestamp_ms;
    }
    paddle_buffer_.insert(paddle_buffer_.end(), samples.begin(), samples.end());
}

std::size_t Session::expert_frame() const {
    return stroke_->start_frame + static_cast<std::size_t>(std::lround(state_.playback.position));
}

std::pair<std::size_t, std::size_t> Session::expert_window() const {
    const auto w = static_cast<long long>(config_.align.window);
    const auto lo = static_cast<long long>(stroke_->start_frame);
    const auto hi = static_cast<long long>(stroke_->end_frame) + 1 - w;
    const auto begin = std::clamp(static_cast<long long>(expert_frame()) - w / 2, lo, hi);
    return {static_cast<std::size_t>(begin), static_cast<std::size_t>(begin + w)};
}

std::optional<FeedbackEvent> Session::ingest_user(const PoseFrame& pose,
                                                  std::span<const PaddleFrame> paddle_samples) {
    if (last_pose_ && !(pose.timestamp_ms > last_pose_->timestamp_ms)) {
        std::ostringstream os;
        os << "pose at t=" << pose.timestamp_ms << " ms does not follow t="
           << last_pose_->timestamp_ms << " ms";
        fail(Errc::NonMonotonicTimestamps, os.str());
    }
    JointAngleFrame angles = joint_angles(pose, topo_);
    add_paddle_samples(paddle_samples);
    if (paddle_buffer_.empty()) fail(Errc::EmptyStream, "no paddle samples received yet");

    const Quat paddle = resample_paddle(
        std::vector<PaddleFrame>(paddle_buffer_.begin(), paddle_buffer_.end()), pose.timestamp_ms);
    // Keep the last sample at or before this pose; it brackets the next one.
    while (paddle_buffer_.size() > 1 && paddle_buffer_[1].timestamp_ms <= pose.timestamp_ms) {
        paddle_buffer_.pop_front();
    }

    if (last_pose_) advance_clock(pose.timestamp_ms - last_pose_->timestamp_ms);
    last_pose_ = pose;
    ++frames_ingested_;

    const std::size_t w = config_.align.window;
    user_angles_.push_back(std::move(angles));
    user_paddle_.push_back(PaddleFrame{pose.timestamp_ms, paddle});
    while (user_angles_.size() > w) user_angles_.pop_front();
    while (user_paddle_.size() > w) user_paddle_.pop_front();
    if (user_angles_.size() < w) return std::nullopt;

    const auto [eb, ee] = expert_window();
    const std::vector<JointAngleFrame> ua(user_angles_.begin(), user_angles_.end());
    const std::vector<PaddleFrame> up(user_paddle_.begin(), user_paddle_.end());
    const auto ea = std::span<const JointAngleFrame>(stroke_->angle_frames).subspan(eb, ee - eb);
    const auto ep = std::span<const PaddleFrame>(stroke_->paddle_frames).subspan(eb, ee - eb);
    ComparisonResult result = window_compare(ua, up, ea, ep, config_.align);

    FeedbackEvent ev;
    ev.session_id = state_.session_id;
    ev.sequence = events_++;
    ev.user_frame_timestamp_ms = pose.timestamp_ms;
    ev.playback_position = state_.playback.position;
    ev.expert_frame = expert_frame();
    ev.per_joint_score = std::move(result.per_joint_score);
    ev.joint_errors = std::move(result.joint_errors);
    ev.paddle_score = result.paddle_score;
    ev.paddle_error = result.paddle_error;
    ev.window_span = {frames_ingested_ - w, frames_ingested_, eb, ee};
    ev.expert_angle_frame = stroke_->angle_frames[ev.expert_frame];
    ev.user_angle_frame = ua.back();
    ev.expert_paddle = stroke_->paddle_frames[ev.expert_frame].orientation;
    ev.user_paddle = paddle;
    return ev;
}

Vec3 Session::map_point(const Vec3& expert_point) const {
    return state_.anchor + (expert_point - expert_origin_) * state_.scale;
}

PoseFrame Session::mapped_expert_pose(std::size_t frame) const {
    const auto& src = stroke_->pose_frames.at(frame);
    PoseFrame out{src.timestamp_ms, {}};
    out.positions.reserve(src.positions.size());
    for (const auto& p : src.positions) out.positions.push_back(map_point(p));
    return out;
}

Vec3 Session::paddle_point(std::size_t frame) const {
    const Vec3 wrist = stroke_->pose_frames[frame].positions[topo_.index_of(config_.paddle_hand)];
    return wrist + stroke_->paddle_frames[frame].orientation.rotate(config_.paddle_offset);
}

std::vector<GuidanceCue> Session::guidance(std::span<const std::size_t> joint_errors,
                                           bool paddle_error) const {
    std::vector<GuidanceCue> cues;
    const std::size_t first = expert_frame();
    auto frame_at = [&](std::size_t step) { return std::min(first + step, stroke_->end_frame); };
    const auto& cmp = topo_.comparison_joints();

    for (std::size_t k : joint_errors) {
        const std::size_t joint = cmp.at(k);
        GuidanceCue cue{topo_.joint(joint).name, {}};
        cue.trajectory.reserve(config_.guidance_horizon);
        for (std::size_t s = 0; s < config_.guidance_horizon; ++s) {
            cue.trajectory.push_back(map_point(stroke_->pose_frames[frame_at(s)].positions[joint]));
        }
        cues.push_back(std::move(cue));
    }
    if (paddle_error) {
        GuidanceCue cue{"paddle", {}};
        cue.trajectory.reserve(config_.guidance_horizon);
        for (std::size_t s = 0; s < config_.guidance_horizon; ++s) {
            cue.trajectory.push_back(map_point(paddle_point(frame_at(s))));
        }
        cues.push_back(std::move(cue));
    }
    return cues;
}

std::optional<std::string> Session::check_invariants() const {
    const auto& pb = state_.playback;
    if (!(pb.position >= 0 && pb.position <= max_position())) return "playback position out of range";
    if (std::find(kSpeedSteps.begin(), kSpeedSteps.end(), pb.speed) == kSpeedSteps.end()) {
        return "speed is not a playback step";
    }
    if (user_angles_.size() > config_.align.window || user_paddle_.size() > config_.align.window) {
        return "comparison window over capacity";
    }
    return std::nullopt;
}

}  // namespace ttcoach
