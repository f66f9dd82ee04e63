#include "fixtures.hpp"
#include "ttcoach/error.hpp"
#include "ttcoach/session.hpp"

#include <doctest.h>

#include <cmath>

using namespace ttcoach;
using namespace ttcoach::testing;

namespace {

std::shared_ptr<const StrokeRecording> make_stroke(std::uint64_t seed, StrokeShape shape = {}) {
    return std::make_shared<const StrokeRecording>(SyntheticStroke(seed, shape).recording());
}

Vec3 start_pelvis(const StrokeRecording& rec) {
    return rec.pose_frames[rec.start_frame].positions[default_topology().root()];
}

Session make_session(std::shared_ptr<const StrokeRecording> stroke, double height = 1.80) {
    const Vec3 anchor = start_pelvis(*stroke);
    return Session("s1", std::move(stroke), default_topology(), height, anchor);
}

// Feeds `poses` with the paddle samples at the same timestamps.
std::vector<FeedbackEvent> stream(Session& session, const std::vector<PoseFrame>& poses,
                                  const std::vector<PaddleFrame>& paddle,
                                  std::size_t* pending = nullptr) {
    std::vector<FeedbackEvent> events;
    for (std::size_t i = 0; i < poses.size(); ++i) {
        const std::vector<PaddleFrame> sample{paddle[i]};
        auto ev = session.ingest_user(poses[i], sample);
        if (ev) {
            events.push_back(std::move(*ev));
        } else if (pending) {
            ++*pending;
        }
        const auto violation = session.check_invariants();
        CHECK_MESSAGE(!violation.has_value(), violation.value_or(""));
    }
    return events;
}

Errc code_of(const std::function<void()>& f) {
    try {
        f();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected an Error");
    return Errc::SchemaError;
}

}  // namespace

TEST_CASE("creation") {
    const auto stroke = make_stroke(1);
    const Session a = make_session(stroke);
    CHECK(a.state().scale == doctest::Approx(1.0));
    CHECK(a.state().playback.paused);
    CHECK(a.state().playback.position == 0);
    CHECK(a.state().playback.speed == 1.0);
    CHECK(a.state().stroke_id == stroke->id);
    const Session b = make_session(stroke, 1.62);
    CHECK(b.state().scale == doctest::Approx(0.9));
    CHECK(code_of([&] { make_session(stroke, 0.3); }) == Errc::InvalidHeight);
    const auto short_stroke = make_stroke(2, {.frames = 9});
    CHECK(code_of([&] { make_session(short_stroke); }) == Errc::WindowUnderfilled);
}

TEST_CASE("control commands") {
    Session s = make_session(make_stroke(3));
    s.control(command::SetSpeed{0.5});
    CHECK(s.state().playback.speed == 0.5);
    CHECK(code_of([&] { s.control(command::SetSpeed{0.6}); }) == Errc::InvalidSpeed);
    CHECK(s.state().playback.speed == 0.5);

    s.control(command::Seek{20});
    const double before = s.state().playback.position;
    s.control(command::Pause{});
    s.control(command::Resume{});
    CHECK(s.state().playback.position == before);
    CHECK_FALSE(s.state().playback.paused);

    s.control(command::Seek{-5});
    CHECK(s.state().playback.position == 0);
    s.control(command::Seek{10000});
    CHECK(s.state().playback.position == s.max_position());

    s.control(command::Toggle{Cue::OnbodyPaddle});
    CHECK_FALSE(s.state().cue_toggles.onbody_paddle);
    CHECK(s.state().cue_toggles.onbody_body);
    s.control(command::Toggle{Cue::OnbodyPaddle});
    CHECK(s.state().cue_toggles.onbody_paddle);
    s.control(command::Loop{true});
    CHECK(s.state().playback.looping);
}

TEST_CASE("seek is relative to the trim start") {
    SyntheticStroke synth(4, {.frames = 60});
    auto rec = trim(synth.recording(), 10, 50);
    Session s("s", std::make_shared<const StrokeRecording>(rec), default_topology(), 1.8, {});
    s.control(command::Seek{30});
    CHECK(s.state().playback.position == 20);
    CHECK(s.expert_frame() == 30);
    s.control(command::Seek{3});
    CHECK(s.expert_frame() == 10);
    const auto [b, e] = s.expert_window();
    CHECK(b == 10);
    CHECK(e == 20);
}

TEST_CASE("advance_clock") {
    Session s = make_session(make_stroke(5));
    const double frame_ms = 1000.0 / 30.0;
    s.advance_clock(frame_ms);
    CHECK(s.state().playback.position == 0);  // paused
    s.control(command::Resume{});
    s.advance_clock(frame_ms);
    CHECK(s.state().playback.position == doctest::Approx(1.0));
    s.control(command::SetSpeed{0.5});
    s.advance_clock(2 * frame_ms);
    CHECK(s.state().playback.position == doctest::Approx(2.0));
    s.advance_clock(1e6);
    CHECK(s.state().playback.position == s.max_position());
    s.control(command::Loop{true});
    s.control(command::Seek{55});
    s.control(command::SetSpeed{1.0});
    s.advance_clock(10 * frame_ms);
    CHECK(s.state().playback.position == doctest::Approx(6.0));  // 65 wraps over 59
}

TEST_CASE("window fill: nine pending then one event per frame") {
    SyntheticStroke synth(6);
    Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
    s.control(command::Resume{});
    std::size_t pending = 0;
    const auto events = stream(s, synth.poses, synth.paddle, &pending);
    CHECK(pending == 9);
    CHECK(events.size() == synth.poses.size() - 9);
    for (std::size_t i = 0; i < events.size(); ++i) {
        CHECK(events[i].sequence == i);
        CHECK(events[i].user_frame_timestamp_ms == synth.poses[i + 9].timestamp_ms);
        CHECK(events[i].window_span.user_end - events[i].window_span.user_begin == 10);
        CHECK(events[i].window_span.expert_end - events[i].window_span.expert_begin == 10);
    }
}

TEST_CASE("echo of the expert's own take raises no flags") {
    for (std::uint64_t seed = 10; seed < 20; ++seed) {
        SyntheticStroke synth(seed);
        Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
        s.control(command::Resume{});
        const auto events = stream(s, synth.poses, synth.paddle);
        REQUIRE_FALSE(events.empty());
        for (const auto& ev : events) {
            CHECK(ev.joint_errors.empty());
            CHECK_FALSE(ev.paddle_error);
        }
        CHECK(events.back().expert_frame == synth.poses.size() - 1);
    }
}

TEST_CASE("a 60 degree offset on one joint is the only flag") {
    const StrokeShape slow{.frames = 60, .amplitude_deg = 3, .frequency_hz = 0.5,
                           .paddle_amplitude_deg = 3};
    const auto& topo = default_topology();
    const auto& cj = topo.comparison_joints();
    for (std::uint64_t seed = 30; seed < 36; ++seed) {
        SyntheticStroke synth(seed, slow);
        const auto joints = moving_joints(topo);
        const std::size_t joint = joints[seed % joints.size()];
        const std::size_t slot = std::find(cj.begin(), cj.end(), joint) - cj.begin();
        for (double offset : {60.0, 30.0}) {
            Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
            s.control(command::Resume{});
            const auto events = stream(s, synth.with_joint_offset(joint, deg(offset)), synth.paddle);
            REQUIRE_FALSE(events.empty());
            for (const auto& ev : events) {
                if (offset == 60.0) {
                    REQUIRE(ev.joint_errors.size() == 1);
                    CHECK(ev.joint_errors[0] == slot);
                } else {
                    CHECK(ev.joint_errors.empty());
                }
                CHECK_FALSE(ev.paddle_error);
            }
        }
    }
}

TEST_CASE("paddle offset flags the paddle only") {
    const StrokeShape slow{.frames = 40, .amplitude_deg = 3, .frequency_hz = 0.5,
                           .paddle_amplitude_deg = 3};
    SyntheticStroke synth(40, slow);
    Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
    s.control(command::Resume{});
    const auto events = stream(s, synth.poses, synth.paddle_with_offset(deg(60)));
    for (const auto& ev : events) {
        CHECK(ev.paddle_error);
        CHECK(ev.joint_errors.empty());
    }
}

TEST_CASE("detection does not depend on the user's height") {
    const StrokeShape slow{.frames = 40, .amplitude_deg = 3, .frequency_hz = 0.5};
    SyntheticStroke expert(41, slow);
    StrokeShape small = slow;
    small.height_m = 1.55;
    SyntheticStroke user(41, small);
    const auto joint = default_topology().index_of("L_elbow");
    Session s = make_session(std::make_shared<const StrokeRecording>(expert.recording()), 1.55);
    s.control(command::Resume{});
    const auto events = stream(s, user.with_joint_offset(joint, deg(60)), user.paddle);
    for (const auto& ev : events) CHECK(ev.joint_errors.size() == 1);
}

TEST_CASE("identical timelines give identical feedback") {
    SyntheticStroke synth(42);
    SyntheticStroke other(43);
    const auto stroke = std::make_shared<const StrokeRecording>(synth.recording());
    Session a = make_session(stroke), b = make_session(stroke);
    a.control(command::Resume{});
    b.control(command::Resume{});
    const auto ea = stream(a, other.poses, other.paddle);
    const auto eb = stream(b, other.poses, other.paddle);
    REQUIRE(ea.size() == eb.size());
    for (std::size_t i = 0; i < ea.size(); ++i) {
        CHECK(ea[i].per_joint_score == eb[i].per_joint_score);
        CHECK(ea[i].paddle_score == eb[i].paddle_score);
        CHECK(ea[i].playback_position == eb[i].playback_position);
    }
}

TEST_CASE("paused playback holds the playhead while frames arrive") {
    SyntheticStroke synth(44);
    Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
    const auto events = stream(s, synth.poses, synth.paddle);
    for (const auto& ev : events) CHECK(ev.playback_position == 0);
}

TEST_CASE("ingest errors") {
    SyntheticStroke synth(45, {.frames = 20});
    Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
    CHECK(code_of([&] { s.ingest_user(synth.poses[0]); }) == Errc::EmptyStream);
    const std::vector<PaddleFrame> one{synth.paddle[0]};
    CHECK_FALSE(s.ingest_user(synth.poses[1], one).has_value());
    CHECK(code_of([&] { s.ingest_user(synth.poses[1]); }) == Errc::NonMonotonicTimestamps);
    CHECK(code_of([&] { s.ingest_user(synth.poses[0]); }) == Errc::NonMonotonicTimestamps);
    PoseFrame broken = synth.poses[2];
    broken.positions[default_topology().index_of("L_knee")] =
        broken.positions[default_topology().index_of("L_hip")];
    CHECK(code_of([&] { s.ingest_user(broken); }) == Errc::DegenerateBone);
    CHECK(s.frames_ingested() == 1);
}

TEST_CASE("IMU samples between poses are resampled at the pose time") {
    SyntheticStroke synth(46, {.frames = 30});
    Session s = make_session(std::make_shared<const StrokeRecording>(synth.recording()));
    s.control(command::Resume{});
    std::size_t cursor = 0;
    std::vector<FeedbackEvent> events;
    for (const auto& pose : synth.poses) {
        std::vector<PaddleFrame> batch;
        while (cursor < synth.imu.size() && synth.imu[cursor].timestamp_ms <= pose.timestamp_ms + 4.0) {
            batch.push_back(synth.imu[cursor++]);
        }
        if (auto ev = s.ingest_user(pose, batch)) events.push_back(*ev);
    }
    REQUIRE_FALSE(events.empty());
    for (const auto& ev : events) {
        const std::size_t t = ev.window_span.user_end - 1;
        CHECK(angular_distance(ev.user_paddle, synth.paddle[t].orientation) < deg(0.5));
        CHECK_FALSE(ev.paddle_error);
    }
}

TEST_CASE("guidance cues") {
    const auto stroke = make_stroke(47);
    Session s = make_session(stroke);
    CHECK(s.guidance({}, false).empty());

    s.control(command::Seek{5});
    const std::vector<std::size_t> flagged{3};
    const auto cues = s.guidance(flagged, false);
    REQUIRE(cues.size() == 1);
    const std::size_t joint = default_topology().comparison_joints()[3];
    CHECK(cues[0].joint == default_topology().joint(joint).name);
    REQUIRE(cues[0].trajectory.size() == 10);
    for (std::size_t i = 0; i < 10; ++i) {
        CHECK((cues[0].trajectory[i] - stroke->pose_frames[5 + i].positions[joint]).norm() < 1e-12);
    }

    const auto paddle = s.guidance({}, true);
    REQUIRE(paddle.size() == 1);
    CHECK(paddle[0].joint == "paddle");
    const auto wrist = default_topology().index_of("R_wrist");
    const Vec3 want = stroke->pose_frames[5].positions[wrist] +
                      stroke->paddle_frames[5].orientation.rotate({0, 0, 0.15});
    CHECK((paddle[0].trajectory[0] - want).norm() < 1e-12);

    // The horizon stops at the trim end.
    s.control(command::Seek{10000});
    const auto tail = s.guidance(flagged, false);
    for (const auto& p : tail[0].trajectory) {
        CHECK((p - stroke->pose_frames.back().positions[joint]).norm() < 1e-12);
    }
}

TEST_CASE("guidance scales about the anchor") {
    const auto stroke = make_stroke(48);
    const Vec3 anchor{0.5, 0, -1};
    Session s("s", stroke, default_topology(), 1.62, anchor);
    s.control(command::Seek{12});
    const auto pelvis = s.mapped_expert_pose(s.expert_frame()).positions[default_topology().root()];
    const Vec3 expert_pelvis = stroke->pose_frames[12].positions[default_topology().root()];
    const std::vector<std::size_t> flagged{0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10};
    const auto cues = s.guidance(flagged, true);
    CHECK(cues.size() == 12);
    for (const auto& cue : cues) {
        for (std::size_t i = 0; i < cue.trajectory.size(); ++i) {
            // Undo the mapping to recover the expert point, then compare distances.
            const Vec3 expert_point = (cue.trajectory[i] - anchor) / 0.9 + start_pelvis(*stroke);
            const double want = 0.9 * (expert_point - expert_pelvis).norm();
            CHECK((cue.trajectory[i] - pelvis).norm() == doctest::Approx(want).epsilon(1e-9));
        }
    }
    CHECK((s.map_point(start_pelvis(*stroke)) - anchor).norm() < 1e-12);
}

TEST_CASE("cue names round trip") {
    for (Cue c : {Cue::DetachedExpert, Cue::DetachedUser, Cue::OnbodyBody, Cue::OnbodyPaddle}) {
        CHECK(cue_from_string(to_string(c)) == c);
    }
    CHECK_FALSE(cue_from_string("bogus").has_value());
}
