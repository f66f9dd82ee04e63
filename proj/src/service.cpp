#include "ttcoach/service.hpp"

#include "ttcoach/error.hpp"
#include "ttcoach/wire.hpp"

#include <sstream>
#include <vector>

namespace ttcoach {

namespace {

using nlohmann::json;

std::vector<std::string_view> split_path(std::string_view target) {
    if (auto q = target.find('?'); q != std::string_view::npos) target = target.substr(0, q);
    std::vector<std::string_view> parts;
    while (!target.empty()) {
        if (target.front() == '/') {
            target.remove_prefix(1);
            continue;
        }
        auto slash = target.find('/');
        parts.push_back(target.substr(0, slash));
        if (slash == std::string_view::npos) break;
        target.remove_prefix(slash);
    }
    return parts;
}

json parse_body(std::string_view body) {
    if (body.empty()) return json::object();
    try {
        return json::parse(body);
    } catch (const json::exception& e) {
        fail(Errc::SchemaError, std::string("request body is not JSON: ") + e.what());
    }
}

template <typename T>
T field(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key)) {
        fail(Errc::SchemaError, std::string("missing field '") + key + "'");
    }
    try {
        return j[key].get<T>();
    } catch (const json::exception&) {
        fail(Errc::SchemaError, std::string("field '") + key + "' has the wrong type");
    }
}

json names_of(const SkeletonTopology& topo, std::span<const std::size_t> comparison_indices) {
    json out = json::array();
    for (auto k : comparison_indices) out.push_back(topo.joint(topo.comparison_joints().at(k)).name);
    return out;
}

json pose_joints(const PoseFrame& pose, const SkeletonTopology& topo) {
    json joints = json::object();
    for (std::size_t i = 0; i < topo.size(); ++i) joints[topo.joint(i).name] = wire::to_json(pose.positions[i]);
    return joints;
}

json angle_map(const JointAngleFrame& frame, const SkeletonTopology& topo) {
    return wire::angles_to_json(frame, topo)["angles"];
}

}  // namespace

int http_status(Errc code) {
    switch (code) {
    case Errc::StrokeNotFound:
    case Errc::SessionNotFound:
    case Errc::NotFound: return 404;
    case Errc::SchemaError: return 400;
    case Errc::InvalidSpeed:
    case Errc::InvalidHeight:
    case Errc::InvalidParameter:
    case Errc::WindowUnderfilled:
    case Errc::TopologyMismatch:
    case Errc::IndexOutOfRange:
    case Errc::InvertedRange: return 422;
    default: return 500;
    }
}

json error_message(Errc code, std::string_view message, std::optional<std::uint64_t> index) {
    json j = {{"type", "error"}, {"version", kWireVersion}, {"code", to_string(code)},
              {"message", message}};
    if (index) j["index"] = *index;
    return j;
}

json stroke_summary(const StrokeRecording& rec) {
    json keyframes = json::array();
    for (const auto& k : rec.keyframes) keyframes.push_back({{"index", k.index}, {"label", k.label}});
    return {{"id", rec.id},
            {"name", rec.name},
            {"frame_count", rec.frame_count()},
            {"start_frame", rec.start_frame},
            {"end_frame", rec.end_frame},
            {"duration_ms", rec.duration_ms()},
            {"expert_height_m", rec.expert_height_m},
            {"keyframes", std::move(keyframes)}};
}

json session_snapshot(const Session& session) {
    const auto& st = session.state();
    json toggles = json::object();
    for (Cue c : {Cue::DetachedExpert, Cue::DetachedUser, Cue::OnbodyBody, Cue::OnbodyPaddle}) {
        toggles[std::string(to_string(c))] = st.cue_toggles[c];
    }
    return {{"session_id", st.session_id},
            {"stroke", stroke_summary(session.stroke())},
            {"state",
             {{"position", st.playback.position},
              {"expert_frame", session.expert_frame()},
              {"speed", st.playback.speed},
              {"paused", st.playback.paused},
              {"looping", st.playback.looping},
              {"scale", st.scale},
              {"user_height_m", st.user_height_m},
              {"anchor", wire::to_json(st.anchor)},
              {"cue_toggles", std::move(toggles)}}},
            {"window", session.config().align.window},
            {"guidance_horizon", session.config().guidance_horizon},
            {"detached_distance_m", session.config().detached_distance_m}};
}

json wire_feedback(const Session& session, const FeedbackEvent& ev) {
    const auto& topo = session.topology();
    const auto names = topo.comparison_joint_names();
    json scores = json::object();
    for (std::size_t k = 0; k < names.size(); ++k) scores[names[k]] = ev.per_joint_score.at(k);

    const auto& toggles = session.state().cue_toggles;
    std::vector<std::size_t> body_errors;
    if (toggles.onbody_body) body_errors = ev.joint_errors;
    json guidance = json::array();
    for (const auto& cue : session.guidance(body_errors, ev.paddle_error && toggles.onbody_paddle)) {
        json traj = json::array();
        for (const auto& p : cue.trajectory) traj.push_back(wire::to_json(p));
        guidance.push_back({{"joint", cue.joint}, {"trajectory", std::move(traj)}});
    }

    json j = {{"type", "feedback"},
              {"version", kWireVersion},
              {"session_id", ev.session_id},
              {"sequence", ev.sequence},
              {"user_frame_timestamp", ev.user_frame_timestamp_ms},
              {"playback_position", ev.playback_position},
              {"expert_frame", ev.expert_frame},
              {"per_joint_score", std::move(scores)},
              {"joint_errors", names_of(topo, ev.joint_errors)},
              {"paddle_score", ev.paddle_score},
              {"paddle_error", ev.paddle_error},
              {"window",
               {{"user", {ev.window_span.user_begin, ev.window_span.user_end}},
                {"expert", {ev.window_span.expert_begin, ev.window_span.expert_end}}}},
              {"expert_angle_frame", angle_map(ev.expert_angle_frame, topo)},
              {"user_angle_frame", angle_map(ev.user_angle_frame, topo)},
              {"expert_paddle", wire::to_json(ev.expert_paddle)},
              {"user_paddle", wire::to_json(ev.user_paddle)},
              {"expert_pose", pose_joints(session.mapped_expert_pose(ev.expert_frame), topo)},
              {"guidance", std::move(guidance)}};
    if (const auto& user = session.latest_user_pose()) j["user_pose"] = pose_joints(*user, topo);
    return j;
}

TrainingService::TrainingService(std::shared_ptr<StrokeLibrary> library, ServiceConfig config)
    : library_(std::move(library)), config_(std::move(config)) {
    config_.session.validate();
}

json TrainingService::list_strokes() const {
    json out = json::array();
    for (const auto& rec : library_->list()) out.push_back(stroke_summary(*rec));
    return out;
}

json TrainingService::create_session(const json& request) {
    const auto stroke_id = field<std::string>(request, "stroke_id");
    const auto height = field<double>(request, "user_height_m");

    std::shared_ptr<const StrokeRecording> stroke;
    try {
        stroke = library_->get(stroke_id);
    } catch (const Error&) {
        fail(Errc::StrokeNotFound, "no stroke with id '" + stroke_id + "'");
    }
    const auto& topo = library_->topology(stroke->topology);
    Vec3 anchor = stroke->pose_frames[stroke->start_frame].positions[topo.root()];
    if (request.contains("anchor") && !request["anchor"].is_null()) {
        anchor = wire::vec3_from_json(request["anchor"]);
    }

    std::ostringstream id;
    id << "s" << next_id_.fetch_add(1);
    auto managed = std::make_shared<Managed>(id.str(), std::move(stroke), topo, height, anchor,
                                             config_.session);
    json snap = session_snapshot(managed->session);
    std::unique_lock lock(mutex_);
    sessions_[id.str()] = std::move(managed);
    return snap;
}

std::shared_ptr<TrainingService::Managed> TrainingService::find(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it == sessions_.end()) fail(Errc::SessionNotFound, "no session '" + session_id + "'");
    return it->second;
}

json TrainingService::snapshot(const std::string& session_id) const {
    auto m = find(session_id);
    std::lock_guard lock(m->mutex);
    return session_snapshot(m->session);
}

Command TrainingService::parse_command(const json& request) {
    const auto name = field<std::string>(request, "command");
    if (name == "pause") return command::Pause{};
    if (name == "resume") return command::Resume{};
    if (name == "set_speed") return command::SetSpeed{field<double>(request, "value")};
    if (name == "seek") return command::Seek{field<long long>(request, "frame")};
    if (name == "loop") return command::Loop{field<bool>(request, "on")};
    if (name == "toggle") {
        const auto cue_name = field<std::string>(request, "cue");
        auto cue = cue_from_string(cue_name);
        if (!cue) fail(Errc::SchemaError, "unknown cue '" + cue_name + "'");
        return command::Toggle{*cue};
    }
    fail(Errc::SchemaError, "unknown command '" + name + "'");
}

json TrainingService::control(const std::string& session_id, const json& request) {
    auto m = find(session_id);
    const Command cmd = parse_command(request);
    std::lock_guard lock(m->mutex);
    m->session.control(cmd);
    return session_snapshot(m->session);
}

void TrainingService::delete_session(const std::string& session_id) {
    std::shared_ptr<Managed> m;
    {
        std::unique_lock lock(mutex_);
        auto it = sessions_.find(session_id);
        if (it == sessions_.end()) fail(Errc::SessionNotFound, "no session '" + session_id + "'");
        m = std::move(it->second);
        sessions_.erase(it);
    }
    m->hub.close("NotFound: session deleted");
}

bool TrainingService::has_session(const std::string& session_id) const {
    std::shared_lock lock(mutex_);
    return sessions_.count(session_id) != 0;
}

std::size_t TrainingService::session_count() const {
    std::shared_lock lock(mutex_);
    return sessions_.size();
}

TrainingService::IngestOutcome TrainingService::ingest_message(const std::string& session_id,
                                                               std::string_view text) {
    IngestOutcome out;
    std::shared_ptr<Managed> m;
    {
        std::shared_lock lock(mutex_);
        auto it = sessions_.find(session_id);
        if (it == sessions_.end()) {
            out.session_gone = true;
            return out;
        }
        m = it->second;
    }

    std::lock_guard lock(m->mutex);
    const std::uint64_t index = m->messages++;
    try {
        json record;
        try {
            record = json::parse(text);
        } catch (const json::exception& e) {
            fail(Errc::SchemaError, std::string("message is not JSON: ") + e.what());
        }
        if (wire::is_paddle_record(record)) {
            const PaddleFrame frame = wire::paddle_from_json(record);
            m->session.add_paddle_samples(std::span(&frame, 1));
        } else if (wire::is_pose_record(record)) {
            const PoseFrame pose = wire::pose_from_json(record, m->session.topology());
            if (auto ev = m->session.ingest_user(pose)) {
                m->hub.publish(wire_feedback(m->session, *ev).dump());
                out.emitted = true;
            }
        } else {
            fail(Errc::SchemaError, "message is neither a pose nor a paddle record");
        }
    } catch (const Error& e) {
        out.reply = error_message(e.code(), e.what(), index).dump();
    }
    return out;
}

std::shared_ptr<Subscription> TrainingService::subscribe(const std::string& session_id) {
    return find(session_id)->hub.subscribe(config_.subscriber_queue);
}

void TrainingService::unsubscribe(const std::string& session_id,
                                  const std::shared_ptr<Subscription>& sub) {
    std::shared_lock lock(mutex_);
    auto it = sessions_.find(session_id);
    if (it != sessions_.end()) it->second->hub.unsubscribe(sub);
}

RestReply TrainingService::handle(std::string_view method, std::string_view target,
                                  std::string_view body) {
    try {
        const auto parts = split_path(target);
        if (parts.size() == 1 && parts[0] == "strokes" && method == "GET") {
            return {200, list_strokes()};
        }
        if (!parts.empty() && parts[0] == "sessions") {
            if (parts.size() == 1 && method == "POST") return {201, create_session(parse_body(body))};
            if (parts.size() == 2) {
                const std::string id(parts[1]);
                if (method == "GET") return {200, snapshot(id)};
                if (method == "DELETE") {
                    delete_session(id);
                    return {200, {{"deleted", id}}};
                }
            }
            if (parts.size() == 3 && parts[2] == "control" && method == "POST") {
                return {200, control(std::string(parts[1]), parse_body(body))};
            }
        }
        return {404, error_message(Errc::NotFound, "no route for " + std::string(method) + " " +
                                                       std::string(target))};
    } catch (const Error& e) {
        return {http_status(e.code()), error_message(e.code(), e.what())};
    } catch (const std::exception& e) {
        return {500, {{"type", "error"}, {"code", "Internal"}, {"message", e.what()}}};
    }
}

}  // namespace ttcoach
