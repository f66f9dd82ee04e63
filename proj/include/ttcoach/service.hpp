#pragma once

/**
 * Transport-independent service layer: stroke library access, session
 * lifecycle and control, frame ingestion and feedback fan-out.
 *
 * REST routes (JSON bodies):
 *   GET    /strokes
 *   POST   /sessions                {stroke_id, user_height_m, anchor?}
 *   GET    /sessions/{id}
 *   POST   /sessions/{id}/control   {command, value|frame|cue|on}
 *   DELETE /sessions/{id}
 *
 * Message streams (one JSON record per message):
 *   /sessions/{id}/in   client -> server pose and paddle records; malformed
 *                       records get an error reply and the stream stays open
 *   /sessions/{id}/out  server -> client feedback messages
 */

#include "ttcoach/broadcast.hpp"
#include "ttcoach/error.hpp"
#include "ttcoach/session.hpp"

#include <nlohmann/json.hpp>

#include <atomic>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>
#include <string_view>

namespace ttcoach {

inline constexpr int kWireVersion = 1;

// Custom websocket close code sent when a stream's session does not exist.
inline constexpr std::uint16_t kCloseNotFound = 4404;

struct ServiceConfig {
    SessionConfig session;
    std::size_t subscriber_queue = 256;
};

struct RestReply {
    int status = 200;
    nlohmann::json body;
};

// Maps an error code onto its HTTP status.
int http_status(Errc code);

class TrainingService {
public:
    TrainingService(std::shared_ptr<StrokeLibrary> library, ServiceConfig config = {});

    const ServiceConfig& config() const { return config_; }
    StrokeLibrary& library() { return *library_; }

    // Routes one request; never throws.
    RestReply handle(std::string_view method, std::string_view target, std::string_view body);

    nlohmann::json list_strokes() const;
    nlohmann::json create_session(const nlohmann::json& request);
    nlohmann::json snapshot(const std::string& session_id) const;
    nlohmann::json control(const std::string& session_id, const nlohmann::json& request);
    void delete_session(const std::string& session_id);
    bool has_session(const std::string& session_id) const;
    std::size_t session_count() const;

    struct IngestOutcome {
        std::optional<std::string> reply;  // error message for the sender, if any
        bool session_gone = false;
        bool emitted = false;  // a feedback message was published
    };

    // Processes one /in message for the session.
    IngestOutcome ingest_message(const std::string& session_id, std::string_view text);

    // Throws SessionNotFound.
    std::shared_ptr<Subscription> subscribe(const std::string& session_id);
    void unsubscribe(const std::string& session_id, const std::shared_ptr<Subscription>& sub);

    // Parses a control request body into an engine command (SchemaError).
    static Command parse_command(const nlohmann::json& request);

private:
    struct Managed {
        Managed(std::string id, std::shared_ptr<const StrokeRecording> stroke,
                const SkeletonTopology& topo, double height, Vec3 anchor, SessionConfig cfg)
            : session(std::move(id), std::move(stroke), topo, height, anchor, std::move(cfg)) {}

        std::mutex mutex;
        Session session;
        FeedbackHub hub;
        std::uint64_t messages = 0;
    };

    std::shared_ptr<Managed> find(const std::string& session_id) const;

    std::shared_ptr<StrokeLibrary> library_;
    ServiceConfig config_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<Managed>> sessions_;
    std::atomic<std::uint64_t> next_id_{1};
};

nlohmann::json session_snapshot(const Session& session);
nlohmann::json stroke_summary(const StrokeRecording& rec);

// Feedback message for the viewer: scores and flags keyed by joint name,
// expert pose mapped into the user's space, the latest user pose, and the
// guidance cues enabled by the session's toggles.
nlohmann::json wire_feedback(const Session& session, const FeedbackEvent& event);

nlohmann::json error_message(Errc code, std::string_view message,
                             std::optional<std::uint64_t> index = std::nullopt);

}  // namespace ttcoach
