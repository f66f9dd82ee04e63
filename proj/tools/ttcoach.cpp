// ttcoach: author expert strokes, analyze takes, replay streams against the
// training service, and run the service.
//
// Exit codes: 0 success, 1 domain error, 2 usage error.

#include "ttcoach/client.hpp"
#include "ttcoach/error.hpp"
#include "ttcoach/report.hpp"
#include "ttcoach/server.hpp"
#include "ttcoach/service.hpp"
#include "ttcoach/wire.hpp"

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include <chrono>
#include <csignal>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <pthread.h>
#include <thread>

namespace {

using namespace ttcoach;
using nlohmann::json;
namespace fs = std::filesystem;

struct Globals {
    std::string library_dir = "strokes";
    std::string topology = "default17";
    double xi_joint = 0.1;
    double xi_paddle = 0.1;
    std::size_t window = 10;
};

AlignConfig align_config(const Globals& g) {
    AlignConfig cfg;
    cfg.window = g.window;
    cfg.thresholds = {g.xi_joint, g.xi_paddle};
    cfg.validate();
    return cfg;
}

std::string now_iso8601() {
    const std::time_t t = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&t, &tm);
    std::ostringstream os;
    os << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
    return os.str();
}

StrokeLibrary open_library(const Globals& g, const SkeletonTopology& topo) {
    std::vector<SkeletonTopology> topologies{default_topology()};
    if (topo.name() != default_topology().name()) topologies.push_back(topo);
    return StrokeLibrary(g.library_dir, std::move(topologies));
}

// Library id, or a path to a recording file.
StrokeRecording resolve_recording(const StrokeLibrary& lib, const SkeletonTopology& topo,
                                  const std::string& ref) {
    if (lib.contains(ref)) return *lib.get(ref);
    if (fs::exists(ref)) {
        std::vector<SkeletonTopology> topologies{topo};
        return read_recording(ref, topologies);
    }
    fail(Errc::NotFound, "no recording '" + ref + "' in " + lib.storage_path().string());
}

int cmd_import(const Globals& g, const std::string& pose_path, const std::string& paddle_path,
               const std::string& name, double height) {
    if (paddle_path.empty() || !fs::exists(paddle_path)) {
        std::cerr << "error: paddle stream required\n";
        return 1;
    }
    if (pose_path.empty() || !fs::exists(pose_path)) {
        std::cerr << "error: pose stream required\n";
        return 1;
    }
    const auto topo = load_topology(g.topology);
    auto lib = open_library(g, topo);
    const auto poses = wire::read_pose_file(pose_path, topo);
    const auto paddle = wire::read_paddle_file(paddle_path);
    const auto rec = ingest(poses, paddle, topo, name, height, now_iso8601());
    lib.save(rec);
    std::cout << rec.id << '\n';
    return 0;
}

struct EditArgs {
    std::string id;
    std::vector<std::size_t> trim;
    std::vector<std::string> keyframe;
    bool reset = false;
};

int cmd_edit(const Globals& g, const EditArgs& args) {
    const auto topo = load_topology(g.topology);
    auto lib = open_library(g, topo);
    StrokeRecording rec = lib.load(args.id);
    if (args.reset) rec = reset(std::move(rec));
    if (!args.trim.empty()) rec = trim(std::move(rec), args.trim[0], args.trim[1]);
    if (!args.keyframe.empty()) {
        std::size_t index = 0;
        try {
            index = std::stoul(args.keyframe[0]);
        } catch (const std::exception&) {
            fail(Errc::IndexOutOfRange, "keyframe index '" + args.keyframe[0] + "' is not a number");
        }
        rec = add_keyframe(std::move(rec), index, args.keyframe[1]);
    }
    lib.save(rec);
    std::cout << rec.id << ": frames [" << rec.start_frame << ", " << rec.end_frame << "] of "
              << rec.frame_count() << ", " << rec.keyframes.size() << " keyframe(s)\n";
    for (const auto& k : rec.keyframes) std::cout << "  " << k.index << "  " << k.label << '\n';
    return 0;
}

int cmd_analyze(const Globals& g, const std::string& user_ref, const std::string& expert_ref,
                const std::string& report_path, bool smooth) {
    const auto topo = load_topology(g.topology);
    auto lib = open_library(g, topo);
    const auto user = resolve_recording(lib, topo, user_ref);
    const auto expert = resolve_recording(lib, topo, expert_ref);
    auto cfg = align_config(g);
    cfg.smooth = smooth;
    const auto report = analyze(user, expert, topo, cfg);
    print_report(std::cout, report);
    if (!report_path.empty()) {
        std::ofstream out(report_path);
        if (!out) fail(Errc::NotFound, "cannot write report '" + report_path + "'");
        out << report_to_json(report).dump(2) << '\n';
    }
    return 0;
}

struct ReplayArgs {
    std::string host = "127.0.0.1";
    unsigned short port = 8080;
    std::string pose;
    std::string paddle;
    std::string stroke;
    double height = 1.80;
    double rate = 1.0;
    double speed = 1.0;
    std::string summary;
    bool keep = false;
};

int cmd_replay(const Globals& g, const ReplayArgs& a) {
    if (!(a.rate > 0)) fail(Errc::InvalidParameter, "--rate must be positive");
    const auto topo = load_topology(g.topology);
    const auto poses = wire::read_pose_file(a.pose, topo);
    const auto paddle = wire::read_paddle_file(a.paddle);
    if (poses.empty()) fail(Errc::EmptyStream, "pose stream is empty");
    if (paddle.empty()) fail(Errc::EmptyStream, "paddle stream required");

    auto post = [&](const std::string& target, const json& body) {
        auto res = http_request(a.host, a.port, "POST", target, body.dump());
        if (res.status >= 300) {
            throw std::runtime_error("POST " + target + " -> " + std::to_string(res.status) + " " + res.body);
        }
        return json::parse(res.body);
    };

    const json created = post("/sessions", {{"stroke_id", a.stroke}, {"user_height_m", a.height}});
    const std::string sid = created.at("session_id");
    const std::size_t window = created.value("window", std::size_t{10});
    post("/sessions/" + sid + "/control", {{"command", "set_speed"}, {"value", a.speed}});
    post("/sessions/" + sid + "/control", {{"command", "resume"}});

    StreamClient out(a.host, a.port, "/sessions/" + sid + "/out");
    StreamClient in(a.host, a.port, "/sessions/" + sid + "/in");

    const std::size_t expected = poses.size() >= window ? poses.size() - window + 1 : 0;
    std::size_t events = 0, errors = 0;
    std::map<std::string, std::size_t> flag_counts;
    std::map<std::string, double> score_sums;
    std::size_t paddle_flags = 0;
    double paddle_sum = 0;

    std::size_t second_events = 0, second_flagged = 0;
    auto second_start = std::chrono::steady_clock::now();
    auto consume = [&](const std::string& text) {
        const json msg = json::parse(text);
        if (msg.value("type", "") != "feedback") return;
        ++events;
        ++second_events;
        for (const auto& j : msg["joint_errors"]) ++flag_counts[j.get<std::string>()];
        for (const auto& [name, score] : msg["per_joint_score"].items()) score_sums[name] += score.get<double>();
        if (!msg["joint_errors"].empty() || msg["paddle_error"].get<bool>()) ++second_flagged;
        if (msg["paddle_error"].get<bool>()) ++paddle_flags;
        paddle_sum += msg["paddle_score"].get<double>();
        const auto now = std::chrono::steady_clock::now();
        if (now - second_start >= std::chrono::seconds(1)) {
            std::cout << "[" << std::fixed << std::setprecision(1)
                      << msg["user_frame_timestamp"].get<double>() / 1000.0 << " s] " << second_events
                      << " events, " << second_flagged << " with errors\n";
            second_events = second_flagged = 0;
            second_start = now;
        }
    };
    auto drain_errors = [&] {
        while (auto m = in.receive(std::chrono::milliseconds(0))) {
            ++errors;
            std::cerr << "server: " << *m << '\n';
        }
    };

    const auto wall_start = std::chrono::steady_clock::now();
    const double t0 = poses.front().timestamp_ms;
    std::size_t next_paddle = 0;
    for (const auto& pose : poses) {
        const auto due = wall_start + std::chrono::duration_cast<std::chrono::steady_clock::duration>(
                                          std::chrono::duration<double, std::milli>(
                                              (pose.timestamp_ms - t0) / a.rate));
        while (auto m = out.receive(std::chrono::milliseconds(0))) consume(*m);
        std::this_thread::sleep_until(due);
        // Paddle samples up to and including the first one past the pose bracket it.
        while (next_paddle < paddle.size()) {
            const bool past = paddle[next_paddle].timestamp_ms > pose.timestamp_ms;
            in.send(wire::paddle_to_json(paddle[next_paddle]).dump());
            ++next_paddle;
            if (past) break;
        }
        in.send(wire::pose_to_json(pose, topo).dump());
        drain_errors();
    }
    const auto deadline = std::chrono::steady_clock::now() + std::chrono::seconds(5);
    while (events < expected && std::chrono::steady_clock::now() < deadline) {
        if (auto m = out.receive(std::chrono::milliseconds(50))) consume(*m);
        drain_errors();
        if (out.closed()) break;
    }
    const double wall_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - wall_start).count();

    std::cout << "replayed " << poses.size() << " frames in " << std::fixed << std::setprecision(2)
              << wall_s << " s; " << events << " feedback events (" << expected << " expected), "
              << errors << " rejected messages\n";
    json summary = {{"session_id", sid},
                    {"frames", poses.size()},
                    {"events", events},
                    {"expected_events", expected},
                    {"rejected_messages", errors},
                    {"wall_seconds", wall_s},
                    {"paddle_flags", paddle_flags},
                    {"mean_paddle_score", events ? paddle_sum / static_cast<double>(events) : 0.0}};
    json joints = json::object();
    for (const auto& name : topo.comparison_joint_names()) {
        const double mean = events ? score_sums[name] / static_cast<double>(events) : 0.0;
        joints[name] = {{"flags", flag_counts[name]}, {"mean_score", mean}};
        std::cout << "  " << std::left << std::setw(12) << name << std::right << std::setw(6)
                  << flag_counts[name] << " flags, mean score " << std::setprecision(4) << mean << '\n';
    }
    std::cout << "  " << std::left << std::setw(12) << "paddle" << std::right << std::setw(6)
              << paddle_flags << " flags\n";
    summary["joints"] = std::move(joints);
    if (!a.summary.empty()) std::ofstream(a.summary) << summary.dump(2) << '\n';

    in.close();
    out.close();
    if (!a.keep) http_request(a.host, a.port, "DELETE", "/sessions/" + sid);
    return events == expected ? 0 : 1;
}

struct ServeArgs {
    std::string bind = "127.0.0.1";
    unsigned short port = 8080;
    int threads = 2;
    std::size_t horizon = 10;
};

int cmd_serve(const Globals& g, const ServeArgs& a) {
    const auto topo = load_topology(g.topology);
    std::vector<SkeletonTopology> topologies{default_topology()};
    if (topo.name() != default_topology().name()) topologies.push_back(topo);
    auto lib = std::make_shared<StrokeLibrary>(g.library_dir, std::move(topologies));

    ServiceConfig cfg;
    cfg.session.align = align_config(g);
    cfg.session.guidance_horizon = a.horizon;
    auto service = std::make_shared<TrainingService>(lib, cfg);

    sigset_t signals;
    sigemptyset(&signals);
    sigaddset(&signals, SIGINT);
    sigaddset(&signals, SIGTERM);
    pthread_sigmask(SIG_BLOCK, &signals, nullptr);

    HttpServer server(service, {a.bind, a.port, a.threads});
    server.start();
    std::cout << "ttcoach serving " << lib->list().size() << " stroke(s) from " << g.library_dir
              << " on " << a.bind << ":" << server.port() << std::endl;

    int sig = 0;
    sigwait(&signals, &sig);
    std::cout << "shutting down\n";
    server.stop();
    server.wait();
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Table-tennis stroke training engine"};
    app.require_subcommand(1);

    Globals g;
    if (const char* env = std::getenv("TTCOACH_LIBRARY")) g.library_dir = env;
    app.add_option("--library-dir", g.library_dir, "Stroke library directory");
    app.add_option("--topology", g.topology, "Skeleton: built-in name or topology JSON file");
    app.add_option("--xi-joint", g.xi_joint, "Joint error threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--xi-paddle", g.xi_paddle, "Paddle error threshold")->check(CLI::Range(0.0, 1.0));
    app.add_option("--window", g.window, "Live comparison window (frames)")->check(CLI::PositiveNumber);

    std::string pose_path, paddle_path, name = "stroke";
    double height = 1.80;
    auto* import = app.add_subcommand("import", "Import pose + paddle streams as a recording");
    import->add_option("--pose", pose_path, "Pose stream (one JSON record per line)");
    import->add_option("--paddle", paddle_path, "Paddle stream (one JSON record per line)");
    import->add_option("--name", name, "Stroke name");
    import->add_option("--height", height, "Expert height in meters");

    EditArgs edit_args;
    auto* edit = app.add_subcommand("edit", "Trim, keyframe or reset a recording");
    edit->add_option("id", edit_args.id, "Recording id")->required();
    edit->add_option("--trim", edit_args.trim, "Start and end frame")->expected(2);
    edit->add_option("--keyframe", edit_args.keyframe, "Frame index and label")->expected(2);
    edit->add_flag("--reset", edit_args.reset, "Restore full bounds and clear keyframes");

    std::string user_ref, expert_ref, report_path;
    bool no_smooth = false;
    auto* analyze_cmd = app.add_subcommand("analyze", "Compare a user take against an expert take");
    analyze_cmd->add_option("user", user_ref, "User recording id or file")->required();
    analyze_cmd->add_option("expert", expert_ref, "Expert recording id or file")->required();
    analyze_cmd->add_option("--report", report_path, "Write the JSON report here");
    analyze_cmd->add_flag("--no-smooth", no_smooth, "Skip Kalman smoothing");

    ReplayArgs replay_args;
    auto* replay = app.add_subcommand("replay", "Stream a take to a running service");
    replay->add_option("--host", replay_args.host);
    replay->add_option("--port", replay_args.port);
    replay->add_option("--pose", replay_args.pose, "Pose stream")->required();
    replay->add_option("--paddle", replay_args.paddle, "Paddle stream")->required();
    replay->add_option("--stroke", replay_args.stroke, "Expert stroke id")->required();
    replay->add_option("--height", replay_args.height, "User height in meters");
    replay->add_option("--rate", replay_args.rate, "Replay rate multiplier");
    replay->add_option("--speed", replay_args.speed, "Expert playback speed");
    replay->add_option("--summary", replay_args.summary, "Write a JSON summary here");
    replay->add_flag("--keep", replay_args.keep, "Keep the session after replay");

    ServeArgs serve_args;
    auto* serve = app.add_subcommand("serve", "Run the training service");
    serve->add_option("--port", serve_args.port);
    serve->add_option("--bind", serve_args.bind);
    serve->add_option("--threads", serve_args.threads);
    serve->add_option("--horizon", serve_args.horizon, "Guidance horizon (expert frames)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }
    if (edit->parsed() && edit_args.trim.empty() && edit_args.keyframe.empty() && !edit_args.reset) {
        std::cerr << "edit: give --trim, --keyframe or --reset\n";
        return 2;
    }

    try {
        if (import->parsed()) return cmd_import(g, pose_path, paddle_path, name, height);
        if (edit->parsed()) return cmd_edit(g, edit_args);
        if (analyze_cmd->parsed()) {
            return cmd_analyze(g, user_ref, expert_ref, report_path, !no_smooth);
        }
        if (replay->parsed()) return cmd_replay(g, replay_args);
        if (serve->parsed()) return cmd_serve(g, serve_args);
    } catch (const Error& e) {
        std::cerr << "error: " << to_string(e.code()) << ": " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 2;
}
