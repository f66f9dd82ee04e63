#include "ttcoach/recording.hpp"

#include "ttcoach/error.hpp"
#include "ttcoach/wire.hpp"

#include <algorithm>
#include <cctype>
#include <cstdint>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <sstream>

namespace ttcoach {

namespace {

using nlohmann::json;

template <typename Frame>
void require_increasing(std::span<const Frame> frames, const char* what) {
    for (std::size_t i = 1; i < frames.size(); ++i) {
        if (!(frames[i].timestamp_ms > frames[i - 1].timestamp_ms)) {
            std::ostringstream os;
            os << what << " timestamps not strictly increasing at index " << i;
            fail(Errc::NonMonotonicTimestamps, os.str());
        }
    }
}

std::uint64_t fnv1a(std::uint64_t h, const void* data, std::size_t len) {
    const auto* p = static_cast<const unsigned char*>(data);
    for (std::size_t i = 0; i < len; ++i) {
        h ^= p[i];
        h *= 0x100000001b3ULL;
    }
    return h;
}

// Stable id: readable slug plus a content hash, so importing the same take
// twice yields the same id.
std::string make_id(const std::string& name, double height,
                    std::span<const PoseFrame> poses, std::span<const PaddleFrame> paddle) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    h = fnv1a(h, name.data(), name.size());
    h = fnv1a(h, &height, sizeof height);
    for (const auto& f : poses) {
        h = fnv1a(h, &f.timestamp_ms, sizeof f.timestamp_ms);
        h = fnv1a(h, f.positions.data(), f.positions.size() * sizeof(Vec3));
    }
    for (const auto& f : paddle) {
        h = fnv1a(h, &f.timestamp_ms, sizeof f.timestamp_ms);
        h = fnv1a(h, &f.orientation, sizeof f.orientation);
    }
    std::string slug;
    for (char c : name) {
        if (std::isalnum(static_cast<unsigned char>(c))) {
            slug += static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
        } else if (!slug.empty() && slug.back() != '-') {
            slug += '-';
        }
    }
    while (!slug.empty() && slug.back() == '-') slug.pop_back();
    if (slug.empty()) slug = "stroke";
    std::ostringstream os;
    os << slug << '-' << std::hex << std::setw(12) << std::setfill('0') << (h >> 16);
    return os.str();
}

void require_range(const StrokeRecording& rec, std::size_t index) {
    if (index < rec.start_frame || index > rec.end_frame) {
        std::ostringstream os;
        os << "keyframe " << index << " outside trimmed range [" << rec.start_frame << ", "
           << rec.end_frame << "]";
        fail(Errc::IndexOutOfRange, os.str());
    }
}

}  // namespace

double StrokeRecording::duration_ms() const {
    if (pose_frames.empty()) return 0;
    return pose_frames[end_frame].timestamp_ms - pose_frames[start_frame].timestamp_ms;
}

std::span<const PoseFrame> StrokeRecording::trimmed_poses() const {
    return std::span<const PoseFrame>(pose_frames).subspan(start_frame, trimmed_length());
}

std::span<const JointAngleFrame> StrokeRecording::trimmed_angles() const {
    return std::span<const JointAngleFrame>(angle_frames).subspan(start_frame, trimmed_length());
}

std::span<const PaddleFrame> StrokeRecording::trimmed_paddle() const {
    return std::span<const PaddleFrame>(paddle_frames).subspan(start_frame, trimmed_length());
}

double StrokeRecording::native_fps() const {
    if (pose_frames.size() < 2) return 30.0;
    const double span_ms = pose_frames.back().timestamp_ms - pose_frames.front().timestamp_ms;
    return static_cast<double>(pose_frames.size() - 1) * 1000.0 / span_ms;
}

std::optional<std::string> check_invariants(const StrokeRecording& rec) {
    const std::size_t n = rec.pose_frames.size();
    if (n == 0) return "recording has no frames";
    if (rec.start_frame > rec.end_frame) return "start_frame after end_frame";
    if (rec.end_frame >= n) return "end_frame beyond last frame";
    if (rec.angle_frames.size() != n) return "angle_frames length differs from pose_frames";
    if (rec.paddle_frames.size() != n) return "paddle_frames length differs from pose_frames";
    for (std::size_t i = 0; i < rec.keyframes.size(); ++i) {
        const auto idx = rec.keyframes[i].index;
        if (idx < rec.start_frame || idx > rec.end_frame) return "keyframe outside trimmed range";
        if (i > 0 && rec.keyframes[i - 1].index >= idx) return "keyframes not sorted and unique";
    }
    for (std::size_t i = 0; i < n; ++i) {
        if (i > 0 && !(rec.pose_frames[i].timestamp_ms > rec.pose_frames[i - 1].timestamp_ms)) {
            return "pose timestamps not strictly increasing";
        }
        if (i > 0 && !(rec.paddle_frames[i].timestamp_ms > rec.paddle_frames[i - 1].timestamp_ms)) {
            return "paddle timestamps not strictly increasing";
        }
        if (rec.angle_frames[i].angles.size() != rec.angle_frames[0].angles.size()) {
            return "angle frames disagree on joint count";
        }
        for (const Quat& q : rec.angle_frames[i].angles) {
            if (!is_unit(q)) return "joint angle quaternion is not unit-norm";
        }
        if (!is_unit(rec.paddle_frames[i].orientation)) return "paddle quaternion is not unit-norm";
    }
    if (!(rec.expert_height_m > 0.5 && rec.expert_height_m < 2.5)) return "expert height out of range";
    return std::nullopt;
}

Quat resample_paddle(std::span<const PaddleFrame> samples, double timestamp_ms) {
    if (samples.empty()) fail(Errc::EmptyStream, "no paddle samples to resample");
    auto after = std::lower_bound(samples.begin(), samples.end(), timestamp_ms,
                                  [](const PaddleFrame& f, double t) { return f.timestamp_ms < t; });
    if (after == samples.begin()) return after->orientation;
    if (after == samples.end()) return samples.back().orientation;
    const auto& hi = *after;
    const auto& lo = *(after - 1);
    const double frac = (timestamp_ms - lo.timestamp_ms) / (hi.timestamp_ms - lo.timestamp_ms);
    return slerp(lo.orientation, hi.orientation, frac);
}

StrokeRecording ingest(std::span<const PoseFrame> pose_stream,
                       std::span<const PaddleFrame> paddle_stream, const SkeletonTopology& topo,
                       const std::string& name, double expert_height_m, std::string created_at) {
    if (pose_stream.empty()) fail(Errc::EmptyStream, "pose stream is empty");
    if (paddle_stream.empty()) fail(Errc::EmptyStream, "paddle stream required");
    validate_height(expert_height_m);
    require_increasing(pose_stream, "pose");
    require_increasing(paddle_stream, "paddle");

    StrokeRecording rec;
    rec.id = make_id(name, expert_height_m, pose_stream, paddle_stream);
    rec.name = name;
    rec.expert_height_m = expert_height_m;
    rec.topology = topo.name();
    rec.created_at = std::move(created_at);
    rec.pose_frames.assign(pose_stream.begin(), pose_stream.end());
    rec.angle_frames.reserve(pose_stream.size());
    rec.paddle_frames.reserve(pose_stream.size());
    for (const auto& pose : pose_stream) {
        rec.angle_frames.push_back(joint_angles(pose, topo));
        rec.paddle_frames.push_back(
            PaddleFrame{pose.timestamp_ms, resample_paddle(paddle_stream, pose.timestamp_ms)});
    }
    rec.start_frame = 0;
    rec.end_frame = pose_stream.size() - 1;
    return rec;
}

StrokeRecording trim(StrokeRecording rec, std::size_t start, std::size_t end) {
    if (start > end) {
        std::ostringstream os;
        os << "trim start " << start << " is after end " << end;
        fail(Errc::InvertedRange, os.str());
    }
    if (end >= rec.frame_count()) {
        std::ostringstream os;
        os << "trim end " << end << " beyond last frame " << rec.frame_count() - 1;
        fail(Errc::IndexOutOfRange, os.str());
    }
    rec.start_frame = start;
    rec.end_frame = end;
    std::erase_if(rec.keyframes,
                  [&](const Keyframe& k) { return k.index < start || k.index > end; });
    return rec;
}

StrokeRecording set_keyframes(StrokeRecording rec, std::vector<Keyframe> keyframes) {
    for (const auto& k : keyframes) require_range(rec, k.index);
    std::stable_sort(keyframes.begin(), keyframes.end(),
                     [](const Keyframe& a, const Keyframe& b) { return a.index < b.index; });
    keyframes.erase(std::unique(keyframes.begin(), keyframes.end(),
                                [](const Keyframe& a, const Keyframe& b) { return a.index == b.index; }),
                    keyframes.end());
    rec.keyframes = std::move(keyframes);
    return rec;
}

StrokeRecording set_keyframes(StrokeRecording rec, const std::vector<std::size_t>& indices) {
    std::vector<Keyframe> keyframes;
    keyframes.reserve(indices.size());
    for (auto i : indices) keyframes.push_back({i, {}});
    return set_keyframes(std::move(rec), std::move(keyframes));
}

StrokeRecording add_keyframe(StrokeRecording rec, std::size_t index, std::string label) {
    require_range(rec, index);
    auto it = std::find_if(rec.keyframes.begin(), rec.keyframes.end(),
                           [&](const Keyframe& k) { return k.index >= index; });
    if (it != rec.keyframes.end() && it->index == index) {
        it->label = std::move(label);
    } else {
        rec.keyframes.insert(it, Keyframe{index, std::move(label)});
    }
    return rec;
}

StrokeRecording reset(StrokeRecording rec) {
    rec.start_frame = 0;
    rec.end_frame = rec.frame_count() - 1;
    rec.keyframes.clear();
    return rec;
}

json recording_to_json(const StrokeRecording& rec, const SkeletonTopology& topo) {
    json poses = json::array();
    for (const auto& f : rec.pose_frames) poses.push_back(wire::pose_to_json(f, topo));
    json angles = json::array();
    for (const auto& f : rec.angle_frames) angles.push_back(wire::angles_to_json(f, topo));
    json paddle = json::array();
    for (const auto& f : rec.paddle_frames) paddle.push_back(wire::paddle_to_json(f));
    json keyframes = json::array();
    for (const auto& k : rec.keyframes) keyframes.push_back({{"index", k.index}, {"label", k.label}});

    return {{"version", rec.version},
            {"id", rec.id},
            {"name", rec.name},
            {"expert_height_m", rec.expert_height_m},
            {"topology", rec.topology},
            {"created_at", rec.created_at},
            {"start_frame", rec.start_frame},
            {"end_frame", rec.end_frame},
            {"keyframes", std::move(keyframes)},
            {"pose_frames", std::move(poses)},
            {"angle_frames", std::move(angles)},
            {"paddle_frames", std::move(paddle)}};
}

StrokeRecording recording_from_json(const json& doc, const SkeletonTopology& topo) {
    StrokeRecording rec;
    try {
        rec.version = doc.at("version").get<int>();
        if (rec.version != StrokeRecording::kSchemaVersion) {
            fail(Errc::CorruptFile, "unsupported recording version " + std::to_string(rec.version));
        }
        rec.id = doc.at("id").get<std::string>();
        rec.name = doc.at("name").get<std::string>();
        rec.expert_height_m = doc.at("expert_height_m").get<double>();
        rec.topology = doc.at("topology").get<std::string>();
        rec.created_at = doc.value("created_at", std::string{});
        rec.start_frame = doc.at("start_frame").get<std::size_t>();
        rec.end_frame = doc.at("end_frame").get<std::size_t>();
        for (const auto& k : doc.at("keyframes")) {
            rec.keyframes.push_back({k.at("index").get<std::size_t>(), k.value("label", std::string{})});
        }
        for (const auto& f : doc.at("pose_frames")) rec.pose_frames.push_back(wire::pose_from_json(f, topo));
        for (const auto& f : doc.at("angle_frames")) rec.angle_frames.push_back(wire::angles_from_json(f, topo));
        for (const auto& f : doc.at("paddle_frames")) rec.paddle_frames.push_back(wire::paddle_from_json(f));
    } catch (const json::exception& e) {
        fail(Errc::CorruptFile, std::string("recording schema: ") + e.what());
    } catch (const Error& e) {
        if (e.code() == Errc::CorruptFile) throw;
        fail(Errc::CorruptFile, std::string("recording schema: ") + e.what());
    }
    if (rec.topology != topo.name()) {
        fail(Errc::CorruptFile, "recording topology '" + rec.topology + "' does not match '" +
                                    topo.name() + "'");
    }
    if (auto violation = check_invariants(rec)) {
        fail(Errc::CorruptFile, "recording '" + rec.id + "': " + *violation);
    }
    return rec;
}

StrokeRecording read_recording(const std::filesystem::path& path,
                               std::span<const SkeletonTopology> topologies) {
    std::ifstream in(path);
    if (!in) fail(Errc::NotFound, "cannot open recording '" + path.string() + "'");
    json doc;
    try {
        doc = json::parse(in);
    } catch (const json::exception& e) {
        fail(Errc::CorruptFile, path.string() + ": " + e.what());
    }
    const std::string name = doc.is_object() ? doc.value("topology", std::string{}) : std::string{};
    for (const auto& topo : topologies) {
        if (topo.name() == name) return recording_from_json(doc, topo);
    }
    fail(Errc::CorruptFile, path.string() + ": unknown topology '" + name + "'");
}

void write_recording(const std::filesystem::path& path, const StrokeRecording& rec,
                     const SkeletonTopology& topo) {
    auto tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::trunc);
        if (!out) fail(Errc::NotFound, "cannot write '" + tmp.string() + "'");
        out << recording_to_json(rec, topo).dump(1) << '\n';
        if (!out) fail(Errc::NotFound, "write failed for '" + tmp.string() + "'");
    }
    std::filesystem::rename(tmp, path);
}

StrokeLibrary::StrokeLibrary(std::filesystem::path storage, std::vector<SkeletonTopology> topologies)
    : storage_(std::move(storage)), topologies_(std::move(topologies)) {
    std::filesystem::create_directories(storage_);
    for (const auto& entry : std::filesystem::directory_iterator(storage_)) {
        if (!entry.is_regular_file() || entry.path().extension() != ".json") continue;
        auto rec = std::make_shared<StrokeRecording>(read_recording(entry.path(), topologies_));
        recordings_[rec->id] = std::move(rec);
    }
}

std::filesystem::path StrokeLibrary::file_for(const std::string& id) const {
    return storage_ / (id + ".json");
}

std::vector<std::shared_ptr<const StrokeRecording>> StrokeLibrary::list() const {
    std::shared_lock lock(mutex_);
    std::vector<std::shared_ptr<const StrokeRecording>> out;
    out.reserve(recordings_.size());
    for (const auto& [id, rec] : recordings_) out.push_back(rec);
    return out;
}

std::shared_ptr<const StrokeRecording> StrokeLibrary::get(const std::string& id) const {
    std::shared_lock lock(mutex_);
    auto it = recordings_.find(id);
    if (it == recordings_.end()) fail(Errc::NotFound, "no recording with id '" + id + "'");
    return it->second;
}

bool StrokeLibrary::contains(const std::string& id) const {
    std::shared_lock lock(mutex_);
    return recordings_.count(id) != 0;
}

void StrokeLibrary::save(const StrokeRecording& rec) {
    if (rec.id.empty() || rec.id.find_first_of("/\\") != std::string::npos) {
        fail(Errc::InvalidParameter, "recording id '" + rec.id + "' is not a valid file name");
    }
    if (auto violation = check_invariants(rec)) {
        fail(Errc::InvalidParameter, "refusing to save '" + rec.id + "': " + *violation);
    }
    const auto& topo = topology(rec.topology);
    std::unique_lock lock(mutex_);
    write_recording(file_for(rec.id), rec, topo);
    recordings_[rec.id] = std::make_shared<const StrokeRecording>(rec);
}

StrokeRecording StrokeLibrary::load(const std::string& id) const {
    const auto path = file_for(id);
    std::shared_lock lock(mutex_);
    if (!std::filesystem::exists(path)) fail(Errc::NotFound, "no recording with id '" + id + "'");
    return read_recording(path, topologies_);
}

const SkeletonTopology& StrokeLibrary::topology(const std::string& name) const {
    for (const auto& t : topologies_) {
        if (t.name() == name) return t;
    }
    fail(Errc::NotFound, "unknown topology '" + name + "'");
}

}  // namespace ttcoach
