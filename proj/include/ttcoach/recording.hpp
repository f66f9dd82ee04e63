#pragma once

#include "ttcoach/skeleton.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <map>
#include <memory>
#include <optional>
#include <shared_mutex>
#include <span>
#include <string>
#include <vector>

namespace ttcoach {

struct Keyframe {
    std::size_t index = 0;
    std::string label;  // stage name shown in the UI, e.g. "back swing"

    bool operator==(const Keyframe&) const = default;
};

// An authored expert stroke. Trimming only moves [start_frame, end_frame];
// frame data is never discarded, so reset() can restore the full take.
struct StrokeRecording {
    static constexpr int kSchemaVersion = 1;

    std::string id;
    std::string name;
    double expert_height_m = 1.80;
    std::string topology = "default17";
    std::vector<PoseFrame> pose_frames;
    std::vector<JointAngleFrame> angle_frames;
    std::vector<PaddleFrame> paddle_frames;  // resampled to pose timestamps
    std::size_t start_frame = 0;
    std::size_t end_frame = 0;
    std::vector<Keyframe> keyframes;  // sorted by index, unique
    std::string created_at;
    int version = kSchemaVersion;

    std::size_t frame_count() const { return pose_frames.size(); }
    std::size_t trimmed_length() const { return end_frame - start_frame + 1; }
    double duration_ms() const;

    std::span<const PoseFrame> trimmed_poses() const;
    std::span<const JointAngleFrame> trimmed_angles() const;
    std::span<const PaddleFrame> trimmed_paddle() const;

    // Playback rate from pose timestamps; 30 fps for single-frame takes.
    double native_fps() const;
};

// Returns a description of the first violated invariant, if any.
std::optional<std::string> check_invariants(const StrokeRecording& rec);

// Paddle orientation at `timestamp_ms`: slerp between the two bracketing
// samples, or the nearest sample outside the covered range. `samples` must be
// non-empty and sorted by time.
Quat resample_paddle(std::span<const PaddleFrame> samples, double timestamp_ms);

// Builds a recording from raw streams: joint angles per pose frame, paddle
// resampled onto the pose clock, full bounds, no keyframes.
// Throws EmptyStream, NonMonotonicTimestamps (message names the index),
// InvalidHeight, or any skeleton error for a malformed pose.
StrokeRecording ingest(std::span<const PoseFrame> pose_stream,
                       std::span<const PaddleFrame> paddle_stream, const SkeletonTopology& topo,
                       const std::string& name, double expert_height_m,
                       std::string created_at = {});

// Throws InvertedRange if start > end, IndexOutOfRange if end is past the
// last frame. Keyframes outside the new bounds are dropped.
StrokeRecording trim(StrokeRecording rec, std::size_t start, std::size_t end);

// Replaces the keyframes with the sorted, deduplicated set. The first label
// given for a duplicated index wins. Throws IndexOutOfRange.
StrokeRecording set_keyframes(StrokeRecording rec, std::vector<Keyframe> keyframes);
StrokeRecording set_keyframes(StrokeRecording rec, const std::vector<std::size_t>& indices);

// Adds or relabels a single keyframe.
StrokeRecording add_keyframe(StrokeRecording rec, std::size_t index, std::string label);

// Full bounds, no keyframes.
StrokeRecording reset(StrokeRecording rec);

nlohmann::json recording_to_json(const StrokeRecording& rec, const SkeletonTopology& topo);
// Throws CorruptFile on schema or invariant violations.
StrokeRecording recording_from_json(const nlohmann::json& doc, const SkeletonTopology& topo);

StrokeRecording read_recording(const std::filesystem::path& path,
                               std::span<const SkeletonTopology> topologies);
void write_recording(const std::filesystem::path& path, const StrokeRecording& rec,
                     const SkeletonTopology& topo);

/**
 * Directory of recordings, one `<id>.json` file each.
 *
 * Writers are serialized and readers share access. Recordings are handed out
 * as shared immutable values, so a reader keeps a consistent copy even if the
 * entry is replaced afterwards.
 */
class StrokeLibrary {
public:
    // Creates the directory if needed and loads every recording in it.
    // A corrupt file aborts construction with CorruptFile.
    explicit StrokeLibrary(std::filesystem::path storage,
                           std::vector<SkeletonTopology> topologies = {default_topology()});

    const std::filesystem::path& storage_path() const { return storage_; }
    std::filesystem::path file_for(const std::string& id) const;

    std::vector<std::shared_ptr<const StrokeRecording>> list() const;
    std::shared_ptr<const StrokeRecording> get(const std::string& id) const;  // NotFound
    bool contains(const std::string& id) const;

    // Validates, writes the file atomically and replaces the cached entry.
    void save(const StrokeRecording& rec);

    // Re-reads the file from disk. NotFound / CorruptFile.
    StrokeRecording load(const std::string& id) const;

    const SkeletonTopology& topology(const std::string& name) const;  // NotFound

private:
    std::filesystem::path storage_;
    std::vector<SkeletonTopology> topologies_;
    mutable std::shared_mutex mutex_;
    std::map<std::string, std::shared_ptr<const StrokeRecording>> recordings_;
};

}  // namespace ttcoach
