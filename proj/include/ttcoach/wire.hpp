#pragma once

// Structured-text records shared by stream files, recording files and the
// service's message streams.
//
//   pose:   {"t": ms, "joints": {"<name>": [x, y, z], ...}}
//   paddle: {"t": ms, "quat": [w, x, y, z]}
//
// Stream files hold one record per line.

#include "ttcoach/skeleton.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <iosfwd>
#include <vector>

namespace ttcoach::wire {

using nlohmann::json;

json to_json(const Vec3& v);
json to_json(const Quat& q);
Vec3 vec3_from_json(const json& j);
Quat quat_from_json(const json& j);  // normalized; SchemaError if degenerate

json pose_to_json(const PoseFrame& frame, const SkeletonTopology& topo);
// Joint names go through the topology's name map; unknown extra joints are
// ignored; a missing topology joint is a SchemaError.
PoseFrame pose_from_json(const json& j, const SkeletonTopology& topo);

json paddle_to_json(const PaddleFrame& frame);
PaddleFrame paddle_from_json(const json& j);

json angles_to_json(const JointAngleFrame& frame, const SkeletonTopology& topo);
JointAngleFrame angles_from_json(const json& j, const SkeletonTopology& topo);

bool is_pose_record(const json& j);
bool is_paddle_record(const json& j);

// Line-oriented readers. Blank lines are skipped; a malformed line raises
// SchemaError naming its 0-based record index.
std::vector<PoseFrame> read_pose_stream(std::istream& in, const SkeletonTopology& topo);
std::vector<PaddleFrame> read_paddle_stream(std::istream& in);
std::vector<PoseFrame> read_pose_file(const std::filesystem::path& path,
                                      const SkeletonTopology& topo);
std::vector<PaddleFrame> read_paddle_file(const std::filesystem::path& path);

void write_pose_stream(std::ostream& out, const std::vector<PoseFrame>& frames,
                       const SkeletonTopology& topo);
void write_paddle_stream(std::ostream& out, const std::vector<PaddleFrame>& frames);

}  // namespace ttcoach::wire
