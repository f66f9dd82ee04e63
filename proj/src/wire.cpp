#include "ttcoach/wire.hpp"

#include "ttcoach/error.hpp"

#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>

namespace ttcoach::wire {

namespace {

double number_at(const json& j, const char* key) {
    if (!j.is_object() || !j.contains(key) || !j[key].is_number()) {
        fail(Errc::SchemaError, std::string("record needs numeric field '") + key + "'");
    }
    const double v = j[key].get<double>();
    if (!std::isfinite(v)) fail(Errc::SchemaError, std::string("field '") + key + "' is not finite");
    return v;
}

std::vector<double> numbers(const json& j, std::size_t count, const char* what) {
    if (!j.is_array() || j.size() != count) {
        std::ostringstream os;
        os << what << " must be an array of " << count << " numbers";
        fail(Errc::SchemaError, os.str());
    }
    std::vector<double> out;
    out.reserve(count);
    for (const auto& v : j) {
        if (!v.is_number()) fail(Errc::SchemaError, std::string(what) + " holds a non-number");
        out.push_back(v.get<double>());
        if (!std::isfinite(out.back())) fail(Errc::SchemaError, std::string(what) + " is not finite");
    }
    return out;
}

std::ifstream open(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) fail(Errc::NotFound, "cannot open '" + path.string() + "'");
    return in;
}

template <typename Frame, typename Parse>
std::vector<Frame> read_lines(std::istream& in, Parse parse) {
    std::vector<Frame> frames;
    std::string line;
    std::size_t index = 0;
    while (std::getline(in, line)) {
        if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
        try {
            frames.push_back(parse(json::parse(line)));
        } catch (const json::exception& e) {
            std::ostringstream os;
            os << "record " << index << ": " << e.what();
            fail(Errc::SchemaError, os.str());
        } catch (const Error& e) {
            std::ostringstream os;
            os << "record " << index << ": " << e.what();
            fail(e.code(), os.str());
        }
        ++index;
    }
    return frames;
}

}  // namespace

json to_json(const Vec3& v) { return json::array({v.x, v.y, v.z}); }
json to_json(const Quat& q) { return json::array({q.w, q.x, q.y, q.z}); }

Vec3 vec3_from_json(const json& j) {
    const auto v = numbers(j, 3, "position");
    return {v[0], v[1], v[2]};
}

Quat quat_from_json(const json& j) {
    const auto v = numbers(j, 4, "quaternion");
    try {
        return normalize(Quat{v[0], v[1], v[2], v[3]});
    } catch (const Error& e) {
        fail(Errc::SchemaError, e.what());
    }
}

json pose_to_json(const PoseFrame& frame, const SkeletonTopology& topo) {
    json joints = json::object();
    for (std::size_t i = 0; i < topo.size(); ++i) {
        joints[topo.joint(i).name] = to_json(frame.positions.at(i));
    }
    return {{"t", frame.timestamp_ms}, {"joints", std::move(joints)}};
}

PoseFrame pose_from_json(const json& j, const SkeletonTopology& topo) {
    PoseFrame frame;
    frame.timestamp_ms = number_at(j, "t");
    if (!j.contains("joints") || !j["joints"].is_object()) {
        fail(Errc::SchemaError, "pose record needs a 'joints' object");
    }
    frame.positions.resize(topo.size());
    std::vector<bool> present(topo.size(), false);
    for (const auto& [raw, value] : j["joints"].items()) {
        auto index = topo.find(topo.map_name(raw));
        if (!index) continue;
        frame.positions[*index] = vec3_from_json(value);
        present[*index] = true;
    }
    for (std::size_t i = 0; i < topo.size(); ++i) {
        if (!present[i]) fail(Errc::SchemaError, "pose record lacks joint '" + topo.joint(i).name + "'");
    }
    return frame;
}

json paddle_to_json(const PaddleFrame& frame) {
    return {{"t", frame.timestamp_ms}, {"quat", to_json(frame.orientation)}};
}

PaddleFrame paddle_from_json(const json& j) {
    PaddleFrame frame;
    frame.timestamp_ms = number_at(j, "t");
    if (!j.contains("quat")) fail(Errc::SchemaError, "paddle record needs a 'quat' array");
    frame.orientation = quat_from_json(j["quat"]);
    return frame;
}

json angles_to_json(const JointAngleFrame& frame, const SkeletonTopology& topo) {
    json angles = json::object();
    const auto& cmp = topo.comparison_joints();
    for (std::size_t k = 0; k < cmp.size(); ++k) {
        angles[topo.joint(cmp[k]).name] = to_json(frame.angles.at(k));
    }
    return {{"t", frame.timestamp_ms}, {"angles", std::move(angles)}};
}

JointAngleFrame angles_from_json(const json& j, const SkeletonTopology& topo) {
    JointAngleFrame frame;
    frame.timestamp_ms = number_at(j, "t");
    if (!j.contains("angles") || !j["angles"].is_object()) {
        fail(Errc::SchemaError, "angle record needs an 'angles' object");
    }
    const auto& angles = j["angles"];
    for (std::size_t idx : topo.comparison_joints()) {
        const auto& name = topo.joint(idx).name;
        if (!angles.contains(name)) fail(Errc::SchemaError, "angle record lacks joint '" + name + "'");
        const auto v = numbers(angles[name], 4, "quaternion");
        frame.angles.push_back(Quat{v[0], v[1], v[2], v[3]});
    }
    return frame;
}

bool is_pose_record(const json& j) { return j.is_object() && j.contains("joints"); }
bool is_paddle_record(const json& j) { return j.is_object() && j.contains("quat"); }

std::vector<PoseFrame> read_pose_stream(std::istream& in, const SkeletonTopology& topo) {
    return read_lines<PoseFrame>(in, [&](const json& j) { return pose_from_json(j, topo); });
}

std::vector<PaddleFrame> read_paddle_stream(std::istream& in) {
    return read_lines<PaddleFrame>(in, [](const json& j) { return paddle_from_json(j); });
}

std::vector<PoseFrame> read_pose_file(const std::filesystem::path& path,
                                      const SkeletonTopology& topo) {
    auto in = open(path);
    return read_pose_stream(in, topo);
}

std::vector<PaddleFrame> read_paddle_file(const std::filesystem::path& path) {
    auto in = open(path);
    return read_paddle_stream(in);
}

void write_pose_stream(std::ostream& out, const std::vector<PoseFrame>& frames,
                       const SkeletonTopology& topo) {
    for (const auto& f : frames) out << pose_to_json(f, topo).dump() << '\n';
}

void write_paddle_stream(std::ostream& out, const std::vector<PaddleFrame>& frames) {
    for (const auto& f : frames) out << paddle_to_json(f).dump() << '\n';
}

}  // namespace ttcoach::wire
