#pragma once

#include "ttcoach/align.hpp"
#include "ttcoach/recording.hpp"

#include <nlohmann/json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace ttcoach {

// Static-pose comparison at one expert keyframe.
struct KeyframeMatch {
    std::size_t expert_frame = 0;  // absolute
    std::string label;
    std::size_t user_frame = 0;  // absolute; best match among frames warped onto the keyframe
    double dissimilarity = 0;    // joint mean
    std::vector<double> per_joint;
};

// Whole-stroke comparison of a user take against an expert take over their
// trimmed ranges.
struct AnalysisReport {
    std::string user_id;
    std::string expert_id;
    Thresholds thresholds;
    std::size_t user_frames = 0;
    std::size_t expert_frames = 0;
    std::vector<std::string> joints;
    std::vector<double> per_joint_cost;  // terminal DTW cost / N
    double paddle_cost = 0;
    std::vector<std::string> flagged_joints;
    bool paddle_error = false;
    std::vector<KeyframeMatch> keyframes;
    double mean_body_cost = 0;  // "average quaternion error": per_joint_cost averaged over joints
    double mean_paddle_cost = 0;
};

// Throws TopologyMismatch when the recordings use different skeletons.
AnalysisReport analyze(const StrokeRecording& user, const StrokeRecording& expert,
                       const SkeletonTopology& topo, const AlignConfig& config);

nlohmann::json report_to_json(const AnalysisReport& report);
void print_report(std::ostream& out, const AnalysisReport& report);

}  // namespace ttcoach
