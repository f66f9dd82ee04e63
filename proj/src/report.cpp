#include "ttcoach/report.hpp"

#include "ttcoach/error.hpp"

#include <iomanip>
#include <limits>
#include <numeric>
#include <ostream>

namespace ttcoach {

AnalysisReport analyze(const StrokeRecording& user, const StrokeRecording& expert,
                       const SkeletonTopology& topo, const AlignConfig& config) {
    if (user.topology != expert.topology || user.topology != topo.name()) {
        fail(Errc::TopologyMismatch, "recordings use topologies '" + user.topology + "' and '" +
                                         expert.topology + "'");
    }
    config.validate();

    const auto ua = user.trimmed_angles();
    const auto ea = expert.trimmed_angles();
    const ComparisonResult result =
        compare_sequences(ua, user.trimmed_paddle(), ea, expert.trimmed_paddle(), config);

    AnalysisReport r;
    r.user_id = user.id;
    r.expert_id = expert.id;
    r.thresholds = config.thresholds;
    r.user_frames = ua.size();
    r.expert_frames = ea.size();
    r.joints = topo.comparison_joint_names();
    r.per_joint_cost = result.per_joint_score;
    r.paddle_cost = result.paddle_score;
    r.paddle_error = result.paddle_error;
    for (auto k : result.joint_errors) r.flagged_joints.push_back(r.joints.at(k));
    if (!r.per_joint_cost.empty()) {
        r.mean_body_cost = std::accumulate(r.per_joint_cost.begin(), r.per_joint_cost.end(), 0.0) /
                           static_cast<double>(r.per_joint_cost.size());
    }
    r.mean_paddle_cost = r.paddle_cost;

    if (!expert.keyframes.empty()) {
        const auto path = config.smooth
                              ? body_warping_path(smooth_angles(ua, config.kalman),
                                                  smooth_angles(ea, config.kalman))
                              : body_warping_path(ua, ea);
        for (const auto& kf : expert.keyframes) {
            const std::size_t e = kf.index - expert.start_frame;
            KeyframeMatch match{kf.index, kf.label, 0, std::numeric_limits<double>::infinity(), {}};
            for (const auto& [i, j] : path) {
                if (j != e) continue;
                const double d = mean_pose_dissimilarity(ua[i], ea[j]);
                if (d < match.dissimilarity) {
                    match.dissimilarity = d;
                    match.user_frame = user.start_frame + i;
                }
            }
            const auto& uf = ua[match.user_frame - user.start_frame];
            for (std::size_t k = 0; k < uf.angles.size(); ++k) {
                match.per_joint.push_back(quaternion_dissimilarity(uf.angles[k], ea[e].angles[k]));
            }
            r.keyframes.push_back(std::move(match));
        }
    }
    return r;
}

nlohmann::json report_to_json(const AnalysisReport& r) {
    using nlohmann::json;
    json costs = json::object();
    for (std::size_t k = 0; k < r.joints.size(); ++k) costs[r.joints[k]] = r.per_joint_cost[k];
    json keyframes = json::array();
    for (const auto& m : r.keyframes) {
        json per_joint = json::object();
        for (std::size_t k = 0; k < r.joints.size(); ++k) per_joint[r.joints[k]] = m.per_joint[k];
        keyframes.push_back({{"expert_frame", m.expert_frame},
                             {"label", m.label},
                             {"user_frame", m.user_frame},
                             {"dissimilarity", m.dissimilarity},
                             {"per_joint", std::move(per_joint)}});
    }
    return {{"version", 1},
            {"user", r.user_id},
            {"expert", r.expert_id},
            {"xi_joint", r.thresholds.joint},
            {"xi_paddle", r.thresholds.paddle},
            {"user_frames", r.user_frames},
            {"expert_frames", r.expert_frames},
            {"per_joint_cost", std::move(costs)},
            {"paddle_cost", r.paddle_cost},
            {"flagged_joints", r.flagged_joints},
            {"paddle_error", r.paddle_error},
            {"keyframes", std::move(keyframes)},
            {"summary", {{"mean_body_cost", r.mean_body_cost}, {"mean_paddle_cost", r.mean_paddle_cost}}}};
}

void print_report(std::ostream& out, const AnalysisReport& r) {
    const auto flags = out.flags();
    out << "user " << r.user_id << " (" << r.user_frames << " frames) vs expert " << r.expert_id
        << " (" << r.expert_frames << " frames)\n";
    out << std::left << std::setw(14) << "joint" << std::right << std::setw(10) << "cost"
        << "  flag\n";
    out << std::fixed << std::setprecision(4);
    for (std::size_t k = 0; k < r.joints.size(); ++k) {
        const bool flagged = r.per_joint_cost[k] > r.thresholds.joint;
        out << std::left << std::setw(14) << r.joints[k] << std::right << std::setw(10)
            << r.per_joint_cost[k] << "  " << (flagged ? "ERROR" : "") << '\n';
    }
    out << std::left << std::setw(14) << "paddle" << std::right << std::setw(10) << r.paddle_cost
        << "  " << (r.paddle_error ? "ERROR" : "") << '\n';
    for (const auto& m : r.keyframes) {
        out << "keyframe " << m.expert_frame;
        if (!m.label.empty()) out << " \"" << m.label << '"';
        out << " -> user frame " << m.user_frame << ", pose dissimilarity " << m.dissimilarity << '\n';
    }
    out << "mean body cost " << r.mean_body_cost << ", mean paddle cost " << r.mean_paddle_cost
        << " (xi_joint " << r.thresholds.joint << ", xi_paddle " << r.thresholds.paddle << ")\n";
    out.flags(flags);
}

}  // namespace ttcoach
