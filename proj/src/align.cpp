#include "ttcoach/align.hpp"

#include "ttcoach/error.hpp"

#include <algorithm>
#include <limits>
#include <sstream>

namespace ttcoach {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t checked_joint_count(std::span<const JointAngleFrame> user,
                                std::span<const JointAngleFrame> expert) {
    if (user.empty() || expert.empty()) {
        fail(Errc::EmptySequence, "DTW needs non-empty user and expert sequences");
    }
    const std::size_t joints = user.front().angles.size();
    auto check = [joints](std::span<const JointAngleFrame> seq, const char* who) {
        for (std::size_t i = 0; i < seq.size(); ++i) {
            if (seq[i].angles.size() != joints) {
                std::ostringstream os;
                os << who << " frame " << i << " has " << seq[i].angles.size()
                   << " joints, expected " << joints;
                fail(Errc::JointSetMismatch, os.str());
            }
        }
    };
    check(user, "user");
    check(expert, "expert");
    return joints;
}

}  // namespace

BodyCostTensor::BodyCostTensor(std::size_t n, std::size_t m, std::size_t joints)
    : n_(n), m_(m), joints_(joints), costs_((n + 1) * (m + 1) * joints, kInf) {
    for (std::size_t k = 0; k < joints; ++k) at(0, 0, k) = 0;
}

PaddleCostMatrix::PaddleCostMatrix(std::size_t n, std::size_t m)
    : n_(n), m_(m), costs_((n + 1) * (m + 1), kInf) {
    at(0, 0) = 0;
}

void Thresholds::validate() const {
    if (!(joint > 0 && joint < 1) || !(paddle > 0 && paddle < 1)) {
        fail(Errc::InvalidParameter, "thresholds must lie in (0, 1)");
    }
}

bool ComparisonResult::joint_flagged(std::size_t k) const {
    return std::binary_search(joint_errors.begin(), joint_errors.end(), k);
}

void AlignConfig::validate() const {
    if (window == 0) fail(Errc::InvalidParameter, "window length must be positive");
    thresholds.validate();
    kalman.validate();
}

BodyCostTensor dtw_body(std::span<const JointAngleFrame> user,
                        std::span<const JointAngleFrame> expert) {
    const std::size_t joints = checked_joint_count(user, expert);
    const std::size_t n = user.size();
    const std::size_t m = expert.size();
    BodyCostTensor d(n, m, joints);
    for (std::size_t i = 1; i <= n; ++i) {
        const auto& u = user[i - 1].angles;
        for (std::size_t j = 1; j <= m; ++j) {
            const auto& e = expert[j - 1].angles;
            for (std::size_t k = 0; k < joints; ++k) {
                const double cost = quaternion_dissimilarity(u[k], e[k]);
                d.at(i, j, k) = cost + std::min({d.at(i - 1, j, k), d.at(i, j - 1, k),
                                                 d.at(i - 1, j - 1, k)});
            }
        }
    }
    return d;
}

PaddleCostMatrix dtw_paddle(std::span<const PaddleFrame> user,
                            std::span<const PaddleFrame> expert) {
    if (user.empty() || expert.empty()) {
        fail(Errc::EmptySequence, "DTW needs non-empty user and expert paddle sequences");
    }
    const std::size_t n = user.size();
    const std::size_t m = expert.size();
    PaddleCostMatrix d(n, m);
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            const double cost =
                quaternion_dissimilarity(user[i - 1].orientation, expert[j - 1].orientation);
            d.at(i, j) = cost + std::min({d.at(i - 1, j), d.at(i, j - 1), d.at(i - 1, j - 1)});
        }
    }
    return d;
}

ComparisonResult classify(const BodyCostTensor& body, const PaddleCostMatrix& paddle,
                          const Thresholds& thresholds) {
    thresholds.validate();
    ComparisonResult r;
    const double n = static_cast<double>(body.n());
    r.per_joint_score.reserve(body.joint_count());
    for (std::size_t k = 0; k < body.joint_count(); ++k) {
        const double score = body.terminal(k) / n;
        r.per_joint_score.push_back(score);
        if (score > thresholds.joint) r.joint_errors.push_back(k);
    }
    r.paddle_score = paddle.terminal() / static_cast<double>(paddle.n());
    r.paddle_error = r.paddle_score > thresholds.paddle;
    r.window_span = {0, body.n(), 0, body.m()};
    return r;
}

std::vector<JointAngleFrame> smooth_angles(std::span<const JointAngleFrame> frames,
                                           const KalmanParams& params) {
    if (frames.empty()) fail(Errc::EmptySequence, "cannot smooth an empty sequence");
    const std::size_t joints = frames.front().angles.size();
    std::vector<JointAngleFrame> out(frames.begin(), frames.end());
    std::vector<Quat> track(frames.size());
    for (std::size_t k = 0; k < joints; ++k) {
        for (std::size_t t = 0; t < frames.size(); ++t) {
            if (frames[t].angles.size() != joints) {
                fail(Errc::JointSetMismatch, "frames disagree on joint count");
            }
            track[t] = frames[t].angles[k];
        }
        const auto filtered = kalman_filter(track, params);
        for (std::size_t t = 0; t < frames.size(); ++t) out[t].angles[k] = filtered[t];
    }
    return out;
}

std::vector<PaddleFrame> smooth_paddle(std::span<const PaddleFrame> frames,
                                       const KalmanParams& params) {
    if (frames.empty()) fail(Errc::EmptySequence, "cannot smooth an empty sequence");
    std::vector<Quat> track;
    track.reserve(frames.size());
    for (const auto& f : frames) track.push_back(f.orientation);
    const auto filtered = kalman_filter(track, params);
    std::vector<PaddleFrame> out(frames.begin(), frames.end());
    for (std::size_t t = 0; t < out.size(); ++t) out[t].orientation = filtered[t];
    return out;
}

ComparisonResult compare_sequences(std::span<const JointAngleFrame> user_angles,
                                   std::span<const PaddleFrame> user_paddle,
                                   std::span<const JointAngleFrame> expert_angles,
                                   std::span<const PaddleFrame> expert_paddle,
                                   const AlignConfig& config) {
    config.validate();
    if (!config.smooth) {
        return classify(dtw_body(user_angles, expert_angles),
                        dtw_paddle(user_paddle, expert_paddle), config.thresholds);
    }
    const auto ua = smooth_angles(user_angles, config.kalman);
    const auto ea = smooth_angles(expert_angles, config.kalman);
    const auto up = smooth_paddle(user_paddle, config.kalman);
    const auto ep = smooth_paddle(expert_paddle, config.kalman);
    return classify(dtw_body(ua, ea), dtw_paddle(up, ep), config.thresholds);
}

ComparisonResult window_compare(std::span<const JointAngleFrame> user_angles,
                                std::span<const PaddleFrame> user_paddle,
                                std::span<const JointAngleFrame> expert_angles,
                                std::span<const PaddleFrame> expert_paddle,
                                const AlignConfig& config) {
    config.validate();
    const std::size_t w = config.window;
    if (user_angles.size() < w || user_paddle.size() < w || expert_angles.size() < w ||
        expert_paddle.size() < w) {
        std::ostringstream os;
        os << "comparison window needs " << w << " frames per stream";
        fail(Errc::WindowUnderfilled, os.str());
    }
    return compare_sequences(user_angles.last(w), user_paddle.last(w), expert_angles.last(w),
                             expert_paddle.last(w), config);
}

double mean_pose_dissimilarity(const JointAngleFrame& a, const JointAngleFrame& b) {
    if (a.angles.size() != b.angles.size()) {
        fail(Errc::JointSetMismatch, "frames disagree on joint count");
    }
    if (a.angles.empty()) return 0;
    double sum = 0;
    for (std::size_t k = 0; k < a.angles.size(); ++k) {
        sum += quaternion_dissimilarity(a.angles[k], b.angles[k]);
    }
    return sum / static_cast<double>(a.angles.size());
}

std::vector<std::pair<std::size_t, std::size_t>> body_warping_path(
    std::span<const JointAngleFrame> user, std::span<const JointAngleFrame> expert) {
    checked_joint_count(user, expert);
    const std::size_t n = user.size();
    const std::size_t m = expert.size();
    PaddleCostMatrix d(n, m);  // same padded layout, scalar cost
    for (std::size_t i = 1; i <= n; ++i) {
        for (std::size_t j = 1; j <= m; ++j) {
            d.at(i, j) = mean_pose_dissimilarity(user[i - 1], expert[j - 1]) +
                         std::min({d.at(i - 1, j), d.at(i, j - 1), d.at(i - 1, j - 1)});
        }
    }

    std::vector<std::pair<std::size_t, std::size_t>> path;
    std::size_t i = n, j = m;
    while (true) {
        path.emplace_back(i - 1, j - 1);
        if (i == 1 && j == 1) break;
        const double diag = d.at(i - 1, j - 1);
        const double up = d.at(i - 1, j);
        const double left = d.at(i, j - 1);
        if (diag <= up && diag <= left) {
            --i;
            --j;
        } else if (up <= left) {
            --i;
        } else {
            --j;
        }
    }
    std::reverse(path.begin(), path.end());
    return path;
}

}  // namespace ttcoach
