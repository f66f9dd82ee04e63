#pragma once

/**
 * Quaternion-dissimilarity dynamic time warping.
 *
 * Both cost tables carry the usual DTW padding: row 0 and column 0 are
 * virtual, cell (0, 0) is zero and the rest of the border is +inf. Cell
 * (i, j) for i, j >= 1 is the optimal cost of aligning the first i user
 * frames with the first j expert frames under the step set
 * {(i-1, j), (i, j-1), (i-1, j-1)}.
 */

#include "ttcoach/kalman.hpp"
#include "ttcoach/skeleton.hpp"

#include <cstddef>
#include <span>
#include <utility>
#include <vector>

namespace ttcoach {

class BodyCostTensor {
public:
    BodyCostTensor(std::size_t n, std::size_t m, std::size_t joints);

    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }
    std::size_t joint_count() const { return joints_; }

    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return costs_[(i * (m_ + 1) + j) * joints_ + k];
    }
    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return costs_[(i * (m_ + 1) + j) * joints_ + k];
    }
    double terminal(std::size_t k) const { return at(n_, m_, k); }

private:
    std::size_t n_, m_, joints_;
    std::vector<double> costs_;
};

class PaddleCostMatrix {
public:
    PaddleCostMatrix(std::size_t n, std::size_t m);

    std::size_t n() const { return n_; }
    std::size_t m() const { return m_; }

    double at(std::size_t i, std::size_t j) const { return costs_[i * (m_ + 1) + j]; }
    double& at(std::size_t i, std::size_t j) { return costs_[i * (m_ + 1) + j]; }
    double terminal() const { return at(n_, m_); }

private:
    std::size_t n_, m_;
    std::vector<double> costs_;
};

struct Thresholds {
    double joint = 0.1;
    double paddle = 0.1;

    void validate() const;  // both must lie in (0, 1)
};

// Half-open frame ranges that were compared.
struct WindowSpan {
    std::size_t user_begin = 0, user_end = 0;
    std::size_t expert_begin = 0, expert_end = 0;
};

struct ComparisonResult {
    std::vector<double> per_joint_score;  // terminal cost / N, per comparison joint
    double paddle_score = 0;
    std::vector<std::size_t> joint_errors;  // ascending comparison-joint indices
    bool paddle_error = false;
    WindowSpan window_span;

    bool joint_flagged(std::size_t k) const;
};

// Throws EmptySequence when either input is empty and JointSetMismatch when
// frames disagree on the number of joints. Inputs are used as given; the
// smoothing step lives in compare_sequences.
BodyCostTensor dtw_body(std::span<const JointAngleFrame> user,
                        std::span<const JointAngleFrame> expert);

PaddleCostMatrix dtw_paddle(std::span<const PaddleFrame> user,
                            std::span<const PaddleFrame> expert);

// A joint is flagged iff its normalized cost is strictly greater than the
// joint threshold; the paddle likewise. Normalization divides by N, the user
// sequence length.
ComparisonResult classify(const BodyCostTensor& body, const PaddleCostMatrix& paddle,
                          const Thresholds& thresholds);

struct AlignConfig {
    std::size_t window = 10;
    Thresholds thresholds;
    KalmanParams kalman;
    bool smooth = true;  // Kalman-filter both inputs before warping

    void validate() const;
};

std::vector<JointAngleFrame> smooth_angles(std::span<const JointAngleFrame> frames,
                                           const KalmanParams& params);
std::vector<PaddleFrame> smooth_paddle(std::span<const PaddleFrame> frames,
                                       const KalmanParams& params);

// Smooth (optionally), warp body and paddle, classify.
ComparisonResult compare_sequences(std::span<const JointAngleFrame> user_angles,
                                   std::span<const PaddleFrame> user_paddle,
                                   std::span<const JointAngleFrame> expert_angles,
                                   std::span<const PaddleFrame> expert_paddle,
                                   const AlignConfig& config);

// compare_sequences over the trailing `config.window` frames of each input.
// Throws WindowUnderfilled when any input is shorter than the window.
ComparisonResult window_compare(std::span<const JointAngleFrame> user_angles,
                                std::span<const PaddleFrame> user_paddle,
                                std::span<const JointAngleFrame> expert_angles,
                                std::span<const PaddleFrame> expert_paddle,
                                const AlignConfig& config);

// Optimal warping path (0-based (user, expert) pairs from (0, 0) to
// (N-1, M-1)) under the joint-averaged dissimilarity. Ties prefer the
// diagonal step.
std::vector<std::pair<std::size_t, std::size_t>> body_warping_path(
    std::span<const JointAngleFrame> user, std::span<const JointAngleFrame> expert);

// Mean dissimilarity over joints between two frames.
double mean_pose_dissimilarity(const JointAngleFrame& a, const JointAngleFrame& b);

}  // namespace ttcoach
