#pragma once

#include "ttcoach/quat.hpp"

#include <span>
#include <vector>

namespace ttcoach {

// Noise model for quaternion smoothing. Each quaternion component is tracked
// by its own constant-position scalar filter; all variances must be > 0.
struct KalmanParams {
    double process_noise = 1e-3;
    double measurement_noise = 1e-2;
    double initial_covariance = 1.0;

    void validate() const;
};

// Smooths an orientation stream. Signs are made continuous first (q_t is
// flipped when <q_t, q_{t-1}> < 0) so the component filters never average
// across the double cover. Output has the input's length and every element
// is unit-norm and canonical; the first output is canonicalize(seq[0]).
//
// Throws Errc::EmptySequence on empty input and Errc::InvalidParameter on bad
// parameters.
std::vector<Quat> kalman_filter(std::span<const Quat> seq, const KalmanParams& params = {});

}  // namespace ttcoach
