#include "ttcoach/kalman.hpp"

#include "ttcoach/error.hpp"

#include <array>

namespace ttcoach {

void KalmanParams::validate() const {
    if (!(process_noise > 0) || !(measurement_noise > 0) || !(initial_covariance > 0)) {
        fail(Errc::InvalidParameter, "Kalman noise parameters must be strictly positive");
    }
}

std::vector<Quat> kalman_filter(std::span<const Quat> seq, const KalmanParams& params) {
    params.validate();
    if (seq.empty()) fail(Errc::EmptySequence, "cannot filter an empty quaternion sequence");

    std::vector<Quat> out;
    out.reserve(seq.size());

    Quat prev = canonicalize(normalize(seq.front()));
    out.push_back(prev);

    // The covariance recursion is identical for the four components, so a
    // single scalar P and gain serve all of them.
    std::array<double, 4> state{prev.w, prev.x, prev.y, prev.z};
    double cov = params.initial_covariance;

    for (std::size_t t = 1; t < seq.size(); ++t) {
        Quat meas = normalize(seq[t]);
        if (dot(meas, prev) < 0) meas = -meas;
        prev = meas;

        const double predicted = cov + params.process_noise;
        const double gain = predicted / (predicted + params.measurement_noise);
        cov = (1.0 - gain) * predicted;

        const std::array<double, 4> z{meas.w, meas.x, meas.y, meas.z};
        for (std::size_t c = 0; c < 4; ++c) state[c] += gain * (z[c] - state[c]);

        out.push_back(canonicalize(normalize(Quat{state[0], state[1], state[2], state[3]})));
    }
    return out;
}

}  // namespace ttcoach
