#pragma once

#include <cmath>
#include <random>

#include "campo/bench/toy.hpp"
#include "campo/core/types.hpp"

namespace campo {

/// Quasi-static planar pushing of a circular object. The action is the push
/// direction z, the pusher's relative contact position x, and the duration.
/// Off-center contact slows the object and raises the chance that the
/// contact slips, rotating and shortening the displacement; execution jitter
/// scales with the nominal displacement. The conditional displacement
/// distribution has two to three modes.
class PushDomain {
public:
    static constexpr double kObjectRadius = 1.0;
    static constexpr double kNominalSpeed = 4.0;
    static constexpr double kSlipAngle = M_PI / 6.0;
    static constexpr double kSlipScale = 0.5;
    static constexpr double kSlipBase = 0.15;
    static constexpr double kSlipGain = 0.25;
    static constexpr double kJitterFraction = 0.05;
    static constexpr double kMinDuration = 0.05;
    static constexpr double kMaxDuration = 3.0;

    static ActionSpace action_space() {
        Vec lo(2), hi(2);
        lo << 0.0, -1.0;
        hi << 2.0 * M_PI, 1.0;
        return ActionSpace(lo, hi, kMinDuration, kMaxDuration);
    }

    [[nodiscard]] static Eigen::Index state_dim() { return 2; }

    [[nodiscard]] static double slip_probability(double x) {
        return kSlipBase + kSlipGain * std::abs(x);
    }

    /// Deterministic quasi-static displacement (no slip, no jitter).
    [[nodiscard]] static Vec nominal_displacement(const ActionVec& a) {
        double z = a.control[0];
        double x = a.control[1];
        double speed = kNominalSpeed * (1.0 - 0.5 * std::abs(x));
        Vec d(2);
        d << speed * a.duration * std::cos(z), speed * a.duration * std::sin(z);
        return d;
    }

    template <class Rng>
    [[nodiscard]] static Vec sample_displacement(const ActionVec& a, Rng& rng) {
        Vec delta = nominal_displacement(a);
        double jitter_sigma = kJitterFraction * delta.norm();

        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vec out = delta;
        if (unit(rng) < slip_probability(a.control[1])) {
            double sign = unit(rng) < 0.5 ? 1.0 : -1.0;
            out = kSlipScale * (rotation2d(sign * kSlipAngle) * delta);
        }
        std::normal_distribution<double> gauss(0.0, 1.0);
        out[0] += jitter_sigma * gauss(rng);
        out[1] += jitter_sigma * gauss(rng);
        return out;
    }

    template <class Rng>
    [[nodiscard]] static StateVec step(const StateVec& s, const ActionVec& a, Rng& rng) {
        return s + sample_displacement(a, rng);
    }
};

}  // namespace campo
