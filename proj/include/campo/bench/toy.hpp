#pragma once

#include <cmath>
#include <random>

#include "campo/core/types.hpp"
#include "campo/density/gmm.hpp"

namespace campo {

inline Mat rotation2d(double angle) {
    Mat r(2, 2);
    r << std::cos(angle), -std::sin(angle), std::sin(angle), std::cos(angle);
    return r;
}

/// Planar domain with known dynamics s' = s + R(z) * rho, where the action is
/// the motion direction z (duration fixed at 1) and rho is drawn from a fixed
/// two-mode Gaussian mixture.
class ToyDomain {
public:
    ToyDomain() : noise_(make_noise()) {}

    static ActionSpace action_space() {
        Vec lo(1), hi(1);
        lo << 0.0;
        hi << 2.0 * M_PI;
        return ActionSpace(lo, hi, 1.0, 1.0);
    }

    [[nodiscard]] static Eigen::Index state_dim() { return 2; }

    [[nodiscard]] const GaussianMixture& noise() const { return noise_; }

    /// Deterministic core, useful with a pinned noise draw.
    [[nodiscard]] static StateVec step_with_noise(const StateVec& s, const ActionVec& a,
                                                  const Vec& rho) {
        return s + rotation2d(a.control[0]) * rho;
    }

    template <class Rng>
    [[nodiscard]] Vec sample_displacement(const ActionVec& a, Rng& rng) const {
        return rotation2d(a.control[0]) * noise_.sample(rng);
    }

    template <class Rng>
    [[nodiscard]] StateVec step(const StateVec& s, const ActionVec& a, Rng& rng) const {
        return s + sample_displacement(a, rng);
    }

private:
    static GaussianMixture make_noise() {
        Vec w(2);
        w << 0.6, 0.4;
        Vec m1(2), m2(2);
        m1 << 5.0, 5.0;
        m2 << 5.0, -5.0;
        Mat cov = 2.0 * Mat::Identity(2, 2);
        return GaussianMixture(w, {m1, m2}, {cov, cov});
    }

    GaussianMixture noise_;
};

}  // namespace campo
