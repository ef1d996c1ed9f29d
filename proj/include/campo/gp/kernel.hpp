#pragma once

#include <cmath>
#include <stdexcept>

#include "campo/core/types.hpp"

namespace campo {

/// Matern-5/2 kernel with per-dimension lengthscales over flattened actions
/// (controls plus duration).
struct KernelSpec {
    double signal_variance{1.0};
    Vec lengthscales;
    double noise_variance{1e-4};

    KernelSpec() = default;
    KernelSpec(double sv, Vec ls, double noise)
        : signal_variance(sv), lengthscales(std::move(ls)), noise_variance(noise) {
        validate();
    }

    void validate() const {
        if (!(signal_variance > 0.0) || !(noise_variance > 0.0) ||
            (lengthscales.array() <= 0.0).any())
            throw std::invalid_argument("kernel parameters must be strictly positive");
    }
};

inline double kernel_eval_flat(const KernelSpec& k, const Vec& x1, const Vec& x2) {
    double r2 = 0.0;
    for (Eigen::Index i = 0; i < x1.size(); ++i) {
        double d = (x1[i] - x2[i]) / k.lengthscales[i];
        r2 += d * d;
    }
    double r = std::sqrt(r2);
    double sr = std::sqrt(5.0) * r;
    return k.signal_variance * (1.0 + sr + 5.0 * r2 / 3.0) * std::exp(-sr);
}

inline double kernel_eval(const KernelSpec& k, const ActionVec& a1, const ActionVec& a2) {
    if (a1.control.size() != a2.control.size())
        throw std::invalid_argument("kernel action dimension mismatch");
    if (k.lengthscales.size() != a1.control.size() + 1)
        throw std::invalid_argument("kernel lengthscale dimension mismatch");
    return kernel_eval_flat(k, a1.flatten(), a2.flatten());
}

/// Sensible kernel defaults for an action space: lengthscales at 20% of each
/// dimension's range, unit signal variance, small noise floor.
inline KernelSpec default_kernel(const ActionSpace& space) {
    Vec ls(space.dim());
    for (Eigen::Index i = 0; i < space.control_dim(); ++i)
        ls[i] = std::max(0.2 * (space.control_max[i] - space.control_min[i]), 1e-3);
    ls[space.control_dim()] = std::max(0.2 * (space.t_max - space.t_min), 1e-3);
    return KernelSpec(1.0, std::move(ls), 1e-4);
}

}  // namespace campo
