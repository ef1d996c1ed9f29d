#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <random>
#include <stdexcept>
#include <vector>

namespace campo {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// State in S (subset of R^{d_s}), plain coordinate vector.
using StateVec = Eigen::VectorXd;

/// Action: a control vector plus the duration it is exerted for.
struct ActionVec {
    Vec control;
    double duration{1.0};

    ActionVec() = default;
    ActionVec(Vec u, double dt) : control(std::move(u)), duration(dt) {}

    [[nodiscard]] Eigen::Index control_dim() const { return control.size(); }

    /// Flatten to [u_1, ..., u_{d_u}, dt], the layout used by datasets,
    /// action-space metrics, and GP kernels.
    [[nodiscard]] Vec flatten() const {
        Vec out(control.size() + 1);
        out.head(control.size()) = control;
        out[control.size()] = duration;
        return out;
    }

    static ActionVec from_flat(const Vec& flat) {
        if (flat.size() < 2) throw std::invalid_argument("flattened action needs >= 2 entries");
        return ActionVec(flat.head(flat.size() - 1), flat[flat.size() - 1]);
    }

    friend bool operator==(const ActionVec& a, const ActionVec& b) {
        return a.duration == b.duration && a.control.size() == b.control.size() &&
               a.control == b.control;
    }
};

/// Box-bounded action space A = U x [t_min, t_max].
struct ActionSpace {
    Vec control_min;
    Vec control_max;
    double t_min{1.0};
    double t_max{1.0};

    ActionSpace() = default;
    ActionSpace(Vec lo, Vec hi, double tmin, double tmax)
        : control_min(std::move(lo)), control_max(std::move(hi)), t_min(tmin), t_max(tmax) {
        if (control_min.size() != control_max.size())
            throw std::invalid_argument("control bound dimension mismatch");
        if (!(t_min > 0.0) || t_min > t_max)
            throw std::invalid_argument("require 0 < t_min <= t_max");
    }

    [[nodiscard]] Eigen::Index control_dim() const { return control_min.size(); }
    [[nodiscard]] Eigen::Index dim() const { return control_min.size() + 1; }

    [[nodiscard]] ActionVec clamp(const ActionVec& a) const {
        ActionVec out = a;
        out.control = out.control.cwiseMax(control_min).cwiseMin(control_max);
        out.duration = std::clamp(out.duration, t_min, t_max);
        return out;
    }

    [[nodiscard]] bool contains(const ActionVec& a) const {
        return (a.control.array() >= control_min.array()).all() &&
               (a.control.array() <= control_max.array()).all() &&
               a.duration >= t_min && a.duration <= t_max;
    }

    template <class Rng>
    [[nodiscard]] ActionVec sample_uniform(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        Vec u(control_dim());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            u[i] = control_min[i] + unit(rng) * (control_max[i] - control_min[i]);
        double dt = t_min + unit(rng) * (t_max - t_min);
        return ActionVec(std::move(u), dt);
    }

    /// Map a point in the unit cube [0,1]^{d_u+1} into A.
    [[nodiscard]] ActionVec from_unit_cube(const Vec& unit) const {
        if (unit.size() != dim()) throw std::invalid_argument("unit point dimension mismatch");
        Vec u(control_dim());
        for (Eigen::Index i = 0; i < u.size(); ++i)
            u[i] = control_min[i] + unit[i] * (control_max[i] - control_min[i]);
        double dt = t_min + unit[control_dim()] * (t_max - t_min);
        return ActionVec(std::move(u), dt);
    }
};

/// Reward parameters; goal_reward > 0 > action_cost > obstacle_cost.
struct RewardSpec {
    double action_cost{-1.0};
    double obstacle_cost{-10.0};
    double goal_reward{100.0};
    double gamma{0.99};

    RewardSpec() = default;
    RewardSpec(double action, double obstacle, double goal, double g)
        : action_cost(action), obstacle_cost(obstacle), goal_reward(goal), gamma(g) {
        validate();
    }

    void validate() const {
        if (!(goal_reward > 0.0 && 0.0 > action_cost && action_cost > obstacle_cost))
            throw std::invalid_argument("require goal_reward > 0 > action_cost > obstacle_cost");
        if (!(gamma > 0.0 && gamma < 1.0))
            throw std::invalid_argument("require 0 < gamma < 1");
    }

    /// Discount over an action of the given duration.
    [[nodiscard]] double discount(double duration) const { return std::pow(gamma, duration); }
};

/// One training sample: action taken in free space and resulting displacement.
struct DatasetRecord {
    ActionVec action;
    Vec delta;
};

/// Euclidean metric on states.
inline double state_distance(const StateVec& s1, const StateVec& s2) {
    if (s1.size() != s2.size()) throw std::invalid_argument("state dimension mismatch");
    return (s1 - s2).norm();
}

/// Metric on actions: Euclidean on (u, dt / t_max). Exposed for tests; the
/// planner itself never uses it.
inline double action_metric(const ActionVec& a1, const ActionVec& a2, double t_max) {
    if (a1.control.size() != a2.control.size())
        throw std::invalid_argument("action dimension mismatch");
    double d2 = (a1.control - a2.control).squaredNorm();
    double dt = (a1.duration - a2.duration) / t_max;
    return std::sqrt(d2 + dt * dt);
}

}  // namespace campo
