#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <stdexcept>
#include <variant>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

/// Axis-aligned box obstacle.
struct BoxObstacle {
    Vec min;
    Vec max;

    [[nodiscard]] bool contains(const StateVec& p, double inflation) const {
        return (p.array() >= min.array() - inflation).all() &&
               (p.array() <= max.array() + inflation).all();
    }

    template <class Rng>
    [[nodiscard]] StateVec sample_interior(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        StateVec p(min.size());
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p[i] = min[i] + unit(rng) * (max[i] - min[i]);
        return p;
    }
};

/// Ball obstacle (disc in the planar domains).
struct BallObstacle {
    Vec center;
    double radius{0.0};

    [[nodiscard]] bool contains(const StateVec& p, double inflation) const {
        return (p - center).norm() <= radius + inflation;
    }

    template <class Rng>
    [[nodiscard]] StateVec sample_interior(Rng& rng) const {
        // Rejection sampling in the bounding box; acceptance >= 50% in 2-D.
        std::uniform_real_distribution<double> unit(-1.0, 1.0);
        StateVec p(center.size());
        while (true) {
            for (Eigen::Index i = 0; i < p.size(); ++i) p[i] = unit(rng);
            if (p.squaredNorm() <= 1.0) return center + radius * p;
        }
    }
};

using Obstacle = std::variant<BoxObstacle, BallObstacle>;

inline bool obstacle_contains(const Obstacle& o, const StateVec& p, double inflation) {
    return std::visit([&](const auto& ob) { return ob.contains(p, inflation); }, o);
}

/// Goal region: a disc with non-zero radius.
struct GoalRegion {
    Vec center;
    double radius{0.0};

    [[nodiscard]] bool contains(const StateVec& p) const {
        return (p - center).norm() <= radius;
    }
};

/// Immutable description of the workspace: bounding box, obstacles, goal,
/// start state, and the object radius used to inflate collision tests.
struct WorldMap {
    Vec bounds_min;
    Vec bounds_max;
    std::vector<Obstacle> obstacles;
    GoalRegion goal;
    StateVec start;
    double collision_radius{0.0};

    void validate() const {
        if (bounds_min.size() != bounds_max.size() || bounds_min.size() == 0)
            throw std::invalid_argument("world bounds are malformed");
        if (!(goal.radius > 0.0)) throw std::invalid_argument("goal region must have positive radius");
        if (!in_bounds(goal.center)) throw std::invalid_argument("goal center outside world bounds");
        if (start.size() != bounds_min.size() || !in_bounds(start))
            throw std::invalid_argument("start state outside world bounds");
    }

    [[nodiscard]] Eigen::Index dim() const { return bounds_min.size(); }

    [[nodiscard]] bool in_bounds(const StateVec& p) const {
        return (p.array() >= bounds_min.array() + collision_radius).all() &&
               (p.array() <= bounds_max.array() - collision_radius).all();
    }

    [[nodiscard]] StateVec clamp(const StateVec& p) const {
        return p.cwiseMax(bounds_min + Vec::Constant(dim(), collision_radius))
                .cwiseMin(bounds_max - Vec::Constant(dim(), collision_radius));
    }

    /// Point is inside an (inflated) obstacle or outside the bounds.
    [[nodiscard]] bool point_collides(const StateVec& p) const {
        if (!in_bounds(p)) return true;
        for (const auto& o : obstacles)
            if (obstacle_contains(o, p, collision_radius)) return true;
        return false;
    }

    [[nodiscard]] bool in_free_space(const StateVec& p) const { return !point_collides(p); }

    template <class Rng>
    [[nodiscard]] StateVec sample_uniform(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        StateVec p(dim());
        for (Eigen::Index i = 0; i < p.size(); ++i)
            p[i] = bounds_min[i] + unit(rng) * (bounds_max[i] - bounds_min[i]);
        return p;
    }
};

inline constexpr int kSegmentSamples = 50;

/// Collision test for the transition s -> s_next under action a. The induced
/// path is approximated by the straight segment, sampled at 1/50 of its
/// length; the action itself does not enter the path model.
inline bool exists_collision(const StateVec& s, const ActionVec& /*a*/, const StateVec& s_next,
                             const WorldMap& map) {
    for (int k = 0; k <= kSegmentSamples; ++k) {
        double t = static_cast<double>(k) / kSegmentSamples;
        StateVec p = s + t * (s_next - s);
        if (map.point_collides(p)) return true;
    }
    return false;
}

/// Marker for the terminal collision pseudo-state s_obs.
struct ObstacleToken {};

/// Reward of a transition; exactly one of the three cases applies.
inline double reward(const StateVec& /*s*/, const ActionVec& /*a*/, ObstacleToken,
                     const RewardSpec& spec, const WorldMap& /*map*/) {
    return spec.obstacle_cost;
}

inline double reward(const StateVec& /*s*/, const ActionVec& /*a*/, const StateVec& s_next,
                     const RewardSpec& spec, const WorldMap& map) {
    if (map.goal.contains(s_next)) return spec.goal_reward;
    return spec.action_cost;
}

}  // namespace campo
