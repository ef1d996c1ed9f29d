#pragma once

#include <functional>
#include <random>
#include <vector>

#include "campo/planner/core.hpp"
#include "campo/sampling/state_set.hpp"

namespace campo {

/// Ground-truth dynamics used during execution.
using Simulator = std::function<StateVec(const StateVec&, const ActionVec&, std::mt19937_64&)>;

enum class RolloutOutcome { Success, Collision, Timeout };

inline const char* to_string(RolloutOutcome o) {
    switch (o) {
        case RolloutOutcome::Success: return "success";
        case RolloutOutcome::Collision: return "collision";
        case RolloutOutcome::Timeout: return "timeout";
    }
    return "unknown";
}

struct TrajectoryStep {
    StateVec state;
    ActionVec action;
    double reward{0.0};
    StateVec next;
};

struct Rollout {
    std::vector<TrajectoryStep> steps;
    RolloutOutcome outcome{RolloutOutcome::Timeout};
    double discounted_return{0.0};
    int fallback_actions{0};
};

/// Closed-loop execution of the planned policy in the true simulator: at each
/// step the nearest sampled state's action is executed; where the policy is
/// undefined a greedy one-step choice over a fresh pool of random actions
/// stands in (counted in the planner statistics).
template <class Provider>
Rollout execute_policy(PlanState& plan, Provider& provider, const SampledStateSet& states,
                       const WorldMap& map, const RewardSpec& spec, const ActionSpace& actions,
                       const Simulator& simulate, std::mt19937_64& rng, int max_steps) {
    Rollout rollout;
    StateVec current = map.start;
    if (map.goal.contains(current)) {
        rollout.outcome = RolloutOutcome::Success;
        return rollout;
    }

    double discount_acc = 1.0;
    for (int step = 0; step < max_steps; ++step) {
        int idx = states.nearest(current);
        ActionVec a;
        if (plan.policy[static_cast<std::size_t>(idx)]) {
            a = *plan.policy[static_cast<std::size_t>(idx)];
        } else {
            // Greedy one-step fallback over 32 fresh random actions.
            double best_q = -std::numeric_limits<double>::infinity();
            for (int t = 0; t < 32; ++t) {
                ActionVec cand = actions.sample_uniform(rng);
                double q = q_value(plan, provider, spec, idx, cand);
                ++plan.stats.q_calls;
                if (q > best_q) {
                    best_q = q;
                    a = cand;
                }
            }
            ++plan.stats.execute_fallbacks;
            ++rollout.fallback_actions;
        }

        StateVec next = simulate(current, a, rng);
        bool collided = exists_collision(current, a, next, map);
        double r = collided ? reward(current, a, ObstacleToken{}, spec, map)
                            : reward(current, a, next, spec, map);
        rollout.discounted_return += discount_acc * r;
        discount_acc *= spec.discount(a.duration);
        rollout.steps.push_back({current, a, r, next});

        if (collided) {
            rollout.outcome = RolloutOutcome::Collision;
            return rollout;
        }
        if (map.goal.contains(next)) {
            rollout.outcome = RolloutOutcome::Success;
            return rollout;
        }
        current = std::move(next);
    }
    rollout.outcome = RolloutOutcome::Timeout;
    return rollout;
}

}  // namespace campo
