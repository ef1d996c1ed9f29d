#pragma once

#include <random>
#include <vector>

#include "campo/bench/push.hpp"
#include "campo/bench/toy.hpp"
#include "campo/core/dataset.hpp"
#include "campo/core/seed.hpp"
#include "campo/planner/execute.hpp"

namespace campo {

/// Draw n (uniform action, simulated displacement) pairs from a domain.
template <class Domain, class Rng>
Dataset generate_dataset(const Domain& domain, int n, Rng& rng) {
    if (n < 1) throw std::invalid_argument("dataset size must be >= 1");
    ActionSpace space = Domain::action_space();
    Dataset data;
    for (int i = 0; i < n; ++i) {
        DatasetRecord rec;
        rec.action = space.sample_uniform(rng);
        rec.delta = domain.sample_displacement(rec.action, rng);
        data.push_back(std::move(rec));
    }
    return data;
}

struct EvaluationSummary {
    int n_rollouts{0};
    double mean_return{0.0};
    double success_rate{0.0};
    double collision_rate{0.0};
    double timeout_rate{0.0};
    double mean_steps{0.0};
};

/// Monte Carlo policy evaluation against the true simulator: independent
/// rollouts with per-rollout random streams derived from the base seed.
template <class Provider>
std::pair<EvaluationSummary, std::vector<Rollout>> evaluate_policy(
    PlanState& plan, Provider& provider, const SampledStateSet& states, const WorldMap& map,
    const RewardSpec& spec, const ActionSpace& actions, const Simulator& simulate, int n_rollouts,
    int max_steps, std::uint64_t base_seed) {
    if (n_rollouts < 1) throw std::invalid_argument("n_rollouts must be >= 1");

    std::vector<Rollout> rollouts;
    rollouts.reserve(static_cast<std::size_t>(n_rollouts));
    EvaluationSummary summary;
    summary.n_rollouts = n_rollouts;
    for (int i = 0; i < n_rollouts; ++i) {
        std::mt19937_64 rng(mix_seed(base_seed, static_cast<std::uint64_t>(i)));
        Rollout r = execute_policy(plan, provider, states, map, spec, actions, simulate, rng,
                                   max_steps);
        summary.mean_return += r.discounted_return;
        summary.mean_steps += static_cast<double>(r.steps.size());
        switch (r.outcome) {
            case RolloutOutcome::Success: summary.success_rate += 1.0; break;
            case RolloutOutcome::Collision: summary.collision_rate += 1.0; break;
            case RolloutOutcome::Timeout: summary.timeout_rate += 1.0; break;
        }
        rollouts.push_back(std::move(r));
    }
    summary.mean_return /= n_rollouts;
    summary.mean_steps /= n_rollouts;
    summary.success_rate /= n_rollouts;
    summary.collision_rate /= n_rollouts;
    summary.timeout_rate /= n_rollouts;
    return {summary, std::move(rollouts)};
}

}  // namespace campo
