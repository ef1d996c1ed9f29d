#pragma once

#include <optional>
#include <random>
#include <stdexcept>

#include "campo/core/world.hpp"
#include "campo/density/local_model.hpp"
#include "campo/sampling/state_set.hpp"

namespace campo {

struct SamplingParams {
    int n_action_tries{10};
    std::uint64_t max_extension_attempts{1'000'000};
};

struct SamplingReport {
    int interior_added{0};
    int boundary_added{0};
    bool no_obstacle_warning{false};
};

/// One tree extension: try a handful of uniform actions from s_nearest, sample
/// a next state from the local density for each, and keep the collision-free
/// candidate closest to s_rand.
template <class Rng>
std::optional<std::pair<StateVec, ActionVec>> rrt_extend(const StateVec& s_nearest,
                                                         const StateVec& s_rand,
                                                         const LocalDensityModel& density,
                                                         const ActionSpace& actions,
                                                         const WorldMap& map, Rng& rng,
                                                         int n_action_tries) {
    if (n_action_tries < 1) throw std::invalid_argument("n_action_tries must be >= 1");
    std::optional<std::pair<StateVec, ActionVec>> best;
    double best_dist = std::numeric_limits<double>::infinity();
    for (int t = 0; t < n_action_tries; ++t) {
        ActionVec a = actions.sample_uniform(rng);
        auto mixture = density.query(a);
        StateVec candidate = s_nearest + mixture->sample(rng);
        if (exists_collision(s_nearest, a, candidate, map)) continue;
        double d = state_distance(candidate, s_rand);
        if (d < best_dist) {
            best_dist = d;
            best = std::make_pair(std::move(candidate), std::move(a));
        }
    }
    return best;
}

/// Add `count` interior states by tree extension toward uniform targets,
/// continuing past the count until the set contains a goal state.
template <class Rng>
int sample_interior_states(int count, SampledStateSet& set, const WorldMap& map,
                           const LocalDensityModel& density, const ActionSpace& actions, Rng& rng,
                           const SamplingParams& params = {}) {
    int added = 0;
    std::uint64_t attempts = 0;
    while (added < count || !set.has_goal_state()) {
        if (++attempts > params.max_extension_attempts)
            throw std::runtime_error("goal unreachable under sampling budget");
        StateVec s_rand = map.sample_uniform(rng);
        int near_idx = set.nearest(s_rand);
        auto ext = rrt_extend(set.state(near_idx), s_rand, density, actions, map, rng,
                              params.n_action_tries);
        if (!ext) continue;
        bool in_goal = map.goal.contains(ext->first);
        set.add_state(std::move(ext->first), false, in_goal, near_idx, std::move(ext->second));
        ++added;
    }
    return added;
}

/// Add `count` states on obstacle surfaces: sample a point inside a random
/// obstacle, walk toward it from the nearest sampled state, and bisect the
/// first colliding step down to 1e-6 of the surface.
template <class Rng>
int sample_boundary_states(int count, SampledStateSet& set, const WorldMap& map,
                           const LocalDensityModel& /*density*/, Rng& rng,
                           SamplingReport* report = nullptr) {
    if (map.obstacles.empty()) {
        if (report) report->no_obstacle_warning = true;
        return 0;
    }
    int added = 0;
    std::uniform_int_distribution<std::size_t> pick_obstacle(0, map.obstacles.size() - 1);
    std::uint64_t attempts = 0;
    while (added < count) {
        if (++attempts > 1000ull * static_cast<std::uint64_t>(count) + 1000ull) break;
        StateVec target = std::visit([&](const auto& ob) { return ob.sample_interior(rng); },
                                     map.obstacles[pick_obstacle(rng)]);
        const StateVec& from = set.state(set.nearest(target));
        if (map.point_collides(from)) continue;

        // March along the segment to bracket the first collision.
        double t_free = 0.0, t_hit = -1.0;
        for (int k = 1; k <= kSegmentSamples; ++k) {
            double t = static_cast<double>(k) / kSegmentSamples;
            if (map.point_collides(from + t * (target - from))) {
                t_hit = t;
                break;
            }
            t_free = t;
        }
        if (t_hit < 0.0) continue;  // inflated target may already touch `from`

        double seg_len = (target - from).norm();
        if (seg_len <= 0.0) continue;
        while ((t_hit - t_free) * seg_len > 1e-6) {
            double mid = 0.5 * (t_free + t_hit);
            if (map.point_collides(from + mid * (target - from)))
                t_hit = mid;
            else
                t_free = mid;
        }
        StateVec surface = from + t_free * (target - from);
        bool in_goal = map.goal.contains(surface);
        set.add_state(std::move(surface), true, in_goal, -1, ActionVec{});
        ++added;
    }
    return added;
}

/// Grow the set by at least n_min states: half interior (continuing until a
/// goal state exists), half on obstacle boundaries.
template <class Rng>
SamplingReport sample_states(int n_min, SampledStateSet& set, const WorldMap& map,
                             const LocalDensityModel& density, const ActionSpace& actions,
                             Rng& rng, const SamplingParams& params = {}) {
    if (n_min < 2) throw std::invalid_argument("n_min must be >= 2");
    if (set.empty()) throw std::invalid_argument("state set must contain the start state");
    SamplingReport report;
    int half = (n_min + 1) / 2;
    report.interior_added =
        sample_interior_states(half, set, map, density, actions, rng, params);
    report.boundary_added = sample_boundary_states(half, set, map, density, rng, &report);
    return report;
}

}  // namespace campo
