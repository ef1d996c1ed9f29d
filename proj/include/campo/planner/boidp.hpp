#pragma once

#include <atomic>
#include <cmath>
#include <memory>
#include <unordered_map>

#include "campo/bo/pool.hpp"
#include "campo/core/seed.hpp"
#include "campo/planner/core.hpp"
#include "campo/sampling/rrt.hpp"

namespace campo {

/// Per-state value upper bound from the shortest goal distance on the fully
/// connected state graph (which, under Euclidean edge costs, is the direct
/// distance to the nearest goal state). The distance converts to an
/// optimistic action count via the near-maximal single-action displacement
/// delta_max, then to a discounted value assuming minimal durations.
inline Vec compute_h_u(const SampledStateSet& set, const RewardSpec& spec, double delta_max,
                       double t_min) {
    if (!set.has_goal_state()) throw std::invalid_argument("compute_h_u: no goal state sampled");
    if (!(delta_max > 0.0)) throw std::invalid_argument("compute_h_u: delta_max must be positive");

    std::vector<int> goals;
    for (int i = 0; i < set.size(); ++i)
        if (set.is_goal(i)) goals.push_back(i);

    const double g_step = std::pow(spec.gamma, t_min);
    Vec h(set.size());
    for (int i = 0; i < set.size(); ++i) {
        double dist = std::numeric_limits<double>::infinity();
        for (int g : goals) dist = std::min(dist, state_distance(set.state(i), set.state(g)));
        auto n = static_cast<double>(dist <= 0.0 ? 0 : static_cast<long>(std::ceil(dist / delta_max)));
        if (n == 0.0) {
            h[i] = spec.goal_reward;
        } else {
            double gn = std::pow(g_step, n);
            h[i] = spec.action_cost * (1.0 - gn) / (1.0 - g_step) + gn * spec.goal_reward;
        }
    }
    return h;
}

/// Transition provider backed by the sampled state set and the lazy local
/// density model, with per-state action registries and a shared cache.
class SampledTransitionProvider {
public:
    SampledTransitionProvider(const SampledStateSet& states, const LocalDensityModel& density,
                              const WorldMap& map, TransitionCache& cache,
                              double epsilon = kDefaultDensityEpsilon)
        : states_(states), density_(density), map_(map), cache_(cache), epsilon_(epsilon) {
        cache_.bind_generation(states.generation());
        cache_.resize(states.size());
    }

    std::shared_ptr<const DiscreteTransition> transition(int s_idx, const ActionVec& a) {
        int id = cache_.register_action(s_idx, a);
        bool hit = false;
        auto tr = cache_lookup_or_compute(
            cache_, s_idx, id,
            [&] {
                return transition_model(states_.state(s_idx), a, states_, *density_.query(a),
                                        map_, epsilon_);
            },
            &hit);
        if (hit) {
            ++hits_;
        } else {
            ++computed_;
            if (tr->empty_support_fallback) ++fallbacks_;
        }
        return tr;
    }

    [[nodiscard]] const SampledStateSet& states() const { return states_; }
    [[nodiscard]] const WorldMap& map() const { return map_; }
    [[nodiscard]] TransitionCache& cache() { return cache_; }

    void merge_stats(PlannerStats& stats) const {
        stats.transition_cache_hits += hits_.load();
        stats.transitions_computed += computed_.load();
        stats.empty_support_fallbacks += fallbacks_.load();
    }
    void reset_counters() {
        hits_ = 0;
        computed_ = 0;
        fallbacks_ = 0;
    }

private:
    const SampledStateSet& states_;
    const LocalDensityModel& density_;
    const WorldMap& map_;
    TransitionCache& cache_;
    double epsilon_;
    std::atomic<std::size_t> hits_{0};
    std::atomic<std::size_t> computed_{0};
    std::atomic<std::size_t> fallbacks_{0};
};

struct PoolSpec {
    enum class Kind { Halton, Grid };
    Kind kind{Kind::Halton};
    int size{512};
};

/// Candidate pools per state: low-discrepancy points regenerated with the
/// state index as scramble seed, or one shared uniform grid.
class StatePoolCache {
public:
    StatePoolCache(ActionSpace space, PoolSpec pool, std::uint64_t seed)
        : space_(std::move(space)), pool_(pool), seed_(seed) {
        if (pool_.kind == PoolSpec::Kind::Grid) grid_ = grid_pool(space_, pool_.size);
    }

    const std::vector<ActionVec>& for_state(int s_idx) {
        if (pool_.kind == PoolSpec::Kind::Grid) return grid_;
        auto it = halton_.find(s_idx);
        if (it != halton_.end()) return it->second;
        auto [ins, ok] = halton_.emplace(
            s_idx, halton_pool(space_, pool_.size, mix_seed(seed_, static_cast<std::uint64_t>(s_idx))));
        (void)ok;
        return ins->second;
    }

    [[nodiscard]] const ActionSpace& space() const { return space_; }

private:
    ActionSpace space_;
    PoolSpec pool_;
    std::uint64_t seed_;
    std::vector<ActionVec> grid_;
    std::unordered_map<int, std::vector<ActionVec>> halton_;
};

struct BoidpOptions {
    int n_min{1000};
    int max_rounds{1};
    double round_tol{1e-2};
    SamplingParams sampling;
    RtdpOptions rtdp;
    SelectorConfig selector;
    PoolSpec pool;
    double epsilon{kDefaultDensityEpsilon};
    double delta_max_quantile{0.99};
    std::uint64_t seed{1};
};

/// The full planning loop: grow the sampled state set, rebuild the value
/// upper bound, run RTDP with the configured action selector, and repeat
/// until the start-state value settles or the round cap is reached.
class BoidpPlanner {
public:
    BoidpPlanner(WorldMap map, ActionSpace actions, RewardSpec spec, LocalDensityModel density,
                 BoidpOptions options)
        : map_(std::move(map)),
          actions_(actions),
          spec_(spec),
          density_(std::move(density)),
          options_(options),
          pools_(actions, options.pool, mix_seed(options.seed, 0xA001)),
          rng_(mix_seed(options.seed, 0xB002)),
          states_(map_.clamp(map_.start), map_.goal.contains(map_.start)) {
        map_.validate();
        spec_.validate();
        delta_max_ = density_.dataset().displacement_quantile(options_.delta_max_quantile);
        if (!(delta_max_ > 0.0)) delta_max_ = 1.0;
    }

    /// Run the outer loop. Returns the round-by-round start-state values.
    const std::vector<double>& plan() {
        PlannerStats accumulated;
        for (int round = 0; round < options_.max_rounds; ++round) {
            sample_states(options_.n_min, states_, map_, density_, actions_, rng_,
                          options_.sampling);
            rebuild_plan_state();

            SampledTransitionProvider provider(states_, density_, map_, cache_, options_.epsilon);
            auto pool_for = [this](int s) -> const std::vector<ActionVec>& {
                return pools_.for_state(s);
            };
            rtdp(plan_, provider, spec_, pool_for, options_.selector, 0, options_.rtdp, rng_);
            provider.merge_stats(plan_.stats);

            plan_.stats.v0_per_round = v0_history_;
            v0_history_.push_back(plan_.v[0]);
            plan_.stats.v0_per_round = v0_history_;

            if (round > 0) {
                double change = std::abs(v0_history_[static_cast<std::size_t>(round)] -
                                         v0_history_[static_cast<std::size_t>(round - 1)]);
                if (change < options_.round_tol) break;
            }
        }
        return v0_history_;
    }

    [[nodiscard]] const SampledStateSet& states() const { return states_; }
    [[nodiscard]] PlanState& plan_state() { return plan_; }
    [[nodiscard]] const PlanState& plan_state() const { return plan_; }
    [[nodiscard]] const WorldMap& map() const { return map_; }
    [[nodiscard]] const ActionSpace& action_space() const { return actions_; }
    [[nodiscard]] const RewardSpec& reward_spec() const { return spec_; }
    [[nodiscard]] const LocalDensityModel& density() const { return density_; }
    [[nodiscard]] TransitionCache& cache() { return cache_; }
    [[nodiscard]] double delta_max() const { return delta_max_; }
    [[nodiscard]] const BoidpOptions& options() const { return options_; }

    /// Provider bound to the current state set (for evaluation-time queries).
    [[nodiscard]] SampledTransitionProvider make_provider() {
        return SampledTransitionProvider(states_, density_, map_, cache_, options_.epsilon);
    }

    /// Mean number of distinct actions evaluated per visited state.
    [[nodiscard]] double mean_actions_per_visited_state() const {
        double total = 0.0;
        int visited = 0;
        for (int i = 0; i < states_.size(); ++i) {
            if (!plan_.visited[static_cast<std::size_t>(i)]) continue;
            ++visited;
            total += cache_.distinct_actions(i);
        }
        return visited == 0 ? 0.0 : total / visited;
    }

private:
    void rebuild_plan_state() {
        std::vector<std::uint8_t> terminal(static_cast<std::size_t>(states_.size()), 0);
        for (int i = 0; i < states_.size(); ++i)
            terminal[static_cast<std::size_t>(i)] = states_.is_goal(i) ? 1 : 0;
        Vec h = compute_h_u(states_, spec_, delta_max_, actions_.t_min);
        PlannerStats carried = plan_.stats;
        plan_ = PlanState(std::move(h), std::move(terminal));
        plan_.stats = carried;
        cache_.bind_generation(states_.generation());
        cache_.resize(states_.size());
    }

    WorldMap map_;
    ActionSpace actions_;
    RewardSpec spec_;
    LocalDensityModel density_;
    BoidpOptions options_;
    StatePoolCache pools_;
    std::mt19937_64 rng_;
    SampledStateSet states_;
    PlanState plan_;
    TransitionCache cache_;
    double delta_max_{1.0};
    std::vector<double> v0_history_;
};

}  // namespace campo
