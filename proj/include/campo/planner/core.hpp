#pragma once

#include <cstdint>
#include <functional>
#include <future>
#include <optional>
#include <random>
#include <vector>

#include "campo/bo/select.hpp"
#include "campo/core/types.hpp"
#include "campo/transition/discrete.hpp"

namespace campo {

struct PlannerStats {
    std::size_t q_calls{0};
    std::size_t transition_cache_hits{0};
    std::size_t transitions_computed{0};
    std::size_t selector_evaluations{0};
    std::size_t backups{0};
    std::size_t optimistic_shortcuts{0};
    std::size_t empty_support_fallbacks{0};
    std::size_t value_clamps{0};  // backups whose raw max exceeded the stored value
    std::size_t bound_lifts{0};
    std::size_t execute_fallbacks{0};
    int trials_run{0};
    std::vector<double> v0_per_round;

    [[nodiscard]] double cache_hit_rate() const {
        auto total = transition_cache_hits + transitions_computed;
        return total == 0 ? 0.0 : static_cast<double>(transition_cache_hits) /
                                      static_cast<double>(total);
    }
};

/// Cached result of the last full action optimization at a state: the best
/// action, its value, and the successor values it was computed against.
struct OptimisticEntry {
    ActionVec action;
    double q{0.0};
    std::vector<std::pair<int, double>> snapshot;  // (successor index, V at cache time)
};

/// Mutable planning state over a fixed set of discrete states. Terminal
/// (goal) states keep V = 0; their payoff enters through the reward.
struct PlanState {
    Vec v;
    Vec h_u;
    std::vector<std::uint8_t> terminal;
    std::vector<std::optional<ActionVec>> policy;
    std::vector<std::optional<OptimisticEntry>> optimistic;
    std::vector<std::uint8_t> visited;
    PlannerStats stats;
    double trial_max_delta{0.0};

    PlanState() = default;
    PlanState(Vec upper_bounds, std::vector<std::uint8_t> terminal_flags)
        : h_u(std::move(upper_bounds)), terminal(std::move(terminal_flags)) {
        const auto n = static_cast<std::size_t>(h_u.size());
        if (terminal.size() != n) throw std::invalid_argument("terminal flag size mismatch");
        policy.resize(n);
        optimistic.resize(n);
        visited.assign(n, 0);
        reset_values();
    }

    [[nodiscard]] int size() const { return static_cast<int>(h_u.size()); }
    [[nodiscard]] bool is_terminal(int i) const {
        return terminal[static_cast<std::size_t>(i)] != 0;
    }

    /// Initialize values at the upper bound (terminals at 0).
    void reset_values() {
        v = h_u;
        for (int i = 0; i < size(); ++i)
            if (is_terminal(i)) v[i] = 0.0;
    }

    [[nodiscard]] int visited_count() const {
        int c = 0;
        for (auto f : visited) c += f;
        return c;
    }

    /// Apply a backup result. Values are monotone non-increasing and capped
    /// at h_u: a raw maximum above the stored value is clamped (and counted),
    /// which keeps the upper-bound invariant under subset action selection.
    void set_value(int i, double backup_value, ActionVec best_action) {
        double old_v = v[i];
        double new_v = backup_value;
        if (new_v > old_v) {
            new_v = old_v;
            ++stats.value_clamps;
        }
        trial_max_delta = std::max(trial_max_delta, std::abs(new_v - old_v));
        v[i] = new_v;
        policy[static_cast<std::size_t>(i)] = std::move(best_action);
    }
};

/// One-step lookahead value of (s, a) under the current value table. Pure in
/// the value table; callers account for statistics.
template <class Provider>
double q_value(const PlanState& plan, Provider& provider, const RewardSpec& spec, int s_idx,
               const ActionVec& a) {
    auto tr = provider.transition(s_idx, a);
    double disc = spec.discount(a.duration);
    double q = 0.0;
    for (std::size_t k = 0; k < tr->support.size(); ++k) {
        double p = tr->probs[static_cast<Eigen::Index>(k)];
        if (p == 0.0) continue;
        int idx = tr->support[k];
        if (idx == kObstacleState) {
            q += p * spec.obstacle_cost;
        } else if (plan.is_terminal(idx)) {
            q += p * spec.goal_reward;
        } else {
            q += p * (spec.action_cost + disc * plan.v[idx]);
        }
    }
    return q;
}

enum class SelectorKind { Sequential, Batch, Random };

struct SelectorConfig {
    SelectorKind kind{SelectorKind::Batch};
    int rounds{10};
    int batch_size{8};
    double lambda{1.0};
    KernelSpec kernel;
    bool parallel_batch{true};

    /// Total evaluations per optimization. The random baseline draws the same
    /// budget as the batch selector so comparisons stay budget-matched.
    [[nodiscard]] int budget() const {
        return kind == SelectorKind::Sequential ? rounds : rounds * batch_size;
    }
};

namespace detail {

template <class Provider>
SelectionResult run_selector(PlanState& plan, Provider& provider, const RewardSpec& spec,
                             const std::vector<ActionVec>& pool, const SelectorConfig& sel,
                             int s_idx, std::mt19937_64& rng) {
    AcquisitionContext ctx;
    ctx.posterior = GpPosterior(sel.kernel);
    ctx.h_u = plan.h_u[s_idx];
    ctx.candidates = pool;
    ctx.lambda = sel.lambda;

    const PlanState& plan_view = plan;
    auto evaluate = [&](const ActionVec& a) {
        ++plan.stats.q_calls;
        ++plan.stats.selector_evaluations;
        return q_value(plan_view, provider, spec, s_idx, a);
    };

    switch (sel.kind) {
        case SelectorKind::Sequential:
            return select_sequential(ctx, evaluate, sel.rounds);
        case SelectorKind::Random:
            return select_random(ctx, evaluate, sel.budget(), rng);
        case SelectorKind::Batch: {
            auto evaluate_batch = [&](const std::vector<ActionVec>& batch) {
                std::vector<double> ys(batch.size());
                if (sel.parallel_batch && batch.size() > 1) {
                    // Batch members are independent and the value table is
                    // read-only here, so the evaluations may fan out.
                    std::vector<std::future<double>> futures;
                    futures.reserve(batch.size());
                    for (const auto& a : batch)
                        futures.push_back(
                            std::async(std::launch::async, [&plan_view, &provider, &spec, s_idx,
                                                            &a] {
                                return q_value(plan_view, provider, spec, s_idx, a);
                            }));
                    for (std::size_t i = 0; i < futures.size(); ++i) ys[i] = futures[i].get();
                } else {
                    for (std::size_t i = 0; i < batch.size(); ++i)
                        ys[i] = q_value(plan_view, provider, spec, s_idx, batch[i]);
                }
                plan.stats.q_calls += batch.size();
                plan.stats.selector_evaluations += batch.size();
                return ys;
            };
            return select_batch(ctx, evaluate_batch, sel.rounds, sel.batch_size);
        }
    }
    throw std::logic_error("unknown selector kind");
}

}  // namespace detail

/// Bellman maximization at a state. Returns the cached optimistic entry when
/// every successor value it was computed against is unchanged; otherwise runs
/// the configured selector and refreshes the cache.
template <class Provider>
std::pair<ActionVec, double> bellman_backup(PlanState& plan, Provider& provider,
                                            const RewardSpec& spec,
                                            const std::vector<ActionVec>& pool,
                                            const SelectorConfig& sel, int s_idx,
                                            std::mt19937_64& rng) {
    ++plan.stats.backups;
    auto& entry = plan.optimistic[static_cast<std::size_t>(s_idx)];
    if (entry) {
        bool valid = true;
        for (const auto& [idx, value] : entry->snapshot) {
            if (plan.v[idx] != value) {
                valid = false;
                break;
            }
        }
        if (valid) {
            ++plan.stats.optimistic_shortcuts;
            ++plan.stats.q_calls;
            double q = q_value(plan, provider, spec, s_idx, entry->action);
            return {entry->action, q};
        }
    }

    SelectionResult result = detail::run_selector(plan, provider, spec, pool, sel, s_idx, rng);
    plan.stats.bound_lifts += static_cast<std::size_t>(result.bound_lifts);

    OptimisticEntry fresh;
    fresh.action = result.best_action;
    fresh.q = result.best_value;
    auto tr = provider.transition(s_idx, result.best_action);
    for (std::size_t k = 0; k < tr->support.size(); ++k) {
        int idx = tr->support[k];
        if (idx == kObstacleState || plan.is_terminal(idx)) continue;  // fixed values
        fresh.snapshot.emplace_back(idx, plan.v[idx]);
    }
    entry = std::move(fresh);
    return {result.best_action, result.best_value};
}

inline constexpr int kTrialDepthCap = 200;

/// One recursive trial from s_idx: optimize, sample a successor, recurse,
/// re-optimize, and write the value. Stops on terminals, s_obs, states
/// already on the trial stack (cycles), and the depth cap.
template <class Provider>
void trial_recurse(PlanState& plan, Provider& provider, const RewardSpec& spec,
                   const std::function<const std::vector<ActionVec>&(int)>& pool_for,
                   const SelectorConfig& sel, int s_idx, int depth, std::mt19937_64& rng,
                   std::vector<std::uint8_t>& on_stack) {
    if (s_idx == kObstacleState || plan.is_terminal(s_idx)) return;
    if (on_stack[static_cast<std::size_t>(s_idx)]) return;
    on_stack[static_cast<std::size_t>(s_idx)] = 1;
    plan.visited[static_cast<std::size_t>(s_idx)] = 1;

    const auto& pool = pool_for(s_idx);
    auto [pre_action, pre_q] = bellman_backup(plan, provider, spec, pool, sel, s_idx, rng);
    (void)pre_q;

    if (depth < kTrialDepthCap) {
        auto tr = provider.transition(s_idx, pre_action);
        int next = tr->sample(rng);
        trial_recurse(plan, provider, spec, pool_for, sel, next, depth + 1, rng, on_stack);
    }

    auto [post_action, post_q] = bellman_backup(plan, provider, spec, pool, sel, s_idx, rng);
    plan.set_value(s_idx, post_q, std::move(post_action));
    on_stack[static_cast<std::size_t>(s_idx)] = 0;
}

struct RtdpOptions {
    int max_trials{1000};
    double tol{1e-3};
    int quiet_trials{5};
};

/// Asynchronous value iteration along trials from the start state until the
/// per-trial value change stays below tol for quiet_trials consecutive
/// trials. Values are (re)initialized at the upper bound.
template <class Provider>
void rtdp(PlanState& plan, Provider& provider, const RewardSpec& spec,
          const std::function<const std::vector<ActionVec>&(int)>& pool_for,
          const SelectorConfig& sel, int s0_idx, const RtdpOptions& opts, std::mt19937_64& rng) {
    plan.reset_values();
    plan.stats.trials_run = 0;
    std::vector<std::uint8_t> on_stack(static_cast<std::size_t>(plan.size()), 0);
    int quiet = 0;
    for (int trial = 0; trial < opts.max_trials; ++trial) {
        plan.trial_max_delta = 0.0;
        trial_recurse(plan, provider, spec, pool_for, sel, s0_idx, 0, rng, on_stack);
        ++plan.stats.trials_run;
        if (plan.trial_max_delta < opts.tol) {
            if (++quiet >= opts.quiet_trials) break;
        } else {
            quiet = 0;
        }
    }
}

}  // namespace campo
