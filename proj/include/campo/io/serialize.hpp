#pragma once

#include <fstream>
#include <string>

#include <json.hpp>

#include "campo/io/config.hpp"

namespace campo {

inline constexpr int kSchemaVersion = 1;

inline json stats_to_json(const PlannerStats& stats, int n_states, int visited,
                          const std::vector<int>& actions_per_visited) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["visited_states"] = visited;
    j["sampled_states"] = n_states;
    j["visited_fraction"] = n_states > 0 ? static_cast<double>(visited) / n_states : 0.0;
    j["q_calls"] = stats.q_calls;
    j["selector_evaluations"] = stats.selector_evaluations;
    j["backups"] = stats.backups;
    j["optimistic_shortcuts"] = stats.optimistic_shortcuts;
    j["transitions_computed"] = stats.transitions_computed;
    j["transition_cache_hits"] = stats.transition_cache_hits;
    j["cache_hit_rate"] = stats.cache_hit_rate();
    j["empty_support_fallbacks"] = stats.empty_support_fallbacks;
    j["value_clamps"] = stats.value_clamps;
    j["bound_lifts"] = stats.bound_lifts;
    j["execute_fallbacks"] = stats.execute_fallbacks;
    j["trials_run"] = stats.trials_run;
    j["v0_per_round"] = stats.v0_per_round;
    j["actions_evaluated_histogram"] = actions_per_visited;
    double mean = 0.0;
    for (int c : actions_per_visited) mean += c;
    j["mean_actions_per_visited_state"] =
        actions_per_visited.empty() ? 0.0 : mean / static_cast<double>(actions_per_visited.size());
    return j;
}

inline json planner_to_json(BoidpPlanner& planner, const std::string& domain) {
    const auto& states = planner.states();
    const auto& plan = planner.plan_state();
    json j;
    j["schema_version"] = kSchemaVersion;
    j["domain"] = domain;
    j["delta_max"] = planner.delta_max();

    json coords = json::array();
    json boundary = json::array();
    json goal = json::array();
    for (int i = 0; i < states.size(); ++i) {
        json c = json::array();
        for (Eigen::Index k = 0; k < states.dim(); ++k) c.push_back(states.state(i)[k]);
        coords.push_back(std::move(c));
        boundary.push_back(states.is_boundary(i) ? 1 : 0);
        goal.push_back(states.is_goal(i) ? 1 : 0);
    }
    j["states"] = std::move(coords);
    j["boundary"] = std::move(boundary);
    j["goal"] = std::move(goal);

    j["v"] = std::vector<double>(plan.v.data(), plan.v.data() + plan.v.size());
    j["h_u"] = std::vector<double>(plan.h_u.data(), plan.h_u.data() + plan.h_u.size());

    json policy = json::array();
    for (int i = 0; i < states.size(); ++i) {
        const auto& p = plan.policy[static_cast<std::size_t>(i)];
        if (!p) continue;
        json entry;
        entry["state"] = i;
        entry["control"] = std::vector<double>(p->control.data(),
                                               p->control.data() + p->control.size());
        entry["duration"] = p->duration;
        policy.push_back(std::move(entry));
    }
    j["policy"] = std::move(policy);

    std::vector<int> actions_per_visited;
    for (int i = 0; i < states.size(); ++i)
        if (plan.visited[static_cast<std::size_t>(i)])
            actions_per_visited.push_back(planner.cache().distinct_actions(i));
    j["stats"] = stats_to_json(plan.stats, states.size(), plan.visited_count(),
                               actions_per_visited);
    return j;
}

/// Deserialized policy artifact, enough to execute and evaluate.
struct PolicyFile {
    std::string domain;
    SampledStateSet states;
    PlanState plan;
    double delta_max{1.0};
};

inline PolicyFile parse_policy_file(const json& j) {
    PolicyFile out;
    out.domain = j.at("domain").get<std::string>();
    out.delta_max = j.value("delta_max", 1.0);

    const auto& coords = j.at("states");
    const auto& boundary = j.at("boundary");
    const auto& goal = j.at("goal");
    for (std::size_t i = 0; i < coords.size(); ++i) {
        Vec s = detail::json_to_vec(coords[i], "policy.states");
        out.states.add_state(std::move(s), boundary[i].get<int>() != 0, goal[i].get<int>() != 0,
                             -1, ActionVec{});
    }

    const auto& h_u = j.at("h_u");
    const auto& v = j.at("v");
    Vec h(static_cast<Eigen::Index>(h_u.size()));
    for (std::size_t i = 0; i < h_u.size(); ++i) h[static_cast<Eigen::Index>(i)] = h_u[i].get<double>();
    std::vector<std::uint8_t> terminal(coords.size(), 0);
    for (std::size_t i = 0; i < coords.size(); ++i)
        terminal[i] = goal[i].get<int>() != 0 ? 1 : 0;
    out.plan = PlanState(std::move(h), std::move(terminal));
    for (std::size_t i = 0; i < v.size(); ++i)
        out.plan.v[static_cast<Eigen::Index>(i)] = v[i].get<double>();

    for (const auto& entry : j.at("policy")) {
        int idx = entry.at("state").get<int>();
        Vec u = detail::json_to_vec(entry.at("control"), "policy.control");
        out.plan.policy[static_cast<std::size_t>(idx)] =
            ActionVec(std::move(u), entry.at("duration").get<double>());
    }
    return out;
}

inline PolicyFile load_policy_file(const std::string& path) {
    return parse_policy_file(detail::load_json_file(path));
}

inline void write_json(const json& j, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << j.dump(2) << "\n";
}

inline json summary_to_json(const EvaluationSummary& s) {
    json j;
    j["schema_version"] = kSchemaVersion;
    j["n_rollouts"] = s.n_rollouts;
    j["mean_discounted_return"] = s.mean_return;
    j["success_rate"] = s.success_rate;
    j["collision_rate"] = s.collision_rate;
    j["timeout_rate"] = s.timeout_rate;
    j["mean_steps"] = s.mean_steps;
    return j;
}

inline void write_trajectories_csv(const std::vector<Rollout>& rollouts, Eigen::Index state_dim,
                                   Eigen::Index control_dim, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write file: " + path);
    out << "rollout,step";
    for (Eigen::Index i = 0; i < state_dim; ++i) out << ",s_" << (i + 1);
    for (Eigen::Index i = 0; i < control_dim; ++i) out << ",u_" << (i + 1);
    out << ",dt,reward,outcome\n";
    char buf[32];
    for (std::size_t r = 0; r < rollouts.size(); ++r) {
        const auto& rollout = rollouts[r];
        for (std::size_t t = 0; t < rollout.steps.size(); ++t) {
            const auto& step = rollout.steps[t];
            out << r << "," << t;
            for (Eigen::Index i = 0; i < state_dim; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", step.state[i]);
                out << "," << buf;
            }
            for (Eigen::Index i = 0; i < control_dim; ++i) {
                std::snprintf(buf, sizeof(buf), "%.17g", step.action.control[i]);
                out << "," << buf;
            }
            std::snprintf(buf, sizeof(buf), "%.17g", step.action.duration);
            out << "," << buf;
            std::snprintf(buf, sizeof(buf), "%.17g", step.reward);
            out << "," << buf << "," << to_string(rollout.outcome) << "\n";
        }
        if (rollout.steps.empty())
            out << r << ",0" << std::string(static_cast<std::size_t>(state_dim + control_dim + 1), ',')
                << "0," << to_string(rollout.outcome) << "\n";
    }
}

}  // namespace campo
