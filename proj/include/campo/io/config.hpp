#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <string>

#include <json.hpp>

#include "campo/bench/evaluate.hpp"
#include "campo/planner/boidp.hpp"

namespace campo {

using nlohmann::json;

/// Configuration problems (bad keys, missing files, invalid values).
struct ConfigError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

inline void require_keys(const json& j, const std::set<std::string>& allowed,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + " must be a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key()))
            throw ConfigError("unknown key '" + it.key() + "' in " + where);
    }
}

inline Vec json_to_vec(const json& j, const std::string& where) {
    if (!j.is_array() || j.empty()) throw ConfigError(where + " must be a non-empty array");
    Vec v(static_cast<Eigen::Index>(j.size()));
    for (std::size_t i = 0; i < j.size(); ++i) v[static_cast<Eigen::Index>(i)] = j[i].get<double>();
    return v;
}

inline json load_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot open file: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::parse_error& e) {
        throw ConfigError("JSON parse error in " + path + ": " + e.what());
    }
    return j;
}

}  // namespace detail

/// Parse a world map from its JSON form (keys: bounds, obstacles, goal,
/// start, collision_radius).
inline WorldMap parse_world_map(const json& j) {
    detail::require_keys(j, {"bounds", "obstacles", "goal", "start", "collision_radius"}, "map");
    WorldMap map;
    const auto& bounds = j.at("bounds");
    detail::require_keys(bounds, {"min", "max"}, "map.bounds");
    map.bounds_min = detail::json_to_vec(bounds.at("min"), "map.bounds.min");
    map.bounds_max = detail::json_to_vec(bounds.at("max"), "map.bounds.max");

    if (j.contains("obstacles")) {
        for (std::size_t i = 0; i < j.at("obstacles").size(); ++i) {
            const auto& o = j.at("obstacles")[i];
            std::string where = "map.obstacles[" + std::to_string(i) + "]";
            std::string type = o.at("type").get<std::string>();
            if (type == "rect") {
                detail::require_keys(o, {"type", "min", "max"}, where);
                map.obstacles.push_back(BoxObstacle{detail::json_to_vec(o.at("min"), where),
                                                    detail::json_to_vec(o.at("max"), where)});
            } else if (type == "circle") {
                detail::require_keys(o, {"type", "center", "radius"}, where);
                map.obstacles.push_back(BallObstacle{detail::json_to_vec(o.at("center"), where),
                                                     o.at("radius").get<double>()});
            } else {
                throw ConfigError(where + ": unknown obstacle type '" + type + "'");
            }
        }
    }

    const auto& goal = j.at("goal");
    detail::require_keys(goal, {"center", "radius"}, "map.goal");
    map.goal.center = detail::json_to_vec(goal.at("center"), "map.goal.center");
    map.goal.radius = goal.at("radius").get<double>();
    map.start = detail::json_to_vec(j.at("start"), "map.start");
    if (j.contains("collision_radius")) map.collision_radius = j.at("collision_radius").get<double>();

    try {
        map.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError(std::string("invalid map: ") + e.what());
    }
    return map;
}

inline WorldMap load_world_map(const std::string& path) {
    return parse_world_map(detail::load_json_file(path));
}

/// Everything one experiment needs: domain, map, dataset source, rewards,
/// sampling, selector, density, planner, and evaluation settings.
struct ExperimentConfig {
    std::string domain;  // "toy" or "push"
    std::string map_path;
    std::string dataset_path;  // empty means generate on the fly
    int dataset_generate_n{0};

    RewardSpec rewards;
    int n_min{1000};
    int max_rounds{1};
    double round_tol{1e-2};
    SamplingParams sampling;

    SelectorConfig selector;
    PoolSpec pool;

    int density_neighbors{200};
    int density_k_max{4};
    int density_force_k{0};

    RtdpOptions rtdp;
    double epsilon{kDefaultDensityEpsilon};

    int n_rollouts{500};
    int max_steps{500};

    std::uint64_t seed{1};

    json raw;  // parsed source, kept for compare-axis validation
};

inline ExperimentConfig parse_experiment_config(const json& j, const std::string& base_dir = "") {
    detail::require_keys(j,
                         {"schema_version", "domain", "map", "dataset", "rewards", "sampler",
                          "selector", "density", "planner", "evaluation", "seed"},
                         "config");
    ExperimentConfig cfg;
    cfg.raw = j;
    cfg.domain = j.at("domain").get<std::string>();
    if (cfg.domain != "toy" && cfg.domain != "push")
        throw ConfigError("config.domain must be 'toy' or 'push'");

    auto resolve = [&](const std::string& p) {
        if (base_dir.empty() || std::filesystem::path(p).is_absolute()) return p;
        return (std::filesystem::path(base_dir) / p).string();
    };
    cfg.map_path = resolve(j.at("map").get<std::string>());
    if (!std::filesystem::exists(cfg.map_path))
        throw ConfigError("map file does not exist: " + cfg.map_path);

    const auto& ds = j.at("dataset");
    detail::require_keys(ds, {"path", "generate"}, "config.dataset");
    if (ds.contains("path")) {
        cfg.dataset_path = resolve(ds.at("path").get<std::string>());
        if (!std::filesystem::exists(cfg.dataset_path))
            throw ConfigError("dataset file does not exist: " + cfg.dataset_path);
    } else if (ds.contains("generate")) {
        detail::require_keys(ds.at("generate"), {"n"}, "config.dataset.generate");
        cfg.dataset_generate_n = ds.at("generate").at("n").get<int>();
        if (cfg.dataset_generate_n < 1) throw ConfigError("dataset.generate.n must be >= 1");
    } else {
        throw ConfigError("config.dataset needs 'path' or 'generate'");
    }

    if (j.contains("rewards")) {
        const auto& r = j.at("rewards");
        detail::require_keys(r, {"action_cost", "obstacle_cost", "goal_reward", "gamma"},
                             "config.rewards");
        try {
            cfg.rewards = RewardSpec(r.value("action_cost", -1.0), r.value("obstacle_cost", -10.0),
                                     r.value("goal_reward", 100.0), r.value("gamma", 0.99));
        } catch (const std::invalid_argument& e) {
            throw ConfigError(std::string("invalid rewards: ") + e.what());
        }
    }

    if (j.contains("sampler")) {
        const auto& s = j.at("sampler");
        detail::require_keys(s, {"n_min", "rounds", "round_tol", "n_action_tries", "max_attempts"},
                             "config.sampler");
        cfg.n_min = s.value("n_min", cfg.n_min);
        cfg.max_rounds = s.value("rounds", cfg.max_rounds);
        cfg.round_tol = s.value("round_tol", cfg.round_tol);
        cfg.sampling.n_action_tries = s.value("n_action_tries", cfg.sampling.n_action_tries);
        cfg.sampling.max_extension_attempts =
            s.value("max_attempts", cfg.sampling.max_extension_attempts);
    }

    if (j.contains("selector")) {
        const auto& s = j.at("selector");
        detail::require_keys(s, {"type", "rounds", "batch_size", "lambda", "pool", "pool_size"},
                             "config.selector");
        std::string type = s.value("type", std::string("batch"));
        if (type == "sequential") cfg.selector.kind = SelectorKind::Sequential;
        else if (type == "batch") cfg.selector.kind = SelectorKind::Batch;
        else if (type == "random") cfg.selector.kind = SelectorKind::Random;
        else throw ConfigError("selector.type must be sequential|batch|random");
        cfg.selector.rounds = s.value("rounds", cfg.selector.rounds);
        cfg.selector.batch_size = s.value("batch_size", cfg.selector.batch_size);
        cfg.selector.lambda = s.value("lambda", cfg.selector.lambda);
        std::string pool = s.value("pool", std::string("halton"));
        if (pool == "halton") cfg.pool.kind = PoolSpec::Kind::Halton;
        else if (pool == "grid") cfg.pool.kind = PoolSpec::Kind::Grid;
        else throw ConfigError("selector.pool must be halton|grid");
        cfg.pool.size = s.value("pool_size", cfg.pool.size);
        if (cfg.pool.size < 1) throw ConfigError("selector.pool_size must be >= 1");
    }

    if (j.contains("density")) {
        const auto& d = j.at("density");
        detail::require_keys(d, {"neighbors", "k_max", "force_k"}, "config.density");
        cfg.density_neighbors = d.value("neighbors", cfg.density_neighbors);
        cfg.density_k_max = d.value("k_max", cfg.density_k_max);
        cfg.density_force_k = d.value("force_k", cfg.density_force_k);
        if (cfg.density_force_k < 0) throw ConfigError("density.force_k must be >= 0");
        if (cfg.density_k_max < 1) throw ConfigError("density.k_max must be >= 1");
    }

    if (j.contains("planner")) {
        const auto& p = j.at("planner");
        detail::require_keys(p, {"max_trials", "tol", "quiet_trials", "epsilon"}, "config.planner");
        cfg.rtdp.max_trials = p.value("max_trials", cfg.rtdp.max_trials);
        cfg.rtdp.tol = p.value("tol", cfg.rtdp.tol);
        cfg.rtdp.quiet_trials = p.value("quiet_trials", cfg.rtdp.quiet_trials);
        cfg.epsilon = p.value("epsilon", cfg.epsilon);
    }

    if (j.contains("evaluation")) {
        const auto& e = j.at("evaluation");
        detail::require_keys(e, {"n_rollouts", "max_steps"}, "config.evaluation");
        cfg.n_rollouts = e.value("n_rollouts", cfg.n_rollouts);
        cfg.max_steps = e.value("max_steps", cfg.max_steps);
    }

    cfg.seed = j.value("seed", cfg.seed);
    return cfg;
}

inline ExperimentConfig load_experiment_config(const std::string& path) {
    auto dir = std::filesystem::path(path).parent_path().string();
    return parse_experiment_config(detail::load_json_file(path), dir);
}

/// Runtime handle for a benchmark domain: action space, simulator, and
/// dataset generator.
struct DomainHandle {
    std::string name;
    ActionSpace space;
    Eigen::Index state_dim{2};
    Simulator simulate;
    std::function<Dataset(int, std::uint64_t)> generate;
};

inline DomainHandle make_domain(const std::string& name) {
    DomainHandle handle;
    handle.name = name;
    if (name == "toy") {
        auto domain = std::make_shared<ToyDomain>();
        handle.space = ToyDomain::action_space();
        handle.state_dim = ToyDomain::state_dim();
        handle.simulate = [domain](const StateVec& s, const ActionVec& a, std::mt19937_64& rng) {
            return domain->step(s, a, rng);
        };
        handle.generate = [domain](int n, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return generate_dataset(*domain, n, rng);
        };
    } else if (name == "push") {
        auto domain = std::make_shared<PushDomain>();
        handle.space = PushDomain::action_space();
        handle.state_dim = PushDomain::state_dim();
        handle.simulate = [domain](const StateVec& s, const ActionVec& a, std::mt19937_64& rng) {
            return domain->step(s, a, rng);
        };
        handle.generate = [domain](int n, std::uint64_t seed) {
            std::mt19937_64 rng(seed);
            return generate_dataset(*domain, n, rng);
        };
    } else {
        throw ConfigError("unknown domain: " + name);
    }
    return handle;
}

}  // namespace campo
