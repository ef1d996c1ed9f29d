#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <mutex>
#include <sstream>
#include <unordered_map>
#include <vector>

#include "campo/core/world.hpp"
#include "campo/density/local_model.hpp"
#include "campo/sampling/state_set.hpp"

namespace campo {

/// Reserved support token for the terminal collision pseudo-state.
inline constexpr int kObstacleState = -1;

/// Sparse next-state distribution over sampled states plus s_obs.
struct DiscreteTransition {
    std::vector<int> support;  // state indices; kObstacleState marks s_obs
    Vec probs;

    /// Fraction of pre-normalization density folded into s_obs by collisions;
    /// equals the normalized s_obs probability.
    double folded_obstacle_mass{0.0};
    /// Set when no sampled state exceeded the density threshold and all mass
    /// was deterministically assigned to the nearest state to the mean
    /// displacement.
    bool empty_support_fallback{false};

    [[nodiscard]] std::size_t size() const { return support.size(); }

    template <class Rng>
    [[nodiscard]] int sample(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double u = unit(rng);
        double acc = 0.0;
        for (std::size_t i = 0; i < support.size(); ++i) {
            acc += probs[static_cast<Eigen::Index>(i)];
            if (u <= acc) return support[i];
        }
        return support.back();
    }
};

/// Indices whose density exceeds epsilon, in index order.
inline std::vector<int> high_prob_next_states(const Vec& densities, double epsilon) {
    if (epsilon < 0.0) throw std::invalid_argument("epsilon must be nonnegative");
    std::vector<int> out;
    for (Eigen::Index i = 0; i < densities.size(); ++i)
        if (densities[i] > epsilon) out.push_back(static_cast<int>(i));
    return out;
}

inline constexpr double kDefaultDensityEpsilon = 1e-5;

/// Discrete transition for (s, a): threshold the local density over the
/// sampled states, fold the mass of colliding targets into s_obs, normalize.
/// Boundary states sit on obstacle surfaces and always count as colliding
/// targets. With no state above threshold, all mass goes to the state nearest
/// the mean displacement.
inline DiscreteTransition transition_model(const StateVec& s, const ActionVec& a,
                                           const SampledStateSet& states,
                                           const GaussianMixture& density, const WorldMap& map,
                                           double epsilon = kDefaultDensityEpsilon) {
    if (states.empty()) throw std::invalid_argument("transition_model: empty state set");

    const Mat& coords = states.coords_matrix();
    Mat displaced = coords.colwise() - s;
    Vec log_density(states.size());
    density.log_pdf_batch(displaced, log_density);
    Vec p = log_density.array().exp();
    if (!p.allFinite()) {
        std::ostringstream os;
        os << "non-finite transition density at s = [" << s.transpose() << "], a = ["
           << a.control.transpose() << " | dt=" << a.duration << "]";
        throw std::runtime_error(os.str());
    }

    std::vector<int> selected = high_prob_next_states(p, epsilon);
    DiscreteTransition out;
    if (selected.empty()) {
        StateVec target = s + density.mean();
        int idx = states.nearest(target);
        out.support = {idx};
        out.probs = Vec::Ones(1);
        out.empty_support_fallback = true;
        return out;
    }

    out.support = selected;
    out.support.push_back(kObstacleState);
    const auto n = static_cast<Eigen::Index>(selected.size());
    out.probs = Vec::Zero(n + 1);
    double obstacle_mass = 0.0;
    for (Eigen::Index i = 0; i < n; ++i) {
        int idx = selected[static_cast<std::size_t>(i)];
        double mass = p[idx];
        bool collides = states.is_boundary(idx) || exists_collision(s, a, states.state(idx), map);
        if (collides) {
            obstacle_mass += mass;
        } else {
            out.probs[i] = mass;
        }
    }
    out.probs[n] = obstacle_mass;
    double total = out.probs.sum();
    out.probs /= total;
    out.folded_obstacle_mass = obstacle_mass / total;
    return out;
}

/// Per-state registry of evaluated actions (stable sequential ids, exact
/// vector equality) plus cached discrete transitions. Safe for concurrent
/// lookups and inserts; recomputing the same key concurrently is benign.
class TransitionCache {
public:
    TransitionCache() = default;

    void bind_generation(std::uint64_t generation) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (generation != generation_) {
            entries_.clear();
            generation_ = generation;
        }
    }

    [[nodiscard]] std::uint64_t generation() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return generation_;
    }

    void resize(int n_states) {
        std::lock_guard<std::mutex> lock(mutex_);
        if (entries_.size() < static_cast<std::size_t>(n_states))
            entries_.resize(static_cast<std::size_t>(n_states));
    }

    /// Stable id of `a` at state `s_idx`, registering it on first sight.
    int register_action(int s_idx, const ActionVec& a) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& entry = entries_.at(static_cast<std::size_t>(s_idx));
        auto key = make_key(a);
        auto it = entry.ids.find(key);
        if (it != entry.ids.end()) return it->second;
        int id = static_cast<int>(entry.actions.size());
        entry.ids.emplace(std::move(key), id);
        entry.actions.push_back(a);
        entry.transitions.emplace_back(nullptr);
        return id;
    }

    [[nodiscard]] const ActionVec& action(int s_idx, int action_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        return entries_.at(static_cast<std::size_t>(s_idx))
            .actions.at(static_cast<std::size_t>(action_id));
    }

    [[nodiscard]] int distinct_actions(int s_idx) const {
        std::lock_guard<std::mutex> lock(mutex_);
        if (static_cast<std::size_t>(s_idx) >= entries_.size()) return 0;
        return static_cast<int>(entries_[static_cast<std::size_t>(s_idx)].actions.size());
    }

    [[nodiscard]] std::shared_ptr<const DiscreteTransition> find(int s_idx, int action_id) const {
        std::lock_guard<std::mutex> lock(mutex_);
        const auto& entry = entries_.at(static_cast<std::size_t>(s_idx));
        if (static_cast<std::size_t>(action_id) >= entry.transitions.size()) return nullptr;
        return entry.transitions[static_cast<std::size_t>(action_id)];
    }

    void insert(int s_idx, int action_id, std::shared_ptr<const DiscreteTransition> tr) {
        std::lock_guard<std::mutex> lock(mutex_);
        auto& entry = entries_.at(static_cast<std::size_t>(s_idx));
        entry.transitions.at(static_cast<std::size_t>(action_id)) = std::move(tr);
    }

private:
    struct Key {
        std::vector<double> values;
        bool operator==(const Key& other) const { return values == other.values; }
    };

    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = 14695981039346656037ull;
            for (double v : k.values) {
                std::uint64_t bits;
                std::memcpy(&bits, &v, sizeof(bits));
                h ^= static_cast<std::size_t>(bits);
                h *= 1099511628211ull;
            }
            return h;
        }
    };

    static Key make_key(const ActionVec& a) {
        Key key;
        key.values.reserve(static_cast<std::size_t>(a.control.size()) + 1);
        for (Eigen::Index i = 0; i < a.control.size(); ++i) key.values.push_back(a.control[i]);
        key.values.push_back(a.duration);
        return key;
    }

    struct StateEntry {
        std::unordered_map<Key, int, KeyHash> ids;
        std::vector<ActionVec> actions;
        std::vector<std::shared_ptr<const DiscreteTransition>> transitions;
    };

    mutable std::mutex mutex_;
    std::vector<StateEntry> entries_;
    std::uint64_t generation_{0};
};

/// Cached transition lookup: returns the stored distribution when present,
/// otherwise computes, inserts, and returns it. `was_hit` reports which path
/// was taken for cache statistics.
inline std::shared_ptr<const DiscreteTransition> cache_lookup_or_compute(
    TransitionCache& cache, int s_idx, int action_id,
    const std::function<DiscreteTransition()>& compute, bool* was_hit = nullptr) {
    if (auto found = cache.find(s_idx, action_id)) {
        if (was_hit) *was_hit = true;
        return found;
    }
    auto computed = std::make_shared<const DiscreteTransition>(compute());
    cache.insert(s_idx, action_id, computed);
    if (was_hit) *was_hit = false;
    return computed;
}

}  // namespace campo
