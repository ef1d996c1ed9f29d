#pragma once

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

inline constexpr int kBruteForceNearestLimit = 4096;

/// Ordered set of sampled states with goal/boundary flags, parent links from
/// the tree extension that produced each interior state, and exact nearest
/// lookup (linear scan while small, k-d tree beyond kBruteForceNearestLimit).
class SampledStateSet {
public:
    SampledStateSet() = default;

    explicit SampledStateSet(StateVec start, bool start_in_goal = false) {
        add_state(std::move(start), false, start_in_goal, -1, ActionVec{});
    }

    [[nodiscard]] int size() const { return static_cast<int>(states_.size()); }
    [[nodiscard]] bool empty() const { return states_.empty(); }
    [[nodiscard]] const StateVec& state(int i) const { return states_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] bool is_boundary(int i) const { return boundary_[static_cast<std::size_t>(i)] != 0; }
    [[nodiscard]] bool is_goal(int i) const { return goal_[static_cast<std::size_t>(i)] != 0; }
    [[nodiscard]] int parent(int i) const { return parents_[static_cast<std::size_t>(i)]; }
    [[nodiscard]] const ActionVec& parent_action(int i) const {
        return parent_actions_[static_cast<std::size_t>(i)];
    }
    [[nodiscard]] std::uint64_t generation() const { return generation_; }

    [[nodiscard]] bool has_goal_state() const { return goal_count_ > 0; }
    [[nodiscard]] int goal_count() const { return goal_count_; }
    [[nodiscard]] Eigen::Index dim() const {
        return states_.empty() ? 0 : states_[0].size();
    }

    int add_state(StateVec s, bool boundary, bool goal, int parent, ActionVec parent_action) {
        if (!states_.empty() && s.size() != dim())
            throw std::invalid_argument("sampled state dimension mismatch");
        states_.push_back(std::move(s));
        boundary_.push_back(boundary ? 1 : 0);
        goal_.push_back(goal ? 1 : 0);
        parents_.push_back(parent);
        parent_actions_.push_back(std::move(parent_action));
        if (goal) ++goal_count_;
        ++generation_;
        coords_dirty_ = true;
        tree_dirty_ = true;
        return size() - 1;
    }

    /// States as a d x n matrix (column per state), cached between growths.
    [[nodiscard]] const Mat& coords_matrix() const {
        if (coords_dirty_) {
            coords_.resize(dim(), size());
            for (int i = 0; i < size(); ++i)
                coords_.col(i) = states_[static_cast<std::size_t>(i)];
            coords_dirty_ = false;
        }
        return coords_;
    }

    /// Index of the state closest to `q`; ties resolve to the lowest index.
    [[nodiscard]] int nearest(const StateVec& q) const {
        if (states_.empty()) throw std::invalid_argument("nearest on empty state set");
        if (size() <= kBruteForceNearestLimit) return nearest_linear(q);
        if (tree_dirty_) build_tree();
        int best = 0;
        double best_sq = (states_[0] - q).squaredNorm();
        tree_query(root_, q, best, best_sq);
        return best;
    }

    void export_csv(const std::string& path) const {
        std::ofstream out(path);
        if (!out) throw std::runtime_error("cannot write state set file: " + path);
        out << "index";
        for (Eigen::Index i = 0; i < dim(); ++i) out << ",s_" << (i + 1);
        out << ",boundary,goal\n";
        char buf[32];
        for (int i = 0; i < size(); ++i) {
            out << i;
            for (Eigen::Index j = 0; j < dim(); ++j) {
                std::snprintf(buf, sizeof(buf), "%.17g", states_[static_cast<std::size_t>(i)][j]);
                out << "," << buf;
            }
            out << "," << (is_boundary(i) ? 1 : 0) << "," << (is_goal(i) ? 1 : 0) << "\n";
        }
    }

private:
    [[nodiscard]] int nearest_linear(const StateVec& q) const {
        int best = 0;
        double best_sq = std::numeric_limits<double>::infinity();
        for (int i = 0; i < size(); ++i) {
            double d = (states_[static_cast<std::size_t>(i)] - q).squaredNorm();
            if (d < best_sq) {
                best_sq = d;
                best = i;
            }
        }
        return best;
    }

    struct Node {
        int index{-1};
        int axis{0};
        int left{-1};
        int right{-1};
    };

    void build_tree() const {
        nodes_.clear();
        nodes_.reserve(states_.size());
        std::vector<int> idx(states_.size());
        std::iota(idx.begin(), idx.end(), 0);
        root_ = build_recursive(idx.begin(), idx.end(), 0);
        tree_dirty_ = false;
    }

    int build_recursive(std::vector<int>::iterator begin, std::vector<int>::iterator end,
                        int depth) const {
        if (begin == end) return -1;
        int axis = depth % static_cast<int>(dim());
        auto mid = begin + (end - begin) / 2;
        std::nth_element(begin, mid, end, [&](int a, int b) {
            double va = states_[static_cast<std::size_t>(a)][axis];
            double vb = states_[static_cast<std::size_t>(b)][axis];
            if (va != vb) return va < vb;
            return a < b;
        });
        int node_id = static_cast<int>(nodes_.size());
        nodes_.push_back(Node{*mid, axis, -1, -1});
        int left = build_recursive(begin, mid, depth + 1);
        int right = build_recursive(mid + 1, end, depth + 1);
        nodes_[static_cast<std::size_t>(node_id)].left = left;
        nodes_[static_cast<std::size_t>(node_id)].right = right;
        return node_id;
    }

    void tree_query(int node_id, const StateVec& q, int& best, double& best_sq) const {
        if (node_id < 0) return;
        const Node& node = nodes_[static_cast<std::size_t>(node_id)];
        double d = (states_[static_cast<std::size_t>(node.index)] - q).squaredNorm();
        if (d < best_sq || (d == best_sq && node.index < best)) {
            best_sq = d;
            best = node.index;
        }
        double diff = q[node.axis] - states_[static_cast<std::size_t>(node.index)][node.axis];
        int near = diff < 0 ? node.left : node.right;
        int far = diff < 0 ? node.right : node.left;
        tree_query(near, q, best, best_sq);
        // Visit the far side on exact ties too, so the lowest index wins.
        if (diff * diff <= best_sq) tree_query(far, q, best, best_sq);
    }

    std::vector<StateVec> states_;
    std::vector<std::uint8_t> boundary_;
    std::vector<std::uint8_t> goal_;
    std::vector<int> parents_;
    std::vector<ActionVec> parent_actions_;
    int goal_count_{0};
    std::uint64_t generation_{0};

    mutable Mat coords_;
    mutable bool coords_dirty_{true};
    mutable std::vector<Node> nodes_;
    mutable int root_{-1};
    mutable bool tree_dirty_{true};
};

/// Index of the nearest state (exposed as a free function to mirror the
/// planner's usage).
inline int nearest(const SampledStateSet& set, const StateVec& q) { return set.nearest(q); }

}  // namespace campo
