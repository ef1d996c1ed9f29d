#pragma once

#include <algorithm>
#include <cstdint>
#include <memory>
#include <mutex>
#include <numeric>
#include <unordered_map>
#include <vector>

#include "campo/core/dataset.hpp"
#include "campo/density/gmm.hpp"

namespace campo {

/// Parameters of one local-model lookup.
struct LocalModelQuery {
    ActionVec action;
    int neighbor_count{200};
    int k_max{4};
};

/// Displacements of the M dataset records whose actions are closest to `a`
/// in 1-norm; ties broken by dataset index order.
inline std::vector<Vec> nearest_action_subset(const Dataset& data, const ActionVec& a, int m) {
    if (data.empty()) throw std::invalid_argument("nearest_action_subset: empty dataset");
    if (m < 1 || static_cast<std::size_t>(m) > data.size())
        throw std::invalid_argument("nearest_action_subset: neighbor count out of range");

    const Vec qa = a.flatten();
    std::vector<std::pair<double, std::size_t>> dist(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) {
        const auto& rec = data.records[i];
        double d = (rec.action.control - qa.head(rec.action.control.size())).lpNorm<1>() +
                   std::abs(rec.action.duration - qa[qa.size() - 1]);
        dist[i] = {d, i};
    }
    auto mid = dist.begin() + m;
    std::nth_element(dist.begin(), mid - 1, dist.end());
    std::sort(dist.begin(), mid,
              [](const auto& x, const auto& y) { return x.second < y.second; });

    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(m));
    for (auto it = dist.begin(); it != mid; ++it) out.push_back(data.records[it->second].delta);
    return out;
}

/// Memory-based transition density: each action query fits (and memoizes) a
/// Gaussian mixture over the displacements of its nearest dataset actions.
/// Thread-safe; duplicate fits for the same key are benign because fits are
/// deterministic.
class LocalDensityModel {
public:
    LocalDensityModel(Dataset dataset, int neighbor_count, int k_max, std::uint64_t seed,
                      int forced_k = 0)
        : data_(std::move(dataset)),
          neighbors_(std::min<int>(neighbor_count, static_cast<int>(data_.size()))),
          k_max_(k_max),
          forced_k_(forced_k),
          seed_(seed) {
        if (data_.empty()) throw std::invalid_argument("local density model needs a dataset");
        if (k_max_ < 1) throw std::invalid_argument("k_max must be >= 1");
    }

    [[nodiscard]] const Dataset& dataset() const { return data_; }
    [[nodiscard]] int neighbor_count() const { return neighbors_; }
    [[nodiscard]] int forced_k() const { return forced_k_; }

    /// Mixture over displacements for the given action.
    [[nodiscard]] std::shared_ptr<const GaussianMixture> query(const ActionVec& a) const {
        const Key key = quantize(a);
        {
            std::lock_guard<std::mutex> lock(mutex_);
            auto it = cache_.find(key);
            if (it != cache_.end()) {
                ++hits_;
                return it->second;
            }
        }
        auto pts = nearest_action_subset(data_, a, neighbors_);
        Mat X = detail::points_to_matrix(pts);
        auto fit = std::make_shared<GaussianMixture>(
            forced_k_ > 0 ? fit_gmm_em(X, forced_k_, seed_) : select_k_bic(X, k_max_, seed_));
        {
            std::lock_guard<std::mutex> lock(mutex_);
            cache_[key] = fit;  // last writer wins; fits are identical
            ++misses_;
        }
        return fit;
    }

    [[nodiscard]] std::size_t cache_hits() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return hits_;
    }
    [[nodiscard]] std::size_t fits_performed() const {
        std::lock_guard<std::mutex> lock(mutex_);
        return misses_;
    }

private:
    using Key = std::vector<std::int64_t>;

    struct KeyHash {
        std::size_t operator()(const Key& k) const {
            std::size_t h = 14695981039346656037ull;
            for (auto v : k) {
                h ^= static_cast<std::size_t>(v);
                h *= 1099511628211ull;
            }
            return h;
        }
    };

    static Key quantize(const ActionVec& a) {
        constexpr double kStep = 1e-9;
        Key key;
        key.reserve(static_cast<std::size_t>(a.control.size()) + 1);
        for (Eigen::Index i = 0; i < a.control.size(); ++i)
            key.push_back(static_cast<std::int64_t>(std::llround(a.control[i] / kStep)));
        key.push_back(static_cast<std::int64_t>(std::llround(a.duration / kStep)));
        return key;
    }

    Dataset data_;
    int neighbors_;
    int k_max_;
    int forced_k_;
    std::uint64_t seed_;
    mutable std::mutex mutex_;
    mutable std::unordered_map<Key, std::shared_ptr<const GaussianMixture>, KeyHash> cache_;
    mutable std::size_t hits_{0};
    mutable std::size_t misses_{0};
};

}  // namespace campo
