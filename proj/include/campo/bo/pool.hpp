#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

namespace detail {

inline double radical_inverse(std::uint64_t index, std::uint64_t base) {
    double result = 0.0;
    double f = 1.0 / static_cast<double>(base);
    while (index > 0) {
        result += f * static_cast<double>(index % base);
        index /= base;
        f /= static_cast<double>(base);
    }
    return result;
}

inline constexpr std::uint64_t kHaltonPrimes[] = {2, 3, 5, 7, 11, 13, 17, 19};

}  // namespace detail

/// Low-discrepancy candidate pool: Halton points with a seeded random shift
/// (Cranley-Patterson rotation), mapped into the action box.
inline std::vector<ActionVec> halton_pool(const ActionSpace& space, int size,
                                          std::uint64_t scramble_seed) {
    if (size < 1) throw std::invalid_argument("pool size must be >= 1");
    const Eigen::Index d = space.dim();
    if (d > static_cast<Eigen::Index>(std::size(detail::kHaltonPrimes)))
        throw std::invalid_argument("action dimension too large for Halton pool");

    std::mt19937_64 rng(scramble_seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    Vec shift(d);
    for (Eigen::Index i = 0; i < d; ++i) shift[i] = unit(rng);

    std::vector<ActionVec> pool;
    pool.reserve(static_cast<std::size_t>(size));
    Vec u(d);
    for (int idx = 0; idx < size; ++idx) {
        for (Eigen::Index i = 0; i < d; ++i) {
            double x = detail::radical_inverse(static_cast<std::uint64_t>(idx) + 1,
                                               detail::kHaltonPrimes[i]) +
                       shift[i];
            u[i] = x - std::floor(x);
        }
        pool.push_back(space.from_unit_cube(u));
    }
    return pool;
}

/// Uniformly discretized pool over a one-dimensional control space, duration
/// fixed at the minimum. Used by the benchmark with a fixed action duration.
inline std::vector<ActionVec> grid_pool(const ActionSpace& space, int size) {
    if (size < 1) throw std::invalid_argument("pool size must be >= 1");
    if (space.control_dim() != 1)
        throw std::invalid_argument("grid pool requires a 1-D control space");
    std::vector<ActionVec> pool;
    pool.reserve(static_cast<std::size_t>(size));
    const double lo = space.control_min[0];
    const double range = space.control_max[0] - space.control_min[0];
    for (int i = 0; i < size; ++i) {
        Vec u(1);
        u[0] = lo + range * static_cast<double>(i) / static_cast<double>(size);
        pool.emplace_back(std::move(u), space.t_min);
    }
    return pool;
}

}  // namespace campo
