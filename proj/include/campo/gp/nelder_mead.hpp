#pragma once

#include <algorithm>
#include <functional>
#include <numeric>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

/// Derivative-free simplex minimization with a fixed function-evaluation
/// budget. Returns the best point seen.
inline std::pair<Vec, double> nelder_mead(const std::function<double(const Vec&)>& f,
                                          const Vec& x0, double initial_step, int max_evals) {
    const Eigen::Index n = x0.size();
    std::vector<Vec> simplex;
    std::vector<double> values;
    int evals = 0;
    auto eval = [&](const Vec& x) {
        ++evals;
        return f(x);
    };

    simplex.push_back(x0);
    values.push_back(eval(x0));
    for (Eigen::Index i = 0; i < n; ++i) {
        Vec x = x0;
        x[i] += initial_step;
        simplex.push_back(x);
        values.push_back(eval(x));
    }

    const double alpha = 1.0, gamma = 2.0, rho = 0.5, sigma = 0.5;
    while (evals < max_evals) {
        std::vector<std::size_t> order(simplex.size());
        std::iota(order.begin(), order.end(), 0);
        std::sort(order.begin(), order.end(),
                  [&](std::size_t a, std::size_t b) { return values[a] < values[b]; });
        std::vector<Vec> s2;
        std::vector<double> v2;
        for (auto i : order) {
            s2.push_back(simplex[i]);
            v2.push_back(values[i]);
        }
        simplex = std::move(s2);
        values = std::move(v2);

        Vec centroid = Vec::Zero(n);
        for (std::size_t i = 0; i + 1 < simplex.size(); ++i) centroid += simplex[i];
        centroid /= static_cast<double>(simplex.size() - 1);

        Vec reflected = centroid + alpha * (centroid - simplex.back());
        double fr = eval(reflected);
        if (fr < values.front()) {
            Vec expanded = centroid + gamma * (reflected - centroid);
            double fe = evals < max_evals ? eval(expanded) : fr;
            if (fe < fr) {
                simplex.back() = expanded;
                values.back() = fe;
            } else {
                simplex.back() = reflected;
                values.back() = fr;
            }
        } else if (fr < values[values.size() - 2]) {
            simplex.back() = reflected;
            values.back() = fr;
        } else {
            Vec contracted = centroid + rho * (simplex.back() - centroid);
            double fc = evals < max_evals ? eval(contracted) : fr;
            if (fc < values.back()) {
                simplex.back() = contracted;
                values.back() = fc;
            } else {
                for (std::size_t i = 1; i < simplex.size() && evals < max_evals; ++i) {
                    simplex[i] = simplex.front() + sigma * (simplex[i] - simplex.front());
                    values[i] = eval(simplex[i]);
                }
            }
        }
    }

    std::size_t best = 0;
    for (std::size_t i = 1; i < values.size(); ++i)
        if (values[i] < values[best]) best = i;
    return {simplex[best], values[best]};
}

}  // namespace campo
