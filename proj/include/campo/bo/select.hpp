#pragma once

#include <Eigen/Cholesky>
#include <cmath>
#include <functional>
#include <limits>
#include <random>
#include <sstream>
#include <stdexcept>
#include <vector>

#include "campo/gp/posterior.hpp"

namespace campo {

inline constexpr double kSigmaFloor = 1e-9;
inline constexpr double kBatchJitter = 1e-9;
inline constexpr int kRefitCadence = 5;

/// Everything a selector needs for one state's action optimization.
struct AcquisitionContext {
    GpPosterior posterior;
    double h_u{0.0};
    std::vector<ActionVec> candidates;
    double lambda{1.0};
};

inline double est_acquisition_value(double h_u, double mu, double sigma) {
    return (h_u - mu) / std::max(sigma, kSigmaFloor);
}

/// EST score (h_u - mu)/sigma; lower means more likely to attain the bound.
inline double est_acquisition(const AcquisitionContext& ctx, const ActionVec& a) {
    auto [mu, sigma] = ctx.posterior.predict(a);
    return est_acquisition_value(ctx.h_u, mu, sigma);
}

struct SelectionRecord {
    ActionVec action;
    double value{0.0};
    double acquisition{0.0};
    int round{0};
};

struct SelectionResult {
    ActionVec best_action;
    double best_value{-std::numeric_limits<double>::infinity()};
    std::vector<SelectionRecord> history;
    int bound_lifts{0};  // times an observed y exceeded the stated h_u
};

/// Marginal gain of adding `a` to batch B under F_s: the log of the jittered
/// Schur complement of K_B minus lambda times the EST score. Returns -inf for
/// a numerically singular extension (e.g. duplicate candidates).
inline double batch_objective_increment(const AcquisitionContext& ctx,
                                        const std::vector<ActionVec>& batch,
                                        const ActionVec& a) {
    const KernelSpec& k = ctx.posterior.kernel();
    double kaa = kernel_eval(k, a, a) + kBatchJitter;
    double schur = kaa;
    if (!batch.empty()) {
        const auto m = static_cast<Eigen::Index>(batch.size());
        Mat kb(m, m);
        Vec kba(m);
        for (Eigen::Index i = 0; i < m; ++i) {
            kba[i] = kernel_eval(k, batch[static_cast<std::size_t>(i)], a);
            for (Eigen::Index j = 0; j <= i; ++j) {
                double v = kernel_eval(k, batch[static_cast<std::size_t>(i)],
                                       batch[static_cast<std::size_t>(j)]);
                kb(i, j) = v;
                kb(j, i) = v;
            }
        }
        Eigen::LLT<Mat> llt(kb);
        if (llt.info() != Eigen::Success)
            throw std::runtime_error("batch kernel matrix not positive definite");
        Vec v = kba;
        llt.matrixL().solveInPlace(v);
        schur = kaa - v.squaredNorm();
    }
    if (schur <= 0.0) return -std::numeric_limits<double>::infinity();
    return std::log(schur) - ctx.lambda * est_acquisition(ctx, a);
}

namespace detail {

/// Internal GP state shared by the GP-driven selectors: raw history plus a
/// posterior over median/IQR-normalized targets, rebuilt (and refit) every
/// kRefitCadence observations.
class ScaledGp {
public:
    explicit ScaledGp(const GpPosterior& start) : kernel_(start.kernel()) {
        for (std::size_t i = 0; i < start.observations().size(); ++i) {
            actions_.push_back(start.observations()[i]);
            ys_.push_back(start.targets()[i]);
        }
        rebuild(false);
    }

    void observe(const ActionVec& a, double y) {
        actions_.push_back(a);
        ys_.push_back(y);
        if (ys_.size() / kRefitCadence != (ys_.size() - 1) / kRefitCadence) {
            rebuild(true);
        } else {
            gp_ = gp_.updated(a, scaler_.normalize(y));
        }
    }

    [[nodiscard]] std::pair<double, double> predict_raw(const ActionVec& a) const {
        auto [mu, sigma] = gp_.predict(a);
        return {scaler_.denormalize_mean(mu), scaler_.denormalize_sigma(sigma)};
    }

    [[nodiscard]] const KernelSpec& kernel() const { return gp_.kernel(); }
    [[nodiscard]] int count() const { return static_cast<int>(ys_.size()); }

private:
    void rebuild(bool refit) {
        scaler_ = TargetScaler::fit(ys_);
        GpPosterior gp(kernel_);
        for (std::size_t i = 0; i < actions_.size(); ++i)
            gp = gp.updated(actions_[i], scaler_.normalize(ys_[i]));
        if (refit && gp.size() >= 3) {
            gp = gp.refit_hyperparameters(static_cast<std::uint64_t>(ys_.size()));
            kernel_ = gp.kernel();
        }
        gp_ = std::move(gp);
    }

    KernelSpec kernel_;
    std::vector<ActionVec> actions_;
    std::vector<double> ys_;
    TargetScaler scaler_;
    GpPosterior gp_{};
};

inline void require_finite(double y, const ActionVec& a) {
    if (std::isfinite(y)) return;
    std::ostringstream os;
    os << "action evaluation returned non-finite value for a = [";
    for (Eigen::Index i = 0; i < a.control.size(); ++i) os << a.control[i] << " ";
    os << "| dt=" << a.duration << "]";
    throw std::runtime_error(os.str());
}

inline void track_best(SelectionResult& result, const ActionVec& a, double y) {
    if (y > result.best_value) {
        result.best_value = y;
        result.best_action = a;
    }
}

}  // namespace detail

/// Sequential GP optimization of an expensive action-value function: T rounds
/// of EST-guided selection, one evaluation per round.
inline SelectionResult select_sequential(const AcquisitionContext& ctx,
                                         const std::function<double(const ActionVec&)>& evaluate,
                                         int rounds) {
    if (rounds < 1) throw std::invalid_argument("selection rounds must be >= 1");
    if (ctx.candidates.empty()) throw std::invalid_argument("empty candidate pool");

    detail::ScaledGp gp(ctx.posterior);
    std::vector<std::size_t> alive(ctx.candidates.size());
    std::iota(alive.begin(), alive.end(), 0);

    SelectionResult result;
    double h_u = ctx.h_u;
    for (int t = 1; t <= rounds && !alive.empty(); ++t) {
        double best_g = std::numeric_limits<double>::infinity();
        std::size_t best_pos = 0;
        for (std::size_t pos = 0; pos < alive.size(); ++pos) {
            const ActionVec& a = ctx.candidates[alive[pos]];
            auto [mu, sigma] = gp.predict_raw(a);
            double g = est_acquisition_value(h_u, mu, sigma);
            if (g < best_g) {
                best_g = g;
                best_pos = pos;
            }
        }
        const ActionVec a = ctx.candidates[alive[best_pos]];
        alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(best_pos));

        double y = evaluate(a);
        detail::require_finite(y, a);
        if (y > h_u + 1e-6) {
            h_u = y;
            ++result.bound_lifts;
        }
        result.history.push_back({a, y, best_g, t});
        detail::track_best(result, a, y);
        gp.observe(a, y);
    }
    return result;
}

/// Batch GP optimization: each round greedily assembles a batch of M diverse,
/// promising candidates via the submodular objective, evaluates them (the
/// evaluator may fan the batch out concurrently), then updates the posterior.
inline SelectionResult select_batch(
    const AcquisitionContext& ctx,
    const std::function<std::vector<double>(const std::vector<ActionVec>&)>& evaluate_batch,
    int rounds, int batch_size) {
    if (rounds < 1 || batch_size < 1) throw std::invalid_argument("rounds and batch size must be >= 1");
    if (ctx.candidates.size() < static_cast<std::size_t>(batch_size))
        throw std::invalid_argument("candidate pool smaller than batch size");

    detail::ScaledGp gp(ctx.posterior);
    std::vector<std::size_t> alive(ctx.candidates.size());
    std::iota(alive.begin(), alive.end(), 0);

    SelectionResult result;
    double h_u = ctx.h_u;
    for (int t = 1; t <= rounds; ++t) {
        const int m = std::min<int>(batch_size, static_cast<int>(alive.size()));
        if (m == 0) break;

        // Greedy batch construction with an incrementally grown Cholesky
        // factor of K_B; the marginal gain uses the Schur complement.
        std::vector<std::size_t> batch_pos;
        std::vector<double> batch_inc;
        Mat lb;  // Cholesky factor of the current K_B
        const KernelSpec& kern = gp.kernel();
        for (int i = 0; i < m; ++i) {
            double best_inc = -std::numeric_limits<double>::infinity();
            std::size_t best_pos = alive.size();
            for (std::size_t pos = 0; pos < alive.size(); ++pos) {
                if (std::find(batch_pos.begin(), batch_pos.end(), pos) != batch_pos.end())
                    continue;
                const ActionVec& a = ctx.candidates[alive[pos]];
                double kaa = kernel_eval(kern, a, a) + kBatchJitter;
                double schur = kaa;
                if (!batch_pos.empty()) {
                    Vec kba(static_cast<Eigen::Index>(batch_pos.size()));
                    for (std::size_t j = 0; j < batch_pos.size(); ++j)
                        kba[static_cast<Eigen::Index>(j)] =
                            kernel_eval(kern, ctx.candidates[alive[batch_pos[j]]], a);
                    lb.triangularView<Eigen::Lower>().solveInPlace(kba);
                    schur = kaa - kba.squaredNorm();
                }
                if (schur <= 0.0) continue;
                auto [mu, sigma] = gp.predict_raw(a);
                double inc = std::log(schur) -
                             ctx.lambda * est_acquisition_value(h_u, mu, sigma);
                if (inc > best_inc) {
                    best_inc = inc;
                    best_pos = pos;
                }
            }
            if (best_pos == alive.size()) break;  // all remaining candidates singular

            const ActionVec& chosen = ctx.candidates[alive[best_pos]];
            const auto bsz = static_cast<Eigen::Index>(batch_pos.size());
            Mat grown = Mat::Zero(bsz + 1, bsz + 1);
            if (bsz > 0) {
                Vec kba(bsz);
                for (std::size_t j = 0; j < batch_pos.size(); ++j)
                    kba[static_cast<Eigen::Index>(j)] =
                        kernel_eval(kern, ctx.candidates[alive[batch_pos[j]]], chosen);
                lb.triangularView<Eigen::Lower>().solveInPlace(kba);
                grown.topLeftCorner(bsz, bsz) = lb;
                grown.row(bsz).head(bsz) = kba.transpose();
                grown(bsz, bsz) =
                    std::sqrt(kernel_eval(kern, chosen, chosen) + kBatchJitter - kba.squaredNorm());
            } else {
                grown(0, 0) = std::sqrt(kernel_eval(kern, chosen, chosen) + kBatchJitter);
            }
            lb = std::move(grown);
            batch_pos.push_back(best_pos);
            batch_inc.push_back(best_inc);
        }
        if (batch_pos.empty()) break;

        std::vector<ActionVec> batch;
        batch.reserve(batch_pos.size());
        for (auto pos : batch_pos) batch.push_back(ctx.candidates[alive[pos]]);
        std::vector<double> ys = evaluate_batch(batch);
        if (ys.size() != batch.size())
            throw std::runtime_error("batch evaluator returned wrong number of values");

        for (std::size_t i = 0; i < batch.size(); ++i) {
            detail::require_finite(ys[i], batch[i]);
            if (ys[i] > h_u + 1e-6) {
                h_u = ys[i];
                ++result.bound_lifts;
            }
            result.history.push_back({batch[i], ys[i], batch_inc[i], t});
            detail::track_best(result, batch[i], ys[i]);
            gp.observe(batch[i], ys[i]);
        }

        // Drop evaluated candidates from the pool (highest position first).
        std::sort(batch_pos.rbegin(), batch_pos.rend());
        for (auto pos : batch_pos) alive.erase(alive.begin() + static_cast<std::ptrdiff_t>(pos));
    }
    return result;
}

/// Uniform-without-replacement baseline with the same interface.
template <class Rng>
SelectionResult select_random(const AcquisitionContext& ctx,
                              const std::function<double(const ActionVec&)>& evaluate, int rounds,
                              Rng& rng) {
    if (rounds < 1) throw std::invalid_argument("selection rounds must be >= 1");
    if (ctx.candidates.empty()) throw std::invalid_argument("empty candidate pool");

    std::vector<std::size_t> order(ctx.candidates.size());
    std::iota(order.begin(), order.end(), 0);
    const auto n = order.size();
    const auto take = std::min<std::size_t>(static_cast<std::size_t>(rounds), n);
    for (std::size_t i = 0; i < take; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, n - 1);
        std::swap(order[i], order[pick(rng)]);
    }

    SelectionResult result;
    for (std::size_t i = 0; i < take; ++i) {
        const ActionVec& a = ctx.candidates[order[i]];
        double y = evaluate(a);
        detail::require_finite(y, a);
        result.history.push_back({a, y, 0.0, static_cast<int>(i + 1)});
        detail::track_best(result, a, y);
    }
    return result;
}

}  // namespace campo
