#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "campo/gp/kernel.hpp"
#include "campo/gp/nelder_mead.hpp"

namespace campo {

/// Exact GP posterior over actions. Value type: updates return new
/// posteriors, so a shared posterior can serve concurrent predictions.
class GpPosterior {
public:
    GpPosterior() = default;
    explicit GpPosterior(KernelSpec kernel) : kernel_(std::move(kernel)) {}

    [[nodiscard]] int size() const { return static_cast<int>(ys_.size()); }
    [[nodiscard]] const KernelSpec& kernel() const { return kernel_; }
    [[nodiscard]] const std::vector<ActionVec>& observations() const { return actions_; }
    [[nodiscard]] const std::vector<double>& targets() const { return ys_; }
    [[nodiscard]] const Mat& cholesky_factor() const { return chol_; }

    /// Posterior with one more observation appended (rank-one Cholesky
    /// extension of K_t + sigma^2 I).
    [[nodiscard]] GpPosterior updated(const ActionVec& a, double y) const {
        if (!std::isfinite(y)) throw std::invalid_argument("GP observation must be finite");
        GpPosterior next = *this;
        next.append(a, y);
        return next;
    }

    /// Posterior mean and standard deviation at `a`; the prior (0, sqrt(sv))
    /// with no observations.
    [[nodiscard]] std::pair<double, double> predict(const ActionVec& a) const {
        if (size() == 0) return {0.0, std::sqrt(kernel_.signal_variance)};
        Vec k = cross_covariance(a);
        double mu = k.dot(alpha_);
        Vec v = k;
        chol_.triangularView<Eigen::Lower>().solveInPlace(v);
        double var = kernel_.signal_variance - v.squaredNorm();
        return {mu, std::sqrt(std::max(var, 0.0))};
    }

    [[nodiscard]] double log_marginal_likelihood() const {
        if (size() == 0) return 0.0;
        const auto n = static_cast<double>(size());
        Eigen::Map<const Vec> y(ys_.data(), size());
        double log_det_half = 0.0;
        for (int i = 0; i < size(); ++i) log_det_half += std::log(chol_(i, i));
        return -0.5 * y.dot(alpha_) - log_det_half - 0.5 * n * std::log(2.0 * M_PI);
    }

    /// Posterior with kernel hyperparameters re-optimized by multi-start
    /// simplex search over log-parameters; never returns a posterior with
    /// lower marginal likelihood than the input.
    [[nodiscard]] GpPosterior refit_hyperparameters(std::uint64_t seed = 0) const {
        if (size() < 3) return *this;
        const Eigen::Index d = kernel_.lengthscales.size();
        auto pack = [&](const KernelSpec& k) {
            Vec x(d + 2);
            x.head(d) = k.lengthscales.array().log();
            x[d] = std::log(k.signal_variance);
            x[d + 1] = std::log(k.noise_variance);
            return x;
        };
        auto unpack = [&](const Vec& x) {
            Vec ls = x.head(d).array().exp().cwiseMax(1e-6).cwiseMin(1e6);
            double sv = std::clamp(std::exp(x[d]), 1e-9, 1e9);
            double noise = std::clamp(std::exp(x[d + 1]), 1e-8, 1e3);
            return KernelSpec(sv, std::move(ls), noise);
        };
        auto objective = [&](const Vec& x) {
            GpPosterior trial(unpack(x));
            for (std::size_t i = 0; i < actions_.size(); ++i) {
                try {
                    trial.append(actions_[i], ys_[i]);
                } catch (const std::runtime_error&) {
                    return 1e18;
                }
            }
            double lml = trial.log_marginal_likelihood();
            return std::isfinite(lml) ? -lml : 1e18;
        };

        std::mt19937_64 rng(seed);
        std::normal_distribution<double> jitter(0.0, 0.5);
        Vec best_x = pack(kernel_);
        double best_f = objective(best_x);
        const double incoming = best_f;
        for (int start = 0; start < 4; ++start) {
            Vec x0 = pack(kernel_);
            if (start > 0)
                for (Eigen::Index i = 0; i < x0.size(); ++i) x0[i] += jitter(rng);
            auto [x, f] = nelder_mead(objective, x0, 0.4, 64);
            if (f < best_f) {
                best_f = f;
                best_x = x;
            }
        }
        if (best_f >= incoming) return *this;

        GpPosterior out(unpack(best_x));
        for (std::size_t i = 0; i < actions_.size(); ++i) out.append(actions_[i], ys_[i]);
        return out;
    }

private:
    void append(const ActionVec& a, double y) {
        const int t = size();
        Vec flat = a.flatten();
        double kaa = kernel_.signal_variance + kernel_.noise_variance;
        if (t == 0) {
            chol_ = Mat::Zero(1, 1);
            chol_(0, 0) = std::sqrt(kaa);
        } else {
            Vec k(t);
            for (int i = 0; i < t; ++i) k[i] = kernel_eval_flat(kernel_, flats_[static_cast<std::size_t>(i)], flat);
            chol_.triangularView<Eigen::Lower>().solveInPlace(k);
            double rest = kaa - k.squaredNorm();
            if (rest <= 0.0)
                throw std::runtime_error(
                    "GP factorization failed (ill-conditioned kernel matrix); "
                    "increase the noise floor");
            Mat grown = Mat::Zero(t + 1, t + 1);
            grown.topLeftCorner(t, t) = chol_;
            grown.row(t).head(t) = k.transpose();
            grown(t, t) = std::sqrt(rest);
            chol_ = std::move(grown);
        }
        actions_.push_back(a);
        flats_.push_back(std::move(flat));
        ys_.push_back(y);

        Eigen::Map<const Vec> yv(ys_.data(), size());
        alpha_ = yv;
        chol_.triangularView<Eigen::Lower>().solveInPlace(alpha_);
        chol_.triangularView<Eigen::Lower>().transpose().solveInPlace(alpha_);
    }

    [[nodiscard]] Vec cross_covariance(const ActionVec& a) const {
        Vec flat = a.flatten();
        Vec k(size());
        for (int i = 0; i < size(); ++i)
            k[i] = kernel_eval_flat(kernel_, flats_[static_cast<std::size_t>(i)], flat);
        return k;
    }

    KernelSpec kernel_;
    std::vector<ActionVec> actions_;
    std::vector<Vec> flats_;
    std::vector<double> ys_;
    Mat chol_;
    Vec alpha_;
};

inline GpPosterior gp_update(const GpPosterior& g, const ActionVec& a, double y) {
    return g.updated(a, y);
}

inline std::pair<double, double> gp_predict(const GpPosterior& g, const ActionVec& a) {
    return g.predict(a);
}

/// Median/IQR scaling of selector targets; keeps GP hyperparameters stable
/// when Q values span reward magnitudes.
struct TargetScaler {
    double median{0.0};
    double scale{1.0};

    static TargetScaler fit(const std::vector<double>& ys) {
        TargetScaler s;
        if (ys.empty()) return s;
        std::vector<double> sorted = ys;
        std::sort(sorted.begin(), sorted.end());
        auto quantile = [&](double q) {
            double idx = q * static_cast<double>(sorted.size() - 1);
            auto lo = static_cast<std::size_t>(idx);
            auto hi = std::min(lo + 1, sorted.size() - 1);
            double frac = idx - static_cast<double>(lo);
            return sorted[lo] * (1.0 - frac) + sorted[hi] * frac;
        };
        s.median = quantile(0.5);
        double iqr = quantile(0.75) - quantile(0.25);
        s.scale = iqr > 1e-9 ? iqr : 1.0;
        return s;
    }

    [[nodiscard]] double normalize(double y) const { return (y - median) / scale; }
    [[nodiscard]] double denormalize_mean(double mu) const { return median + scale * mu; }
    [[nodiscard]] double denormalize_sigma(double sigma) const { return scale * sigma; }
};

}  // namespace campo
