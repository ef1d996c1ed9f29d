#pragma once

#include <Eigen/Cholesky>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <stdexcept>
#include <vector>

#include "campo/core/types.hpp"

namespace campo {

inline constexpr double kGmmCovRegularization = 1e-6;
inline constexpr double kGmmEmTol = 1e-8;
inline constexpr int kGmmEmMaxIters = 500;

/// Gaussian mixture over displacement vectors. Cholesky factors and log
/// normalizers are prepared once so density evaluation stays cheap.
class GaussianMixture {
public:
    GaussianMixture() = default;

    GaussianMixture(Vec weights, std::vector<Vec> means, std::vector<Mat> covariances)
        : weights_(std::move(weights)), means_(std::move(means)), covs_(std::move(covariances)) {
        if (weights_.size() == 0 || means_.size() != static_cast<std::size_t>(weights_.size()) ||
            covs_.size() != means_.size())
            throw std::invalid_argument("mixture component count mismatch");
        if (std::abs(weights_.sum() - 1.0) > 1e-12 || (weights_.array() < 0).any())
            throw std::invalid_argument("mixture weights must be nonnegative and sum to 1");
        prepare();
    }

    [[nodiscard]] int components() const { return static_cast<int>(weights_.size()); }
    [[nodiscard]] Eigen::Index dim() const { return means_.empty() ? 0 : means_[0].size(); }
    [[nodiscard]] const Vec& weights() const { return weights_; }
    [[nodiscard]] const Vec& mean(int k) const { return means_[static_cast<std::size_t>(k)]; }
    [[nodiscard]] const Mat& covariance(int k) const { return covs_[static_cast<std::size_t>(k)]; }

    /// Weighted mean of the mixture.
    [[nodiscard]] Vec mean() const {
        Vec m = Vec::Zero(dim());
        for (int k = 0; k < components(); ++k) m += weights_[k] * means_[static_cast<std::size_t>(k)];
        return m;
    }

    [[nodiscard]] double log_pdf(const Vec& x) const {
        if (x.size() != dim()) throw std::invalid_argument("pdf query dimension mismatch");
        double acc = -std::numeric_limits<double>::infinity();
        Vec diff(dim());
        for (int k = 0; k < components(); ++k) {
            const auto ku = static_cast<std::size_t>(k);
            diff = x - means_[ku];
            chols_[ku].matrixL().solveInPlace(diff);
            double lp = log_weight_norm_[ku] - 0.5 * diff.squaredNorm();
            acc = log_sum_exp2(acc, lp);
        }
        return acc;
    }

    [[nodiscard]] double pdf(const Vec& x) const { return std::exp(log_pdf(x)); }

    /// Log-density at every column of `points` (d x n), written into `out`.
    void log_pdf_batch(const Mat& points, Vec& out) const {
        const Eigen::Index n = points.cols();
        out.setConstant(n, -std::numeric_limits<double>::infinity());
        Mat diff(dim(), n);
        for (int k = 0; k < components(); ++k) {
            const auto ku = static_cast<std::size_t>(k);
            diff = points.colwise() - means_[ku];
            chols_[ku].matrixL().solveInPlace(diff);
            for (Eigen::Index i = 0; i < n; ++i) {
                double lp = log_weight_norm_[ku] - 0.5 * diff.col(i).squaredNorm();
                out[i] = log_sum_exp2(out[i], lp);
            }
        }
    }

    template <class Rng>
    [[nodiscard]] Vec sample(Rng& rng) const {
        std::uniform_real_distribution<double> unit(0.0, 1.0);
        double u = unit(rng);
        int k = components() - 1;
        double acc = 0.0;
        for (int j = 0; j < components(); ++j) {
            acc += weights_[j];
            if (u <= acc) {
                k = j;
                break;
            }
        }
        const auto ku = static_cast<std::size_t>(k);
        std::normal_distribution<double> gauss(0.0, 1.0);
        Vec z(dim());
        for (Eigen::Index i = 0; i < z.size(); ++i) z[i] = gauss(rng);
        return means_[ku] + chols_[ku].matrixL() * z;
    }

    /// Set when EM was handed degenerate input (e.g. all points identical
    /// with K > 1) and fell back to duplicated single components.
    bool degenerate_input{false};

    /// Fitted-model log-likelihood of the training points, and the
    /// per-iteration trace (non-decreasing by construction of EM).
    double log_likelihood{0.0};
    std::vector<double> log_likelihood_trace;

private:
    static double log_sum_exp2(double a, double b) {
        if (a == -std::numeric_limits<double>::infinity()) return b;
        if (b == -std::numeric_limits<double>::infinity()) return a;
        double m = std::max(a, b);
        return m + std::log(std::exp(a - m) + std::exp(b - m));
    }

    void prepare() {
        const double d = static_cast<double>(dim());
        chols_.clear();
        log_weight_norm_.clear();
        for (int k = 0; k < components(); ++k) {
            const auto ku = static_cast<std::size_t>(k);
            Eigen::LLT<Mat> llt(covs_[ku]);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("mixture covariance not positive definite");
            double log_det_half = 0.0;
            for (Eigen::Index i = 0; i < dim(); ++i)
                log_det_half += std::log(llt.matrixL()(i, i));
            double lw = weights_[k] > 0 ? std::log(weights_[k])
                                        : -std::numeric_limits<double>::infinity();
            log_weight_norm_.push_back(lw - 0.5 * d * std::log(2.0 * M_PI) - log_det_half);
            chols_.push_back(std::move(llt));
        }
    }

    Vec weights_;
    std::vector<Vec> means_;
    std::vector<Mat> covs_;
    std::vector<Eigen::LLT<Mat>> chols_;
    std::vector<double> log_weight_norm_;
};

inline double gmm_pdf(const GaussianMixture& g, const Vec& x) { return g.pdf(x); }

namespace detail {

inline Mat points_to_matrix(const std::vector<Vec>& points) {
    if (points.empty()) throw std::invalid_argument("empty point set");
    Mat X(points[0].size(), static_cast<Eigen::Index>(points.size()));
    for (std::size_t i = 0; i < points.size(); ++i) {
        if (points[i].size() != X.rows()) throw std::invalid_argument("point dimension mismatch");
        X.col(static_cast<Eigen::Index>(i)) = points[i];
    }
    return X;
}

/// Lexicographic column sort; makes fits independent of input order.
inline void sort_columns(Mat& X) {
    std::vector<Eigen::Index> order(static_cast<std::size_t>(X.cols()));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](Eigen::Index a, Eigen::Index b) {
        for (Eigen::Index r = 0; r < X.rows(); ++r) {
            if (X(r, a) != X(r, b)) return X(r, a) < X(r, b);
        }
        return false;
    });
    Mat sorted(X.rows(), X.cols());
    for (std::size_t i = 0; i < order.size(); ++i)
        sorted.col(static_cast<Eigen::Index>(i)) = X.col(order[i]);
    X = std::move(sorted);
}

/// k-means++ seeding over the columns of X.
template <class Rng>
std::vector<Eigen::Index> kmeanspp_centers(const Mat& X, int k, Rng& rng) {
    const Eigen::Index n = X.cols();
    std::vector<Eigen::Index> centers;
    std::uniform_int_distribution<Eigen::Index> uniform_idx(0, n - 1);
    centers.push_back(uniform_idx(rng));
    Vec min_sq = (X.colwise() - X.col(centers[0])).colwise().squaredNorm().transpose();
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (static_cast<int>(centers.size()) < k) {
        double total = min_sq.sum();
        Eigen::Index chosen = 0;
        if (total <= 0.0) {
            chosen = uniform_idx(rng);
        } else {
            double r = unit(rng) * total;
            double acc = 0.0;
            chosen = n - 1;
            for (Eigen::Index i = 0; i < n; ++i) {
                acc += min_sq[i];
                if (r <= acc) {
                    chosen = i;
                    break;
                }
            }
        }
        centers.push_back(chosen);
        Vec d = (X.colwise() - X.col(chosen)).colwise().squaredNorm().transpose();
        min_sq = min_sq.cwiseMin(d);
    }
    return centers;
}

inline GaussianMixture degenerate_mixture(const Vec& point, int k) {
    Vec w = Vec::Constant(k, 1.0 / k);
    std::vector<Vec> means(static_cast<std::size_t>(k), point);
    std::vector<Mat> covs(static_cast<std::size_t>(k),
                          kGmmCovRegularization * Mat::Identity(point.size(), point.size()));
    GaussianMixture g(std::move(w), std::move(means), std::move(covs));
    g.degenerate_input = true;
    return g;
}

/// Canonical component order: descending weight, then lexicographic mean.
inline void canonical_order(Vec& w, std::vector<Vec>& means, std::vector<Mat>& covs) {
    const int k = static_cast<int>(w.size());
    std::vector<int> order(static_cast<std::size_t>(k));
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
        if (w[a] != w[b]) return w[a] > w[b];
        const Vec& ma = means[static_cast<std::size_t>(a)];
        const Vec& mb = means[static_cast<std::size_t>(b)];
        for (Eigen::Index r = 0; r < ma.size(); ++r)
            if (ma[r] != mb[r]) return ma[r] < mb[r];
        return false;
    });
    Vec w2(k);
    std::vector<Vec> m2(static_cast<std::size_t>(k));
    std::vector<Mat> c2(static_cast<std::size_t>(k));
    for (int i = 0; i < k; ++i) {
        w2[i] = w[order[static_cast<std::size_t>(i)]];
        m2[static_cast<std::size_t>(i)] = means[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
        c2[static_cast<std::size_t>(i)] = covs[static_cast<std::size_t>(order[static_cast<std::size_t>(i)])];
    }
    w = std::move(w2);
    means = std::move(m2);
    covs = std::move(c2);
}

}  // namespace detail

/// EM fit of a K-component full-covariance Gaussian mixture. Deterministic
/// given the seed; the input order of points does not matter.
inline GaussianMixture fit_gmm_em(const Mat& points_in, int k, std::uint64_t seed) {
    if (k < 1) throw std::invalid_argument("component count must be >= 1");
    const Eigen::Index d = points_in.rows();
    const Eigen::Index n = points_in.cols();
    if (n < static_cast<Eigen::Index>(k) * (d + 1))
        throw std::invalid_argument("too few points for requested component count");

    Mat X = points_in;
    detail::sort_columns(X);

    // Degenerate input: every point identical.
    bool all_same = true;
    for (Eigen::Index i = 1; i < n && all_same; ++i)
        all_same = (X.col(i) - X.col(0)).lpNorm<Eigen::Infinity>() == 0.0;
    if (all_same && k > 1) return detail::degenerate_mixture(X.col(0), k);

    std::mt19937_64 rng(seed);
    auto center_idx = detail::kmeanspp_centers(X, k, rng);

    Vec w = Vec::Constant(k, 1.0 / k);
    std::vector<Vec> means;
    means.reserve(static_cast<std::size_t>(k));
    for (auto c : center_idx) means.push_back(X.col(c));

    Vec global_mean = X.rowwise().mean();
    Mat centered = X.colwise() - global_mean;
    Mat global_cov = centered * centered.transpose() / static_cast<double>(n) +
                     kGmmCovRegularization * Mat::Identity(d, d);
    std::vector<Mat> covs(static_cast<std::size_t>(k), global_cov);

    Mat log_resp(k, n);
    std::vector<double> trace;
    double prev_ll = -std::numeric_limits<double>::infinity();

    for (int iter = 0; iter < kGmmEmMaxIters; ++iter) {
        // E step: component log-densities, normalized per point.
        for (int j = 0; j < k; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            Eigen::LLT<Mat> llt(covs[ju]);
            if (llt.info() != Eigen::Success)
                throw std::runtime_error("EM covariance lost positive definiteness");
            double log_det_half = 0.0;
            for (Eigen::Index i = 0; i < d; ++i) log_det_half += std::log(llt.matrixL()(i, i));
            double log_norm = std::log(std::max(w[j], 1e-300)) -
                              0.5 * d * std::log(2.0 * M_PI) - log_det_half;
            Mat diff = X.colwise() - means[ju];
            llt.matrixL().solveInPlace(diff);
            log_resp.row(j) = (-0.5 * diff.colwise().squaredNorm()).array() + log_norm;
        }
        double ll = 0.0;
        for (Eigen::Index i = 0; i < n; ++i) {
            double m = log_resp.col(i).maxCoeff();
            double s = (log_resp.col(i).array() - m).exp().sum();
            double lse = m + std::log(s);
            ll += lse;
            log_resp.col(i) = (log_resp.col(i).array() - lse).exp();
        }
        trace.push_back(ll);

        // M step (log_resp now holds responsibilities).
        for (int j = 0; j < k; ++j) {
            const auto ju = static_cast<std::size_t>(j);
            double nk = log_resp.row(j).sum();
            if (nk < 1e-12) {
                // Component starved of mass; pin it to the global fit.
                w[j] = 1e-12;
                means[ju] = global_mean;
                covs[ju] = global_cov;
                continue;
            }
            w[j] = nk / static_cast<double>(n);
            means[ju] = (X * log_resp.row(j).transpose()) / nk;
            Mat diff = X.colwise() - means[ju];
            Mat weighted = diff.array().rowwise() * log_resp.row(j).array();
            covs[ju] = weighted * diff.transpose() / nk +
                       kGmmCovRegularization * Mat::Identity(d, d);
        }
        w /= w.sum();

        if (iter > 0 && ll - prev_ll < kGmmEmTol) break;
        prev_ll = ll;
    }

    detail::canonical_order(w, means, covs);
    GaussianMixture g(std::move(w), std::move(means), std::move(covs));
    g.log_likelihood = trace.empty() ? 0.0 : trace.back();
    g.log_likelihood_trace = std::move(trace);
    return g;
}

inline GaussianMixture fit_gmm_em(const std::vector<Vec>& points, int k, std::uint64_t seed) {
    return fit_gmm_em(detail::points_to_matrix(points), k, seed);
}

/// Number of free parameters of a K-component full-covariance mixture in d
/// dimensions: (K-1) weights + K*d means + K*d(d+1)/2 covariance entries.
inline double gmm_free_parameters(int k, Eigen::Index d) {
    const double dd = static_cast<double>(d);
    return (k - 1) + k * dd + k * dd * (dd + 1.0) / 2.0;
}

inline double gmm_bic(const GaussianMixture& g, Eigen::Index n_points) {
    double p = gmm_free_parameters(g.components(), g.dim());
    return -2.0 * g.log_likelihood + p * std::log(static_cast<double>(n_points));
}

/// Fit K = 1..k_max and return the fit minimizing BIC (ties favour fewer
/// components).
inline GaussianMixture select_k_bic(const Mat& points, int k_max, std::uint64_t seed) {
    if (k_max < 1) throw std::invalid_argument("k_max must be >= 1");
    const Eigen::Index d = points.rows();
    const Eigen::Index n = points.cols();
    GaussianMixture best;
    double best_bic = std::numeric_limits<double>::infinity();
    for (int k = 1; k <= k_max; ++k) {
        if (n < static_cast<Eigen::Index>(k) * (d + 1)) break;
        GaussianMixture g = fit_gmm_em(points, k, seed);
        double bic = gmm_bic(g, n);
        if (bic < best_bic) {
            best_bic = bic;
            best = std::move(g);
        }
    }
    if (best.components() == 0) throw std::invalid_argument("too few points to fit any mixture");
    return best;
}

inline GaussianMixture select_k_bic(const std::vector<Vec>& points, int k_max, std::uint64_t seed) {
    return select_k_bic(detail::points_to_matrix(points), k_max, seed);
}

}  // namespace campo
