#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "campo/density/gmm.hpp"
#include "campo/density/local_model.hpp"

using namespace campo;

namespace {

Vec vec2(double x, double y) {
    Vec v(2);
    v << x, y;
    return v;
}

// Independent generator for the two-mode benchmark mixture
// 0.6 N((5,5), 2I) + 0.4 N((5,-5), 2I), written directly against std::.
std::vector<Vec> draw_benchmark_mixture(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::bernoulli_distribution pick_first(0.6);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n));
    const double sd = std::sqrt(2.0);
    for (int i = 0; i < n; ++i) {
        double cy = pick_first(rng) ? 5.0 : -5.0;
        out.push_back(vec2(5.0 + sd * gauss(rng), cy + sd * gauss(rng)));
    }
    return out;
}

std::vector<Vec> draw_standard_normal(int n, std::uint64_t seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::vector<Vec> out;
    out.reserve(static_cast<std::size_t>(n));
    for (int i = 0; i < n; ++i) out.push_back(vec2(gauss(rng), gauss(rng)));
    return out;
}

Vec sample_mean(const std::vector<Vec>& pts) {
    Vec m = Vec::Zero(pts[0].size());
    for (const auto& p : pts) m += p;
    return m / static_cast<double>(pts.size());
}

Mat sample_covariance(const std::vector<Vec>& pts) {
    Vec m = sample_mean(pts);
    Mat c = Mat::Zero(pts[0].size(), pts[0].size());
    for (const auto& p : pts) c += (p - m) * (p - m).transpose();
    return c / static_cast<double>(pts.size());
}

}  // namespace

TEST_CASE("single-component EM reduces to the sample moments") {
    auto pts = draw_standard_normal(400, 21);
    GaussianMixture g = fit_gmm_em(pts, 1, 3);
    Vec mean_oracle = sample_mean(pts);
    Mat cov_oracle = sample_covariance(pts) + kGmmCovRegularization * Mat::Identity(2, 2);
    CHECK((g.mean(0) - mean_oracle).norm() < 1e-12);
    CHECK((g.covariance(0) - cov_oracle).norm() < 1e-12);
    CHECK(g.weights()[0] == 1.0);
}

TEST_CASE("K=1 fit recovers the origin for standard normal samples") {
    auto pts = draw_standard_normal(5000, 77);
    GaussianMixture g = fit_gmm_em(pts, 1, 3);
    CHECK(g.mean(0).norm() < 0.1);
}

TEST_CASE("K=2 fit recovers the benchmark mixture") {
    auto pts = draw_benchmark_mixture(5000, 13);
    GaussianMixture g = fit_gmm_em(pts, 2, 3);
    REQUIRE(g.components() == 2);
    // Canonical order puts the heavier component first.
    CHECK(g.weights()[0] == Catch::Approx(0.6).margin(0.05));
    CHECK(g.weights()[1] == Catch::Approx(0.4).margin(0.05));
    CHECK((g.mean(0) - vec2(5, 5)).norm() < 0.3);
    CHECK((g.mean(1) - vec2(5, -5)).norm() < 0.3);
}

TEST_CASE("EM log-likelihood trace is non-decreasing", "[property]") {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
        auto pts = draw_benchmark_mixture(600, 100 + seed);
        GaussianMixture g = fit_gmm_em(pts, 3, seed);
        for (std::size_t i = 1; i < g.log_likelihood_trace.size(); ++i)
            REQUIRE(g.log_likelihood_trace[i] >= g.log_likelihood_trace[i - 1] - 1e-9);
    }
}

TEST_CASE("EM is bit-reproducible under a fixed seed") {
    auto pts = draw_benchmark_mixture(800, 5);
    GaussianMixture a = fit_gmm_em(pts, 2, 42);
    GaussianMixture b = fit_gmm_em(pts, 2, 42);
    REQUIRE(a.components() == b.components());
    for (int k = 0; k < a.components(); ++k) {
        CHECK(a.weights()[k] == b.weights()[k]);
        CHECK(a.mean(k) == b.mean(k));
        CHECK(a.covariance(k) == b.covariance(k));
    }
}

TEST_CASE("degenerate input yields duplicated components and a warning") {
    std::vector<Vec> pts(20, vec2(1.5, -0.5));
    GaussianMixture g = fit_gmm_em(pts, 3, 0);
    CHECK(g.degenerate_input);
    REQUIRE(g.components() == 3);
    for (int k = 0; k < 3; ++k) {
        CHECK(g.weights()[k] == Catch::Approx(1.0 / 3.0));
        CHECK((g.mean(k) - vec2(1.5, -0.5)).norm() == 0.0);
    }
}

TEST_CASE("EM preconditions") {
    auto pts = draw_standard_normal(5, 1);
    CHECK_THROWS_AS(fit_gmm_em(pts, 2, 0), std::invalid_argument);
    CHECK_THROWS_AS(fit_gmm_em(pts, 0, 0), std::invalid_argument);
}

TEST_CASE("BIC selects two components for the benchmark mixture") {
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto pts = draw_benchmark_mixture(2000, 1000 + seed);
        GaussianMixture g = select_k_bic(pts, 4, seed);
        if (g.components() == 2) ++correct;
    }
    CHECK(correct >= 9);
}

TEST_CASE("BIC selects one component for a single Gaussian") {
    int correct = 0;
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        auto pts = draw_standard_normal(2000, 2000 + seed);
        GaussianMixture g = select_k_bic(pts, 3, seed);
        if (g.components() == 1) ++correct;
    }
    CHECK(correct >= 9);
}

TEST_CASE("BIC with k_max=1 always returns one component") {
    auto pts = draw_benchmark_mixture(500, 3);
    CHECK(select_k_bic(pts, 1, 9).components() == 1);
}

TEST_CASE("BIC selection is invariant under input permutation", "[property]") {
    auto pts = draw_benchmark_mixture(600, 8);
    GaussianMixture a = select_k_bic(pts, 4, 17);
    std::mt19937_64 rng(99);
    std::shuffle(pts.begin(), pts.end(), rng);
    GaussianMixture b = select_k_bic(pts, 4, 17);
    REQUIRE(a.components() == b.components());
    for (int k = 0; k < a.components(); ++k) {
        CHECK(a.weights()[k] == b.weights()[k]);
        CHECK(a.mean(k) == b.mean(k));
    }
}

TEST_CASE("mixture pdf basics") {
    Vec w(1);
    w << 1.0;
    GaussianMixture g(w, {vec2(0, 0)}, {Mat::Identity(2, 2)});
    SECTION("standard normal peak") {
        CHECK(gmm_pdf(g, vec2(0, 0)) == Catch::Approx(1.0 / (2.0 * M_PI)).epsilon(1e-9));
    }
    SECTION("no NaN over a huge range") {
        for (double x : {-1e6, -1e3, 0.0, 1e3, 1e6}) {
            double p = gmm_pdf(g, vec2(x, x));
            REQUIRE(std::isfinite(p));
            REQUIRE(p >= 0.0);
        }
    }
}

TEST_CASE("mixture pdf integrates to one on a truncated grid") {
    auto pts = draw_benchmark_mixture(2000, 31);
    GaussianMixture g = fit_gmm_em(pts, 2, 1);
    // Quadrature over +-6 sigma around both modes.
    const double lo_x = 5.0 - 9.0, hi_x = 5.0 + 9.0;
    const double lo_y = -5.0 - 9.0, hi_y = 5.0 + 9.0;
    const int n = 220;
    const double dx = (hi_x - lo_x) / n, dy = (hi_y - lo_y) / n;
    double integral = 0.0;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j)
            integral +=
                gmm_pdf(g, vec2(lo_x + (i + 0.5) * dx, lo_y + (j + 0.5) * dy)) * dx * dy;
    CHECK(integral == Catch::Approx(1.0).margin(0.01));
}

TEST_CASE("mixture with identical duplicated components matches the single component") {
    Vec w2(2);
    w2 << 0.5, 0.5;
    Mat cov = 1.7 * Mat::Identity(2, 2);
    GaussianMixture two(w2, {vec2(1, 2), vec2(1, 2)}, {cov, cov});
    Vec w1(1);
    w1 << 1.0;
    GaussianMixture one(w1, {vec2(1, 2)}, {cov});
    std::mt19937_64 rng(4);
    std::uniform_real_distribution<double> unif(-6.0, 8.0);
    for (int i = 0; i < 300; ++i) {
        Vec x = vec2(unif(rng), unif(rng));
        REQUIRE(gmm_pdf(two, x) == Catch::Approx(gmm_pdf(one, x)).epsilon(1e-12));
    }
}

TEST_CASE("mixture sampling matches the component weights") {
    Vec w(2);
    w << 0.6, 0.4;
    Mat cov = 0.01 * Mat::Identity(2, 2);
    GaussianMixture g(w, {vec2(0, 10), vec2(0, -10)}, {cov, cov});
    std::mt19937_64 rng(123);
    const int n = 100000;
    int first = 0;
    Vec mean = Vec::Zero(2);
    for (int i = 0; i < n; ++i) {
        Vec s = g.sample(rng);
        if (s[1] > 0) ++first;
        mean += s;
    }
    mean /= n;
    double frac = static_cast<double>(first) / n;
    CHECK(frac == Catch::Approx(0.6).margin(0.01));
    // CLT bound: the y marginal has sd ~ 9.8, three standard errors ~ 0.093.
    Vec expected = 0.6 * vec2(0, 10) + 0.4 * vec2(0, -10);
    CHECK(std::abs(mean[0] - expected[0]) < 3.0 * 0.1 / std::sqrt(static_cast<double>(n)) + 1e-3);
    CHECK(std::abs(mean[1] - expected[1]) < 3.0 * 9.9 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("single-weight mixture always samples its only component") {
    Vec w(1);
    w << 1.0;
    GaussianMixture g(w, {vec2(3, 3)}, {0.0001 * Mat::Identity(2, 2)});
    std::mt19937_64 rng(9);
    for (int i = 0; i < 100; ++i) REQUIRE((g.sample(rng) - vec2(3, 3)).norm() < 0.1);
}

TEST_CASE("nearest action subset selection") {
    Dataset data;
    auto add = [&](double u, double d0) {
        DatasetRecord rec;
        Vec c(1);
        c << u;
        rec.action = ActionVec(c, 1.0);
        rec.delta = vec2(d0, 0.0);
        data.push_back(std::move(rec));
    };
    SECTION("closest action wins") {
        add(0.0, 10.0);
        add(0.5, 20.0);
        add(1.0, 30.0);
        Vec c(1);
        c << 0.1;
        auto out = nearest_action_subset(data, ActionVec(c, 1.0), 1);
        REQUIRE(out.size() == 1);
        CHECK(out[0][0] == 10.0);
    }
    SECTION("M equals the dataset size returns everything") {
        add(0.0, 10.0);
        add(0.5, 20.0);
        add(1.0, 30.0);
        Vec c(1);
        c << 0.1;
        auto out = nearest_action_subset(data, ActionVec(c, 1.0), 3);
        CHECK(out.size() == 3);
    }
    SECTION("exact ties break toward the lower dataset index") {
        add(0.0, 10.0);
        add(0.2, 20.0);
        Vec c(1);
        c << 0.1;
        auto out = nearest_action_subset(data, ActionVec(c, 1.0), 1);
        REQUIRE(out.size() == 1);
        CHECK(out[0][0] == 10.0);
    }
    SECTION("empty dataset and bad counts are rejected") {
        Dataset empty;
        Vec c(1);
        c << 0.0;
        CHECK_THROWS_AS(nearest_action_subset(empty, ActionVec(c, 1.0), 1),
                        std::invalid_argument);
        add(0.0, 1.0);
        CHECK_THROWS_AS(nearest_action_subset(data, ActionVec(c, 1.0), 2),
                        std::invalid_argument);
    }
}

TEST_CASE("local density model memoizes fits by quantized action") {
    Dataset data;
    std::mt19937_64 rng(2);
    std::normal_distribution<double> gauss(0.0, 1.0);
    std::uniform_real_distribution<double> unif(0.0, 6.28);
    for (int i = 0; i < 500; ++i) {
        DatasetRecord rec;
        Vec c(1);
        c << unif(rng);
        rec.action = ActionVec(c, 1.0);
        rec.delta = vec2(gauss(rng), gauss(rng));
        data.push_back(std::move(rec));
    }
    LocalDensityModel model(std::move(data), 100, 2, 7);
    Vec c(1);
    c << 3.0;
    ActionVec a(c, 1.0);
    auto first = model.query(a);
    auto second = model.query(a);
    CHECK(first.get() == second.get());
    CHECK(model.fits_performed() == 1);
    CHECK(model.cache_hits() == 1);
}
