#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "mixseg/em.hpp"
#include "mixseg/metrics.hpp"
#include "mixseg/simulate.hpp"

using namespace mixseg;

namespace {

bool has(const std::vector<Violation>& vs, Assumption a) {
    return std::any_of(vs.begin(), vs.end(), [&](const Violation& v) { return v.assumption == a; });
}

}  // namespace

TEST(Cosine, SameSeedSameBundle) {
    const auto a = simulate(SimSpec::cosine(30, 20, 0.5, 99));
    const auto b = simulate(SimSpec::cosine(30, 20, 0.5, 99));
    EXPECT_EQ(a.dataset.curves, b.dataset.curves);
    EXPECT_EQ(a.z_true, b.z_true);
    EXPECT_EQ(a.params_true, b.params_true);
    const auto c = simulate(SimSpec::cosine(30, 20, 0.5, 100));
    EXPECT_NE(a.dataset.curves, c.dataset.curves);
}

TEST(Cosine, DefaultsAndBreakpoints) {
    const auto b = simulate(SimSpec::cosine(100, 50, 1.0, 1));
    EXPECT_EQ(b.dataset.curves.n(), 100u);
    EXPECT_EQ(b.dataset.curves.d(), 50u);
    EXPECT_EQ(b.dataset.curves.m(), 32u);
    EXPECT_EQ(b.params_true.T, (std::vector<std::vector<int>>{{0, 25, 50}, {0, 16, 33, 50}, {0, 12, 25, 37, 50}}));
    EXPECT_EQ(b.params_true.pi, (std::vector<double>(3, 1.0 / 3.0)));
    EXPECT_TRUE(b.violations.empty());
    for (const auto& seg : b.params_true.sigma)
        for (const auto& s : seg)
            for (double v : s) EXPECT_EQ(v, 1.0);
    for (int z : b.z_true.z) EXPECT_TRUE(z >= 1 && z <= 3);
}

TEST(Cosine, NoViolationsAcrossSettings) {
    for (double alpha : {0.1, 0.2, 1.0})
        for (auto [n, d] : {std::pair{100, 50}, std::pair{50, 20}, std::pair{20, 100}}) {
            auto spec = SimSpec::cosine(n, d, alpha, 3);
            EXPECT_TRUE(simulate(spec).violations.empty());
            spec.grid = TimeGrid::Global;
            EXPECT_TRUE(simulate(spec).violations.empty());
        }
}

TEST(Cosine, ZeroAmplitudeMakesClustersIdentical) {
    auto spec = SimSpec::cosine(10, 12, 0.0, 1);
    spec.L = {1, 1, 1};
    EXPECT_TRUE(has(simulate(spec).violations, Assumption::ClustersDistinct));
}

TEST(Cosine, TruthIsExactProjectionOfNoiselessCurve) {
    const auto b = simulate(SimSpec::cosine(5, 20, 0.7, 2));
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l <= b.spec.L[k]; ++l) {
            std::vector<double> f(32);
            const double sign = (k + 1) % 2 == 0 ? 1.0 : -1.0;
            for (int h = 1; h <= 32; ++h)
                f[h - 1] = sign * 0.7 * std::cos(2.0 * std::numbers::pi * (h / 32.0) / (1.0 + l));
            EXPECT_EQ(b.params_true.mu[k][l], dwt_haar_approx(f, 3));
        }
}

TEST(Cosine, GlobalGridAveragesProjectionsOverSegment) {
    auto spec = SimSpec::cosine(4, 20, 1.0, 2);
    spec.grid = TimeGrid::Global;
    const auto b = simulate(spec);
    const auto& T = b.params_true.T;
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l <= spec.L[k]; ++l) {
            const double sign = (k + 1) % 2 == 0 ? 1.0 : -1.0;
            // a constant curve c projects to c * 2^{3/2} in every coefficient
            double avg = 0.0;
            for (int j = T[k][l]; j < T[k][l + 1]; ++j)
                avg += sign * std::cos(2.0 * std::numbers::pi * ((j + 1) / 20.0) / (1.0 + l));
            avg /= T[k][l + 1] - T[k][l];
            for (double v : b.params_true.mu[k][l]) EXPECT_NEAR(v, avg * std::pow(2.0, 1.5), 1e-12);
        }
}

TEST(Cosine, EmpiricalCellMeansWithinThreeStandardErrors) {
    // n * H = 2e4 samples per time unit, all drawn from cluster 1
    auto spec = SimSpec::cosine(625, 4, 1.0, 5);
    spec.K = 1;
    spec.L = {1};
    spec.noise_sd = 2.0;
    const auto b = simulate(spec);
    const auto f = detail::cosine_curve(1, 0, 1.0, 32);
    for (std::size_t j = 0; j < 2; ++j)
        for (std::size_t h = 0; h < 32; ++h) {
            double m = 0.0;
            for (std::size_t i = 0; i < 625; ++i) m += b.dataset.curves(i, j, h);
            m /= 625.0;
            EXPECT_NEAR(m, f[h], 3.0 * 2.0 / std::sqrt(625.0));
        }
    double overall = 0.0, truth = 0.0;
    for (std::size_t i = 0; i < 625; ++i)
        for (std::size_t h = 0; h < 32; ++h) overall += b.dataset.curves(i, 0, h);
    for (double v : f) truth += v;
    EXPECT_NEAR(overall / 625.0 / 32.0, truth / 32.0, 3.0 * 2.0 / std::sqrt(625.0 * 32.0));
}

TEST(Cosine, RejectsInvalidSpecs) {
    auto s = SimSpec::cosine(10, 10, -1.0, 0);
    EXPECT_THROW(simulate(s), std::invalid_argument);
    s = SimSpec::cosine(10, 3, 1.0, 0);  // L = 3 needs d >= 4
    EXPECT_THROW(simulate(s), std::invalid_argument);
    s = SimSpec::cosine(10, 10, 1.0, 0);
    s.H = 12;
    EXPECT_THROW(simulate(s), std::invalid_argument);
    s = SimSpec::cosine(10, 10, 1.0, 0);
    s.pi = {0.5, 0.5, 0.5};
    EXPECT_THROW(simulate(s), std::invalid_argument);
}

TEST(Toy, Layout) {
    const auto b = simulate(SimSpec::toy(4));
    EXPECT_EQ(b.dataset.curves.n(), 60u);
    EXPECT_EQ(b.dataset.curves.d(), 30u);
    EXPECT_EQ(b.dataset.curves.m(), 16u);
    EXPECT_EQ(b.params_true.T[0], (std::vector<int>{0, 10, 20, 30}));
    const double active = 2.0 * 2.0;  // 2 * 2^{J/2}, J = 2
    for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l)
            for (double v : b.params_true.mu[k][l]) EXPECT_NEAR(v, l == k ? active : 0.0, 1e-12);
    // a neutral-active-neutral cluster is fine, but clusters 1 and 3 each
    // have two adjacent neutral segments
    EXPECT_TRUE(has(b.violations, Assumption::AdjacentSegmentsDistinct));
    EXPECT_FALSE(has(b.violations, Assumption::ClustersDistinct));
}

TEST(Toy, OnePerCluster) {
    auto spec = SimSpec::toy(1);
    spec.n = 3;
    EXPECT_EQ(simulate(spec).z_true.z, (std::vector<int>{1, 2, 3}));
}

TEST(Toy, FitRecoversClustersAndSegments) {
    // averaged over replicates: in clusters 1 and 3 the second breakpoint
    // splits two identical neutral segments, so its position is arbitrary
    double clustering = 0.0, segmentation = 0.0;
    for (int r = 0; r < 10; ++r) {
        const auto b = simulate(SimSpec::toy(20 + r));
        const auto y = project_dataset(b.dataset, WaveletConfig{2, WaveletFamily::Haar});
        EMConfig em;
        em.seed = r;
        em.threads = 1;
        const auto f = fit(y, ModelConfig::make({2, 2, 2}), em);
        const auto rep = evaluate(b.z_true, b.params_true, f.partition, f.params, 30);
        clustering += rep.ari / 10.0;
        segmentation += segmentation_ari(b.params_true.T, f.params.T, 30, rep.permutation) / 10.0;
    }
    EXPECT_GE(clustering, 0.95);
    EXPECT_GE(segmentation, 0.7);
}
