#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mixseg/selection.hpp"
#include "mixseg/simulate.hpp"
#include "test_support.hpp"

using namespace mixseg;

namespace {

CoefficientTensor simulated(int n, int d, double alpha, std::uint64_t seed) {
    return project_dataset(simulate(SimSpec::cosine(n, d, alpha, seed)).dataset, WaveletConfig{});
}

EMConfig quick_em(std::uint64_t seed, int restarts = 3) {
    EMConfig em;
    em.seed = seed;
    em.n_restarts = restarts;
    em.threads = 1;
    return em;
}

FitReport report_for(const CoefficientTensor& y, ModelParams P) {
    FitReport f;
    f.params = std::move(P);
    f.loglik_trace = {log_likelihood(y, f.params)};
    return f;
}

}  // namespace

TEST(Bic, SingleSegmentByHand) {
    std::mt19937_64 rng(3);
    const auto y = oracle::random_tensor(10, 4, 2, rng);
    ModelParams P;
    P.pi = {1.0};
    P.T = {{0, 4}};
    P.mu = {{{0.1, -0.2}}};
    P.sigma = {{{1.3, 0.9}}};
    const auto f = report_for(y, P);

    double ll = 0.0;
    for (std::size_t i = 0; i < 10; ++i) ll += std::log(oracle::naive_cluster_density(y, P, i, 0));
    const double ndp = 10.0 * 4.0 * 2.0;
    // K = 1, L = 0: 3p log(ndp) / 2 + log(np) / 2 + log(ndp) / 2
    const double expect = ll - 0.5 * (3.0 * 2.0 * std::log(ndp) + std::log(20.0)) - 0.5 * std::log(ndp);
    EXPECT_NEAR(bic(y, f, ModelConfig::make({0})), expect, 1e-9);
}

TEST(Bic, SplittingAnEqualSegmentOnlyCosts) {
    std::mt19937_64 rng(5);
    const auto y = oracle::random_tensor(8, 6, 2, rng);
    ModelParams one;
    one.pi = {1.0};
    one.T = {{0, 6}};
    one.mu = {{{0.0, 0.5}}};
    one.sigma = {{{1.0, 2.0}}};
    ModelParams two = one;
    two.T = {{0, 3, 6}};
    two.mu = {{{0.0, 0.5}, {0.0, 0.5}}};
    two.sigma = {{{1.0, 2.0}, {1.0, 2.0}}};
    const auto f1 = report_for(y, one), f2 = report_for(y, two);
    EXPECT_NEAR(f1.loglik(), f2.loglik(), 1e-9);
    EXPECT_LT(bic(y, f2, ModelConfig::make({1})), bic(y, f1, ModelConfig::make({0})));
}

TEST(Bic, RejectsMismatchedConfig) {
    std::mt19937_64 rng(2);
    const auto y = oracle::random_tensor(4, 5, 2, rng);
    const auto f = report_for(y, oracle::random_params({1}, 5, 2, rng));
    EXPECT_THROW(bic(y, f, ModelConfig::make({2})), ShapeError);
    EXPECT_THROW(bic(y, f, ModelConfig::make({1, 1})), ShapeError);
}

TEST(Search, ZeroBudgetReturnsInitialFit) {
    const auto y = simulated(40, 20, 1.0, 2);
    const auto start = ModelConfig::make({1, 1});
    const auto res = search(y, start, quick_em(1), 0);
    EXPECT_EQ(res.best_config, start);
    ASSERT_EQ(res.search_trace.size(), 1u);
    EXPECT_EQ(res.search_trace[0].move, "initial");
    EXPECT_EQ(res.rounds, 0);
    EXPECT_NEAR(res.bic, bic(y, res.best_fit, start), 1e-9);
}

TEST(Search, CollapsesToSingleClusterWhenThereIsOne) {
    SimSpec spec = SimSpec::cosine(60, 20, 1.0, 8);
    spec.K = 1;
    spec.L = {1};
    const auto y = project_dataset(simulate(spec).dataset, WaveletConfig{});
    const auto res = search(y, ModelConfig::make({1, 1, 1}), quick_em(3), 10);
    EXPECT_EQ(res.best_config.K, 1);
    EXPECT_EQ(res.best_config.L, (std::vector<int>{1}));
}

TEST(Search, AcceptedStepsRaiseBicAndStayAdmissible) {
    const auto y = simulated(60, 30, 1.0, 4);
    const auto res = search(y, ModelConfig::make({1, 1}), quick_em(6), 8);
    double last = -std::numeric_limits<double>::infinity();
    for (const auto& s : res.search_trace) {
        EXPECT_LE(s.config.max_L() + 1, static_cast<int>(y.p()));
        EXPECT_TRUE(s.config.feasible(y.d()));
        if (!s.accepted) continue;
        EXPECT_GT(s.bic, last);
        last = s.bic;
    }
    EXPECT_EQ(last, res.bic);
    EXPECT_EQ(res.best_config, res.best_fit.config());
}

TEST(Search, FindsTrueConfigurationOnEasyData) {
    const auto y = simulated(100, 50, 1.0, 11);
    const auto res = search(y, ModelConfig::make({1, 1}), quick_em(2), 20);
    EXPECT_EQ(res.best_config.L, (std::vector<int>{1, 2, 3}));
}

TEST(Bic, TrueConfigurationBeatsNearbyAlternatives) {
    const auto y = simulated(100, 50, 1.0, 13);
    const auto truth = ModelConfig::make({1, 2, 3});
    const double b_true = bic(y, fit(y, truth, quick_em(1, 5)), truth);
    for (const auto& L : std::vector<std::vector<int>>{{1, 2}, {1, 2, 2}, {1, 2, 4}, {1, 1, 2, 3}, {2, 2, 3}}) {
        const auto cfg = ModelConfig::make(L);
        EXPECT_GT(b_true, bic(y, fit(y, cfg, quick_em(1, 5)), cfg)) << "L=" << ::testing::PrintToString(L);
    }
}

TEST(Search, Deterministic) {
    const auto y = simulated(40, 20, 0.7, 5);
    const auto a = search(y, ModelConfig::make({1}), quick_em(9), 4);
    const auto b = search(y, ModelConfig::make({1}), quick_em(9), 4);
    EXPECT_EQ(a.best_config, b.best_config);
    EXPECT_EQ(a.bic, b.bic);
    EXPECT_EQ(a.search_trace.size(), b.search_trace.size());
}
