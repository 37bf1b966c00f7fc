#include <gtest/gtest.h>

#include <random>

#include "mixseg/metrics.hpp"
#include "test_support.hpp"

using namespace mixseg;
using mixseg::oracle::random_labels;

namespace {

Partition relabel(const Partition& z, const std::vector<int>& map) {
    Partition out = z;
    for (auto& v : out.z) v = map[static_cast<std::size_t>(v - 1)];
    return out;
}

}  // namespace

TEST(Ari, Examples) {
    const Partition a{{1, 1, 2, 2, 3}};
    EXPECT_DOUBLE_EQ(ari(a, a), 1.0);
    EXPECT_DOUBLE_EQ(ari(Partition{{1, 1, 1, 2, 2, 2}}, Partition{{1, 1, 1, 1, 1, 1}}), 0.0);
    const Partition t{{1, 1, 1, 2, 2, 2}}, e{{1, 1, 2, 2, 2, 2}};
    EXPECT_NEAR(ari(t, e), 12.0 / 37.0, 1e-15);
    EXPECT_NEAR(ari(t, e), oracle::pair_count_ari(t.z, e.z), 1e-15);
    EXPECT_THROW(ari(t, Partition{{1, 2}}), ShapeError);
}

TEST(Ari, MatchesPairCountingOnRandomPairs) {
    std::mt19937_64 rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        const std::size_t n = 2 + rep % 30;
        const Partition x{random_labels(n, 1 + rep % 5, rng)}, y{random_labels(n, 1 + rep % 4, rng)};
        EXPECT_NEAR(ari(x, y), oracle::pair_count_ari(x.z, y.z), 1e-12);
    }
}

TEST(Ari, SymmetricAndLabelInvariant) {
    std::mt19937_64 rng(9);
    for (int rep = 0; rep < 50; ++rep) {
        const Partition x{random_labels(25, 4, rng)}, y{random_labels(25, 4, rng)};
        std::vector<int> map{1, 2, 3, 4};
        std::shuffle(map.begin(), map.end(), rng);
        EXPECT_NEAR(ari(x, y), ari(y, x), 1e-14);
        EXPECT_NEAR(ari(x, y), ari(relabel(x, map), y), 1e-14);
        EXPECT_NEAR(ari(x, y), ari(x, relabel(y, map)), 1e-14);
        EXPECT_LE(ari(x, y), 1.0);
    }
}

TEST(OptimalPermutation, Examples) {
    const auto swap = optimal_permutation(Partition{{1, 1, 2, 2}}, Partition{{2, 2, 1, 1}}, 2);
    EXPECT_EQ(swap.permutation, (std::vector<int>{2, 1}));
    EXPECT_EQ(swap.mismatches, 0);
    EXPECT_EQ(optimal_permutation(Partition{{1, 1, 2, 2}}, Partition{{2, 2, 2, 2}}, 2).mismatches, 2);
}

TEST(OptimalPermutation, MatchesExhaustiveSearch) {
    std::mt19937_64 rng(11);
    for (int K = 1; K <= 5; ++K)
        for (int rep = 0; rep < 40; ++rep) {
            const auto t = random_labels(20, K, rng), e = random_labels(20, K, rng);
            const auto m = optimal_permutation(Partition{t}, Partition{e}, K);
            EXPECT_EQ(m.mismatches, oracle::exhaustive_mismatches(t, e, K));
            // the returned permutation achieves the reported count
            int miss = 0;
            for (std::size_t i = 0; i < t.size(); ++i) miss += m.permutation[static_cast<std::size_t>(e[i] - 1)] != t[i];
            EXPECT_EQ(miss, m.mismatches);
            auto sorted = m.permutation;
            std::sort(sorted.begin(), sorted.end());
            for (int k = 0; k < K; ++k) EXPECT_EQ(sorted[static_cast<std::size_t>(k)], k + 1);
        }
}

TEST(Nce, Examples) {
    EXPECT_EQ(nce(Partition{{1, 2, 2, 3}}, Partition{{3, 1, 1, 2}}), 0.0);
    EXPECT_EQ(nce(Partition{{1, 1, 2, 2}}, Partition{{1, 2, 1, 2}}, 2), 0.5);
    EXPECT_EQ(nce(Partition{}, Partition{}), 0.0);
}

TEST(Nce, ZeroExactlyWhenAriIsOne) {
    std::mt19937_64 rng(13);
    for (int rep = 0; rep < 300; ++rep) {
        const int K = 1 + rep % 3;
        const Partition x{random_labels(6, K, rng)};
        Partition y{random_labels(6, K, rng)};
        if (rep % 4 == 0) {
            std::vector<int> map(static_cast<std::size_t>(K));
            std::iota(map.begin(), map.end(), 1);
            std::shuffle(map.begin(), map.end(), rng);
            y = relabel(x, map);
        }
        EXPECT_EQ(nce(x, y, K) == 0.0, ari(x, y) == 1.0) << ::testing::PrintToString(x.z) << " "
                                                         << ::testing::PrintToString(y.z);
    }
}

TEST(Hausdorff, Examples) {
    const std::vector<std::vector<int>> T{{0, 20, 50}, {0, 10, 30, 50}};
    EXPECT_EQ(*hausdorff(T, T, 50, {1, 2}).value, 0.0);
    auto off = T;
    off[0][1] = 25;
    EXPECT_DOUBLE_EQ(*hausdorff(T, off, 50, {1, 2}).value, 0.1);
    // aligned through a swap
    const std::vector<std::vector<int>> swapped{T[1], T[0]};
    EXPECT_EQ(*hausdorff(T, swapped, 50, {2, 1}).value, 0.0);

    const auto absent = hausdorff(T, {{0, 20, 50}, {0, 30, 50}}, 50, {1, 2});
    EXPECT_FALSE(absent.value.has_value());
    EXPECT_FALSE(absent.reason.empty());
    EXPECT_FALSE(hausdorff(T, {{0, 20, 50}}, 50, {1}).value.has_value());
    EXPECT_EQ(*hausdorff({{0, 50}}, {{0, 50}}, 50, {1}).value, 0.0);
}

TEST(Hausdorff, TriangleInequality) {
    std::mt19937_64 rng(17);
    const std::vector<int> L{1, 3};
    for (int rep = 0; rep < 100; ++rep) {
        const auto a = oracle::random_params(L, 30, 1, rng).T, b = oracle::random_params(L, 30, 1, rng).T,
                   c = oracle::random_params(L, 30, 1, rng).T;
        const std::vector<int> id{1, 2};
        EXPECT_LE(*hausdorff(a, c, 30, id).value, *hausdorff(a, b, 30, id).value + *hausdorff(b, c, 30, id).value + 1e-15);
        const double h = *hausdorff(a, b, 30, id).value;
        EXPECT_GE(h, 0.0);
        EXPECT_LE(h, 1.0);
    }
}

TEST(NearestBreakpointDistance, Examples) {
    const std::vector<std::vector<int>> T{{0, 10, 50}, {0, 20, 40, 50}};
    EXPECT_EQ(*nearest_breakpoint_distance(T, {0, 10, 20, 40, 50}, 50).value, 0.0);
    EXPECT_DOUBLE_EQ(*nearest_breakpoint_distance(T, {0, 12, 50}, 50).value, 28.0 / 50.0);
    EXPECT_FALSE(nearest_breakpoint_distance(T, {0, 50}, 50).value.has_value());
    EXPECT_EQ(*nearest_breakpoint_distance({{0, 50}}, {0, 50}, 50).value, 0.0);
}

TEST(ParamErrors, Examples) {
    std::mt19937_64 rng(19);
    const auto P = oracle::random_params({1, 2}, 10, 2, rng);
    for (const auto& v : param_errors(P, P, {1, 2}))
        for (double e : v) EXPECT_EQ(e, 0.0);

    auto Q = P;
    Q.mu[1][2][0] += 0.3;
    const auto err = param_errors(P, Q, {1, 2});
    ASSERT_EQ(err[1].size(), 6u);
    int nonzero = 0;
    for (const auto& v : err)
        for (double e : v)
            if (e != 0.0) {
                ++nonzero;
                EXPECT_NEAR(e, 0.3, 1e-12);
            }
    EXPECT_EQ(nonzero, 1);
    EXPECT_NEAR(err[1][4], 0.3, 1e-12);  // segment 2, r 0

    EXPECT_THROW(param_errors(P, Q, {2, 1}), ShapeError);
}

TEST(SegmentationAri, Examples) {
    EXPECT_EQ(segment_labels({0, 2, 5}, 5).z, (std::vector<int>{1, 1, 2, 2, 2}));
    const std::vector<std::vector<int>> T{{0, 10, 20, 30}, {0, 15, 30}};
    EXPECT_DOUBLE_EQ(segmentation_ari(T, T, 30, {1, 2}), 1.0);
    EXPECT_DOUBLE_EQ(segmentation_ari(T, {T[1], T[0]}, 30, {2, 1}), 1.0);
    // a missing breakpoint is penalized but still comparable
    const double partial = segmentation_ari(T, {{0, 10, 30}, {0, 15, 30}}, 30, {1, 2});
    EXPECT_LT(partial, 1.0);
    EXPECT_GT(partial, 0.5);
    EXPECT_THROW(segmentation_ari(T, {T[0]}, 30, {1}), ShapeError);
}

TEST(Evaluate, AlignsOnceAndReportsAbsentHausdorff) {
    std::mt19937_64 rng(23);
    const auto P = oracle::random_params({1, 2}, 12, 1, rng);
    const Partition z{{1, 1, 2, 2, 2}};
    const auto Q = permute_clusters(P, {1, 0});
    const auto rep = evaluate(z, P, Partition{{2, 2, 1, 1, 1}}, Q, 12);
    EXPECT_EQ(rep.ari, 1.0);
    EXPECT_EQ(rep.nce, 0.0);
    EXPECT_EQ(rep.permutation, (std::vector<int>{2, 1}));
    ASSERT_TRUE(rep.hausdorff.has_value());
    EXPECT_EQ(*rep.hausdorff, 0.0);
    EXPECT_EQ(rep.median_mu_error(), 0.0);

    ModelParams one;
    one.pi = {1.0};
    one.T = {P.T[0]};
    one.mu = {P.mu[0]};
    one.sigma = {P.sigma[0]};
    const auto mis = evaluate(z, P, Partition{{1, 1, 1, 1, 1}}, one, 12);
    EXPECT_FALSE(mis.hausdorff.has_value());
    EXPECT_EQ(mis.hausdorff_reason, "different numbers of clusters");
    EXPECT_DOUBLE_EQ(mis.nce, 0.4);
}
