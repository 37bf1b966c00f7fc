#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixseg/detail/parallel.hpp"
#include "mixseg/random.hpp"
#include "mixseg/types.hpp"
#include "mixseg/wavelet.hpp"

namespace mixseg {

enum class Scenario { CosineDGP, ToyNeutralActive };

// Where the cosine is evaluated. WithinUnit: sample h of every time unit sits
// at u_h = h / H, so each (cluster, segment) cell has one fixed curve and the
// true means are exactly piecewise constant. Global: every sample of unit j
// (1-based) sits at t_j = j / d, so the mean drifts inside a segment and the
// stored truth is the per-segment average of the projected curves.
enum class TimeGrid { WithinUnit, Global };

// Simulation settings. For CosineDGP, cluster k (1-based) in segment l draws
// every within-unit sample h = 1..H from
//   f_kl(u_h) = (-1)^k * alpha * cos(2 pi u_h / (1 + l)),  u_h = h / H,
// plus N(0, noise_sd^2) noise. For ToyNeutralActive, cluster k is "active"
// (N(active_mean, active_var)) in segment k-1 and "neutral"
// (N(neutral_mean, neutral_var)) everywhere else.
struct SimSpec {
    int n = 100;
    int d = 50;
    int H = 32;
    double alpha = 1.0;
    int K = 3;
    std::vector<int> L{1, 2, 3};
    std::vector<double> pi;           // empty: uniform
    std::vector<std::vector<int>> T;  // empty: evenly spaced per cluster
    double noise_sd = 1.0;
    std::uint64_t seed = 0;
    Scenario scenario = Scenario::CosineDGP;
    TimeGrid grid = TimeGrid::WithinUnit;
    int level = 3;  // wavelet depth used for params_true

    double neutral_mean = 0.0;
    double neutral_var = 0.1;
    double active_mean = 2.0;
    double active_var = 1.0;

    static SimSpec cosine(int n, int d, double alpha, std::uint64_t seed) {
        SimSpec s;
        s.n = n;
        s.d = d;
        s.alpha = alpha;
        s.seed = seed;
        return s;
    }

    static SimSpec toy(std::uint64_t seed) {
        SimSpec s;
        s.scenario = Scenario::ToyNeutralActive;
        s.n = 60;
        s.d = 30;
        s.H = 16;
        s.K = 3;
        s.L = {2, 2, 2};
        s.level = 2;
        s.alpha = 1.0;
        s.seed = seed;
        return s;
    }

    std::vector<double> resolved_pi() const {
        if (!pi.empty()) return pi;
        return std::vector<double>(static_cast<std::size_t>(K), 1.0 / K);
    }

    // Breakpoints floor(l * d / (L_k + 1)) when T is not given explicitly.
    std::vector<std::vector<int>> resolved_T() const {
        if (!T.empty()) return T;
        std::vector<std::vector<int>> out(static_cast<std::size_t>(K));
        for (int k = 0; k < K; ++k) {
            const int segs = L[k] + 1;
            for (int l = 0; l <= segs; ++l)
                out[k].push_back(static_cast<int>((static_cast<long long>(l) * d) / segs));
        }
        return out;
    }

    void check() const {
        if (n < 1 || d < 1 || H < 1) throw std::invalid_argument("simulation: n, d, H must be >= 1");
        if (K < 1 || static_cast<int>(L.size()) != K) throw std::invalid_argument("simulation: L must have K entries");
        if (!(noise_sd >= 0.0)) throw std::invalid_argument("simulation: noise_sd must be >= 0");
        if (scenario == Scenario::CosineDGP && !(alpha >= 0.0))
            throw std::invalid_argument("simulation: alpha must be >= 0");
        if (scenario == Scenario::ToyNeutralActive && (!(neutral_var >= 0.0) || !(active_var >= 0.0)))
            throw std::invalid_argument("simulation: variances must be >= 0");
        detail::check_haar_length(static_cast<std::size_t>(H), level);
        const auto p = resolved_pi();
        if (static_cast<int>(p.size()) != K) throw std::invalid_argument("simulation: pi must have K entries");
        double acc = 0.0;
        for (double v : p) {
            if (!(v > 0.0)) throw std::invalid_argument("simulation: pi entries must be positive");
            acc += v;
        }
        if (std::abs(acc - 1.0) > 1e-9) throw std::invalid_argument("simulation: pi must sum to 1");
        const auto t = resolved_T();
        if (static_cast<int>(t.size()) != K) throw std::invalid_argument("simulation: T must have K entries");
        for (int k = 0; k < K; ++k) {
            if (L[k] < 0 || static_cast<int>(t[k].size()) != L[k] + 2)
                throw std::invalid_argument("simulation: T[k] must have L[k]+2 entries");
            if (t[k].front() != 0 || t[k].back() != d)
                throw std::invalid_argument("simulation: T[k] must run from 0 to d");
            for (std::size_t l = 0; l + 1 < t[k].size(); ++l)
                if (t[k][l + 1] <= t[k][l])
                    throw std::invalid_argument("simulation: breakpoints must be strictly increasing (d too small?)");
        }
    }
};

struct SimBundle {
    FunctionalDataset dataset;
    Partition z_true;
    ModelParams params_true;  // coefficient space, at spec.level
    SimSpec spec;
    std::vector<Violation> violations;
};

namespace detail {

inline int segment_of(const std::vector<int>& T, int j) {
    // time unit j (0-based) lies in segment l when T[l] <= j < T[l+1]
    int l = 0;
    while (j >= T[static_cast<std::size_t>(l) + 1]) ++l;
    return l;
}

// Noiseless samples of cluster k1 (1-based), segment l, at time unit j
// (0-based) out of d.
inline std::vector<double> cosine_curve(int k1, int l, double alpha, int H, TimeGrid grid = TimeGrid::WithinUnit,
                                        int j = 0, int d = 1) {
    std::vector<double> f(static_cast<std::size_t>(H));
    const double sign = (k1 % 2 == 0) ? 1.0 : -1.0;
    for (int h = 1; h <= H; ++h) {
        const double u = grid == TimeGrid::WithinUnit ? static_cast<double>(h) / H : static_cast<double>(j + 1) / d;
        f[static_cast<std::size_t>(h - 1)] = sign * alpha * std::cos(2.0 * std::numbers::pi * u / (1.0 + l));
    }
    return f;
}

// Common driver: `cell_mean(k, l, j)` gives the noiseless within-unit curve
// and `cell_sd(k, l)` the noise standard deviation for that (cluster,
// segment). When `varies_in_time` is false the curve may not depend on j.
template <class MeanFn, class SdFn>
SimBundle generate(const SimSpec& spec, std::vector<int> labels, bool varies_in_time, MeanFn&& cell_mean,
                   SdFn&& cell_sd) {
    const SeedStream seeds(spec.seed);
    const auto T = spec.resolved_T();
    const auto n = static_cast<std::size_t>(spec.n), d = static_cast<std::size_t>(spec.d),
               H = static_cast<std::size_t>(spec.H);

    // means[k][j]: noiseless curve of cluster k at time unit j
    std::vector<std::vector<std::vector<double>>> means(static_cast<std::size_t>(spec.K));
    for (int k = 0; k < spec.K; ++k) {
        for (std::size_t j = 0; j < d; ++j) {
            const int l = segment_of(T[k], static_cast<int>(j));
            if (!varies_in_time && j > 0 && l == segment_of(T[k], static_cast<int>(j) - 1)) {
                means[k].push_back(means[k].back());
                continue;
            }
            means[k].push_back(cell_mean(k, l, static_cast<int>(j)));
        }
    }

    SimBundle b;
    b.spec = spec;
    b.z_true.z = std::move(labels);
    b.dataset.curves = Tensor3<double>(n, d, H);
    parallel_for(n, 1, [&](std::size_t i) {
        auto rng = seeds.engine("individual", i);
        std::normal_distribution<double> gauss(0.0, 1.0);
        const int k = b.z_true.z[i] - 1;
        for (std::size_t j = 0; j < d; ++j) {
            const int l = segment_of(T[k], static_cast<int>(j));
            const double sd = cell_sd(k, l);
            const auto& f = means[k][j];
            auto cell = b.dataset.curves.cell(i, j);
            for (std::size_t h = 0; h < H; ++h) cell[h] = f[h] + sd * gauss(rng);
        }
    });

    b.params_true.pi = spec.resolved_pi();
    b.params_true.T = T;
    const std::size_t p = H >> spec.level;
    b.params_true.mu.resize(static_cast<std::size_t>(spec.K));
    b.params_true.sigma.resize(static_cast<std::size_t>(spec.K));
    for (int k = 0; k < spec.K; ++k)
        for (int l = 0; l <= spec.L[k]; ++l) {
            const auto t0 = static_cast<std::size_t>(T[k][l]), t1 = static_cast<std::size_t>(T[k][l + 1]);
            auto mu = dwt_haar_approx<double>(means[k][t0], spec.level);
            if (varies_in_time) {
                for (std::size_t j = t0 + 1; j < t1; ++j) {
                    const auto c = dwt_haar_approx<double>(means[k][j], spec.level);
                    for (std::size_t r = 0; r < p; ++r) mu[r] += c[r];
                }
                for (auto& v : mu) v /= static_cast<double>(t1 - t0);
            }
            b.params_true.mu[k].push_back(std::move(mu));
            const double sd = cell_sd(k, l);
            // orthonormal projection keeps white-noise variance per coefficient
            b.params_true.sigma[k].push_back(std::vector<double>(p, sd * sd));
        }
    ModelConfig cfg;
    cfg.K = spec.K;
    cfg.L = spec.L;
    b.violations = validate_params(b.params_true, cfg, d, p);
    return b;
}

}  // namespace detail

// Cosine generator. Labels are drawn i.i.d. from pi.
inline SimBundle generate_cosine(const SimSpec& spec) {
    if (spec.scenario != Scenario::CosineDGP) throw std::invalid_argument("generate_cosine: wrong scenario");
    spec.check();
    const SeedStream seeds(spec.seed);
    auto rng = seeds.engine("labels");
    const auto pi = spec.resolved_pi();
    std::discrete_distribution<int> draw(pi.begin(), pi.end());
    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (auto& z : labels) z = draw(rng) + 1;
    return detail::generate(
        spec, std::move(labels), spec.grid == TimeGrid::Global,
        [&](int k, int l, int j) { return detail::cosine_curve(k + 1, l, spec.alpha, spec.H, spec.grid, j, spec.d); },
        [&](int, int) { return spec.noise_sd; });
}

// Neutral/active toy generator. Labels cycle 1..K so every cluster is
// represented whenever n >= K.
inline SimBundle generate_toy(const SimSpec& spec) {
    if (spec.scenario != Scenario::ToyNeutralActive) throw std::invalid_argument("generate_toy: wrong scenario");
    spec.check();
    std::vector<int> labels(static_cast<std::size_t>(spec.n));
    for (std::size_t i = 0; i < labels.size(); ++i) labels[i] = static_cast<int>(i % spec.K) + 1;
    auto active = [](int k, int l) { return l == k; };
    return detail::generate(
        spec, std::move(labels), false,
        [&](int k, int l, int) {
            return std::vector<double>(static_cast<std::size_t>(spec.H),
                                       active(k, l) ? spec.active_mean : spec.neutral_mean);
        },
        [&](int k, int l) { return std::sqrt(active(k, l) ? spec.active_var : spec.neutral_var); });
}

inline SimBundle simulate(const SimSpec& spec) {
    return spec.scenario == Scenario::CosineDGP ? generate_cosine(spec) : generate_toy(spec);
}

}  // namespace mixseg
