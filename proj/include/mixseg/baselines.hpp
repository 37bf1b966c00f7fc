#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixseg/em.hpp"
#include "mixseg/random.hpp"
#include "mixseg/segcost.hpp"
#include "mixseg/types.hpp"

namespace mixseg {

enum class BaselineKind { SimpleMix, SimpleSeg };

// Attempt limit for SimpleMix when restarts keep producing empty clusters.
inline constexpr int simple_mix_max_attempts = 100;

namespace detail {

// Gaussian mixture on flattened (j, r) coordinates: cluster means mu_k(j, r),
// one variance per coordinate shared by all clusters. Parameters are stored
// as a ModelParams whose every time unit is its own segment, so the usual
// likelihood and E-step apply unchanged.
inline ModelParams simple_mix_m_step(const CoefficientTensor& y, const Responsibilities& resp, double floor) {
    const std::size_t n = y.n(), d = y.d(), p = y.p(), K = resp.K();
    const double eps = empty_cluster_threshold(n, K);
    std::vector<double> mass(K);
    for (std::size_t k = 0; k < K; ++k) {
        mass[k] = resp.column_sum(k);
        if (mass[k] < eps) throw EmptyClusterError(static_cast<int>(k), mass[k]);
    }
    ModelParams P;
    P.pi = m_step_pi(resp);
    P.T.assign(K, {});
    P.mu.assign(K, std::vector<std::vector<double>>(d, std::vector<double>(p, 0.0)));
    for (std::size_t k = 0; k < K; ++k) {
        for (std::size_t j = 0; j <= d; ++j) P.T[k].push_back(static_cast<int>(j));
        for (std::size_t i = 0; i < n; ++i) {
            const double s = resp(i, k);
            if (s == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t r = 0; r < p; ++r) P.mu[k][j][r] += s * y.y(i, j, r);
        }
        for (auto& row : P.mu[k])
            for (auto& v : row) v /= mass[k];
    }
    std::vector<std::vector<double>> var(d, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < K; ++k) {
            const double s = resp(i, k);
            if (s == 0.0) continue;
            for (std::size_t j = 0; j < d; ++j)
                for (std::size_t r = 0; r < p; ++r) {
                    const double e = y.y(i, j, r) - P.mu[k][j][r];
                    var[j][r] += s * e * e;
                }
        }
    for (auto& row : var)
        for (auto& v : row) v = std::max(v / static_cast<double>(n), floor);
    P.sigma.assign(K, var);
    return P;
}

inline FitReport simple_mix_run(const CoefficientTensor& y, const EMConfig& em, Responsibilities resp, double floor) {
    FitReport rep;
    double prev = 0.0;
    for (int iter = 1; iter <= em.max_iter; ++iter) {
        auto P = simple_mix_m_step(y, resp, floor);
        auto es = e_step_with_loglik(y, P);
        rep.params = std::move(P);
        rep.loglik_trace.push_back(es.loglik);
        rep.n_iter = iter;
        resp = std::move(es.resp);
        if (iter > 1 && std::abs(es.loglik - prev) <= em.rel_tol * std::abs(prev)) {
            rep.converged = true;
            break;
        }
        prev = es.loglik;
    }
    rep.responsibilities = std::move(resp);
    rep.partition = hard_assign(rep.responsibilities);
    return rep;
}

}  // namespace detail

// Plain Gaussian mixture without time segmentation. Runs em.n_restarts
// successful restarts, replacing restarts that empty a cluster, with at most
// 100 attempts overall.
inline FitReport fit_simple_mix(const CoefficientTensor& y, int K, const EMConfig& em) {
    y.check();
    em.check();
    if (K < 1) throw std::invalid_argument("fit_simple_mix: K must be >= 1");
    const double floor = build_stats(y).variance_floor;
    const SeedStream seeds(em.seed);
    const int wanted = std::min(em.n_restarts, simple_mix_max_attempts);

    std::optional<FitReport> best;
    int ok = 0, degenerate = 0;
    for (int attempt = 0; attempt < simple_mix_max_attempts && ok < wanted; ++attempt) {
        auto rng = seeds.engine("simplemix-restart", static_cast<std::uint64_t>(attempt));
        auto init = initial_responsibilities(y, static_cast<std::size_t>(K), em.init, rng);
        try {
            auto rep = detail::simple_mix_run(y, em, std::move(init), floor);
            ++ok;
            if (!best || rep.loglik() > best->loglik()) {
                rep.best_restart = attempt;
                best = std::move(rep);
            }
        } catch (const EmptyClusterError&) {
            ++degenerate;
        }
    }
    if (!best)
        throw DegenerateFitError("SimpleMix: all " + std::to_string(simple_mix_max_attempts) +
                                 " attempts produced an empty cluster");
    best->degenerate_restarts = degenerate;
    return std::move(*best);
}

// Changepoint detection on the pooled population: unit weights, one
// pseudo-cluster, total_breakpoints breakpoints.
inline Segmentation fit_simple_seg(const CoefficientTensor& y, int total_breakpoints, int min_segment_len = 1) {
    y.check();
    if (total_breakpoints < 0) throw std::invalid_argument("fit_simple_seg: breakpoint count must be >= 0");
    if (static_cast<std::size_t>(total_breakpoints + 1) * static_cast<std::size_t>(std::max(min_segment_len, 1)) >
        y.d())
        throw std::invalid_argument("fit_simple_seg: " + std::to_string(total_breakpoints) +
                                    " breakpoints do not fit in d=" + std::to_string(y.d()));
    const auto stats = build_stats(y);
    const std::vector<double> ones(y.n(), 1.0);
    return dp_segment(cost_table(stats, ones, min_segment_len), total_breakpoints, min_segment_len);
}

}  // namespace mixseg
