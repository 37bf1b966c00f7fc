#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "mixseg/em.hpp"
#include "mixseg/random.hpp"
#include "mixseg/types.hpp"

namespace mixseg {

// BIC for a fitted mixture of segmentations (higher is better):
//   loglik - (K-1)/2 log n
//          - 1/2 sum_k [ 3p(L_k+1) log(ndp) + sum_l log(((T_{k,l+1}-T_{kl})/d) n p) ]
//          - K/2 log(ndp)
inline double bic(const CoefficientTensor& y, const FitReport& fit, const ModelConfig& config) {
    const auto& P = fit.params;
    if (P.K() != config.K) throw ShapeError("bic: K mismatch between fit and config");
    for (int k = 0; k < config.K; ++k)
        if (P.L(k) != config.L[k]) throw ShapeError("bic: L mismatch between fit and config");
    P.check(y.d(), y.p());
    const double n = static_cast<double>(y.n()), d = static_cast<double>(y.d()), p = static_cast<double>(y.p());
    const double log_ndp = std::log(n * d * p);
    double penalty = 0.5 * (config.K - 1) * std::log(n);
    for (int k = 0; k < config.K; ++k) {
        double seg = 3.0 * p * (config.L[k] + 1) * log_ndp;
        for (std::size_t l = 0; l + 1 < P.T[k].size(); ++l)
            seg += std::log((P.T[k][l + 1] - P.T[k][l]) / d * n * p);
        penalty += 0.5 * seg;
    }
    penalty += 0.5 * config.K * log_ndp;
    return log_likelihood(y, P) - penalty;
}

struct SearchStep {
    ModelConfig config;
    double bic = -std::numeric_limits<double>::infinity();
    bool accepted = false;
    std::string move;  // "initial", "remove-cluster k", "add-cluster", "L[k]-1", "L[k]+1"
    int round = 0;
};

struct SelectionResult {
    ModelConfig best_config;
    FitReport best_fit;
    double bic = -std::numeric_limits<double>::infinity();
    std::vector<SearchStep> search_trace;
    int rounds = 0;
    bool budget_exhausted = false;
};

namespace detail {

struct Neighbor {
    std::vector<int> L;  // unsorted, aligned with warm-start columns
    Responsibilities warm;
    std::string move;
};

// Sorts a neighbor's L ascending and reorders the warm start to match.
inline std::pair<ModelConfig, Responsibilities> canonical_neighbor(const Neighbor& nb, int min_segment_len) {
    std::vector<int> order(nb.L.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) { return nb.L[a] < nb.L[b]; });
    ModelConfig cfg = ModelConfig::make(nb.L, min_segment_len);
    return {cfg, permute_clusters(nb.warm, order)};
}

inline std::vector<Neighbor> neighbors(const ModelConfig& cur, const Responsibilities& resp) {
    const int K = cur.K;
    const std::size_t n = resp.n();
    std::vector<Neighbor> out;

    // backward: drop cluster k, spread its mass uniformly over the survivors
    if (K > 1) {
        for (int k = 0; k < K; ++k) {
            Neighbor nb;
            nb.move = "remove-cluster " + std::to_string(k + 1);
            for (int c = 0; c < K; ++c)
                if (c != k) nb.L.push_back(cur.L[c]);
            nb.warm = Responsibilities(n, static_cast<std::size_t>(K - 1));
            for (std::size_t i = 0; i < n; ++i) {
                const double share = resp(i, static_cast<std::size_t>(k)) / (K - 1);
                std::size_t col = 0;
                for (int c = 0; c < K; ++c)
                    if (c != k) nb.warm(i, col++) = resp(i, static_cast<std::size_t>(c)) + share;
            }
            out.push_back(std::move(nb));
        }
    }

    // forward: a new one-breakpoint cluster seeded by the least confidently
    // assigned decile of individuals
    {
        Neighbor nb;
        nb.move = "add-cluster";
        nb.L = cur.L;
        nb.L.push_back(1);
        std::vector<std::size_t> idx(n);
        std::iota(idx.begin(), idx.end(), 0);
        auto confidence = [&](std::size_t i) {
            auto row = resp.row(i);
            return *std::max_element(row.begin(), row.end());
        };
        std::stable_sort(idx.begin(), idx.end(),
                         [&](std::size_t a, std::size_t b) { return confidence(a) < confidence(b); });
        const std::size_t seeded = std::max<std::size_t>(1, (n + 9) / 10);
        nb.warm = Responsibilities(n, static_cast<std::size_t>(K + 1));
        for (std::size_t i = 0; i < n; ++i)
            for (int c = 0; c < K; ++c) nb.warm(i, static_cast<std::size_t>(c)) = resp(i, static_cast<std::size_t>(c));
        for (std::size_t q = 0; q < seeded && q < n; ++q) {
            const std::size_t i = idx[q];
            for (int c = 0; c < K; ++c) nb.warm(i, static_cast<std::size_t>(c)) = 0.0;
            nb.warm(i, static_cast<std::size_t>(K)) = 1.0;
        }
        out.push_back(std::move(nb));
    }

    // breakpoint moves with K fixed
    for (int k = 0; k < K; ++k)
        for (int delta : {-1, +1}) {
            if (cur.L[k] + delta < 0) continue;
            Neighbor nb;
            nb.move = "L[" + std::to_string(k + 1) + "]" + (delta < 0 ? "-1" : "+1");
            nb.L = cur.L;
            nb.L[k] += delta;
            nb.warm = resp;
            out.push_back(std::move(nb));
        }
    return out;
}

}  // namespace detail

// Iterated best-improvement local search over (K, L) by BIC. Each round fits
// every admissible neighbor of the current configuration (one warm start
// plus random restarts) and moves to the best one if it raises BIC. Stops
// when no neighbor improves or after `budget` rounds.
inline SelectionResult search(const CoefficientTensor& y, const ModelConfig& initial, const EMConfig& em, int budget) {
    y.check();
    initial.check(y.d());
    const SeedStream seeds(em.seed);

    SelectionResult res;
    EMConfig em0 = em;
    em0.seed = seeds.derive("search-initial");
    res.best_fit = fit(y, initial, em0);
    res.best_config = initial;
    res.bic = bic(y, res.best_fit, initial);
    res.search_trace.push_back({initial, res.bic, true, "initial", 0});

    auto admissible = [&](const ModelConfig& c) {
        return c.K >= 1 && c.max_L() + 1 <= static_cast<int>(y.p()) && c.feasible(y.d());
    };

    for (int round = 1; round <= budget; ++round) {
        res.rounds = round;
        std::optional<FitReport> best_fit;
        ModelConfig best_cfg;
        double best_bic = -std::numeric_limits<double>::infinity();
        std::string best_move;
        std::vector<ModelConfig> seen;

        const auto cands = detail::neighbors(res.best_config, res.best_fit.responsibilities);
        for (std::size_t c = 0; c < cands.size(); ++c) {
            auto [cfg, warm] = detail::canonical_neighbor(cands[c], initial.min_segment_len);
            if (!admissible(cfg)) continue;
            if (std::find(seen.begin(), seen.end(), cfg) != seen.end()) continue;
            seen.push_back(cfg);

            EMConfig emc = em;
            emc.seed = seeds.derive("search", static_cast<std::uint64_t>(round) * 1000003ULL + c);
            SearchStep step{cfg, -std::numeric_limits<double>::infinity(), false, cands[c].move, round};
            try {
                const Responsibilities warm_starts[] = {warm};
                auto f = fit(y, cfg, emc, warm_starts);
                step.bic = bic(y, f, cfg);
                if (step.bic > best_bic) {
                    best_bic = step.bic;
                    best_cfg = cfg;
                    best_fit = std::move(f);
                    best_move = cands[c].move;
                }
            } catch (const DegenerateFitError&) {
                step.move += " (degenerate)";
            }
            res.search_trace.push_back(step);
        }

        if (!best_fit || !(best_bic > res.bic)) return res;
        for (auto it = res.search_trace.rbegin(); it != res.search_trace.rend() && it->round == round; ++it)
            if (it->config == best_cfg && it->move == best_move) {
                it->accepted = true;
                break;
            }
        res.best_config = best_cfg;
        res.best_fit = std::move(*best_fit);
        res.bic = best_bic;
        if (round == budget) res.budget_exhausted = true;
    }
    return res;
}

}  // namespace mixseg
