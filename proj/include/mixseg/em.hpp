#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixseg/detail/parallel.hpp"
#include "mixseg/random.hpp"
#include "mixseg/segcost.hpp"
#include "mixseg/types.hpp"

namespace mixseg {

enum class InitMethod { RandomResp, KMeansSummary };

struct EMConfig {
    int max_iter = 200;
    double rel_tol = 1e-6;
    int n_restarts = 10;
    std::uint64_t seed = 0;
    InitMethod init = InitMethod::RandomResp;
    // Worker threads for independent restarts; 0 uses the hardware count.
    int threads = 0;
    // After the restarts, rerun EM from the best responsibilities with pairs
    // of clusters (of different L) swapped, keeping any improvement.
    bool swap_polish = true;

    void check() const {
        if (max_iter < 1) throw std::invalid_argument("max_iter must be >= 1");
        if (!(rel_tol > 0.0)) throw std::invalid_argument("rel_tol must be > 0");
        if (n_restarts < 1) throw std::invalid_argument("n_restarts must be >= 1");
    }
};

// A cluster's total responsibility fell below the emptiness threshold.
class EmptyClusterError : public std::runtime_error {
public:
    EmptyClusterError(int cluster, double mass)
        : std::runtime_error("cluster " + std::to_string(cluster + 1) + " is empty (total responsibility " +
                             std::to_string(mass) + ")"),
          cluster(cluster),
          mass(mass) {}
    int cluster;
    double mass;
};

// Every restart of a fit was abandoned.
class DegenerateFitError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Threshold below which a cluster counts as empty: 1e-3 * n / K.
inline double empty_cluster_threshold(std::size_t n, std::size_t K) {
    return 1e-3 * static_cast<double>(n) / static_cast<double>(K);
}

// n x K matrix (row-major) of log p(Y_i | z_i = k), excluding log pi_k.
inline std::vector<double> cluster_log_densities(const CoefficientTensor& y, const ModelParams& params) {
    const std::size_t n = y.n(), p = y.p(), K = params.pi.size();
    std::vector<double> out(n * K, 0.0);
    const double log2pi = std::log(2.0 * std::numbers::pi);
    std::vector<double> inv2s(p);
    for (std::size_t k = 0; k < K; ++k) {
        const auto& T = params.T[k];
        for (std::size_t l = 0; l + 1 < T.size(); ++l) {
            const auto& mu = params.mu[k][l];
            const auto& sg = params.sigma[k][l];
            double seg_norm = 0.0;
            for (std::size_t r = 0; r < p; ++r) {
                seg_norm += -0.5 * (log2pi + std::log(sg[r]));
                inv2s[r] = 0.5 / sg[r];
            }
            const auto t1 = static_cast<std::size_t>(T[l]), t2 = static_cast<std::size_t>(T[l + 1]);
            const double block_norm = seg_norm * static_cast<double>(t2 - t1);
            for (std::size_t i = 0; i < n; ++i) {
                double acc = block_norm;
                for (std::size_t j = t1; j < t2; ++j) {
                    auto cell = y.y.cell(i, j);
                    for (std::size_t r = 0; r < p; ++r) {
                        const double e = cell[r] - mu[r];
                        acc -= e * e * inv2s[r];
                    }
                }
                out[i * K + k] += acc;
            }
        }
    }
    return out;
}

namespace detail {

inline void check_params_for(const CoefficientTensor& y, const ModelParams& params) {
    y.check();
    params.check(y.d(), y.p());
}

// Normalizes one row of log-weights in place into probabilities; returns
// the row's log-sum-exp.
inline double softmax_row(std::span<double> row) {
    const double mx = *std::max_element(row.begin(), row.end());
    if (!std::isfinite(mx)) {
        // every component has zero density: fall back to uniform
        for (double& v : row) v = 1.0 / static_cast<double>(row.size());
        return mx;
    }
    double acc = 0.0;
    for (double& v : row) {
        v = std::exp(v - mx);
        acc += v;
    }
    for (double& v : row) v /= acc;
    return mx + std::log(acc);
}

}  // namespace detail

struct EStepResult {
    Responsibilities resp;
    double loglik = 0.0;
};

// Posterior memberships and the observed-data log-likelihood in one pass.
inline EStepResult e_step_with_loglik(const CoefficientTensor& y, const ModelParams& params) {
    detail::check_params_for(y, params);
    const std::size_t n = y.n(), K = params.pi.size();
    auto logd = cluster_log_densities(y, params);
    EStepResult out{Responsibilities(n, K), 0.0};
    std::vector<double> log_pi(K);
    for (std::size_t k = 0; k < K; ++k) log_pi[k] = std::log(params.pi[k]);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = out.resp.row(i);
        for (std::size_t k = 0; k < K; ++k) row[k] = log_pi[k] + logd[i * K + k];
        out.loglik += detail::softmax_row(row);
    }
    return out;
}

inline double log_likelihood(const CoefficientTensor& y, const ModelParams& params) {
    return e_step_with_loglik(y, params).loglik;
}

inline Responsibilities e_step(const CoefficientTensor& y, const ModelParams& params) {
    return e_step_with_loglik(y, params).resp;
}

// pi_k = s_{+k} / n
inline std::vector<double> m_step_pi(const Responsibilities& resp) {
    std::vector<double> pi(resp.K(), 0.0);
    for (std::size_t i = 0; i < resp.n(); ++i)
        for (std::size_t k = 0; k < resp.K(); ++k) pi[k] += resp(i, k);
    for (double& v : pi) v /= static_cast<double>(resp.n());
    return pi;
}

// Expected complete-data log-likelihood sum_i sum_k s_ik [log pi_k + log p(Y_i | k)].
inline double q_value(const CoefficientTensor& y, const ModelParams& params, const Responsibilities& resp) {
    detail::check_params_for(y, params);
    const std::size_t K = params.pi.size();
    if (resp.n() != y.n() || resp.K() != K) throw ShapeError("q_value: responsibilities shape mismatch");
    const auto logd = cluster_log_densities(y, params);
    double q = 0.0;
    for (std::size_t i = 0; i < y.n(); ++i)
        for (std::size_t k = 0; k < K; ++k) {
            const double s = resp(i, k);
            if (s > 0.0) q += s * (std::log(params.pi[k]) + logd[i * K + k]);
        }
    return q;
}

struct Segmentation {
    std::vector<int> breakpoints;  // length L+2, starts at 0, ends at d
    double cost = 0.0;
};

// Optimal partition of (0, d] into L+1 segments minimizing the summed table
// costs, by the Bellman recurrence C[s][t] = min_t' C[s-1][t'] + cost(t', t).
// Ties resolve to the smallest earlier breakpoint.
inline Segmentation dp_segment(const CostTable& costs, int L, int min_segment_len) {
    const std::size_t d = costs.d();
    if (L < 0) throw std::invalid_argument("dp_segment: L must be >= 0");
    if (min_segment_len < 1) throw std::invalid_argument("dp_segment: min_segment_len must be >= 1");
    const std::size_t m = static_cast<std::size_t>(min_segment_len);
    const std::size_t S = static_cast<std::size_t>(L) + 1;
    if (S * m > d)
        throw std::invalid_argument("dp_segment: " + std::to_string(S) + " segments of length >= " +
                                    std::to_string(m) + " do not fit in d=" + std::to_string(d));

    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> prev(d + 1, inf), cur(d + 1, inf);
    // back[s][t]: start of the last segment in the best s+1 segment split of (0, t]
    std::vector<std::vector<std::size_t>> back(S, std::vector<std::size_t>(d + 1, 0));
    for (std::size_t t = m; t <= d - (S - 1) * m; ++t) prev[t] = costs(0, t);
    for (std::size_t s = 1; s < S; ++s) {
        std::fill(cur.begin(), cur.end(), inf);
        const std::size_t t_lo = (s + 1) * m, t_hi = d - (S - 1 - s) * m;
        for (std::size_t t = t_lo; t <= t_hi; ++t) {
            double best = inf;
            std::size_t arg = 0;
            for (std::size_t tp = s * m; tp + m <= t; ++tp) {
                const double v = prev[tp] + costs(tp, t);
                if (v < best) {
                    best = v;
                    arg = tp;
                }
            }
            cur[t] = best;
            back[s][t] = arg;
        }
        prev.swap(cur);
    }
    if (!std::isfinite(prev[d])) throw std::runtime_error("dp_segment: no finite-cost segmentation");

    Segmentation out;
    out.cost = prev[d];
    out.breakpoints.assign(S + 1, 0);
    out.breakpoints[S] = static_cast<int>(d);
    std::size_t t = d;
    for (std::size_t s = S - 1; s >= 1; --s) {
        t = back[s][t];
        out.breakpoints[s] = static_cast<int>(t);
    }
    return out;
}

// Exact maximization of Q given responsibilities: for each cluster, optimal
// breakpoints by dynamic programming on the weighted segment costs, then the
// closed-form segment means and variances; pi from column sums.
inline ModelParams m_step(const CoefficientTensor& y, const SegmentStats& stats, const Responsibilities& resp,
                          const ModelConfig& config) {
    config.check(y.d());
    if (resp.n() != y.n() || static_cast<int>(resp.K()) != config.K)
        throw ShapeError("m_step: responsibilities shape mismatch");
    const double eps = empty_cluster_threshold(y.n(), resp.K());
    for (std::size_t k = 0; k < resp.K(); ++k) {
        const double mass = resp.column_sum(k);
        if (mass < eps) throw EmptyClusterError(static_cast<int>(k), mass);
    }

    ModelParams params;
    params.pi = m_step_pi(resp);
    params.T.resize(config.K);
    params.mu.resize(config.K);
    params.sigma.resize(config.K);
    for (int k = 0; k < config.K; ++k) {
        const auto w = resp.column(static_cast<std::size_t>(k));
        const WeightedSegmentStats ws(stats, w);
        const auto table = cost_table(ws, y.d(), config.min_segment_len);
        auto seg = dp_segment(table, config.L[k], config.min_segment_len);
        for (std::size_t l = 0; l + 1 < seg.breakpoints.size(); ++l) {
            auto fit = ws.fit(static_cast<std::size_t>(seg.breakpoints[l]),
                              static_cast<std::size_t>(seg.breakpoints[l + 1]));
            params.mu[k].push_back(std::move(fit.mu_hat));
            params.sigma[k].push_back(std::move(fit.sigma_hat));
        }
        params.T[k] = std::move(seg.breakpoints);
    }
    return params;
}

inline ModelParams m_step(const CoefficientTensor& y, const Responsibilities& resp, const ModelConfig& config) {
    return m_step(y, build_stats(y), resp, config);
}

// Rows drawn from a symmetric Dirichlet(1).
inline Responsibilities random_responsibilities(std::size_t n, std::size_t K, std::mt19937_64& rng) {
    Responsibilities resp(n, K);
    std::exponential_distribution<double> expo(1.0);
    for (std::size_t i = 0; i < n; ++i) {
        auto row = resp.row(i);
        double acc = 0.0;
        for (auto& v : row) acc += (v = expo(rng));
        for (auto& v : row) v /= acc;
    }
    return resp;
}

// k-means (k-means++ seeding, Lloyd iterations) on per-curve time-averaged
// coefficient vectors, softened to 0.9 on the assigned cluster.
inline Responsibilities kmeans_responsibilities(const CoefficientTensor& y, std::size_t K, std::mt19937_64& rng) {
    const std::size_t n = y.n(), d = y.d(), p = y.p();
    std::vector<std::vector<double>> x(n, std::vector<double>(p, 0.0));
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t r = 0; r < p; ++r) x[i][r] += y.y(i, j, r);
        for (auto& v : x[i]) v /= static_cast<double>(d);
    }
    auto dist2 = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t r = 0; r < p; ++r) s += (a[r] - b[r]) * (a[r] - b[r]);
        return s;
    };

    std::vector<std::vector<double>> centers;
    std::uniform_int_distribution<std::size_t> pick(0, n - 1);
    centers.push_back(x[pick(rng)]);
    std::vector<double> dmin(n);
    while (centers.size() < K) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            dmin[i] = std::numeric_limits<double>::infinity();
            for (const auto& c : centers) dmin[i] = std::min(dmin[i], dist2(x[i], c));
            total += dmin[i];
        }
        if (!(total > 0.0)) {
            centers.push_back(x[pick(rng)]);
            continue;
        }
        std::uniform_real_distribution<double> u(0.0, total);
        double target = u(rng), run = 0.0;
        std::size_t chosen = n - 1;
        for (std::size_t i = 0; i < n; ++i) {
            run += dmin[i];
            if (run >= target) {
                chosen = i;
                break;
            }
        }
        centers.push_back(x[chosen]);
    }

    std::vector<std::size_t> label(n, 0);
    for (int iter = 0; iter < 100; ++iter) {
        bool changed = false;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < K; ++k) {
                const double v = dist2(x[i], centers[k]);
                if (v < bd) {
                    bd = v;
                    best = k;
                }
            }
            changed |= best != label[i];
            label[i] = best;
        }
        std::vector<std::vector<double>> sum(K, std::vector<double>(p, 0.0));
        std::vector<std::size_t> count(K, 0);
        for (std::size_t i = 0; i < n; ++i) {
            ++count[label[i]];
            for (std::size_t r = 0; r < p; ++r) sum[label[i]][r] += x[i][r];
        }
        for (std::size_t k = 0; k < K; ++k)
            if (count[k] > 0)
                for (std::size_t r = 0; r < p; ++r) centers[k][r] = sum[k][r] / static_cast<double>(count[k]);
        if (!changed) break;
    }

    Responsibilities resp(n, K);
    const double hi = K == 1 ? 1.0 : 0.9;
    const double lo = K == 1 ? 0.0 : 0.1 / static_cast<double>(K - 1);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t k = 0; k < K; ++k) resp(i, k) = k == label[i] ? hi : lo;
    return resp;
}

inline Responsibilities initial_responsibilities(const CoefficientTensor& y, std::size_t K, InitMethod method,
                                                 std::mt19937_64& rng) {
    switch (method) {
        case InitMethod::KMeansSummary: return kmeans_responsibilities(y, K, rng);
        case InitMethod::RandomResp: break;
    }
    return random_responsibilities(y.n(), K, rng);
}

// One EM run from the given responsibilities. Throws EmptyClusterError if a
// cluster empties along the way. The report is not canonicalized.
inline FitReport run_em(const CoefficientTensor& y, const SegmentStats& stats, const ModelConfig& config,
                        const EMConfig& em, Responsibilities resp) {
    FitReport report;
    report.min_segment_len = config.min_segment_len;
    double prev = 0.0;
    for (int iter = 1; iter <= em.max_iter; ++iter) {
        ModelParams params = m_step(y, stats, resp, config);
        auto es = e_step_with_loglik(y, params);
        report.params = std::move(params);
        report.loglik_trace.push_back(es.loglik);
        report.n_iter = iter;
        resp = std::move(es.resp);
        if (iter > 1) {
            const double scale = std::max(std::abs(prev), std::numeric_limits<double>::min());
            if (std::abs(es.loglik - prev) <= em.rel_tol * scale) {
                report.converged = true;
                break;
            }
        }
        prev = es.loglik;
    }
    report.responsibilities = std::move(resp);
    report.partition = hard_assign(report.responsibilities);
    return report;
}

// Which cluster carries which breakpoint count is a discrete choice EM
// cannot revisit once clusters separate. Starting from the best run, swap the
// responsibility columns of two clusters with different L, rerun EM, and keep
// the result when the log-likelihood improves; repeat until no swap helps.
inline void polish_by_swaps(const CoefficientTensor& y, const SegmentStats& stats, const ModelConfig& config,
                            const EMConfig& em, FitReport& best) {
    const int K = config.K;
    bool improved = true;
    while (improved) {
        improved = false;
        for (int a = 0; a < K && !improved; ++a)
            for (int b = a + 1; b < K && !improved; ++b) {
                if (config.L[a] == config.L[b]) continue;
                std::vector<int> order(static_cast<std::size_t>(K));
                for (int k = 0; k < K; ++k) order[k] = k;
                std::swap(order[a], order[b]);
                try {
                    auto cand = run_em(y, stats, config, em, permute_clusters(best.responsibilities, order));
                    const double gain = cand.loglik() - best.loglik();
                    if (gain > em.rel_tol * std::abs(best.loglik())) {
                        cand.best_restart = best.best_restart;
                        cand.degenerate_restarts = best.degenerate_restarts;
                        best = std::move(cand);
                        improved = true;
                    }
                } catch (const EmptyClusterError&) {
                }
            }
    }
}

// Multi-restart EM. The first warm_starts.size() restarts begin from the
// given responsibilities; the rest from `em.init` seeded by the substream
// ("restart", index). Returns the highest final log-likelihood (ties to the
// lowest restart index), relabeled into canonical order.
inline FitReport fit(const CoefficientTensor& y, const ModelConfig& config, const EMConfig& em,
                     std::span<const Responsibilities> warm_starts = {}) {
    y.check();
    config.check(y.d());
    em.check();
    for (const auto& w : warm_starts)
        if (w.n() != y.n() || static_cast<int>(w.K()) != config.K)
            throw ShapeError("fit: warm start has the wrong shape");

    const SegmentStats stats = build_stats(y);
    const SeedStream seeds(em.seed);
    const std::size_t runs = std::max<std::size_t>(static_cast<std::size_t>(em.n_restarts), warm_starts.size());
    std::vector<std::optional<FitReport>> results(runs);

    detail::parallel_for(runs, em.threads, [&](std::size_t r) {
        Responsibilities init;
        if (r < warm_starts.size()) {
            init = warm_starts[r];
        } else {
            auto rng = seeds.engine("restart", r);
            init = initial_responsibilities(y, static_cast<std::size_t>(config.K), em.init, rng);
        }
        try {
            results[r] = run_em(y, stats, config, em, std::move(init));
        } catch (const EmptyClusterError&) {
            results[r].reset();
        }
    });

    int best = -1, degenerate = 0;
    for (std::size_t r = 0; r < runs; ++r) {
        if (!results[r]) {
            ++degenerate;
            continue;
        }
        if (best < 0 || results[r]->loglik() > results[static_cast<std::size_t>(best)]->loglik())
            best = static_cast<int>(r);
    }
    if (best < 0)
        throw DegenerateFitError("all " + std::to_string(runs) +
                                 " EM restarts were abandoned because a cluster became empty");

    FitReport report = std::move(*results[static_cast<std::size_t>(best)]);
    report.best_restart = best;
    report.degenerate_restarts = degenerate;
    if (em.swap_polish) polish_by_swaps(y, stats, config, em, report);
    canonicalize(report);
    report.warnings = validate_params(report.params, config, y.d(), y.p());
    return report;
}

}  // namespace mixseg
