#pragma once

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixseg/types.hpp"

namespace mixseg {

namespace detail {

inline double choose2(double x) { return x * (x - 1.0) / 2.0; }

// Dense contingency table over the distinct labels of each partition.
struct Contingency {
    std::vector<std::vector<double>> counts;
    std::vector<double> rows, cols;
};

inline Contingency contingency(const Partition& a, const Partition& b) {
    std::map<int, std::size_t> ia, ib;
    for (int v : a.z) ia.emplace(v, 0);
    for (int v : b.z) ib.emplace(v, 0);
    std::size_t next = 0;
    for (auto& [_, idx] : ia) idx = next++;
    next = 0;
    for (auto& [_, idx] : ib) idx = next++;
    Contingency c;
    c.counts.assign(ia.size(), std::vector<double>(ib.size(), 0.0));
    c.rows.assign(ia.size(), 0.0);
    c.cols.assign(ib.size(), 0.0);
    for (std::size_t i = 0; i < a.z.size(); ++i) {
        const auto r = ia[a.z[i]], s = ib[b.z[i]];
        c.counts[r][s] += 1.0;
        c.rows[r] += 1.0;
        c.cols[s] += 1.0;
    }
    return c;
}

// Minimum-cost perfect assignment on a square matrix (Hungarian method,
// O(K^3)). Returns col_of_row.
inline std::vector<int> hungarian(const std::vector<std::vector<double>>& cost) {
    const int n = static_cast<int>(cost.size());
    constexpr double inf = std::numeric_limits<double>::infinity();
    std::vector<double> u(n + 1, 0.0), v(n + 1, 0.0), minv(n + 1);
    std::vector<int> p(n + 1, 0), way(n + 1, 0);
    std::vector<char> used(n + 1);
    for (int i = 1; i <= n; ++i) {
        p[0] = i;
        int j0 = 0;
        std::fill(minv.begin(), minv.end(), inf);
        std::fill(used.begin(), used.end(), 0);
        do {
            used[j0] = 1;
            const int i0 = p[j0];
            double delta = inf;
            int j1 = 0;
            for (int j = 1; j <= n; ++j) {
                if (used[j]) continue;
                const double cur = cost[i0 - 1][j - 1] - u[i0] - v[j];
                if (cur < minv[j]) {
                    minv[j] = cur;
                    way[j] = j0;
                }
                if (minv[j] < delta) {
                    delta = minv[j];
                    j1 = j;
                }
            }
            for (int j = 0; j <= n; ++j) {
                if (used[j]) {
                    u[p[j]] += delta;
                    v[j] -= delta;
                } else {
                    minv[j] -= delta;
                }
            }
            j0 = j1;
        } while (p[j0] != 0);
        do {
            const int j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
        } while (j0 != 0);
    }
    std::vector<int> col_of_row(n, 0);
    for (int j = 1; j <= n; ++j)
        if (p[j] > 0) col_of_row[p[j] - 1] = j - 1;
    return col_of_row;
}

}  // namespace detail

// Adjusted Rand index from the pair-counting contingency formula. Two
// partitions that are both a single cluster (or n < 2) score 1.
inline double ari(const Partition& z_true, const Partition& z_hat) {
    if (z_true.size() != z_hat.size()) throw ShapeError("ari: partitions have different lengths");
    const double n = static_cast<double>(z_true.size());
    if (n < 2) return 1.0;
    const auto c = detail::contingency(z_true, z_hat);
    double index = 0.0, sum_rows = 0.0, sum_cols = 0.0;
    for (const auto& row : c.counts)
        for (double v : row) index += detail::choose2(v);
    for (double v : c.rows) sum_rows += detail::choose2(v);
    for (double v : c.cols) sum_cols += detail::choose2(v);
    const double expected = sum_rows * sum_cols / detail::choose2(n);
    const double max_index = 0.5 * (sum_rows + sum_cols);
    const double denom = max_index - expected;
    if (denom == 0.0) return 1.0;
    return (index - expected) / denom;
}

struct LabelMatching {
    // permutation[b] = true label (1-based) matched to estimated label b+1
    std::vector<int> permutation;
    int mismatches = 0;
};

// Label permutation maximizing agreement between z_hat and z_true, over labels
// 1..K (K defaults to the largest label seen in either partition).
inline LabelMatching optimal_permutation(const Partition& z_true, const Partition& z_hat, int K = 0) {
    if (z_true.size() != z_hat.size()) throw ShapeError("optimal_permutation: partitions have different lengths");
    K = std::max({K, z_true.max_label(), z_hat.max_label(), 1});
    z_true.check(K);
    z_hat.check(K);
    std::vector<std::vector<double>> agree(K, std::vector<double>(K, 0.0));
    for (std::size_t i = 0; i < z_true.size(); ++i) agree[z_hat.z[i] - 1][z_true.z[i] - 1] += 1.0;
    double top = 0.0;
    for (const auto& row : agree)
        for (double v : row) top = std::max(top, v);
    std::vector<std::vector<double>> cost(K, std::vector<double>(K));
    for (int b = 0; b < K; ++b)
        for (int a = 0; a < K; ++a) cost[b][a] = top - agree[b][a];
    const auto col = detail::hungarian(cost);
    LabelMatching out;
    double matched = 0.0;
    for (int b = 0; b < K; ++b) {
        out.permutation.push_back(col[b] + 1);
        matched += agree[b][col[b]];
    }
    out.mismatches = static_cast<int>(z_true.size()) - static_cast<int>(std::lround(matched));
    return out;
}

// Fraction of individuals misclassified under the best label permutation.
inline double nce(const Partition& z_true, const Partition& z_hat, int K = 0) {
    if (z_true.size() == 0) return 0.0;
    return static_cast<double>(optimal_permutation(z_true, z_hat, K).mismatches) /
           static_cast<double>(z_true.size());
}

struct HausdorffResult {
    std::optional<double> value;
    std::string reason;  // set when value is absent
};

// max over aligned clusters and interior breakpoints of |T* - T^| / d, with
// estimated cluster b aligned to true cluster permutation[b].
inline HausdorffResult hausdorff(const std::vector<std::vector<int>>& T_true, const std::vector<std::vector<int>>& T_hat,
                                 int d, const std::vector<int>& permutation) {
    if (d < 1) throw std::invalid_argument("hausdorff: d must be >= 1");
    if (T_hat.size() != permutation.size())
        return {std::nullopt, "permutation length differs from the number of estimated clusters"};
    if (T_true.size() != T_hat.size()) return {std::nullopt, "different numbers of clusters"};
    double worst = 0.0;
    for (std::size_t b = 0; b < T_hat.size(); ++b) {
        const int a = permutation[b] - 1;
        if (a < 0 || a >= static_cast<int>(T_true.size())) return {std::nullopt, "permutation out of range"};
        const auto& t = T_true[static_cast<std::size_t>(a)];
        const auto& e = T_hat[b];
        if (t.size() != e.size())
            return {std::nullopt, "breakpoint count differs between true cluster " + std::to_string(a + 1) +
                                      " and estimated cluster " + std::to_string(b + 1)};
        for (std::size_t l = 1; l + 1 < t.size(); ++l)
            worst = std::max(worst, std::abs(t[l] - e[l]) / static_cast<double>(d));
    }
    return {worst, {}};
}

// Each true interior breakpoint (any cluster) against its nearest pooled
// estimate, normalized by d; the maximum over true breakpoints. Used to score
// segmentations that do not carry cluster structure.
inline HausdorffResult nearest_breakpoint_distance(const std::vector<std::vector<int>>& T_true,
                                                   const std::vector<int>& pooled, int d) {
    if (d < 1) throw std::invalid_argument("nearest_breakpoint_distance: d must be >= 1");
    std::vector<int> est;
    for (std::size_t l = 1; l + 1 < pooled.size(); ++l) est.push_back(pooled[l]);
    double worst = 0.0;
    bool any = false;
    for (const auto& t : T_true)
        for (std::size_t l = 1; l + 1 < t.size(); ++l) {
            any = true;
            if (est.empty()) return {std::nullopt, "no estimated breakpoints"};
            int best = std::numeric_limits<int>::max();
            for (int e : est) best = std::min(best, std::abs(t[l] - e));
            worst = std::max(worst, best / static_cast<double>(d));
        }
    if (!any) return {0.0, {}};
    return {worst, {}};
}

// Time units labelled by the (1-based) segment that contains them.
inline Partition segment_labels(const std::vector<int>& T, int d) {
    if (T.size() < 2 || T.front() != 0 || T.back() != d) throw ShapeError("segment_labels: T must run from 0 to d");
    Partition z;
    z.z.reserve(static_cast<std::size_t>(d));
    for (std::size_t l = 0; l + 1 < T.size(); ++l)
        for (int j = T[l]; j < T[l + 1]; ++j) z.z.push_back(static_cast<int>(l) + 1);
    return z;
}

// Agreement of the time segmentations: ARI between true and estimated
// segment labels of the d time units, averaged over aligned clusters.
// Cluster counts must match; segment counts may differ.
inline double segmentation_ari(const std::vector<std::vector<int>>& T_true, const std::vector<std::vector<int>>& T_hat,
                               int d, const std::vector<int>& permutation) {
    if (T_true.size() != T_hat.size() || permutation.size() != T_hat.size())
        throw ShapeError("segmentation_ari: cluster counts differ");
    double acc = 0.0;
    for (std::size_t b = 0; b < T_hat.size(); ++b) {
        const int a = permutation[b] - 1;
        if (a < 0 || a >= static_cast<int>(T_true.size())) throw ShapeError("segmentation_ari: bad permutation");
        acc += ari(segment_labels(T_true[static_cast<std::size_t>(a)], d), segment_labels(T_hat[b], d));
    }
    return acc / static_cast<double>(T_hat.size());
}

// |mu^ - mu*| per aligned (cluster, segment, coordinate), grouped by true
// cluster: out[a] lists the errors of true cluster a+1 in (segment, r) order.
inline std::vector<std::vector<double>> param_errors(const ModelParams& params_true, const ModelParams& params_hat,
                                                     const std::vector<int>& permutation) {
    if (params_true.mu.size() != params_hat.mu.size() || permutation.size() != params_hat.mu.size())
        throw ShapeError("param_errors: cluster counts differ");
    std::vector<std::vector<double>> out(params_true.mu.size());
    for (std::size_t b = 0; b < params_hat.mu.size(); ++b) {
        const int a = permutation[b] - 1;
        if (a < 0 || a >= static_cast<int>(params_true.mu.size())) throw ShapeError("param_errors: bad permutation");
        const auto& mt = params_true.mu[static_cast<std::size_t>(a)];
        const auto& mh = params_hat.mu[b];
        if (mt.size() != mh.size()) throw ShapeError("param_errors: segment counts differ after alignment");
        for (std::size_t l = 0; l < mt.size(); ++l) {
            if (mt[l].size() != mh[l].size()) throw ShapeError("param_errors: p differs");
            for (std::size_t r = 0; r < mt[l].size(); ++r)
                out[static_cast<std::size_t>(a)].push_back(std::abs(mh[l][r] - mt[l][r]));
        }
    }
    return out;
}

struct EvalReport {
    double ari = 0.0;
    double nce = 0.0;
    std::optional<double> hausdorff;
    std::string hausdorff_reason;
    std::vector<std::vector<double>> mu_abs_errors;
    std::vector<int> permutation;

    // Median over all pooled |mu^ - mu*| entries (NaN when none).
    double median_mu_error() const {
        std::vector<double> all;
        for (const auto& v : mu_abs_errors) all.insert(all.end(), v.begin(), v.end());
        if (all.empty()) return std::numeric_limits<double>::quiet_NaN();
        std::sort(all.begin(), all.end());
        const std::size_t m = all.size() / 2;
        return all.size() % 2 ? all[m] : 0.5 * (all[m - 1] + all[m]);
    }
};

// All metrics for one fit against ground truth; clusters are aligned once by
// the misclassification-optimal permutation.
inline EvalReport evaluate(const Partition& z_true, const ModelParams& params_true, const Partition& z_hat,
                           const ModelParams& params_hat, int d) {
    EvalReport rep;
    const int K = std::max(params_true.K(), params_hat.K());
    rep.ari = ari(z_true, z_hat);
    const auto match = optimal_permutation(z_true, z_hat, K);
    rep.nce = static_cast<double>(match.mismatches) / static_cast<double>(std::max<std::size_t>(z_true.size(), 1));
    rep.permutation = match.permutation;
    if (params_true.K() == params_hat.K()) {
        auto h = hausdorff(params_true.T, params_hat.T, d, rep.permutation);
        rep.hausdorff = h.value;
        rep.hausdorff_reason = h.reason;
        if (h.value) rep.mu_abs_errors = param_errors(params_true, params_hat, rep.permutation);
    } else {
        rep.hausdorff_reason = "different numbers of clusters";
    }
    return rep;
}

}  // namespace mixseg
