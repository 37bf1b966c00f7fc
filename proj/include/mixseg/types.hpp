#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace mixseg {

// Raised when array shapes disagree with each other or with a configuration.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// Dense row-major 3-d array: (individual, time unit, inner index).
template <class Real>
class Tensor3 {
public:
    Tensor3() = default;
    Tensor3(std::size_t n, std::size_t d, std::size_t m, Real fill = Real(0))
        : n_(n), d_(d), m_(m), data_(n * d * m, fill) {}

    std::size_t n() const { return n_; }
    std::size_t d() const { return d_; }
    std::size_t m() const { return m_; }

    Real& operator()(std::size_t i, std::size_t j, std::size_t r) { return data_[(i * d_ + j) * m_ + r]; }
    const Real& operator()(std::size_t i, std::size_t j, std::size_t r) const {
        return data_[(i * d_ + j) * m_ + r];
    }

    // Contiguous inner vector at (i, j).
    std::span<Real> cell(std::size_t i, std::size_t j) { return {data_.data() + (i * d_ + j) * m_, m_}; }
    std::span<const Real> cell(std::size_t i, std::size_t j) const {
        return {data_.data() + (i * d_ + j) * m_, m_};
    }

    std::span<const Real> flat() const { return data_; }
    std::span<Real> flat() { return data_; }

    bool all_finite() const {
        return std::all_of(data_.begin(), data_.end(), [](Real v) { return std::isfinite(v); });
    }

    friend bool operator==(const Tensor3&, const Tensor3&) = default;

private:
    std::size_t n_ = 0, d_ = 0, m_ = 0;
    std::vector<Real> data_;
};

// Raw curves: n individuals x d time units x H within-unit samples.
struct FunctionalDataset {
    Tensor3<double> curves;
    std::vector<std::string> time_labels;

    std::size_t n() const { return curves.n(); }
    std::size_t d() const { return curves.d(); }
    std::size_t H() const { return curves.m(); }

    void check() const {
        if (n() < 1 || d() < 1 || H() < 1) throw ShapeError("dataset must have n, d, H >= 1");
        if (!time_labels.empty() && time_labels.size() != d())
            throw ShapeError("time_labels must have one entry per time unit");
        if (!curves.all_finite()) throw std::invalid_argument("dataset contains non-finite values");
    }
};

// Basis coefficients: n x d x p. `level` is the wavelet depth they came from.
struct CoefficientTensor {
    Tensor3<double> y;
    int level = 0;
    int source_H = 0;

    std::size_t n() const { return y.n(); }
    std::size_t d() const { return y.d(); }
    std::size_t p() const { return y.m(); }

    void check() const {
        if (n() < 1 || d() < 1 || p() < 1) throw ShapeError("coefficient tensor must have n, d, p >= 1");
        if (!y.all_finite()) throw std::invalid_argument("coefficient tensor contains non-finite values");
    }
};

// Number of clusters and breakpoints per cluster. L is kept sorted ascending,
// which is the canonical cluster labeling.
struct ModelConfig {
    int K = 1;
    std::vector<int> L{0};
    int min_segment_len = 1;

    static ModelConfig make(std::vector<int> L, int min_segment_len = 1) {
        ModelConfig c;
        c.K = static_cast<int>(L.size());
        std::sort(L.begin(), L.end());
        c.L = std::move(L);
        c.min_segment_len = min_segment_len;
        return c;
    }

    int max_L() const { return L.empty() ? 0 : *std::max_element(L.begin(), L.end()); }

    // Throws if the configuration cannot be fit on d time units.
    void check(std::size_t d) const {
        if (K < 1) throw std::invalid_argument("K must be >= 1");
        if (static_cast<int>(L.size()) != K) throw ShapeError("L must have K entries");
        if (min_segment_len < 1) throw std::invalid_argument("min_segment_len must be >= 1");
        if (!std::is_sorted(L.begin(), L.end())) throw std::invalid_argument("L must be sorted ascending");
        for (int l : L) {
            if (l < 0) throw std::invalid_argument("breakpoint counts must be non-negative");
            if (static_cast<std::size_t>(l + 1) * static_cast<std::size_t>(min_segment_len) > d)
                throw std::invalid_argument("L=" + std::to_string(l) + " segments do not fit in d=" +
                                            std::to_string(d));
        }
    }

    bool feasible(std::size_t d) const {
        try {
            check(d);
            return true;
        } catch (const std::exception&) {
            return false;
        }
    }

    friend bool operator==(const ModelConfig&, const ModelConfig&) = default;
};

// pi[k], breakpoints T[k] (length L[k]+2, T[k][0]=0, T[k].back()=d),
// per-segment means mu[k][l][r] and VARIANCES sigma[k][l][r].
struct ModelParams {
    std::vector<double> pi;
    std::vector<std::vector<int>> T;
    std::vector<std::vector<std::vector<double>>> mu;
    std::vector<std::vector<std::vector<double>>> sigma;

    int K() const { return static_cast<int>(pi.size()); }
    int L(int k) const { return static_cast<int>(T[k].size()) - 2; }

    // Shape and value checks that are not identifiability conditions.
    void check(std::size_t d, std::size_t p) const {
        const std::size_t K = pi.size();
        if (K == 0) throw ShapeError("params must have at least one cluster");
        if (T.size() != K || mu.size() != K || sigma.size() != K) throw ShapeError("params: K mismatch");
        for (std::size_t k = 0; k < K; ++k) {
            if (T[k].size() < 2) throw ShapeError("params: T[k] needs sentinels");
            if (T[k].front() != 0 || T[k].back() != static_cast<int>(d))
                throw ShapeError("params: T[k] must start at 0 and end at d");
            const std::size_t S = T[k].size() - 1;
            if (mu[k].size() != S || sigma[k].size() != S) throw ShapeError("params: segment count mismatch");
            for (std::size_t l = 0; l < S; ++l) {
                if (T[k][l + 1] <= T[k][l]) throw std::invalid_argument("params: T[k] must be strictly increasing");
                if (mu[k][l].size() != p || sigma[k][l].size() != p) throw ShapeError("params: p mismatch");
                for (std::size_t r = 0; r < p; ++r) {
                    if (!std::isfinite(mu[k][l][r])) throw std::invalid_argument("params: non-finite mean");
                    if (!(sigma[k][l][r] > 0.0) || !std::isfinite(sigma[k][l][r]))
                        throw std::invalid_argument("params: variances must be positive");
                }
            }
        }
    }

    ModelConfig config(int min_segment_len = 1) const {
        ModelConfig c;
        c.K = K();
        c.L.resize(pi.size());
        for (int k = 0; k < K(); ++k) c.L[k] = L(k);
        c.min_segment_len = min_segment_len;
        return c;
    }

    friend bool operator==(const ModelParams&, const ModelParams&) = default;
};

// n x K posterior membership probabilities.
class Responsibilities {
public:
    Responsibilities() = default;
    Responsibilities(std::size_t n, std::size_t K, double fill = 0.0) : n_(n), K_(K), s_(n * K, fill) {}

    std::size_t n() const { return n_; }
    std::size_t K() const { return K_; }

    double& operator()(std::size_t i, std::size_t k) { return s_[i * K_ + k]; }
    double operator()(std::size_t i, std::size_t k) const { return s_[i * K_ + k]; }

    std::span<double> row(std::size_t i) { return {s_.data() + i * K_, K_}; }
    std::span<const double> row(std::size_t i) const { return {s_.data() + i * K_, K_}; }

    // Column sum s_{+k}.
    double column_sum(std::size_t k) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < n_; ++i) acc += s_[i * K_ + k];
        return acc;
    }

    std::vector<double> column(std::size_t k) const {
        std::vector<double> c(n_);
        for (std::size_t i = 0; i < n_; ++i) c[i] = s_[i * K_ + k];
        return c;
    }

    bool is_valid(double tol = 1e-10) const {
        for (std::size_t i = 0; i < n_; ++i) {
            double acc = 0.0;
            for (std::size_t k = 0; k < K_; ++k) {
                const double v = s_[i * K_ + k];
                if (!(v >= 0.0 && v <= 1.0)) return false;
                acc += v;
            }
            if (std::abs(acc - 1.0) > tol) return false;
        }
        return true;
    }

    friend bool operator==(const Responsibilities&, const Responsibilities&) = default;

private:
    std::size_t n_ = 0, K_ = 0;
    std::vector<double> s_;
};

// Cluster labels z_i in 1..K.
struct Partition {
    std::vector<int> z;

    std::size_t size() const { return z.size(); }
    int max_label() const { return z.empty() ? 0 : *std::max_element(z.begin(), z.end()); }

    void check(int K) const {
        for (int v : z)
            if (v < 1 || v > K) throw std::invalid_argument("partition label out of range 1..K");
    }

    friend bool operator==(const Partition&, const Partition&) = default;
};

// Which identifiability assumption a parameter set breaks.
enum class Assumption { AdjacentSegmentsDistinct, EnoughCoefficients, ClustersDistinct, PositiveWeights };

inline const char* assumption_tag(Assumption a) {
    switch (a) {
        case Assumption::AdjacentSegmentsDistinct: return "ID.1";
        case Assumption::EnoughCoefficients: return "ID.2";
        case Assumption::ClustersDistinct: return "ID.3";
        case Assumption::PositiveWeights: return "ID.4";
    }
    return "?";
}

struct Violation {
    Assumption assumption;
    int cluster = -1;        // first cluster involved (1-based), -1 when global
    int other = -1;          // second cluster (ID.3) or first segment of the equal pair (ID.1), 1-based
    std::string message;

    std::string tag() const { return assumption_tag(assumption); }
};

struct FitReport {
    ModelParams params;
    Responsibilities responsibilities;
    Partition partition;
    std::vector<double> loglik_trace;
    int n_iter = 0;
    bool converged = false;
    int min_segment_len = 1;
    // Index of the restart that produced this report, and how many restarts
    // were abandoned because a cluster emptied.
    int best_restart = 0;
    int degenerate_restarts = 0;
    // Identifiability warnings for the fitted params (advisory).
    std::vector<Violation> warnings;

    double loglik() const { return loglik_trace.empty() ? -std::numeric_limits<double>::infinity() : loglik_trace.back(); }
    ModelConfig config() const { return params.config(min_segment_len); }
};

namespace detail {

inline bool nearly_equal(double a, double b, double tol) { return std::abs(a - b) <= tol; }

inline bool same_segment(const ModelParams& P, int k, int l, int k2, int l2, double tol) {
    const auto& m1 = P.mu[k][l];
    const auto& m2 = P.mu[k2][l2];
    const auto& s1 = P.sigma[k][l];
    const auto& s2 = P.sigma[k2][l2];
    for (std::size_t r = 0; r < m1.size(); ++r)
        if (!nearly_equal(m1[r], m2[r], tol) || !nearly_equal(s1[r], s2[r], tol)) return false;
    return true;
}

}  // namespace detail

// Checks the four identifiability assumptions. An empty result means the
// configuration is identifiable. Shape problems throw ShapeError instead.
inline std::vector<Violation> validate_params(const ModelParams& params, const ModelConfig& config, std::size_t d,
                                              std::size_t p, double tol = 1e-12) {
    if (static_cast<int>(params.pi.size()) != config.K || static_cast<int>(config.L.size()) != config.K)
        throw ShapeError("validate_params: K mismatch between params and config");
    params.check(d, p);
    for (int k = 0; k < config.K; ++k)
        if (params.L(k) != config.L[k]) throw ShapeError("validate_params: L mismatch for cluster " + std::to_string(k + 1));

    std::vector<Violation> out;
    for (int k = 0; k < config.K; ++k) {
        for (int l = 0; l < config.L[k]; ++l) {
            if (detail::same_segment(params, k, l, k, l + 1, tol))
                out.push_back({Assumption::AdjacentSegmentsDistinct, k + 1, l + 1,
                               "cluster " + std::to_string(k + 1) + ": segments " + std::to_string(l + 1) + " and " +
                                   std::to_string(l + 2) + " have identical parameters"});
        }
    }
    if (static_cast<int>(p) < config.max_L() + 1)
        out.push_back({Assumption::EnoughCoefficients, -1, -1,
                       "p=" + std::to_string(p) + " < max L + 1 = " + std::to_string(config.max_L() + 1)});
    for (int k = 0; k < config.K; ++k) {
        for (int k2 = k + 1; k2 < config.K; ++k2) {
            if (config.L[k] != config.L[k2]) continue;
            if (params.T[k] != params.T[k2]) continue;
            bool all_same = true;
            for (int l = 0; l <= config.L[k] && all_same; ++l)
                all_same = detail::same_segment(params, k, l, k2, l, tol);
            if (all_same)
                out.push_back({Assumption::ClustersDistinct, k + 1, k2 + 1,
                               "clusters " + std::to_string(k + 1) + " and " + std::to_string(k2 + 1) +
                                   " are indistinguishable"});
        }
    }
    for (int k = 0; k < config.K; ++k)
        if (!(params.pi[k] > 0.0))
            out.push_back({Assumption::PositiveWeights, k + 1, -1, "pi[" + std::to_string(k + 1) + "] <= 0"});
    return out;
}

// z_i = argmax_k s_ik, ties to the smallest k; labels are 1-based.
inline Partition hard_assign(const Responsibilities& resp) {
    Partition part;
    part.z.resize(resp.n());
    for (std::size_t i = 0; i < resp.n(); ++i) {
        auto row = resp.row(i);
        part.z[i] = static_cast<int>(std::max_element(row.begin(), row.end()) - row.begin()) + 1;
    }
    return part;
}

// Canonical cluster order: ascending L, ties broken by the first segment's
// mean vector compared lexicographically. Returns order[new] = old.
inline std::vector<int> canonical_order(const ModelParams& params) {
    std::vector<int> order(params.pi.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
        if (params.L(a) != params.L(b)) return params.L(a) < params.L(b);
        return std::lexicographical_compare(params.mu[a][0].begin(), params.mu[a][0].end(),
                                            params.mu[b][0].begin(), params.mu[b][0].end());
    });
    return order;
}

inline ModelParams permute_clusters(const ModelParams& params, const std::vector<int>& order) {
    ModelParams out;
    for (int old : order) {
        out.pi.push_back(params.pi[old]);
        out.T.push_back(params.T[old]);
        out.mu.push_back(params.mu[old]);
        out.sigma.push_back(params.sigma[old]);
    }
    return out;
}

inline Responsibilities permute_clusters(const Responsibilities& resp, const std::vector<int>& order) {
    Responsibilities out(resp.n(), resp.K());
    for (std::size_t i = 0; i < resp.n(); ++i)
        for (std::size_t k = 0; k < order.size(); ++k) out(i, k) = resp(i, static_cast<std::size_t>(order[k]));
    return out;
}

inline ModelParams canonicalize(const ModelParams& params) { return permute_clusters(params, canonical_order(params)); }

// Relabels a fit report into canonical order, keeping params, responsibilities
// and the hard partition consistent.
inline void canonicalize(FitReport& report) {
    const auto order = canonical_order(report.params);
    report.params = permute_clusters(report.params, order);
    report.responsibilities = permute_clusters(report.responsibilities, order);
    report.partition = hard_assign(report.responsibilities);
}

}  // namespace mixseg
