#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <vector>

#include "mixseg/types.hpp"

namespace mixseg {

// Prefix sums over time of the coefficients and their squares, per
// individual and coordinate. Values are stored relative to a per-coordinate
// center (the global mean) so that moment differences do not cancel badly on
// data with large offsets:
//   cum1(i, t, r) = sum_{j < t} (Y(i, j, r) - center[r]),  cum1(i, 0, r) = 0
//   cum2(i, t, r) = sum_{j < t} (Y(i, j, r) - center[r])^2
struct SegmentStats {
    Tensor3<double> cum1;
    Tensor3<double> cum2;
    std::vector<double> center;
    double variance_floor = 1e-8;

    std::size_t n() const { return cum1.n(); }
    std::size_t d() const { return cum1.d() - 1; }
    std::size_t p() const { return cum1.m(); }

    // Mean of individual i, coordinate r over time units (t1, t2].
    double segment_mean(std::size_t i, std::size_t t1, std::size_t t2, std::size_t r) const {
        return (cum1(i, t2, r) - cum1(i, t1, r)) / static_cast<double>(t2 - t1) + center[r];
    }
};

struct SegmentFit {
    std::vector<double> mu_hat;
    std::vector<double> sigma_hat;  // variances
    double cost = 0.0;
};

inline SegmentStats build_stats(const CoefficientTensor& y) {
    y.check();
    const std::size_t n = y.n(), d = y.d(), p = y.p();
    SegmentStats s;
    s.center.assign(p, 0.0);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t r = 0; r < p; ++r) s.center[r] += y.y(i, j, r);
    for (auto& c : s.center) c /= static_cast<double>(n * d);

    // floor = 1e-8 * variance of all entries (1e-8 when the data is constant)
    double grand = 0.0;
    for (double c : s.center) grand += c;
    grand /= static_cast<double>(p);
    double var = 0.0;
    for (double v : y.y.flat()) var += (v - grand) * (v - grand);
    var /= static_cast<double>(n * d * p);
    s.variance_floor = 1e-8 * (var > 0.0 ? var : 1.0);

    s.cum1 = Tensor3<double>(n, d + 1, p);
    s.cum2 = Tensor3<double>(n, d + 1, p);
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < d; ++j)
            for (std::size_t r = 0; r < p; ++r) {
                const double v = y.y(i, j, r) - s.center[r];
                s.cum1(i, j + 1, r) = s.cum1(i, j, r) + v;
                s.cum2(i, j + 1, r) = s.cum2(i, j, r) + v * v;
            }
    return s;
}

namespace detail {

// Closed-form minimizer of
//   sum_r [ W m log sigma_r + (1/sigma_r) sum_{i,j} w_i (Y_ijr - mu_r)^2 ]
// from the weighted centered moments A1 = sum w_i S1_i and A2 = sum w_i S2_i.
// Adds the segment's cost contribution; writes mu (un-centered) and sigma.
inline double fit_coordinate(double A1, double A2, double Wm, double center, double floor, double& mu,
                             double& sigma) {
    const double mu_c = A1 / Wm;
    double rss = A2 - A1 * mu_c;
    if (rss < 0.0) rss = 0.0;
    sigma = rss / Wm;
    if (sigma < floor) sigma = floor;
    mu = mu_c + center;
    return Wm * std::log(sigma) + rss / sigma;
}

inline void check_segment(std::size_t d, std::size_t t1, std::size_t t2) {
    if (t2 <= t1) throw std::invalid_argument("segment requires t1 < t2");
    if (t2 > d) throw std::invalid_argument("segment end exceeds d");
}

}  // namespace detail

// Exact minimizer of the weighted Gaussian segment cost over (mu, sigma) for
// time units (t1, t2]. Cost is O(n p).
inline SegmentFit segment_fit(const SegmentStats& stats, std::span<const double> weights, std::size_t t1,
                              std::size_t t2) {
    detail::check_segment(stats.d(), t1, t2);
    if (weights.size() != stats.n()) throw ShapeError("segment_fit: weights must have n entries");
    double W = 0.0;
    for (double w : weights) W += w;
    if (!(W > 0.0)) throw std::invalid_argument("segment_fit: total weight must be positive");

    const std::size_t p = stats.p();
    const double Wm = W * static_cast<double>(t2 - t1);
    SegmentFit out;
    out.mu_hat.resize(p);
    out.sigma_hat.resize(p);
    for (std::size_t r = 0; r < p; ++r) {
        double A1 = 0.0, A2 = 0.0;
        for (std::size_t i = 0; i < stats.n(); ++i) {
            A1 += weights[i] * (stats.cum1(i, t2, r) - stats.cum1(i, t1, r));
            A2 += weights[i] * (stats.cum2(i, t2, r) - stats.cum2(i, t1, r));
        }
        out.cost += detail::fit_coordinate(A1, A2, Wm, stats.center[r], stats.variance_floor, out.mu_hat[r],
                                           out.sigma_hat[r]);
    }
    return out;
}

// Weight-collapsed prefix sums for one cluster: A1(t, r) = sum_i w_i cum1(i, t, r).
// Built in O(n d p); afterwards every segment query is O(p).
class WeightedSegmentStats {
public:
    WeightedSegmentStats(const SegmentStats& stats, std::span<const double> weights)
        : stats_(&stats), a1_(stats.d() + 1, stats.p()), a2_(stats.d() + 1, stats.p()) {
        if (weights.size() != stats.n()) throw ShapeError("weights must have n entries");
        for (double w : weights) total_ += w;
        if (!(total_ > 0.0)) throw std::invalid_argument("total weight must be positive");
        const std::size_t d = stats.d(), p = stats.p();
        for (std::size_t i = 0; i < stats.n(); ++i) {
            const double w = weights[i];
            if (w == 0.0) continue;
            for (std::size_t t = 1; t <= d; ++t)
                for (std::size_t r = 0; r < p; ++r) {
                    a1_(t, r) += w * stats.cum1(i, t, r);
                    a2_(t, r) += w * stats.cum2(i, t, r);
                }
        }
    }

    double total_weight() const { return total_; }

    double cost(std::size_t t1, std::size_t t2) const {
        double mu, sigma, c = 0.0;
        const double Wm = total_ * static_cast<double>(t2 - t1);
        for (std::size_t r = 0; r < stats_->p(); ++r)
            c += detail::fit_coordinate(a1_(t2, r) - a1_(t1, r), a2_(t2, r) - a2_(t1, r), Wm, stats_->center[r],
                                        stats_->variance_floor, mu, sigma);
        return c;
    }

    SegmentFit fit(std::size_t t1, std::size_t t2) const {
        detail::check_segment(stats_->d(), t1, t2);
        const std::size_t p = stats_->p();
        const double Wm = total_ * static_cast<double>(t2 - t1);
        SegmentFit out;
        out.mu_hat.resize(p);
        out.sigma_hat.resize(p);
        for (std::size_t r = 0; r < p; ++r)
            out.cost += detail::fit_coordinate(a1_(t2, r) - a1_(t1, r), a2_(t2, r) - a2_(t1, r), Wm,
                                               stats_->center[r], stats_->variance_floor, out.mu_hat[r],
                                               out.sigma_hat[r]);
        return out;
    }

private:
    struct Grid {
        Grid(std::size_t rows, std::size_t cols) : cols(cols), v(rows * cols, 0.0) {}
        double& operator()(std::size_t t, std::size_t r) { return v[t * cols + r]; }
        double operator()(std::size_t t, std::size_t r) const { return v[t * cols + r]; }
        std::size_t cols;
        std::vector<double> v;
    };

    const SegmentStats* stats_;
    Grid a1_, a2_;
    double total_ = 0.0;
};

// Upper-triangular (d+1) x (d+1) table of segment costs. Entries for segments
// shorter than min_segment_len (and the lower triangle) hold +infinity.
class CostTable {
public:
    static constexpr double infeasible = std::numeric_limits<double>::infinity();

    CostTable() = default;
    explicit CostTable(std::size_t d) : d_(d), c_((d + 1) * (d + 1), infeasible) {}

    std::size_t d() const { return d_; }
    double& operator()(std::size_t t1, std::size_t t2) { return c_[t1 * (d_ + 1) + t2]; }
    double operator()(std::size_t t1, std::size_t t2) const { return c_[t1 * (d_ + 1) + t2]; }

private:
    std::size_t d_ = 0;
    std::vector<double> c_;
};

inline CostTable cost_table(const WeightedSegmentStats& wstats, std::size_t d, int min_segment_len) {
    if (min_segment_len < 1) throw std::invalid_argument("min_segment_len must be >= 1");
    CostTable table(d);
    const std::size_t m = static_cast<std::size_t>(min_segment_len);
    for (std::size_t t1 = 0; t1 + m <= d; ++t1)
        for (std::size_t t2 = t1 + m; t2 <= d; ++t2) table(t1, t2) = wstats.cost(t1, t2);
    return table;
}

inline CostTable cost_table(const SegmentStats& stats, std::span<const double> weights, int min_segment_len) {
    return cost_table(WeightedSegmentStats(stats, weights), stats.d(), min_segment_len);
}

}  // namespace mixseg
