#pragma once

#include <cmath>
#include <cstddef>
#include <numbers>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "mixseg/detail/parallel.hpp"
#include "mixseg/types.hpp"

namespace mixseg {

enum class WaveletFamily { Haar };

struct WaveletConfig {
    int level = 3;
    WaveletFamily family = WaveletFamily::Haar;
};

// Approximation and per-level detail coefficients of an orthonormal Haar
// pyramid. details[0] is the finest level (first pass), details.back() the
// coarsest.
template <class Real>
struct HaarDecomposition {
    std::vector<Real> approx;
    std::vector<std::vector<Real>> details;
};

namespace detail {

inline void check_haar_length(std::size_t H, int level) {
    if (level < 0) throw std::invalid_argument("wavelet level must be >= 0");
    if (level >= static_cast<int>(sizeof(std::size_t) * 8) || H == 0 || H % (std::size_t{1} << level) != 0)
        throw std::invalid_argument("signal length " + std::to_string(H) + " is not divisible by 2^" +
                                    std::to_string(level));
}

// One pyramid pass: pairs (a, b) -> ((a+b)/sqrt2, (a-b)/sqrt2).
template <class Real>
void haar_pass(std::span<const Real> in, std::span<Real> approx, std::span<Real> detail) {
    const Real inv_sqrt2 = Real(1) / std::numbers::sqrt2_v<Real>;
    for (std::size_t q = 0; q < approx.size(); ++q) {
        const Real a = in[2 * q], b = in[2 * q + 1];
        approx[q] = (a + b) * inv_sqrt2;
        if (!detail.empty()) detail[q] = (a - b) * inv_sqrt2;
    }
}

}  // namespace detail

// Level-`level` approximation coefficients, length H / 2^level.
template <class Real>
std::vector<Real> dwt_haar_approx(std::span<const Real> signal, int level) {
    detail::check_haar_length(signal.size(), level);
    std::vector<Real> cur(signal.begin(), signal.end());
    std::vector<Real> next;
    for (int lev = 0; lev < level; ++lev) {
        next.assign(cur.size() / 2, Real(0));
        detail::haar_pass<Real>(cur, next, {});
        cur.swap(next);
    }
    return cur;
}

template <class Real>
std::vector<Real> dwt_haar_approx(const std::vector<Real>& signal, int level) {
    return dwt_haar_approx(std::span<const Real>(signal), level);
}

template <class Real>
HaarDecomposition<Real> dwt_haar_full(std::span<const Real> signal, int level) {
    detail::check_haar_length(signal.size(), level);
    HaarDecomposition<Real> out;
    out.approx.assign(signal.begin(), signal.end());
    std::vector<Real> next;
    for (int lev = 0; lev < level; ++lev) {
        const std::size_t half = out.approx.size() / 2;
        next.assign(half, Real(0));
        std::vector<Real> det(half);
        detail::haar_pass<Real>(out.approx, next, det);
        out.approx.swap(next);
        out.details.push_back(std::move(det));
    }
    return out;
}

template <class Real>
HaarDecomposition<Real> dwt_haar_full(const std::vector<Real>& signal, int level) {
    return dwt_haar_full(std::span<const Real>(signal), level);
}

// Exact inverse of dwt_haar_full.
template <class Real>
std::vector<Real> idwt_haar(const HaarDecomposition<Real>& dec) {
    const Real inv_sqrt2 = Real(1) / std::numbers::sqrt2_v<Real>;
    std::vector<Real> cur = dec.approx;
    for (auto it = dec.details.rbegin(); it != dec.details.rend(); ++it) {
        if (it->size() != cur.size()) throw ShapeError("idwt_haar: detail length mismatch");
        std::vector<Real> up(2 * cur.size());
        for (std::size_t q = 0; q < cur.size(); ++q) {
            up[2 * q] = (cur[q] + (*it)[q]) * inv_sqrt2;
            up[2 * q + 1] = (cur[q] - (*it)[q]) * inv_sqrt2;
        }
        cur.swap(up);
    }
    return cur;
}

// Projects every (individual, time unit) curve onto its Haar approximation
// coefficients: p = H / 2^level.
inline CoefficientTensor project_dataset(const FunctionalDataset& ds, const WaveletConfig& cfg, int threads = 1) {
    ds.check();
    detail::check_haar_length(ds.H(), cfg.level);
    const std::size_t p = ds.H() >> cfg.level;
    CoefficientTensor out;
    out.y = Tensor3<double>(ds.n(), ds.d(), p);
    out.level = cfg.level;
    out.source_H = static_cast<int>(ds.H());
    detail::parallel_for(ds.n(), threads, [&](std::size_t i) {
        for (std::size_t j = 0; j < ds.d(); ++j) {
            const auto coeffs = dwt_haar_approx<double>(ds.curves.cell(i, j), cfg.level);
            std::copy(coeffs.begin(), coeffs.end(), out.y.cell(i, j).begin());
        }
    });
    return out;
}

}  // namespace mixseg
