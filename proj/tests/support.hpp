#pragma once

#include "haarreg/dyadic.hpp"
#include "haarreg/rng.hpp"
#include "haarreg/wavelet_basis.hpp"

#include <algorithm>
#include <bit>
#include <limits>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <numbers>
#include <span>
#include <vector>

// Reference computations used by the tests. They recompute quantities
// directly from their definitions and share no code paths with the library
// beyond the sample container.

namespace haarreg::oracle {

using Fn = std::function<double(std::span<const double>)>;

/// <f, g>_n evaluated pointwise.
inline double empirical_dot(const Fn& f, const Fn& g, const LabeledSample& sample) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < sample.size(); ++i) s += static_cast<long double>(f(sample.point(i))) * g(sample.point(i));
    return static_cast<double>(s / static_cast<long double>(sample.size()));
}

/// Random sample in [-w, w)^d with optional clustering onto a coarse grid, so
/// that empty and single-point cubes are common.
inline LabeledSample random_sample(rng::Stream& rng, std::size_t n, std::size_t d, double half_width, bool clustered) {
    LabeledSample sample(d);
    std::vector<double> x(d);
    for (std::size_t i = 0; i < n; ++i) {
        for (auto& c : x) {
            double u = rng.uniform();
            if (clustered) u = std::floor(u * 7.0) / 7.0 + 0.01 * rng.uniform();
            c = (2.0 * u - 1.0) * half_width;
        }
        sample.add(x, 3.0 * rng.normal() + x[0]);
    }
    return sample;
}

/// Largest eigenvalue of the free path graph on n vertices.
inline double path_max_eigenvalue(std::size_t n) { return 2.0 * std::cos(std::numbers::pi / static_cast<double>(n + 1)); }

/// Kolmogorov-Smirnov distance of a sample to Uniform[-1, 1].
inline double ks_uniform(std::vector<double> values) {
    std::sort(values.begin(), values.end());
    const double n = static_cast<double>(values.size());
    double d = 0.0;
    for (std::size_t i = 0; i < values.size(); ++i) {
        const double f = (values[i] + 1.0) / 2.0;
        d = std::max({d, (static_cast<double>(i) + 1.0) / n - f, f - static_cast<double>(i) / n});
    }
    return d;
}

/// 1% critical value of the one-sample KS statistic (asymptotic).
inline double ks_critical_1pct(std::size_t n) { return 1.628 / std::sqrt(static_cast<double>(n)); }

inline double pearson(std::span<const double> a, std::span<const double> b) {
    const double n = static_cast<double>(a.size());
    double ma = 0.0;
    double mb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        ma += a[i];
        mb += b[i];
    }
    ma /= n;
    mb /= n;
    double sab = 0.0;
    double saa = 0.0;
    double sbb = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        sab += (a[i] - ma) * (b[i] - mb);
        saa += (a[i] - ma) * (a[i] - ma);
        sbb += (b[i] - mb) * (b[i] - mb);
    }
    return sab / std::sqrt(saa * sbb);
}

/// Values of every basis function at every sample point, [k][s].
inline std::vector<std::vector<double>> values_at_sample(const EmpiricalBasis& basis, const LabeledSample& sample) {
    std::vector<std::vector<double>> out(basis.size(), std::vector<double>(sample.size()));
    for (std::size_t k = 0; k < basis.size(); ++k)
        for (std::size_t s = 0; s < sample.size(); ++s) out[k][s] = basis[k](sample.point(s));
    return out;
}

/// n^-1 sum a_i b_i in extended precision.
inline double dot(std::span<const double> a, std::span<const double> b) {
    long double s = 0.0L;
    for (std::size_t i = 0; i < a.size(); ++i) s += static_cast<long double>(a[i]) * b[i];
    return static_cast<double>(s / static_cast<long double>(a.size()));
}

/// Empirical norm of the part of `target` orthogonal to the orthonormal `system`.
inline double projection_residual(const std::vector<double>& target, const std::vector<std::vector<double>>& system) {
    std::vector<double> r = target;
    for (int pass = 0; pass < 2; ++pass)
        for (const auto& f : system) {
            const double c = dot(r, f);
            for (std::size_t i = 0; i < r.size(); ++i) r[i] -= c * f[i];
        }
    return std::sqrt(std::max(dot(r, r), 0.0));
}

/// Exhaustive minimiser of n^-1 sum_s (sum_{j in S} a_j f_j(X_s) - Y_s)^2 + lambda^2 |S|
/// over all subsets S. Objectives within `tie` of the minimum count as equal
/// and the smallest such subset wins; the result is sorted.
inline std::vector<std::size_t> exhaustive_l0(const std::vector<std::vector<double>>& values, std::span<const double> y,
                                              std::span<const double> a, double lambda, double tie) {
    const std::size_t k = values.size();
    std::vector<double> objective(std::size_t{1} << k);
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t mask = 0; mask < objective.size(); ++mask) {
        long double sse = 0.0L;
        for (std::size_t s = 0; s < y.size(); ++s) {
            long double fit = 0.0L;
            for (std::size_t j = 0; j < k; ++j)
                if (mask >> j & 1) fit += static_cast<long double>(a[j]) * values[j][s];
            sse += (fit - y[s]) * (fit - y[s]);
        }
        objective[mask] = static_cast<double>(sse / static_cast<long double>(y.size())) +
                          lambda * lambda * static_cast<double>(std::popcount(mask));
        best = std::min(best, objective[mask]);
    }
    std::size_t chosen = 0;
    int chosen_size = std::numeric_limits<int>::max();
    for (std::size_t mask = 0; mask < objective.size(); ++mask)
        if (objective[mask] <= best + tie && std::popcount(mask) < chosen_size) {
            chosen = mask;
            chosen_size = std::popcount(mask);
        }
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < k; ++j)
        if (chosen >> j & 1) out.push_back(j);
    return out;
}

} // namespace haarreg::oracle
