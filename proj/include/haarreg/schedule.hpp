#pragma once

#include "haarreg/error.hpp"
#include "haarreg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

namespace haarreg {

/// Inputs of the asymptotic tuning rules for Hoelder-continuous targets.
/// tau may be +infinity (bounded errors).
struct ScheduleParams {
    double r = 1.0;      ///< Hoelder exponent
    double tau = 2.0;    ///< error tail exponent
    double gamma = 1.0;  ///< moment of ||X|| (unbounded designs only)
    double c0 = 1.0;
    double c1 = 1.0;
    double c2 = 0.0;
    bool bounded = true;
    std::size_t d = 2;
};

struct RateSchedule {
    double r_tilde = 0.0;
    double log_r_tilde = 0.0;
    double lambda2 = 0.0;
    int j1 = 0;
    /// Domain half-width; only defined for unbounded designs.
    std::optional<std::int64_t> w;

    /// (2 * 2^(j1 - j0) * w)^d with w = 1 for bounded designs.
    [[nodiscard]] double max_basis_size(std::size_t d, int j0 = 0) const {
        const double width = w ? static_cast<double>(*w) : 1.0;
        return std::pow(2.0 * std::ldexp(1.0, j1 - j0) * width, static_cast<double>(d));
    }
};

/// R~(n) = (prod log n_i)^(3 + 4/tau) / |I_n|^(1/(N+1)) and the derived
/// threshold, finest level and (unbounded designs) domain width.
inline RateSchedule theoretical_schedule(std::span<const double> n, const ScheduleParams& p) {
    if (n.empty()) throw Error(ErrorCode::DomainError, "lattice extent vector is empty");
    for (double ni : n)
        if (!(ni >= 3.0)) throw Error(ErrorCode::DomainError, "every lattice extent must be at least 3");
    if (!(p.r > 0.0) || !(p.tau > 0.0) || !(p.gamma > 0.0) || !(p.c0 > 0.0) || !(p.c1 > 0.0) || p.d == 0)
        throw Error(ErrorCode::DomainError, "schedule parameters must be positive");
    if (!std::isfinite(p.c2)) throw Error(ErrorCode::DomainError, "C2 must be finite");

    const double big_n = static_cast<double>(n.size());
    const double d = static_cast<double>(p.d);
    const double q = 1.0 + 2.0 / p.tau;  // 1 when tau is infinite
    double sum_loglog = 0.0;
    double sum_log = 0.0;
    for (double ni : n) {
        sum_loglog += std::log(std::log(ni));
        sum_log += std::log(ni);
    }

    RateSchedule out;
    out.log_r_tilde = (3.0 + 4.0 / p.tau) * sum_loglog - sum_log / (big_n + 1.0);
    out.r_tilde = std::exp(out.log_r_tilde);
    const double log_r = out.log_r_tilde;
    if (p.bounded) {
        const double denom = 2.0 * p.r + d * q;
        out.lambda2 = p.c1 * std::exp((2.0 * p.r + d) / denom * log_r);
        out.j1 = static_cast<int>(std::floor(p.c2 - log_r / (denom * std::numbers::ln2)));
    } else {
        const double denom = 2.0 * p.r * d * q + p.gamma * (2.0 * p.r + d * q);
        out.w = static_cast<std::int64_t>(std::floor(p.c0 * std::exp(-2.0 * p.r / denom * log_r)));
        out.lambda2 = p.c1 * std::exp((2.0 * p.r * d + (2.0 * p.r + d) * p.gamma) / denom * log_r);
        out.j1 = static_cast<int>(std::floor(p.c2 - p.gamma / denom * log_r / std::numbers::ln2));
    }
    return out;
}

struct RateProbeRow {
    std::size_t side = 0;
    std::size_t n = 0;
    double lambda = 0.0;
    int resolution = 0;
    double mean_l2 = 0.0;
    double sd_l2 = 0.0;
};

struct RateProbeResult {
    std::vector<RateProbeRow> rows;
    /// Least-squares slope of log(mean L2) against log(n).
    double slope = 0.0;
};

inline double log_log_slope(std::span<const RateProbeRow> rows) {
    double mx = 0.0;
    double my = 0.0;
    for (const auto& row : rows) {
        if (!(row.mean_l2 > 0.0)) throw Error(ErrorCode::DomainError, "log-log slope needs positive errors");
        mx += std::log(static_cast<double>(row.n));
        my += std::log(row.mean_l2);
    }
    mx /= static_cast<double>(rows.size());
    my /= static_cast<double>(rows.size());
    double sxy = 0.0;
    double sxx = 0.0;
    for (const auto& row : rows) {
        const double dx = std::log(static_cast<double>(row.n)) - mx;
        sxy += dx * (std::log(row.mean_l2) - my);
        sxx += dx * dx;
    }
    return sxy / sxx;
}

/// Runs the experiment once per lattice side. Without a schedule every size
/// uses the configured grid and resolution and reports its best lambda; with
/// one, lambda and the finest level come from theoretical_schedule.
inline RateProbeResult rate_probe(const ExperimentConfig& base, std::span<const std::size_t> sides,
                                  const std::optional<ScheduleParams>& schedule = std::nullopt) {
    if (sides.size() < 3) throw Error(ErrorCode::InvalidLadder, "a size ladder needs at least three lattice sizes");
    for (std::size_t i = 1; i < sides.size(); ++i)
        if (sides[i] <= sides[i - 1]) throw Error(ErrorCode::InvalidLadder, "ladder sizes must be strictly increasing");
    RateProbeResult out;
    for (auto side : sides) {
        ExperimentConfig config = base;
        config.size = side;
        if (schedule) {
            const std::vector<double> extents{static_cast<double>(side), static_cast<double>(side)};
            const auto s = theoretical_schedule(extents, *schedule);
            config.lambda_grid = {std::sqrt(s.lambda2)};
            config.resolution = std::max(s.j1, config.j0);
        }
        const auto rows = run_experiment(config);
        const auto best = std::min_element(rows.begin(), rows.end(), [](const auto& a, const auto& b) { return a.mean_l2 < b.mean_l2; });
        out.rows.push_back(RateProbeRow{side, side * side, best->lambda, config.resolution, best->mean_l2, best->sd_l2});
    }
    out.slope = log_log_slope(out.rows);
    return out;
}

} // namespace haarreg
