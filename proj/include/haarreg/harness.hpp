#pragma once

#include "haarreg/design.hpp"
#include "haarreg/dyadic.hpp"
#include "haarreg/error.hpp"
#include "haarreg/estimator.hpp"
#include "haarreg/lattice.hpp"
#include "haarreg/rng.hpp"
#include "haarreg/wavelet_basis.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <string>
#include <thread>
#include <vector>

namespace haarreg {

enum class Mode { Dependent, Independent };

inline std::string to_string(Mode m) { return m == Mode::Dependent ? "dependent" : "independent"; }

/// How the truncation bound beta is chosen for each fitted model.
struct BetaPolicy {
    enum class Kind { MaxAbsResponse, Fixed, Unbounded };
    Kind kind = Kind::MaxAbsResponse;
    double value = 0.0;

    [[nodiscard]] double resolve(const LabeledSample& learning) const {
        switch (kind) {
        case Kind::MaxAbsResponse: return max_abs_response(learning);
        case Kind::Fixed: return value;
        case Kind::Unbounded: return std::numeric_limits<double>::infinity();
        }
        return value;
    }
};

inline std::vector<double> default_lambda_grid() { return {0.0, 0.04, 0.08, 0.12, 0.16, 0.20}; }

struct ExperimentConfig {
    std::size_t size = 40;
    Boundary boundary = Boundary::Free;
    double eta = 0.25;
    std::size_t iterations = 1000;
    std::size_t replications = 1000;
    Design design = Design::A;
    Regression regression = Regression::M1;
    Mode mode = Mode::Dependent;
    std::vector<double> lambda_grid = default_lambda_grid();
    int resolution = 5;
    int j0 = 0;
    std::int64_t w = 1;
    BetaPolicy beta;
    std::uint64_t seed = 42;
    std::size_t workers = 1;
    /// Replaces the named regression function when set (labels keep `regression`).
    TruthFn truth;

    [[nodiscard]] TruthFn truth_function() const { return truth ? truth : regression_function(regression); }
    [[nodiscard]] DyadicDomain domain() const { return DyadicDomain{j0, resolution, w, 2}; }

    void validate() const {
        if (size == 0) throw Error(ErrorCode::InvalidConfig, "lattice size must be positive");
        if (iterations == 0) throw Error(ErrorCode::InvalidConfig, "need at least one Gibbs iteration");
        if (replications == 0) throw Error(ErrorCode::InvalidConfig, "need at least one replication");
        if (workers == 0) throw Error(ErrorCode::InvalidConfig, "need at least one worker");
        if (lambda_grid.empty()) throw Error(ErrorCode::InvalidConfig, "lambda grid is empty");
        for (std::size_t i = 0; i < lambda_grid.size(); ++i) {
            if (!(lambda_grid[i] >= 0.0)) throw Error(ErrorCode::InvalidConfig, "lambda values must be non-negative");
            if (i > 0 && !(lambda_grid[i] > lambda_grid[i - 1]))
                throw Error(ErrorCode::InvalidConfig, "lambda grid must be strictly ascending");
        }
        if (beta.kind == BetaPolicy::Kind::Fixed && !(beta.value > 0.0))
            throw Error(ErrorCode::InvalidConfig, "fixed beta must be positive");
        domain().validate();
    }
};

struct ResultRow {
    double lambda = 0.0;
    Design design = Design::A;
    Regression regression = Regression::M1;
    Mode mode = Mode::Dependent;
    double mean_l2 = 0.0;
    double sd_l2 = 0.0;
    std::size_t replications = 0;
    std::uint64_t seed = 0;
};

/// Seed roles of one replication. The test role does not depend on the mode,
/// so dependent and independent runs are scored on identical X' samples.
enum class SeedRole : std::uint64_t { Learn = 1, Test = 2, Chain = 3 };

inline std::uint64_t replication_seed(std::uint64_t master, std::size_t replication, SeedRole role) {
    return rng::derive(master, {static_cast<std::uint64_t>(replication), static_cast<std::uint64_t>(role)});
}

/// Monte Carlo L2 error: |X'|^-1 sum_i (mhat(X'_i) - m(X'_i))^2.
inline double l2_error(const ThresholdedModel& model, const TruthFn& truth, const LabeledSample& test) {
    if (test.empty()) throw Error(ErrorCode::EmptySample, "test design is empty");
    CompensatedSum sum;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto x = test.point(i);
        const double r = model.predict(x) - truth(x);
        sum.add(r * r);
    }
    return sum.value() / static_cast<double>(test.size());
}

/// L2 errors of one fitted basis at every lambda of a grid. Each test point
/// is located once; the per-lambda sums reproduce ThresholdedModel::predict.
inline std::vector<double> l2_errors_over_grid(const EmpiricalBasis& basis, const CoefficientVector& coeffs, double beta,
                                               const TruthFn& truth, const LabeledSample& test, std::span<const double> grid) {
    if (test.empty()) throw Error(ErrorCode::EmptySample, "test design is empty");
    std::vector<CompensatedSum> sums(grid.size());
    std::vector<std::pair<std::size_t, double>> terms;
    for (std::size_t i = 0; i < test.size(); ++i) {
        const auto x = test.point(i);
        terms.clear();
        basis.for_each_term(x, [&](std::size_t k, double value) { terms.emplace_back(k, value); });
        const double target = truth(x);
        for (std::size_t g = 0; g < grid.size(); ++g) {
            double s = 0.0;
            for (const auto& [k, value] : terms)
                if (std::abs(coeffs[k]) > grid[g]) s += coeffs[k] * value;
            const double r = truncate(s, beta) - target;
            sums[g].add(r * r);
        }
    }
    std::vector<double> out(grid.size());
    for (std::size_t g = 0; g < grid.size(); ++g) out[g] = sums[g].value() / static_cast<double>(test.size());
    return out;
}

/// Runs body(i) for i in [0, count) on `workers` threads. Failures are
/// reported for the lowest failing index.
template <class Body>
void parallel_for(std::size_t count, std::size_t workers, Body&& body) {
    std::atomic<std::size_t> next{0};
    std::mutex failure_lock;
    std::optional<std::size_t> failed_index;
    std::exception_ptr failure;
    auto worker = [&] {
        for (;;) {
            const std::size_t i = next.fetch_add(1);
            if (i >= count) return;
            try {
                body(i);
            } catch (...) {
                std::lock_guard lock(failure_lock);
                if (!failed_index || i < *failed_index) {
                    failed_index = i;
                    failure = std::current_exception();
                }
            }
        }
    };
    const std::size_t threads = std::min(workers, std::max<std::size_t>(count, 1));
    if (threads <= 1) {
        worker();
    } else {
        std::vector<std::jthread> pool;
        pool.reserve(threads);
        for (std::size_t t = 0; t < threads; ++t) pool.emplace_back(worker);
    }
    if (failed_index) {
        try {
            std::rethrow_exception(failure);
        } catch (const std::exception& e) {
            throw Error(ErrorCode::ReplicationFailed, "replication " + std::to_string(*failed_index) + ": " + e.what());
        }
    }
}

/// Mean and sample standard deviation (denominator M - 1; zero when M = 1),
/// summed in index order.
inline std::pair<double, double> mean_and_sd(std::span<const double> values) {
    double sum = 0.0;
    for (double v : values) sum += v;
    const double mean = sum / static_cast<double>(values.size());
    if (values.size() < 2) return {mean, 0.0};
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);
    return {mean, std::sqrt(ss / static_cast<double>(values.size() - 1))};
}

/// Produces the learning samples of an experiment, one per replication.
class LearningSampler {
public:
    explicit LearningSampler(const ExperimentConfig& config) : config_(config), truth_(config.truth_function()) {
        if (config_.mode == Mode::Dependent)
            generator_ = std::make_shared<const DependentSampleGenerator>(
                LatticeGraph(config_.size, config_.size, config_.boundary), regression_car_spec(config_.eta));
    }

    [[nodiscard]] LabeledSample learning(std::size_t replication) const {
        if (generator_)
            return generator_->sample(config_.design, truth_, config_.iterations,
                                      replication_seed(config_.seed, replication, SeedRole::Chain));
        return independent_reference(config_.size, config_.size, config_.design, truth_,
                                     replication_seed(config_.seed, replication, SeedRole::Learn));
    }

    [[nodiscard]] LabeledSample test(std::size_t replication) const {
        return independent_design(config_.size * config_.size, config_.design,
                                  replication_seed(config_.seed, replication, SeedRole::Test));
    }

    [[nodiscard]] const TruthFn& truth() const noexcept { return truth_; }

private:
    ExperimentConfig config_;
    TruthFn truth_;
    std::shared_ptr<const DependentSampleGenerator> generator_;
};

/// Per-replication L2 errors, indexed [replication][lambda].
inline std::vector<std::vector<double>> run_replications(const ExperimentConfig& config) {
    config.validate();
    const LearningSampler sampler(config);
    std::vector<std::vector<double>> errors(config.replications);
    parallel_for(config.replications, config.workers, [&](std::size_t r) {
        const auto learning = sampler.learning(r);
        const auto test = sampler.test(r);
        const SampleIndex index(learning, config.domain());
        const auto basis = build_basis(index);
        const auto coeffs = fit_coefficients(basis, learning);
        errors[r] = l2_errors_over_grid(basis, coeffs, config.beta.resolve(learning), sampler.truth(), test, config.lambda_grid);
    });
    return errors;
}

inline std::vector<ResultRow> run_experiment(const ExperimentConfig& config) {
    const auto errors = run_replications(config);
    std::vector<ResultRow> rows;
    std::vector<double> column(config.replications);
    for (std::size_t g = 0; g < config.lambda_grid.size(); ++g) {
        for (std::size_t r = 0; r < config.replications; ++r) column[r] = errors[r][g];
        const auto [mean, sd] = mean_and_sd(column);
        rows.push_back(ResultRow{config.lambda_grid[g], config.design, config.regression, config.mode, mean, sd,
                                 config.replications, config.seed});
    }
    return rows;
}

} // namespace haarreg
