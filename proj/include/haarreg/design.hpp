#pragma once

#include "haarreg/car.hpp"
#include "haarreg/dyadic.hpp"
#include "haarreg/error.hpp"
#include "haarreg/lattice.hpp"
#include "haarreg/rng.hpp"

#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <memory>
#include <numbers>
#include <span>
#include <string>
#include <vector>

namespace haarreg {

enum class Design { A, B };
enum class Regression { M1, M2 };

using TruthFn = std::function<double(std::span<const double>)>;

inline std::string to_string(Design d) { return d == Design::A ? "a" : "b"; }
inline std::string to_string(Regression r) { return r == Regression::M1 ? "m1" : "m2"; }

/// Probability-integral transform of a standard normal onto [-1, 1]: 2 Phi(z) - 1.
inline double transform_a(double z) { return std::erf(z / std::numbers::sqrt2); }

/// Piecewise-linear warp of the second design coordinate. On the [0, 1]
/// scale u = (x + 1) / 2, u < 0.1 goes to [0, 0.5) and the rest to [0.5, 1].
inline double transform_b(double x2) {
    if (!(x2 >= -1.0 && x2 <= 1.0)) throw Error(ErrorCode::OutOfRange, "transform_b expects a value in [-1, 1]");
    const double u = 0.5 * (x2 + 1.0);
    const double warped = u < 0.1 ? (0.5 / 0.1) * u : (0.5 - 0.1) / (1.0 - 0.1) + (1.0 - 0.5) / (1.0 - 0.1) * u;
    return 2.0 * warped - 1.0;
}

inline double regression_m1(std::span<const double> x) { return 4.0 + 6.0 * x[0] * x[0] - 4.0 * x[1] * x[1]; }

inline double regression_m2(std::span<const double> x) {
    const double m = regression_m1(x);
    return std::hypot(x[0], x[1]) <= 0.5 ? m : -m;
}

inline TruthFn regression_function(Regression r) {
    return r == Regression::M1 ? TruthFn(regression_m1) : TruthFn(regression_m2);
}

/// Design point from a pair of standard normal variates.
inline std::array<double, 2> design_point(double z1, double z2, Design design) {
    std::array<double, 2> x{transform_a(z1), transform_a(z2)};
    if (design == Design::B) x[1] = transform_b(x[1]);
    return x;
}

/// Correlation of the innovations of the first two components (the third is
/// independent). For the CAR law used here this is also the stationary
/// correlation of Z1(v) and Z2(v) at every site.
inline constexpr double kDesignCorrelation = 0.7;

inline CarSpec regression_car_spec(double eta, double rho12 = kDesignCorrelation) {
    CarSpec spec;
    spec.eta = eta;
    spec.components = 3;
    spec.rho0 = Eigen::MatrixXd::Identity(3, 3);
    spec.rho0(0, 1) = spec.rho0(1, 0) = rho12;
    return spec;
}

/// Appends one site to a regression sample: X from (z1, z2), Y = m(X) + sigma(X) * eps.
inline void append_observation(LabeledSample& sample, std::span<const std::int64_t> site, double z1, double z2, double eps,
                               Design design, const TruthFn& truth, const TruthFn& sigma) {
    const auto x = design_point(z1, z2, design);
    const double scale = sigma ? sigma(x) : 1.0;
    sample.add(x, truth(x) + scale * eps, site);
}

/// Simulates dependent regression samples on one lattice. The stationary
/// standard deviations used to standardise each component are computed once.
class DependentSampleGenerator {
public:
    DependentSampleGenerator(LatticeGraph graph, CarSpec spec)
        : graph_(std::move(graph)), cover_(conclique_cover(graph_)), spec_(std::move(spec)) {
        if (spec_.components != 3) throw Error(ErrorCode::InvalidConfig, "regression samples need a 3-component field");
        check_admissible(graph_, spec_);
        const auto var = stationary_variances(graph_, spec_);
        sd_.reserve(var.size());
        for (double v : var) sd_.push_back(std::sqrt(v));
    }

    [[nodiscard]] const LatticeGraph& graph() const noexcept { return graph_; }
    [[nodiscard]] const CarSpec& spec() const noexcept { return spec_; }
    [[nodiscard]] std::span<const double> stationary_sd() const noexcept { return sd_; }

    [[nodiscard]] FieldState simulate(std::size_t iterations, std::uint64_t seed) const {
        if (iterations == 0) throw Error(ErrorCode::InvalidConfig, "need at least one iteration");
        GibbsSampler sampler(graph_, cover_, spec_, seed, false);
        sampler.run(iterations);
        return sampler.state();
    }

    /// Field with every component shifted by its mean and divided by its stationary sd.
    [[nodiscard]] FieldState standardize(FieldState state) const {
        for (std::size_t v = 0; v < state.sites; ++v)
            for (std::size_t c = 0; c < state.components; ++c)
                state.values[v * state.components + c] = (state.values[v * state.components + c] - spec_.mean_at(v)) / sd_[v];
        return state;
    }

    [[nodiscard]] LabeledSample regression_sample(const FieldState& standardized, Design design, const TruthFn& truth,
                                                  const TruthFn& sigma = {}) const {
        LabeledSample sample(2, 2);
        for (std::size_t v = 0; v < graph_.size(); ++v) {
            const auto [s1, s2] = graph_.coords(v);
            const std::array<std::int64_t, 2> site{static_cast<std::int64_t>(s1), static_cast<std::int64_t>(s2)};
            append_observation(sample, site, standardized(v, 0), standardized(v, 1), standardized(v, 2), design, truth, sigma);
        }
        return sample;
    }

    [[nodiscard]] LabeledSample sample(Design design, const TruthFn& truth, std::size_t iterations, std::uint64_t seed,
                                       const TruthFn& sigma = {}) const {
        return regression_sample(standardize(simulate(iterations, seed)), design, truth, sigma);
    }

private:
    LatticeGraph graph_;
    ConcliqueCover cover_;
    CarSpec spec_;
    std::vector<double> sd_;
};

inline LabeledSample make_regression_sample(const LatticeGraph& graph, const CarSpec& spec, Design design, Regression regression,
                                            std::size_t iterations, std::uint64_t seed, const TruthFn& sigma = {}) {
    return DependentSampleGenerator(graph, spec).sample(design, regression_function(regression), iterations, seed, sigma);
}

/// |V| i.i.d. observations with the marginal law of the dependent design:
/// (Z1, Z2) standard bivariate normal with correlation rho12, Z3 independent.
/// Sites are numbered like the lattice (row-major over rows x cols).
inline LabeledSample independent_reference(std::size_t rows, std::size_t cols, Design design, const TruthFn& truth,
                                           std::uint64_t seed, double rho12 = kDesignCorrelation, const TruthFn& sigma = {}) {
    rng::Stream stream(seed);
    const double tail = std::sqrt(1.0 - rho12 * rho12);
    LabeledSample sample(2, 2);
    for (std::size_t s1 = 0; s1 < rows; ++s1) {
        for (std::size_t s2 = 0; s2 < cols; ++s2) {
            const double z1 = stream.normal();
            const double z2 = rho12 * z1 + tail * stream.normal();
            const double z3 = stream.normal();
            const std::array<std::int64_t, 2> site{static_cast<std::int64_t>(s1), static_cast<std::int64_t>(s2)};
            append_observation(sample, site, z1, z2, z3, design, truth, sigma);
        }
    }
    return sample;
}

/// Design points only, drawn i.i.d. from the same marginal law.
inline LabeledSample independent_design(std::size_t count, Design design, std::uint64_t seed, double rho12 = kDesignCorrelation) {
    rng::Stream stream(seed);
    const double tail = std::sqrt(1.0 - rho12 * rho12);
    LabeledSample sample(2);
    for (std::size_t i = 0; i < count; ++i) {
        const double z1 = stream.normal();
        const double z2 = rho12 * z1 + tail * stream.normal();
        sample.add(design_point(z1, z2, design));
    }
    return sample;
}

} // namespace haarreg
