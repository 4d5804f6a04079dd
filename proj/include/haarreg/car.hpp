#pragma once

#include "haarreg/error.hpp"
#include "haarreg/lattice.hpp"
#include "haarreg/rng.hpp"

#include <Eigen/Dense>
#include <Eigen/SparseCholesky>

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace haarreg {

/// Gaussian conditional autoregression with C = eta * H and T = tau2 * I.
/// With p > 1 components each one follows the same CAR law and the p site
/// innovations are jointly normal with correlation `rho0`.
struct CarSpec {
    double eta = 0.0;
    double alpha = 0.0;
    /// Per-site means; overrides `alpha` when non-empty.
    std::vector<double> site_alpha;
    double tau2 = 1.0;
    std::size_t components = 1;
    /// p x p innovation correlation; empty means identity.
    Eigen::MatrixXd rho0;

    [[nodiscard]] double mean_at(std::size_t v) const { return site_alpha.empty() ? alpha : site_alpha[v]; }

    [[nodiscard]] Eigen::MatrixXd correlation() const {
        return rho0.size() == 0 ? Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(components), static_cast<Eigen::Index>(components))
                                : rho0;
    }

    /// Lower Cholesky factor of the innovation correlation; validates rho0.
    [[nodiscard]] Eigen::MatrixXd innovation_factor() const {
        if (components == 0) throw Error(ErrorCode::InvalidConfig, "need at least one component");
        const Eigen::MatrixXd r = correlation();
        const auto p = static_cast<Eigen::Index>(components);
        if (r.rows() != p || r.cols() != p) throw Error(ErrorCode::InvalidConfig, "rho0 must be p x p");
        for (Eigen::Index i = 0; i < p; ++i) {
            if (std::abs(r(i, i) - 1.0) > 1e-12) throw Error(ErrorCode::InvalidConfig, "rho0 must have unit diagonal");
            for (Eigen::Index j = 0; j < i; ++j)
                if (std::abs(r(i, j) - r(j, i)) > 1e-12) throw Error(ErrorCode::InvalidConfig, "rho0 must be symmetric");
        }
        Eigen::LLT<Eigen::MatrixXd> llt(r);
        if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "rho0 is not positive definite");
        return llt.matrixL();
    }
};

struct NormalParams {
    double mean = 0.0;
    double variance = 1.0;
};

/// Full conditional of one site: N(alpha_v + eta * sum_w (y_w - alpha_w), tau2).
/// `neighbor_sites` is only consulted for per-site means.
inline NormalParams conditional_update(std::size_t site, std::span<const double> neighbor_values, const CarSpec& spec,
                                       std::span<const std::size_t> neighbor_sites = {}) {
    double deviation = 0.0;
    for (std::size_t k = 0; k < neighbor_values.size(); ++k) {
        const double mean_w = neighbor_sites.empty() ? spec.alpha : spec.mean_at(neighbor_sites[k]);
        deviation += neighbor_values[k] - mean_w;
    }
    return {spec.mean_at(site) + spec.eta * deviation, spec.tau2};
}

/// Values of every site (p per site, site-major) after `iteration` sweeps.
struct FieldState {
    std::size_t sites = 0;
    std::size_t components = 1;
    std::size_t iteration = 0;
    std::vector<double> values;

    [[nodiscard]] double operator()(std::size_t v, std::size_t c = 0) const { return values[v * components + c]; }
};

inline void check_admissible(const LatticeGraph& graph, const CarSpec& spec) {
    if (graph.edge_count() == 0) return;  // no coupling, every eta yields independent sites
    const auto range = admissible_eta_range(graph);
    if (!range.contains(spec.eta))
        throw Error(ErrorCode::InadmissibleEta, "eta = " + std::to_string(spec.eta) + " outside (" + std::to_string(range.lower) +
                                                    ", " + std::to_string(range.upper) + ")");
}

/// Conclique-blocked Gibbs sampler. Each sweep visits the colours in order
/// and redraws every site of a colour from its full conditional given the
/// current state. Random numbers are keyed by (seed, sweep, site), so the
/// result does not depend on the order in which sites of a conclique are
/// visited, nor on how that work is split.
class GibbsSampler {
public:
    GibbsSampler(const LatticeGraph& graph, ConcliqueCover cover, CarSpec spec, std::uint64_t seed, bool check_eta = true)
        : graph_(&graph), cover_(std::move(cover)), spec_(std::move(spec)), seed_(seed) {
        if (cover_.color.size() != graph.size()) throw Error(ErrorCode::InvalidConfig, "cover does not match the graph");
        if (!spec_.site_alpha.empty() && spec_.site_alpha.size() != graph.size())
            throw Error(ErrorCode::InvalidConfig, "per-site means must cover every site");
        if (!(spec_.tau2 > 0.0)) throw Error(ErrorCode::InvalidConfig, "tau2 must be positive");
        if (check_eta) check_admissible(graph, spec_);
        factor_ = spec_.innovation_factor();
        sd_ = std::sqrt(spec_.tau2);
        pairs_per_site_ = (spec_.components + 1) / 2;
        state_.sites = graph.size();
        state_.components = spec_.components;
        state_.values.assign(graph.size() * spec_.components, 0.0);
        means_.resize(spec_.components);
        draws_.resize(2 * pairs_per_site_);
        initialize();
    }

    [[nodiscard]] const FieldState& state() const noexcept { return state_; }
    [[nodiscard]] const ConcliqueCover& cover() const noexcept { return cover_; }

    /// One full iteration of the chain.
    void sweep() {
        ++state_.iteration;
        for (std::size_t c = 0; c < cover_.members.size(); ++c) update_sites(cover_.members[c]);
    }

    void run(std::size_t iterations) {
        for (std::size_t k = 0; k < iterations; ++k) sweep();
    }

    /// Advances the iteration counter and updates the given colours with the
    /// given site orders; exposed so tests can permute within a conclique.
    void sweep_with_orders(std::span<const std::vector<std::size_t>> orders) {
        ++state_.iteration;
        for (const auto& order : orders) update_sites(order);
    }

private:
    void initialize() {
        const rng::CounterRng stream(rng::derive(seed_, {0}));
        for (std::size_t v = 0; v < graph_->size(); ++v) {
            for (std::size_t c = 0; c < spec_.components; ++c) means_[c] = spec_.mean_at(v);
            draw_site(stream, v);
        }
    }

    void update_sites(std::span<const std::size_t> sites) {
        const rng::CounterRng stream(rng::derive(seed_, {state_.iteration}));
        const std::size_t p = spec_.components;
        for (auto v : sites) {
            const auto nb = graph_->neighbors(v);
            for (std::size_t c = 0; c < p; ++c) {
                double deviation = 0.0;
                for (auto w : nb) deviation += state_.values[w * p + c] - spec_.mean_at(w);
                means_[c] = spec_.mean_at(v) + spec_.eta * deviation;
            }
            draw_site(stream, v);
        }
    }

    void draw_site(const rng::CounterRng& stream, std::size_t v) {
        const std::size_t p = spec_.components;
        for (std::size_t k = 0; k < pairs_per_site_; ++k) {
            auto [a, b] = stream.normal_pair(v * pairs_per_site_ + k);
            draws_[2 * k] = a;
            draws_[2 * k + 1] = b;
        }
        for (std::size_t c = 0; c < p; ++c) {
            double z = 0.0;
            for (std::size_t k = 0; k <= c; ++k) z += factor_(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(k)) * draws_[k];
            state_.values[v * p + c] = means_[c] + sd_ * z;
        }
    }

    const LatticeGraph* graph_;
    ConcliqueCover cover_;
    CarSpec spec_;
    std::uint64_t seed_;
    Eigen::MatrixXd factor_;
    double sd_ = 1.0;
    std::size_t pairs_per_site_ = 1;
    FieldState state_;
    std::vector<double> means_;
    std::vector<double> draws_;
};

inline FieldState gibbs_run(const LatticeGraph& graph, const ConcliqueCover& cover, const CarSpec& spec, std::size_t iterations,
                            std::uint64_t seed) {
    if (iterations == 0) throw Error(ErrorCode::InvalidConfig, "need at least one iteration");
    GibbsSampler sampler(graph, cover, spec, seed);
    sampler.run(iterations);
    return sampler.state();
}

inline constexpr std::size_t kDenseCovarianceLimit = 2500;

/// (I - C)^-1 T for one component. The p-component covariance is this
/// matrix Kronecker rho0.
inline Eigen::MatrixXd analytic_covariance(const LatticeGraph& graph, const CarSpec& spec) {
    if (graph.size() > kDenseCovarianceLimit)
        throw Error(ErrorCode::TooLarge, std::to_string(graph.size()) + " sites exceed the dense limit of " +
                                             std::to_string(kDenseCovarianceLimit));
    if (graph.edge_count() > 0) {
        const auto range = admissible_eta_range(graph);
        if (!range.contains(spec.eta))
            throw Error(ErrorCode::NotPositiveDefinite, "I - eta H is singular or indefinite for eta = " + std::to_string(spec.eta));
    }
    const auto n = static_cast<Eigen::Index>(graph.size());
    const Eigen::MatrixXd m = Eigen::MatrixXd::Identity(n, n) - spec.eta * graph.adjacency();
    Eigen::LLT<Eigen::MatrixXd> llt(m);
    if (llt.info() != Eigen::Success) throw Error(ErrorCode::NotPositiveDefinite, "I - eta H is not positive definite");
    const Eigen::VectorXd pivots = llt.matrixLLT().diagonal();
    if (pivots.minCoeff() <= 1e-7 * pivots.maxCoeff())
        throw Error(ErrorCode::NotPositiveDefinite, "I - eta H is numerically singular");
    return spec.tau2 * llt.solve(Eigen::MatrixXd::Identity(n, n));
}

/// Stationary variance of every site, diag((I - C)^-1 T), from a sparse
/// Cholesky factorisation.
inline std::vector<double> stationary_variances(const LatticeGraph& graph, const CarSpec& spec) {
    const auto n = static_cast<Eigen::Index>(graph.size());
    Eigen::SparseMatrix<double> m(n, n);
    m.setIdentity();
    m -= spec.eta * graph.sparse_adjacency();
    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(m);
    if (ldlt.info() != Eigen::Success || (ldlt.vectorD().array() <= 0.0).any())
        throw Error(ErrorCode::NotPositiveDefinite, "I - eta H is not positive definite");
    std::vector<double> out(graph.size());
    Eigen::VectorXd unit = Eigen::VectorXd::Zero(n);
    for (Eigen::Index v = 0; v < n; ++v) {
        unit[v] = 1.0;
        out[static_cast<std::size_t>(v)] = spec.tau2 * ldlt.solve(unit)[v];
        unit[v] = 0.0;
    }
    return out;
}

} // namespace haarreg
