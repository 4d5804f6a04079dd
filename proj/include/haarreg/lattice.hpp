#pragma once

#include "haarreg/error.hpp"

#include <Eigen/Dense>
#include <Eigen/Sparse>

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <tuple>
#include <utility>
#include <vector>

namespace haarreg {

enum class Boundary { Free, Torus };

/// Rectangular two-dimensional lattice with four-nearest-neighbour edges.
/// Sites are numbered row-major: v = s1 * cols + s2.
class LatticeGraph {
public:
    LatticeGraph(std::size_t rows, std::size_t cols, Boundary boundary = Boundary::Free)
        : rows_(rows), cols_(cols), boundary_(boundary) {
        if (rows == 0 || cols == 0) throw Error(ErrorCode::InvalidLattice, "lattice dimensions must be positive");
        if (boundary == Boundary::Torus && (rows < 3 || cols < 3))
            throw Error(ErrorCode::InvalidLattice, "a torus needs at least 3 sites per axis");
        offsets_.reserve(size() + 1);
        offsets_.push_back(0);
        for (std::size_t v = 0; v < size(); ++v) {
            const auto [s1, s2] = coords(v);
            auto link = [&](std::ptrdiff_t a, std::ptrdiff_t b) {
                const auto r = static_cast<std::ptrdiff_t>(rows_);
                const auto c = static_cast<std::ptrdiff_t>(cols_);
                if (boundary_ == Boundary::Torus) {
                    a = (a + r) % r;
                    b = (b + c) % c;
                } else if (a < 0 || a >= r || b < 0 || b >= c) {
                    return;
                }
                neighbors_.push_back(index(static_cast<std::size_t>(a), static_cast<std::size_t>(b)));
            };
            const auto a = static_cast<std::ptrdiff_t>(s1);
            const auto b = static_cast<std::ptrdiff_t>(s2);
            link(a - 1, b);
            link(a, b - 1);
            link(a, b + 1);
            link(a + 1, b);
            offsets_.push_back(neighbors_.size());
        }
    }

    [[nodiscard]] std::size_t rows() const noexcept { return rows_; }
    [[nodiscard]] std::size_t cols() const noexcept { return cols_; }
    [[nodiscard]] Boundary boundary() const noexcept { return boundary_; }
    [[nodiscard]] std::size_t size() const noexcept { return rows_ * cols_; }
    [[nodiscard]] std::size_t edge_count() const noexcept { return neighbors_.size() / 2; }

    [[nodiscard]] std::size_t index(std::size_t s1, std::size_t s2) const noexcept { return s1 * cols_ + s2; }
    [[nodiscard]] std::pair<std::size_t, std::size_t> coords(std::size_t v) const noexcept { return {v / cols_, v % cols_}; }

    [[nodiscard]] std::span<const std::size_t> neighbors(std::size_t v) const {
        return std::span<const std::size_t>(neighbors_).subspan(offsets_[v], offsets_[v + 1] - offsets_[v]);
    }
    [[nodiscard]] std::size_t degree(std::size_t v) const { return offsets_[v + 1] - offsets_[v]; }
    [[nodiscard]] std::size_t max_degree() const {
        std::size_t m = 0;
        for (std::size_t v = 0; v < size(); ++v) m = std::max(m, degree(v));
        return m;
    }

    /// out = H x for the adjacency matrix H.
    void apply_adjacency(std::span<const double> x, std::span<double> out) const {
        for (std::size_t v = 0; v < size(); ++v) {
            double s = 0.0;
            for (auto w : neighbors(v)) s += x[w];
            out[v] = s;
        }
    }

    [[nodiscard]] Eigen::MatrixXd adjacency() const {
        Eigen::MatrixXd h = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
        for (std::size_t v = 0; v < size(); ++v)
            for (auto w : neighbors(v)) h(static_cast<Eigen::Index>(v), static_cast<Eigen::Index>(w)) = 1.0;
        return h;
    }

    [[nodiscard]] Eigen::SparseMatrix<double> sparse_adjacency() const {
        std::vector<Eigen::Triplet<double>> entries;
        entries.reserve(neighbors_.size());
        for (std::size_t v = 0; v < size(); ++v)
            for (auto w : neighbors(v)) entries.emplace_back(static_cast<int>(v), static_cast<int>(w), 1.0);
        Eigen::SparseMatrix<double> h(static_cast<Eigen::Index>(size()), static_cast<Eigen::Index>(size()));
        h.setFromTriplets(entries.begin(), entries.end());
        return h;
    }

private:
    std::size_t rows_;
    std::size_t cols_;
    Boundary boundary_;
    std::vector<std::size_t> offsets_;
    std::vector<std::size_t> neighbors_;
};

/// Partition of the sites into concliques (sets without internal edges).
struct ConcliqueCover {
    /// 1-based colour of every site.
    std::vector<int> color;
    int colors = 0;
    /// Sites of colour c + 1, ascending.
    std::vector<std::vector<std::size_t>> members;
};

/// Checkerboard cover by the parity of s1 + s2; a single conclique for a 1x1 lattice.
inline ConcliqueCover conclique_cover(const LatticeGraph& graph) {
    if (graph.boundary() == Boundary::Torus && (graph.rows() % 2 != 0 || graph.cols() % 2 != 0))
        throw Error(ErrorCode::NonBipartite, "a torus with an odd side admits no two-colouring");
    ConcliqueCover cover;
    cover.colors = graph.size() == 1 ? 1 : 2;
    cover.members.resize(static_cast<std::size_t>(cover.colors));
    cover.color.resize(graph.size());
    for (std::size_t v = 0; v < graph.size(); ++v) {
        const auto [s1, s2] = graph.coords(v);
        const int c = static_cast<int>((s1 + s2) % 2) + 1;
        cover.color[v] = c;
        cover.members[static_cast<std::size_t>(c - 1)].push_back(v);
    }
    cover.colors = static_cast<int>(std::count_if(cover.members.begin(), cover.members.end(), [](const auto& m) { return !m.empty(); }));
    cover.members.resize(static_cast<std::size_t>(cover.colors));
    for (std::size_t v = 0; v < graph.size(); ++v)
        for (auto w : graph.neighbors(v))
            if (cover.color[v] == cover.color[w])
                throw Error(ErrorCode::NonBipartite, "sites " + std::to_string(v) + " and " + std::to_string(w) + " share a colour");
    return cover;
}

struct EtaRange {
    double lower = 0.0;  ///< 1 / h_min
    double upper = 0.0;  ///< 1 / h_max
    double h_min = 0.0;
    double h_max = 0.0;

    [[nodiscard]] bool contains(double eta) const noexcept { return eta > lower && eta < upper; }
};

struct PowerIterationResult {
    double eigenvalue = 0.0;
    std::size_t iterations = 0;
    double residual = 0.0;
};

namespace detail {

/// Power iteration on (H + shift I) when sign = +1, on (shift I - H) when sign = -1.
/// Stops once ||A x - rho x|| <= tol * |rho|; the spectrum of A is non-negative
/// because shift = max degree bounds the spectral radius of H.
inline PowerIterationResult shifted_power_iteration(const LatticeGraph& graph, double sign, std::vector<double> x, double tol,
                                                    std::size_t max_iterations) {
    const double shift = static_cast<double>(graph.max_degree());
    const std::size_t n = graph.size();
    std::vector<double> y(n);
    auto normalize = [](std::vector<double>& v) {
        double s = 0.0;
        for (double a : v) s += a * a;
        const double norm = std::sqrt(s);
        for (double& a : v) a /= norm;
    };
    PowerIterationResult result;
    for (std::size_t it = 0; it <= max_iterations; ++it) {
        // Rayleigh quotient without assuming ||x|| = 1, so integer start
        // vectors that are exact eigenvectors give exact eigenvalues.
        graph.apply_adjacency(x, y);
        double xy = 0.0;
        double xx = 0.0;
        for (std::size_t v = 0; v < n; ++v) {
            y[v] = shift * x[v] + sign * y[v];
            xy += x[v] * y[v];
            xx += x[v] * x[v];
        }
        const double rho = xy / xx;
        double res = 0.0;
        for (std::size_t v = 0; v < n; ++v) res += (y[v] - rho * x[v]) * (y[v] - rho * x[v]);
        result = {sign * (rho - shift), it, std::sqrt(res / xx)};
        if (result.residual <= tol * std::abs(rho)) return result;
        x.swap(y);
        normalize(x);
    }
    throw Error(ErrorCode::Degenerate, "power iteration did not converge");
}

} // namespace detail

/// Largest adjacency eigenvalue; started from the all-ones vector.
inline PowerIterationResult max_eigenvalue_power(const LatticeGraph& graph, double tol = 1e-10,
                                                 std::size_t max_iterations = 1'000'000) {
    return detail::shifted_power_iteration(graph, +1.0, std::vector<double>(graph.size(), 1.0), tol, max_iterations);
}

/// Smallest adjacency eigenvalue; started from the checkerboard sign vector.
inline PowerIterationResult min_eigenvalue_power(const LatticeGraph& graph, double tol = 1e-10,
                                                 std::size_t max_iterations = 1'000'000) {
    std::vector<double> x(graph.size());
    for (std::size_t v = 0; v < graph.size(); ++v) {
        const auto [s1, s2] = graph.coords(v);
        x[v] = (s1 + s2) % 2 == 0 ? 1.0 : -1.0;
    }
    return detail::shifted_power_iteration(graph, -1.0, std::move(x), tol, max_iterations);
}

inline std::pair<double, double> extreme_eigenvalues_dense(const LatticeGraph& graph) {
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(graph.adjacency(), Eigen::EigenvaluesOnly);
    const auto& values = solver.eigenvalues();
    return {values.minCoeff(), values.maxCoeff()};
}

inline constexpr std::size_t kDenseSpectrumLimit = 400;

/// (1 / h_min, 1 / h_max): the eta for which I - eta H is invertible by the
/// Neumann-series bound. Dense eigensolver up to 400 sites, power iteration above.
inline EtaRange admissible_eta_range(const LatticeGraph& graph) {
    if (graph.edge_count() == 0) throw Error(ErrorCode::Degenerate, "graph has no edges");
    EtaRange range;
    if (graph.size() <= kDenseSpectrumLimit) {
        std::tie(range.h_min, range.h_max) = extreme_eigenvalues_dense(graph);
    } else {
        range.h_max = max_eigenvalue_power(graph).eigenvalue;
        range.h_min = min_eigenvalue_power(graph).eigenvalue;
    }
    range.lower = 1.0 / range.h_min;
    range.upper = 1.0 / range.h_max;
    return range;
}

inline std::string to_string(Boundary b) { return b == Boundary::Torus ? "torus" : "free"; }

} // namespace haarreg
