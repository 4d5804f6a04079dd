#pragma once

#include "haarreg/dyadic.hpp"
#include "haarreg/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <iterator>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace haarreg {

/// Finite sum of constants on pairwise disjoint dyadic cubes; zero elsewhere.
struct PiecewiseConstantFn {
    std::vector<std::pair<DyadicCube, double>> pieces;

    [[nodiscard]] double operator()(std::span<const double> x) const {
        for (const auto& [cube, value] : pieces)
            if (cube.contains(x)) return value;
        return 0.0;
    }
};

inline double evaluate(const PiecewiseConstantFn& f, std::span<const double> point) { return f(point); }

/// Sign of the tensor Haar function xi_{v_1} x ... x xi_{v_d} on child `slot`.
/// Bit i of v selects the mother factor along axis i; bit i of slot selects
/// the upper half along axis i.
constexpr double haar_sign(std::size_t v, std::size_t slot) noexcept {
    std::size_t flips = 0;
    for (std::size_t m = v & slot; m; m &= m - 1) ++flips;
    return (flips & 1U) ? -1.0 : 1.0;
}

/// The L2(Lebesgue) normalised tensor Haar function Psi_v moved onto `cube`,
/// given by its values on the 2^d children. v = 0 is the scaling function.
inline PiecewiseConstantFn standard_haar(std::size_t v, const DyadicCube& cube) {
    const std::size_t d = cube.dim();
    if (d == 0 || v >= cube.child_count())
        throw Error(ErrorCode::InvalidIndex, "tensor index " + std::to_string(v) + " outside [0, 2^d)");
    const double h = std::pow(2.0, 0.5 * cube.level * static_cast<double>(d));
    PiecewiseConstantFn f;
    f.pieces.reserve(cube.child_count());
    for (std::size_t slot = 0; slot < cube.child_count(); ++slot)
        f.pieces.emplace_back(cube.child(slot), h * haar_sign(v, slot));
    return f;
}

enum class WaveletKind { Father, Mother };

struct BasisFunction {
    WaveletKind kind = WaveletKind::Father;
    DyadicCube home;
    /// Tensor index of the Haar candidate this function was orthogonalised from.
    std::size_t v = 0;
    /// One value for a father; one value per child slot for a mother.
    std::vector<double> values;

    [[nodiscard]] double at_slot(std::size_t slot) const {
        return kind == WaveletKind::Father ? values.front() : values[slot];
    }

    [[nodiscard]] double operator()(std::span<const double> x) const {
        if (!home.contains(x)) return 0.0;
        return kind == WaveletKind::Father ? values.front() : values[home.child_slot(x)];
    }

    [[nodiscard]] PiecewiseConstantFn shape() const {
        PiecewiseConstantFn f;
        if (kind == WaveletKind::Father) {
            f.pieces.emplace_back(home, values.front());
        } else {
            for (std::size_t slot = 0; slot < values.size(); ++slot) f.pieces.emplace_back(home.child(slot), values[slot]);
        }
        return f;
    }
};

namespace detail {

inline constexpr double kDropTolerance = 1e-9;

/// Balanced, orthonormal functions on one cube, expressed by their values on
/// the children, for the weighted inner product sum_c mass[c] f_c g_c.
/// Candidates are the tensor Haar functions in order v = 1 .. 2^d - 1; each is
/// orthogonalised against the indicator of the cube and the functions kept
/// so far (two modified Gram-Schmidt passes), and dropped when its residual
/// norm falls below kDropTolerance times its own norm.
inline std::vector<std::pair<std::size_t, std::vector<double>>>
orthonormalize_children(std::span<const double> mass, double scale) {
    const std::size_t slots = mass.size();
    double total = 0.0;
    for (double m : mass) total += m;

    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t c = 0; c < slots; ++c) s += mass[c] * a[c] * b[c];
        return s;
    };

    std::vector<std::vector<double>> basis;
    basis.emplace_back(slots, 1.0 / std::sqrt(total));

    std::vector<std::pair<std::size_t, std::vector<double>>> mothers;
    for (std::size_t v = 1; v < slots; ++v) {
        std::vector<double> r(slots);
        for (std::size_t c = 0; c < slots; ++c) r[c] = scale * haar_sign(v, c);
        const double candidate_norm = std::sqrt(dot(r, r));
        for (int pass = 0; pass < 2; ++pass) {
            for (const auto& q : basis) {
                const double p = dot(r, q);
                for (std::size_t c = 0; c < slots; ++c) r[c] -= p * q[c];
            }
        }
        const double norm = std::sqrt(std::max(dot(r, r), 0.0));
        if (!(norm > kDropTolerance * candidate_norm)) continue;
        for (auto& x : r) x /= norm;
        basis.push_back(r);
        mothers.emplace_back(v, std::move(r));
    }
    return mothers;
}

inline std::vector<double> child_masses(const SampleIndex& index, const DyadicCube& cube) {
    std::vector<double> mass(cube.child_count());
    const double n = static_cast<double>(index.n());
    for (std::size_t slot = 0; slot < mass.size(); ++slot) mass[slot] = static_cast<double>(index.count(cube.child(slot))) / n;
    return mass;
}

} // namespace detail

/// Balanced wavelets on `cube` that are orthonormal in L2(mu_n). Fewer than
/// 2^d - 1 come back when some candidates vanish on the sample.
inline std::vector<BasisFunction> orthonormalize_cube(const SampleIndex& index, const DyadicCube& cube) {
    if (cube.level >= index.domain().j1)
        throw Error(ErrorCode::InvalidLevel, "mothers need a child level; cube is at the finest level");
    if (index.count(cube) == 0) throw Error(ErrorCode::ZeroMassCube, "cube " + to_string(cube) + " carries no sample mass");
    const auto mass = detail::child_masses(index, cube);
    const double scale = std::pow(2.0, 0.5 * cube.level * static_cast<double>(cube.dim()));
    std::vector<BasisFunction> out;
    for (auto& [v, values] : detail::orthonormalize_children(mass, scale))
        out.push_back(BasisFunction{WaveletKind::Mother, cube, v, std::move(values)});
    return out;
}

/// Empirically orthonormal Haar family: fathers on the occupied level-j0
/// cubes, then mothers level by level (j0 .. j1-1), cubes in lexicographic
/// order within a level, candidates in tensor-index order within a cube.
class EmpiricalBasis {
public:
    EmpiricalBasis(DyadicDomain domain, std::size_t n, std::vector<BasisFunction> functions)
        : domain_(domain), n_(n), functions_(std::move(functions)) {
        reindex();
    }

    [[nodiscard]] const DyadicDomain& domain() const noexcept { return domain_; }
    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t size() const noexcept { return functions_.size(); }
    [[nodiscard]] const std::vector<BasisFunction>& functions() const noexcept { return functions_; }
    [[nodiscard]] const BasisFunction& operator[](std::size_t i) const { return functions_[i]; }

    /// Calls visit(index, value) for every function that may be nonzero at x,
    /// in increasing index order.
    template <class Visit>
    void for_each_term(std::span<const double> x, Visit&& visit) const {
        if (!domain_.contains(x)) return;
        Gamma gamma(domain_.d);
        auto locate_level = [&](int level) {
            for (std::size_t i = 0; i < domain_.d; ++i) gamma[i] = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level)));
        };
        locate_level(domain_.j0);
        if (auto it = fathers_.find(gamma); it != fathers_.end()) visit(it->second, functions_[it->second].values.front());
        for (int level = domain_.j0; level < domain_.j1; ++level) {
            const auto& level_map = mothers_[static_cast<std::size_t>(level - domain_.j0)];
            if (level_map.empty()) continue;
            locate_level(level);
            auto it = level_map.find(gamma);
            if (it == level_map.end()) continue;
            std::size_t slot = 0;
            for (std::size_t i = 0; i < domain_.d; ++i) {
                const auto g = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level + 1)));
                slot |= static_cast<std::size_t>(g - 2 * gamma[i]) << i;
            }
            for (std::size_t k = it->second.first; k < it->second.second; ++k) visit(k, functions_[k].values[slot]);
        }
    }

    [[nodiscard]] double evaluate(std::size_t i, std::span<const double> x) const {
        return domain_.contains(x) ? functions_.at(i)(x) : 0.0;
    }

private:
    void reindex() {
        fathers_.clear();
        mothers_.assign(static_cast<std::size_t>(std::max(domain_.j1 - domain_.j0, 0)), {});
        for (std::size_t k = 0; k < functions_.size(); ++k) {
            const auto& f = functions_[k];
            if (f.home.dim() != domain_.d) throw Error(ErrorCode::InvalidIndex, "basis function dimension mismatch");
            if (f.kind == WaveletKind::Father) {
                if (f.home.level != domain_.j0 || f.values.size() != 1)
                    throw Error(ErrorCode::InvalidIndex, "father must live on a level-j0 cube");
                if (!fathers_.emplace(f.home.gamma, k).second)
                    throw Error(ErrorCode::InvalidIndex, "duplicate father on " + to_string(f.home));
                continue;
            }
            if (f.home.level < domain_.j0 || f.home.level >= domain_.j1 || f.values.size() != f.home.child_count())
                throw Error(ErrorCode::InvalidIndex, "mother outside levels [j0, j1)");
            if (k > 0 && functions_[k - 1].kind == WaveletKind::Mother && functions_[k - 1].home > f.home)
                throw Error(ErrorCode::InvalidIndex, "mothers must be ordered by level then cube");
            auto& level_map = mothers_[static_cast<std::size_t>(f.home.level - domain_.j0)];
            auto [it, inserted] = level_map.emplace(f.home.gamma, std::pair{k, k + 1});
            if (!inserted) {
                if (it->second.second != k) throw Error(ErrorCode::InvalidIndex, "mothers of one cube must be contiguous");
                it->second.second = k + 1;
            }
        }
    }

    DyadicDomain domain_;
    std::size_t n_ = 0;
    std::vector<BasisFunction> functions_;
    std::map<Gamma, std::size_t> fathers_;
    std::vector<std::map<Gamma, std::pair<std::size_t, std::size_t>>> mothers_;
};

inline EmpiricalBasis build_basis(const SampleIndex& index) {
    const auto& domain = index.domain();
    const double n = static_cast<double>(index.n());
    std::vector<BasisFunction> functions;
    for (const auto& [gamma, count] : index.occupied(domain.j0)) {
        DyadicCube root{domain.j0, gamma};
        functions.push_back(BasisFunction{WaveletKind::Father, root, 0, {1.0 / std::sqrt(static_cast<double>(count) / n)}});
    }
    for (int level = domain.j0; level < domain.j1; ++level) {
        for (const auto& [gamma, count] : index.occupied(level)) {
            auto mothers = orthonormalize_cube(index, DyadicCube{level, gamma});
            std::move(mothers.begin(), mothers.end(), std::back_inserter(functions));
        }
    }
    return EmpiricalBasis(domain, index.n(), std::move(functions));
}

inline EmpiricalBasis build_basis(const SampleIndex& index, int j0, int j1, std::int64_t w) {
    const auto& domain = index.domain();
    if (domain.j0 != j0 || domain.j1 != j1 || domain.w != w)
        throw Error(ErrorCode::SampleMismatch, "basis parameters differ from those of the index");
    return build_basis(index);
}

using Dictionary = std::vector<std::function<double(std::span<const double>)>>;

/// Result of orthonormalising an arbitrary dictionary under mu_n. Each f_k is
/// stored as a combination of dictionary elements g_0 .. g_origin[k].
struct OrthonormalSystem {
    Dictionary dictionary;
    std::vector<std::vector<double>> coefficients;
    std::vector<std::size_t> origin;
    /// retained_through[u]: number of f's spanning the same space as g_0..g_u.
    std::vector<std::size_t> retained_through;
    /// f_k evaluated at the sample points.
    std::vector<std::vector<double>> sample_values;

    [[nodiscard]] std::size_t size() const noexcept { return coefficients.size(); }

    [[nodiscard]] double operator()(std::size_t k, std::span<const double> x) const {
        double s = 0.0;
        const auto& c = coefficients.at(k);
        for (std::size_t i = 0; i < c.size(); ++i)
            if (c[i] != 0.0) s += c[i] * dictionary[i](x);
        return s;
    }
};

/// Gram-Schmidt under the empirical inner product <f, g>_n = n^-1 sum f(X_s) g(X_s),
/// with one re-orthogonalisation pass. Residuals whose norm is below 1e-9
/// times the largest dictionary norm are treated as zero and dropped.
inline OrthonormalSystem gram_schmidt_generic(Dictionary dictionary, const LabeledSample& sample) {
    if (dictionary.empty()) throw Error(ErrorCode::EmptyDictionary, "dictionary has no functions");
    if (sample.empty()) throw Error(ErrorCode::EmptySample, "sample is empty");
    const std::size_t n = sample.size();
    const std::size_t size = dictionary.size();
    const double inv_n = 1.0 / static_cast<double>(n);
    auto dot = [&](const std::vector<double>& a, const std::vector<double>& b) {
        double s = 0.0;
        for (std::size_t i = 0; i < n; ++i) s += a[i] * b[i];
        return s * inv_n;
    };

    std::vector<std::vector<double>> columns(size, std::vector<double>(n));
    double max_norm = 0.0;
    for (std::size_t u = 0; u < size; ++u) {
        for (std::size_t s = 0; s < n; ++s) columns[u][s] = dictionary[u](sample.point(s));
        max_norm = std::max(max_norm, std::sqrt(dot(columns[u], columns[u])));
    }

    OrthonormalSystem out;
    for (std::size_t u = 0; u < size; ++u) {
        std::vector<double> r = columns[u];
        std::vector<double> coef(u + 1, 0.0);
        coef[u] = 1.0;
        for (int pass = 0; pass < 2; ++pass) {
            for (std::size_t k = 0; k < out.size(); ++k) {
                const double p = dot(r, out.sample_values[k]);
                for (std::size_t s = 0; s < n; ++s) r[s] -= p * out.sample_values[k][s];
                const auto& ck = out.coefficients[k];
                for (std::size_t i = 0; i < ck.size(); ++i) coef[i] -= p * ck[i];
            }
        }
        const double norm = std::sqrt(std::max(dot(r, r), 0.0));
        if (norm > detail::kDropTolerance * max_norm && norm > 0.0) {
            for (auto& x : r) x /= norm;
            for (auto& c : coef) c /= norm;
            out.sample_values.push_back(std::move(r));
            out.coefficients.push_back(std::move(coef));
            out.origin.push_back(u);
        }
        out.retained_through.push_back(out.size());
    }
    out.dictionary = std::move(dictionary);
    return out;
}

} // namespace haarreg
