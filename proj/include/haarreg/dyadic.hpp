#pragma once

#include "haarreg/error.hpp"

#include <cmath>
#include <compare>
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace haarreg {

using Gamma = std::vector<std::int64_t>;

/// The half-open cube 2^-level [gamma, gamma + e). Geometry is exact:
/// membership is a floor of a power-of-two rescaling, never a comparison
/// against rounded endpoints.
struct DyadicCube {
    int level = 0;
    Gamma gamma;

    [[nodiscard]] std::size_t dim() const noexcept { return gamma.size(); }
    [[nodiscard]] std::size_t child_count() const noexcept { return std::size_t{1} << dim(); }

    [[nodiscard]] double lower(std::size_t axis) const {
        return std::ldexp(static_cast<double>(gamma[axis]), -level);
    }
    [[nodiscard]] double upper(std::size_t axis) const {
        return std::ldexp(static_cast<double>(gamma[axis] + 1), -level);
    }

    /// Child `slot`: bit i selects the upper half along axis i.
    [[nodiscard]] DyadicCube child(std::size_t slot) const {
        DyadicCube out{level + 1, gamma};
        for (std::size_t i = 0; i < dim(); ++i) out.gamma[i] = 2 * gamma[i] + static_cast<std::int64_t>((slot >> i) & 1U);
        return out;
    }

    [[nodiscard]] DyadicCube parent() const {
        DyadicCube out{level - 1, gamma};
        for (auto& g : out.gamma) g >>= 1;  // floor division, also for negatives
        return out;
    }

    [[nodiscard]] bool contains(std::span<const double> x) const {
        if (x.size() != dim()) return false;
        for (std::size_t i = 0; i < dim(); ++i) {
            if (!std::isfinite(x[i])) return false;
            if (std::floor(std::ldexp(x[i], level)) != static_cast<double>(gamma[i])) return false;
        }
        return true;
    }

    /// Slot of the child that holds x; x must lie in this cube.
    [[nodiscard]] std::size_t child_slot(std::span<const double> x) const {
        std::size_t slot = 0;
        for (std::size_t i = 0; i < dim(); ++i) {
            const auto g = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level + 1)));
            slot |= static_cast<std::size_t>(g - 2 * gamma[i]) << i;
        }
        return slot;
    }

    auto operator<=>(const DyadicCube&) const = default;
    bool operator==(const DyadicCube&) const = default;
};

std::string to_string(const DyadicCube& cube);

/// D = 2^-j0 [-w, w)^d, resolved from level j0 down to level j1.
struct DyadicDomain {
    int j0 = 0;
    int j1 = 0;
    std::int64_t w = 1;
    std::size_t d = 1;

    void validate() const {
        if (d == 0 || d > 16) throw Error(ErrorCode::InvalidConfig, "dimension must lie in [1, 16]");
        if (w < 1) throw Error(ErrorCode::InvalidConfig, "domain half-width w must be positive");
        if (j1 < j0) throw Error(ErrorCode::InvalidLevel, "finest level j1 must be >= coarsest level j0");
        if (j1 - j0 > 40) throw Error(ErrorCode::InvalidLevel, "level range too deep");
    }

    [[nodiscard]] double half_width() const { return std::ldexp(static_cast<double>(w), -j0); }

    [[nodiscard]] bool contains(std::span<const double> x) const {
        if (x.size() != d) return false;
        const double h = half_width();
        for (double v : x)
            if (!(v >= -h && v < h)) return false;  // NaN fails both
        return true;
    }

    /// Largest admissible |gamma| bound at `level`: gamma_i in [-r, r-1].
    [[nodiscard]] std::int64_t index_radius(int level) const { return w << (level - j0); }

    [[nodiscard]] bool in_index_set(const DyadicCube& cube) const {
        if (cube.dim() != d || cube.level < j0) return false;
        const auto r = index_radius(cube.level);
        for (auto g : cube.gamma)
            if (g < -r || g >= r) return false;
        return true;
    }

    /// Upper bound on the number of basis functions, (2 * 2^(j1-j0) * w)^d.
    [[nodiscard]] double max_basis_size() const {
        return std::pow(2.0 * std::ldexp(1.0, j1 - j0) * static_cast<double>(w), static_cast<double>(d));
    }

    [[nodiscard]] std::vector<DyadicCube> root_cubes() const {
        std::vector<DyadicCube> out;
        const std::int64_t side = 2 * w;
        std::size_t total = 1;
        for (std::size_t i = 0; i < d; ++i) total *= static_cast<std::size_t>(side);
        out.reserve(total);
        for (std::size_t k = 0; k < total; ++k) {
            DyadicCube cube{j0, Gamma(d)};
            std::size_t rest = k;
            for (std::size_t i = d; i-- > 0;) {
                cube.gamma[i] = static_cast<std::int64_t>(rest % static_cast<std::size_t>(side)) - w;
                rest /= static_cast<std::size_t>(side);
            }
            out.push_back(std::move(cube));
        }
        return out;
    }

    /// The level-`level` cube containing x, or nothing when x is outside D.
    [[nodiscard]] std::optional<DyadicCube> cube_at(std::span<const double> x, int level) const {
        if (!contains(x)) return std::nullopt;
        DyadicCube cube{level, Gamma(d)};
        for (std::size_t i = 0; i < d; ++i) cube.gamma[i] = static_cast<std::int64_t>(std::floor(std::ldexp(x[i], level)));
        return cube;
    }
};

/// Sample of n sites with design points in R^d and (optionally) responses.
/// Storage is flat, row-major.
class LabeledSample {
public:
    LabeledSample() = default;
    LabeledSample(std::size_t dim, std::size_t site_dim = 0) : dim_(dim), site_dim_(site_dim) {}

    void add(std::span<const double> point, std::optional<double> response = std::nullopt,
             std::span<const std::int64_t> site = {}) {
        if (point.size() != dim_) throw Error(ErrorCode::InvalidConfig, "point dimension mismatch");
        if (site.size() != site_dim_) throw Error(ErrorCode::InvalidConfig, "site dimension mismatch");
        for (double v : point)
            if (!std::isfinite(v)) throw Error(ErrorCode::InvalidConfig, "design points must be finite");
        if (size() > 0 && response.has_value() != has_responses())
            throw Error(ErrorCode::InvalidConfig, "responses must be given for all sites or none");
        points_.insert(points_.end(), point.begin(), point.end());
        sites_.insert(sites_.end(), site.begin(), site.end());
        if (response) responses_.push_back(*response);
        ++size_;
    }

    [[nodiscard]] std::size_t size() const noexcept { return size_; }
    [[nodiscard]] bool empty() const noexcept { return size_ == 0; }
    [[nodiscard]] std::size_t dim() const noexcept { return dim_; }
    [[nodiscard]] std::size_t site_dim() const noexcept { return site_dim_; }
    [[nodiscard]] bool has_responses() const noexcept { return size_ > 0 && responses_.size() == size_; }

    [[nodiscard]] std::span<const double> point(std::size_t i) const {
        return std::span<const double>(points_).subspan(i * dim_, dim_);
    }
    [[nodiscard]] std::span<const std::int64_t> site(std::size_t i) const {
        return std::span<const std::int64_t>(sites_).subspan(i * site_dim_, site_dim_);
    }
    [[nodiscard]] double response(std::size_t i) const { return responses_.at(i); }
    [[nodiscard]] std::span<const double> responses() const noexcept { return responses_; }
    [[nodiscard]] std::span<const double> points() const noexcept { return points_; }

private:
    std::size_t dim_ = 1;
    std::size_t site_dim_ = 0;
    std::size_t size_ = 0;
    std::vector<double> points_;
    std::vector<std::int64_t> sites_;
    std::vector<double> responses_;
};

/// Count-annotated dyadic tree realizing the empirical measure of a sample.
/// Only cubes holding at least one point are stored.
class SampleIndex {
public:
    SampleIndex(const LabeledSample& sample, DyadicDomain domain) : domain_(domain) {
        domain_.validate();
        if (sample.empty()) throw Error(ErrorCode::EmptySample, "cannot index an empty sample");
        if (sample.dim() != domain_.d) throw Error(ErrorCode::SampleMismatch, "sample dimension differs from domain");
        n_ = sample.size();
        const auto levels = static_cast<std::size_t>(domain_.j1 - domain_.j0 + 1);
        counts_.resize(levels);
        leaf_.reserve(n_);
        for (std::size_t s = 0; s < n_; ++s) {
            auto leaf = domain_.cube_at(sample.point(s), domain_.j1);
            if (!leaf) {
                ++out_of_domain_;
                leaf_.emplace_back(std::nullopt);
                continue;
            }
            Gamma g = leaf->gamma;
            for (std::size_t k = levels; k-- > 0;) {
                ++counts_[k][g];
                for (auto& c : g) c >>= 1;
            }
            leaf_.emplace_back(std::move(leaf->gamma));
        }
    }

    [[nodiscard]] const DyadicDomain& domain() const noexcept { return domain_; }
    [[nodiscard]] std::size_t n() const noexcept { return n_; }
    [[nodiscard]] std::size_t out_of_domain() const noexcept { return out_of_domain_; }

    [[nodiscard]] std::size_t count(const DyadicCube& cube) const {
        check_level(cube.level);
        const auto& level = counts_[static_cast<std::size_t>(cube.level - domain_.j0)];
        auto it = level.find(cube.gamma);
        return it == level.end() ? 0 : it->second;
    }

    [[nodiscard]] double measure(const DyadicCube& cube) const {
        return static_cast<double>(count(cube)) / static_cast<double>(n_);
    }

    /// Positive-count cubes of one level in lexicographic gamma order.
    [[nodiscard]] const std::map<Gamma, std::size_t>& occupied(int level) const {
        check_level(level);
        return counts_[static_cast<std::size_t>(level - domain_.j0)];
    }

    [[nodiscard]] std::optional<DyadicCube> locate(std::span<const double> x, int level) const {
        check_level(level);
        return domain_.cube_at(x, level);
    }

    /// Finest-level cube of sample point s (nothing when s lies outside D).
    [[nodiscard]] const std::optional<Gamma>& leaf(std::size_t s) const { return leaf_.at(s); }

private:
    void check_level(int level) const {
        if (level < domain_.j0 || level > domain_.j1)
            throw Error(ErrorCode::InvalidLevel, "level " + std::to_string(level) + " outside [" +
                                                     std::to_string(domain_.j0) + ", " + std::to_string(domain_.j1) + "]");
    }

    DyadicDomain domain_;
    std::size_t n_ = 0;
    std::size_t out_of_domain_ = 0;
    std::vector<std::map<Gamma, std::size_t>> counts_;
    std::vector<std::optional<Gamma>> leaf_;
};

inline SampleIndex build_index(const LabeledSample& sample, int j0, int j1, std::int64_t w) {
    return SampleIndex(sample, DyadicDomain{j0, j1, w, sample.dim()});
}

inline std::optional<DyadicCube> locate(std::span<const double> point, int level, const SampleIndex& index) {
    return index.locate(point, level);
}

inline double empirical_measure(const SampleIndex& index, const DyadicCube& cube) {
    return index.measure(cube);
}

inline std::string to_string(const DyadicCube& cube) {
    std::string out = "2^-" + std::to_string(cube.level) + "[";
    for (std::size_t i = 0; i < cube.dim(); ++i) {
        if (i) out += ",";
        out += std::to_string(cube.gamma[i]);
    }
    return out + ")";
}

} // namespace haarreg
