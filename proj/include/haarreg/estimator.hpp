#pragma once

#include "haarreg/dyadic.hpp"
#include "haarreg/error.hpp"
#include "haarreg/wavelet_basis.hpp"

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <limits>
#include <memory>
#include <span>
#include <vector>

namespace haarreg {

/// Neumaier-compensated running sum.
class CompensatedSum {
public:
    void add(double x) noexcept {
        const double t = sum_ + x;
        if (std::abs(sum_) >= std::abs(x))
            compensation_ += (sum_ - t) + x;
        else
            compensation_ += (x - t) + sum_;
        sum_ = t;
    }
    [[nodiscard]] double value() const noexcept { return sum_ + compensation_; }

private:
    double sum_ = 0.0;
    double compensation_ = 0.0;
};

/// Empirical projections a*_j = n^-1 sum_s f_j(X(s)) Y(s), aligned with the basis.
struct CoefficientVector {
    std::vector<double> values;

    [[nodiscard]] std::size_t size() const noexcept { return values.size(); }
    [[nodiscard]] double operator[](std::size_t j) const { return values[j]; }
};

using IndexSet = std::vector<std::size_t>;

inline CoefficientVector fit_coefficients(const EmpiricalBasis& basis, const LabeledSample& sample) {
    if (sample.size() != basis.n())
        throw Error(ErrorCode::SampleMismatch, "sample has " + std::to_string(sample.size()) + " points, basis was built on " +
                                                   std::to_string(basis.n()));
    if (!sample.has_responses()) throw Error(ErrorCode::SampleMismatch, "sample carries no responses");
    if (sample.dim() != basis.domain().d) throw Error(ErrorCode::SampleMismatch, "sample dimension differs from basis");
    std::vector<CompensatedSum> sums(basis.size());
    for (std::size_t s = 0; s < sample.size(); ++s) {
        const double y = sample.response(s);
        basis.for_each_term(sample.point(s), [&](std::size_t k, double value) { sums[k].add(value * y); });
    }
    CoefficientVector out;
    out.values.resize(basis.size());
    const double n = static_cast<double>(sample.size());
    for (std::size_t k = 0; k < sums.size(); ++k) out.values[k] = sums[k].value() / n;
    return out;
}

/// J* = { j : |a*_j| > lambda }; a coefficient equal to lambda is excluded.
inline IndexSet threshold(const CoefficientVector& coeffs, double lambda) {
    if (!(lambda >= 0.0)) throw Error(ErrorCode::InvalidConfig, "threshold must be non-negative");
    IndexSet out;
    for (std::size_t j = 0; j < coeffs.size(); ++j)
        if (std::abs(coeffs[j]) > lambda) out.push_back(j);
    return out;
}

/// T_L(y) = max(min(y, L), -L).
constexpr double truncate(double y, double bound) noexcept { return std::max(std::min(y, bound), -bound); }

class ThresholdedModel {
public:
    ThresholdedModel(std::shared_ptr<const EmpiricalBasis> basis, CoefficientVector coeffs, double lambda, double beta)
        : basis_(std::move(basis)), coeffs_(std::move(coeffs)), lambda_(lambda), beta_(beta) {
        if (!basis_) throw Error(ErrorCode::InvalidConfig, "model needs a basis");
        if (coeffs_.size() != basis_->size()) throw Error(ErrorCode::SampleMismatch, "coefficient count differs from basis size");
        if (!(beta_ > 0.0)) throw Error(ErrorCode::InvalidConfig, "truncation bound must be positive");
        for (double a : coeffs_.values)
            if (!std::isfinite(a)) throw Error(ErrorCode::InvalidConfig, "coefficients must be finite");
        selected_ = threshold(coeffs_, lambda_);
        mask_.assign(coeffs_.size(), 0);
        for (auto j : selected_) mask_[j] = 1;
    }

    [[nodiscard]] const EmpiricalBasis& basis() const noexcept { return *basis_; }
    [[nodiscard]] std::shared_ptr<const EmpiricalBasis> shared_basis() const noexcept { return basis_; }
    [[nodiscard]] const CoefficientVector& coefficients() const noexcept { return coeffs_; }
    [[nodiscard]] const IndexSet& selected() const noexcept { return selected_; }
    [[nodiscard]] bool is_selected(std::size_t j) const { return mask_.at(j) != 0; }
    [[nodiscard]] double lambda() const noexcept { return lambda_; }
    [[nodiscard]] double beta() const noexcept { return beta_; }
    [[nodiscard]] double penalty() const noexcept { return lambda_ * lambda_ * static_cast<double>(selected_.size()); }

    /// sum_{j in J*} a*_j f_j(x), before truncation.
    [[nodiscard]] double raw(std::span<const double> x) const {
        double s = 0.0;
        basis_->for_each_term(x, [&](std::size_t k, double value) {
            if (mask_[k]) s += coeffs_.values[k] * value;
        });
        return s;
    }

    [[nodiscard]] double predict(std::span<const double> x) const { return truncate(raw(x), beta_); }

private:
    std::shared_ptr<const EmpiricalBasis> basis_;
    CoefficientVector coeffs_;
    double lambda_;
    double beta_;
    IndexSet selected_;
    std::vector<char> mask_;
};

inline double predict(const ThresholdedModel& model, std::span<const double> point) { return model.predict(point); }

/// max |Y| over a sample; the default truncation bound.
inline double max_abs_response(const LabeledSample& sample) {
    double b = 0.0;
    for (double y : sample.responses()) b = std::max(b, std::abs(y));
    return b > 0.0 ? b : std::numeric_limits<double>::min();
}

inline ThresholdedModel fit_model(const LabeledSample& sample, DyadicDomain domain, double lambda,
                                  double beta = std::numeric_limits<double>::quiet_NaN()) {
    SampleIndex index(sample, domain);
    auto basis = std::make_shared<const EmpiricalBasis>(build_basis(index));
    auto coeffs = fit_coefficients(*basis, sample);
    if (std::isnan(beta)) beta = max_abs_response(sample);
    return ThresholdedModel(std::move(basis), std::move(coeffs), lambda, beta);
}

/// n^-1 sum_s (m_J(X(s)) - Y(s))^2 + lambda^2 |J| for given coefficients.
inline double penalized_objective(const EmpiricalBasis& basis, const LabeledSample& sample, const CoefficientVector& coeffs,
                                  const IndexSet& subset, double lambda) {
    std::vector<char> mask(basis.size(), 0);
    for (auto j : subset) {
        if (j >= basis.size()) throw Error(ErrorCode::InvalidIndex, "subset index outside the basis");
        mask[j] = 1;
    }
    CompensatedSum sse;
    for (std::size_t s = 0; s < sample.size(); ++s) {
        double fit = 0.0;
        basis.for_each_term(sample.point(s), [&](std::size_t k, double value) {
            if (mask[k]) fit += coeffs[k] * value;
        });
        const double r = fit - sample.response(s);
        sse.add(r * r);
    }
    return sse.value() / static_cast<double>(sample.size()) + lambda * lambda * static_cast<double>(subset.size());
}

inline double penalized_objective(const EmpiricalBasis& basis, const LabeledSample& sample, const IndexSet& subset,
                                  double lambda) {
    return penalized_objective(basis, sample, fit_coefficients(basis, sample), subset, lambda);
}

} // namespace haarreg
