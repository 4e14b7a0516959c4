#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <utility>
#include <vector>

namespace homog {

/// Mergeable (count, sum, centered sum of squares) triple.
struct Partial {
    std::int64_t count = 0;
    double sum = 0.0;
    double m2 = 0.0;

    static Partial of(double x) { return {1, x, 0.0}; }

    double mean() const { return count ? sum / static_cast<double>(count) : 0.0; }
    /// Unbiased; 0 for fewer than two values.
    double variance() const { return count > 1 ? m2 / static_cast<double>(count - 1) : 0.0; }

    void add(double x) { *this = merge(*this, of(x)); }

    static Partial merge(const Partial& a, const Partial& b);
};

/// Pairwise tree merge in index order; the result depends only on the
/// sequence of partials, never on how they were produced.
Partial aggregate(std::span<const Partial> partials);

struct SampleSet {
    std::string method;
    double point = 0.0;
    std::vector<double> values;

    /// InsufficientDataError if empty, DomainError on a non-finite value.
    void validate() const;
};

enum class ReferenceKind { Exact, Surrogate, None };

std::string to_string(ReferenceKind kind);

struct Reference {
    double value = 0.0;
    ReferenceKind kind = ReferenceKind::None;
    /// Where the value came from, e.g. "dykhne" or "period-law mean".
    std::string provenance;

    static Reference exact(double v, std::string provenance = "exact") {
        return {v, ReferenceKind::Exact, std::move(provenance)};
    }
    static Reference surrogate(double v, std::string provenance) {
        return {v, ReferenceKind::Surrogate, std::move(provenance)};
    }
    static Reference none() { return {}; }
};

struct ErrorDecomposition {
    std::int64_t count = 0;
    double mean = 0.0;
    double variance = 0.0;
    /// sqrt(variance): spread of one realization.
    double statistical_error = 0.0;
    /// |mean - reference|; 0 when no reference is given.
    double systematic_error = 0.0;
    /// 1.96 sqrt(variance / k).
    double ci_halfwidth = 0.0;
    Reference reference;
};

inline constexpr double kCiZ = 1.96;

/// InsufficientDataError for fewer than two samples.
ErrorDecomposition decompose_error(const SampleSet& samples, const Reference& reference);

struct RateFit {
    /// Least-squares slope of log10 y against log10 x.
    double slope = 0.0;
    /// -slope
    double rate = 0.0;
    double log10_prefactor = 0.0;
    double prefactor = 0.0;
    /// RMS of the log10 residuals.
    double residual_rms = 0.0;
    int points_used = 0;

    double fitted(double x) const;
};

/// OLS fit of y = prefactor * x^-rate on log10-log10 axes. Requires at least
/// three points, x > 0 strictly increasing, y > 0 (DomainError otherwise).
/// Optional weights select a weighted fit.
RateFit fit_rate(std::span<const double> x, std::span<const double> y, std::span<const double> weights = {});

struct BudgetPlan {
    double delta = 0.0;
    double c_syst = 0.0;
    double c_rand = 0.0;
    int dimension = 0;
    std::int64_t side = 0;         // N_delta
    std::int64_t realizations = 0; // k_delta
    double cost_proxy = 0.0;       // k_delta * N_delta^d
};

/// Systematic model term c_syst N^-d ln^d N.
double systematic_model(double c_syst, double side, int dimension);
/// Random model term c_rand N^(-d/2) / sqrt(k).
double random_model(double c_rand, double side, double k, int dimension);

/// N_delta: smallest N >= 3 with systematic_model <= delta/2; k_delta: smallest
/// k with random_model <= delta/2. ConfigError for nonpositive inputs, d < 2,
/// or delta so large that N = 3 already satisfies the systematic bound (the
/// tight solution would fall where N^-d ln^d N is not monotone).
BudgetPlan plan_budget(double delta, double c_syst, double c_rand, int dimension);

}  // namespace homog
