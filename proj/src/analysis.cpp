#include "homog/analysis.hpp"

#include <cmath>

#include "homog/errors.hpp"

namespace homog {

Partial Partial::merge(const Partial& a, const Partial& b) {
    if (a.count == 0) return b;
    if (b.count == 0) return a;
    const double na = static_cast<double>(a.count);
    const double nb = static_cast<double>(b.count);
    const double delta = b.sum / nb - a.sum / na;
    Partial out;
    out.count = a.count + b.count;
    out.sum = a.sum + b.sum;
    out.m2 = a.m2 + b.m2 + delta * delta * na * nb / (na + nb);
    return out;
}

Partial aggregate(std::span<const Partial> partials) {
    if (partials.empty()) return {};
    if (partials.size() == 1) return partials[0];
    const std::size_t half = partials.size() / 2;
    return Partial::merge(aggregate(partials.first(half)), aggregate(partials.subspan(half)));
}

void SampleSet::validate() const {
    if (values.empty()) throw InsufficientDataError("sample set is empty");
    for (double v : values)
        if (!std::isfinite(v)) throw DomainError("sample set contains a non-finite value");
}

std::string to_string(ReferenceKind kind) {
    switch (kind) {
        case ReferenceKind::Exact: return "exact";
        case ReferenceKind::Surrogate: return "surrogate";
        case ReferenceKind::None: return "none";
    }
    return "none";
}

ErrorDecomposition decompose_error(const SampleSet& samples, const Reference& reference) {
    samples.validate();
    const std::size_t k = samples.values.size();
    if (k < 2) throw InsufficientDataError("decompose_error: need at least two samples");
    double mean = 0.0;
    for (double v : samples.values) mean += v;
    mean /= static_cast<double>(k);
    double ss = 0.0;
    for (double v : samples.values) ss += (v - mean) * (v - mean);

    ErrorDecomposition out;
    out.count = static_cast<std::int64_t>(k);
    out.mean = mean;
    out.variance = ss / static_cast<double>(k - 1);
    out.statistical_error = std::sqrt(out.variance);
    out.ci_halfwidth = kCiZ * std::sqrt(out.variance / static_cast<double>(k));
    out.reference = reference;
    out.systematic_error = reference.kind == ReferenceKind::None ? 0.0 : std::abs(mean - reference.value);
    return out;
}

double RateFit::fitted(double x) const { return prefactor * std::pow(x, slope); }

RateFit fit_rate(std::span<const double> x, std::span<const double> y, std::span<const double> weights) {
    const std::size_t n = x.size();
    if (n != y.size()) throw DomainError("fit_rate: x and y differ in length");
    if (!weights.empty() && weights.size() != n) throw DomainError("fit_rate: weights differ in length");
    if (n < 3) throw InsufficientDataError("fit_rate: need at least three points");
    for (std::size_t i = 0; i < n; ++i) {
        if (!(x[i] > 0.0)) throw DomainError("fit_rate: x must be positive");
        if (i > 0 && !(x[i] > x[i - 1])) throw DomainError("fit_rate: x must be strictly increasing");
        if (!(y[i] > 0.0) || !std::isfinite(y[i])) throw DomainError("fit_rate: y must be positive");
    }

    double sw = 0.0, sx = 0.0, sy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        sw += w;
        sx += w * std::log10(x[i]);
        sy += w * std::log10(y[i]);
    }
    const double mx = sx / sw;
    const double my = sy / sw;
    double sxx = 0.0, sxy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double w = weights.empty() ? 1.0 : weights[i];
        const double dx = std::log10(x[i]) - mx;
        sxx += w * dx * dx;
        sxy += w * dx * (std::log10(y[i]) - my);
    }

    RateFit fit;
    fit.slope = sxy / sxx;
    fit.rate = -fit.slope;
    fit.log10_prefactor = my - fit.slope * mx;
    fit.prefactor = std::pow(10.0, fit.log10_prefactor);
    double rss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double r = std::log10(y[i]) - (fit.log10_prefactor + fit.slope * std::log10(x[i]));
        rss += r * r;
    }
    fit.residual_rms = std::sqrt(rss / static_cast<double>(n));
    fit.points_used = static_cast<int>(n);
    return fit;
}

double systematic_model(double c_syst, double side, int dimension) {
    return c_syst * std::pow(std::log(side) / side, dimension);
}

double random_model(double c_rand, double side, double k, int dimension) {
    return c_rand * std::pow(side, -0.5 * dimension) / std::sqrt(k);
}

BudgetPlan plan_budget(double delta, double c_syst, double c_rand, int dimension) {
    if (!(delta > 0.0) || !(c_syst > 0.0) || !(c_rand > 0.0))
        throw ConfigError("plan_budget: delta, C_syst and C_rand must be positive");
    if (dimension < 2) throw ConfigError("plan_budget: dimension must be >= 2");
    const double half = 0.5 * delta;
    if (systematic_model(c_syst, 3.0, dimension) <= half)
        throw ConfigError("plan_budget: delta too large, the systematic bound already holds at N = 3");

    // N^-d ln^d N decreases for N >= 3: bracket, then bisect on integers.
    std::int64_t lo = 3;  // violates
    std::int64_t hi = 4;
    while (systematic_model(c_syst, static_cast<double>(hi), dimension) > half) {
        lo = hi;
        hi *= 2;
        if (hi > (std::int64_t{1} << 40)) throw ConfigError("plan_budget: delta too small");
    }
    while (hi - lo > 1) {
        const std::int64_t mid = lo + (hi - lo) / 2;
        if (systematic_model(c_syst, static_cast<double>(mid), dimension) > half)
            lo = mid;
        else
            hi = mid;
    }
    const std::int64_t side = hi;

    const double ratio = 2.0 * c_rand * std::pow(static_cast<double>(side), -0.5 * dimension) / delta;
    auto k = static_cast<std::int64_t>(std::ceil(ratio * ratio));
    if (k < 1) k = 1;
    // Guard against rounding in ceil: settle on the smallest admissible k.
    while (k > 1 && random_model(c_rand, static_cast<double>(side), static_cast<double>(k - 1), dimension) <= half)
        --k;
    while (random_model(c_rand, static_cast<double>(side), static_cast<double>(k), dimension) > half) ++k;

    BudgetPlan plan;
    plan.delta = delta;
    plan.c_syst = c_syst;
    plan.c_rand = c_rand;
    plan.dimension = dimension;
    plan.side = side;
    plan.realizations = k;
    plan.cost_proxy = static_cast<double>(k) * std::pow(static_cast<double>(side), dimension);
    return plan;
}

}  // namespace homog
