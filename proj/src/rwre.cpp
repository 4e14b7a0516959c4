#include "homog/rwre.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numbers>
#include <ostream>

#include <omp.h>

#include "homog/analysis.hpp"
#include "homog/errors.hpp"

namespace homog {

WalkOutcome run_walk(LazyEnvironment& env, std::int64_t n, std::uint64_t seed) {
    if (n < 0) throw ConfigError("run_walk: n must be >= 0");
    env.reset(derive_seed(seed, 0));
    CounterStream rng(derive_seed(seed, 1));
    WalkState state;
    WalkOutcome out;
    out.p0 = site_weight(env, state.position);
    while (state.steps < n) step(state, env, rng);
    out.endpoint = state.position;
    out.steps = state.steps;
    out.discovered_edges = env.discovered_edges();
    return out;
}

WalkOutcome run_walk(const EnvironmentSpec& spec, std::int64_t n, std::uint64_t seed) {
    LazyEnvironment env(spec, 0);
    return run_walk(env, n, seed);
}

// ---------------------------------------------------------------------------

Functional Functional::square_displacement(std::vector<double> xi) {
    return {FunctionalKind::SquareDisplacement, std::move(xi), 0.0};
}

Functional Functional::gaussian() { return {FunctionalKind::Gaussian, {}, 0.0}; }

Functional Functional::indicator(std::vector<double> xi, double z) {
    return {FunctionalKind::Indicator, std::move(xi), z};
}

Functional Functional::sin_first_coord() { return {FunctionalKind::SinFirstCoord, {}, 0.0}; }

double Functional::operator()(std::span<const double> x) const {
    switch (kind) {
        case FunctionalKind::SquareDisplacement: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += xi[i] * x[i];
            return s * s;
        }
        case FunctionalKind::Gaussian: {
            double r2 = 0.0;
            for (double v : x) r2 += v * v;
            return std::exp(-0.5 * r2);
        }
        case FunctionalKind::Indicator: {
            double s = 0.0;
            for (std::size_t i = 0; i < x.size(); ++i) s += xi[i] * x[i];
            return s <= threshold ? 1.0 : 0.0;
        }
        case FunctionalKind::SinFirstCoord: return std::sin(x[0]);
    }
    return 0.0;
}

std::string Functional::name() const {
    switch (kind) {
        case FunctionalKind::SquareDisplacement: return "square";
        case FunctionalKind::Gaussian: return "gaussian";
        case FunctionalKind::Indicator: return "indicator";
        case FunctionalKind::SinFirstCoord: return "sin";
    }
    return "unknown";
}

// ---------------------------------------------------------------------------

double expected_site_weight(const EnvironmentSpec& spec) {
    spec.validate();
    if (spec.structure == StructureKind::PeriodicCell) {
        const PeriodicEnvironment cell = PeriodicEnvironment::from_cell(spec);
        return site_weight(cell, Point{});
    }
    return 2.0 * spec.dimension * edge_mean(spec);
}

namespace {

void check_functional(const EnvironmentSpec& spec, const Functional& f, std::int64_t walks, std::int64_t steps) {
    spec.validate();
    if (walks < 1) throw ConfigError("walk estimator: k must be >= 1");
    if (steps < 0) throw ConfigError("walk estimator: n must be >= 0");
    const bool needs_xi = f.kind == FunctionalKind::SquareDisplacement || f.kind == FunctionalKind::Indicator;
    if (needs_xi && static_cast<int>(f.xi.size()) != spec.dimension)
        throw ConfigError("walk estimator: xi has the wrong dimension");
}

struct WalkSample {
    double summand;
    double tilt;
    double discovered;
};

WalkSample sample_walk(LazyEnvironment& env, std::int64_t steps, const Functional& f, double mean_p,
                       std::uint64_t seed) {
    const WalkOutcome walk = run_walk(env, steps, seed);
    const int d = env.dimension();
    const double scale = steps > 0 ? 1.0 / std::sqrt(static_cast<double>(steps)) : 0.0;
    double x[kMaxDimension];
    for (int i = 0; i < d; ++i) x[i] = walk.endpoint[i] * scale;
    const double tilt = walk.p0 / mean_p;
    return {tilt * f(std::span<const double>(x, d)), tilt, static_cast<double>(walk.discovered_edges)};
}

constexpr std::int64_t kBlock = 1024;

McEstimate finish(std::int64_t walks, std::int64_t steps, const Partial& summand, const Partial& tilt,
                  const Partial& discovered) {
    McEstimate est;
    est.walks = walks;
    est.steps = steps;
    est.value = summand.mean();
    est.sample_variance = summand.variance();
    est.std_error = std::sqrt(est.sample_variance / static_cast<double>(walks));
    est.tilt_mean = tilt.mean();
    est.mean_discovered_edges = discovered.mean();
    return est;
}

}  // namespace

McEstimate estimate_functional(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                               const Functional& f, std::uint64_t master_seed, int workers) {
    check_functional(spec, f, walks, steps);
    const double mean_p = expected_site_weight(spec);
    const std::int64_t blocks = (walks + kBlock - 1) / kBlock;
    std::vector<Partial> summands(blocks), tilts(blocks), discovered(blocks);

#pragma omp parallel num_threads(workers > 0 ? workers : 1)
    {
        LazyEnvironment env(spec, 0);
#pragma omp for schedule(dynamic, 1)
        for (std::int64_t b = 0; b < blocks; ++b) {
            Partial s, t, e;
            const std::int64_t end = std::min(walks, (b + 1) * kBlock);
            for (std::int64_t i = b * kBlock; i < end; ++i) {
                const WalkSample w = sample_walk(env, steps, f, mean_p, derive_seed(master_seed, i));
                s.add(w.summand);
                t.add(w.tilt);
                e.add(w.discovered);
            }
            summands[b] = s;
            tilts[b] = t;
            discovered[b] = e;
        }
    }
    return finish(walks, steps, aggregate(summands), aggregate(tilts), aggregate(discovered));
}

McEstimate estimate_functional_serial(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                                      const Functional& f, std::uint64_t master_seed) {
    check_functional(spec, f, walks, steps);
    const double mean_p = expected_site_weight(spec);
    LazyEnvironment env(spec, 0);
    std::vector<double> values(walks);
    double tilt_sum = 0.0;
    double disc_sum = 0.0;
    for (std::int64_t i = 0; i < walks; ++i) {
        const WalkSample w = sample_walk(env, steps, f, mean_p, derive_seed(master_seed, i));
        values[i] = w.summand;
        tilt_sum += w.tilt;
        disc_sum += w.discovered;
    }
    double mean = 0.0;
    for (double v : values) mean += v;
    mean /= static_cast<double>(walks);
    double ss = 0.0;
    for (double v : values) ss += (v - mean) * (v - mean);

    McEstimate est;
    est.walks = walks;
    est.steps = steps;
    est.value = mean;
    est.sample_variance = walks > 1 ? ss / static_cast<double>(walks - 1) : 0.0;
    est.std_error = std::sqrt(est.sample_variance / static_cast<double>(walks));
    est.tilt_mean = tilt_sum / static_cast<double>(walks);
    est.mean_discovered_edges = disc_sum / static_cast<double>(walks);
    return est;
}

McEstimate estimate_msd(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                        std::span<const double> xi, std::uint64_t master_seed, int workers) {
    return estimate_functional(spec, walks, steps, Functional::square_displacement({xi.begin(), xi.end()}),
                               master_seed, workers);
}

double limiting_variance(const EnvironmentSpec& spec, double a_disc) {
    spec.validate();
    if (spec.structure != StructureKind::IID)
        throw UnsupportedError("limiting_variance: needs independent edges (IID structure)");
    const double sites = 2.0 * spec.dimension;
    const double mean_p = sites * spec.law.mean();
    const double var_p = sites * spec.law.variance();
    const double second = var_p + mean_p * mean_p;
    return (3.0 * second / (mean_p * mean_p) - 1.0) * a_disc * a_disc;
}

void write_mc_header(std::ostream& out) {
    out << "method,d,n,k,seed,value,sample_variance,std_error,mean_discovered_edges\n";
}

void write_mc_row(std::ostream& out, const std::string& method, int dimension, std::uint64_t seed,
                  const McEstimate& est) {
    char buf[512];
    std::snprintf(buf, sizeof buf, "%s,%d,%lld,%lld,%llu,%.17g,%.17g,%.17g,%.17g\n", method.c_str(), dimension,
                  static_cast<long long>(est.steps), static_cast<long long>(est.walks),
                  static_cast<unsigned long long>(seed), est.value, est.sample_variance, est.std_error,
                  est.mean_discovered_edges);
    out << buf;
}

}  // namespace homog
