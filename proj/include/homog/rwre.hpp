#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "homog/environment.hpp"
#include "homog/rng.hpp"

namespace homog {

struct WalkState {
    Point position{};
    std::int64_t steps = 0;
};

struct WalkOutcome {
    Point endpoint{};
    std::int64_t steps = 0;
    /// p_omega(0), read before the first step.
    double p0 = 0.0;
    std::size_t discovered_edges = 0;
};

/// One move of the discrete-time walk: neighbour z' is chosen with probability
/// omega(z, z') / p_omega(z). Consumes exactly one uniform from `rng`.
/// Neighbour order is +e_0, -e_0, +e_1, -e_1, ...
template <class Env>
void step(WalkState& state, Env& env, CounterStream& rng) {
    const int d = env.dimension();
    double w[2 * kMaxDimension];
    double p = 0.0;
    for (int i = 0; i < d; ++i) {
        Point back = state.position;
        --back[i];
        w[2 * i] = env.conductance(EdgeId{state.position, i});
        w[2 * i + 1] = env.conductance(EdgeId{back, i});
        p += w[2 * i] + w[2 * i + 1];
    }
    const double target = rng.uniform() * p;
    int choice = 2 * d - 1;
    double acc = 0.0;
    for (int k = 0; k < 2 * d - 1; ++k) {
        acc += w[k];
        if (target < acc) {
            choice = k;
            break;
        }
    }
    state.position[choice / 2] += (choice % 2 == 0) ? 1 : -1;
    ++state.steps;
}

/// Walk of n steps from the origin in `env`, which is reset to the environment
/// seed derived from `seed`. The trajectory stream is a second child of `seed`.
WalkOutcome run_walk(LazyEnvironment& env, std::int64_t n, std::uint64_t seed);

/// Same, in a fresh LazyEnvironment.
WalkOutcome run_walk(const EnvironmentSpec& spec, std::int64_t n, std::uint64_t seed);

enum class FunctionalKind { SquareDisplacement, Gaussian, Indicator, SinFirstCoord };

/// Test function f evaluated at the rescaled endpoint x = Y_n / sqrt(n).
struct Functional {
    FunctionalKind kind = FunctionalKind::SquareDisplacement;
    std::vector<double> xi;
    double threshold = 0.5;

    /// (xi . x)^2
    static Functional square_displacement(std::vector<double> xi);
    /// exp(-|x|^2 / 2)
    static Functional gaussian();
    /// 1{xi . x <= z}
    static Functional indicator(std::vector<double> xi, double z);
    /// sin(x_1)
    static Functional sin_first_coord();

    double operator()(std::span<const double> x) const;
    std::string name() const;
};

struct McEstimate {
    std::int64_t walks = 0;
    std::int64_t steps = 0;
    double value = 0.0;
    /// Unbiased variance of the per-walk tilted summand.
    double sample_variance = 0.0;
    double std_error = 0.0;
    double mean_discovered_edges = 0.0;
    /// Empirical mean of p0 / E[p].
    double tilt_mean = 0.0;
};

/// E[p_omega(0)] = 2d E[omega_e]; the anchored deterministic value p_omega(0)
/// for a PeriodicCell spec.
double expected_site_weight(const EnvironmentSpec& spec);

/// (1/k) sum_i p0^(i) / E[p] * f(Y_n^(i) / sqrt(n)) over k independent walks in
/// independent environments; walk i uses derive_seed(master_seed, i).
/// Runs on `workers` OpenMP threads; the result is bit-identical for every worker count.
McEstimate estimate_functional(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                               const Functional& f, std::uint64_t master_seed, int workers = 1);

/// Mean square displacement estimator of 2 xi . A_hom^disc xi.
McEstimate estimate_msd(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                        std::span<const double> xi, std::uint64_t master_seed, int workers = 1);

/// Straightforward single-threaded version of estimate_functional (plain
/// sums, two-pass variance). Kept as the reference for the parallel kernel.
McEstimate estimate_functional_serial(const EnvironmentSpec& spec, std::int64_t walks, std::int64_t steps,
                                      const Functional& f, std::uint64_t master_seed);

/// Predicted limit of the per-walk MSD summand variance:
/// (3 E[p^2] / E[p]^2 - 1) * a_disc^2, with a_disc = 2 xi . A^disc xi.
/// UnsupportedError unless the edges are i.i.d.
double limiting_variance(const EnvironmentSpec& spec, double a_disc);

/// Results row schema: method,d,n,k,seed,value,sample_variance,std_error,mean_discovered_edges
void write_mc_header(std::ostream& out);
void write_mc_row(std::ostream& out, const std::string& method, int dimension, std::uint64_t seed,
                  const McEstimate& est);

}  // namespace homog
