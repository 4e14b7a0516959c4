#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <absl/container/flat_hash_map.h>

#include "homog/lattice.hpp"

namespace homog {

enum class LawKind { Bernoulli, DiscreteList, Uniform };

/// Single-edge conductance law nu, used directly by IID environments.
class Law {
public:
    /// alpha with probability prob_alpha, beta otherwise.
    static Law bernoulli(double alpha, double beta, double prob_alpha);
    static Law discrete(std::vector<double> values, std::vector<double> weights);
    static Law uniform(double alpha, double beta);
    static Law constant(double c) { return bernoulli(c, c, 1.0); }

    LawKind kind() const { return kind_; }
    double min() const { return lo_; }
    double max() const { return hi_; }

    /// Inverse-CDF sample from a uniform u in [0, 1).
    double sample(double u) const;

    double mean() const;
    double variance() const;
    /// 1 / E[1/omega] (Reuss bound).
    double harmonic_mean() const;

    const std::vector<double>& values() const { return values_; }
    const std::vector<double>& weights() const { return weights_; }

    void validate() const;

private:
    LawKind kind_ = LawKind::Bernoulli;
    double lo_ = 1.0;
    double hi_ = 1.0;
    // Bernoulli/DiscreteList atoms and normalized weights; cumulative_ drives sample().
    std::vector<double> values_;
    std::vector<double> weights_;
    std::vector<double> cumulative_;
};

enum class StructureKind { IID, Islands, PeriodicCell };

/// Hidden-variable construction: an edge (z, z+e_i) is `low` iff every hidden
/// uniform on the parallel edges (z', z'+e_i), |z'-z|_inf <= r, is <= threshold.
struct IslandsParams {
    int window_radius = 2;
    double hidden_threshold = 0.5;
    double low = 1.0;
    double high = 4.0;
};

/// Explicit `period`-periodic cell. edges[axis * period^d + linear_index(z)]
/// is the conductance of (z, z + e_axis) for z in the cell.
struct PeriodicCellParams {
    int period = 1;
    std::vector<double> edges;
};

struct EnvironmentSpec {
    int dimension = 2;
    StructureKind structure = StructureKind::IID;
    Law law = Law::constant(1.0);
    IslandsParams islands{};
    PeriodicCellParams cell{};

    static EnvironmentSpec iid(int dimension, Law law);
    static EnvironmentSpec islands_model(int dimension, IslandsParams params);
    static EnvironmentSpec periodic_cell(int dimension, PeriodicCellParams params);

    /// Lower / upper ellipticity bounds of every reachable conductance.
    double alpha() const;
    double beta() const;

    /// Throws ConfigError on an inconsistent description.
    void validate() const;
};

/// Threshold p with p^((2r+1)^d) = prob_low.
double islands_threshold(double prob_low, int window_radius, int dimension);

/// P[omega_e = low] for an islands spec.
double islands_marginal(const IslandsParams& params, int dimension);

/// E[omega_e] under the stationary law. PeriodicCell: cell average.
double edge_mean(const EnvironmentSpec& spec);

/// Conductance of `e` for the stateless rule of `spec` with environment seed
/// `seed`. Every materialization below evaluates this same function, so equal
/// seeds give equal conductances.
double sample_edge(const EnvironmentSpec& spec, std::uint64_t seed, const EdgeId& e);

/// Hidden uniform attached to edge e (IID uses it directly through the law).
double hidden_uniform(std::uint64_t seed, const EdgeId& e, int dimension);

/// Dense conductances of all edges with at least one endpoint in Q_N = [0,N)^d.
class BoxEnvironment {
public:
    BoxEnvironment(EnvironmentSpec spec, int side, std::uint64_t seed, std::vector<double> values);

    const EnvironmentSpec& spec() const { return spec_; }
    int side() const { return side_; }
    int dimension() const { return spec_.dimension; }
    std::uint64_t seed() const { return seed_; }

    bool touches(const EdgeId& e) const;
    /// Throws DomainError if the edge does not touch Q_N.
    double conductance(const EdgeId& e) const;

    /// Unchecked access: base coordinates with base[axis] in [-1, N-1], others in [0, N).
    double at(int axis, const Point& base) const { return values_[slot(axis, base)]; }

    std::span<const double> values() const { return values_; }

private:
    std::size_t slot(int axis, const Point& base) const;

    EnvironmentSpec spec_;
    int side_;
    std::uint64_t seed_;
    std::size_t per_axis_;
    std::vector<double> values_;
};

enum class Provenance { SpacePeriodized, LawPeriodized, ExplicitCell };

/// Z^d-periodic conductance field given by one period cell.
class PeriodicEnvironment {
public:
    PeriodicEnvironment(int period, int dimension, Provenance provenance, std::vector<double> cell);

    /// The explicit cell of a PeriodicCell spec, anchored at the origin.
    static PeriodicEnvironment from_cell(const EnvironmentSpec& spec);

    int period() const { return period_; }
    int dimension() const { return dimension_; }
    Provenance provenance() const { return provenance_; }

    double conductance(const EdgeId& e) const;
    /// base must lie in the cell.
    double at(int axis, const Point& base) const {
        return cell_[static_cast<std::size_t>(axis) * sites_ + linear_index(base, period_, dimension_)];
    }

    std::span<const double> cell() const { return cell_; }

private:
    int period_;
    int dimension_;
    Provenance provenance_;
    std::size_t sites_;
    std::vector<double> cell_;
};

/// Conductances discovered on demand and memoized. Islands windows memoize
/// hidden uniforms by their own edge, so overlapping windows share them.
/// Single-owner mutable state.
class LazyEnvironment {
public:
    LazyEnvironment(EnvironmentSpec spec, std::uint64_t seed);

    const EnvironmentSpec& spec() const { return spec_; }
    int dimension() const { return spec_.dimension; }
    std::uint64_t seed() const { return seed_; }

    double conductance(const EdgeId& e);

    std::size_t discovered_edges() const { return edges_.size(); }
    std::size_t discovered_hidden() const { return hidden_.size(); }

    /// Forget everything and start a fresh environment with a new seed.
    void reset(std::uint64_t seed);

private:
    double generate(const EdgeId& e, std::uint64_t key);
    double hidden(const EdgeId& e);

    EnvironmentSpec spec_;
    std::uint64_t seed_;
    std::size_t cell_sites_ = 0;
    absl::flat_hash_map<std::uint64_t, double> edges_;
    absl::flat_hash_map<std::uint64_t, double> hidden_;
};

/// Configuration error on an invalid spec or N < 1.
BoxEnvironment sample_box(const EnvironmentSpec& spec, int side, std::uint64_t seed);

/// Q_N-periodic extension of the box restricted to Q_N.
PeriodicEnvironment periodize_space(const BoxEnvironment& box);

/// Periodize the hidden i.i.d. variables on the N-torus, then apply the local
/// rule with windows wrapping around. UnsupportedError for PeriodicCell.
PeriodicEnvironment sample_periodic_law(const EnvironmentSpec& spec, int side, std::uint64_t seed);

/// Sum of the 2d conductances at z.
template <class Env>
double site_weight(Env& env, const Point& z) {
    double p = 0.0;
    for (int i = 0; i < env.dimension(); ++i) {
        p += env.conductance(EdgeId{z, i});
        Point back = z;
        --back[i];
        p += env.conductance(EdgeId{back, i});
    }
    return p;
}

/// CSV debug dump: base_0..base_{d-1},axis,value; one row per stored edge.
void write_csv(std::ostream& out, const BoxEnvironment& box);

/// Shipped 3-periodic d=2 cell with no z -> -z symmetry.
EnvironmentSpec default_asymmetric_cell();

}  // namespace homog
