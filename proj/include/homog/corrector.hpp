#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "homog/cg.hpp"
#include "homog/environment.hpp"

namespace homog {

enum class CorrectorKind { Dirichlet, Regularized, Periodic };

/// One corrector component for direction xi on Q_N (Dirichlet / regularized,
/// zero outside) or on one period cell (periodic).
struct CorrectorField {
    int side = 0;
    int dimension = 0;
    std::vector<double> xi;
    CorrectorKind kind = CorrectorKind::Dirichlet;
    double mu = 0.0;
    std::vector<double> values;  // linear_index order
    SolveStats stats;

    double at(const Point& z) const { return values[linear_index(z, side, dimension)]; }
};

enum class MaskShape { PiecewiseAffine, Flat };

/// Averaging weights on Q_L, summing to one.
struct Mask {
    int side = 0;
    int dimension = 0;
    MaskShape shape = MaskShape::Flat;
    std::vector<double> weights;  // linear_index order over Q_L

    double at(const Point& z) const { return weights[linear_index(z, side, dimension)]; }
};

enum class Method { Dirichlet, RegularizedFiltered, PeriodLaw, PeriodSpace };

std::string to_string(Method m);

struct EstimateSample {
    Method method = Method::Dirichlet;
    int side = 0;
    double mu = 0.0;
    int filter_side = 0;
    std::vector<double> xi;
    std::uint64_t seed = 0;
    double value = 0.0;  // xi . A xi
    SolveStats stats;
};

struct SolverOptions {
    double tol = 1e-10;
    /// 0 selects 50 * N^(d/2).
    int max_iter = 0;
};

/// L = floor(4N/5), mu = 125 / N^(3/2) unless overridden.
struct RegularizationSchedule {
    double filter_fraction = 0.8;
    double mu_prefactor = 125.0;
    double mu_exponent = 1.5;
    MaskShape mask = MaskShape::PiecewiseAffine;
    double plateau = 0.5;

    int filter_side(int side) const;
    double mu(int side) const;
};

/// sum_i xi_i (omega(z, z+e_i) - omega(z-e_i, z)): right-hand side of every
/// corrector system.
template <class Env>
double local_drift(const Env& env, const Point& z, std::span<const double> xi) {
    double s = 0.0;
    for (int i = 0; i < env.dimension(); ++i) {
        Point back = z;
        --back[i];
        s += xi[i] * (env.conductance(EdgeId{z, i}) - env.conductance(EdgeId{back, i}));
    }
    return s;
}

/// Tensor-product trapezoid (flat plateau over the middle `plateau` fraction,
/// affine ramps to the faces of Q_L) or uniform weights. ConfigError unless 0 < L <= N.
Mask make_mask(int side, int filter_side, int dimension, MaskShape shape, double plateau = 0.5);

CorrectorField solve_dirichlet(const BoxEnvironment& env, std::span<const double> xi, const SolverOptions& opts = {});

/// (mu + L_omega) phi = drift on Q_N, phi = 0 outside. ConfigError for mu <= 0.
CorrectorField solve_regularized(const BoxEnvironment& env, std::span<const double> xi, double mu,
                                 const SolverOptions& opts = {});

/// Corrector on the discrete torus. mu = 0 is solved in the zero-mean subspace.
CorrectorField solve_periodic(const PeriodicEnvironment& env, std::span<const double> xi, double mu,
                              const SolverOptions& opts = {});

/// N^-d sum_{z in Q_N} sum_i omega(z,z+e_i) (xi_i + grad_i phi(z))^2 with the
/// zero exterior extension of phi.
double dirichlet_energy(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi);

/// Mask-weighted energy over the centered window Q_L inside Q_N.
double filtered_energy(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi,
                       const Mask& mask);

/// Cell-averaged energy of a periodic test field (values in linear_index order).
double periodic_energy(const PeriodicEnvironment& env, std::span<const double> xi, std::span<const double> field);

EstimateSample estimate_dirichlet(const BoxEnvironment& env, std::span<const double> xi,
                                  const SolverOptions& opts = {});

EstimateSample estimate_regularized(const BoxEnvironment& env, int filter_side, double mu, const Mask& mask,
                                    std::span<const double> xi, const SolverOptions& opts = {});

/// Method tag follows the environment provenance (law or space periodization).
EstimateSample estimate_periodic(const PeriodicEnvironment& env, std::span<const double> xi,
                                 const SolverOptions& opts = {});

/// |(mu + L) phi - drift|_2 / |drift|_2 on the solve domain.
double relative_residual(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi);
double relative_residual(const PeriodicEnvironment& env, std::span<const double> xi, const CorrectorField& phi);

/// CSV dump: coord_0..coord_{d-1},value.
void write_csv(std::ostream& out, const CorrectorField& phi);

/// Start offset of the centered Q_L window in Q_N.
inline int filter_offset(int side, int filter_side) { return (side - filter_side) / 2; }

}  // namespace homog
