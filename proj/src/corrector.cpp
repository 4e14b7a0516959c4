#include "homog/corrector.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>

#include "homog/errors.hpp"

namespace homog {

std::string to_string(Method m) {
    switch (m) {
        case Method::Dirichlet: return "dirichlet";
        case Method::RegularizedFiltered: return "regularized";
        case Method::PeriodLaw: return "period-law";
        case Method::PeriodSpace: return "period-space";
    }
    return "unknown";
}

int RegularizationSchedule::filter_side(int side) const {
    return std::max(1, static_cast<int>(std::floor(filter_fraction * side + 1e-9)));
}

double RegularizationSchedule::mu(int side) const { return mu_prefactor / std::pow(side, mu_exponent); }

namespace {

/// Matrix-free mu + L_omega on a finite site set. Slot 2i is the edge towards
/// z + e_i, slot 2i+1 the edge towards z - e_i; a negative neighbour is the
/// zero exterior.
class LatticeOperator {
public:
    std::size_t size() const { return sites_; }

    void apply(std::span<const double> x, std::span<double> y) const {
        for (std::size_t s = 0; s < sites_; ++s) {
            const std::size_t base = s * degree_;
            double acc = diag_[s] * x[s];
            for (int k = 0; k < degree_; ++k) {
                const std::int64_t nb = nbr_[base + k];
                if (nb >= 0) acc -= w_[base + k] * x[static_cast<std::size_t>(nb)];
            }
            y[s] = acc;
        }
    }

    void diagonal(std::span<double> y) const { std::copy(diag_.begin(), diag_.end(), y.begin()); }

    template <class Conductance>
    static LatticeOperator build(int side, int dimension, double mu, bool periodic, Conductance&& omega) {
        LatticeOperator op;
        op.side_ = side;
        op.dimension_ = dimension;
        op.degree_ = 2 * dimension;
        op.sites_ = ipow(static_cast<std::size_t>(side), dimension);
        op.nbr_.resize(op.sites_ * op.degree_);
        op.w_.resize(op.sites_ * op.degree_);
        op.diag_.assign(op.sites_, mu);
        for (std::size_t s = 0; s < op.sites_; ++s) {
            const Point z = point_from_index(s, side, dimension);
            for (int i = 0; i < dimension; ++i) {
                Point fwd = z;
                Point back = z;
                ++fwd[i];
                --back[i];
                const double wf = omega(EdgeId{z, i});
                const double wb = omega(EdgeId{back, i});
                std::int64_t nf = -1;
                std::int64_t nb = -1;
                if (periodic) {
                    fwd[i] = wrap(fwd[i], side);
                    back[i] = wrap(back[i], side);
                    nf = static_cast<std::int64_t>(linear_index(fwd, side, dimension));
                    nb = static_cast<std::int64_t>(linear_index(back, side, dimension));
                } else {
                    if (fwd[i] < side) nf = static_cast<std::int64_t>(linear_index(fwd, side, dimension));
                    if (back[i] >= 0) nb = static_cast<std::int64_t>(linear_index(back, side, dimension));
                }
                const std::size_t slot = s * op.degree_ + 2 * i;
                op.nbr_[slot] = nf;
                op.w_[slot] = wf;
                op.nbr_[slot + 1] = nb;
                op.w_[slot + 1] = wb;
                op.diag_[s] += wf + wb;
            }
        }
        return op;
    }

    std::vector<double> drift(std::span<const double> xi) const {
        std::vector<double> b(sites_, 0.0);
        for (std::size_t s = 0; s < sites_; ++s)
            for (int i = 0; i < dimension_; ++i)
                b[s] += xi[i] * (w_[s * degree_ + 2 * i] - w_[s * degree_ + 2 * i + 1]);
        return b;
    }

    /// sum over sites of weight(s) * sum_i omega(z, z+e_i) (xi_i + phi(z+e_i) - phi(z))^2
    template <class Weight>
    double energy(std::span<const double> xi, std::span<const double> phi, Weight&& weight) const {
        double total = 0.0;
        for (std::size_t s = 0; s < sites_; ++s) {
            const double ws = weight(s);
            if (ws == 0.0) continue;
            double site = 0.0;
            for (int i = 0; i < dimension_; ++i) {
                const std::size_t slot = s * degree_ + 2 * i;
                const double ahead = nbr_[slot] >= 0 ? phi[static_cast<std::size_t>(nbr_[slot])] : 0.0;
                const double g = xi[i] + ahead - phi[s];
                site += w_[slot] * g * g;
            }
            total += ws * site;
        }
        return total;
    }

private:
    int side_ = 0;
    int dimension_ = 0;
    int degree_ = 0;
    std::size_t sites_ = 0;
    std::vector<std::int64_t> nbr_;
    std::vector<double> w_;
    std::vector<double> diag_;
};

void check_xi(std::span<const double> xi, int dimension) {
    if (static_cast<int>(xi.size()) != dimension) throw ConfigError("direction xi has the wrong dimension");
}

int iteration_cap(const SolverOptions& opts, int side, int dimension) {
    if (opts.max_iter > 0) return opts.max_iter;
    return std::max(50, static_cast<int>(std::ceil(50.0 * std::pow(side, 0.5 * dimension))));
}

LatticeOperator box_operator(const BoxEnvironment& env, double mu) {
    return LatticeOperator::build(env.side(), env.dimension(), mu, false,
                                  [&](const EdgeId& e) { return env.at(e.axis, e.base); });
}

LatticeOperator torus_operator(const PeriodicEnvironment& env, double mu) {
    return LatticeOperator::build(env.period(), env.dimension(), mu, true,
                                  [&](const EdgeId& e) { return env.conductance(e); });
}

CorrectorField solve_on(const LatticeOperator& op, int side, int dimension, std::span<const double> xi, double mu,
                        CorrectorKind kind, bool project, const SolverOptions& opts) {
    CorrectorField phi;
    phi.side = side;
    phi.dimension = dimension;
    phi.xi.assign(xi.begin(), xi.end());
    phi.kind = kind;
    phi.mu = mu;
    phi.values.assign(op.size(), 0.0);
    const std::vector<double> rhs = op.drift(xi);
    CgOptions cg{opts.tol, iteration_cap(opts, side, dimension), project};
    phi.stats = cg_solve(op, rhs, phi.values, cg);
    return phi;
}

double residual_of(const LatticeOperator& op, std::span<const double> xi, const CorrectorField& phi) {
    const std::vector<double> b = op.drift(xi);
    std::vector<double> ax(op.size());
    op.apply(phi.values, ax);
    double rr = 0.0;
    double bb = 0.0;
    for (std::size_t i = 0; i < b.size(); ++i) {
        rr += (ax[i] - b[i]) * (ax[i] - b[i]);
        bb += b[i] * b[i];
    }
    return bb > 0.0 ? std::sqrt(rr / bb) : std::sqrt(rr);
}

}  // namespace

Mask make_mask(int side, int filter_side, int dimension, MaskShape shape, double plateau) {
    if (filter_side <= 0 || filter_side > side) throw ConfigError("make_mask: need 0 < L <= N");
    if (dimension < 1 || dimension > kMaxDimension) throw ConfigError("make_mask: bad dimension");
    if (!(plateau >= 0.0 && plateau <= 1.0)) throw ConfigError("make_mask: plateau fraction must lie in [0, 1]");
    Mask mask;
    mask.side = filter_side;
    mask.dimension = dimension;
    mask.shape = shape;

    const int len = filter_side;
    std::vector<double> profile(len, 1.0);
    if (shape == MaskShape::PiecewiseAffine) {
        // Trapezoid sampled at cell centers t = (j + 1/2) / L.
        const double ramp = 0.5 * (1.0 - plateau);
        for (int j = 0; j < len; ++j) {
            const double t = (j + 0.5) / len;
            profile[j] = ramp > 0.0 ? std::min({1.0, t / ramp, (1.0 - t) / ramp}) : 1.0;
        }
    }
    const std::size_t n = ipow(static_cast<std::size_t>(len), dimension);
    mask.weights.resize(n);
    double total = 0.0;
    for (std::size_t s = 0; s < n; ++s) {
        const Point z = point_from_index(s, len, dimension);
        double w = 1.0;
        for (int i = 0; i < dimension; ++i) w *= profile[z[i]];
        mask.weights[s] = w;
        total += w;
    }
    for (double& w : mask.weights) w /= total;
    return mask;
}

CorrectorField solve_dirichlet(const BoxEnvironment& env, std::span<const double> xi, const SolverOptions& opts) {
    check_xi(xi, env.dimension());
    const LatticeOperator op = box_operator(env, 0.0);
    return solve_on(op, env.side(), env.dimension(), xi, 0.0, CorrectorKind::Dirichlet, false, opts);
}

CorrectorField solve_regularized(const BoxEnvironment& env, std::span<const double> xi, double mu,
                                 const SolverOptions& opts) {
    check_xi(xi, env.dimension());
    if (!(mu > 0.0)) throw ConfigError("solve_regularized: mu must be > 0");
    const LatticeOperator op = box_operator(env, mu);
    return solve_on(op, env.side(), env.dimension(), xi, mu, CorrectorKind::Regularized, false, opts);
}

CorrectorField solve_periodic(const PeriodicEnvironment& env, std::span<const double> xi, double mu,
                              const SolverOptions& opts) {
    check_xi(xi, env.dimension());
    if (!(mu >= 0.0)) throw ConfigError("solve_periodic: mu must be >= 0");
    const LatticeOperator op = torus_operator(env, mu);
    return solve_on(op, env.period(), env.dimension(), xi, mu, CorrectorKind::Periodic, mu == 0.0, opts);
}

double dirichlet_energy(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi) {
    const LatticeOperator op = box_operator(env, 0.0);
    const double volume = static_cast<double>(op.size());
    return op.energy(xi, phi.values, [](std::size_t) { return 1.0; }) / volume;
}

double filtered_energy(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi,
                       const Mask& mask) {
    const int n = env.side();
    const int d = env.dimension();
    if (mask.side > n) throw ConfigError("filtered_energy: mask larger than the box");
    const int offset = filter_offset(n, mask.side);
    const LatticeOperator op = box_operator(env, 0.0);
    return op.energy(xi, phi.values, [&](std::size_t s) {
        Point z = point_from_index(s, n, d);
        for (int i = 0; i < d; ++i) {
            z[i] -= offset;
            if (z[i] < 0 || z[i] >= mask.side) return 0.0;
        }
        return mask.at(z);
    });
}

double periodic_energy(const PeriodicEnvironment& env, std::span<const double> xi, std::span<const double> field) {
    check_xi(xi, env.dimension());
    const LatticeOperator op = torus_operator(env, 0.0);
    return op.energy(xi, field, [](std::size_t) { return 1.0; }) / static_cast<double>(op.size());
}

EstimateSample estimate_dirichlet(const BoxEnvironment& env, std::span<const double> xi, const SolverOptions& opts) {
    const CorrectorField phi = solve_dirichlet(env, xi, opts);
    EstimateSample out;
    out.method = Method::Dirichlet;
    out.side = env.side();
    out.filter_side = env.side();
    out.xi.assign(xi.begin(), xi.end());
    out.seed = env.seed();
    out.value = dirichlet_energy(env, xi, phi);
    out.stats = phi.stats;
    return out;
}

EstimateSample estimate_regularized(const BoxEnvironment& env, int filter_side, double mu, const Mask& mask,
                                    std::span<const double> xi, const SolverOptions& opts) {
    if (filter_side <= 0 || filter_side > env.side()) throw ConfigError("estimate_regularized: need 0 < L <= N");
    if (mask.side != filter_side) throw ConfigError("estimate_regularized: mask support differs from L");
    if (mask.dimension != env.dimension()) throw ConfigError("estimate_regularized: mask dimension mismatch");
    const CorrectorField phi = solve_regularized(env, xi, mu, opts);
    EstimateSample out;
    out.method = Method::RegularizedFiltered;
    out.side = env.side();
    out.mu = mu;
    out.filter_side = filter_side;
    out.xi.assign(xi.begin(), xi.end());
    out.seed = env.seed();
    out.value = filtered_energy(env, xi, phi, mask);
    out.stats = phi.stats;
    return out;
}

EstimateSample estimate_periodic(const PeriodicEnvironment& env, std::span<const double> xi,
                                 const SolverOptions& opts) {
    const CorrectorField phi = solve_periodic(env, xi, 0.0, opts);
    EstimateSample out;
    out.method = env.provenance() == Provenance::SpacePeriodized ? Method::PeriodSpace : Method::PeriodLaw;
    out.side = env.period();
    out.filter_side = env.period();
    out.xi.assign(xi.begin(), xi.end());
    out.value = periodic_energy(env, xi, phi.values);
    out.stats = phi.stats;
    return out;
}

double relative_residual(const BoxEnvironment& env, std::span<const double> xi, const CorrectorField& phi) {
    return residual_of(box_operator(env, phi.mu), xi, phi);
}

double relative_residual(const PeriodicEnvironment& env, std::span<const double> xi, const CorrectorField& phi) {
    return residual_of(torus_operator(env, phi.mu), xi, phi);
}

void write_csv(std::ostream& out, const CorrectorField& phi) {
    for (int i = 0; i < phi.dimension; ++i) out << "coord_" << i << ',';
    out << "value\n";
    for (std::size_t s = 0; s < phi.values.size(); ++s) {
        const Point z = point_from_index(s, phi.side, phi.dimension);
        for (int i = 0; i < phi.dimension; ++i) out << z[i] << ',';
        char value[32];
        std::snprintf(value, sizeof value, "%.17g", phi.values[s]);
        out << value << '\n';
    }
}

}  // namespace homog
