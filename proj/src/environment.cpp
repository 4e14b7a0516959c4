#include "homog/environment.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <numeric>
#include <ostream>
#include <sstream>

#include "homog/errors.hpp"
#include "homog/rng.hpp"

namespace homog {

// ---------------------------------------------------------------------------
// lattice helpers

EdgeId edge_between(const Point& x, const Point& y, int dimension) {
    int axis = -1;
    int diff = 0;
    for (int i = 0; i < dimension; ++i) {
        const int dx = y[i] - x[i];
        if (dx == 0) continue;
        if (axis >= 0 || (dx != 1 && dx != -1)) throw DomainError("edge_between: sites are not nearest neighbours");
        axis = i;
        diff = dx;
    }
    if (axis < 0) throw DomainError("edge_between: identical sites");
    return diff > 0 ? EdgeId{x, axis} : EdgeId{y, axis};
}

std::uint64_t edge_key(const EdgeId& e, int dimension) {
    const int bits = 60 / dimension;
    const std::int64_t offset = std::int64_t{1} << (bits - 1);
    std::uint64_t key = static_cast<std::uint64_t>(e.axis) << 60;
    for (int i = 0; i < dimension; ++i) {
        const std::int64_t c = static_cast<std::int64_t>(e.base[i]) + offset;
        if (c < 0 || c >= 2 * offset) throw DomainError("edge_key: coordinate out of packable range");
        key |= static_cast<std::uint64_t>(c) << (bits * i);
    }
    return key;
}

std::string to_string(const Point& p, int dimension) {
    std::ostringstream os;
    os << '(';
    for (int i = 0; i < dimension; ++i) os << (i ? "," : "") << p[i];
    os << ')';
    return os.str();
}

// ---------------------------------------------------------------------------
// Law

Law Law::bernoulli(double alpha, double beta, double prob_alpha) {
    Law law;
    law.kind_ = LawKind::Bernoulli;
    law.lo_ = std::min(alpha, beta);
    law.hi_ = std::max(alpha, beta);
    law.values_ = {alpha, beta};
    law.weights_ = {prob_alpha, 1.0 - prob_alpha};
    law.cumulative_ = {prob_alpha, 1.0};
    if (alpha > beta) throw ConfigError("bernoulli law: alpha > beta");
    if (!(alpha > 0.0)) throw ConfigError("bernoulli law: conductances must be positive");
    if (!(prob_alpha >= 0.0 && prob_alpha <= 1.0)) throw ConfigError("bernoulli law: prob_alpha outside [0, 1]");
    return law;
}

Law Law::discrete(std::vector<double> values, std::vector<double> weights) {
    if (values.empty() || values.size() != weights.size())
        throw ConfigError("discrete law: values and weights must be nonempty and of equal length");
    double total = 0.0;
    for (double w : weights) {
        if (!(w >= 0.0)) throw ConfigError("discrete law: negative weight");
        total += w;
    }
    if (!(total > 0.0)) throw ConfigError("discrete law: weights sum to zero");
    Law law;
    law.kind_ = LawKind::DiscreteList;
    law.values_ = std::move(values);
    law.weights_ = std::move(weights);
    double acc = 0.0;
    for (double& w : law.weights_) {
        w /= total;
        acc += w;
        law.cumulative_.push_back(acc);
    }
    law.cumulative_.back() = 1.0;
    law.lo_ = *std::min_element(law.values_.begin(), law.values_.end());
    law.hi_ = *std::max_element(law.values_.begin(), law.values_.end());
    if (!(law.lo_ > 0.0)) throw ConfigError("discrete law: conductances must be positive");
    return law;
}

Law Law::uniform(double alpha, double beta) {
    if (alpha > beta) throw ConfigError("uniform law: alpha > beta");
    if (!(alpha > 0.0)) throw ConfigError("uniform law: conductances must be positive");
    Law law;
    law.kind_ = LawKind::Uniform;
    law.lo_ = alpha;
    law.hi_ = beta;
    return law;
}

double Law::sample(double u) const {
    if (kind_ == LawKind::Uniform) return lo_ + (hi_ - lo_) * u;
    const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), u);
    const auto idx = std::min<std::size_t>(static_cast<std::size_t>(it - cumulative_.begin()), values_.size() - 1);
    return values_[idx];
}

double Law::mean() const {
    if (kind_ == LawKind::Uniform) return 0.5 * (lo_ + hi_);
    double m = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) m += weights_[i] * values_[i];
    return m;
}

double Law::variance() const {
    if (kind_ == LawKind::Uniform) return (hi_ - lo_) * (hi_ - lo_) / 12.0;
    const double m = mean();
    double v = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) v += weights_[i] * (values_[i] - m) * (values_[i] - m);
    return v;
}

double Law::harmonic_mean() const {
    if (kind_ == LawKind::Uniform) {
        if (hi_ == lo_) return lo_;
        return (hi_ - lo_) / std::log(hi_ / lo_);
    }
    double inv = 0.0;
    for (std::size_t i = 0; i < values_.size(); ++i) inv += weights_[i] / values_[i];
    return 1.0 / inv;
}

void Law::validate() const {
    if (!(lo_ > 0.0) || lo_ > hi_) throw ConfigError("law: need 0 < alpha <= beta");
}

// ---------------------------------------------------------------------------
// EnvironmentSpec

EnvironmentSpec EnvironmentSpec::iid(int dimension, Law law) {
    EnvironmentSpec s;
    s.dimension = dimension;
    s.structure = StructureKind::IID;
    s.law = std::move(law);
    return s;
}

EnvironmentSpec EnvironmentSpec::islands_model(int dimension, IslandsParams params) {
    EnvironmentSpec s;
    s.dimension = dimension;
    s.structure = StructureKind::Islands;
    s.islands = params;
    s.law = Law::bernoulli(params.low, params.high, islands_marginal(params, dimension));
    return s;
}

EnvironmentSpec EnvironmentSpec::periodic_cell(int dimension, PeriodicCellParams params) {
    EnvironmentSpec s;
    s.dimension = dimension;
    s.structure = StructureKind::PeriodicCell;
    s.cell = std::move(params);
    return s;
}

double EnvironmentSpec::alpha() const {
    switch (structure) {
        case StructureKind::IID: return law.min();
        case StructureKind::Islands: return std::min(islands.low, islands.high);
        case StructureKind::PeriodicCell:
            return cell.edges.empty() ? 0.0 : *std::min_element(cell.edges.begin(), cell.edges.end());
    }
    return 0.0;
}

double EnvironmentSpec::beta() const {
    switch (structure) {
        case StructureKind::IID: return law.max();
        case StructureKind::Islands: return std::max(islands.low, islands.high);
        case StructureKind::PeriodicCell:
            return cell.edges.empty() ? 0.0 : *std::max_element(cell.edges.begin(), cell.edges.end());
    }
    return 0.0;
}

void EnvironmentSpec::validate() const {
    if (dimension < 1 || dimension > kMaxDimension)
        throw ConfigError("dimension must be in [1, " + std::to_string(kMaxDimension) + "]");
    switch (structure) {
        case StructureKind::IID: law.validate(); break;
        case StructureKind::Islands:
            if (islands.window_radius < 0) throw ConfigError("islands: window_radius must be >= 0");
            if (!(islands.hidden_threshold > 0.0 && islands.hidden_threshold < 1.0))
                throw ConfigError("islands: hidden_threshold must lie in (0, 1)");
            if (!(islands.low > 0.0) || islands.low > islands.high)
                throw ConfigError("islands: need 0 < low <= high");
            break;
        case StructureKind::PeriodicCell: {
            if (cell.period < 1) throw ConfigError("periodic cell: period must be >= 1");
            const std::size_t expected = ipow(static_cast<std::size_t>(cell.period), dimension) * dimension;
            if (cell.edges.size() != expected)
                throw ConfigError("periodic cell: expected " + std::to_string(expected) + " edge values, got " +
                                  std::to_string(cell.edges.size()));
            for (double w : cell.edges)
                if (!(w > 0.0) || !std::isfinite(w)) throw ConfigError("periodic cell: conductances must be positive");
            break;
        }
    }
}

double islands_threshold(double prob_low, int window_radius, int dimension) {
    const double window = std::pow(2.0 * window_radius + 1.0, dimension);
    return std::pow(prob_low, 1.0 / window);
}

double islands_marginal(const IslandsParams& params, int dimension) {
    const double window = std::pow(2.0 * params.window_radius + 1.0, dimension);
    return std::pow(params.hidden_threshold, window);
}

double edge_mean(const EnvironmentSpec& spec) {
    switch (spec.structure) {
        case StructureKind::IID: return spec.law.mean();
        case StructureKind::Islands: {
            const double q = islands_marginal(spec.islands, spec.dimension);
            return q * spec.islands.low + (1.0 - q) * spec.islands.high;
        }
        case StructureKind::PeriodicCell:
            return std::accumulate(spec.cell.edges.begin(), spec.cell.edges.end(), 0.0) /
                   static_cast<double>(spec.cell.edges.size());
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// stateless edge rule

double hidden_uniform(std::uint64_t seed, const EdgeId& e, int dimension) {
    return to_unit(derive_seed(seed, edge_key(e, dimension)));
}

namespace {

template <class HiddenFn>
double islands_rule(const IslandsParams& params, int dimension, const EdgeId& e, HiddenFn&& hidden, bool early_exit) {
    const int r = params.window_radius;
    const int width = 2 * r + 1;
    const std::size_t count = ipow(static_cast<std::size_t>(width), dimension);
    bool all_low = true;
    for (std::size_t w = 0; w < count; ++w) {
        EdgeId probe = e;
        std::size_t rest = w;
        for (int i = 0; i < dimension; ++i) {
            probe.base[i] += static_cast<std::int32_t>(rest % width) - r;
            rest /= width;
        }
        if (hidden(probe) > params.hidden_threshold) {
            all_low = false;
            if (early_exit) break;
        }
    }
    return all_low ? params.low : params.high;
}

double cell_value(const PeriodicCellParams& cell, int dimension, const EdgeId& e) {
    Point z{};
    for (int i = 0; i < dimension; ++i) z[i] = wrap(e.base[i], cell.period);
    const std::size_t sites = ipow(static_cast<std::size_t>(cell.period), dimension);
    return cell.edges[static_cast<std::size_t>(e.axis) * sites + linear_index(z, cell.period, dimension)];
}

}  // namespace

double sample_edge(const EnvironmentSpec& spec, std::uint64_t seed, const EdgeId& e) {
    const int d = spec.dimension;
    switch (spec.structure) {
        case StructureKind::IID: return spec.law.sample(hidden_uniform(seed, e, d));
        case StructureKind::Islands:
            return islands_rule(
                spec.islands, d, e, [&](const EdgeId& h) { return hidden_uniform(seed, h, d); }, true);
        case StructureKind::PeriodicCell: return cell_value(spec.cell, d, e);
    }
    return 0.0;
}

// ---------------------------------------------------------------------------
// BoxEnvironment

BoxEnvironment::BoxEnvironment(EnvironmentSpec spec, int side, std::uint64_t seed, std::vector<double> values)
    : spec_(std::move(spec)),
      side_(side),
      seed_(seed),
      per_axis_(ipow(static_cast<std::size_t>(side), spec_.dimension - 1) * static_cast<std::size_t>(side + 1)),
      values_(std::move(values)) {
    if (values_.size() != per_axis_ * static_cast<std::size_t>(spec_.dimension))
        throw ConfigError("BoxEnvironment: value table has the wrong size");
}

bool BoxEnvironment::touches(const EdgeId& e) const {
    const int d = spec_.dimension;
    if (e.axis < 0 || e.axis >= d) return false;
    for (int i = 0; i < d; ++i) {
        const int lo = (i == e.axis) ? -1 : 0;
        if (e.base[i] < lo || e.base[i] >= side_) return false;
    }
    return true;
}

std::size_t BoxEnvironment::slot(int axis, const Point& base) const {
    // Along `axis` the base coordinate is shifted by one to cover [-1, N-1].
    std::size_t idx = 0;
    for (int i = spec_.dimension - 1; i >= 0; --i) {
        if (i == axis)
            idx = idx * static_cast<std::size_t>(side_ + 1) + static_cast<std::size_t>(base[i] + 1);
        else
            idx = idx * static_cast<std::size_t>(side_) + static_cast<std::size_t>(base[i]);
    }
    return static_cast<std::size_t>(axis) * per_axis_ + idx;
}

double BoxEnvironment::conductance(const EdgeId& e) const {
    if (!touches(e))
        throw DomainError("BoxEnvironment: edge " + to_string(e.base, spec_.dimension) + " axis " +
                          std::to_string(e.axis) + " does not touch Q_N");
    return values_[slot(e.axis, e.base)];
}

BoxEnvironment sample_box(const EnvironmentSpec& spec, int side, std::uint64_t seed) {
    spec.validate();
    if (side < 1) throw ConfigError("sample_box: N must be >= 1");
    const int d = spec.dimension;
    const std::size_t per_axis = ipow(static_cast<std::size_t>(side), d - 1) * static_cast<std::size_t>(side + 1);
    std::vector<double> values(per_axis * d);
    for (int axis = 0; axis < d; ++axis) {
        for (std::size_t idx = 0; idx < per_axis; ++idx) {
            // Decode idx with the same mixed radix as BoxEnvironment::slot.
            EdgeId e{{}, axis};
            std::size_t rest = idx;
            for (int i = 0; i < d; ++i) {
                if (i == axis) {
                    e.base[i] = static_cast<std::int32_t>(rest % (side + 1)) - 1;
                    rest /= (side + 1);
                } else {
                    e.base[i] = static_cast<std::int32_t>(rest % side);
                    rest /= side;
                }
            }
            values[static_cast<std::size_t>(axis) * per_axis + idx] = sample_edge(spec, seed, e);
        }
    }
    return BoxEnvironment(spec, side, seed, std::move(values));
}

// ---------------------------------------------------------------------------
// PeriodicEnvironment

PeriodicEnvironment::PeriodicEnvironment(int period, int dimension, Provenance provenance, std::vector<double> cell)
    : period_(period),
      dimension_(dimension),
      provenance_(provenance),
      sites_(ipow(static_cast<std::size_t>(period), dimension)),
      cell_(std::move(cell)) {
    if (period < 1) throw ConfigError("PeriodicEnvironment: period must be >= 1");
    if (cell_.size() != sites_ * static_cast<std::size_t>(dimension))
        throw ConfigError("PeriodicEnvironment: cell table has the wrong size");
}

PeriodicEnvironment PeriodicEnvironment::from_cell(const EnvironmentSpec& spec) {
    spec.validate();
    if (spec.structure != StructureKind::PeriodicCell)
        throw UnsupportedError("PeriodicEnvironment::from_cell: spec is not a periodic cell");
    return PeriodicEnvironment(spec.cell.period, spec.dimension, Provenance::ExplicitCell, spec.cell.edges);
}

double PeriodicEnvironment::conductance(const EdgeId& e) const {
    if (e.axis < 0 || e.axis >= dimension_) throw DomainError("PeriodicEnvironment: bad axis");
    Point z{};
    for (int i = 0; i < dimension_; ++i) z[i] = wrap(e.base[i], period_);
    return at(e.axis, z);
}

PeriodicEnvironment periodize_space(const BoxEnvironment& box) {
    const int d = box.dimension();
    const int n = box.side();
    const std::size_t sites = ipow(static_cast<std::size_t>(n), d);
    std::vector<double> cell(sites * d);
    for (int axis = 0; axis < d; ++axis)
        for (std::size_t s = 0; s < sites; ++s)
            cell[static_cast<std::size_t>(axis) * sites + s] = box.at(axis, point_from_index(s, n, d));
    return PeriodicEnvironment(n, d, Provenance::SpacePeriodized, std::move(cell));
}

PeriodicEnvironment sample_periodic_law(const EnvironmentSpec& spec, int side, std::uint64_t seed) {
    spec.validate();
    if (side < 1) throw ConfigError("sample_periodic_law: N must be >= 1");
    if (spec.structure == StructureKind::PeriodicCell)
        throw UnsupportedError("sample_periodic_law: a periodic cell has no hidden i.i.d. representation");
    const int d = spec.dimension;
    const std::size_t sites = ipow(static_cast<std::size_t>(side), d);

    // Hidden uniforms live on the torus: evaluate them at wrapped coordinates.
    auto torus_hidden = [&](const EdgeId& h) {
        EdgeId w = h;
        for (int i = 0; i < d; ++i) w.base[i] = wrap(h.base[i], side);
        return hidden_uniform(seed, w, d);
    };

    std::vector<double> cell(sites * d);
    for (int axis = 0; axis < d; ++axis) {
        for (std::size_t s = 0; s < sites; ++s) {
            const EdgeId e{point_from_index(s, side, d), axis};
            double w = 0.0;
            if (spec.structure == StructureKind::IID)
                w = spec.law.sample(torus_hidden(e));
            else
                w = islands_rule(spec.islands, d, e, torus_hidden, true);
            cell[static_cast<std::size_t>(axis) * sites + s] = w;
        }
    }
    return PeriodicEnvironment(side, d, Provenance::LawPeriodized, std::move(cell));
}

// ---------------------------------------------------------------------------
// LazyEnvironment

LazyEnvironment::LazyEnvironment(EnvironmentSpec spec, std::uint64_t seed) : spec_(std::move(spec)), seed_(seed) {
    spec_.validate();
}

void LazyEnvironment::reset(std::uint64_t seed) {
    seed_ = seed;
    edges_.clear();
    hidden_.clear();
}

double LazyEnvironment::hidden(const EdgeId& e) {
    const std::uint64_t key = edge_key(e, spec_.dimension);
    auto [it, inserted] = hidden_.try_emplace(key, 0.0);
    if (inserted) it->second = to_unit(derive_seed(seed_, key));
    return it->second;
}

double LazyEnvironment::generate(const EdgeId& e, std::uint64_t key) {
    switch (spec_.structure) {
        case StructureKind::IID: return spec_.law.sample(to_unit(derive_seed(seed_, key)));
        case StructureKind::Islands:
            // No early exit: the whole window is discovered.
            return islands_rule(
                spec_.islands, spec_.dimension, e, [&](const EdgeId& h) { return hidden(h); }, false);
        case StructureKind::PeriodicCell: return cell_value(spec_.cell, spec_.dimension, e);
    }
    return 0.0;
}

double LazyEnvironment::conductance(const EdgeId& e) {
    const std::uint64_t key = edge_key(e, spec_.dimension);
    if (auto it = edges_.find(key); it != edges_.end()) return it->second;
    const double w = generate(e, key);
    edges_.emplace(key, w);
    return w;
}

// ---------------------------------------------------------------------------

void write_csv(std::ostream& out, const BoxEnvironment& box) {
    const int d = box.dimension();
    const int n = box.side();
    for (int i = 0; i < d; ++i) out << "base_" << i << ',';
    out << "axis,value\n";
    const std::size_t per_axis = box.values().size() / d;
    for (int axis = 0; axis < d; ++axis) {
        for (std::size_t idx = 0; idx < per_axis; ++idx) {
            Point base{};
            std::size_t rest = idx;
            for (int i = 0; i < d; ++i) {
                const int radix = (i == axis) ? n + 1 : n;
                base[i] = static_cast<std::int32_t>(rest % radix) - (i == axis ? 1 : 0);
                rest /= radix;
            }
            for (int i = 0; i < d; ++i) out << base[i] << ',';
            char value[32];
            std::snprintf(value, sizeof value, "%.17g", box.at(axis, base));
            out << axis << ',' << value << '\n';
        }
    }
}

EnvironmentSpec default_asymmetric_cell() {
    // edges[axis * 9 + x + 3 y]; strong/weak bonds 10 and 1.
    PeriodicCellParams cell;
    cell.period = 3;
    cell.edges = {
        1, 10, 10, 10, 1, 10, 10, 1, 1,   // axis 0
        1, 10, 1,  10, 10, 10, 1, 10, 1,  // axis 1
    };
    return EnvironmentSpec::periodic_cell(2, std::move(cell));
}

}  // namespace homog
