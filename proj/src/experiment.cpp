#include "homog/experiment.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <filesystem>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>

#include <omp.h>

#include "homog/errors.hpp"

namespace homog {

namespace {

struct MethodName {
    ExperimentMethod method;
    const char* name;
};

constexpr MethodName kMethodNames[] = {
    {ExperimentMethod::Dirichlet, "dirichlet"},       {ExperimentMethod::Regularized, "regularized"},
    {ExperimentMethod::PeriodLaw, "period-law"},      {ExperimentMethod::PeriodSpace, "period-space"},
    {ExperimentMethod::RwreMsd, "rwre-msd"},          {ExperimentMethod::RwreFunctional, "rwre-functional"},
};

std::string format_double(double v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

}  // namespace

std::string to_string(ExperimentMethod m) {
    for (const auto& entry : kMethodNames)
        if (entry.method == m) return entry.name;
    return "unknown";
}

ExperimentMethod parse_method(const std::string& name) {
    for (const auto& entry : kMethodNames)
        if (name == entry.name) return entry.method;
    throw ConfigError("unknown method '" + name + "'");
}

std::int64_t RealizationRule::at(std::size_t index, std::int64_t point) const {
    if (!counts.empty()) return counts.size() == 1 ? counts[0] : counts.at(index);
    const double k = std::round(scale * std::pow(anchor / static_cast<double>(point), power));
    return k < 1.0 ? 1 : static_cast<std::int64_t>(k);
}

void ExperimentConfig::validate() const {
    environment.validate();
    const int d = environment.dimension;
    if (sweep.empty()) throw ConfigError("sweep is empty");
    for (std::size_t i = 0; i < sweep.size(); ++i) {
        if (i > 0 && sweep[i] <= sweep[i - 1]) throw ConfigError("sweep must be strictly increasing");
    }
    if (is_walk_method(method)) {
        if (sweep.front() < 1) throw ConfigError("walk lengths must be >= 1");
    } else {
        const std::int64_t min_side = method == ExperimentMethod::Regularized ? 2 : 1;
        if (sweep.front() < min_side) throw ConfigError("box sides are too small for " + to_string(method));
        if (sweep.back() > (std::int64_t{1} << 20)) throw ConfigError("box side too large");
    }

    if (realizations.counts.empty()) {
        if (!(realizations.scale > 0.0) || !(realizations.anchor > 0.0))
            throw ConfigError("realization rule needs k_scale > 0 and k_anchor > 0");
    } else {
        if (realizations.counts.size() != 1 && realizations.counts.size() != sweep.size())
            throw ConfigError("k must list one value or one value per sweep point");
        for (auto k : realizations.counts)
            if (k < 1) throw ConfigError("k must be >= 1");
    }
    const std::int64_t min_k = is_walk_method(method) ? 1 : 2;
    for (std::size_t i = 0; i < sweep.size(); ++i)
        if (realizations.at(i, sweep[i]) < min_k)
            throw ConfigError("need at least two realizations per point for an error decomposition");

    if (static_cast<int>(xi.size()) != d) throw ConfigError("xi must have one entry per dimension");
    double norm = 0.0;
    for (double v : xi) norm += v * v;
    if (!(norm > 0.0)) throw ConfigError("xi must be nonzero");

    if (workers < 1) throw ConfigError("workers must be >= 1");
    if (!(solver.tol > 0.0)) throw ConfigError("tol must be positive");
    if (solver.max_iter < 0) throw ConfigError("max_iter must be >= 0");

    const bool cell = environment.structure == StructureKind::PeriodicCell;
    if (cell && method == ExperimentMethod::PeriodLaw)
        throw ConfigError("period-law needs hidden i.i.d. variables; a periodic-cell environment has none");

    if (method == ExperimentMethod::Regularized) {
        const auto& r = regularization;
        if (!(r.filter_fraction > 0.0) || r.filter_fraction > 1.0) throw ConfigError("filter_fraction must be in (0, 1]");
        if (!(r.mu_prefactor > 0.0)) throw ConfigError("mu_prefactor must be positive");
        if (!(r.plateau >= 0.0) || r.plateau >= 1.0) throw ConfigError("plateau must be in [0, 1)");
        for (auto n : sweep)
            if (r.filter_side(static_cast<int>(n)) < 1) throw ConfigError("filter side rounds to zero");
    }
    if (method == ExperimentMethod::RwreFunctional) {
        const bool needs_xi = functional.kind == FunctionalKind::Indicator ||
                              functional.kind == FunctionalKind::SquareDisplacement;
        if (needs_xi && static_cast<int>(functional.xi.size()) != d)
            throw ConfigError("functional xi has the wrong dimension");
    }

    if (reference.kind == ReferenceKind::Surrogate) {
        if (is_walk_method(method)) throw ConfigError("surrogate references apply to corrector methods only");
        if (is_walk_method(reference.surrogate)) throw ConfigError("surrogate method must be a corrector method");
        if (reference.surrogate == method) throw ConfigError("surrogate method must differ from the method");
        if (cell && reference.surrogate == ExperimentMethod::PeriodLaw)
            throw ConfigError("period-law surrogate is unsupported for a periodic-cell environment");
    }
}

// ---------------------------------------------------------------------------

EstimateSample corrector_realization(const ExperimentConfig& cfg, ExperimentMethod method, int side,
                                     std::uint64_t seed) {
    const auto& spec = cfg.environment;
    switch (method) {
        case ExperimentMethod::Dirichlet: {
            const BoxEnvironment box = sample_box(spec, side, seed);
            auto s = estimate_dirichlet(box, cfg.xi, cfg.solver);
            s.seed = seed;
            return s;
        }
        case ExperimentMethod::Regularized: {
            const auto& r = cfg.regularization;
            const int filter = r.filter_side(side);
            const Mask mask = make_mask(side, filter, spec.dimension, r.mask, r.plateau);
            const BoxEnvironment box = sample_box(spec, side, seed);
            auto s = estimate_regularized(box, filter, r.mu(side), mask, cfg.xi, cfg.solver);
            s.seed = seed;
            return s;
        }
        case ExperimentMethod::PeriodLaw: {
            auto s = estimate_periodic(sample_periodic_law(spec, side, seed), cfg.xi, cfg.solver);
            s.seed = seed;
            return s;
        }
        case ExperimentMethod::PeriodSpace: {
            auto s = estimate_periodic(periodize_space(sample_box(spec, side, seed)), cfg.xi, cfg.solver);
            s.seed = seed;
            return s;
        }
        default: break;
    }
    throw ConfigError("corrector_realization: " + to_string(method) + " is not a corrector method");
}

namespace {

RealizationRecord one_realization(const ExperimentConfig& cfg, ExperimentMethod method, std::int64_t point,
                                  std::int64_t index) {
    RealizationRecord rec;
    rec.point = point;
    rec.index = index;
    rec.seed = realization_seed(cfg.seed, point, index);
    try {
        const EstimateSample s = corrector_realization(cfg, method, static_cast<int>(point), rec.seed);
        rec.ok = true;
        rec.value = s.value;
        rec.stats = s.stats;
    } catch (const SolverError& e) {
        rec.ok = false;
        rec.stats = {e.iterations(), e.residual()};
        rec.message = e.what();
    }
    return rec;
}

}  // namespace

std::vector<RealizationRecord> run_realizations(const ExperimentConfig& cfg, ExperimentMethod method,
                                                std::int64_t point, std::int64_t k) {
    std::vector<RealizationRecord> records(static_cast<std::size_t>(k));
    std::vector<std::exception_ptr> fatal(static_cast<std::size_t>(k));
#pragma omp parallel for schedule(dynamic, 1) num_threads(cfg.workers)
    for (std::int64_t i = 0; i < k; ++i) {
        try {
            records[i] = one_realization(cfg, method, point, i);
        } catch (...) {
            fatal[i] = std::current_exception();
        }
    }
    for (const auto& e : fatal)
        if (e) std::rethrow_exception(e);
    return records;
}

std::vector<RealizationRecord> run_realizations_serial(const ExperimentConfig& cfg, ExperimentMethod method,
                                                       std::int64_t point, std::int64_t k) {
    std::vector<RealizationRecord> records;
    records.reserve(static_cast<std::size_t>(k));
    for (std::int64_t i = 0; i < k; ++i) records.push_back(one_realization(cfg, method, point, i));
    return records;
}

// ---------------------------------------------------------------------------

namespace {

struct Reduced {
    Partial stats;
    std::int64_t failures = 0;
};

Reduced reduce(const std::vector<RealizationRecord>& records) {
    std::vector<Partial> singles;
    singles.reserve(records.size());
    Reduced out;
    for (const auto& r : records) {
        if (r.ok)
            singles.push_back(Partial::of(r.value));
        else
            ++out.failures;
    }
    out.stats = aggregate(singles);
    return out;
}

ErrorDecomposition decomposition_from(const Partial& p, const Reference& ref) {
    if (p.count < 2)
        throw InsufficientDataError("fewer than two successful realizations at a sweep point");
    ErrorDecomposition e;
    e.count = p.count;
    e.mean = p.mean();
    e.variance = p.variance();
    e.statistical_error = std::sqrt(e.variance);
    e.ci_halfwidth = kCiZ * std::sqrt(e.variance / static_cast<double>(p.count));
    e.reference = ref;
    e.systematic_error = ref.kind == ReferenceKind::None ? 0.0 : std::abs(e.mean - ref.value);
    return e;
}

Functional walk_functional(const ExperimentConfig& cfg) {
    if (cfg.method == ExperimentMethod::RwreMsd) return Functional::square_displacement(cfg.xi);
    return cfg.functional;
}

}  // namespace

CurveFit fit_curve(std::string name, std::vector<double> x, std::vector<double> y,
                   const std::vector<double>& weights) {
    CurveFit c;
    c.curve = std::move(name);
    c.x = std::move(x);
    c.y = std::move(y);
    if (c.x.size() < 3) {
        c.note = "fewer than three points";
        return c;
    }
    for (double v : c.y) {
        if (!(v > 0.0)) {
            c.note = "nonpositive error value";
            return c;
        }
    }
    c.fit = fit_rate(c.x, c.y, weights);
    return c;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
    cfg.validate();
    ExperimentResult result;
    using clock = std::chrono::steady_clock;

    for (std::size_t i = 0; i < cfg.sweep.size(); ++i) {
        const std::int64_t point = cfg.sweep[i];
        const std::int64_t k = cfg.realizations.at(i, point);
        const auto start = clock::now();

        PointResult pr;
        pr.method = to_string(cfg.method);
        pr.dimension = cfg.environment.dimension;
        pr.point = point;
        pr.requested = k;

        if (is_walk_method(cfg.method)) {
            const std::uint64_t seed = derive_seed(cfg.seed, static_cast<std::uint64_t>(point));
            const McEstimate est =
                estimate_functional(cfg.environment, k, point, walk_functional(cfg), seed, cfg.workers);
            Reference ref = cfg.reference.kind == ReferenceKind::Exact ? Reference::exact(cfg.reference.value)
                                                                       : Reference::none();
            ErrorDecomposition e;
            e.count = est.walks;
            e.mean = est.value;
            e.variance = est.sample_variance;
            e.statistical_error = std::sqrt(est.sample_variance);
            e.ci_halfwidth = kCiZ * est.std_error;
            e.reference = ref;
            e.systematic_error = ref.kind == ReferenceKind::None ? 0.0 : std::abs(est.value - ref.value);
            pr.errors = e;
            pr.std_error = est.std_error;
            pr.walks = est;
        } else {
            auto records = run_realizations(cfg, cfg.method, point, k);
            const Reduced main = reduce(records);
            Reference ref = Reference::none();
            if (cfg.reference.kind == ReferenceKind::Exact) {
                ref = Reference::exact(cfg.reference.value);
            } else if (cfg.reference.kind == ReferenceKind::Surrogate) {
                // Same realization seeds as the main method: the two estimators
                // see the same hidden variables, which damps the noise in their difference.
                auto surrogate = run_realizations(cfg, cfg.reference.surrogate, point, k);
                const Reduced s = reduce(surrogate);
                if (s.stats.count < 1) throw InsufficientDataError("surrogate reference has no successful realization");
                ref = Reference::surrogate(s.stats.mean(), to_string(cfg.reference.surrogate) + " mean");
                pr.warnings += s.failures;
            }
            pr.errors = decomposition_from(main.stats, ref);
            pr.std_error = std::sqrt(pr.errors.variance / static_cast<double>(main.stats.count));
            pr.warnings += main.failures;
            result.realizations.insert(result.realizations.end(), records.begin(), records.end());
        }
        pr.wall_time_s = std::chrono::duration<double>(clock::now() - start).count();
        result.points.push_back(std::move(pr));
    }

    if (result.points.size() >= 3) {
        std::vector<double> x, stat, syst, w;
        for (const auto& p : result.points) {
            x.push_back(static_cast<double>(p.point));
            stat.push_back(p.errors.statistical_error);
            syst.push_back(p.errors.systematic_error);
            w.push_back(static_cast<double>(p.errors.count));
        }
        const std::vector<double> weights = cfg.weighted_fit ? w : std::vector<double>{};
        result.fits.push_back(fit_curve("stat", x, stat, weights));
        if (cfg.reference.kind != ReferenceKind::None) result.fits.push_back(fit_curve("syst", x, syst, weights));
    }
    return result;
}

// ---------------------------------------------------------------------------

void write_results_csv(std::ostream& out, const ExperimentResult& result) {
    out << "method,d,point,k,mean,variance,std_error,stat_err,syst_err,reference,reference_kind,warnings,wall_time_s\n";
    for (const auto& p : result.points) {
        const auto& e = p.errors;
        const bool has_ref = e.reference.kind != ReferenceKind::None;
        char wall[32];
        std::snprintf(wall, sizeof wall, "%.6f", p.wall_time_s);
        out << p.method << ',' << p.dimension << ',' << p.point << ',' << e.count << ',' << format_double(e.mean)
            << ',' << format_double(e.variance) << ',' << format_double(p.std_error) << ','
            << format_double(e.statistical_error) << ',' << (has_ref ? format_double(e.systematic_error) : "")
            << ',' << (has_ref ? format_double(e.reference.value) : "") << ',' << to_string(e.reference.kind) << ','
            << p.warnings << ',' << wall << '\n';
    }
}

void write_realizations_csv(std::ostream& out, const ExperimentResult& result) {
    out << "point,index,seed,status,value,iterations,residual\n";
    for (const auto& r : result.realizations) {
        out << r.point << ',' << r.index << ',' << r.seed << ',' << (r.ok ? "ok" : "solver-failure") << ','
            << (r.ok ? format_double(r.value) : "") << ',' << r.stats.iterations << ','
            << format_double(r.stats.residual) << '\n';
    }
}

void write_walks_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result) {
    write_mc_header(out);
    const std::string name = cfg.method == ExperimentMethod::RwreMsd ? "rwre-msd" : "rwre-" + cfg.functional.name();
    for (const auto& p : result.points) {
        if (!p.walks) continue;
        write_mc_row(out, name, cfg.environment.dimension, derive_seed(cfg.seed, static_cast<std::uint64_t>(p.point)),
                     *p.walks);
    }
}

void write_fit_report(std::ostream& out, const std::vector<CurveFit>& fits) {
    out << "curve,x,y,fitted_y\n";
    for (const auto& c : fits) {
        for (std::size_t i = 0; i < c.x.size(); ++i) {
            out << c.curve << ',' << format_double(c.x[i]) << ',' << format_double(c.y[i]) << ','
                << (c.fit ? format_double(c.fit->fitted(c.x[i])) : "") << '\n';
        }
    }
    for (const auto& c : fits) {
        if (c.fit) {
            char buf[256];
            std::snprintf(buf, sizeof buf, "# curve=%s rate=%.6g prefactor=%.6g residual_rms=%.3g points=%d\n",
                          c.curve.c_str(), c.fit->rate, c.fit->prefactor, c.fit->residual_rms, c.fit->points_used);
            out << buf;
        } else {
            out << "# curve=" << c.curve << " skipped: " << c.note << '\n';
        }
    }
}

namespace {

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char ch : line) {
        if (ch == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (ch != '\r') {
            cur += ch;
        }
    }
    fields.push_back(cur);
    return fields;
}

double parse_field(const std::string& s, int line) {
    try {
        std::size_t used = 0;
        const double v = std::stod(s, &used);
        if (used != s.size()) throw std::invalid_argument(s);
        return v;
    } catch (const std::exception&) {
        throw ConfigError("results line " + std::to_string(line) + ": not a number: '" + s + "'");
    }
}

}  // namespace

std::vector<CurveFit> fit_results_csv(std::istream& in, bool weighted) {
    std::string line;
    if (!std::getline(in, line)) throw ConfigError("results file is empty");
    const auto header = split_csv_line(line);
    auto column = [&](const std::string& name) -> std::size_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (header[i] == name) return i;
        throw ConfigError("results file has no '" + name + "' column");
    };
    const std::size_t c_point = column("point"), c_k = column("k"), c_stat = column("stat_err"),
                      c_syst = column("syst_err"), c_kind = column("reference_kind");

    std::vector<double> x, stat, syst, w;
    bool with_reference = true;
    int lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty() || line[0] == '#') continue;
        const auto f = split_csv_line(line);
        if (f.size() != header.size())
            throw ConfigError("results line " + std::to_string(lineno) + ": wrong number of fields");
        x.push_back(parse_field(f[c_point], lineno));
        w.push_back(parse_field(f[c_k], lineno));
        stat.push_back(parse_field(f[c_stat], lineno));
        if (f[c_kind] == "none" || f[c_syst].empty())
            with_reference = false;
        else
            syst.push_back(parse_field(f[c_syst], lineno));
    }
    const std::vector<double> weights = weighted ? w : std::vector<double>{};
    std::vector<CurveFit> fits;
    fits.push_back(fit_curve("stat", x, stat, weights));
    if (with_reference) fits.push_back(fit_curve("syst", x, syst, weights));
    return fits;
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result) {
    namespace fs = std::filesystem;
    const fs::path path(cfg.output);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    auto companion = [&](const std::string& suffix) {
        return path.parent_path() / (path.stem().string() + suffix);
    };
    auto open = [](const fs::path& p) {
        std::ofstream out(p, std::ios::binary);
        if (!out) throw Error("cannot write " + p.string());
        return out;
    };

    {
        auto out = open(path);
        write_results_csv(out, result);
    }
    if (!result.fits.empty()) {
        auto out = open(companion(".fit.csv"));
        write_fit_report(out, result.fits);
    }
    if (is_walk_method(cfg.method)) {
        auto out = open(companion(".walks.csv"));
        write_walks_csv(out, cfg, result);
    } else {
        auto out = open(companion(".realizations.csv"));
        write_realizations_csv(out, result);
    }
}

}  // namespace homog
