#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "homog/analysis.hpp"
#include "homog/corrector.hpp"
#include "homog/environment.hpp"
#include "homog/rwre.hpp"

namespace homog {

enum class ExperimentMethod { Dirichlet, Regularized, PeriodLaw, PeriodSpace, RwreMsd, RwreFunctional };

std::string to_string(ExperimentMethod m);
/// ConfigError on an unknown name.
ExperimentMethod parse_method(const std::string& name);

inline bool is_walk_method(ExperimentMethod m) {
    return m == ExperimentMethod::RwreMsd || m == ExperimentMethod::RwreFunctional;
}

/// Realizations per sweep point: either an explicit list (one entry, or one
/// per point) or the rule round(scale * (anchor / point)^power), at least 1.
struct RealizationRule {
    std::vector<std::int64_t> counts;
    double scale = 0.0;
    double anchor = 1.0;
    double power = 0.0;

    std::int64_t at(std::size_t index, std::int64_t point) const;
};

struct ReferenceSpec {
    ReferenceKind kind = ReferenceKind::None;
    double value = 0.0;                     // exact
    ExperimentMethod surrogate = ExperimentMethod::PeriodLaw;
};

struct ExperimentConfig {
    EnvironmentSpec environment;
    ExperimentMethod method = ExperimentMethod::Dirichlet;
    /// Box sides N for corrector methods, walk lengths n for walk methods.
    std::vector<std::int64_t> sweep;
    RealizationRule realizations;
    std::vector<double> xi;
    RegularizationSchedule regularization;
    Functional functional = Functional::gaussian();
    ReferenceSpec reference;
    std::uint64_t seed = 1;
    int workers = 1;
    std::string output = "results.csv";
    SolverOptions solver;
    bool weighted_fit = false;

    /// ConfigError on anything the run could not honour, including method and
    /// environment combinations that are not supported.
    void validate() const;
};

struct PointResult {
    std::string method;
    int dimension = 0;
    std::int64_t point = 0;
    std::int64_t requested = 0;
    ErrorDecomposition errors;
    double std_error = 0.0;
    std::int64_t warnings = 0;
    double wall_time_s = 0.0;
    /// Walk methods only.
    std::optional<McEstimate> walks;
};

/// Per-realization record of a corrector run.
struct RealizationRecord {
    std::int64_t point = 0;
    std::int64_t index = 0;
    std::uint64_t seed = 0;
    bool ok = false;
    double value = 0.0;
    SolveStats stats;
    std::string message;
};

struct CurveFit {
    std::string curve;  // "stat" or "syst"
    std::vector<double> x;
    std::vector<double> y;
    /// Empty when the curve could not be fitted; `note` says why.
    std::optional<RateFit> fit;
    std::string note;
};

/// Fit one error curve; never throws on degenerate data (zero errors from a
/// constant environment, too few points) but leaves `fit` empty instead.
CurveFit fit_curve(std::string name, std::vector<double> x, std::vector<double> y,
                   const std::vector<double>& weights = {});

struct ExperimentResult {
    std::vector<PointResult> points;
    std::vector<RealizationRecord> realizations;
    std::vector<CurveFit> fits;
};

/// Seed of realization `index` at sweep point `point`.
inline std::uint64_t realization_seed(std::uint64_t master, std::int64_t point, std::int64_t index) {
    return derive_seed(derive_seed(master, static_cast<std::uint64_t>(point)), static_cast<std::uint64_t>(index));
}

/// One corrector realization of `method` (not a walk method) at side N.
EstimateSample corrector_realization(const ExperimentConfig& cfg, ExperimentMethod method, int side,
                                     std::uint64_t seed);

/// k corrector realizations at one point, spread over cfg.workers OpenMP
/// threads. record[i] always belongs to realization i.
std::vector<RealizationRecord> run_realizations(const ExperimentConfig& cfg, ExperimentMethod method,
                                                std::int64_t point, std::int64_t k);

/// Single-threaded reference for run_realizations.
std::vector<RealizationRecord> run_realizations_serial(const ExperimentConfig& cfg, ExperimentMethod method,
                                                       std::int64_t point, std::int64_t k);

/// Full sweep: realizations, aggregation, references and rate fits.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// method,d,point,k,mean,variance,std_error,stat_err,syst_err,reference,reference_kind,warnings,wall_time_s
void write_results_csv(std::ostream& out, const ExperimentResult& result);
void write_realizations_csv(std::ostream& out, const ExperimentResult& result);
void write_walks_csv(std::ostream& out, const ExperimentConfig& cfg, const ExperimentResult& result);
/// curve,x,y,fitted_y rows followed by one "# curve=... rate=..." summary line per curve.
void write_fit_report(std::ostream& out, const std::vector<CurveFit>& fits);

/// Fits of the stat_err (and, where a reference is present, syst_err) columns
/// of a results CSV written by write_results_csv.
std::vector<CurveFit> fit_results_csv(std::istream& in, bool weighted = false);

/// Writes the results file and its companions next to cfg.output.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

}  // namespace homog
