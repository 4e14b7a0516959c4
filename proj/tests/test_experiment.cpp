#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "homog/config.hpp"
#include "homog/errors.hpp"
#include "homog/experiment.hpp"

using namespace homog;
namespace fs = std::filesystem;

namespace {

ExperimentConfig parse(const std::string& text) {
    std::istringstream in(text);
    return parse_config(in, "test.ini");
}

std::string config_error(const std::string& text) {
    try {
        parse(text);
    } catch (const ConfigError& e) {
        return e.what();
    }
    return "";
}

std::string results_csv(const ExperimentResult& r) {
    std::ostringstream out;
    write_results_csv(out, r);
    return out.str();
}

// Drop the trailing wall_time_s field of every line.
std::string without_timing(const std::string& csv) {
    std::istringstream in(csv);
    std::string line, out;
    while (std::getline(in, line)) out += line.substr(0, line.rfind(',')) + "\n";
    return out;
}

ExperimentConfig small_dirichlet() {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentSpec::iid(2, Law::bernoulli(1.0, 4.0, 0.5));
    cfg.method = ExperimentMethod::Dirichlet;
    cfg.sweep = {4, 6, 8};
    cfg.realizations.counts = {6};
    cfg.xi = {1.0, 0.0};
    cfg.seed = 11;
    return cfg;
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("a complete config parses") {
    const auto cfg = parse(R"(
# islands on the plane
[environment]
dimension = 2
structure = islands
radius = 2
low = 1
high = 4
marginal = 0.5   ; half the edges low

[experiment]
method = regularized
sweep = 10, 20, 40
k_scale = 100
k_anchor = 10
k_power = 2
xi = 0, 1
seed = 42
workers = 3
output = out/reg.csv
reference = surrogate:period-law

[regularized]
mask = flat
filter_fraction = 0.5
)");
    CHECK(cfg.environment.structure == StructureKind::Islands);
    CHECK(cfg.environment.islands.window_radius == 2);
    CHECK(islands_marginal(cfg.environment.islands, 2) == doctest::Approx(0.5));
    CHECK(cfg.method == ExperimentMethod::Regularized);
    CHECK(cfg.sweep == std::vector<std::int64_t>{10, 20, 40});
    CHECK(cfg.realizations.at(0, 10) == 100);
    CHECK(cfg.realizations.at(1, 20) == 25);
    CHECK(cfg.realizations.at(2, 40) == 6);
    CHECK(cfg.xi == std::vector<double>{0.0, 1.0});
    CHECK(cfg.seed == 42);
    CHECK(cfg.workers == 3);
    CHECK(cfg.output == "out/reg.csv");
    CHECK(cfg.reference.kind == ReferenceKind::Surrogate);
    CHECK(cfg.reference.surrogate == ExperimentMethod::PeriodLaw);
    CHECK(cfg.regularization.filter_fraction == 0.5);
}

TEST_CASE("config defaults") {
    const auto cfg = parse("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\n");
    CHECK(cfg.environment.dimension == 2);
    CHECK(cfg.environment.structure == StructureKind::IID);
    CHECK(cfg.xi == std::vector<double>{1.0, 0.0});
    CHECK(cfg.reference.kind == ReferenceKind::None);
    CHECK(cfg.workers == 1);
    CHECK(cfg.seed == 1);
}

TEST_CASE("walk configs pick up the functional") {
    const auto cfg = parse(
        "[environment]\nstructure = periodic-cell\ncell = asymmetric\n"
        "[experiment]\nmethod = rwre-functional\nsweep = 10, 20\nk = 100\nreference = exact:0\n"
        "[rwre]\nfunctional = sin\n");
    CHECK(cfg.method == ExperimentMethod::RwreFunctional);
    CHECK(cfg.environment.structure == StructureKind::PeriodicCell);
    CHECK(cfg.reference.kind == ReferenceKind::Exact);
}

TEST_CASE("config errors name the line") {
    CHECK(config_error("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nbogus = 1\n").find("test.ini:5:") == 0);
    CHECK(config_error("[experiment]\nmethod = dirichlet\nmethod = dirichlet\n").find("test.ini:3:") == 0);
    CHECK(config_error("[nonsense]\n").find("test.ini:1:") == 0);
    CHECK(config_error("[experiment]\nmethod = teleport\nsweep = 8\nk = 4\n").find("test.ini:2:") == 0);
    CHECK(config_error("[experiment]\nmethod = dirichlet\nsweep = 8, x\nk = 4\n").find("test.ini:3:") == 0);
    CHECK(config_error("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nreference = maybe\n").find("test.ini:5:") == 0);
    CHECK(config_error("just text\n").find("test.ini:1:") == 0);
    CHECK_FALSE(config_error("[experiment]\nsweep = 8\n").empty());
    // [rwre] is not read for a corrector method, so its keys are unused
    CHECK_FALSE(config_error("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\n[rwre]\nfunctional = sin\n").empty());
}

TEST_CASE("unsupported combinations fail validation") {
    CHECK_THROWS_AS(parse("[environment]\nstructure = periodic-cell\n"
                          "[experiment]\nmethod = period-law\nsweep = 8\nk = 4\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = rwre-msd\nsweep = 8\nk = 4\nreference = surrogate:period-law\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nreference = surrogate:dirichlet\n"),
                    ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8, 4\nk = 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nxi = 1\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nxi = 0, 0\n"), ConfigError);
    CHECK_THROWS_AS(parse("[experiment]\nmethod = dirichlet\nsweep = 8, 9\nk = 4, 4, 4\n"), ConfigError);
    CHECK_THROWS_AS(parse("[environment]\ndimension = 3\nstructure = periodic-cell\n"
                          "[experiment]\nmethod = dirichlet\nsweep = 8\nk = 4\nxi = 1, 0, 0\n"),
                    ConfigError);
    CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("method names round trip") {
    for (auto m : {ExperimentMethod::Dirichlet, ExperimentMethod::Regularized, ExperimentMethod::PeriodLaw,
                   ExperimentMethod::PeriodSpace, ExperimentMethod::RwreMsd, ExperimentMethod::RwreFunctional})
        CHECK(parse_method(to_string(m)) == m);
    CHECK_THROWS_AS(parse_method("dirichlet "), ConfigError);
}

TEST_CASE("constant environment gives exact error curves") {
    auto cfg = small_dirichlet();
    cfg.environment = EnvironmentSpec::iid(2, Law::constant(2.0));
    cfg.reference.kind = ReferenceKind::Exact;
    cfg.reference.value = 2.0;
    const auto r = run_experiment(cfg);
    REQUIRE(r.points.size() == 3);
    for (const auto& p : r.points) {
        CHECK(p.errors.mean == doctest::Approx(2.0).epsilon(1e-12));
        CHECK(p.errors.statistical_error < 1e-12);
        CHECK(p.errors.systematic_error < 1e-10);
    }
    // error curves that vanish cannot be fitted on log axes
    REQUIRE(r.fits.size() == 2);
    CHECK_FALSE(r.fits[0].fit.has_value());
    CHECK_FALSE(r.fits[0].note.empty());
}

TEST_CASE("five-point Dirichlet sweep has the expected table shape") {
    ExperimentConfig cfg;
    cfg.environment = EnvironmentSpec::iid(2, Law::bernoulli(1.0, 4.0, 0.5));
    cfg.method = ExperimentMethod::Dirichlet;
    cfg.sweep = {10, 20, 31, 56, 100};
    cfg.realizations.counts = {3};
    cfg.xi = {1.0, 0.0};
    cfg.reference.kind = ReferenceKind::Exact;
    cfg.reference.value = 2.0;
    const auto r = run_experiment(cfg);
    const std::string csv = results_csv(r);
    std::istringstream in(csv);
    std::string line;
    std::getline(in, line);
    CHECK(line == "method,d,point,k,mean,variance,std_error,stat_err,syst_err,reference,reference_kind,warnings,wall_time_s");
    int rows = 0;
    while (std::getline(in, line)) {
        ++rows;
        CHECK(std::count(line.begin(), line.end(), ',') == 12);
        CHECK(line.rfind("dirichlet,2,", 0) == 0);
    }
    CHECK(rows == 5);
    CHECK(r.realizations.size() == 15);
    REQUIRE(r.fits.size() == 2);
    CHECK(r.fits[0].curve == "stat");
    CHECK(r.fits[1].curve == "syst");
    CHECK(r.fits[0].fit.has_value());
    CHECK(r.fits[0].x.size() == 5);
}

TEST_CASE("threaded realizations match the serial reference") {
    auto cfg = small_dirichlet();
    cfg.workers = 4;
    for (auto m : {ExperimentMethod::Dirichlet, ExperimentMethod::PeriodLaw, ExperimentMethod::PeriodSpace}) {
        const auto a = run_realizations(cfg, m, 6, 7);
        const auto b = run_realizations_serial(cfg, m, 6, 7);
        REQUIRE(a.size() == 7);
        for (std::size_t i = 0; i < a.size(); ++i) {
            CHECK(a[i].index == static_cast<std::int64_t>(i));
            CHECK(a[i].seed == realization_seed(cfg.seed, 6, static_cast<std::int64_t>(i)));
            CHECK(a[i].value == b[i].value);
            CHECK(a[i].ok);
        }
    }
}

TEST_CASE("results do not depend on the worker count") {
    SUBCASE("corrector") {
        auto cfg = small_dirichlet();
        cfg.workers = 1;
        const auto a = results_csv(run_experiment(cfg));
        cfg.workers = 8;
        const auto b = results_csv(run_experiment(cfg));
        CHECK(without_timing(a) == without_timing(b));
    }
    SUBCASE("rwre-msd") {
        ExperimentConfig cfg;
        cfg.environment = EnvironmentSpec::iid(2, Law::bernoulli(1.0, 4.0, 0.5));
        cfg.method = ExperimentMethod::RwreMsd;
        cfg.sweep = {10, 40, 160};
        cfg.realizations.counts = {3000};
        cfg.xi = {1.0, 0.0};
        cfg.workers = 1;
        const auto a = results_csv(run_experiment(cfg));
        cfg.workers = 8;
        const auto b = results_csv(run_experiment(cfg));
        CHECK(without_timing(a) == without_timing(b));
    }
}

TEST_CASE("surrogate references share realization seeds") {
    auto cfg = small_dirichlet();
    cfg.reference.kind = ReferenceKind::Surrogate;
    cfg.reference.surrogate = ExperimentMethod::PeriodLaw;
    const auto r = run_experiment(cfg);
    for (const auto& p : r.points) {
        const auto law = run_realizations_serial(cfg, ExperimentMethod::PeriodLaw, p.point, 6);
        double mean = 0.0;
        for (const auto& rec : law) mean += rec.value / 6.0;
        CHECK(p.errors.reference.value == doctest::Approx(mean).epsilon(1e-14));
        CHECK(p.errors.reference.provenance == "period-law mean");
        CHECK(p.errors.systematic_error == doctest::Approx(std::abs(p.errors.mean - mean)));
    }
}

TEST_CASE("fit_results_csv reproduces the in-run fit") {
    auto cfg = small_dirichlet();
    cfg.sweep = {4, 6, 8, 12};
    cfg.reference.kind = ReferenceKind::Exact;
    cfg.reference.value = 1.5;
    const auto r = run_experiment(cfg);
    std::istringstream in(results_csv(r));
    const auto fits = fit_results_csv(in);
    REQUIRE(fits.size() == r.fits.size());
    for (std::size_t i = 0; i < fits.size(); ++i) {
        CHECK(fits[i].curve == r.fits[i].curve);
        REQUIRE(fits[i].fit.has_value() == r.fits[i].fit.has_value());
        if (fits[i].fit) CHECK(fits[i].fit->rate == doctest::Approx(r.fits[i].fit->rate).epsilon(1e-12));
    }
    std::istringstream empty("");
    CHECK_THROWS_AS(fit_results_csv(empty), ConfigError);
    std::istringstream bad("method,d,point\n");
    CHECK_THROWS_AS(fit_results_csv(bad), ConfigError);
}

TEST_CASE("fit report format") {
    const auto good = fit_curve("stat", {1, 2, 4}, {4, 2, 1});
    const auto bad = fit_curve("syst", {1, 2}, {1, 0});
    std::ostringstream out;
    write_fit_report(out, {good, bad});
    const std::string s = out.str();
    CHECK(s.rfind("curve,x,y,fitted_y\n", 0) == 0);
    CHECK(s.find("# curve=stat rate=1 ") != std::string::npos);
    CHECK(s.find("# curve=syst skipped: ") != std::string::npos);
}

TEST_CASE("write_outputs creates the companion files") {
    const fs::path dir = fs::temp_directory_path() / "homog_test_outputs";
    fs::remove_all(dir);
    auto cfg = small_dirichlet();
    cfg.output = (dir / "nested" / "run.csv").string();
    write_outputs(cfg, run_experiment(cfg));
    CHECK(fs::exists(dir / "nested" / "run.csv"));
    CHECK(fs::exists(dir / "nested" / "run.fit.csv"));
    CHECK(fs::exists(dir / "nested" / "run.realizations.csv"));
    std::ifstream rz(dir / "nested" / "run.realizations.csv");
    std::string header;
    std::getline(rz, header);
    CHECK(header == "point,index,seed,status,value,iterations,residual");
    fs::remove_all(dir);
}

TEST_CASE("shipped configs parse") {
    int seen = 0;
    for (const auto& entry : fs::directory_iterator(HOMOG_CONFIG_DIR)) {
        if (entry.path().extension() != ".ini") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(load_config(entry.path().string()));
        ++seen;
    }
    CHECK(seen >= 5);
}

}  // TEST_SUITE
