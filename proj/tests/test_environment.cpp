#include <doctest.h>

#include <cmath>
#include <set>
#include <sstream>
#include <string>

#include "homog/environment.hpp"
#include "homog/errors.hpp"
#include "homog/rng.hpp"

using namespace homog;

namespace {

EnvironmentSpec bernoulli14() { return EnvironmentSpec::iid(2, Law::bernoulli(1.0, 4.0, 0.5)); }

EnvironmentSpec islands14() {
    IslandsParams p;
    p.window_radius = 2;
    p.hidden_threshold = islands_threshold(0.5, 2, 2);
    p.low = 1.0;
    p.high = 4.0;
    return EnvironmentSpec::islands_model(2, p);
}

Point at(int x, int y) {
    Point p{};
    p[0] = x;
    p[1] = y;
    return p;
}

// Pearson statistic for a 2 x m contingency table.
double two_sample_chi2(const std::vector<double>& a, const std::vector<double>& b) {
    double na = 0, nb = 0;
    for (double v : a) na += v;
    for (double v : b) nb += v;
    double chi2 = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double col = a[j] + b[j];
        if (col == 0) continue;
        const double ea = col * na / (na + nb), eb = col * nb / (na + nb);
        chi2 += (a[j] - ea) * (a[j] - ea) / ea + (b[j] - eb) * (b[j] - eb) / eb;
    }
    return chi2;
}

}  // namespace

TEST_SUITE("environment") {

TEST_CASE("law moments") {
    const Law b = Law::bernoulli(1.0, 4.0, 0.5);
    CHECK(b.mean() == doctest::Approx(2.5));
    CHECK(b.variance() == doctest::Approx(2.25));
    CHECK(b.harmonic_mean() == doctest::Approx(1.6));

    const Law u = Law::uniform(1.0, 3.0);
    CHECK(u.mean() == doctest::Approx(2.0));
    CHECK(u.variance() == doctest::Approx(4.0 / 12.0));
    CHECK(u.harmonic_mean() == doctest::Approx(2.0 / std::log(3.0)));

    const Law d = Law::discrete({1.0, 2.0, 4.0}, {1.0, 1.0, 2.0});
    CHECK(d.mean() == doctest::Approx(0.25 + 0.5 + 2.0));
    CHECK(d.min() == 1.0);
    CHECK(d.max() == 4.0);
}

TEST_CASE("invalid laws are configuration errors") {
    CHECK_THROWS_AS(Law::bernoulli(4.0, 1.0, 0.5), ConfigError);
    CHECK_THROWS_AS(Law::bernoulli(1.0, 4.0, 1.5), ConfigError);
    CHECK_THROWS_AS(Law::bernoulli(0.0, 4.0, 0.5), ConfigError);
    CHECK_THROWS_AS(Law::uniform(2.0, 1.0), ConfigError);
    CHECK_THROWS_AS(Law::discrete({1.0}, {}), ConfigError);
    CHECK_THROWS_AS(Law::discrete({1.0, 2.0}, {-1.0, 2.0}), ConfigError);

    IslandsParams p;
    p.hidden_threshold = 1.5;
    CHECK_THROWS_AS(EnvironmentSpec::islands_model(2, p).validate(), ConfigError);
    CHECK_THROWS_AS(EnvironmentSpec::iid(0, Law::constant(1.0)).validate(), ConfigError);
    CHECK_THROWS_AS(EnvironmentSpec::periodic_cell(2, {3, {1.0, 2.0}}).validate(), ConfigError);
}

TEST_CASE("uniform law samples stay in range") {
    const auto spec = EnvironmentSpec::iid(2, Law::uniform(0.5, 2.0));
    const auto box = sample_box(spec, 6, 3);
    for (double v : box.values()) {
        CHECK(v >= 0.5);
        CHECK(v <= 2.0);
    }
}

TEST_CASE("Bernoulli(1,4,1/2) box: values and fraction of ones") {
    std::size_t ones = 0, total = 0;
    for (std::uint64_t seed = 0; total < 100000; ++seed) {
        const auto box = sample_box(bernoulli14(), 8, seed);
        for (double v : box.values()) {
            REQUIRE((v == 1.0 || v == 4.0));
            ones += v == 1.0;
            ++total;
        }
    }
    CHECK(std::abs(static_cast<double>(ones) / total - 0.5) <= 0.01);
}

TEST_CASE("degenerate Bernoulli gives a constant box") {
    const auto spec = EnvironmentSpec::iid(3, Law::bernoulli(2.5, 2.5, 0.3));
    const auto box = sample_box(spec, 4, 11);
    for (double v : box.values()) CHECK(v == 2.5);
}

TEST_CASE("islands marginal") {
    const auto spec = islands14();
    CHECK(islands_marginal(spec.islands, 2) == doctest::Approx(0.5));
    CHECK(std::pow(spec.islands.hidden_threshold, 25) == doctest::Approx(0.5));
    // Edges 10 apart along axis 0 have disjoint 5x5 windows, hence are independent.
    std::size_t low = 0;
    const int n = 100000;
    for (int i = 0; i < n; ++i) {
        const double v = sample_edge(spec, static_cast<std::uint64_t>(i / 1000), EdgeId{at(10 * (i % 1000), 0), 0});
        REQUIRE((v == 1.0 || v == 4.0));
        low += v == 1.0;
    }
    CHECK(std::abs(static_cast<double>(low) / n - 0.5) <= 0.01);
}

TEST_CASE("islands window reads hidden variables of parallel edges") {
    const auto spec = islands14();
    LazyEnvironment env(spec, 5);
    env.conductance(EdgeId{at(0, 0), 1});
    CHECK(env.discovered_hidden() == 25);
    // The neighbouring parallel edge shares a 5x4 block of its window.
    env.conductance(EdgeId{at(1, 0), 1});
    CHECK(env.discovered_hidden() == 30);
    // An edge on the other axis uses a different family of hidden variables.
    env.conductance(EdgeId{at(0, 0), 0});
    CHECK(env.discovered_hidden() == 55);
    CHECK(env.discovered_edges() == 3);
}

TEST_CASE("box environment is reproducible and bounded") {
    for (const auto& spec : {bernoulli14(), islands14()}) {
        const auto a = sample_box(spec, 7, 42);
        const auto b = sample_box(spec, 7, 42);
        const auto c = sample_box(spec, 7, 43);
        REQUIRE(a.values().size() == b.values().size());
        bool differs = false;
        for (std::size_t i = 0; i < a.values().size(); ++i) {
            CHECK(a.values()[i] == b.values()[i]);
            CHECK(a.values()[i] >= spec.alpha());
            CHECK(a.values()[i] <= spec.beta());
            differs |= a.values()[i] != c.values()[i];
        }
        CHECK(differs);
    }
}

TEST_CASE("box environment rejects edges that miss Q_N") {
    const auto box = sample_box(bernoulli14(), 4, 1);
    CHECK_NOTHROW(box.conductance(EdgeId{at(-1, 0), 0}));  // enters the box from the left
    CHECK_NOTHROW(box.conductance(EdgeId{at(3, 3), 1}));    // leaves through the top
    CHECK_THROWS_AS(box.conductance(EdgeId{at(-1, 0), 1}), DomainError);
    CHECK_THROWS_AS(box.conductance(EdgeId{at(4, 0), 0}), DomainError);
    CHECK_THROWS_AS(box.conductance(EdgeId{at(0, -2), 1}), DomainError);
}

TEST_CASE("box, lazy and stateless rule agree on every edge") {
    for (const auto& spec : {bernoulli14(), islands14()}) {
        const std::uint64_t seed = 99;
        const auto box = sample_box(spec, 6, seed);
        LazyEnvironment lazy(spec, seed);
        for (int axis = 0; axis < 2; ++axis)
            for (int x = (axis == 0 ? -1 : 0); x < 6; ++x)
                for (int y = (axis == 1 ? -1 : 0); y < 6; ++y) {
                    const EdgeId e{at(x, y), axis};
                    CHECK(box.conductance(e) == lazy.conductance(e));
                    CHECK(box.conductance(e) == sample_edge(spec, seed, e));
                }
    }
}

TEST_CASE("lazy memoization") {
    LazyEnvironment env(bernoulli14(), 17);
    const EdgeId e{at(3, -2), 1};
    const double v = env.conductance(e);
    CHECK(env.conductance(e) == v);
    CHECK(env.discovered_edges() == 1);
    env.reset(18);
    CHECK(env.discovered_edges() == 0);
}

TEST_CASE("lazy first-access mean") {
    LazyEnvironment env(bernoulli14(), 2024);
    double sum = 0.0;
    const int n = 10000;
    for (int i = 0; i < n; ++i) sum += env.conductance(EdgeId{at(i % 100, i / 100), i % 2});
    CHECK(env.discovered_edges() == static_cast<std::size_t>(n));
    // sd of the mean is 1.5 / 100 = 0.015
    CHECK(std::abs(sum / n - 2.5) <= 0.05);
}

TEST_CASE("lazy and box joint laws match on a pair of neighbouring island edges") {
    // Independent seeds on each side, so this is a genuine two-sample test.
    const auto spec = islands14();
    const EdgeId e1{at(2, 2), 0}, e2{at(2, 3), 0};
    std::vector<double> lazy_counts(4, 0.0), box_counts(4, 0.0);
    LazyEnvironment lazy(spec, 0);
    for (std::uint64_t s = 0; s < 10000; ++s) {
        lazy.reset(derive_seed(1, s));
        lazy_counts[(lazy.conductance(e1) == 1.0) * 2 + (lazy.conductance(e2) == 1.0)] += 1;
        const auto box = sample_box(spec, 5, derive_seed(2, s));
        box_counts[(box.conductance(e1) == 1.0) * 2 + (box.conductance(e2) == 1.0)] += 1;
    }
    // Strong correlation is expected: both are low together far more often than 1/4.
    CHECK(lazy_counts[3] / 10000 > 0.35);
    // chi-square, 3 degrees of freedom, 1% critical value 11.345
    CHECK(two_sample_chi2(lazy_counts, box_counts) < 11.345);
}

TEST_CASE("periodic environment is periodic") {
    const auto per = sample_periodic_law(bernoulli14(), 5, 8);
    for (int axis = 0; axis < 2; ++axis)
        for (int x = 0; x < 5; ++x)
            for (int y = 0; y < 5; ++y) {
                const double v = per.conductance(EdgeId{at(x, y), axis});
                CHECK(per.conductance(EdgeId{at(x + 5, y), axis}) == v);
                CHECK(per.conductance(EdgeId{at(x - 10, y + 15), axis}) == v);
            }
    CHECK(per.conductance(EdgeId{at(5, 0), 0}) == per.conductance(EdgeId{at(0, 0), 0}));
}

TEST_CASE("periodize_space") {
    SUBCASE("constant box") {
        const auto per = periodize_space(sample_box(EnvironmentSpec::iid(2, Law::constant(3.0)), 4, 1));
        for (double v : per.cell()) CHECK(v == 3.0);
        CHECK(per.provenance() == Provenance::SpacePeriodized);
    }
    SUBCASE("d = 1, N = 2 alternates") {
        const auto spec = EnvironmentSpec::iid(1, Law::uniform(1.0, 2.0));
        const auto box = sample_box(spec, 2, 3);
        const auto per = periodize_space(box);
        Point z{};
        const double w0 = box.conductance(EdgeId{z, 0});
        z[0] = 1;
        const double w1 = box.conductance(EdgeId{z, 0});
        CHECK(w0 != w1);
        for (int x = -4; x < 4; ++x) {
            Point p{};
            p[0] = x;
            CHECK(per.conductance(EdgeId{p, 0}) == (wrap(x, 2) == 0 ? w0 : w1));
        }
    }
    SUBCASE("wrapping edge takes the value of the last edge in the box") {
        const auto box = sample_box(bernoulli14(), 4, 9);
        const auto per = periodize_space(box);
        CHECK(per.conductance(EdgeId{at(3, 1), 0}) == box.conductance(EdgeId{at(3, 1), 0}));
        CHECK(per.conductance(EdgeId{at(-1, 1), 0}) == box.conductance(EdgeId{at(3, 1), 0}));
    }
}

TEST_CASE("both periodizations coincide for i.i.d. conductances") {
    for (std::uint64_t seed = 0; seed < 10; ++seed) {
        const auto a = periodize_space(sample_box(bernoulli14(), 6, seed));
        const auto b = sample_periodic_law(bernoulli14(), 6, seed);
        REQUIRE(a.cell().size() == b.cell().size());
        for (std::size_t i = 0; i < a.cell().size(); ++i) CHECK(a.cell()[i] == b.cell()[i]);
    }
}

TEST_CASE("periodizations differ for islands") {
    int differing = 0;
    for (std::uint64_t seed = 0; seed < 100; ++seed) {
        const auto a = periodize_space(sample_box(islands14(), 8, seed));
        const auto b = sample_periodic_law(islands14(), 8, seed);
        bool any = false;
        for (std::size_t i = 0; i < a.cell().size(); ++i) any |= a.cell()[i] != b.cell()[i];
        differing += any;
    }
    CHECK(differing >= 50);
}

TEST_CASE("law periodization of a constant law") {
    const auto per = sample_periodic_law(EnvironmentSpec::iid(3, Law::constant(1.5)), 3, 0);
    for (double v : per.cell()) CHECK(v == 1.5);
}

TEST_CASE("law periodization is unsupported for an explicit cell") {
    CHECK_THROWS_AS(sample_periodic_law(default_asymmetric_cell(), 3, 0), UnsupportedError);
}

TEST_CASE("law-periodized islands are stationary on the torus") {
    // The marginal at two cells of the torus must agree.
    const int seeds = 4000;
    int low_a = 0, low_b = 0;
    for (int s = 0; s < seeds; ++s) {
        const auto per = sample_periodic_law(islands14(), 8, static_cast<std::uint64_t>(s));
        low_a += per.conductance(EdgeId{at(0, 0), 0}) == 1.0;
        low_b += per.conductance(EdgeId{at(3, 7), 0}) == 1.0;
    }
    // Each fraction has sd ~ 0.008.
    CHECK(std::abs(static_cast<double>(low_a - low_b) / seeds) < 0.04);
}

TEST_CASE("shipped asymmetric cell") {
    const auto spec = default_asymmetric_cell();
    CHECK_NOTHROW(spec.validate());
    CHECK(spec.alpha() == 1.0);
    CHECK(spec.beta() == 10.0);
    const auto cell = PeriodicEnvironment::from_cell(spec);
    // z -> -z sends the edge (z, z + e_i) to (-z - e_i, -z).
    bool asymmetric = false;
    for (int axis = 0; axis < 2; ++axis)
        for (int x = 0; x < 3; ++x)
            for (int y = 0; y < 3; ++y) {
                Point mirrored = at(-x, -y);
                --mirrored[axis];
                asymmetric |= cell.conductance(EdgeId{at(x, y), axis}) != cell.conductance(EdgeId{mirrored, axis});
            }
    CHECK(asymmetric);
    CHECK(edge_mean(spec) == doctest::Approx((5.0 * 10 + 4.0 + 5.0 * 10 + 4.0) / 18.0));
}

TEST_CASE("site weight") {
    const auto cell = PeriodicEnvironment::from_cell(default_asymmetric_cell());
    // origin: (0,0)->(1,0) = 1, (-1,0)=(2,0)->(0,0) = 10, (0,0)->(0,1) = 1, (0,-1)=(0,2)->(0,0) = 1
    CHECK(site_weight(cell, Point{}) == 13.0);
}

TEST_CASE("environment CSV dump") {
    const auto box = sample_box(bernoulli14(), 3, 4);
    std::ostringstream os;
    write_csv(os, box);
    std::istringstream is(os.str());
    std::string line;
    std::getline(is, line);
    CHECK(line == "base_0,base_1,axis,value");
    int rows = 0;
    while (std::getline(is, line)) ++rows;
    CHECK(rows == 2 * 3 * 4);
}

}  // TEST_SUITE
