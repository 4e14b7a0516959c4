#include <doctest.h>

#include <set>

#include "homog/errors.hpp"
#include "homog/lattice.hpp"
#include "homog/rng.hpp"

using namespace homog;

TEST_SUITE("lattice") {

TEST_CASE("edge_between is orientation independent") {
    Point x{}, y{};
    x[0] = 2;
    x[1] = -1;
    y = x;
    y[1] += 1;
    const EdgeId a = edge_between(x, y, 2);
    const EdgeId b = edge_between(y, x, 2);
    CHECK(a == b);
    CHECK(a.axis == 1);
    CHECK(a.base == x);
}

TEST_CASE("edge_between rejects non-neighbours") {
    Point x{}, y{};
    y[0] = 1;
    y[1] = 1;
    CHECK_THROWS_AS(edge_between(x, y, 2), DomainError);
    CHECK_THROWS_AS(edge_between(x, x, 2), DomainError);
    y = Point{};
    y[0] = 2;
    CHECK_THROWS_AS(edge_between(x, y, 2), DomainError);
}

TEST_CASE("edge keys are injective on a neighbourhood") {
    for (int d : {1, 2, 3}) {
        std::set<std::uint64_t> keys;
        const int side = 7;
        const std::size_t sites = ipow(side, d);
        for (std::size_t s = 0; s < sites; ++s) {
            Point z = point_from_index(s, side, d);
            for (int i = 0; i < d; ++i) z[i] -= 3;
            for (int axis = 0; axis < d; ++axis) keys.insert(edge_key(EdgeId{z, axis}, d));
        }
        CHECK(keys.size() == sites * d);
    }
}

TEST_CASE("edge_key refuses coordinates that do not fit") {
    Point z{};
    z[0] = 1 << 29;
    CHECK_THROWS_AS(edge_key(EdgeId{z, 0}, 2), DomainError);
    CHECK_NOTHROW(edge_key(EdgeId{z, 0}, 1));
}

TEST_CASE("linear_index and point_from_index are inverse") {
    const int side = 5, d = 3;
    for (std::size_t i = 0; i < ipow(side, d); ++i) CHECK(linear_index(point_from_index(i, side, d), side, d) == i);
    Point z{};
    z[0] = 1;
    CHECK(linear_index(z, side, d) == 1);  // first coordinate varies fastest
}

TEST_CASE("wrap") {
    CHECK(wrap(-1, 4) == 3);
    CHECK(wrap(4, 4) == 0);
    CHECK(wrap(-9, 4) == 3);
    CHECK(wrap(2, 4) == 2);
}

TEST_CASE("counter streams are reproducible and distinct") {
    CounterStream a(derive_seed(7, 0)), b(derive_seed(7, 0)), c(derive_seed(7, 1));
    for (int i = 0; i < 100; ++i) {
        const auto x = a.next_u64();
        CHECK(x == b.next_u64());
        CHECK(x != c.next_u64());
    }
    CHECK(a.consumed() == 100);
}

TEST_CASE("uniforms lie in [0, 1) and have the right mean") {
    CounterStream s(12345);
    double sum = 0.0;
    const int n = 200000;
    for (int i = 0; i < n; ++i) {
        const double u = s.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
    }
    // sd of the mean is sqrt(1/12/n) ~ 6.5e-4
    CHECK(sum / n == doctest::Approx(0.5).epsilon(0.005));
    CHECK(to_unit(~std::uint64_t{0}) < 1.0);
    CHECK(to_unit(0) == 0.0);
}

}  // TEST_SUITE
