#include <catch2/catch_amalgamated.hpp>

#include <random>

#include "nlsym/geometry.hpp"

using namespace nlsym;

TEST_CASE("reflect_point basics") {
    const Point a = reflect_point(make_point(0.5, 0.2), 0.3, 0, 2);
    CHECK(a[0] == Catch::Approx(0.1).margin(1e-15));
    CHECK(a[1] == 0.2);

    const Point fixed = reflect_point(make_point(0.3, -0.7), 0.3, 0, 2);
    CHECK(fixed[0] == Catch::Approx(0.3).margin(1e-15));

    const Point c = reflect_point(make_point(0.75, 0.0), 0.25, 0, 2);
    CHECK(c[0] == Catch::Approx(-0.25).margin(1e-15));

    CHECK_THROWS_AS(reflect_point(make_point(0.0), 0.0, 2, 2), std::invalid_argument);
}

TEST_CASE("reflection involution is exact on the lattice") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 16, {1.0, 1.0, 0.0});
    std::mt19937_64 rng(42);
    std::uniform_int_distribution<int> tick(-2 * 16, 2 * 16);
    for (int trial = 0; trial < 200; ++trial) {
        const int t = tick(rng);
        for (std::size_t f = 0; f < g.size(); f += 7) {
            const Index i = g.unflat(f);
            const Index j = g.reflect_index(g.reflect_index(i, t, 0), t, 0);
            CHECK(j == i);
        }
    }
}

TEST_CASE("sigma_lambda on the unit ball") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 8, {1.0, 1.0, 0.0});
    const DomainMask ball = DomainMask::ball(g, make_point(0, 0), 1.0);

    CHECK(sigma_lambda(ball, 1.0, 0).empty());

    const auto right = sigma_lambda(ball, 0.0, 0);
    std::size_t left = 0;
    for (std::size_t f : ball.nodes()) {
        const Point p = g.coord(f);
        if (p[0] < 0.0) ++left;
    }
    CHECK(right.size() == left);

    // brute-force enumeration at lambda = 1/2
    const auto cap = sigma_lambda(ball, 0.5, 0);
    std::size_t expect = 0;
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Point p = g.coord(f);
        if (p[0] * p[0] + p[1] * p[1] < 1.0 && p[0] > 0.5) ++expect;
    }
    CHECK(cap.size() == expect);

    CHECK_THROWS_AS(sigma_lambda(ball, 0.3, 0), std::invalid_argument);  // 0.3 not a multiple of h/2
}

TEST_CASE("sigma_lambda reflected set stays on the lattice and partitions") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 8, {1.0, 1.0, 0.0});
    const DomainMask ball = DomainMask::ball(g, make_point(0, 0), 1.0);
    for (double lambda : {1.0 / 16, 0.25, 0.5, 0.75}) {
        const int t = g.plane_ticks(lambda);
        const auto cap = sigma_lambda(ball, lambda, 0);
        for (std::size_t f : cap) {
            const Index i = g.unflat(f);
            const Index j = g.reflect_index(i, t, 0);
            CHECK(2 * j[0] < t);                  // reflected strictly to the left of the plane
            CHECK(ball.inside(j));                // reflected cap lies inside the ball
        }
    }
}

TEST_CASE("reflect_function transport") {
    const UniformGrid g = UniformGrid::symmetric(1, 1.0 / 16, {2.0, 0.0, 0.0});

    SECTION("constants stay constant") {
        GridFunction u(g);
        for (std::size_t f = 0; f < g.size(); ++f) u[f] = 3.25;
        u.set_exterior_constant(3.25);
        const GridFunction r = reflect_function(u, 0.25, 0);
        for (std::size_t f = 0; f < g.size(); ++f) CHECK(r[f] == 3.25);
    }

    SECTION("double reflection is bitwise identity") {
        GridFunction u = GridFunction::sample(g, [](const Point& p) { return std::sin(3.0 * p[0]) + p[0]; });
        const GridFunction rr = reflect_function(reflect_function(u, 0.375, 0), 0.375, 0);
        for (std::size_t f = 0; f < g.size(); ++f) {
            if (std::abs(g.coord(f)[0]) <= 2.0 - 2.0 * 0.375)  // round trip stays inside the box
                CHECK(rr[f] == u[f]);
        }
    }

    SECTION("linear profile maps algebraically") {
        GridFunction u = GridFunction::sample(g, [](const Point& p) { return p[0]; });
        const GridFunction r = reflect_function(u, 0.25, 0);
        for (std::size_t f = 0; f < g.size(); ++f) {
            const double x = g.coord(f)[0];
            if (std::abs(0.5 - x) <= 2.0)
                CHECK(r[f] == Catch::Approx(0.5 - x).margin(1e-14));
        }
    }
}

TEST_CASE("antisymmetry transport of w_lambda") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 8, {2.0, 1.0, 0.0});
    GridFunction u = GridFunction::sample(g, [](const Point& p) {
        const double r2 = p[0] * p[0] + p[1] * p[1];
        return r2 < 1.0 ? (1.0 - r2) : 0.0;
    });
    for (double lambda : {0.25, 0.5}) {
        const int t = g.plane_ticks(lambda);
        const GridFunction ul = reflect_function(u, lambda, 0);
        GridFunction w(g);
        for (std::size_t f = 0; f < g.size(); ++f) w[f] = ul[f] - u[f];
        for (std::size_t f = 0; f < g.size(); ++f) {
            const Index i = g.unflat(f);
            const Index j = g.reflect_index(i, t, 0);
            if (!g.contains(j)) continue;
            CHECK(w[g.flat(j)] == -w[f]);  // exact, not approximate
        }
    }
}

TEST_CASE("region_measure") {
    const UniformGrid g2 = UniformGrid::symmetric(2, 0.1, {0.5, 0.5, 0.0});
    CHECK(region_measure({}, g2) == 0.0);
    CHECK(region_measure({std::size_t{3}}, g2) == Catch::Approx(0.01));

    // Riemann sum of the unit square indicator converges to 1
    for (int n : {8, 16, 32}) {
        const double h = 1.0 / n;
        const UniformGrid g(2, h, Index{0, 0, 0}, Index{n, n, 0});
        std::vector<std::size_t> all(g.size());
        for (std::size_t f = 0; f < g.size(); ++f) all[f] = f;
        CHECK(region_measure(all, g) == Catch::Approx(1.0).epsilon(3.0 * h));
    }
}

TEST_CASE("ball membership is strictly inside") {
    const UniformGrid g = UniformGrid::symmetric(1, 1.0 / 4, {1.0, 0.0, 0.0});
    const DomainMask ball = DomainMask::ball(g, make_point(0), 1.0);
    CHECK_FALSE(ball.inside(Index{4, 0, 0}));   // x = 1 on the boundary
    CHECK_FALSE(ball.inside(Index{-4, 0, 0}));
    CHECK(ball.inside(Index{3, 0, 0}));
    CHECK(ball.measure() == Catch::Approx(7.0 / 4.0));
    CHECK(ball.diameter() == 2.0);
}

TEST_CASE("mask symmetry and slice convexity") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 8, {1.0, 1.0, 0.0});
    const DomainMask ball = DomainMask::ball(g, make_point(0, 0), 1.0);
    CHECK(ball.symmetric_under_reflection(0));
    CHECK(ball.symmetric_under_reflection(1));
    CHECK(ball.convex_in_direction(0));

    // a mask with a notch fails the slice convexity check
    std::vector<std::uint8_t> inside(g.size(), 0);
    for (std::size_t f = 0; f < g.size(); ++f) {
        const Point p = g.coord(f);
        if (std::abs(p[0]) < 0.8 && std::abs(p[1]) < 0.8) inside[f] = 1;
        if (std::abs(p[0]) < 0.1 && std::abs(p[1]) < 0.5 && p[1] > -0.5) inside[f] = 0;
    }
    const DomainMask notched = DomainMask::custom(g, inside);
    CHECK_FALSE(notched.convex_in_direction(1));
}

TEST_CASE("sigma partition against brute-force set algebra") {
    const UniformGrid g = UniformGrid::symmetric(2, 1.0 / 10, {1.0, 1.0, 0.0});
    const DomainMask ball = DomainMask::ball(g, make_point(0, 0), 1.0);
    REQUIRE(ball.node_count() <= 10000);
    for (double lambda : {0.1, 0.25, 0.5}) {
        const auto cap = sigma_lambda(ball, lambda, 0);
        const int t = g.plane_ticks(lambda);
        // cap plus its reflection plus the on-plane slice covers the lens of the
        // ball with its reflected image, with no overlap
        std::vector<std::uint8_t> seen(g.size(), 0);
        for (std::size_t f : cap) {
            CHECK(!seen[f]);
            seen[f] = 1;
            const Index j = g.reflect_index(g.unflat(f), t, 0);
            const std::size_t fj = g.flat(j);
            CHECK(!seen[fj]);
            seen[fj] = 1;
        }
        for (std::size_t f : ball.nodes()) {
            const Index i = g.unflat(f);
            const Index j = g.reflect_index(i, t, 0);
            const bool in_both = ball.inside(j);
            if (2 * i[0] == t) {
                CHECK(!seen[f]);  // plane nodes belong to neither side
            } else if (in_both) {
                CHECK(seen[f]);   // symmetrized lens is covered
            }
        }
    }
}
