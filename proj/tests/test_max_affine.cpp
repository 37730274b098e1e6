#include <catch2/catch.hpp>

#include <cmath>

#include "barytrans/max_affine.hpp"
#include "barytrans/numerics/rng.hpp"

using namespace barytrans;

TEST_CASE("upper_envelope_1d: kinks of |x| and a three-piece fan", "[maxaffine]") {
    const auto segsAbs = upper_envelope_1d(MaxAffineFunction::abs_1d());
    REQUIRE(segsAbs.size() == 2);
    CHECK(segsAbs[0].xhi == Approx(0.0).margin(0));
    CHECK(segsAbs[1].xlo == Approx(0.0).margin(0));

    const auto f = MaxAffineFunction::line({0, 1, 2}, {0, 0, -1});
    const auto segs = upper_envelope_1d(f);
    REQUIRE(segs.size() == 3);
    CHECK(segs[1].xlo == Approx(0.0));
    CHECK(segs[1].xhi == Approx(1.0));
}

TEST_CASE("upper_envelope_1d: dominated and duplicate pieces", "[maxaffine]") {
    // the middle line never reaches the envelope
    const auto f = MaxAffineFunction::line({-1, 0, 1}, {0, -5, 0});
    CHECK(upper_envelope_1d(f).size() == 2);
    const auto red = redundant_pieces_1d(f);
    CHECK(red[1]);
    CHECK_FALSE(red[0]);

    // duplicate slopes keep only the higher offset
    const auto g = MaxAffineFunction::line({1, 1, -1}, {0, -2, 0});
    const auto segs = upper_envelope_1d(g);
    REQUIRE(segs.size() == 2);
    CHECK(segs[1].piece == 0);
}

TEST_CASE("subgradient: interval at kinks, singleton at smooth points", "[maxaffine]") {
    const auto f = MaxAffineFunction::abs_1d();
    Eigen::VectorXd x(1);
    x << 0;
    const auto sg0 = f.subgradient(x);
    CHECK(sg0.activeSet.size() == 2);
    CHECK(sg0.extremePoints(0, 0) == Approx(-1.0));
    CHECK(sg0.extremePoints(1, 0) == Approx(1.0));

    x << 2;
    const auto sg2 = f.subgradient(x);
    CHECK(sg2.activeSet.size() == 1);
    CHECK(sg2.extremePoints(0, 0) == Approx(1.0));

    // max(0, x, 2x-1) at x=1: both upper pieces active, interval [1,2]
    const auto g = MaxAffineFunction::line({0, 1, 2}, {0, 0, -1});
    const auto [lo, hi] = g.subgradient_interval_1d(1.0);
    CHECK(lo == Approx(1.0));
    CHECK(hi == Approx(2.0));
}

TEST_CASE("prox_max_affine: 1D closed form equals the dual route and brute force",
          "[maxaffine][property]") {
    RngStream rng(11);
    for (int trial = 0; trial < 60; ++trial) {
        const int pieces = 1 + rng.next_index(5);
        Eigen::MatrixXd a(pieces, 1);
        Eigen::VectorXd c(pieces);
        for (int k = 0; k < pieces; ++k) {
            a(k, 0) = rng.next_uniform(-3, 3);
            c(k) = rng.next_uniform(-2, 2);
        }
        const MaxAffineFunction f(a, c);
        Eigen::VectorXd x(1);
        x << rng.next_uniform(-4, 4);
        const auto closed = detail::prox_1d(f, x(0));
        const auto dual = detail::prox_dual(f, x);
        CHECK(closed.value == Approx(dual.value).margin(1e-10));
        // stationarity: x - y* within the subgradient interval at y*
        const auto [lo, hi] = f.subgradient_interval_1d(closed.argmin(0), 1e-7);
        CHECK(x(0) - closed.argmin(0) >= lo - 1e-7);
        CHECK(x(0) - closed.argmin(0) <= hi + 1e-7);
    }
}

TEST_CASE("prox_max_affine: dual value never overestimates, 2D", "[maxaffine][property]") {
    RngStream rng(5);
    for (int trial = 0; trial < 40; ++trial) {
        const int pieces = 1 + rng.next_index(6);
        Eigen::MatrixXd a(pieces, 2);
        Eigen::VectorXd c(pieces);
        for (int k = 0; k < pieces; ++k) {
            a.row(k) = rng.gaussian_vector(2).transpose();
            c(k) = rng.next_uniform(-1, 1);
        }
        const MaxAffineFunction f(a, c);
        const Eigen::VectorXd x = rng.gaussian_vector(2);
        const auto prox = prox_max_affine(f, x);
        // the primal objective at the recovered argmin upper-bounds the value
        const double primal = f(prox.argmin) + 0.5 * (x - prox.argmin).squaredNorm();
        CHECK(prox.value <= primal + 1e-12);
        CHECK(primal - prox.value <= 1e-9);
        // and random probes never beat it
        for (int probe = 0; probe < 15; ++probe) {
            const Eigen::VectorXd y = prox.argmin + 0.3 * rng.gaussian_vector(2);
            CHECK(f(y) + 0.5 * (x - y).squaredNorm() >= prox.value - 1e-10);
        }
    }
}

TEST_CASE("restrict_to_line: matches direct evaluation", "[maxaffine]") {
    RngStream rng(3);
    Eigen::MatrixXd a(3, 2);
    Eigen::VectorXd c(3);
    for (int k = 0; k < 3; ++k) {
        a.row(k) = rng.gaussian_vector(2).transpose();
        c(k) = rng.next_uniform(-1, 1);
    }
    const MaxAffineFunction f(a, c);
    const Eigen::VectorXd z = rng.gaussian_vector(2), dir = rng.gaussian_vector(2);
    const auto g = f.restrict_to_line(z, dir);
    for (double t : {-1.5, -0.3, 0.0, 0.7, 2.0})
        CHECK(g(t) == Approx(f(z + t * dir)).margin(1e-12));
}
