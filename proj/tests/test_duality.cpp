#include <catch2/catch.hpp>

#include <cmath>

#include "barytrans/duality.hpp"

using namespace barytrans;

namespace {
GridFunction sample_1d(double lo, double hi, int nodes, double (*fn)(double)) {
    Eigen::VectorXd g(nodes), v(nodes);
    for (int k = 0; k < nodes; ++k) {
        g(k) = lo + (hi - lo) * k / (nodes - 1);
        v(k) = fn(g(k));
    }
    return GridFunction(std::move(g), std::move(v));
}
}  // namespace

// ===========================================================================
// legendre transform
// ===========================================================================

TEST_CASE("legendre: conjugate of x^2/2 is s^2/2 up to grid resolution", "[duality]") {
    const auto f = sample_1d(-3, 3, 61, [](double x) { return 0.5 * x * x; });
    const auto fs = legendre(f);
    const double step = 0.1;
    for (long k = 0; k < fs.size(); ++k) {
        const double s = fs.grid1d()(k);
        CHECK(std::abs(fs.value(k) - 0.5 * s * s) <= step * step / 2 + 1e-12);
    }
}

TEST_CASE("legendre: point domain gives the zero conjugate", "[duality]") {
    Eigen::VectorXd g(1), v(1);
    g << 0;
    v << 0;
    const auto fs = legendre(GridFunction(g, v));
    for (long k = 0; k < fs.size(); ++k) CHECK(fs.value(k) == Approx(0.0).margin(1e-14));
}

TEST_CASE("legendre: |x| conjugates to zero on its slope range", "[duality]") {
    const auto f = sample_1d(-3, 3, 61, [](double x) { return std::abs(x); });
    const auto fs = legendre(f);  // default dual grid = slope range [-1, 1]
    CHECK(fs.grid1d()(0) == Approx(-1.0));
    CHECK(fs.grid1d()(fs.size() - 1) == Approx(1.0));
    for (long k = 0; k < fs.size(); ++k) CHECK(std::abs(fs.value(k)) <= 1e-12);
}

TEST_CASE("legendre: infinity sentinels restrict the domain", "[duality]") {
    Eigen::VectorXd g(3), v(3);
    g << -1, 0, 1;
    v << 0, kInf, 0;  // only the two endpoints matter
    Eigen::VectorXd dual(3);
    dual << -1, 0, 1;
    const auto fs = legendre(GridFunction(g, v), {dual});
    CHECK(fs.value(0) == Approx(1.0));  // max(-1*-1, -1*1) = 1
    CHECK(fs.value(1) == Approx(0.0));
    CHECK(fs.value(2) == Approx(1.0));

    Eigen::VectorXd allInf = Eigen::VectorXd::Constant(3, kInf);
    CHECK_THROWS_AS(legendre(GridFunction(g, allInf)), std::invalid_argument);
}

TEST_CASE("legendre: order-reversing and involutive on convex inputs", "[duality][property]") {
    RngStream rng(2024);
    for (int trial = 0; trial < 10; ++trial) {
        const int nodes = 31;
        Eigen::VectorXd g(nodes), vf(nodes), vh(nodes);
        const double a = rng.next_uniform(0.5, 2.0), b = rng.next_uniform(-1.0, 1.0);
        for (int k = 0; k < nodes; ++k) {
            g(k) = -2.0 + 4.0 * k / (nodes - 1);
            vf(k) = a * g(k) * g(k) + b * g(k);
            vh(k) = vf(k) + rng.next_uniform(0.0, 0.5);  // h >= f
        }
        const GridFunction f(g, vf), h(g, vh);
        const auto dual = detail::default_dual_axes(f);
        const auto fs = legendre(f, dual);
        const auto hs = legendre(h, dual);
        for (long k = 0; k < fs.size(); ++k) CHECK(fs.value(k) >= hs.value(k) - 1e-12);

        // double conjugation reproduces the convex f on its grid
        const auto fss = legendre(fs, {g});
        for (long k = 0; k < fss.size(); ++k) {
            CHECK(fss.value(k) <= vf(k) + 1e-10);
            CHECK(fss.value(k) >= vf(k) - 0.05);  // grid resolution slack
        }
    }
}

// ===========================================================================
// Q2 / P2 transforms
// ===========================================================================

TEST_CASE("moreau_Q2: flat, quadratic, and two-point examples", "[duality]") {
    const auto zero = sample_1d(-2, 2, 41, [](double) { return 0.0; });
    const auto q0 = moreau_Q2(zero);
    for (long k = 0; k < q0.size(); ++k) CHECK(q0.value(k) == Approx(0.0).margin(1e-14));

    const auto f = sample_1d(-3, 3, 121, [](double x) { return 0.5 * x * x; });
    const auto qf = moreau_Q2(f);
    for (long k = 0; k < qf.size(); ++k) {
        const double x = qf.grid1d()(k);
        if (std::abs(x) > 2.0) continue;  // envelope argmin must stay inside the grid
        CHECK(qf.value(k) == Approx(0.25 * x * x).margin(2e-3));
    }

    Eigen::VectorXd g(41), v = Eigen::VectorXd::Constant(41, kInf);
    for (int k = 0; k < 41; ++k) g(k) = -2.0 + 0.1 * k;
    v(10) = 0.0;  // x = -1
    v(30) = 0.0;  // x = +1
    const auto q2 = moreau_Q2(GridFunction(g, v));
    for (long k = 0; k < q2.size(); ++k) {
        const double x = g(k);
        const double expect = 0.5 * std::min((x - 1) * (x - 1), (x + 1) * (x + 1));
        CHECK(q2.value(k) == Approx(expect).margin(1e-12));
    }
}

TEST_CASE("sup_P2: flat, quadratic recovery, affine shift", "[duality]") {
    const auto zero = sample_1d(-2, 2, 41, [](double) { return 0.0; });
    const auto p0 = sup_P2(zero);
    for (long k = 0; k < p0.size(); ++k) CHECK(p0.value(k) == Approx(0.0).margin(1e-14));

    const auto gq = sample_1d(-6, 6, 241, [](double x) { return 0.25 * x * x; });
    const auto pq = sup_P2(gq);
    for (long k = 0; k < pq.size(); ++k) {
        const double y = pq.grid1d()(k);
        if (std::abs(y) > 2.0) continue;  // argmax x = 2y must stay inside the grid
        CHECK(pq.value(k) == Approx(0.5 * y * y).margin(3e-3));
    }

    const auto gl = sample_1d(-4, 4, 161, [](double x) { return x; });
    const auto pl = sup_P2(gl);
    for (long k = 0; k < pl.size(); ++k) {
        const double y = pl.grid1d()(k);
        if (std::abs(y) > 2.5) continue;
        CHECK(pl.value(k) == Approx(y + 0.5).margin(2e-3));
    }
}

TEST_CASE("Q2/P2: inequality chain and convexity preservation", "[duality][property]") {
    RngStream rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const int nodes = 41;
        Eigen::VectorXd g(nodes), v(nodes);
        const double a = rng.next_uniform(0.2, 1.5);
        const double b = rng.next_uniform(-0.2, 0.2);
        for (int k = 0; k < nodes; ++k) {
            g(k) = -2.0 + 4.0 * k / (nodes - 1);
            v(k) = a * g(k) * g(k) + b * g(k);
        }
        const GridFunction f(g, v);
        const auto qf = moreau_Q2(f);
        const auto pqf = sup_P2(qf);
        const auto pf = sup_P2(f);
        const auto qpf = moreau_Q2(pf);
        for (long k = 0; k < f.size(); ++k) {
            CHECK(qf.value(k) <= f.value(k) + 1e-12);
            CHECK(pf.value(k) >= f.value(k) - 1e-12);
            CHECK(pqf.value(k) <= f.value(k) + 1e-12);
            CHECK(qpf.value(k) >= f.value(k) - 1e-12);
            // the sandwich Q2 f <= P2 Q2 f
            CHECK(qf.value(k) <= pqf.value(k) + 1e-12);
        }
        // convex input: Q2 f and P2 g keep nonnegative second differences
        if (trial % 2 == 0) {
            for (long k = 1; k + 1 < qf.size(); ++k) {
                const double dd = qf.value(k + 1) - 2 * qf.value(k) + qf.value(k - 1);
                CHECK(dd >= -1e-9);
            }
        }
    }
}

// ===========================================================================
// candidate potentials and duality gap
// ===========================================================================

TEST_CASE("potential_from_report: fixture slopes collapse to one affine piece", "[duality]") {
    const auto mu = DiscreteMeasure::line({0, 1}, {0.5, 0.5});
    const auto nu = DiscreteMeasure::line({0, 2}, {0.5, 0.5});
    const auto rep = t2bar_discrete(mu, nu);
    const auto fbar = potential_from_report(rep, mu, nu);
    REQUIRE(fbar.pieces() == 2);
    CHECK(fbar.slopes()(0, 0) == Approx(-0.5).margin(1e-7));
    CHECK(fbar.slopes()(1, 0) == Approx(-0.5).margin(1e-7));
    // both pieces coincide: f is affine
    Eigen::VectorXd y(1);
    for (double yv : {-1.0, 0.0, 2.5}) {
        y << yv;
        CHECK(fbar(y) == Approx(-0.5 * yv + 0.25).margin(1e-6));
    }
}

TEST_CASE("potential_from_report: point-mass target yields the full fan", "[duality]") {
    const auto mu = DiscreteMeasure::line({-1, 0, 2}, {0.25, 0.5, 0.25});
    const auto nu = DiscreteMeasure::line({1}, {1});
    const auto rep = t2bar_discrete(mu, nu);
    const auto fbar = potential_from_report(rep, mu, nu);
    // slopes are x_i - 1
    REQUIRE(fbar.pieces() == 3);
    CHECK(fbar.slopes().col(0).minCoeff() == Approx(-2.0).margin(1e-9));
    CHECK(fbar.slopes().col(0).maxCoeff() == Approx(1.0).margin(1e-9));
    CHECK(dual_gap(fbar, mu, nu, rep.value) <= 1e-6);
}

TEST_CASE("potential_from_report: dominated case gives a constant potential", "[duality]") {
    const auto mu = DiscreteMeasure::line({0}, {1});
    const auto nu = DiscreteMeasure::line({-1, 1}, {0.5, 0.5});
    const auto rep = t2bar_discrete(mu, nu);
    const auto fbar = potential_from_report(rep, mu, nu);
    CHECK(fbar.slopes().cwiseAbs().maxCoeff() <= 1e-6);
}

TEST_CASE("dual_gap: strong duality at the fixture optimum, weak duality always", "[duality]") {
    const auto mu = DiscreteMeasure::line({0, 1}, {0.5, 0.5});
    const auto nu = DiscreteMeasure::line({0, 2}, {0.5, 0.5});
    const auto rep = t2bar_discrete(mu, nu);
    const auto fbar = potential_from_report(rep, mu, nu);
    const double gap = dual_gap(fbar, mu, nu, rep.value);
    CHECK(gap <= 1e-6);
    CHECK(gap >= -1e-9);

    // the zero potential leaves exactly half the value on the table
    const auto zero = MaxAffineFunction::line({0}, {0});
    CHECK(dual_gap(zero, mu, nu, rep.value) == Approx(0.5 * rep.value).margin(1e-9));
}

TEST_CASE("dual_gap: weak duality on random candidate potentials", "[duality][property]") {
    RngStream rng(57);
    for (int trial = 0; trial < 15; ++trial) {
        const int n = 2 + rng.next_index(3), m = 2 + rng.next_index(3);
        Eigen::MatrixXd mp(n, 1), np(m, 1);
        Eigen::VectorXd mw(n), nw(m);
        for (int i = 0; i < n; ++i) {
            mp(i, 0) = rng.next_uniform(-2, 2);
            mw(i) = rng.next_uniform(0.2, 1.0);
        }
        for (int j = 0; j < m; ++j) {
            np(j, 0) = rng.next_uniform(-2, 2);
            nw(j) = rng.next_uniform(0.2, 1.0);
        }
        const auto mu = DiscreteMeasure::from_unnormalized(mp, mw);
        const auto nu = DiscreteMeasure::from_unnormalized(np, nw);
        const double value = t2bar_discrete(mu, nu).value;
        const int pieces = 1 + rng.next_index(4);
        Eigen::MatrixXd a(pieces, 1);
        Eigen::VectorXd c(pieces);
        for (int k = 0; k < pieces; ++k) {
            a(k, 0) = rng.next_uniform(-2, 2);
            c(k) = rng.next_uniform(-1, 1);
        }
        CHECK(dual_gap(MaxAffineFunction(a, c), mu, nu, value) >= -1e-9);
    }
}

TEST_CASE("check_equality_barf: saturation at the optimum, rejection off it", "[duality]") {
    const auto mu = DiscreteMeasure::line({0, 1}, {0.5, 0.5});
    const auto nu = DiscreteMeasure::line({0, 2}, {0.5, 0.5});
    const auto rep = t2bar_discrete(mu, nu);
    const auto fbar = potential_from_report(rep, mu, nu);
    CHECK(check_equality_barf(fbar, rep.projection, nu, 1e-6));

    // constants always saturate
    CHECK(check_equality_barf(MaxAffineFunction::line({0}, {3}), rep.projection, nu, 1e-12));

    // a strictly convex surrogate separates d0 from (d-1 + d1)/2
    const auto vee = MaxAffineFunction::line({-2, 2}, {-1, -1});  // max-affine caricature of y^2
    CHECK_FALSE(check_equality_barf(vee, DiscreteMeasure::line({0}, {1}),
                                    DiscreteMeasure::line({-1, 1}, {0.5, 0.5}), 1e-6));
}
