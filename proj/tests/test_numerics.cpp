#include <catch2/catch.hpp>

#include <cmath>

#include "barytrans/numerics/eig.hpp"
#include "barytrans/numerics/lp.hpp"
#include "barytrans/numerics/rng.hpp"
#include "barytrans/numerics/transport_lmo.hpp"

using namespace barytrans;

// ===========================================================================
// seeded counter-based rng
// ===========================================================================

TEST_CASE("rng: golden triples frozen at first implementation", "[rng]") {
    struct Probe {
        std::uint64_t seed, stream;
        int index;
        std::uint64_t u64;
        double uniform;
    };
    const Probe probes[] = {
        {42, 0, 0, 4343161812488485408ull, 0.23544327362780482},
        {42, 7, 3, 6319755966533558539ull, 0.34259465742469564},
        {12345, 2, 9, 1623172851202593720ull, 0.087992376579667075},
    };
    for (const auto& p : probes) {
        RngStream r(p.seed, p.stream);
        std::uint64_t u = 0;
        for (int k = 0; k <= p.index; ++k) u = r.next_u64();
        CHECK(u == p.u64);
        RngStream r2(p.seed, p.stream);
        double d = 0;
        for (int k = 0; k <= p.index; ++k) d = r2.next_uniform();
        CHECK(d == Approx(p.uniform).epsilon(0).margin(0));
    }
}

TEST_CASE("rng: streams are independent and replayable", "[rng]") {
    RngStream a(7, 0), b(7, 1), a2(7, 0);
    bool anyDiff = false;
    for (int k = 0; k < 64; ++k) {
        const auto va = a.next_u64();
        anyDiff |= (va != b.next_u64());
        CHECK(va == a2.next_u64());
    }
    CHECK(anyDiff);
}

TEST_CASE("rng: polar gaussian has sane moments", "[rng]") {
    RngStream r(123, 5);
    const int n = 200000;
    double s = 0, s2 = 0;
    for (int k = 0; k < n; ++k) {
        const double z = r.next_gaussian();
        s += z;
        s2 += z * z;
    }
    CHECK(std::abs(s / n) < 0.01);
    CHECK(std::abs(s2 / n - 1.0) < 0.02);
}

// ===========================================================================
// simplex LP
// ===========================================================================

TEST_CASE("solve_lp: min x over x >= 0 is 0", "[lp]") {
    Eigen::MatrixXd a(0, 1);
    const auto res = solve_lp(LpProblem::standard(Eigen::VectorXd::Ones(1), a, Eigen::VectorXd(0)));
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.value == Approx(0.0).margin(1e-12));
}

TEST_CASE("solve_lp: simplex vertex min -x-y on x+y=1", "[lp]") {
    Eigen::MatrixXd a(1, 2);
    a << 1, 1;
    Eigen::VectorXd b(1), c(2);
    b << 1;
    c << -1, -1;
    const auto res = solve_lp(LpProblem::standard(c, a, b));
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.value == Approx(-1.0).margin(1e-9));
}

TEST_CASE("solve_lp: transport LP reproduces the 2x2 example", "[lp]") {
    // variables pi_11, pi_12, pi_21, pi_22 with both marginals (1/2, 1/2)
    Eigen::MatrixXd a(3, 4);
    a << 1, 1, 0, 0,
         0, 0, 1, 1,
         1, 0, 1, 0;
    Eigen::VectorXd b(3), c(4);
    b << 0.5, 0.5, 0.5;
    c << 0, 4, 1, 1;  // |x_i - y_j|^2 for x=(0,1), y=(0,2)
    const auto res = solve_lp(LpProblem::standard(c, a, b));
    REQUIRE(res.status == LpStatus::Optimal);
    CHECK(res.value == Approx(0.5).margin(1e-9));
}

TEST_CASE("solve_lp: infeasible and unbounded are detected", "[lp]") {
    {
        Eigen::MatrixXd a(1, 1);
        a << 1;
        Eigen::VectorXd b(1);
        b << -1;  // x = -1 with x >= 0
        const auto res = solve_lp(LpProblem::standard(Eigen::VectorXd::Zero(1), a, b));
        CHECK(res.status == LpStatus::Infeasible);
    }
    {
        LpProblem p;
        p.objective = Eigen::VectorXd::Constant(1, -1.0);
        p.eqA = Eigen::MatrixXd(0, 1);
        p.eqB = Eigen::VectorXd(0);
        p.lo = Eigen::VectorXd::Zero(1);
        p.hi = Eigen::VectorXd::Constant(1, kInf);
        CHECK(solve_lp(p).status == LpStatus::Unbounded);
    }
}

TEST_CASE("solve_lp: free variables and two-sided bounds", "[lp]") {
    // min x + y  s.t.  x + y = 3, x free, y in [0, 1]
    LpProblem p;
    p.objective = Eigen::VectorXd::Zero(2);
    p.objective << 1.0, -1.0;
    p.eqA = Eigen::MatrixXd(1, 2);
    p.eqA << 1, 1;
    p.eqB = Eigen::VectorXd::Constant(1, 3.0);
    p.lo = Eigen::VectorXd(2);
    p.hi = Eigen::VectorXd(2);
    p.lo << -kInf, 0.0;
    p.hi << kInf, 1.0;
    const auto res = solve_lp(p);
    REQUIRE(res.status == LpStatus::Optimal);
    // pushing y to its upper bound minimizes x - ... : x = 2, y = 1
    CHECK(res.x(1) == Approx(1.0).margin(1e-9));
    CHECK(res.value == Approx(1.0).margin(1e-9));
}

TEST_CASE("solve_lp: optimal basic solutions satisfy constraints tightly", "[lp][property]") {
    RngStream rng(99);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 3 + rng.next_index(6);
        const int m = 1 + rng.next_index(3);
        Eigen::MatrixXd a(m, n);
        for (int i = 0; i < m; ++i)
            for (int j = 0; j < n; ++j) a(i, j) = rng.next_uniform(-1, 1);
        Eigen::VectorXd x0(n);
        for (int j = 0; j < n; ++j) x0(j) = rng.next_uniform(0, 1);  // feasible witness
        Eigen::VectorXd c(n);
        for (int j = 0; j < n; ++j) c(j) = rng.next_uniform(-1, 1);
        const auto res = solve_lp(LpProblem::standard(c, a, a * x0));
        if (res.status != LpStatus::Optimal) continue;  // unbounded draws are fine
        CHECK((a * res.x - a * x0).cwiseAbs().maxCoeff() < 1e-9);
        CHECK(res.x.minCoeff() > -1e-12);
        CHECK(res.value <= c.dot(x0) + 1e-9);
    }
}

// ===========================================================================
// jacobi eigensolver and spectral functions
// ===========================================================================

TEST_CASE("sym_eig: identity and diagonal", "[eig]") {
    const auto e = sym_eig(Eigen::MatrixXd::Identity(2, 2));
    CHECK(e.lambda(0) == Approx(1.0));
    CHECK(e.lambda(1) == Approx(1.0));

    Eigen::MatrixXd d = Eigen::Vector2d(4, 1).asDiagonal();
    const auto e2 = sym_eig(d);
    CHECK(e2.lambda(0) == Approx(4.0));
    CHECK(e2.lambda(1) == Approx(1.0));
    CHECK((e2.Q - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-12);
}

TEST_CASE("sym_eig: hand-computed 2x2 spectrum", "[eig]") {
    Eigen::MatrixXd s(2, 2);
    s << 1.5, -0.5, -0.5, 1.5;
    const auto e = sym_eig(s);
    CHECK(e.lambda(0) == Approx(2.0).margin(1e-12));
    CHECK(e.lambda(1) == Approx(1.0).margin(1e-12));
    // leading eigenvector proportional to (1, -1)/sqrt(2)
    const double q = std::abs(e.Q(0, 0) * e.Q(1, 0));
    CHECK(q == Approx(0.5).margin(1e-10));
    CHECK(e.Q(0, 0) * e.Q(1, 0) < 0);
}

TEST_CASE("sym_eig: orthogonality and reconstruction on random matrices", "[eig][property]") {
    RngStream rng(4);
    for (int trial = 0; trial < 30; ++trial) {
        const int d = 1 + rng.next_index(10);
        Eigen::MatrixXd g(d, d);
        for (int i = 0; i < d; ++i) g.col(i) = rng.gaussian_vector(d);
        const Eigen::MatrixXd s = 0.5 * (g + g.transpose());
        const auto e = sym_eig(s);
        CHECK((e.Q * e.Q.transpose() - Eigen::MatrixXd::Identity(d, d)).norm() <= 1e-10);
        CHECK((e.reconstruct() - s).norm() <= 1e-8 * (1.0 + s.norm()));
        for (int i = 0; i + 1 < d; ++i) CHECK(e.lambda(i) >= e.lambda(i + 1));
    }
}

TEST_CASE("sym_eig: rejects asymmetric input", "[eig]") {
    Eigen::MatrixXd s(2, 2);
    s << 0, 1, 0, 0;
    CHECK_THROWS_AS(sym_eig(s), std::invalid_argument);
}

TEST_CASE("psd_sqrt and psd_inv_sqrt on diagonal matrices", "[eig]") {
    Eigen::MatrixXd d = Eigen::Vector2d(4, 1).asDiagonal();
    CHECK((psd_sqrt(d) - Eigen::MatrixXd(Eigen::Vector2d(2, 1).asDiagonal())).norm() < 1e-12);
    CHECK((psd_sqrt(Eigen::MatrixXd::Identity(3, 3)) - Eigen::MatrixXd::Identity(3, 3)).norm() <
          1e-12);
    Eigen::MatrixXd d2 = Eigen::Vector2d(4, 0).asDiagonal();
    CHECK((psd_inv_sqrt(d2) - Eigen::MatrixXd(Eigen::Vector2d(0.5, 0).asDiagonal())).norm() <
          1e-12);
    Eigen::MatrixXd neg = Eigen::Vector2d(1, -1).asDiagonal();
    CHECK_THROWS_AS(psd_sqrt(neg), std::invalid_argument);
}

TEST_CASE("psd_sqrt squares back to the input", "[eig][property]") {
    RngStream rng(8);
    for (int trial = 0; trial < 20; ++trial) {
        const int d = 1 + rng.next_index(8);
        Eigen::MatrixXd g(d, d);
        for (int i = 0; i < d; ++i) g.col(i) = rng.gaussian_vector(d);
        const Eigen::MatrixXd s = g * g.transpose();
        const Eigen::MatrixXd r = psd_sqrt(s);
        CHECK((r * r - s).norm() <= 1e-8 * (1.0 + s.norm()));
    }
}

TEST_CASE("clip_to_interval: clamping examples and idempotence", "[eig]") {
    Eigen::MatrixXd d = Eigen::Vector2d(2, -1).asDiagonal();
    CHECK((clip_to_interval(d) - Eigen::MatrixXd(Eigen::Vector2d(1, 0).asDiagonal())).norm() <
          1e-12);
    CHECK((clip_to_interval(Eigen::MatrixXd::Identity(2, 2)) - Eigen::MatrixXd::Identity(2, 2))
              .norm() < 1e-12);
    Eigen::MatrixXd s(2, 2);
    s << 1.5, -0.5, -0.5, 1.5;  // eigenvalues (2, 1) clamp to (1, 1)
    CHECK((clip_to_interval(s) - Eigen::MatrixXd::Identity(2, 2)).norm() < 1e-10);

    RngStream rng(5);
    for (int trial = 0; trial < 20; ++trial) {
        const int d2 = 1 + rng.next_index(6);
        Eigen::MatrixXd g(d2, d2);
        for (int i = 0; i < d2; ++i) g.col(i) = rng.gaussian_vector(d2);
        const Eigen::MatrixXd sym = 0.5 * (g + g.transpose());
        const Eigen::MatrixXd c1 = clip_to_interval(sym);
        CHECK((clip_to_interval(c1) - c1).norm() < 1e-10);
        // contraction toward any feasible point (here: I/2)
        const Eigen::MatrixXd f = 0.5 * Eigen::MatrixXd::Identity(d2, d2);
        CHECK((c1 - f).norm() <= (sym - f).norm() + 1e-10);
    }
}

// ===========================================================================
// transportation simplex
// ===========================================================================

TEST_CASE("ot_lmo: spec examples", "[lmo]") {
    Eigen::VectorXd half = Eigen::VectorXd::Constant(2, 0.5);
    {
        double obj = 1.0;
        const auto plan = ot_lmo(Eigen::MatrixXd::Zero(2, 2), half, half, &obj);
        CHECK(obj == Approx(0.0).margin(1e-12));
        CHECK((plan.rowwise().sum() - half).cwiseAbs().maxCoeff() < 1e-12);
    }
    {
        Eigen::MatrixXd cost(2, 2);
        cost << 0, 1, 1, 0;
        double obj;
        const auto plan = ot_lmo(cost, half, half, &obj);
        CHECK(obj == Approx(0.0).margin(1e-12));
        CHECK(plan(0, 0) == Approx(0.5));
        CHECK(plan(1, 1) == Approx(0.5));
    }
    {
        Eigen::MatrixXd cost(2, 2);
        cost << 0, 4, 1, 1;
        double obj;
        const auto plan = ot_lmo(cost, half, half, &obj);
        CHECK(obj == Approx(0.5).margin(1e-12));
        CHECK(plan(0, 0) == Approx(0.5));
        CHECK(plan(1, 1) == Approx(0.5));
    }
}

TEST_CASE("ot_lmo: vertex property and agreement with the dense LP", "[lmo][property]") {
    RngStream rng(21);
    for (int trial = 0; trial < 25; ++trial) {
        const int n = 2 + rng.next_index(5);
        const int m = 2 + rng.next_index(5);
        Eigen::VectorXd a(n), b(m);
        for (int i = 0; i < n; ++i) a(i) = rng.next_uniform(0.2, 1.0);
        for (int j = 0; j < m; ++j) b(j) = rng.next_uniform(0.2, 1.0);
        a /= a.sum();
        b /= b.sum();
        Eigen::MatrixXd cost(n, m);
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) cost(i, j) = rng.next_uniform(-2, 2);

        double obj;
        const auto plan = ot_lmo(cost, a, b, &obj);
        CHECK((plan.rowwise().sum() - a).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((plan.colwise().sum().transpose() - b).cwiseAbs().maxCoeff() < 1e-10);
        CHECK((plan.array() > 1e-14).count() <= n + m - 1);

        // reference route: the same polytope through the dense simplex
        Eigen::MatrixXd lpA = Eigen::MatrixXd::Zero(n + m - 1, n * m);
        Eigen::VectorXd lpB(n + m - 1), lpC(n * m);
        for (int i = 0; i < n; ++i) {
            for (int j = 0; j < m; ++j) lpA(i, i * m + j) = 1.0;
            lpB(i) = a(i);
        }
        for (int j = 0; j + 1 < m; ++j) {
            for (int i = 0; i < n; ++i) lpA(n + j, i * m + j) = 1.0;
            lpB(n + j) = b(j);
        }
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < m; ++j) lpC(i * m + j) = cost(i, j);
        const auto res = solve_lp(LpProblem::standard(lpC, lpA, lpB));
        REQUIRE(res.status == LpStatus::Optimal);
        CHECK(obj == Approx(res.value).margin(1e-8));
    }
}

TEST_CASE("transport simplex: warm restart stays exact", "[lmo]") {
    RngStream rng(31);
    const int n = 12;
    Eigen::VectorXd a = Eigen::VectorXd::Constant(n, 1.0 / n);
    TransportSimplex ts(a, a);
    Eigen::MatrixXd cost(n, n);
    for (int rounds = 0; rounds < 4; ++rounds) {
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) cost(i, j) = rng.next_uniform(-1, 1);
        const auto info = ts.solve([&](int i, int j) { return cost(i, j); });
        REQUIRE(info.optimal);
        double obj;
        ot_lmo(cost, a, a, &obj);  // cold reference
        CHECK(info.objective == Approx(obj).margin(1e-10));
    }
}
