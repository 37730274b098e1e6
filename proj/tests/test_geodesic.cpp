#include <catch2/catch.hpp>

#include <cmath>

#include "barytrans/geodesic.hpp"

using namespace barytrans;

namespace {
GaussianMeasure g1(double m, double v) {
    Eigen::VectorXd mm(1);
    mm << m;
    Eigen::MatrixXd c(1, 1);
    c << v;
    return GaussianMeasure(mm, c);
}
GaussianMeasure g2(double m0, double m1, double v0, double v1) {
    Eigen::VectorXd mm(2);
    mm << m0, m1;
    return GaussianMeasure(mm, Eigen::Vector2d(v0, v1).asDiagonal());
}
}  // namespace

// ===========================================================================
// marginal laws
// ===========================================================================

TEST_CASE("geodesic_law_gaussian: endpoints are exact", "[geodesic]") {
    const auto mu = g2(0, 0, 4, 1), nu = g2(1, 0, 1, 4);
    const auto rep = t2bar_gaussian(mu, nu);
    const auto l0 = geodesic_law_gaussian(mu, nu, rep, 0.0);
    const auto l1 = geodesic_law_gaussian(mu, nu, rep, 1.0);
    CHECK((l0.mean - mu.mean()).norm() == 0.0);
    CHECK((l0.cov - mu.cov()).norm() <= 1e-14);
    CHECK((l1.mean - nu.mean()).norm() <= 1e-14);
    CHECK((l1.cov - nu.cov()).norm() <= 1e-10);
}

TEST_CASE("geodesic_law_gaussian: contraction and pure-martingale 1D forms", "[geodesic]") {
    {
        const auto mu = g1(0, 4), nu = g1(0, 1);
        const auto rep = t2bar_gaussian(mu, nu);
        for (double t : {0.0, 0.3, 0.5, 0.9, 1.0}) {
            const auto law = geodesic_law_gaussian(mu, nu, rep, t);
            CHECK(law.cov(0, 0) == Approx(4.0 * (1 - t / 2) * (1 - t / 2)).margin(1e-12));
        }
    }
    {
        const auto mu = g1(0, 1), nu = g1(0, 4);
        const auto rep = t2bar_gaussian(mu, nu);
        for (double t : {0.0, 0.25, 0.75, 1.0}) {
            const auto law = geodesic_law_gaussian(mu, nu, rep, t);
            CHECK(law.cov(0, 0) == Approx(1.0 + 3.0 * t).margin(1e-12));
        }
    }
}

// ===========================================================================
// simulation
// ===========================================================================

TEST_CASE("simulate: deterministic given the seed, exact when the bracket vanishes",
          "[geodesic]") {
    const auto mu = g1(0, 4), nu = g1(0, 1);
    const auto rep = t2bar_gaussian(mu, nu);  // sigmaBar = Sigma_nu: no noise
    Eigen::VectorXd times(3);
    times << 0, 0.5, 1;
    const auto e1 = simulate(mu, nu, rep, times, 16, 99);
    const auto e2 = simulate(mu, nu, rep, times, 16, 99);
    for (int k = 0; k < 3; ++k) CHECK((e1.slice(k) - e2.slice(k)).norm() == 0.0);
    // martingale part is constant: X_t is a deterministic function of X_0
    for (std::size_t p = 0; p < e1.paths.size(); ++p) {
        const double x0 = e1.paths[p](0, 0);
        CHECK(e1.paths[p](2, 0) == Approx(0.5 * x0).margin(1e-12));
    }
}

TEST_CASE("simulate: empirical moments track the law", "[geodesic][mc]") {
    const auto mu = g1(0, 1), nu = g1(0, 4);
    const auto rep = t2bar_gaussian(mu, nu);
    Eigen::VectorXd times(3);
    times << 0, 0.5, 1;
    const int n = 20000;
    const auto ens = simulate(mu, nu, rep, times, n, 7);
    for (int k = 0; k < 3; ++k) {
        const auto law = geodesic_law_gaussian(mu, nu, rep, times(k));
        const Eigen::MatrixXd s = ens.slice(k);
        const double mean = s.col(0).mean();
        const double var = (s.col(0).array() - mean).square().mean();
        const double sd = std::sqrt(law.cov(0, 0));
        CHECK(std::abs(mean - law.mean(0)) <= 3.5 * sd / std::sqrt(double(n)));
        CHECK(std::abs(var - law.cov(0, 0)) <=
              4.0 * law.cov(0, 0) * std::sqrt(2.0 / n) + 1e-12);
    }
}

TEST_CASE("simulate: martingale increments are uncorrelated with the past", "[geodesic][mc]") {
    const auto mu = g2(0, 0, 4, 1), nu = g2(1, 0, 1, 4);
    const auto rep = t2bar_gaussian(mu, nu);
    Eigen::VectorXd times(3);
    times << 0, 0.5, 1;
    const int n = 20000;
    const auto ens = simulate(mu, nu, rep, times, n, 13);
    // martingale part M_t = grad phi(X0) + S B_t recovered from the path:
    // M_t = X_t - (1-t)(X_0 - grad phi(X_0)); its increment over [0.5, 1]
    // must be uncorrelated with X_0 and with B_{0.5} (equivalently M_{0.5})
    const Eigen::MatrixXd x0 = ens.slice(0), xh = ens.slice(1), x1 = ens.slice(2);
    auto gradPhi = [&](const Eigen::MatrixXd& x) {
        Eigen::MatrixXd g = x;
        for (int p = 0; p < g.rows(); ++p)
            g.row(p) = (nu.mean() + rep.A * (x.row(p).transpose() - mu.mean())).transpose();
        return g;
    };
    const Eigen::MatrixXd g0 = gradPhi(x0);
    const Eigen::MatrixXd mh = xh - 0.5 * (x0 - g0);
    const Eigen::MatrixXd m1 = x1;
    const Eigen::MatrixXd inc = m1 - mh;
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j) {
            double cov = 0, vi = 0, vj = 0;
            const double mi = inc.col(i).mean(), mj = mh.col(j).mean();
            for (int p = 0; p < inc.rows(); ++p) {
                cov += (inc(p, i) - mi) * (mh(p, j) - mj);
                vi += std::pow(inc(p, i) - mi, 2);
                vj += std::pow(mh(p, j) - mj, 2);
            }
            if (vi > 1e-12 && vj > 1e-12)
                CHECK(std::abs(cov / std::sqrt(vi * vj)) <= 3.0 / std::sqrt(double(n)) + 0.02);
        }
}

// ===========================================================================
// scaling and length
// ===========================================================================

TEST_CASE("scaling_check: closed-form values on the 1D fixture", "[geodesic]") {
    const auto mu = g1(0, 4), nu = g1(0, 1);
    const auto sc = scaling_check(mu, nu, 0.25, 0.75);
    CHECK(sc.lhs == Approx(0.25).margin(1e-10));
    CHECK(sc.rhs == Approx(0.25).margin(1e-12));
    CHECK(sc.ok);
    CHECK(scaling_check(mu, nu, 0.5, 0.5).lhs == Approx(0.0).margin(1e-12));
    const auto ends = scaling_check(mu, nu, 0.0, 1.0);
    CHECK(ends.lhs == Approx(1.0).margin(1e-10));
}

TEST_CASE("scaling_check: empirical mode within Monte Carlo tolerance", "[geodesic][mc]") {
    const auto mu = g1(0, 4), nu = g1(0, 1);
    const auto sc = scaling_check(mu, nu, 0.25, 0.75, CheckMode::Empirical, 400, 5);
    CHECK(sc.ok);
}

TEST_CASE("oriented_length: telescoping and subdivision invariance", "[geodesic]") {
    const auto mu = g1(0, 4), nu = g1(0, 1);
    Eigen::VectorXd quarter(5);
    quarter << 0, 0.25, 0.5, 0.75, 1;
    CHECK(oriented_length(mu, nu, quarter) == Approx(1.0).margin(1e-9));
    Eigen::VectorXd trivial(2);
    trivial << 0, 1;
    const double l2 = oriented_length(mu, nu, trivial);
    Eigen::VectorXd eighth(9);
    for (int k = 0; k <= 8; ++k) eighth(k) = k / 8.0;
    CHECK(std::abs(oriented_length(mu, nu, eighth) - l2) <= 1e-9);
}

TEST_CASE("oriented_length: non-geodesic paths are longer", "[geodesic][mc]") {
    // Compare the geodesic's length with a detour through a wide law
    const auto mu = g1(0, 4), nu = g1(0, 1);
    const double direct = std::sqrt(t2bar_gaussian(mu, nu).value);
    const auto detour = g1(3, 2);
    const double viaDetour = std::sqrt(t2bar_gaussian(mu, detour).value) +
                             std::sqrt(t2bar_gaussian(detour, nu).value);
    CHECK(viaDetour >= direct - 1e-10);
}

// ===========================================================================
// action bound, measurability, backward law, transfer
// ===========================================================================

TEST_CASE("action_lower_bound_check: random drift fixtures", "[geodesic][mc]") {
    const auto mu = g2(0, 0, 1, 2);
    for (std::uint64_t seed : {1ull, 2ull, 3ull, 4ull, 5ull}) {
        const auto rep = action_lower_bound_check(mu, 4, 400, seed);
        CHECK(rep.ok);
    }
}

TEST_CASE("action_lower_bound_check: martingale-only and pure-shift processes",
          "[geodesic][mc]") {
    const auto mu = g2(0, 0, 1, 1);
    {  // zero drift: terminal law dominates mu, estimate near zero
        const auto rep = action_lower_bound_check(mu, 3, 400, 11, 0.0, 0.7);
        CHECK(rep.action == Approx(0.0).margin(1e-12));
        CHECK(rep.estimate <= rep.tolerance);
    }
    {  // no martingale, drift only: the bound is saturated up to MC noise
        const auto rep = action_lower_bound_check(mu, 3, 400, 12, 1.0, 0.0);
        CHECK(rep.estimate <= rep.action + rep.tolerance);
        CHECK(rep.estimate >= rep.action - 3.0 * rep.tolerance);
    }
}

TEST_CASE("drift_measurability_check: exact vanishing on the fixtures", "[geodesic]") {
    {
        const auto mu = g1(0, 4), nu = g1(0, 1);
        const auto rep = t2bar_gaussian(mu, nu);
        const auto dm = drift_measurability_check(mu, nu, rep, 0.5);
        CHECK(dm.ok);
        CHECK(std::abs(dm.conditionalTrace) <= 1e-10);
    }
    {
        // A = I: the drift is zero, trivially measurable
        const auto mu = g1(0, 1), nu = g1(0, 4);
        const auto rep = t2bar_gaussian(mu, nu);
        CHECK(drift_measurability_check(mu, nu, rep, 0.3).ok);
    }
    {
        const auto mu = g2(0, 0, 4, 1), nu = g2(1, 0, 1, 4);
        const auto rep = t2bar_gaussian(mu, nu);
        for (int k = 1; k <= 9; ++k)
            CHECK(std::abs(drift_measurability_check(mu, nu, rep, 0.1 * k).conditionalTrace) <=
                  1e-10);
    }
}

TEST_CASE("backward_along_path_check: endpoints and the 1D midpoint", "[geodesic]") {
    const auto mu = g1(0, 1), nu = g1(0, 4);
    const auto rep = t2bar_gaussian(mu, nu);
    CHECK(backward_along_path_check(mu, nu, rep, 0.0).ok);
    CHECK(backward_along_path_check(mu, nu, rep, 1.0).ok);
    const auto mid = backward_along_path_check(mu, nu, rep, 0.5);
    CHECK(mid.ok);
    CHECK(mid.expected(0, 0) == Approx(2.5));
    CHECK(mid.computed(0, 0) == Approx(2.5).margin(1e-9));
}

TEST_CASE("backward_along_path_check: 2D running example across times", "[geodesic]") {
    const auto mu = g2(0, 0, 4, 1), nu = g2(1, 0, 1, 4);
    const auto rep = t2bar_gaussian(mu, nu);
    for (double s : {0.0, 0.25, 0.5, 0.75, 1.0})
        CHECK(backward_along_path_check(mu, nu, rep, s).ok);
}

TEST_CASE("martingale_transfer_check: degenerate, identity, and mixed brackets",
          "[geodesic][mc]") {
    {
        // nuTilde = mu case: the transferred martingale is constant
        const auto mu = g1(0, 4), nu = g1(0, 1);
        const auto rep = t2bar_gaussian(mu, nu);
        const auto mt = martingale_transfer_check(mu, nu, rep, 4000, 3);
        CHECK_FALSE(mt.skipped);
        CHECK(mt.ok);
    }
    {
        // A = I: the transfer is the identity
        const auto mu = g1(0, 1), nu = g1(0, 4);
        const auto rep = t2bar_gaussian(mu, nu);
        const auto mt = martingale_transfer_check(mu, nu, rep, 4000, 5);
        CHECK_FALSE(mt.skipped);
        CHECK(mt.ok);
    }
    {
        // running example: bracket diag(0, 3), transfer along e2 only
        const auto mu = g2(0, 0, 4, 1), nu = g2(1, 0, 1, 4);
        const auto rep = t2bar_gaussian(mu, nu);
        const auto mt = martingale_transfer_check(mu, nu, rep, 6000, 7);
        CHECK_FALSE(mt.skipped);
        CHECK(mt.ok);
    }
}

TEST_CASE("optimal coupling along the path: conditional cost matches the solver",
          "[geodesic][mc]") {
    // E |E[X_t - X_s | X_s]|^2 estimated by linear regression on paired
    // samples equals T2bar(mu_t | mu_s) up to MC noise (the truth is linear)
    const auto mu = g1(0, 4), nu = g1(0, 1);
    const auto rep = t2bar_gaussian(mu, nu);
    Eigen::VectorXd times(4);
    times << 0, 0.25, 0.75, 1;
    const int n = 20000;
    const auto ens = simulate(mu, nu, rep, times, n, 21);
    const Eigen::MatrixXd xs = ens.slice(1), xt = ens.slice(2);
    // regress (xt - xs) on xs
    const double msx = xs.col(0).mean();
    const double msd = (xt - xs).col(0).mean();
    double cov = 0, var = 0;
    for (int p = 0; p < n; ++p) {
        cov += (xs(p, 0) - msx) * ((xt(p, 0) - xs(p, 0)) - msd);
        var += std::pow(xs(p, 0) - msx, 2);
    }
    const double slope = cov / var;
    double cost = 0;
    for (int p = 0; p < n; ++p)
        cost += std::pow(msd + slope * (xs(p, 0) - msx), 2);
    cost /= n;
    const auto laws = geodesic_law_gaussian(mu, nu, rep, 0.25).gaussian();
    const auto lawt = geodesic_law_gaussian(mu, nu, rep, 0.75).gaussian();
    const double expect = t2bar_gaussian(laws, lawt).value;
    CHECK(cost == Approx(expect).margin(mc_tolerance(n, 4.0)));
}
