#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <functional>
#include <future>
#include <sstream>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barytrans/duality.hpp"
#include "barytrans/gaussian.hpp"
#include "barytrans/geodesic.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/paving.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

struct CriterionResult {
    int id = 0;
    std::string name;
    bool passed = false;
    std::string detail;
    double seconds = 0.0;
};

namespace acceptance {

inline GaussianMeasure gauss1d(double mean, double var) {
    Eigen::VectorXd m(1);
    m << mean;
    Eigen::MatrixXd c(1, 1);
    c << var;
    return GaussianMeasure(m, c);
}

inline GaussianMeasure gauss_diag(const Eigen::VectorXd& mean, const Eigen::VectorXd& vars) {
    return GaussianMeasure(mean, Eigen::MatrixXd(vars.asDiagonal()));
}

/// Random orthogonal matrix from the eigenvectors of a random symmetric
/// matrix (keeps the acceptance suite on the library's own plumbing).
inline Eigen::MatrixXd random_orthogonal(int d, RngStream& rng) {
    Eigen::MatrixXd g(d, d);
    for (int i = 0; i < d; ++i) g.col(i) = rng.gaussian_vector(d);
    return sym_eig(0.5 * (g + g.transpose())).Q;
}

inline DiscreteMeasure random_discrete(int n, int d, RngStream& rng, double spread = 2.0) {
    Eigen::MatrixXd pts(n, d);
    Eigen::VectorXd w(n);
    for (int i = 0; i < n; ++i) {
        pts.row(i) = (spread * rng.gaussian_vector(d)).transpose();
        w(i) = rng.next_uniform(0.2, 1.0);
    }
    return DiscreteMeasure::from_unnormalized(std::move(pts), std::move(w));
}

// --- criterion 1: diagonal closed form via the projected-gradient path -----
inline CriterionResult gaussian_closed_form(std::uint64_t seed) {
    CriterionResult r{1, "gaussian-closed-form-vs-projected-gradient"};
    double worstErr = 0.0, worstSec = 0.0;
    for (int k = 0; k < 20; ++k) {
        RngStream rng(seed, 100 + k);
        const int d = 1 + rng.next_index(6);
        Eigen::VectorXd m1 = rng.gaussian_vector(d), m2 = rng.gaussian_vector(d);
        Eigen::VectorXd v1(d), v2(d);
        for (int i = 0; i < d; ++i) {
            v1(i) = std::pow(rng.next_uniform(0.3, 2.5), 2);
            v2(i) = std::pow(rng.next_uniform(0.3, 2.5), 2);
        }
        double expected = (m2 - m1).squaredNorm();
        for (int i = 0; i < d; ++i) {
            const double def = std::sqrt(v1(i)) - std::sqrt(v2(i));
            if (def > 0) expected += def * def;
        }
        GaussianSolveOptions opts;
        opts.method = GaussianMethod::ProjectedGradient;
        const auto t0 = std::chrono::steady_clock::now();
        const auto rep = t2bar_gaussian(gauss_diag(m1, v1), gauss_diag(m2, v2), opts);
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worstSec = std::max(worstSec, sec);
        worstErr = std::max(worstErr, std::abs(rep.value - expected) / (1.0 + std::abs(expected)));
    }
    r.passed = worstErr <= 1e-5 && worstSec < 1.0;
    std::ostringstream os;
    os << "worst rel err " << worstErr << ", worst time " << worstSec << "s";
    r.detail = os.str();
    return r;
}

// --- criterion 2: commuting covariances, joint-diagonal closed form --------
inline CriterionResult commuting_case(std::uint64_t seed) {
    CriterionResult r{2, "commuting-sigma-bar"};
    double worst = 0.0;
    for (int k = 0; k < 20; ++k) {
        RngStream rng(seed, 200 + k);
        const int d = 1 + rng.next_index(6);
        const Eigen::MatrixXd q = random_orthogonal(d, rng);
        Eigen::VectorXd l1(d), l2(d);
        for (int i = 0; i < d; ++i) {
            l1(i) = std::pow(rng.next_uniform(0.3, 2.5), 2);
            l2(i) = std::pow(rng.next_uniform(0.3, 2.5), 2);
        }
        Eigen::MatrixXd c1 = q * l1.asDiagonal() * q.transpose();
        Eigen::MatrixXd c2 = q * l2.asDiagonal() * q.transpose();
        GaussianMeasure mu(rng.gaussian_vector(d), 0.5 * (c1 + c1.transpose()));
        GaussianMeasure nu(rng.gaussian_vector(d), 0.5 * (c2 + c2.transpose()));
        const auto rep = t2bar_gaussian(mu, nu);
        const Eigen::MatrixXd expected = q * l1.cwiseMin(l2).asDiagonal() * q.transpose();
        worst = std::max(worst, (rep.sigmaBar - expected).norm() / (1.0 + expected.norm()));
    }
    r.passed = worst <= 1e-5;
    std::ostringstream os;
    os << "worst rel Frobenius err " << worst;
    r.detail = os.str();
    return r;
}

// --- criterion 3: 2x2 fixture against a one-parameter brute force ----------
inline CriterionResult discrete_vs_brute_force() {
    CriterionResult r{3, "discrete-fixture-vs-brute-force"};
    const auto mu = DiscreteMeasure::line({0, 1}, {0.5, 0.5});
    const auto nu = DiscreteMeasure::line({0, 2}, {0.5, 0.5});

    // plans pi = [[a, 1/2-a], [1/2-a, a]]; scan the segment, then refine the
    // quadratic objective exactly through three points
    auto objective = [](double a) {
        const double b0 = 2.0 * (1.0 - 2.0 * a);  // barycenter of atom 0
        const double b1 = 4.0 * a;                // barycenter of atom 1
        return 0.5 * b0 * b0 + 0.5 * (1.0 - b1) * (1.0 - b1);
    };
    double bestA = 0.0, bestF = objective(0.0);
    for (int k = 1; k <= 5000; ++k) {
        const double a = 0.5 * k / 5000.0;
        const double f = objective(a);
        if (f < bestF) { bestF = f; bestA = a; }
    }
    {  // parabola through (a-h, a, a+h) is exact for a quadratic
        const double h = 0.5 / 5000.0;
        const double fm = objective(bestA - h), f0 = objective(bestA), fp = objective(bestA + h);
        const double denom = fm - 2.0 * f0 + fp;
        if (denom > 0) {
            const double shift = 0.5 * h * (fm - fp) / denom;
            const double a = std::clamp(bestA + shift, 0.0, 0.5);
            if (objective(a) < bestF) { bestF = objective(a); bestA = a; }
        }
    }

    const auto rep = t2bar_discrete(mu, nu);
    const bool valueOk = std::abs(rep.value - bestF) <= 1e-6;
    const bool projOk = MartingaleKernel::measures_close(
        rep.projection, DiscreteMeasure::line({0.5, 1.5}, {0.5, 0.5}), 1e-6);
    const auto fbar = potential_from_report(rep, mu, nu);
    const double gap = dual_gap(fbar, mu, nu, rep.value);
    const bool gapOk = std::abs(gap) <= 1e-6;
    r.passed = valueOk && projOk && gapOk;
    std::ostringstream os;
    os << "brute force value " << bestF << " (a*=" << bestA << "), solver " << rep.value
       << ", dual gap " << gap;
    r.detail = os.str();
    return r;
}

// --- criterion 4: strong duality on random instances -----------------------
inline CriterionResult random_strong_duality(std::uint64_t seed) {
    CriterionResult r{4, "random-strong-duality"};
    double worstGap = 0.0, worstDual = 0.0;
    for (int k = 0; k < 30; ++k) {
        RngStream rng(seed, 400 + k);
        const int d = 1 + rng.next_index(2);
        const auto mu = random_discrete(2 + rng.next_index(4), d, rng);
        const auto nu = random_discrete(2 + rng.next_index(4), d, rng);
        SolveOptions opts;
        opts.tol = 1e-10;  // drives fwGap well below the 1e-7 criterion
        opts.maxIter = 500000;
        const auto rep = t2bar_discrete(mu, nu, opts);
        worstGap = std::max(worstGap, rep.fwGap);
        const auto fbar = potential_from_report(rep, mu, nu);
        const double gap = dual_gap(fbar, mu, nu, rep.value);
        worstDual = std::max(worstDual, gap / (1.0 + rep.value));
    }
    r.passed = worstGap <= 1e-7 && worstDual <= 1e-5;
    std::ostringstream os;
    os << "worst fwGap " << worstGap << ", worst scaled dual gap " << worstDual;
    r.detail = os.str();
    return r;
}

// --- criterion 5: backward projection characterization ---------------------
inline CriterionResult projection_characterization(std::uint64_t seed) {
    CriterionResult r{5, "projection-characterization"};
    double worst = 0.0;
    bool orderOk = true;
    auto checkInstance = [&](const DiscreteMeasure& mu, const DiscreteMeasure& nu) {
        SolveOptions opts;
        opts.tol = 1e-9;
        opts.maxIter = 500000;
        const auto rep = t2bar_discrete(mu, nu, opts);
        const auto co = check_convex_order(rep.projection, nu, 1e-7);
        if (!co.dominated) orderOk = false;
        const double w2 = w2_discrete(mu, rep.projection).value;
        worst = std::max(worst, std::abs(w2 - rep.value));
    };
    checkInstance(DiscreteMeasure::line({0, 1}, {0.5, 0.5}),
                  DiscreteMeasure::line({0, 2}, {0.5, 0.5}));
    for (int k = 0; k < 12; ++k) {
        RngStream rng(seed, 500 + k);
        const int d = 1 + rng.next_index(2);
        checkInstance(random_discrete(2 + rng.next_index(4), d, rng),
                      random_discrete(2 + rng.next_index(4), d, rng));
    }
    r.passed = orderOk && worst <= 1e-5;
    std::ostringstream os;
    os << "convex order " << (orderOk ? "witnessed" : "FAILED") << ", worst |W2^2 - value| "
       << worst;
    r.detail = os.str();
    return r;
}

// --- criterion 6: forward projections ---------------------------------------
inline CriterionResult forward_projections() {
    CriterionResult r{6, "forward-projection-identity"};
    double worst = 0.0;
    {
        const auto mu = gauss1d(0, 1), nu = gauss1d(0, 4);
        worst = std::max(worst, forward_projection_gaussian(mu, nu, t2bar_gaussian(mu, nu)).residual);
    }
    {
        const auto mu = gauss1d(0, 4), nu = gauss1d(0, 1);
        worst = std::max(worst, forward_projection_gaussian(mu, nu, t2bar_gaussian(mu, nu)).residual);
    }
    {
        Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2), m2(2);
        m2 << 1, 0;
        const auto mu = gauss_diag(m1, Eigen::Vector2d(4, 1));
        const auto nu = gauss_diag(m2, Eigen::Vector2d(1, 4));
        worst = std::max(worst, forward_projection_gaussian(mu, nu, t2bar_gaussian(mu, nu)).residual);
    }
    Eigen::VectorXd grid(41);
    for (int k = 0; k < 41; ++k) grid(k) = -2.0 + 0.1 * k;
    const auto fwd = forward_projection_grid_1d(DiscreteMeasure::line({-1, 1}, {0.5, 0.5}),
                                                DiscreteMeasure::line({0}, {1}), grid);
    const double discreteErr = std::abs(fwd.value - 1.0);
    r.passed = worst <= 1e-8 && discreteErr <= 1e-6;
    std::ostringstream os;
    os << "worst gaussian residual " << worst << ", grid LP |value-1| " << discreteErr;
    r.detail = os.str();
    return r;
}

// --- criterion 7: statistical consistency with the closed form -------------
inline CriterionResult statistical_consistency(std::uint64_t seed) {
    CriterionResult r{7, "statistical-consistency-n2000"};
    Eigen::VectorXd m1 = Eigen::VectorXd::Zero(2), m2(2);
    m2 << 1, 0;
    const auto mu = gauss_diag(m1, Eigen::Vector2d(4, 1));
    const auto nu = gauss_diag(m2, Eigen::Vector2d(1, 4));
    const double target = 2.0;
    double worstErr = 0.0, worstSec = 0.0;
    for (int s = 0; s < 5; ++s) {
        const auto t0 = std::chrono::steady_clock::now();
        RngStream ra(seed + s, 71), rb(seed + s, 72);
        const auto es = empirical_measure(sample(mu, 2000, ra));
        const auto et = empirical_measure(sample(nu, 2000, rb));
        SolveOptions opts;
        opts.relTol = 2e-2;
        opts.maxIter = 3000;
        const auto rep = t2bar_discrete(es, et, opts);
        const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        worstErr = std::max(worstErr, std::abs(rep.value - target) / target);
        worstSec = std::max(worstSec, sec);
    }
    r.passed = worstErr <= 0.15 && worstSec < 60.0;
    std::ostringstream os;
    os << "worst rel err " << worstErr << " (5 seeds), worst time " << worstSec << "s";
    r.detail = os.str();
    return r;
}

// --- criterion 8: geodesic scaling and length -------------------------------
inline CriterionResult geodesic_scaling(std::uint64_t seed) {
    CriterionResult r{8, "geodesic-scaling-and-length"};
    double worstClosed = 0.0;
    const auto mu1 = gauss1d(0, 4), nu1 = gauss1d(0, 1);
    Eigen::VectorXd m2(2);
    m2 << 1, 0;
    const auto mu2 = gauss_diag(Eigen::VectorXd::Zero(2), Eigen::Vector2d(4, 1));
    const auto nu2 = gauss_diag(m2, Eigen::Vector2d(1, 4));
    const double grid[5] = {0.0, 0.25, 0.5, 0.75, 1.0};
    for (int a = 0; a < 5; ++a)
        for (int b = a; b < 5; ++b) {
            worstClosed = std::max(worstClosed,
                                   scaling_check(mu1, nu1, grid[a], grid[b]).error);
            worstClosed = std::max(worstClosed,
                                   scaling_check(mu2, nu2, grid[a], grid[b]).error);
        }
    bool empiricalOk = true;
    for (int s = 0; s < 3; ++s) {
        const auto rep =
            scaling_check(mu1, nu1, 0.25, 0.75, CheckMode::Empirical, 400, seed + s);
        if (!rep.ok) empiricalOk = false;
    }
    // subdivision invariance of the oriented length
    double worstLen = 0.0;
    const double sqrtValue = std::sqrt(t2bar_gaussian(mu1, nu1).value);
    for (int pieces : {1, 2, 4, 8}) {
        Eigen::VectorXd sub(pieces + 1);
        for (int k = 0; k <= pieces; ++k) sub(k) = static_cast<double>(k) / pieces;
        worstLen = std::max(worstLen, std::abs(oriented_length(mu1, nu1, sub) - sqrtValue));
    }
    r.passed = worstClosed <= 1e-8 && empiricalOk && worstLen <= 1e-8;
    std::ostringstream os;
    os << "worst closed-form scaling err " << worstClosed << ", empirical "
       << (empiricalOk ? "ok" : "FAILED") << ", worst length deviation " << worstLen;
    r.detail = os.str();
    return r;
}

// --- criterion 9: paving suite ----------------------------------------------
inline MaxAffineFunction random_max_affine(RngStream& rng, int maxPieces = 6) {
    const int K = 1 + rng.next_index(maxPieces);
    Eigen::MatrixXd a(K, 1);
    Eigen::VectorXd c(K);
    for (int k = 0; k < K; ++k) {
        a(k, 0) = rng.next_uniform(-3.0, 3.0);
        c(k) = rng.next_uniform(-2.0, 2.0);
    }
    return MaxAffineFunction(a, c);
}

inline CriterionResult paving_suite(std::uint64_t seed) {
    CriterionResult r{9, "paving-partition-invariance-reconstruction"};
    std::ostringstream os;
    // partition + subgradient constancy on random functions (cells_1d throws
    // on any internal inconsistency)
    for (int k = 0; k < 50; ++k) {
        RngStream rng(seed, 900 + k);
        const auto f = random_max_affine(rng);
        const auto cells = cells_1d(f);
        for (int probe = 0; probe < 20; ++probe) {
            const double x = rng.next_uniform(-10.0, 10.0);
            cell_of(cells, x);  // throws if the cells fail to partition
        }
    }

    // reconstruct_mu fixtures: alpha anchored in open cells, two-point
    // kernels inside each closed cell, beta the mixture
    bool reconOk = true;
    double worstLeak = 0.0;
    int fixtures = 0;
    for (int k = 0; k < 10 && reconOk; ++k) {
        RngStream rng(seed, 950 + k);
        const auto kf = random_max_affine(rng, 4);
        const auto cells = cells_1d(kf);
        std::vector<double> apts, aws, bpts, bws;
        for (const Cell& cell : cells) {
            if (cell.singleton) continue;
            const double room =
                std::min({cell.anchor - cell.lo, cell.hi - cell.anchor, 1.5});
            const double z = cell.anchor;
            const double spread = rng.next_uniform(0.2, 0.9) * room;
            const double wz = rng.next_uniform(0.2, 1.0);
            apts.push_back(z);
            aws.push_back(wz);
            bpts.push_back(z - spread);
            bws.push_back(wz * 0.5);
            bpts.push_back(z + spread);
            bws.push_back(wz * 0.5);
        }
        if (apts.size() < 2) continue;
        ++fixtures;
        auto normalize = [](std::vector<double>& w) {
            double s = 0.0;
            for (double x : w) s += x;
            for (double& x : w) x /= s;
        };
        normalize(aws);
        normalize(bws);
        const auto alpha = DiscreteMeasure::line(apts, aws);
        const auto beta = DiscreteMeasure::line(bpts, bws);
        try {
            reconstruct_mu(alpha, beta, kf, 3, seed + k);
        } catch (const std::exception& e) {
            reconOk = false;
            os << "reconstruct failed: " << e.what() << "; ";
        }
        const auto inv = invariance_check(kf, alpha, beta, {}, 1e-8, seed + k, 8);
        if (!inv.passed()) reconOk = false;
        worstLeak = std::max(worstLeak, inv.worstLeak);
    }

    // hypothesis violation: max-affine surrogate of x^2 with a strict Jensen gap
    const auto sq = MaxAffineFunction::line({2.0, -2.0, 0.0}, {-1.0, -1.0, 0.0});
    const auto reject = invariance_check(sq, DiscreteMeasure::line({0}, {1}),
                                         DiscreteMeasure::line({-1, 1}, {0.5, 0.5}));
    const bool rejectOk = !reject.hypothesisOk;

    r.passed = reconOk && rejectOk && fixtures >= 5;
    os << fixtures << " reconstruction fixtures, worst kernel leak " << worstLeak
       << ", hypothesis-violation fixture " << (rejectOk ? "rejected" : "NOT rejected");
    r.detail = os.str();
    return r;
}

// --- criterion 10: the 2x2 counterexample -----------------------------------
inline CriterionResult counterexample() {
    CriterionResult r{10, "order-vs-lipschitz-counterexample"};
    const auto rep = order_vs_lipschitz_suite(0.5, 0.5);
    Eigen::MatrixXd expected(2, 2);
    expected << 0.375, -0.25, -0.25, 1.5;
    const double err = (rep.sigmaNu - expected).cwiseAbs().maxCoeff();
    r.passed = rep.passed && err <= 1e-10 && rep.detDiff < 0 && rep.lipschitz &&
               !rep.orderForward && !rep.orderBackward;
    std::ostringstream os;
    os << "sigmaNu err " << err << ", det(diff) " << rep.detDiff << ", lipschitz "
       << rep.lipschitz << ", order " << rep.orderForward << "/" << rep.orderBackward;
    r.detail = os.str();
    return r;
}

// --- criterion 11: drift measurability --------------------------------------
inline CriterionResult drift_measurability(std::uint64_t seed) {
    CriterionResult r{11, "drift-measurability"};
    double worst = 0.0;
    auto run = [&](const GaussianMeasure& mu, const GaussianMeasure& nu) {
        const auto rep = t2bar_gaussian(mu, nu);
        for (int k = 1; k <= 9; ++k) {
            const auto dm = drift_measurability_check(mu, nu, rep, 0.1 * k);
            worst = std::max(worst, std::abs(dm.conditionalTrace));
        }
    };
    run(gauss1d(0, 4), gauss1d(0, 1));
    run(gauss1d(0, 1), gauss1d(0, 4));
    Eigen::VectorXd m2(2);
    m2 << 1, 0;
    run(gauss_diag(Eigen::VectorXd::Zero(2), Eigen::Vector2d(4, 1)),
        gauss_diag(m2, Eigen::Vector2d(1, 4)));
    {
        RngStream rng(seed, 1100);
        const int d = 3;
        Eigen::MatrixXd g1(d, d), g2(d, d);
        for (int i = 0; i < d; ++i) {
            g1.col(i) = rng.gaussian_vector(d);
            g2.col(i) = rng.gaussian_vector(d);
        }
        run(GaussianMeasure(rng.gaussian_vector(d),
                            g1 * g1.transpose() / d + 0.2 * Eigen::MatrixXd::Identity(d, d)),
            GaussianMeasure(rng.gaussian_vector(d),
                            g2 * g2.transpose() / d + 0.2 * Eigen::MatrixXd::Identity(d, d)));
    }
    r.passed = worst <= 1e-8;
    std::ostringstream os;
    os << "worst conditional-covariance trace " << worst;
    r.detail = os.str();
    return r;
}

// --- criterion 12: trace lemma ----------------------------------------------
inline CriterionResult trace_lemma(std::uint64_t seed) {
    CriterionResult r{12, "trace-lemma-diagonal-domination"};
    double worstViolation = -kInf;
    for (int k = 0; k < 100; ++k) {
        RngStream rng(seed, 1200 + k);
        const int d = 1 + rng.next_index(8);
        Eigen::MatrixXd g(d, d);
        for (int i = 0; i < d; ++i) g.col(i) = rng.gaussian_vector(d);
        const Eigen::MatrixXd gamma = g * g.transpose() / d;
        const double lhs = psd_sqrt(gamma).trace();
        double rhs = 0.0;
        for (int i = 0; i < d; ++i) rhs += std::sqrt(std::max(gamma(i, i), 0.0));
        worstViolation = std::max(worstViolation, lhs - rhs);
    }
    r.passed = worstViolation <= 1e-8;
    std::ostringstream os;
    os << "worst Tr(sqrt(G)) - Tr(sqrt(diag G)) = " << worstViolation;
    r.detail = os.str();
    return r;
}

}  // namespace acceptance

/// Runs the whole acceptance suite. Criteria are independent and self-seeded,
/// so they can be dispatched across `threads` workers; results are assembled
/// in criterion order regardless of scheduling.
inline std::vector<CriterionResult> run_acceptance_suite(std::uint64_t seed = 1, int threads = 1) {
    using namespace acceptance;
    std::vector<std::function<CriterionResult()>> tasks = {
        [=] { return gaussian_closed_form(seed); },
        [=] { return commuting_case(seed); },
        [=] { return discrete_vs_brute_force(); },
        [=] { return random_strong_duality(seed); },
        [=] { return projection_characterization(seed); },
        [=] { return forward_projections(); },
        [=] { return statistical_consistency(seed); },
        [=] { return geodesic_scaling(seed); },
        [=] { return paving_suite(seed); },
        [=] { return counterexample(); },
        [=] { return drift_measurability(seed); },
        [=] { return trace_lemma(seed); },
    };

    std::vector<CriterionResult> results(tasks.size());
    auto timed = [&](std::size_t k) {
        const auto t0 = std::chrono::steady_clock::now();
        CriterionResult r;
        try {
            r = tasks[k]();
        } catch (const std::exception& e) {
            r.id = static_cast<int>(k) + 1;
            r.name = "criterion-" + std::to_string(k + 1);
            r.passed = false;
            r.detail = std::string("exception: ") + e.what();
        }
        r.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        return r;
    };

    if (threads <= 1) {
        for (std::size_t k = 0; k < tasks.size(); ++k) results[k] = timed(k);
    } else {
        std::vector<std::future<CriterionResult>> futures;
        futures.reserve(tasks.size());
        std::size_t next = 0;
        while (next < tasks.size() || !futures.empty()) {
            while (next < tasks.size() &&
                   static_cast<int>(futures.size()) < threads) {
                futures.push_back(std::async(std::launch::async, timed, next));
                ++next;
            }
            futures.front().wait();
            CriterionResult r = futures.front().get();
            results[static_cast<std::size_t>(r.id) - 1] = std::move(r);
            futures.erase(futures.begin());
        }
    }
    return results;
}

}  // namespace barytrans
