#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barytrans/gaussian.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/numerics/rng.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

/// Monte Carlo tolerance C / sqrt(n): the constant was calibrated once on the
/// 1D fixture mu = N(0,4), nu = N(0,1) (largest observed deviation times a
/// safety factor of three).
constexpr double kMcToleranceC = 9.0;

inline double mc_tolerance(int n, double scale = 1.0) {
    return kMcToleranceC * scale / std::sqrt(static_cast<double>(n));
}

/// Marginal law of the optimal process at time t:
///     X_t = (1-t) X_0 + t grad phi(X_0) + S B_t,   S = (Sigma_nu - sigmaBar)^{1/2},
/// so mean m_mu + t (m_nu - m_mu) and covariance C_t Sigma_mu C_t^T + t S S^T
/// with C_t = (1-t) I + t A.
struct GeodesicLaw {
    double t;
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;

    GaussianMeasure gaussian() const { return GaussianMeasure(mean, cov); }
};

inline GeodesicLaw geodesic_law_gaussian(const GaussianMeasure& mu, const GaussianMeasure& nu,
                                         const GaussianSolveReport& report, double t) {
    if (t < 0.0 || t > 1.0) throw std::invalid_argument("geodesic_law_gaussian: t outside [0,1]");
    const int d = mu.dim();
    const Eigen::MatrixXd ct =
        (1.0 - t) * Eigen::MatrixXd::Identity(d, d) + t * report.A;
    Eigen::MatrixXd cov = ct * mu.cov() * ct.transpose() + t * (nu.cov() - report.sigmaBar);
    cov = 0.5 * (cov + cov.transpose());
    GeodesicLaw law;
    law.t = t;
    law.mean = mu.mean() + t * (nu.mean() - mu.mean());
    law.cov = cov;
    return law;
}

inline GeodesicLaw geodesic_law_gaussian(const GaussianMeasure& mu, const GaussianMeasure& nu,
                                         double t) {
    return geodesic_law_gaussian(mu, nu, t2bar_gaussian(mu, nu), t);
}

/// Sampled trajectories of the optimal process. Paths are sharded one rng
/// stream each, so the ensemble is reproducible and mergeable across workers.
struct PathEnsemble {
    Eigen::VectorXd times;
    std::vector<Eigen::MatrixXd> paths;  // one (times x d) block per path
    std::uint64_t seed = 0;

    int dim() const { return paths.empty() ? 0 : static_cast<int>(paths[0].cols()); }

    /// Positions of every path at time index k, as an (n x d) matrix.
    Eigen::MatrixXd slice(int k) const {
        Eigen::MatrixXd out(static_cast<int>(paths.size()), dim());
        for (std::size_t p = 0; p < paths.size(); ++p) out.row(static_cast<int>(p)) = paths[p].row(k);
        return out;
    }
};

inline PathEnsemble simulate(const GaussianMeasure& mu, const GaussianMeasure& nu,
                             const GaussianSolveReport& report, const Eigen::VectorXd& times,
                             int n, std::uint64_t seed) {
    if (n < 1) throw std::invalid_argument("simulate: n >= 1 required");
    for (int k = 0; k + 1 < times.size(); ++k)
        if (times(k + 1) <= times(k)) throw std::invalid_argument("simulate: times not increasing");
    if (times.size() < 1 || times(0) != 0.0 || times(times.size() - 1) != 1.0)
        throw std::invalid_argument("simulate: times must run from 0 to 1");

    const int d = mu.dim();
    const Eigen::MatrixXd rootMu = psd_sqrt(mu.cov());
    Eigen::MatrixXd mart = nu.cov() - report.sigmaBar;
    const Eigen::MatrixXd s = psd_sqrt(0.5 * (mart + mart.transpose()));

    PathEnsemble ens;
    ens.times = times;
    ens.seed = seed;
    ens.paths.reserve(n);
    for (int p = 0; p < n; ++p) {
        RngStream rng(seed, static_cast<std::uint64_t>(p));
        const Eigen::VectorXd x0 = mu.mean() + rootMu * rng.gaussian_vector(d);
        const Eigen::VectorXd drift = nu.mean() + report.A * (x0 - mu.mean()) - x0;
        Eigen::MatrixXd path(times.size(), d);
        Eigen::VectorXd brownian = Eigen::VectorXd::Zero(d);
        for (int k = 0; k < times.size(); ++k) {
            if (k > 0) {
                const double dt = times(k) - times(k - 1);
                brownian += std::sqrt(dt) * rng.gaussian_vector(d);
            }
            path.row(k) = (x0 + times(k) * drift + s * brownian).transpose();
        }
        ens.paths.push_back(std::move(path));
    }
    return ens;
}

enum class CheckMode { ClosedForm, Empirical };

struct ScalingReport {
    double lhs = 0.0;  // solver value between interpolated laws
    double rhs = 0.0;  // (t-s)^2 * end-to-end value
    double error = 0.0;
    double tolerance = 0.0;
    bool ok = false;
};

/// Restriction property of the geodesic: T2bar(mu_t | mu_s) = (t-s)^2
/// T2bar(nu | mu). Closed-form mode compares Gaussian solver values exactly;
/// empirical mode samples both laws and runs the discrete solver.
inline ScalingReport scaling_check(const GaussianMeasure& mu, const GaussianMeasure& nu,
                                   double s, double t, CheckMode mode = CheckMode::ClosedForm,
                                   int n = 500, std::uint64_t seed = 0, double tol = 1e-8) {
    if (!(0.0 <= s && s <= t && t <= 1.0))
        throw std::invalid_argument("scaling_check: need 0 <= s <= t <= 1");
    const GaussianSolveReport base = t2bar_gaussian(mu, nu);
    const GaussianMeasure laws = geodesic_law_gaussian(mu, nu, base, s).gaussian();
    const GaussianMeasure lawt = geodesic_law_gaussian(mu, nu, base, t).gaussian();

    ScalingReport rep;
    rep.rhs = (t - s) * (t - s) * base.value;
    if (mode == CheckMode::ClosedForm) {
        rep.lhs = t2bar_gaussian(laws, lawt).value;
        rep.tolerance = tol * (1.0 + rep.rhs);
    } else {
        RngStream rs(seed, 101), rt(seed, 202);
        const DiscreteMeasure es = empirical_measure(sample(laws, n, rs));
        const DiscreteMeasure et = empirical_measure(sample(lawt, n, rt));
        SolveOptions mcOpts;
        mcOpts.relTol = 1e-2;  // far below Monte Carlo noise
        rep.lhs = t2bar_discrete(es, et, mcOpts).value;
        const double scale = 1.0 + std::sqrt(mu.cov().norm()) + std::sqrt(nu.cov().norm());
        rep.tolerance = mc_tolerance(n, scale * scale);
    }
    rep.error = std::abs(rep.lhs - rep.rhs);
    rep.ok = rep.error <= rep.tolerance;
    return rep;
}

/// Oriented length along the geodesic: sum over the subdivision of
/// sqrt(T2bar(mu_{t_{i+1}} | mu_{t_i})). Telescopes to sqrt(T2bar(nu|mu))
/// independently of the subdivision.
inline double oriented_length(const GaussianMeasure& mu, const GaussianMeasure& nu,
                              const Eigen::VectorXd& subdivision,
                              CheckMode mode = CheckMode::ClosedForm, int n = 500,
                              std::uint64_t seed = 0) {
    for (int k = 0; k + 1 < subdivision.size(); ++k)
        if (subdivision(k + 1) <= subdivision(k))
            throw std::invalid_argument("oriented_length: subdivision not increasing");
    if (subdivision.size() < 2 || subdivision(0) != 0.0 ||
        subdivision(subdivision.size() - 1) != 1.0)
        throw std::invalid_argument("oriented_length: subdivision must run from 0 to 1");

    const GaussianSolveReport base = t2bar_gaussian(mu, nu);
    double len = 0.0;
    for (int k = 0; k + 1 < subdivision.size(); ++k) {
        const GaussianMeasure a =
            geodesic_law_gaussian(mu, nu, base, subdivision(k)).gaussian();
        const GaussianMeasure b =
            geodesic_law_gaussian(mu, nu, base, subdivision(k + 1)).gaussian();
        double seg;
        if (mode == CheckMode::ClosedForm) {
            seg = t2bar_gaussian(a, b).value;
        } else {
            RngStream ra(seed, 1000 + static_cast<std::uint64_t>(k));
            RngStream rb(seed, 2000 + static_cast<std::uint64_t>(k));
            SolveOptions mcOpts;
            mcOpts.relTol = 1e-2;
            seg = t2bar_discrete(empirical_measure(sample(a, n, ra)),
                                 empirical_measure(sample(b, n, rb)), mcOpts)
                      .value;
        }
        len += std::sqrt(std::max(seg, 0.0));
    }
    return len;
}

struct ActionBoundReport {
    double action = 0.0;       // E int |v|^2 dt, exact
    double estimate = 0.0;     // empirical T2bar(terminal | mu)
    double tolerance = 0.0;
    bool ok = false;
};

/// Lower-bound half of the dynamic formulation: for any admissible process
/// dX = v dt + dM started at mu, T2bar(law(X_1) | mu) <= E int |v|^2 dt.
/// Processes are piecewise-constant drifts v_k = a_k X_0 + c_k plus Gaussian
/// martingale increments; the terminal law is sampled and fed to the
/// discrete solver.
inline ActionBoundReport action_lower_bound_check(const GaussianMeasure& mu, int nIntervals,
                                                  int n, std::uint64_t seed,
                                                  double driftScale = 1.0,
                                                  double martScale = 0.5) {
    const int d = mu.dim();
    RngStream cfg(seed, 7001);
    std::vector<double> alphas(nIntervals), vols(nIntervals);
    std::vector<Eigen::VectorXd> shifts(nIntervals);
    for (int k = 0; k < nIntervals; ++k) {
        alphas[k] = cfg.next_uniform(-driftScale, driftScale);
        vols[k] = cfg.next_uniform(0.0, martScale);
        shifts[k] = Eigen::VectorXd::NullaryExpr(
            d, [&](Eigen::Index) { return cfg.next_uniform(-driftScale, driftScale); });
    }
    const double dt = 1.0 / nIntervals;

    // exact action: E |a_k X_0 + c_k|^2 summed over intervals
    const double ex2 = mu.cov().trace() + mu.mean().squaredNorm();
    double action = 0.0;
    for (int k = 0; k < nIntervals; ++k)
        action += dt * (alphas[k] * alphas[k] * ex2 +
                        2.0 * alphas[k] * shifts[k].dot(mu.mean()) + shifts[k].squaredNorm());

    const Eigen::MatrixXd rootMu = psd_sqrt(mu.cov());
    Eigen::MatrixXd x0s(n, d), x1s(n, d);
    for (int p = 0; p < n; ++p) {
        RngStream rng(seed, 9000 + static_cast<std::uint64_t>(p));
        const Eigen::VectorXd x0 = mu.mean() + rootMu * rng.gaussian_vector(d);
        Eigen::VectorXd x = x0;
        for (int k = 0; k < nIntervals; ++k) {
            x += dt * (alphas[k] * x0 + shifts[k]);
            x += vols[k] * std::sqrt(dt) * rng.gaussian_vector(d);
        }
        x0s.row(p) = x0.transpose();
        x1s.row(p) = x.transpose();
    }
    ActionBoundReport rep;
    rep.action = action;
    SolveOptions mcOpts;
    mcOpts.relTol = 1e-2;
    rep.estimate =
        t2bar_discrete(empirical_measure(x0s), empirical_measure(x1s), mcOpts).value;
    const double scale = 1.0 + ex2;
    rep.tolerance = mc_tolerance(n, scale);
    rep.ok = rep.estimate <= rep.action + rep.tolerance;
    return rep;
}

struct DriftMeasurabilityReport {
    double conditionalTrace = 0.0;
    bool ok = false;
};

/// sigma(X_t)-measurability of the drift: the conditional covariance of
/// U = (I - A)(X_0 - m_mu) given X_t vanishes. Verified through the joint
/// Gaussian Schur complement, with a pseudo-inverse on the range of
/// Cov(X_t).
inline DriftMeasurabilityReport drift_measurability_check(const GaussianMeasure& mu,
                                                          const GaussianMeasure& nu,
                                                          const GaussianSolveReport& report,
                                                          double t, double tol = 1e-8) {
    if (t < 0.0 || t >= 1.0)
        throw std::invalid_argument("drift_measurability_check: t in [0,1) required");
    const int d = mu.dim();
    const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(d, d);
    const Eigen::MatrixXd ia = eye - report.A;
    const Eigen::MatrixXd ct = (1.0 - t) * eye + t * report.A;
    const Eigen::MatrixXd su = ia * mu.cov() * ia.transpose();
    const Eigen::MatrixXd sux = ia * mu.cov() * ct.transpose();
    Eigen::MatrixXd sx = ct * mu.cov() * ct.transpose() + t * (nu.cov() - report.sigmaBar);
    sx = 0.5 * (sx + sx.transpose());
    const Eigen::MatrixXd cond = su - sux * sym_pinv(sx) * sux.transpose();
    DriftMeasurabilityReport rep;
    rep.conditionalTrace = cond.trace();
    rep.ok = std::abs(rep.conditionalTrace) <= tol * (1.0 + su.trace());
    return rep;
}

struct BackwardPathReport {
    Eigen::MatrixXd expected;  // sigmaBar + s (Sigma_nu - sigmaBar)
    Eigen::MatrixXd computed;  // projection covariance of mu_s on nu
    double error = 0.0;
    bool ok = false;
};

/// Law of the martingale part at time s: M_s is distributed as the backward
/// projection of mu_s on nu, namely N(m_nu, sigmaBar + s (Sigma_nu - sigmaBar)).
inline BackwardPathReport backward_along_path_check(const GaussianMeasure& mu,
                                                    const GaussianMeasure& nu,
                                                    const GaussianSolveReport& report, double s,
                                                    double tol = 1e-8) {
    if (s < 0.0 || s > 1.0)
        throw std::invalid_argument("backward_along_path_check: s in [0,1] required");
    BackwardPathReport rep;
    rep.expected = report.sigmaBar + s * (nu.cov() - report.sigmaBar);
    const GaussianMeasure laws = geodesic_law_gaussian(mu, nu, report, s).gaussian();
    const GaussianSolveReport proj = t2bar_gaussian(laws, nu);
    rep.computed = proj.sigmaBar;
    rep.error = (rep.computed - rep.expected).norm() +
                (proj.projection.mean() - nu.mean()).norm();
    rep.ok = rep.error <= tol * (1.0 + rep.expected.norm());
    return rep;
}

struct MartingaleTransferReport {
    bool skipped = false;    // bracket not PSD (fixture does not apply)
    std::string detail;
    double worstMomentError = 0.0;  // endpoint law moments, z-scored by MC tol
    double worstIncrementCorr = 0.0;
    double tolerance = 0.0;
    bool ok = false;
};

/// Transfer of martingales between the two projection problems: if N runs
/// from mu to the forward projection nuTilde, then grad phi(N) runs from
/// muBar to nu (and conversely through grad phi^*). Verified on sampled
/// paths: endpoint moments match and increments are uncorrelated with the
/// current state.
inline MartingaleTransferReport martingale_transfer_check(const GaussianMeasure& mu,
                                                          const GaussianMeasure& nu,
                                                          const GaussianSolveReport& report,
                                                          int n, std::uint64_t seed,
                                                          double tolScale = 1.0) {
    MartingaleTransferReport rep;
    SymEig ea = sym_eig(report.A);
    if (ea.lambda.minCoeff() <= 1e-9) {
        rep.skipped = true;
        rep.detail = "A singular: forward projection unavailable";
        return rep;
    }
    const Eigen::MatrixXd ainv =
        ea.Q * ea.lambda.cwiseInverse().asDiagonal() * ea.Q.transpose();
    Eigen::MatrixXd bracket = ainv * nu.cov() * ainv - mu.cov();
    bracket = 0.5 * (bracket + bracket.transpose());
    const double scale = 1.0 + nu.cov().norm();
    const double minEig = min_eigenvalue(bracket);
    if (minEig < -1e-8 * scale) {
        rep.skipped = true;
        rep.detail = "bracket Cov(nuTilde) - Cov(mu) not PSD";
        return rep;
    }
    const Eigen::MatrixXd sroot = psd_sqrt(bracket - std::min(minEig, 0.0) *
                                                         Eigen::MatrixXd::Identity(mu.dim(), mu.dim()));

    const int d = mu.dim();
    const Eigen::MatrixXd rootMu = psd_sqrt(mu.cov());
    Eigen::MatrixXd m0(n, d), mHalf(n, d), m1(n, d);
    for (int p = 0; p < n; ++p) {
        RngStream rng(seed, 4000 + static_cast<std::uint64_t>(p));
        const Eigen::VectorXd x0 = mu.mean() + rootMu * rng.gaussian_vector(d);
        const Eigen::VectorXd bHalf = std::sqrt(0.5) * rng.gaussian_vector(d);
        const Eigen::VectorXd b1 = bHalf + std::sqrt(0.5) * rng.gaussian_vector(d);
        auto gradPhi = [&](const Eigen::VectorXd& x) {
            return (nu.mean() + report.A * (x - mu.mean())).eval();
        };
        m0.row(p) = gradPhi(x0).transpose();
        mHalf.row(p) = gradPhi(x0 + sroot * bHalf).transpose();
        m1.row(p) = gradPhi(x0 + sroot * b1).transpose();
    }

    const double tolMc = mc_tolerance(n, tolScale * (1.0 + std::sqrt(scale)));
    rep.tolerance = tolMc;

    auto momentError = [&](const Eigen::MatrixXd& samples, const Eigen::VectorXd& mean,
                           const Eigen::MatrixXd& cov) {
        const Eigen::VectorXd sm = samples.colwise().mean();
        Eigen::MatrixXd centered = samples.rowwise() - sm.transpose();
        const Eigen::MatrixXd sc = centered.transpose() * centered / samples.rows();
        return std::max((sm - mean).cwiseAbs().maxCoeff(), (sc - cov).cwiseAbs().maxCoeff());
    };
    rep.worstMomentError =
        std::max(momentError(m0, nu.mean(), report.sigmaBar), momentError(m1, nu.mean(), nu.cov()));

    // martingale property: increments uncorrelated with the current state
    const Eigen::MatrixXd inc = m1 - mHalf;
    const Eigen::VectorXd incMean = inc.colwise().mean();
    const Eigen::VectorXd stateMean = mHalf.colwise().mean();
    for (int i = 0; i < d; ++i)
        for (int j = 0; j < d; ++j) {
            double cov = 0.0, vInc = 0.0, vSt = 0.0;
            for (int p = 0; p < n; ++p) {
                const double a = inc(p, i) - incMean(i);
                const double b = mHalf(p, j) - stateMean(j);
                cov += a * b;
                vInc += a * a;
                vSt += b * b;
            }
            if (vInc > 0 && vSt > 0)
                rep.worstIncrementCorr =
                    std::max(rep.worstIncrementCorr,
                             std::abs(cov / std::sqrt(vInc * vSt)));
        }

    const double corrTol = 4.0 / std::sqrt(static_cast<double>(n));
    rep.ok = rep.worstMomentError <= tolMc && rep.worstIncrementCorr <= corrTol;
    return rep;
}

}  // namespace barytrans
