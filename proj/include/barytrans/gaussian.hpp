#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barytrans/measures.hpp"
#include "barytrans/numerics/eig.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

/// Squared quadratic Wasserstein distance between Gaussians:
/// |m-m'|^2 + Tr(S + S' - 2 (S'^{1/2} S S'^{1/2})^{1/2}).
inline double w2_gaussian(const GaussianMeasure& a, const GaussianMeasure& b) {
    if (a.dim() != b.dim()) throw std::invalid_argument("w2_gaussian: dimension mismatch");
    const Eigen::MatrixXd rb = psd_sqrt(b.cov());
    const Eigen::MatrixXd cross = psd_sqrt(rb * a.cov() * rb);
    const double tr = (a.cov() + b.cov()).trace() - 2.0 * cross.trace();
    return (a.mean() - b.mean()).squaredNorm() + std::max(tr, 0.0);
}

enum class GaussianMethod { Auto, Diagonal, Commuting, ProjectedGradient };

inline const char* to_string(GaussianMethod m) {
    switch (m) {
        case GaussianMethod::Diagonal: return "diagonal";
        case GaussianMethod::Commuting: return "commuting";
        case GaussianMethod::ProjectedGradient: return "projected-gradient";
        default: return "auto";
    }
}

struct GaussianSolveOptions {
    GaussianMethod method = GaussianMethod::Auto;
    double structTol = 1e-10;  // diagonal/commuting detection
    double pgTol = 1e-7;       // projected-gradient residual target
    long maxIter = 50000;
    bool throwOnNonconvergence = false;
    std::vector<double>* objectiveTrace = nullptr;  // accepted-step objectives
};

struct GaussianSolveReport {
    double value = 0.0;
    Eigen::MatrixXd sigmaBar;
    Eigen::MatrixXd A;  // transport map x -> m_nu + A (x - m_mu)
    GaussianMeasure projection = GaussianMeasure::standard(1);
    GaussianMethod method = GaussianMethod::Auto;
    double pgResidual = 0.0;
    long iterations = 0;
    bool converged = true;
};

namespace detail {

inline bool is_diagonal(const Eigen::MatrixXd& s, double tol) {
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    for (int i = 0; i < s.rows(); ++i)
        for (int j = 0; j < s.cols(); ++j)
            if (i != j && std::abs(s(i, j)) > tol * scale) return false;
    return true;
}

inline bool commutes(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b, double tol) {
    const double scale = 1.0 + a.norm() * b.norm();
    return (a * b - b * a).norm() <= tol * scale;
}

/// Joint diagonalization of two commuting symmetric matrices: returns Q with
/// Q^T a Q and Q^T b Q both diagonal. Repeated eigenvalues of `a` are handled
/// by re-diagonalizing `b` inside each eigenspace.
inline Eigen::MatrixXd joint_diagonalizer(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
    SymEig ea = sym_eig(a);
    Eigen::MatrixXd q = ea.Q;
    const int d = static_cast<int>(a.rows());
    const double scale = 1.0 + ea.lambda.cwiseAbs().maxCoeff();
    int start = 0;
    while (start < d) {
        int end = start + 1;
        while (end < d && std::abs(ea.lambda(end) - ea.lambda(start)) <= 1e-9 * scale) ++end;
        if (end - start > 1) {
            const Eigen::MatrixXd block =
                q.middleCols(start, end - start).transpose() * b * q.middleCols(start, end - start);
            SymEig eb = sym_eig(0.5 * (block + block.transpose()));
            q.middleCols(start, end - start) = q.middleCols(start, end - start) * eb.Q;
        }
        start = end;
    }
    return q;
}

/// Objective of the constrained problem in Sigma:
/// F(Sigma) = Tr(Sigma + Sigma_mu - 2 (Sigma_mu^{1/2} Sigma Sigma_mu^{1/2})^{1/2}).
inline double bures_objective(const Eigen::MatrixXd& sigma, const Eigen::MatrixXd& sigmaMu,
                              const Eigen::MatrixXd& rootMu) {
    const Eigen::MatrixXd cross = psd_sqrt(rootMu * sigma * rootMu);
    return sigma.trace() + sigmaMu.trace() - 2.0 * cross.trace();
}

}  // namespace detail

/// Barycentric transport cost between Gaussians:
///     inf over PSD Sigma <= Sigma_nu of W2^2(mu, N(m_nu, Sigma)).
/// Three paths: an elementwise formula when both covariances are diagonal, a
/// joint-diagonalization formula when they commute, and in general projected
/// gradient over {0 <= T <= I} after the substitution
/// Sigma = Sigma_nu^{1/2} T Sigma_nu^{1/2}, for which eigenvalue clamping is
/// the exact Frobenius projection. The matrix-square-root gradient uses the
/// spectral derivative with an eigenvalue cutoff.
inline GaussianSolveReport t2bar_gaussian(const GaussianMeasure& mu, const GaussianMeasure& nu,
                                          const GaussianSolveOptions& opts = {}) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("t2bar_gaussian: dimension mismatch");
    const int d = mu.dim();
    const Eigen::MatrixXd& smu = mu.cov();
    const Eigen::MatrixXd& snu = nu.cov();
    const double dm2 = (nu.mean() - mu.mean()).squaredNorm();

    GaussianMethod method = opts.method;
    if (method == GaussianMethod::Auto) {
        if (detail::is_diagonal(smu, opts.structTol) && detail::is_diagonal(snu, opts.structTol))
            method = GaussianMethod::Diagonal;
        else if (detail::commutes(smu, snu, opts.structTol))
            method = GaussianMethod::Commuting;
        else
            method = GaussianMethod::ProjectedGradient;
    }

    GaussianSolveReport rep;
    rep.method = method;
    Eigen::MatrixXd sigmaBar;

    switch (method) {
        case GaussianMethod::Diagonal: {
            double value = dm2;
            sigmaBar = Eigen::MatrixXd::Zero(d, d);
            for (int i = 0; i < d; ++i) {
                const double su = std::sqrt(std::max(smu(i, i), 0.0));
                const double sv = std::sqrt(std::max(snu(i, i), 0.0));
                sigmaBar(i, i) = std::min(smu(i, i), snu(i, i));
                const double def = std::max(su - sv, 0.0);
                value += def * def;
            }
            rep.value = value;
            break;
        }
        case GaussianMethod::Commuting: {
            const Eigen::MatrixXd q = detail::joint_diagonalizer(smu, snu);
            const Eigen::VectorXd dmu = (q.transpose() * smu * q).diagonal();
            const Eigen::VectorXd dnu = (q.transpose() * snu * q).diagonal();
            Eigen::VectorXd dbar = dmu.cwiseMin(dnu);
            sigmaBar = q * dbar.asDiagonal() * q.transpose();
            double value = dm2;
            for (int i = 0; i < d; ++i) {
                const double def =
                    std::max(std::sqrt(std::max(dmu(i), 0.0)) - std::sqrt(std::max(dnu(i), 0.0)),
                             0.0);
                value += def * def;
            }
            rep.value = value;
            break;
        }
        case GaussianMethod::ProjectedGradient:
        default: {
            const Eigen::MatrixXd rootMu = psd_sqrt(smu);
            const Eigen::MatrixXd rootNu = psd_sqrt(snu);
            const Eigen::MatrixXd bmat = rootMu * rootNu;  // M(T) = B T B^T
            const double scale = 1.0 + snu.norm();
            const double cutoff = 1e-12 * (1.0 + (bmat * bmat.transpose()).norm());

            auto objective = [&](const Eigen::MatrixXd& t) {
                return detail::bures_objective(rootNu * t * rootNu, smu, rootMu);
            };
            auto gradient = [&](const Eigen::MatrixXd& t) {
                SymEig em = sym_eig(0.5 * ((bmat * t * bmat.transpose()) +
                                           (bmat * t * bmat.transpose()).transpose()));
                Eigen::VectorXd g(d);
                // eigenvalues clamped at the cutoff: keeps the derivative
                // steep near the boundary instead of flattening it, so the
                // iteration can leave a spuriously-zero eigendirection
                for (int i = 0; i < d; ++i)
                    g(i) = 1.0 / std::sqrt(std::max(em.lambda(i), cutoff));
                const Eigen::MatrixXd dsqrt = em.Q * g.asDiagonal() * em.Q.transpose();
                Eigen::MatrixXd grad = snu - bmat.transpose() * dsqrt * bmat;
                return Eigen::MatrixXd(0.5 * (grad + grad.transpose()));
            };

            Eigen::MatrixXd t = Eigen::MatrixXd::Identity(d, d);
            double f = objective(t);
            if (opts.objectiveTrace) opts.objectiveTrace->push_back(f);
            double eta = 1.0;
            double residual = kInf;
            long it = 0;
            for (; it < opts.maxIter; ++it) {
                const Eigen::MatrixXd g = gradient(t);
                residual = (t - clip_to_interval(t - g)).norm();
                if (residual <= opts.pgTol * scale) break;
                bool accepted = false;
                for (int bt = 0; bt < 60; ++bt) {
                    const Eigen::MatrixXd tNew = clip_to_interval(t - eta * g);
                    const double gain = (g.array() * (t - tNew).array()).sum();
                    const double fNew = objective(tNew);
                    if (fNew <= f - 1e-4 * gain + 1e-15 * (1.0 + std::abs(f))) {
                        t = tNew;
                        f = fNew;
                        accepted = true;
                        if (opts.objectiveTrace) opts.objectiveTrace->push_back(f);
                        eta = std::min(eta * 1.5, 16.0);
                        break;
                    }
                    eta *= 0.5;
                }
                if (!accepted) break;  // line search exhausted at machine precision
            }
            rep.iterations = it;
            rep.pgResidual = residual;
            rep.converged = residual <= opts.pgTol * scale;
            if (!rep.converged && opts.throwOnNonconvergence)
                throw NumericError("t2bar_gaussian: projected gradient did not converge",
                                   residual);
            sigmaBar = rootNu * t * rootNu;
            sigmaBar = 0.5 * (sigmaBar + sigmaBar.transpose());
            rep.value = dm2 + std::max(detail::bures_objective(sigmaBar, smu, rootMu), 0.0);
            break;
        }
    }

    rep.sigmaBar = sigmaBar;
    const Eigen::MatrixXd rootBar = psd_sqrt(sigmaBar);
    rep.A = rootBar * psd_inv_sqrt(rootBar * smu * rootBar) * rootBar;
    rep.A = 0.5 * (rep.A + rep.A.transpose());
    rep.projection = GaussianMeasure(nu.mean(), sigmaBar);

    // structural invariants of the report
    const double scale = 1.0 + snu.norm();
    if (min_eigenvalue(snu - sigmaBar) < -1e-8 * scale)
        throw NumericError("t2bar_gaussian: sigmaBar exceeds Sigma_nu");
    if (min_eigenvalue(sigmaBar) > 1e-10 * scale) {
        const double residual = (rep.A * smu * rep.A - sigmaBar).norm();
        if (residual > 1e-6 * scale)
            throw NumericError("t2bar_gaussian: A Sigma_mu A != sigmaBar", residual);
    }
    return rep;
}

struct ForwardProjectionGaussian {
    GaussianMeasure nuTilde;
    double residual;  // | W2^2(nuTilde, nu) - value |
};

/// Forward projection in the Gaussian case: the image of nu under the
/// inverse transport map x -> m_mu + A^{-1} (x - m_nu). Requires A
/// nonsingular; a singular map is refused because the forward projection may
/// then be non-unique.
inline ForwardProjectionGaussian forward_projection_gaussian(const GaussianMeasure& mu,
                                                             const GaussianMeasure& nu,
                                                             const GaussianSolveReport& report,
                                                             double singTol = 1e-9) {
    SymEig ea = sym_eig(report.A);
    const double scale = 1.0 + ea.lambda.cwiseAbs().maxCoeff();
    if (ea.lambda.minCoeff() <= singTol * scale)
        throw NumericError("forward_projection_gaussian: A is singular, projection may be non-unique",
                           ea.lambda.minCoeff());
    Eigen::VectorXd inv = ea.lambda.cwiseInverse();
    const Eigen::MatrixXd ainv = ea.Q * inv.asDiagonal() * ea.Q.transpose();
    Eigen::MatrixXd cov = ainv * nu.cov() * ainv;
    cov = 0.5 * (cov + cov.transpose());
    GaussianMeasure nuTilde(mu.mean(), cov);
    const double w2 = w2_gaussian(nuTilde, nu);
    return {nuTilde, std::abs(w2 - report.value)};
}

/// 1-Lipschitz test of a PSD transport map: largest eigenvalue <= 1 + tol.
inline bool lipschitz_check(const Eigen::MatrixXd& a, double tol = 1e-10) {
    return max_eigenvalue(a) <= 1.0 + tol;
}

/// Range condition Im(Sigma_nu - sigmaBar) inside Ker(A - I), verified as
/// (A - I)(Sigma_nu - sigmaBar) = 0 in Frobenius norm.
inline bool kernel_image_check(const Eigen::MatrixXd& a, const Eigen::MatrixXd& sigmaNu,
                               const Eigen::MatrixXd& sigmaBar, double tol = 1e-8) {
    const int d = static_cast<int>(a.rows());
    const Eigen::MatrixXd lhs =
        (a - Eigen::MatrixXd::Identity(d, d)) * (sigmaNu - sigmaBar);
    return lhs.norm() <= tol * (1.0 + sigmaNu.norm());
}

/// The 2x2 counterexample separating "transport map is a contraction" from
/// the convex order: A = diag(1-delta, 1) is 1-Lipschitz while neither
/// Sigma_nu <= Sigma_mu nor the converse holds.
struct OrderVsLipschitzReport {
    Eigen::MatrixXd sigmaMu;
    Eigen::MatrixXd sigmaNu;
    double formulaError = 0.0;  // | A Sigma_mu A - displayed closed form |
    double detDiff = 0.0;       // det(Sigma_nu - Sigma_mu)
    bool lipschitz = false;
    bool orderForward = false;   // nu <=_c mu ?
    bool orderBackward = false;  // mu <=_c nu ?
    bool passed = false;
};

inline OrderVsLipschitzReport order_vs_lipschitz_suite(double delta = 0.5, double eps = 0.5) {
    OrderVsLipschitzReport rep;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(2, 2);
    a(0, 0) = 1.0 - delta;
    a(1, 1) = 1.0;
    rep.sigmaMu.resize(2, 2);
    rep.sigmaMu << 1.0 + eps, eps - 1.0, eps - 1.0, 1.0 + eps;
    rep.sigmaNu = a * rep.sigmaMu * a;

    Eigen::MatrixXd closedForm(2, 2);
    closedForm << (1.0 - delta) * (1.0 - delta) * (eps + 1.0), (1.0 - delta) * (eps - 1.0),
        (1.0 - delta) * (eps - 1.0), eps + 1.0;
    rep.formulaError = (rep.sigmaNu - closedForm).cwiseAbs().maxCoeff();

    const Eigen::MatrixXd diff = rep.sigmaNu - rep.sigmaMu;
    rep.detDiff = diff(0, 0) * diff(1, 1) - diff(0, 1) * diff(1, 0);
    rep.lipschitz = lipschitz_check(a);

    GaussianMeasure gm(Eigen::VectorXd::Zero(2), rep.sigmaMu);
    GaussianMeasure gn(Eigen::VectorXd::Zero(2), rep.sigmaNu);
    rep.orderForward = check_convex_order_gaussian(gn, gm, 1e-10);
    rep.orderBackward = check_convex_order_gaussian(gm, gn, 1e-10);

    rep.passed = rep.formulaError <= 1e-10 && rep.detDiff < 0 && rep.lipschitz &&
                 !rep.orderForward && !rep.orderBackward;
    return rep;
}

}  // namespace barytrans
