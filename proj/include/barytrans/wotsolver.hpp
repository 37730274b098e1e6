#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "barytrans/measures.hpp"
#include "barytrans/numerics/transport_lmo.hpp"

namespace barytrans {

/// Solver failure that carries the last certified gap / residual.
struct NumericError : std::runtime_error {
    explicit NumericError(const std::string& what, double residual = 0.0)
        : std::runtime_error(what), residual(residual) {}
    double residual;
};

struct SolveOptions {
    double tol = 1e-7;      // Frank-Wolfe gap threshold
    double relTol = 0.0;    // also stop when gap <= relTol * objective (0: off)
    long maxIter = 100000;
    bool awaySteps = true;  // pairs plain FW directions with away steps
    double mergeTolRel = 1e-6;  // barycenter merge tolerance, relative to support diameter
    bool throwOnNonconvergence = false;
    std::vector<double>* objectiveTrace = nullptr;  // per-iteration objective, for diagnostics
};

/// Result of the barycentric transport solve: optimal value, an optimal plan,
/// per-atom conditional barycenters, and the projection measure they induce.
struct SolveReport {
    double value = 0.0;
    TransportPlan plan;
    Eigen::MatrixXd barycenters;  // n x d
    DiscreteMeasure projection;
    double fwGap = 0.0;
    long iterations = 0;
    bool converged = false;
};

namespace detail {

inline double merge_tolerance(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                              double mergeTolRel) {
    const double diam = std::max(mu.support_diameter(), nu.support_diameter());
    return mergeTolRel * std::max(diam, 1.0);
}

/// Greedy clustering of barycenter rows; returns cluster index per row.
inline std::vector<int> cluster_rows(const Eigen::MatrixXd& b, double tol,
                                     std::vector<int>* reps = nullptr) {
    const int n = static_cast<int>(b.rows());
    std::vector<int> cluster(n, -1);
    std::vector<int> heads;
    for (int i = 0; i < n; ++i) {
        for (std::size_t h = 0; h < heads.size(); ++h) {
            if ((b.row(i) - b.row(heads[h])).norm() <= tol) {
                cluster[i] = static_cast<int>(h);
                break;
            }
        }
        if (cluster[i] < 0) {
            cluster[i] = static_cast<int>(heads.size());
            heads.push_back(i);
        }
    }
    if (reps) *reps = heads;
    return cluster;
}

inline DiscreteMeasure projection_measure(const DiscreteMeasure& mu, const Eigen::MatrixXd& b,
                                          double mergeTol) {
    std::vector<int> heads;
    const std::vector<int> cluster = cluster_rows(b, mergeTol, &heads);
    Eigen::MatrixXd pts(static_cast<int>(heads.size()), b.cols());
    Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<int>(heads.size()));
    for (std::size_t h = 0; h < heads.size(); ++h) pts.row(static_cast<int>(h)) = b.row(heads[h]);
    for (int i = 0; i < mu.size(); ++i) w(cluster[i]) += mu.weight(i);
    return DiscreteMeasure::from_unnormalized(pts, w);
}

}  // namespace detail

/// Barycentric quadratic transport cost between discrete measures:
///     min over plans of  sum_i mu_i | x_i - b_i(pi) |^2,
/// b_i the conditional barycenter of row i. Frank-Wolfe over the transport
/// polytope: the gradient is bilinear, the linear oracle is a transportation
/// simplex (warm-started between iterations), line search is exact since the
/// objective is quadratic along any segment. The iterate is kept as a convex
/// combination of oracle vertices plus the initial product coupling, which
/// makes away steps cheap and the final plan exactly reconstructible.
inline SolveReport t2bar_discrete(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                                  const SolveOptions& opts = {}) {
    if (mu.dim() != nu.dim()) throw std::invalid_argument("t2bar_discrete: dimension mismatch");
    const int n = mu.size(), m = nu.size(), d = mu.dim();
    const Eigen::MatrixXd& X = mu.points();
    const Eigen::MatrixXd& Y = nu.points();
    const Eigen::VectorXd& wmu = mu.weights();
    const double mergeTol = detail::merge_tolerance(mu, nu, opts.mergeTolRel);

    auto make_report = [&](Eigen::MatrixXd planMat, double gap, long iters, bool converged) {
        TransportPlan plan(std::move(planMat), mu, nu);
        Eigen::MatrixXd bary = plan.barycenters();
        double v = 0.0;
        for (int i = 0; i < n; ++i)
            v += wmu(i) * (X.row(i) - bary.row(i)).squaredNorm();
        DiscreteMeasure proj = detail::projection_measure(mu, bary, mergeTol);
        return SolveReport{v, std::move(plan), std::move(bary), std::move(proj),
                           gap, iters, converged};
    };

    if (m == 1) {  // single target atom: unique feasible plan, constant objective
        Eigen::MatrixXd plan = wmu;
        return make_report(std::move(plan), 0.0, 0, true);
    }

    // atoms of the convex decomposition of the iterate
    struct Atom {
        std::vector<TransportArc> arcs;  // empty marks the product coupling
        Eigen::MatrixXd bary;            // n x d
        double lambda;
    };
    std::vector<Atom> atoms;
    {
        Atom prod;
        prod.bary = Eigen::MatrixXd::Zero(n, d);
        prod.bary.rowwise() = nu.mean().transpose();
        prod.lambda = 1.0;
        atoms.push_back(std::move(prod));
    }
    Eigen::MatrixXd B = atoms[0].bary;

    TransportSimplex lmo(wmu, nu.weights());
    Eigen::MatrixXd U(n, d);  // u_i = -2 (x_i - b_i)

    auto vertex_bary = [&](const std::vector<TransportArc>& arcs) {
        Eigen::MatrixXd vb = Eigen::MatrixXd::Zero(n, d);
        for (const auto& a : arcs) vb.row(a.row) += a.flow * Y.row(a.col);
        vb.array().colwise() /= wmu.array();
        return vb;
    };
    auto grad_dot = [&](const Eigen::MatrixXd& bary) {
        double s = 0.0;
        for (int i = 0; i < n; ++i) s += wmu(i) * U.row(i).dot(bary.row(i));
        return s;
    };

    double gap = std::numeric_limits<double>::infinity();
    long it = 0;
    bool converged = false;
    for (; it < opts.maxIter; ++it) {
        U = -2.0 * (X - B);
        auto cost = [&](int i, int j) { return U.row(i).dot(Y.row(j)); };
        auto info = lmo.solve(cost);
        if (!info.optimal) throw NumericError("t2bar_discrete: LMO pivot budget exhausted", gap);

        const double gPi = grad_dot(B);
        gap = gPi - info.objective;
        double fcur = 0.0;
        for (int i = 0; i < n; ++i) fcur += wmu(i) * (X.row(i) - B.row(i)).squaredNorm();
        if (opts.objectiveTrace) opts.objectiveTrace->push_back(fcur);
        if (gap <= opts.tol || (opts.relTol > 0 && gap <= opts.relTol * fcur)) {
            converged = true;
            break;
        }

        Atom cand;
        cand.arcs = lmo.vertex();
        cand.bary = vertex_bary(cand.arcs);
        cand.lambda = 0.0;

        int away = -1;
        if (opts.awaySteps) {
            double best = -std::numeric_limits<double>::infinity();
            for (std::size_t k = 0; k < atoms.size(); ++k) {
                const double g = grad_dot(atoms[k].bary);
                if (atoms[k].lambda > 0 && g > best) {
                    best = g;
                    away = static_cast<int>(k);
                }
            }
            const double awayGain = best - gPi;
            if (away >= 0 && awayGain > gap) {
                // away step: move mass off the worst atom
                const Eigen::MatrixXd delta = B - atoms[away].bary;
                double curv = 0.0;
                for (int i = 0; i < n; ++i) curv += wmu(i) * delta.row(i).squaredNorm();
                const double lam = atoms[away].lambda;
                const double gmax = lam >= 1.0 ? std::numeric_limits<double>::infinity()
                                               : lam / (1.0 - lam);
                double gamma = curv > 0 ? awayGain / (2.0 * curv) : gmax;
                gamma = std::min(gamma, gmax);
                if (gamma > 0 && std::isfinite(gamma)) {
                    B += gamma * delta;
                    for (auto& a : atoms) a.lambda *= (1.0 + gamma);
                    atoms[away].lambda -= gamma;
                    if (atoms[away].lambda < 1e-15) atoms.erase(atoms.begin() + away);
                    continue;
                }
            }
        }

        // plain Frank-Wolfe step toward the oracle vertex
        const Eigen::MatrixXd delta = cand.bary - B;
        double curv = 0.0;
        for (int i = 0; i < n; ++i) curv += wmu(i) * delta.row(i).squaredNorm();
        double gamma = curv > 0 ? gap / (2.0 * curv) : 1.0;
        gamma = std::clamp(gamma, 0.0, 1.0);
        if (gamma <= 0) break;

        B += gamma * delta;
        int slot = -1;
        for (std::size_t k = 0; k < atoms.size(); ++k) {
            if (atoms[k].arcs.size() == cand.arcs.size() && !atoms[k].arcs.empty()) {
                bool same = true;
                for (std::size_t r = 0; r < cand.arcs.size(); ++r) {
                    if (atoms[k].arcs[r].row != cand.arcs[r].row ||
                        atoms[k].arcs[r].col != cand.arcs[r].col ||
                        std::abs(atoms[k].arcs[r].flow - cand.arcs[r].flow) > 1e-12) {
                        same = false;
                        break;
                    }
                }
                if (same) { slot = static_cast<int>(k); break; }
            }
        }
        for (auto& a : atoms) a.lambda *= (1.0 - gamma);
        if (slot >= 0) {
            atoms[slot].lambda += gamma;
        } else {
            cand.lambda = gamma;
            atoms.push_back(std::move(cand));
        }
        atoms.erase(std::remove_if(atoms.begin(), atoms.end(),
                                   [](const Atom& a) { return a.lambda < 1e-15; }),
                    atoms.end());
        if (it % 256 == 255) {  // refresh against drift
            B.setZero();
            for (const auto& a : atoms) B += a.lambda * a.bary;
        }
    }

    if (!converged && opts.throwOnNonconvergence)
        throw NumericError("t2bar_discrete: gap above tolerance at maxIter", gap);

    Eigen::MatrixXd plan = Eigen::MatrixXd::Zero(n, m);
    for (const auto& a : atoms) {
        if (a.arcs.empty()) {
            plan.noalias() += a.lambda * (wmu * nu.weights().transpose());
        } else {
            for (const auto& arc : a.arcs) plan(arc.row, arc.col) += a.lambda * arc.flow;
        }
    }
    return make_report(std::move(plan), gap, it, converged);
}

/// Frank-Wolfe gap of an arbitrary feasible plan; zero exactly at optimality
/// and an upper bound on the suboptimality of the convex objective.
inline double fw_gap(const DiscreteMeasure& mu, const DiscreteMeasure& nu,
                     const TransportPlan& plan) {
    const int n = mu.size();
    const Eigen::MatrixXd b = plan.barycenters();
    const Eigen::MatrixXd u = -2.0 * (mu.points() - b);
    const Eigen::MatrixXd& Y = nu.points();
    TransportSimplex lmo(mu.weights(), nu.weights());
    auto info = lmo.solve([&](int i, int j) { return u.row(i).dot(Y.row(j)); });
    if (!info.optimal) throw NumericError("fw_gap: LMO pivot budget exhausted");
    double gPi = 0.0;
    for (int i = 0; i < n; ++i) gPi += mu.weight(i) * u.row(i).dot(b.row(i));
    return gPi - info.objective;
}

/// Backward projection with its optimality certificates: asserts that the
/// projection is dominated by nu in convex order (LP witness) and that
/// W2^2(mu, projection) reproduces the solver value.
inline DiscreteMeasure backward_projection(const SolveReport& report, const DiscreteMeasure& mu,
                                           const DiscreteMeasure& nu, double tol = 1e-7) {
    const DiscreteMeasure& proj = report.projection;
    ConvexOrderResult co = check_convex_order(proj, nu, 1e-8);
    if (!co.dominated)
        throw NumericError("backward_projection: projection not dominated by nu (non-converged solve?)",
                           report.fwGap);
    const double w2 = w2_discrete(mu, proj).value;
    if (std::abs(w2 - report.value) > std::sqrt(tol))
        throw NumericError("backward_projection: W2(mu, projection) does not match solver value",
                           std::abs(w2 - report.value));
    return proj;
}

/// Optimal plans factor as (map to the barycenters) followed by a martingale
/// kernel from the projection to nu. `map` sends each source atom to its
/// projection atom; the kernel mixes the normalized plan rows per group.
/// `recomposed` is the plan rebuilt as mu(x) q_{map(x)}(y): it keeps the
/// marginals and the objective of the input plan, and reproduces it entry
/// for entry whenever every barycenter group is a single atom (within a
/// group only the mixture is pinned, so plans are not unique there).
struct PlanDecomposition {
    std::vector<int> map;  // source atom -> projection atom index
    MartingaleKernel kernel;
    TransportPlan recomposed;
};

inline PlanDecomposition decompose_plan(const SolveReport& report, const DiscreteMeasure& mu,
                                        const DiscreteMeasure& nu, double tol = 1e-6) {
    const int n = mu.size(), m = nu.size();
    const Eigen::MatrixXd& pi = report.plan.matrix();
    const Eigen::MatrixXd& b = report.barycenters;
    const double mergeTol = detail::merge_tolerance(mu, nu, 1e-6);
    std::vector<int> heads;
    std::vector<int> cluster = detail::cluster_rows(b, mergeTol, &heads);
    const int G = static_cast<int>(heads.size());

    Eigen::MatrixXd groupRow = Eigen::MatrixXd::Zero(G, m);  // normalized group mixtures
    for (int i = 0; i < n; ++i) groupRow.row(cluster[i]) += pi.row(i);
    for (int g = 0; g < G; ++g) groupRow.row(g) /= groupRow.row(g).sum();

    std::vector<DiscreteMeasure> rows;
    rows.reserve(G);
    for (int g = 0; g < G; ++g)
        rows.push_back(
            DiscreteMeasure::from_unnormalized(nu.points(), groupRow.row(g).cwiseMax(0.0)));
    MartingaleKernel kernel(report.projection, std::move(rows));
    if (kernel.martingale_residual() > tol)
        throw NumericError("decompose_plan: martingale residual above tolerance",
                           kernel.martingale_residual());
    if (!kernel.validate(nu, std::max(tol, 1e-8)))
        throw NumericError("decompose_plan: kernel mixture does not reproduce nu");

    Eigen::MatrixXd recomposedMat(n, m);
    for (int i = 0; i < n; ++i) recomposedMat.row(i) = mu.weight(i) * groupRow.row(cluster[i]);
    TransportPlan recomposed(std::move(recomposedMat), mu, nu);
    {
        const Eigen::MatrixXd rb = recomposed.barycenters();
        double v = 0.0;
        for (int i = 0; i < n; ++i)
            v += mu.weight(i) * (mu.points().row(i) - rb.row(i)).squaredNorm();
        if (std::abs(v - report.value) > std::max(tol, 1e-8) * (1.0 + report.value))
            throw NumericError("decompose_plan: recomposition changed the objective",
                               std::abs(v - report.value));
        bool singletons = (G == n);
        if (singletons && (recomposed.matrix() - pi).cwiseAbs().maxCoeff() > tol)
            throw NumericError("decompose_plan: recomposition does not reproduce the plan");
    }
    return {std::move(cluster), std::move(kernel), std::move(recomposed)};
}

/// Grid-restricted forward projection in 1D: minimizes W2^2(eta, nu) over
/// measures eta supported on `grid` that dominate mu in convex order. Both
/// the martingale kernel mu -> eta and the coupling eta -> nu are LP
/// variables, so the objective is linear.
struct ForwardProjectionResult {
    double value;
    DiscreteMeasure nuTilde;
};

inline ForwardProjectionResult forward_projection_grid_1d(const DiscreteMeasure& mu,
                                                          const DiscreteMeasure& nu,
                                                          const Eigen::VectorXd& grid) {
    if (mu.dim() != 1 || nu.dim() != 1)
        throw std::invalid_argument("forward_projection_grid_1d: requires 1D measures");
    const int n = mu.size(), m = nu.size(), G = static_cast<int>(grid.size());
    const int nq = n * G, npi = G * m;
    auto qv = [G](int i, int k) { return i * G + k; };
    auto pv = [m, nq](int k, int j) { return nq + k * m + j; };

    const int rows = 2 * n + G + (m - 1);
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, nq + npi);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < G; ++k) {
            A(i, qv(i, k)) = 1.0;
            A(n + i, qv(i, k)) = grid(k);
        }
        rhs(i) = mu.weight(i);
        rhs(n + i) = mu.weight(i) * mu.points()(i, 0);
    }
    for (int k = 0; k < G; ++k) {
        const int r = 2 * n + k;
        for (int i = 0; i < n; ++i) A(r, qv(i, k)) = 1.0;
        for (int j = 0; j < m; ++j) A(r, pv(k, j)) = -1.0;
    }
    for (int j = 0; j + 1 < m; ++j) {
        const int r = 2 * n + G + j;
        for (int k = 0; k < G; ++k) A(r, pv(k, j)) = 1.0;
        rhs(r) = nu.weight(j);
    }
    Eigen::VectorXd c = Eigen::VectorXd::Zero(nq + npi);
    for (int k = 0; k < G; ++k)
        for (int j = 0; j < m; ++j) {
            const double diff = grid(k) - nu.points()(j, 0);
            c(pv(k, j)) = diff * diff;
        }

    LpResult res = solve_lp(LpProblem::standard(std::move(c), std::move(A), std::move(rhs)));
    if (res.status != LpStatus::Optimal)
        throw NumericError("forward_projection_grid_1d: LP infeasible or failed");

    Eigen::VectorXd eta = Eigen::VectorXd::Zero(G);
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < G; ++k) eta(k) += std::max(res.x(qv(i, k)), 0.0);
    std::vector<double> pts, ws;
    for (int k = 0; k < G; ++k)
        if (eta(k) > 1e-12) {
            pts.push_back(grid(k));
            ws.push_back(eta(k));
        }
    Eigen::MatrixXd p(static_cast<int>(pts.size()), 1);
    Eigen::VectorXd w(static_cast<int>(ws.size()));
    for (std::size_t k = 0; k < pts.size(); ++k) {
        p(static_cast<int>(k), 0) = pts[k];
        w(static_cast<int>(k)) = ws[k];
    }
    return {std::max(res.value, 0.0), DiscreteMeasure::from_unnormalized(p, w)};
}

}  // namespace barytrans
