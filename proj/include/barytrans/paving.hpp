#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "barytrans/max_affine.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/numerics/rng.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

/// One cell of the 1D convex paving of a max-affine function: either an open
/// interval on which a single envelope piece is active, or a singleton at a
/// kink of the envelope.
struct Cell {
    double anchor;
    std::vector<int> activeSet;
    double lo;
    double hi;
    bool singleton;

    bool contains(double x) const { return singleton ? x == anchor : (x > lo && x < hi); }
    bool closure_contains(double x) const {
        return singleton ? x == anchor : (x >= lo && x <= hi);
    }
};

/// Membership y in D_f(z): f must be affine on the segment [z, y] extended by
/// epsProbe on both sides (relative to the segment length). z == y is true by
/// reflexivity.
inline bool cell_membership(const MaxAffineFunction& f, const Eigen::VectorXd& z,
                            const Eigen::VectorXd& y, double epsProbe = 1e-6) {
    if ((z - y).norm() == 0.0) return true;
    const MaxAffineFunction g = f.restrict_to_line(z, y - z);
    const auto segs = upper_envelope_1d(g);
    for (const auto& s : segs)
        if (s.xlo <= -epsProbe && s.xhi >= 1.0 + epsProbe) return true;
    return false;
}

/// Membership y in closure(D_f(z)). For a max-affine function the closure of
/// a cell is exactly C_f(z) = { y : every piece active at z is active at y }.
inline bool closure_cell_membership(const MaxAffineFunction& f, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& y, double activeTol = 1e-9) {
    const Eigen::VectorXd vz = f.slopes() * z + f.offsets();
    const Eigen::VectorXd vy = f.slopes() * y + f.offsets();
    const double fz = vz.maxCoeff(), fy = vy.maxCoeff();
    const double tz = activeTol * (1.0 + std::abs(fz));
    const double ty = activeTol * (1.0 + std::abs(fy));
    for (int k = 0; k < f.pieces(); ++k)
        if (vz(k) >= fz - tz && vy(k) < fy - ty) return false;
    return true;
}

namespace detail {

inline void self_check_cells(const MaxAffineFunction& f, const std::vector<Cell>& cells) {
    // partition: abutting intervals, singletons exactly at the shared endpoints
    for (std::size_t c = 0; c + 1 < cells.size(); ++c) {
        const bool ok = cells[c].singleton ? cells[c].anchor == cells[c + 1].lo
                                           : cells[c].hi == (cells[c + 1].singleton
                                                                 ? cells[c + 1].anchor
                                                                 : cells[c + 1].lo);
        if (!ok) throw std::logic_error("cells_1d: cells do not tile the line");
    }
    // subgradient constancy inside each cell, kink at singletons
    for (const Cell& cell : cells) {
        if (cell.singleton) continue;
        const double room = std::min({cell.anchor - cell.lo, cell.hi - cell.anchor, 1.0});
        const double p1 = cell.anchor;
        const double p2 = cell.anchor + 0.25 * room;
        auto s1 = f.subgradient_interval_1d(p1);
        auto s2 = f.subgradient_interval_1d(p2);
        if (std::abs(s1.first - s2.first) > 1e-9 || std::abs(s1.second - s2.second) > 1e-9)
            throw std::logic_error("cells_1d: subgradient not constant on a cell");
        Eigen::VectorXd a(1), b(1);
        a(0) = p1;
        b(0) = p2;
        if (!cell_membership(f, a, b) || !cell_membership(f, b, a))
            throw std::logic_error("cells_1d: membership not symmetric inside a cell");
    }
}

}  // namespace detail

/// Exact 1D paving: open affinity intervals of the upper envelope plus
/// singleton cells at its kinks. The construction is verified against the
/// membership predicate and subgradient constancy before returning.
inline std::vector<Cell> cells_1d(const MaxAffineFunction& f) {
    if (f.dim() != 1) throw std::invalid_argument("cells_1d: requires d=1");
    const auto segs = upper_envelope_1d(f);
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<Cell> cells;
    for (std::size_t t = 0; t < segs.size(); ++t) {
        if (t > 0) {
            Cell kink;
            kink.anchor = segs[t].xlo;
            kink.lo = kink.hi = segs[t].xlo;
            kink.singleton = true;
            Eigen::VectorXd x(1);
            x(0) = kink.anchor;
            kink.activeSet = f.active_set(x);
            cells.push_back(std::move(kink));
        }
        Cell open;
        open.lo = segs[t].xlo;
        open.hi = segs[t].xhi;
        open.singleton = false;
        if (std::isfinite(open.lo) && std::isfinite(open.hi))
            open.anchor = 0.5 * (open.lo + open.hi);
        else if (std::isfinite(open.lo))
            open.anchor = open.lo + 1.0;
        else if (std::isfinite(open.hi))
            open.anchor = open.hi - 1.0;
        else
            open.anchor = 0.0;
        Eigen::VectorXd x(1);
        x(0) = open.anchor;
        open.activeSet = f.active_set(x);
        cells.push_back(std::move(open));
        (void)inf;
    }
    detail::self_check_cells(f, cells);
    return cells;
}

inline const Cell& cell_of(const std::vector<Cell>& cells, double x) {
    for (const Cell& c : cells)
        if (c.singleton ? c.anchor == x : (x > c.lo && x < c.hi)) return c;
    throw std::logic_error("cell_of: point not covered (cells do not partition?)");
}

/// Random extreme points of the martingale transport polytope M(alpha, beta):
/// vertices of the LP {pi >= 0, marginals, barycenter rows} under random
/// linear objectives.
inline std::vector<MartingaleKernel> random_martingale_kernels(const DiscreteMeasure& alpha,
                                                               const DiscreteMeasure& beta,
                                                               int count, std::uint64_t seed) {
    const int n = alpha.size(), m = beta.size(), d = alpha.dim();
    const int rows = n + (m - 1) + n * d;
    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(rows, n * m);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    auto var = [m](int i, int j) { return i * m + j; };
    for (int i = 0; i < n; ++i) {
        for (int j = 0; j < m; ++j) a(i, var(i, j)) = 1.0;
        rhs(i) = alpha.weight(i);
    }
    for (int j = 0; j + 1 < m; ++j) {
        for (int i = 0; i < n; ++i) a(n + j, var(i, j)) = 1.0;
        rhs(n + j) = beta.weight(j);
    }
    for (int i = 0; i < n; ++i)
        for (int k = 0; k < d; ++k) {
            const int r = n + m - 1 + i * d + k;
            for (int j = 0; j < m; ++j) a(r, var(i, j)) = beta.points()(j, k);
            rhs(r) = alpha.weight(i) * alpha.points()(i, k);
        }

    std::vector<MartingaleKernel> kernels;
    for (int trial = 0; trial < count; ++trial) {
        RngStream rng(seed, static_cast<std::uint64_t>(trial));
        Eigen::VectorXd c(n * m);
        for (int v = 0; v < n * m; ++v) c(v) = rng.next_uniform(-1.0, 1.0);
        LpResult res = solve_lp(LpProblem::standard(c, a, rhs));
        if (res.status != LpStatus::Optimal)
            throw NumericError("random_martingale_kernels: LP failed (is alpha <=_c beta?)");
        std::vector<DiscreteMeasure> kernelRows;
        kernelRows.reserve(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd w(m);
            for (int j = 0; j < m; ++j) w(j) = std::max(res.x(var(i, j)), 0.0);
            kernelRows.push_back(DiscreteMeasure::from_unnormalized(beta.points(), w));
        }
        kernels.emplace_back(alpha, std::move(kernelRows));
    }
    return kernels;
}

/// Result of the martingale-invariance check of a paving.
struct InvarianceReport {
    bool hypothesisOk = false;
    std::string hypothesisDetail;
    bool invariant = false;
    double worstLeak = 0.0;
    int kernelsChecked = 0;

    bool passed() const { return hypothesisOk && invariant; }
};

/// Checks that every martingale kernel from alpha to beta keeps the mass of
/// each source atom inside the closure of that atom's cell, under the
/// hypothesis alpha <=_c beta and int f dalpha = int f dbeta. A hypothesis
/// violation is reported distinctly from an invariance violation.
inline InvarianceReport invariance_check(const MaxAffineFunction& f, const DiscreteMeasure& alpha,
                                         const DiscreteMeasure& beta,
                                         std::vector<MartingaleKernel> kernels = {},
                                         double tol = 1e-8, std::uint64_t seed = 0,
                                         int randomKernels = 20) {
    InvarianceReport rep;
    ConvexOrderResult co = check_convex_order(alpha, beta, tol);
    if (!co.dominated) {
        rep.hypothesisDetail = "alpha is not dominated by beta in convex order";
        return rep;
    }
    double ia = 0.0, ib = 0.0;
    for (int i = 0; i < alpha.size(); ++i) ia += alpha.weight(i) * f(alpha.point(i));
    for (int j = 0; j < beta.size(); ++j) ib += beta.weight(j) * f(beta.point(j));
    const double scale = 1.0 + std::abs(ia) + std::abs(ib);
    if (std::abs(ia - ib) > tol * scale) {
        std::ostringstream os;
        os << "int f dalpha = " << ia << " differs from int f dbeta = " << ib;
        rep.hypothesisDetail = os.str();
        return rep;
    }
    rep.hypothesisOk = true;

    if (kernels.empty()) {
        kernels.push_back(*co.witness);
        if (randomKernels > 0) {
            auto more = random_martingale_kernels(alpha, beta, randomKernels, seed);
            for (auto& k : more) kernels.push_back(std::move(k));
        }
    }

    rep.invariant = true;
    for (const MartingaleKernel& q : kernels) {
        ++rep.kernelsChecked;
        for (int i = 0; i < q.source().size(); ++i) {
            const Eigen::VectorXd z = q.source().point(i);
            double leak = 0.0;
            for (int j = 0; j < q.row(i).size(); ++j) {
                if (!closure_cell_membership(f, z, q.row(i).point(j)))
                    leak += q.row(i).weight(j);
            }
            rep.worstLeak = std::max(rep.worstLeak, leak);
            if (leak > tol) rep.invariant = false;
        }
    }
    return rep;
}

struct MassBalanceReport {
    bool hypothesisOk = false;
    bool ok = false;
    double worstGap = 0.0;
    std::optional<double> offendingCellAnchor;
};

/// 1D mass-balance identity over closed cells:
///   beta(cl D(z)) = alpha(cl D(z)) +
///       sum over alpha-atoms y outside cl D(z) of
///           alpha_y * q_y( cl D(z) intersect (cl D(y) \ D(y)) ).
/// Every term is a finite sum since all cells are intervals.
inline MassBalanceReport mass_balance_check(const MaxAffineFunction& f,
                                            const DiscreteMeasure& alpha,
                                            const DiscreteMeasure& beta,
                                            const MartingaleKernel& kernel, double tol = 1e-8) {
    if (f.dim() != 1 || alpha.dim() != 1)
        throw std::invalid_argument("mass_balance_check: requires d=1");
    MassBalanceReport rep;
    double ia = 0.0, ib = 0.0;
    for (int i = 0; i < alpha.size(); ++i) ia += alpha.weight(i) * f(alpha.point(i));
    for (int j = 0; j < beta.size(); ++j) ib += beta.weight(j) * f(beta.point(j));
    if (std::abs(ia - ib) > tol * (1.0 + std::abs(ia) + std::abs(ib))) return rep;
    rep.hypothesisOk = true;

    const auto cells = cells_1d(f);
    const double ptol = 1e-9;

    rep.ok = true;
    std::vector<const Cell*> seen;
    for (int zi = 0; zi < alpha.size(); ++zi) {
        const Cell& cz = cell_of(cells, alpha.point(zi)(0));
        bool dup = false;
        for (const Cell* s : seen)
            if (s == &cz) { dup = true; break; }
        if (dup) continue;
        seen.push_back(&cz);

        auto inClosure = [&](double x) {
            return cz.singleton ? std::abs(x - cz.anchor) <= ptol
                                : (x >= cz.lo - ptol && x <= cz.hi + ptol);
        };
        double lhs = 0.0;
        for (int j = 0; j < beta.size(); ++j)
            if (inClosure(beta.point(j)(0))) lhs += beta.weight(j);
        double rhs = 0.0;
        for (int i = 0; i < alpha.size(); ++i)
            if (inClosure(alpha.point(i)(0))) rhs += alpha.weight(i);
        for (int i = 0; i < alpha.size(); ++i) {
            const double y = alpha.point(i)(0);
            if (inClosure(y)) continue;
            const Cell& cy = cell_of(cells, y);
            // closure(D(y)) minus D(y): the finite endpoints of y's cell
            std::vector<double> boundary;
            if (!cy.singleton) {
                if (std::isfinite(cy.lo)) boundary.push_back(cy.lo);
                if (std::isfinite(cy.hi)) boundary.push_back(cy.hi);
            }
            double mass = 0.0;
            for (double bpt : boundary) {
                if (!inClosure(bpt)) continue;
                for (int j = 0; j < kernel.row(i).size(); ++j)
                    if (std::abs(kernel.row(i).point(j)(0) - bpt) <= ptol)
                        mass += kernel.row(i).weight(j);
            }
            rhs += alpha.weight(i) * mass;
        }
        const double gap = std::abs(lhs - rhs);
        if (gap > rep.worstGap) {
            rep.worstGap = gap;
            if (gap > tol) rep.offendingCellAnchor = cz.anchor;
        }
        if (gap > tol) rep.ok = false;
    }
    return rep;
}

/// Converse construction: given alpha <=_c nu saturating int k, build mu with
/// backward projection alpha by spreading each atom z uniformly over
/// z + dk(z) (the subgradient interval of k at z, d=1). The construction is
/// verified by solving the barycentric problem for mu and matching its
/// projection against alpha.
inline DiscreteMeasure reconstruct_mu(const DiscreteMeasure& alpha, const DiscreteMeasure& nu,
                                      const MaxAffineFunction& k, int samplesPerAtom,
                                      std::uint64_t seed, double tol = 1e-6) {
    if (alpha.dim() != 1 || k.dim() != 1)
        throw std::invalid_argument("reconstruct_mu: requires d=1");
    if (samplesPerAtom < 1) throw std::invalid_argument("reconstruct_mu: samplesPerAtom >= 1");
    ConvexOrderResult co = check_convex_order(alpha, nu, 1e-8);
    if (!co.dominated)
        throw std::invalid_argument("reconstruct_mu: alpha not dominated by nu");
    double ia = 0.0, ib = 0.0;
    for (int i = 0; i < alpha.size(); ++i) ia += alpha.weight(i) * k(alpha.point(i));
    for (int j = 0; j < nu.size(); ++j) ib += nu.weight(j) * k(nu.point(j));
    if (std::abs(ia - ib) > tol * (1.0 + std::abs(ia) + std::abs(ib)))
        throw std::invalid_argument("reconstruct_mu: int k dalpha != int k dnu");

    std::vector<double> pts;
    std::vector<double> ws;
    for (int i = 0; i < alpha.size(); ++i) {
        const double z = alpha.point(i)(0);
        auto [slo, shi] = k.subgradient_interval_1d(z);
        const double lo = z + slo, hi = z + shi;
        if (hi - lo <= 1e-12) {
            pts.push_back(lo);
            ws.push_back(alpha.weight(i));
        } else {
            // stratified uniform draws over z + dk(z)
            RngStream rng(seed, static_cast<std::uint64_t>(i));
            for (int s = 0; s < samplesPerAtom; ++s) {
                const double u = (s + rng.next_uniform()) / samplesPerAtom;
                pts.push_back(lo + u * (hi - lo));
                ws.push_back(alpha.weight(i) / samplesPerAtom);
            }
        }
    }
    Eigen::MatrixXd p(static_cast<int>(pts.size()), 1);
    Eigen::VectorXd w(static_cast<int>(ws.size()));
    for (std::size_t i = 0; i < pts.size(); ++i) {
        p(static_cast<int>(i), 0) = pts[i];
        w(static_cast<int>(i)) = ws[i];
    }
    DiscreteMeasure mu = DiscreteMeasure::from_unnormalized(std::move(p), std::move(w));

    SolveReport rep = t2bar_discrete(mu, nu);
    if (!MartingaleKernel::measures_close(rep.projection, alpha, std::max(tol, 1e-6)))
        throw NumericError("reconstruct_mu: projection of reconstructed mu does not match alpha");
    return mu;
}

/// In the Gaussian/linear case the transport map x -> Ax acts as a
/// translation exactly along Ker(A - I): shifts by kernel vectors commute
/// with the map, shifts by eigenvectors with eigenvalue away from 1 do not.
inline bool translation_cells_check(const Eigen::MatrixXd& a, double tol = 1e-8,
                                    std::uint64_t seed = 0, int probes = 50) {
    const int d = static_cast<int>(a.rows());
    SymEig e = sym_eig(a);
    const double scale = 1.0 + e.lambda.cwiseAbs().maxCoeff();
    std::vector<int> kerIdx, farIdx;
    for (int i = 0; i < d; ++i) {
        if (std::abs(e.lambda(i) - 1.0) <= tol * scale) kerIdx.push_back(i);
        else if (std::abs(e.lambda(i) - 1.0) > 1e-4) farIdx.push_back(i);
    }
    RngStream rng(seed, 17);
    for (int p = 0; p < probes; ++p) {
        const Eigen::VectorXd x = rng.gaussian_vector(d);
        if (!kerIdx.empty()) {
            Eigen::VectorXd u = Eigen::VectorXd::Zero(d);
            for (int i : kerIdx) u += rng.next_uniform(-1.0, 1.0) * e.Q.col(i);
            if ((a * (x + u) - (a * x + u)).norm() > tol * (1.0 + u.norm())) return false;
        }
        if (!farIdx.empty()) {
            const int i = farIdx[rng.next_index(static_cast<int>(farIdx.size()))];
            const Eigen::VectorXd u = rng.next_uniform(0.5, 2.0) * e.Q.col(i);
            if ((a * (x + u) - (a * x + u)).norm() <= 10.0 * tol * (1.0 + u.norm())) return false;
        }
    }
    return true;
}

}  // namespace barytrans
