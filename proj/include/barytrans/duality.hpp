#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

#include "barytrans/max_affine.hpp"
#include "barytrans/measures.hpp"
#include "barytrans/wotsolver.hpp"

namespace barytrans {

/// Function sampled on a tensor-product grid. Values may be +infinity
/// (outside-domain sentinel); at least one node must be finite for the
/// transforms to make sense.
class GridFunction {
public:
    GridFunction(std::vector<Eigen::VectorXd> axes, Eigen::VectorXd values)
        : axes_(std::move(axes)), values_(std::move(values)) {
        if (axes_.empty()) throw std::invalid_argument("GridFunction: no axes");
        long total = 1;
        for (const auto& ax : axes_) {
            if (ax.size() < 1) throw std::invalid_argument("GridFunction: empty axis");
            for (int i = 0; i + 1 < ax.size(); ++i)
                if (ax(i + 1) <= ax(i))
                    throw std::invalid_argument("GridFunction: axis not strictly increasing");
            total *= ax.size();
        }
        if (values_.size() != total)
            throw std::invalid_argument("GridFunction: value count does not match grid");
        for (int i = 0; i < values_.size(); ++i)
            if (std::isnan(values_(i)) || values_(i) == -kInf)
                throw std::invalid_argument("GridFunction: values must be > -inf and not NaN");
    }

    GridFunction(Eigen::VectorXd grid, Eigen::VectorXd values)
        : GridFunction(std::vector<Eigen::VectorXd>{std::move(grid)}, std::move(values)) {}

    int dim() const { return static_cast<int>(axes_.size()); }
    long size() const { return values_.size(); }
    const std::vector<Eigen::VectorXd>& axes() const { return axes_; }
    const Eigen::VectorXd& values() const { return values_; }
    const Eigen::VectorXd& grid1d() const { return axes_[0]; }

    Eigen::VectorXd node(long flat) const {
        Eigen::VectorXd x(dim());
        for (int a = dim() - 1; a >= 0; --a) {
            const long n = axes_[a].size();
            x(a) = axes_[a](flat % n);
            flat /= n;
        }
        return x;
    }

    double value(long flat) const { return values_(flat); }

    bool has_finite_node() const {
        for (int i = 0; i < values_.size(); ++i)
            if (std::isfinite(values_(i))) return true;
        return false;
    }

private:
    std::vector<Eigen::VectorXd> axes_;
    Eigen::VectorXd values_;
};

namespace detail {

/// Lower convex hull indices of (x_i, v_i) with x strictly increasing;
/// infinite values are skipped. Used by the linear-time 1D conjugate.
inline std::vector<long> lower_hull_1d(const Eigen::VectorXd& x, const Eigen::VectorXd& v) {
    std::vector<long> hull;
    for (long i = 0; i < x.size(); ++i) {
        if (!std::isfinite(v(i))) continue;
        while (hull.size() >= 2) {
            const long a = hull[hull.size() - 2], b = hull.back();
            // drop b if it lies above segment (a, i)
            const double lhs = (v(b) - v(a)) * (x(i) - x(a));
            const double rhs = (v(i) - v(a)) * (x(b) - x(a));
            if (lhs >= rhs) hull.pop_back();
            else break;
        }
        hull.push_back(i);
    }
    return hull;
}

/// Conjugate of a sampled function evaluated at the nodes of `target`:
/// g(s) = max over finite nodes x of (s.x - f(x)). 1D uses the hull scan,
/// higher dimension is a brute-force double loop.
inline Eigen::VectorXd conjugate_values(const GridFunction& f, const GridFunction& target) {
    if (!f.has_finite_node())
        throw std::invalid_argument("legendre: function is +inf everywhere");
    Eigen::VectorXd out(target.size());
    if (f.dim() == 1 && target.dim() == 1) {
        const Eigen::VectorXd& x = f.grid1d();
        const Eigen::VectorXd& v = f.values();
        const std::vector<long> hull = lower_hull_1d(x, v);
        // argmax over hull vertices is monotone in s when s is ascending
        std::size_t p = 0;
        for (long t = 0; t < target.size(); ++t) {
            const double s = target.grid1d()(t);
            auto val = [&](std::size_t h) { return s * x(hull[h]) - v(hull[h]); };
            while (p + 1 < hull.size() && val(p + 1) >= val(p)) ++p;
            // targets are ascending, but re-allow backward moves for safety
            while (p > 0 && val(p - 1) > val(p)) --p;
            out(t) = val(p);
        }
        return out;
    }
    for (long t = 0; t < target.size(); ++t) {
        const Eigen::VectorXd s = target.node(t);
        double best = -kInf;
        for (long i = 0; i < f.size(); ++i) {
            if (!std::isfinite(f.value(i))) continue;
            best = std::max(best, s.dot(f.node(i)) - f.value(i));
        }
        out(t) = best;
    }
    return out;
}

/// Default dual grid: per-axis range of finite-difference slopes, same node
/// count as the primal axis. Degenerate axes fall back to [-1, 1].
inline std::vector<Eigen::VectorXd> default_dual_axes(const GridFunction& f) {
    std::vector<Eigen::VectorXd> dual;
    for (int a = 0; a < f.dim(); ++a) {
        const Eigen::VectorXd& ax = f.axes()[a];
        double lo = kInf, hi = -kInf;
        if (f.dim() == 1) {
            const Eigen::VectorXd& v = f.values();
            for (long i = 0; i + 1 < ax.size(); ++i) {
                if (!std::isfinite(v(i)) || !std::isfinite(v(i + 1))) continue;
                const double s = (v(i + 1) - v(i)) / (ax(i + 1) - ax(i));
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        } else {
            // d > 1: directional slopes along axis a between neighbour nodes
            long stride = 1;
            for (int b = f.dim() - 1; b > a; --b) stride *= f.axes()[b].size();
            for (long i = 0; i < f.size(); ++i) {
                const long pos = (i / stride) % ax.size();
                if (pos + 1 >= ax.size()) continue;
                const double v0 = f.value(i), v1 = f.value(i + stride);
                if (!std::isfinite(v0) || !std::isfinite(v1)) continue;
                const double s = (v1 - v0) / (ax(pos + 1) - ax(pos));
                lo = std::min(lo, s);
                hi = std::max(hi, s);
            }
        }
        if (!std::isfinite(lo) || !std::isfinite(hi)) { lo = -1.0; hi = 1.0; }
        if (hi - lo < 1e-12) { lo -= 0.5; hi += 0.5; }
        const long count = std::max<long>(ax.size(), 2);
        Eigen::VectorXd g(count);
        for (long i = 0; i < count; ++i)
            g(i) = lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(count - 1);
        dual.push_back(std::move(g));
    }
    return dual;
}

inline GridFunction zero_on(std::vector<Eigen::VectorXd> axes) {
    long total = 1;
    for (const auto& ax : axes) total *= ax.size();
    return GridFunction(std::move(axes), Eigen::VectorXd::Zero(total));
}

}  // namespace detail

/// Discrete Legendre-Fenchel transform f*(s) = max_x (s.x - f(x)) over grid
/// nodes, sampled on `dualAxes` (defaults to the slope range of f).
inline GridFunction legendre(const GridFunction& f, std::vector<Eigen::VectorXd> dualAxes = {}) {
    if (dualAxes.empty()) dualAxes = detail::default_dual_axes(f);
    GridFunction target = detail::zero_on(std::move(dualAxes));
    Eigen::VectorXd vals = detail::conjugate_values(f, target);
    return GridFunction(target.axes(), std::move(vals));
}

/// Moreau envelope Q2 f(x) = inf_y { f(y) + |x-y|^2 / 2 }, computed through
/// the identity Q2 f = |.|^2/2 - (f + |.|^2/2)^* on the grid of f.
inline GridFunction moreau_Q2(const GridFunction& f) {
    Eigen::VectorXd shifted(f.size());
    for (long i = 0; i < f.size(); ++i)
        shifted(i) = f.value(i) + 0.5 * f.node(i).squaredNorm();
    GridFunction h(f.axes(), std::move(shifted));
    Eigen::VectorXd conj = detail::conjugate_values(h, f);
    Eigen::VectorXd out(f.size());
    for (long i = 0; i < f.size(); ++i) out(i) = 0.5 * f.node(i).squaredNorm() - conj(i);
    return GridFunction(f.axes(), std::move(out));
}

/// Adjoint transform P2 g(y) = sup_x { g(x) - |x-y|^2 / 2 }, computed as
/// (|.|^2/2 - g)^*(y) - |y|^2/2 on the grid of g.
inline GridFunction sup_P2(const GridFunction& g) {
    Eigen::VectorXd shifted(g.size());
    for (long i = 0; i < g.size(); ++i) {
        const double gi = g.value(i);
        shifted(i) = std::isfinite(gi) ? 0.5 * g.node(i).squaredNorm() - gi : kInf;
    }
    GridFunction h(g.axes(), std::move(shifted));
    Eigen::VectorXd conj = detail::conjugate_values(h, g);
    Eigen::VectorXd out(g.size());
    for (long i = 0; i < g.size(); ++i) out(i) = conj(i) - 0.5 * g.node(i).squaredNorm();
    return GridFunction(g.axes(), std::move(out));
}

/// Candidate dual potential built from primal optimality: one affine piece
/// per source atom, slope x_i - b_i anchored at the barycenter b_i. Atoms
/// whose barycenters merge share one anchor (their pieces then meet in a
/// kink there, as the decomposition of optimal plans requires).
///
/// The anchor values c solve
///     max  sum_i mu_i c_i - sum_j nu_j t_j
///     s.t. c_j >= c_i + (x_i - b_i).(b_j - b_i)       (piece i active at b_i)
///          t_j >= c_i + (x_i - b_i).(y_j - b_i)       (t_j = fbar(y_j))
///          c_0  = 0,
/// i.e. the offsets maximize the dual objective itself over all feasible
/// anchorings; at an exact primal optimum this LP certifies a zero duality
/// gap. Infeasibility of the constraint system means the anchors are not
/// cyclically monotone, i.e. the primal solve did not converge.
inline MaxAffineFunction potential_from_report(const SolveReport& report,
                                               const DiscreteMeasure& mu,
                                               const DiscreteMeasure& nu,
                                               double tol = 1e-8) {
    const int n = mu.size(), m = nu.size();
    Eigen::MatrixXd b = report.barycenters;
    {
        // snap merged groups onto a common anchor
        const double mergeTol = detail::merge_tolerance(mu, nu, 1e-6);
        std::vector<int> heads;
        const std::vector<int> cluster = detail::cluster_rows(b, mergeTol, &heads);
        for (int i = 0; i < n; ++i) b.row(i) = report.barycenters.row(heads[cluster[i]]);
    }
    Eigen::MatrixXd slopes = mu.points() - b;
    const double scale = 1.0 + b.cwiseAbs().maxCoeff() + slopes.cwiseAbs().maxCoeff();
    auto edge = [&](int i, int j) { return slopes.row(i).dot(b.row(j) - b.row(i)); };
    auto lift = [&](int i, int j) {
        return slopes.row(i).dot(nu.points().row(j).transpose() - b.row(i).transpose());
    };

    // variables: c_0..c_{n-1}, t_0..t_{m-1}, then one slack per inequality
    const int nDiff = n * (n - 1);
    const int nLift = n * m;
    const int vars = n + m + nDiff + nLift;
    const int rows = nDiff + nLift + 1;
    Eigen::MatrixXd A = Eigen::MatrixXd::Zero(rows, vars);
    Eigen::VectorXd rhs = Eigen::VectorXd::Zero(rows);
    Eigen::VectorXd obj = Eigen::VectorXd::Zero(vars);
    for (int i = 0; i < n; ++i) obj(i) = -mu.weight(i);
    for (int j = 0; j < m; ++j) obj(n + j) = nu.weight(j);

    int row = 0, slack = n + m;
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            if (i == j) continue;
            A(row, j) = 1.0;
            A(row, i) = -1.0;
            A(row, slack) = -1.0;
            rhs(row) = edge(i, j) - tol * scale;  // slight relaxation absorbs solver noise
            ++row;
            ++slack;
        }
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < m; ++j) {
            A(row, n + j) = 1.0;
            A(row, i) = -1.0;
            A(row, slack) = -1.0;
            rhs(row) = lift(i, j);
            ++row;
            ++slack;
        }
    A(row, 0) = 1.0;  // c_0 = 0

    LpProblem lp;
    lp.objective = std::move(obj);
    lp.eqA = std::move(A);
    lp.eqB = std::move(rhs);
    lp.lo = Eigen::VectorXd::Zero(vars);
    lp.hi = Eigen::VectorXd::Constant(vars, kInf);
    lp.lo.head(n + m).setConstant(-kInf);
    const LpResult res = solve_lp(lp);
    if (res.status == LpStatus::Infeasible)
        throw NumericError(
            "potential_from_report: offset system infeasible (primal not converged?)");
    if (res.status != LpStatus::Optimal)
        throw NumericError("potential_from_report: offset LP failed");

    Eigen::VectorXd offsets(n);
    for (int i = 0; i < n; ++i) offsets(i) = res.x(i) - slopes.row(i).dot(b.row(i));
    return MaxAffineFunction(std::move(slopes), std::move(offsets));
}

inline double integrate(const MaxAffineFunction& f, const DiscreteMeasure& m) {
    double s = 0.0;
    for (int i = 0; i < m.size(); ++i) s += m.weight(i) * f(m.point(i));
    return s;
}

/// Duality gap of a candidate potential:
///     gap = primal/2 - ( int Q2 fbar dmu - int fbar dnu ).
/// Q2 fbar is evaluated by the exact max-affine prox, whose dual certificate
/// never overestimates the envelope, so weak duality (gap >= 0) is preserved
/// by construction up to machine precision.
inline double dual_gap(const MaxAffineFunction& fbar, const DiscreteMeasure& mu,
                       const DiscreteMeasure& nu, double primalValue) {
    double q2 = 0.0;
    for (int i = 0; i < mu.size(); ++i)
        q2 += mu.weight(i) * prox_max_affine(fbar, mu.point(i)).value;
    const double dualValue = q2 - integrate(fbar, nu);
    return 0.5 * primalValue - dualValue;
}

/// Saturation identity of optimal potentials: int fbar dmubar = int fbar dnu.
inline bool check_equality_barf(const MaxAffineFunction& fbar, const DiscreteMeasure& mubar,
                                const DiscreteMeasure& nu, double tol = 1e-8) {
    return std::abs(integrate(fbar, mubar) - integrate(fbar, nu)) <= tol;
}

}  // namespace barytrans
