#pragma once

#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace barytrans {

constexpr double kInf = std::numeric_limits<double>::infinity();

/// min c.x  subject to  eqA x = eqB,  lo <= x <= hi  (+-inf allowed in bounds).
struct LpProblem {
    Eigen::VectorXd objective;
    Eigen::MatrixXd eqA;
    Eigen::VectorXd eqB;
    Eigen::VectorXd lo;
    Eigen::VectorXd hi;

    /// All-variable default bounds x >= 0.
    static LpProblem standard(Eigen::VectorXd c, Eigen::MatrixXd a, Eigen::VectorXd b) {
        LpProblem p;
        p.objective = std::move(c);
        p.eqA = std::move(a);
        p.eqB = std::move(b);
        p.lo = Eigen::VectorXd::Zero(p.objective.size());
        p.hi = Eigen::VectorXd::Constant(p.objective.size(), kInf);
        return p;
    }
};

enum class LpStatus { Optimal, Infeasible, Unbounded, IterationLimit };

struct LpResult {
    LpStatus status = LpStatus::IterationLimit;
    Eigen::VectorXd x;
    double value = 0.0;
    double phase1Residual = 0.0;
    long pivots = 0;
};

struct LpOptions {
    double optTol = 1e-9;    // reduced-cost optimality threshold
    double feasTol = 1e-9;   // phase-1 residual threshold (scaled by 1+|b|_inf)
    long maxPivots = -1;     // <0: automatic budget
};

namespace detail {

/// Dense tableau simplex with Bland's pivoting rule (anti-cycling) and a
/// pivot budget as a defensive guard.
class SimplexTableau {
public:
    SimplexTableau(Eigen::MatrixXd a, Eigen::VectorXd b) : t_(std::move(a)), b_(std::move(b)) {
        rows_ = static_cast<int>(t_.rows());
        cols_ = static_cast<int>(t_.cols());
    }

    // Adds artificial columns, runs phase 1, drops redundant rows.
    // Returns the phase-1 objective (sum of artificial values).
    double phase1(const LpOptions& opt, long& pivots, long budget, bool& hitLimit) {
        for (int i = 0; i < rows_; ++i) {
            if (b_(i) < 0) {
                t_.row(i) = -t_.row(i);
                b_(i) = -b_(i);
            }
        }
        structCols_ = cols_;
        t_.conservativeResize(rows_, cols_ + rows_);
        t_.rightCols(rows_).setIdentity();
        cols_ += rows_;
        basis_.resize(rows_);
        for (int i = 0; i < rows_; ++i) basis_[i] = structCols_ + i;

        Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
        cost.tail(rows_).setOnes();
        buildZRow(cost);
        hitLimit = !iterate(opt, pivots, budget);
        const double p1 = objectiveValue(cost);
        if (hitLimit) return p1;

        // Pivot artificials out of the basis where possible; an all-zero
        // structural row is redundant and gets dropped.
        for (int i = static_cast<int>(basis_.size()) - 1; i >= 0; --i) {
            if (basis_[i] < structCols_) continue;
            int s = -1;
            for (int j = 0; j < structCols_; ++j) {
                if (std::abs(t_(i, j)) > 1e-9) { s = j; break; }
            }
            if (s >= 0) {
                pivot(i, s);
                ++pivots;
            } else {
                removeRow(i);
            }
        }
        dropArtificialCols();
        return p1;
    }

    // Phase 2 on structural costs. Returns false if the pivot budget ran out.
    bool phase2(const Eigen::VectorXd& structCost, const LpOptions& opt, long& pivots,
                long budget, bool& unbounded) {
        Eigen::VectorXd cost = Eigen::VectorXd::Zero(cols_);
        cost.head(structCost.size()) = structCost;
        buildZRow(cost);
        unbounded_ = false;
        const bool ok = iterate(opt, pivots, budget);
        unbounded = unbounded_;
        return ok;
    }

    Eigen::VectorXd solution(int nStruct) const {
        Eigen::VectorXd x = Eigen::VectorXd::Zero(nStruct);
        for (int i = 0; i < rows_; ++i)
            if (basis_[i] < nStruct) x(basis_[i]) = b_(i);
        return x;
    }

private:
    void buildZRow(const Eigen::VectorXd& cost) {
        cost_ = cost;
        z_ = cost;
        for (int i = 0; i < rows_; ++i) z_ -= cost(basis_[i]) * t_.row(i).transpose();
    }

    double objectiveValue(const Eigen::VectorXd& cost) const {
        double v = 0.0;
        for (int i = 0; i < rows_; ++i) v += cost(basis_[i]) * b_(i);
        return v;
    }

    // Bland: entering = lowest-index column with negative reduced cost;
    // leaving = min-ratio row, ties broken by lowest basic variable index.
    bool iterate(const LpOptions& opt, long& pivots, long budget) {
        while (true) {
            int s = -1;
            for (int j = 0; j < cols_; ++j) {
                if (z_(j) < -opt.optTol) { s = j; break; }
            }
            if (s < 0) return true;

            int r = -1;
            double bestRatio = kInf;
            for (int i = 0; i < rows_; ++i) {
                if (t_(i, s) > 1e-11) {
                    const double ratio = b_(i) / t_(i, s);
                    if (ratio < bestRatio - 1e-12 ||
                        (ratio < bestRatio + 1e-12 && (r < 0 || basis_[i] < basis_[r]))) {
                        bestRatio = ratio;
                        r = i;
                    }
                }
            }
            if (r < 0) { unbounded_ = true; return true; }

            pivot(r, s);
            if (++pivots > budget) return false;
        }
    }

    void pivot(int r, int s) {
        const double piv = t_(r, s);
        t_.row(r) /= piv;
        b_(r) /= piv;
        for (int i = 0; i < rows_; ++i) {
            if (i == r) continue;
            const double f = t_(i, s);
            if (f != 0.0) {
                t_.row(i) -= f * t_.row(r);
                b_(i) -= f * b_(r);
                t_(i, s) = 0.0;
            }
        }
        const double zf = z_(s);
        if (zf != 0.0) {
            z_ -= zf * t_.row(r).transpose();
            z_(s) = 0.0;
        }
        basis_[r] = s;
        if (b_(r) < 0 && b_(r) > -1e-12) b_(r) = 0.0;
    }

    void removeRow(int i) {
        const int last = rows_ - 1;
        if (i != last) {
            t_.row(i) = t_.row(last);
            b_(i) = b_(last);
            basis_[i] = basis_[last];
        }
        t_.conservativeResize(last, Eigen::NoChange);
        b_.conservativeResize(last);
        basis_.resize(last);
        rows_ = last;
    }

    void dropArtificialCols() {
        t_.conservativeResize(Eigen::NoChange, structCols_);
        cols_ = structCols_;
        z_.conservativeResize(structCols_);
    }

    Eigen::MatrixXd t_;
    Eigen::VectorXd b_;
    Eigen::VectorXd z_;
    Eigen::VectorXd cost_;
    std::vector<int> basis_;
    int rows_ = 0, cols_ = 0, structCols_ = 0;
    bool unbounded_ = false;
};

}  // namespace detail

/// Two-phase dense simplex with Bland's rule. Bounded variables are shifted
/// or split into nonnegative parts; two-sided finite bounds add a slack row.
inline LpResult solve_lp(const LpProblem& p, const LpOptions& opt = {}) {
    const int n = static_cast<int>(p.objective.size());
    const int m = static_cast<int>(p.eqA.rows());
    if (p.eqA.cols() != n || p.eqB.size() != m || p.lo.size() != n || p.hi.size() != n)
        throw std::invalid_argument("solve_lp: inconsistent dimensions");
    for (int j = 0; j < n; ++j)
        if (p.lo(j) > p.hi(j)) throw std::invalid_argument("solve_lp: lo > hi");

    // Standard-form conversion bookkeeping: x_j = base_j + sign_j * xhat_{col_j}
    // (free variables additionally subtract xhat_{negCol_j}).
    struct VarMap {
        double base = 0.0;
        double sign = 1.0;
        int col = -1;
        int negCol = -1;
    };
    std::vector<VarMap> map(n);
    int cols = 0;
    int extraRows = 0;
    for (int j = 0; j < n; ++j) {
        const bool loF = std::isfinite(p.lo(j));
        const bool hiF = std::isfinite(p.hi(j));
        if (loF) {
            map[j] = {p.lo(j), 1.0, cols++, -1};
            if (hiF) ++extraRows;  // xhat + slack = hi - lo
        } else if (hiF) {
            map[j] = {p.hi(j), -1.0, cols++, -1};
        } else {
            map[j] = {0.0, 1.0, cols, cols + 1};
            cols += 2;
        }
    }
    const int slackBase = cols;
    cols += extraRows;

    Eigen::MatrixXd a = Eigen::MatrixXd::Zero(m + extraRows, cols);
    Eigen::VectorXd b(m + extraRows);
    Eigen::VectorXd c = Eigen::VectorXd::Zero(cols);
    double constShift = 0.0;

    b.head(m) = p.eqB;
    for (int j = 0; j < n; ++j) {
        const VarMap& v = map[j];
        a.block(0, v.col, m, 1) = v.sign * p.eqA.col(j);
        if (v.negCol >= 0) a.block(0, v.negCol, m, 1) = -p.eqA.col(j);
        if (v.base != 0.0) {
            b.head(m) -= v.base * p.eqA.col(j);
            constShift += p.objective(j) * v.base;
        }
        c(v.col) = v.sign * p.objective(j);
        if (v.negCol >= 0) c(v.negCol) = -p.objective(j);
    }
    {
        int r = m, s = slackBase;
        for (int j = 0; j < n; ++j) {
            if (std::isfinite(p.lo(j)) && std::isfinite(p.hi(j))) {
                a(r, map[j].col) = 1.0;
                a(r, s) = 1.0;
                b(r) = p.hi(j) - p.lo(j);
                ++r;
                ++s;
            }
        }
    }

    LpResult res;
    detail::SimplexTableau tab(a, b);
    const long budget = opt.maxPivots > 0
                            ? opt.maxPivots
                            : 50000 + 200L * (a.rows() + a.cols());
    bool hitLimit = false;
    const double scale = 1.0 + (p.eqB.size() > 0 ? p.eqB.cwiseAbs().maxCoeff() : 0.0);
    res.phase1Residual = tab.phase1(opt, res.pivots, budget, hitLimit);
    if (hitLimit) { res.status = LpStatus::IterationLimit; return res; }
    if (res.phase1Residual > opt.feasTol * scale) {
        res.status = LpStatus::Infeasible;
        return res;
    }

    bool unbounded = false;
    if (!tab.phase2(c, opt, res.pivots, budget, unbounded)) {
        res.status = LpStatus::IterationLimit;
        return res;
    }
    if (unbounded) { res.status = LpStatus::Unbounded; return res; }

    const Eigen::VectorXd xhat = tab.solution(cols);
    res.x.resize(n);
    for (int j = 0; j < n; ++j) {
        double v = map[j].base + map[j].sign * xhat(map[j].col);
        if (map[j].negCol >= 0) v -= xhat(map[j].negCol);
        res.x(j) = v;
    }
    res.value = p.objective.dot(res.x);
    (void)constShift;
    res.status = LpStatus::Optimal;
    return res;
}

}  // namespace barytrans
