#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>
#include <Eigen/Dense>

#include "barytrans/numerics/lp.hpp"

namespace barytrans {

/// Convex function represented as the max of finitely many affine pieces
///     f(x) = max_k ( slopes_k . x + offsets_k ).
class MaxAffineFunction {
public:
    MaxAffineFunction(Eigen::MatrixXd slopes, Eigen::VectorXd offsets)
        : slopes_(std::move(slopes)), offsets_(std::move(offsets)) {
        if (slopes_.rows() == 0) throw std::invalid_argument("MaxAffineFunction: no pieces");
        if (offsets_.size() != slopes_.rows())
            throw std::invalid_argument("MaxAffineFunction: slopes/offsets size mismatch");
    }

    /// 1D convenience.
    static MaxAffineFunction line(const std::vector<double>& slopes,
                                  const std::vector<double>& offsets) {
        Eigen::MatrixXd a(static_cast<int>(slopes.size()), 1);
        Eigen::VectorXd c(static_cast<int>(offsets.size()));
        for (std::size_t k = 0; k < slopes.size(); ++k) a(static_cast<int>(k), 0) = slopes[k];
        for (std::size_t k = 0; k < offsets.size(); ++k) c(static_cast<int>(k)) = offsets[k];
        return MaxAffineFunction(a, c);
    }

    static MaxAffineFunction abs_1d() { return line({-1.0, 1.0}, {0.0, 0.0}); }

    int pieces() const { return static_cast<int>(slopes_.rows()); }
    int dim() const { return static_cast<int>(slopes_.cols()); }
    const Eigen::MatrixXd& slopes() const { return slopes_; }
    const Eigen::VectorXd& offsets() const { return offsets_; }

    double operator()(const Eigen::VectorXd& x) const {
        return (slopes_ * x + offsets_).maxCoeff();
    }
    double operator()(double x) const {
        Eigen::VectorXd v(1);
        v(0) = x;
        return (*this)(v);
    }

    /// Pieces within activeTol * (1 + |f(x)| + scale) of the max.
    std::vector<int> active_set(const Eigen::VectorXd& x, double activeTol = 1e-9) const {
        const Eigen::VectorXd vals = slopes_ * x + offsets_;
        const double fx = vals.maxCoeff();
        const double tol = activeTol * (1.0 + std::abs(fx));
        std::vector<int> act;
        for (int k = 0; k < pieces(); ++k)
            if (vals(k) >= fx - tol) act.push_back(k);
        return act;
    }

    /// Subgradient at x: the active pieces and the extreme slopes they span.
    /// In 1D the extreme points are the min and max active slope.
    struct Subgradient {
        std::vector<int> activeSet;
        Eigen::MatrixXd extremePoints;  // rows are generators of conv(partial f)
    };

    Subgradient subgradient(const Eigen::VectorXd& x, double activeTol = 1e-9) const {
        Subgradient sg;
        sg.activeSet = active_set(x, activeTol);
        if (dim() == 1) {
            double lo = std::numeric_limits<double>::infinity(), hi = -lo;
            for (int k : sg.activeSet) {
                lo = std::min(lo, slopes_(k, 0));
                hi = std::max(hi, slopes_(k, 0));
            }
            if (lo == hi) {
                sg.extremePoints.resize(1, 1);
                sg.extremePoints(0, 0) = lo;
            } else {
                sg.extremePoints.resize(2, 1);
                sg.extremePoints(0, 0) = lo;
                sg.extremePoints(1, 0) = hi;
            }
        } else {
            // deduplicated active slopes; hull reduction is left to callers
            std::vector<int> keep;
            for (int k : sg.activeSet) {
                bool dup = false;
                for (int r : keep)
                    if ((slopes_.row(k) - slopes_.row(r)).norm() <= 1e-12) { dup = true; break; }
                if (!dup) keep.push_back(k);
            }
            sg.extremePoints.resize(static_cast<int>(keep.size()), dim());
            for (std::size_t r = 0; r < keep.size(); ++r)
                sg.extremePoints.row(static_cast<int>(r)) = slopes_.row(keep[r]);
        }
        return sg;
    }

    /// [min, max] of active slopes at a 1D point.
    std::pair<double, double> subgradient_interval_1d(double x, double activeTol = 1e-9) const {
        if (dim() != 1) throw std::invalid_argument("subgradient_interval_1d: requires d=1");
        Eigen::VectorXd v(1);
        v(0) = x;
        auto act = active_set(v, activeTol);
        double lo = std::numeric_limits<double>::infinity(), hi = -lo;
        for (int k : act) {
            lo = std::min(lo, slopes_(k, 0));
            hi = std::max(hi, slopes_(k, 0));
        }
        return {lo, hi};
    }

    /// Restriction to the line t -> z + t * dir, itself a 1D max-affine function.
    MaxAffineFunction restrict_to_line(const Eigen::VectorXd& z, const Eigen::VectorXd& dir) const {
        Eigen::MatrixXd a(pieces(), 1);
        Eigen::VectorXd c(pieces());
        for (int k = 0; k < pieces(); ++k) {
            a(k, 0) = slopes_.row(k).dot(dir);
            c(k) = slopes_.row(k).dot(z) + offsets_(k);
        }
        return MaxAffineFunction(a, c);
    }

private:
    Eigen::MatrixXd slopes_;
    Eigen::VectorXd offsets_;
};

/// One maximal segment of the 1D upper envelope: `piece` is uniquely active
/// on the open interval (xlo, xhi).
struct EnvelopeSegment {
    double xlo;
    double xhi;
    int piece;
};

/// Upper envelope of a 1D max-affine function. Segments are ordered left to
/// right; consecutive segments meet at genuine kinks (strictly increasing
/// slopes). Breakpoint ties are resolved by cross-multiplied comparisons so
/// that coincident kinks collapse exactly.
inline std::vector<EnvelopeSegment> upper_envelope_1d(const MaxAffineFunction& f) {
    if (f.dim() != 1) throw std::invalid_argument("upper_envelope_1d: requires d=1");
    const int K = f.pieces();
    std::vector<int> idx(K);
    std::iota(idx.begin(), idx.end(), 0);
    auto slope = [&](int k) { return f.slopes()(k, 0); };
    auto off = [&](int k) { return f.offsets()(k); };
    std::sort(idx.begin(), idx.end(), [&](int i, int j) {
        if (slope(i) != slope(j)) return slope(i) < slope(j);
        return off(i) > off(j);
    });
    // drop duplicate slopes (keep the highest offset, i.e. the first)
    std::vector<int> lines;
    for (int k : idx) {
        if (!lines.empty() && slope(lines.back()) == slope(k)) continue;
        lines.push_back(k);
    }

    // hull scan; intersection comparisons via cross multiplication
    // x(i,j) = (off_i - off_j) / (slope_j - slope_i), slope_j > slope_i
    auto popMiddle = [&](int p, int mid, int l) {
        // pop mid when x(p, l) <= x(p, mid)
        const double lhs = (off(p) - off(l)) * (slope(mid) - slope(p));
        const double rhs = (off(p) - off(mid)) * (slope(l) - slope(p));
        return lhs <= rhs;
    };
    std::vector<int> hull;
    for (int l : lines) {
        while (hull.size() >= 2 && popMiddle(hull[hull.size() - 2], hull.back(), l))
            hull.pop_back();
        hull.push_back(l);
    }

    std::vector<EnvelopeSegment> segs;
    const double inf = std::numeric_limits<double>::infinity();
    for (std::size_t t = 0; t < hull.size(); ++t) {
        const double lo = (t == 0) ? -inf
                                   : (off(hull[t - 1]) - off(hull[t])) /
                                         (slope(hull[t]) - slope(hull[t - 1]));
        const double hi = (t + 1 == hull.size())
                              ? inf
                              : (off(hull[t]) - off(hull[t + 1])) /
                                    (slope(hull[t + 1]) - slope(hull[t]));
        segs.push_back({lo, hi, hull[t]});
    }
    return segs;
}

/// Pieces that never appear on the upper envelope (1D).
inline std::vector<bool> redundant_pieces_1d(const MaxAffineFunction& f) {
    std::vector<bool> redundant(f.pieces(), true);
    for (const auto& s : upper_envelope_1d(f)) redundant[s.piece] = false;
    // a duplicate of an envelope line is not redundant either
    for (int k = 0; k < f.pieces(); ++k) {
        if (!redundant[k]) continue;
        for (int r = 0; r < f.pieces(); ++r) {
            if (r != k && !redundant[r] && f.slopes()(r, 0) == f.slopes()(k, 0) &&
                f.offsets()(r) == f.offsets()(k)) {
                redundant[k] = false;
                break;
            }
        }
    }
    return redundant;
}

struct ProxResult {
    double value;          // min_y f(y) + 0.5 |x - y|^2
    Eigen::VectorXd argmin;
};

namespace detail {

/// Exact 1D prox via the envelope: the minimizer satisfies x - y in df(y).
inline ProxResult prox_1d(const MaxAffineFunction& f, double x) {
    const auto segs = upper_envelope_1d(f);
    double y = 0.0;
    for (std::size_t t = 0; t < segs.size(); ++t) {
        const double s = f.slopes()(segs[t].piece, 0);
        const double cand = x - s;
        if (cand >= segs[t].xlo && cand <= segs[t].xhi) {
            y = cand;
            break;
        }
        if (cand < segs[t].xlo) {  // stuck at the kink to the left
            y = segs[t].xlo;
            break;
        }
    }
    Eigen::VectorXd ym(1);
    ym(0) = y;
    ProxResult r;
    r.argmin = ym;
    r.value = f(ym) + 0.5 * (x - y) * (x - y);
    return r;
}

/// Prox in dimension d >= 2 through the dual problem
///     Q(x) = max_{lambda in simplex} lambda.r - 0.5 |A^T lambda|^2,
/// r_k = a_k.x + c_k, solved by away-step Frank-Wolfe with exact line search
/// plus a KKT polish on the final support. Any feasible lambda certifies a
/// lower bound on Q, so the reported value never overestimates the prox.
inline ProxResult prox_dual(const MaxAffineFunction& f, const Eigen::VectorXd& x) {
    const int K = f.pieces();
    const Eigen::MatrixXd& A = f.slopes();
    Eigen::VectorXd r = A * x + f.offsets();

    Eigen::VectorXd lambda = Eigen::VectorXd::Zero(K);
    int start;
    r.maxCoeff(&start);
    lambda(start) = 1.0;

    auto objective = [&](const Eigen::VectorXd& l) {
        return l.dot(r) - 0.5 * (A.transpose() * l).squaredNorm();
    };

    const double scale = 1.0 + r.cwiseAbs().maxCoeff();
    for (int it = 0; it < 2000; ++it) {
        const Eigen::VectorXd w = A.transpose() * lambda;  // A^T lambda
        const Eigen::VectorXd grad = r - A * w;
        int fw;
        grad.maxCoeff(&fw);
        const double gap = grad(fw) - grad.dot(lambda);
        if (gap <= 1e-13 * scale) break;

        int away = -1;
        double awayVal = std::numeric_limits<double>::infinity();
        for (int k = 0; k < K; ++k)
            if (lambda(k) > 1e-14 && grad(k) < awayVal) { awayVal = grad(k); away = k; }

        Eigen::VectorXd dir;
        double gmax;
        const double fwGain = grad(fw) - grad.dot(lambda);
        const double awGain = grad.dot(lambda) - grad(away);
        if (fwGain >= awGain) {
            dir = -lambda;
            dir(fw) += 1.0;
            gmax = 1.0;
        } else {
            dir = lambda;
            dir(away) -= 1.0;
            gmax = lambda(away) / (1.0 - std::min(lambda(away), 1.0 - 1e-16));
        }
        const Eigen::VectorXd Ad = A.transpose() * dir;
        const double curv = Ad.squaredNorm();
        const double slope = grad.dot(dir);
        double gamma = curv > 0 ? slope / curv : (slope > 0 ? gmax : 0.0);
        gamma = std::clamp(gamma, 0.0, gmax);
        if (gamma <= 0) break;
        lambda += gamma * dir;
        lambda = lambda.cwiseMax(0.0);
        lambda /= lambda.sum();
    }

    // KKT polish on the support: equality-constrained QP, then keep whichever
    // feasible candidate scores higher.
    std::vector<int> support;
    for (int k = 0; k < K; ++k)
        if (lambda(k) > 1e-12) support.push_back(k);
    Eigen::VectorXd best = lambda;
    double bestVal = objective(lambda);
    const int S = static_cast<int>(support.size());
    if (S >= 1) {
        Eigen::MatrixXd As(S, f.dim());
        Eigen::VectorXd rs(S);
        for (int t = 0; t < S; ++t) {
            As.row(t) = A.row(support[t]);
            rs(t) = r(support[t]);
        }
        Eigen::MatrixXd kkt = Eigen::MatrixXd::Zero(S + 1, S + 1);
        kkt.topLeftCorner(S, S) = As * As.transpose();
        kkt.topRightCorner(S, 1).setOnes();
        kkt.bottomLeftCorner(1, S).setOnes();
        Eigen::VectorXd rhs(S + 1);
        rhs.head(S) = rs;
        rhs(S) = 1.0;
        Eigen::VectorXd sol = kkt.completeOrthogonalDecomposition().solve(rhs);
        Eigen::VectorXd cand = Eigen::VectorXd::Zero(K);
        bool ok = true;
        for (int t = 0; t < S; ++t) {
            if (sol(t) < -1e-10) { ok = false; break; }
            cand(support[t]) = std::max(sol(t), 0.0);
        }
        if (ok && cand.sum() > 0) {
            cand /= cand.sum();
            const double v = objective(cand);
            if (v > bestVal) { bestVal = v; best = cand; }
        }
    }

    ProxResult out;
    out.argmin = x - A.transpose() * best;
    out.value = bestVal;
    return out;
}

}  // namespace detail

/// Moreau prox of a max-affine function: min_y f(y) + 0.5 |x - y|^2,
/// exact in 1D via the envelope, dual-certified in higher dimension.
inline ProxResult prox_max_affine(const MaxAffineFunction& f, const Eigen::VectorXd& x) {
    if (f.dim() == 1) return detail::prox_1d(f, x(0));
    return detail::prox_dual(f, x);
}

}  // namespace barytrans
