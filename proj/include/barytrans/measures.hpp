#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <utility>
#include <vector>

#include <Eigen/Core>

#include "barytrans/numerics/eig.hpp"
#include "barytrans/numerics/lp.hpp"
#include "barytrans/numerics/rng.hpp"
#include "barytrans/numerics/transport_lmo.hpp"

namespace barytrans {

/// Finitely supported probability measure. Points live in the rows of an
/// n x d matrix; weights are strictly positive and sum to one. Duplicate
/// support points are merged at construction by summing their weights.
class DiscreteMeasure {
public:
    DiscreteMeasure(Eigen::MatrixXd points, Eigen::VectorXd weights)
        : points_(std::move(points)), weights_(std::move(weights)) {
        if (points_.rows() == 0 || points_.cols() == 0)
            throw std::invalid_argument("DiscreteMeasure: empty support");
        if (weights_.size() != points_.rows())
            throw std::invalid_argument("DiscreteMeasure: weights/points size mismatch");
        if ((weights_.array() <= 0).any())
            throw std::invalid_argument("DiscreteMeasure: weights must be strictly positive");
        const double sum = weights_.sum();
        if (std::abs(sum - 1.0) > 1e-6)
            throw std::invalid_argument("DiscreteMeasure: weights do not sum to 1");
        weights_ /= sum;
        merge_duplicates();
    }

    /// Accepts any nonnegative weights, drops zero-mass atoms and rescales
    /// the rest to a probability vector.
    static DiscreteMeasure from_unnormalized(Eigen::MatrixXd points, Eigen::VectorXd weights) {
        const double sum = weights.sum();
        if (sum <= 0) throw std::invalid_argument("DiscreteMeasure: nonpositive total mass");
        std::vector<int> keep;
        for (int i = 0; i < weights.size(); ++i)
            if (weights(i) > 0) keep.push_back(i);
        Eigen::MatrixXd p(static_cast<int>(keep.size()), points.cols());
        Eigen::VectorXd w(static_cast<int>(keep.size()));
        for (std::size_t i = 0; i < keep.size(); ++i) {
            p.row(static_cast<int>(i)) = points.row(keep[i]);
            w(static_cast<int>(i)) = weights(keep[i]) / sum;
        }
        return DiscreteMeasure(std::move(p), std::move(w));
    }

    static DiscreteMeasure dirac(const Eigen::VectorXd& x) {
        Eigen::MatrixXd p(1, x.size());
        p.row(0) = x;
        return DiscreteMeasure(p, Eigen::VectorXd::Ones(1));
    }

    /// 1D convenience: atoms + weights.
    static DiscreteMeasure line(const std::vector<double>& xs, const std::vector<double>& ws) {
        Eigen::MatrixXd p(static_cast<int>(xs.size()), 1);
        Eigen::VectorXd w(static_cast<int>(ws.size()));
        for (std::size_t i = 0; i < xs.size(); ++i) p(static_cast<int>(i), 0) = xs[i];
        for (std::size_t i = 0; i < ws.size(); ++i) w(static_cast<int>(i)) = ws[i];
        return DiscreteMeasure(p, w);
    }

    int size() const { return static_cast<int>(points_.rows()); }
    int dim() const { return static_cast<int>(points_.cols()); }
    const Eigen::MatrixXd& points() const { return points_; }
    const Eigen::VectorXd& weights() const { return weights_; }
    Eigen::VectorXd point(int i) const { return points_.row(i).transpose(); }
    double weight(int i) const { return weights_(i); }

    Eigen::VectorXd mean() const { return points_.transpose() * weights_; }

    Eigen::MatrixXd covariance() const {
        const Eigen::VectorXd m = mean();
        Eigen::MatrixXd c = Eigen::MatrixXd::Zero(dim(), dim());
        for (int i = 0; i < size(); ++i) {
            const Eigen::VectorXd z = point(i) - m;
            c += weights_(i) * z * z.transpose();
        }
        return c;
    }

    double second_moment() const {
        return (points_.rowwise().squaredNorm().array() * weights_.array()).sum();
    }

    DiscreteMeasure translated(const Eigen::VectorXd& h) const {
        Eigen::MatrixXd p = points_;
        p.rowwise() += h.transpose();
        return DiscreteMeasure(p, weights_);
    }

    DiscreteMeasure scaled(double s) const { return DiscreteMeasure(points_ * s, weights_); }

    double support_diameter() const {
        double d2 = 0.0;
        for (int i = 0; i < size(); ++i)
            for (int j = i + 1; j < size(); ++j)
                d2 = std::max(d2, (point(i) - point(j)).squaredNorm());
        return std::sqrt(d2);
    }

private:
    void merge_duplicates() {
        const int n = size();
        const double scale = 1.0 + points_.cwiseAbs().maxCoeff();
        const double tol = 1e-12 * scale;
        std::vector<int> rep(n, -1);
        std::vector<int> keep;
        for (int i = 0; i < n; ++i) {
            for (int k : keep) {
                if ((points_.row(i) - points_.row(k)).norm() <= tol) {
                    rep[i] = k;
                    break;
                }
            }
            if (rep[i] < 0) {
                rep[i] = i;
                keep.push_back(i);
            }
        }
        if (static_cast<int>(keep.size()) == n) return;
        Eigen::MatrixXd p(static_cast<int>(keep.size()), dim());
        Eigen::VectorXd w = Eigen::VectorXd::Zero(static_cast<int>(keep.size()));
        std::vector<int> slot(n, -1);
        for (std::size_t k = 0; k < keep.size(); ++k) {
            slot[keep[k]] = static_cast<int>(k);
            p.row(static_cast<int>(k)) = points_.row(keep[k]);
        }
        for (int i = 0; i < n; ++i) w(slot[rep[i]]) += weights_(i);
        points_ = std::move(p);
        weights_ = std::move(w);
    }

    Eigen::MatrixXd points_;
    Eigen::VectorXd weights_;
};

/// Gaussian measure N(mean, cov). The covariance is symmetrized on input and
/// eigenvalues in [-1e-10, 0) are clamped to zero.
class GaussianMeasure {
public:
    GaussianMeasure(Eigen::VectorXd mean, Eigen::MatrixXd cov)
        : mean_(std::move(mean)), cov_(std::move(cov)) {
        const int d = static_cast<int>(mean_.size());
        if (cov_.rows() != d || cov_.cols() != d)
            throw std::invalid_argument("GaussianMeasure: cov shape mismatch");
        const double scale = 1.0 + cov_.cwiseAbs().maxCoeff();
        if ((cov_ - cov_.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
            throw std::invalid_argument("GaussianMeasure: cov not symmetric");
        cov_ = 0.5 * (cov_ + cov_.transpose());
        SymEig e = sym_eig(cov_);
        if (e.lambda.minCoeff() < -1e-10 * scale)
            throw std::invalid_argument("GaussianMeasure: cov not positive semidefinite");
        if (e.lambda.minCoeff() < 0) {
            Eigen::VectorXd clamped = e.lambda.cwiseMax(0.0);
            cov_ = e.Q * clamped.asDiagonal() * e.Q.transpose();
            cov_ = 0.5 * (cov_ + cov_.transpose());
        }
    }

    static GaussianMeasure standard(int d) {
        return GaussianMeasure(Eigen::VectorXd::Zero(d), Eigen::MatrixXd::Identity(d, d));
    }

    int dim() const { return static_cast<int>(mean_.size()); }
    const Eigen::VectorXd& mean() const { return mean_; }
    const Eigen::MatrixXd& cov() const { return cov_; }

private:
    Eigen::VectorXd mean_;
    Eigen::MatrixXd cov_;
};

struct Moments {
    Eigen::VectorXd mean;
    Eigen::MatrixXd cov;
};

inline Moments moments(const DiscreteMeasure& m) { return {m.mean(), m.covariance()}; }
inline Moments moments(const GaussianMeasure& m) { return {m.mean(), m.cov()}; }

/// Coupling of two discrete measures: nonnegative matrix whose row sums match
/// the first marginal and column sums the second, within `tol` in sup norm.
class TransportPlan {
public:
    TransportPlan(Eigen::MatrixXd matrix, DiscreteMeasure rowMarginal, DiscreteMeasure colMarginal,
                  double tol = 1e-8)
        : matrix_(std::move(matrix)), row_(std::move(rowMarginal)), col_(std::move(colMarginal)) {
        if (matrix_.rows() != row_.size() || matrix_.cols() != col_.size())
            throw std::invalid_argument("TransportPlan: shape mismatch");
        if ((matrix_.array() < -1e-12).any())
            throw std::invalid_argument("TransportPlan: negative entry");
        matrix_ = matrix_.cwiseMax(0.0);
        if (marginal_residual() > tol)
            throw std::invalid_argument("TransportPlan: marginal mismatch");
    }

    const Eigen::MatrixXd& matrix() const { return matrix_; }
    const DiscreteMeasure& rowMarginal() const { return row_; }
    const DiscreteMeasure& colMarginal() const { return col_; }

    double marginal_residual() const {
        const double r = (matrix_.rowwise().sum() - row_.weights()).cwiseAbs().maxCoeff();
        const double c = (matrix_.colwise().sum().transpose() - col_.weights()).cwiseAbs().maxCoeff();
        return std::max(r, c);
    }

    /// Conditional barycenters b_i = (1/mu_i) sum_j pi_ij y_j, one per row.
    Eigen::MatrixXd barycenters() const {
        Eigen::MatrixXd b = matrix_ * col_.points();
        b.array().colwise() /= row_.weights().array();
        return b;
    }

    int nonzeros(double tol = 1e-14) const {
        return static_cast<int>((matrix_.array() > tol).count());
    }

private:
    Eigen::MatrixXd matrix_;
    DiscreteMeasure row_;
    DiscreteMeasure col_;
};

/// Probability kernel q with barycenter(q_z) = z for every source atom z.
/// Mixing the rows against the source weights reproduces the target measure.
class MartingaleKernel {
public:
    MartingaleKernel(DiscreteMeasure source, std::vector<DiscreteMeasure> rows)
        : source_(std::move(source)), rows_(std::move(rows)) {
        if (static_cast<int>(rows_.size()) != source_.size())
            throw std::invalid_argument("MartingaleKernel: one row per source atom required");
    }

    const DiscreteMeasure& source() const { return source_; }
    const std::vector<DiscreteMeasure>& rows() const { return rows_; }
    const DiscreteMeasure& row(int i) const { return rows_[i]; }

    double martingale_residual() const {
        double r = 0.0;
        for (int i = 0; i < source_.size(); ++i)
            r = std::max(r, (rows_[i].mean() - source_.point(i)).norm());
        return r;
    }

    /// Mixture sum_z w_z q_z as a discrete measure.
    DiscreteMeasure mixture() const {
        int total = 0;
        for (const auto& r : rows_) total += r.size();
        Eigen::MatrixXd p(total, source_.dim());
        Eigen::VectorXd w(total);
        int at = 0;
        for (int i = 0; i < source_.size(); ++i) {
            for (int k = 0; k < rows_[i].size(); ++k) {
                p.row(at) = rows_[i].points().row(k);
                w(at) = source_.weight(i) * rows_[i].weight(k);
                ++at;
            }
        }
        return DiscreteMeasure::from_unnormalized(p, w);
    }

    /// Checks the martingale property and that the mixture equals `target`.
    bool validate(const DiscreteMeasure& target, double tol = 1e-8) const {
        if (martingale_residual() > tol) return false;
        return measures_close(mixture(), target, tol);
    }

    /// Tolerant equality of discrete measures: atoms matched within tol,
    /// masses compared per matched cluster.
    static bool measures_close(const DiscreteMeasure& a, const DiscreteMeasure& b, double tol) {
        if (a.dim() != b.dim()) return false;
        const double scale =
            1.0 + std::max(a.points().cwiseAbs().maxCoeff(), b.points().cwiseAbs().maxCoeff());
        const double dtol = tol * scale;
        Eigen::VectorXd remaining = a.weights();
        for (int j = 0; j < b.size(); ++j) {
            double mass = 0.0;
            for (int i = 0; i < a.size(); ++i) {
                if ((a.point(i) - b.point(j)).norm() <= dtol) {
                    mass += remaining(i);
                    remaining(i) = 0.0;
                }
            }
            if (std::abs(mass - b.weight(j)) > tol) return false;
        }
        return remaining.cwiseAbs().maxCoeff() <= tol;
    }

private:
    DiscreteMeasure source_;
    std::vector<DiscreteMeasure> rows_;
};

struct W2Result {
    double value;
    TransportPlan plan;
};

/// Squared quadratic Wasserstein distance between discrete measures, with an
/// optimal vertex plan from the transportation simplex.
inline W2Result w2_discrete(const DiscreteMeasure& alpha, const DiscreteMeasure& beta) {
    if (alpha.dim() != beta.dim())
        throw std::invalid_argument("w2_discrete: dimension mismatch");
    TransportSimplex ts(alpha.weights(), beta.weights());
    const auto& xp = alpha.points();
    const auto& yp = beta.points();
    auto cost = [&](int i, int j) { return (xp.row(i) - yp.row(j)).squaredNorm(); };
    auto info = ts.solve(cost);
    if (!info.optimal) throw std::runtime_error("w2_discrete: transport simplex failed");
    return {std::max(info.objective, 0.0), TransportPlan(ts.plan(), alpha, beta)};
}

struct ConvexOrderResult {
    bool dominated = false;
    std::optional<MartingaleKernel> witness;
};

/// 1D convex-order test via potential functions: equal means and
/// E_beta (y-k)_+ >= E_alpha (x-k)_+ at every atom k of either support.
inline bool convex_order_potential_1d(const DiscreteMeasure& alpha, const DiscreteMeasure& beta,
                                      double tol = 1e-8) {
    if (alpha.dim() != 1 || beta.dim() != 1)
        throw std::invalid_argument("convex_order_potential_1d: requires 1D measures");
    const double scale = 1.0 + std::max(alpha.points().cwiseAbs().maxCoeff(),
                                        beta.points().cwiseAbs().maxCoeff());
    if (std::abs(alpha.mean()(0) - beta.mean()(0)) > tol * scale) return false;
    auto call = [](const DiscreteMeasure& m, double k) {
        double s = 0.0;
        for (int i = 0; i < m.size(); ++i) s += m.weight(i) * std::max(m.point(i)(0) - k, 0.0);
        return s;
    };
    for (const DiscreteMeasure* m : {&alpha, &beta}) {
        for (int i = 0; i < m->size(); ++i) {
            const double k = m->point(i)(0);
            if (call(beta, k) < call(alpha, k) - tol * scale) return false;
        }
    }
    return true;
}

/// Strassen test for alpha <=_c beta on finite supports: feasibility of the
/// LP {pi >= 0, marginals (alpha, beta), sum_j pi_ij y_j = alpha_i x_i}.
/// In 1D the result is cross-checked against the potential test.
inline ConvexOrderResult check_convex_order(const DiscreteMeasure& alpha,
                                            const DiscreteMeasure& beta, double tol = 1e-8) {
    if (alpha.dim() != beta.dim())
        throw std::invalid_argument("check_convex_order: dimension mismatch");
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
    for (int i = 0; i < n; ++i) {
        for (int k = 0; k < d; ++k) {
            const int r = n + m - 1 + i * d + k;
            for (int j = 0; j < m; ++j) a(r, var(i, j)) = beta.points()(j, k);
            rhs(r) = alpha.weight(i) * alpha.points()(i, k);
        }
    }

    LpProblem lp = LpProblem::standard(Eigen::VectorXd::Zero(n * m), std::move(a), std::move(rhs));
    LpOptions opt;
    opt.feasTol = tol;
    LpResult res = solve_lp(lp, opt);
    if (res.status == LpStatus::IterationLimit)
        throw std::runtime_error("check_convex_order: LP pivot budget exhausted");

    ConvexOrderResult out;
    out.dominated = (res.status == LpStatus::Optimal);
    if (out.dominated) {
        std::vector<DiscreteMeasure> kernelRows;
        kernelRows.reserve(n);
        for (int i = 0; i < n; ++i) {
            Eigen::VectorXd w(m);
            for (int j = 0; j < m; ++j) w(j) = std::max(res.x(var(i, j)), 0.0);
            kernelRows.push_back(DiscreteMeasure::from_unnormalized(beta.points(), w));
        }
        out.witness = MartingaleKernel(alpha, std::move(kernelRows));
    }

    if (d == 1) {
        const bool potential = convex_order_potential_1d(alpha, beta, tol);
        if (potential != out.dominated)
            throw std::runtime_error("check_convex_order: LP and 1D potential test disagree");
    }
    return out;
}

/// Gaussian convex order: equal means and Sigma_beta - Sigma_alpha PSD.
inline bool check_convex_order_gaussian(const GaussianMeasure& alpha, const GaussianMeasure& beta,
                                        double tol = 1e-6) {
    if (alpha.dim() != beta.dim())
        throw std::invalid_argument("check_convex_order_gaussian: dimension mismatch");
    if ((alpha.mean() - beta.mean()).norm() > tol) return false;
    return min_eigenvalue(beta.cov() - alpha.cov()) >= -tol;
}

/// Deterministic sampling given an RngStream: Gaussian draws use the spectral
/// square root of the covariance, discrete draws inverse-CDF on the weights.
inline Eigen::MatrixXd sample(const GaussianMeasure& m, int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    const Eigen::MatrixXd root = psd_sqrt(m.cov());
    Eigen::MatrixXd out(n, m.dim());
    for (int i = 0; i < n; ++i)
        out.row(i) = (m.mean() + root * rng.gaussian_vector(m.dim())).transpose();
    return out;
}

inline Eigen::MatrixXd sample(const DiscreteMeasure& m, int n, RngStream& rng) {
    if (n < 1) throw std::invalid_argument("sample: n must be >= 1");
    Eigen::VectorXd cdf(m.size());
    double acc = 0.0;
    for (int i = 0; i < m.size(); ++i) {
        acc += m.weight(i);
        cdf(i) = acc;
    }
    Eigen::MatrixXd out(n, m.dim());
    for (int i = 0; i < n; ++i) {
        const double u = rng.next_uniform();
        int k = 0;
        while (k + 1 < m.size() && u > cdf(k)) ++k;
        out.row(i) = m.points().row(k);
    }
    return out;
}

/// Empirical measure on sample points (uniform weights, duplicates merged).
inline DiscreteMeasure empirical_measure(const Eigen::MatrixXd& points) {
    return DiscreteMeasure::from_unnormalized(
        points, Eigen::VectorXd::Ones(points.rows()));
}

}  // namespace barytrans
