#pragma once

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <vector>

#include <Eigen/Core>

namespace barytrans {

/// Eigendecomposition of a symmetric matrix: S = Q diag(lambda) Q^T,
/// eigenvalues sorted descending, Q orthogonal (columns are eigenvectors).
struct SymEig {
    Eigen::MatrixXd Q;
    Eigen::VectorXd lambda;

    Eigen::MatrixXd reconstruct() const {
        return Q * lambda.asDiagonal() * Q.transpose();
    }
};

namespace detail {

inline double off_diagonal_norm(const Eigen::MatrixXd& a) {
    double s = 0.0;
    for (int i = 0; i < a.rows(); ++i)
        for (int j = 0; j < a.cols(); ++j)
            if (i != j) s += a(i, j) * a(i, j);
    return std::sqrt(s);
}

}  // namespace detail

/// Cyclic Jacobi eigensolver. Rotations sweep the upper triangle until the
/// off-diagonal Frobenius norm drops below 1e-12 * ||S||_F.
/// Throws std::invalid_argument if S is not symmetric within symTol.
inline SymEig sym_eig(const Eigen::MatrixXd& s, double symTol = 1e-9) {
    const int d = static_cast<int>(s.rows());
    if (s.cols() != d) throw std::invalid_argument("sym_eig: matrix not square");
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    if ((s - s.transpose()).cwiseAbs().maxCoeff() > symTol * scale)
        throw std::invalid_argument("sym_eig: matrix not symmetric");

    Eigen::MatrixXd a = 0.5 * (s + s.transpose());
    Eigen::MatrixXd v = Eigen::MatrixXd::Identity(d, d);
    const double fro = a.norm();
    const double target = 1e-12 * (fro > 0 ? fro : 1.0);

    for (int sweep = 0; sweep < 100 && detail::off_diagonal_norm(a) > target; ++sweep) {
        for (int p = 0; p < d - 1; ++p) {
            for (int q = p + 1; q < d; ++q) {
                const double apq = a(p, q);
                if (std::abs(apq) <= 1e-300) continue;
                const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
                const double t = (theta >= 0 ? 1.0 : -1.0) /
                                 (std::abs(theta) + std::sqrt(theta * theta + 1.0));
                const double c = 1.0 / std::sqrt(t * t + 1.0);
                const double sn = t * c;
                const double tau = sn / (1.0 + c);

                const double app = a(p, p), aqq = a(q, q);
                a(p, p) = app - t * apq;
                a(q, q) = aqq + t * apq;
                a(p, q) = 0.0;
                a(q, p) = 0.0;
                for (int r = 0; r < d; ++r) {
                    if (r != p && r != q) {
                        const double arp = a(r, p), arq = a(r, q);
                        a(r, p) = arp - sn * (arq + tau * arp);
                        a(p, r) = a(r, p);
                        a(r, q) = arq + sn * (arp - tau * arq);
                        a(q, r) = a(r, q);
                    }
                    const double vrp = v(r, p), vrq = v(r, q);
                    v(r, p) = vrp - sn * (vrq + tau * vrp);
                    v(r, q) = vrq + sn * (vrp - tau * vrq);
                }
            }
        }
    }

    std::vector<int> order(d);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int i, int j) { return a(i, i) > a(j, j); });

    SymEig out;
    out.Q.resize(d, d);
    out.lambda.resize(d);
    for (int k = 0; k < d; ++k) {
        out.lambda(k) = a(order[k], order[k]);
        out.Q.col(k) = v.col(order[k]);
    }
    return out;
}

/// Apply a spectral function f(lambda) to a symmetric matrix.
template <class F>
Eigen::MatrixXd spectral_apply(const Eigen::MatrixXd& s, F&& f, double symTol = 1e-9) {
    SymEig e = sym_eig(s, symTol);
    Eigen::VectorXd g(e.lambda.size());
    for (int i = 0; i < g.size(); ++i) g(i) = f(e.lambda(i));
    return e.Q * g.asDiagonal() * e.Q.transpose();
}

/// Symmetric PSD square root. Eigenvalues in [-1e-10, 0) are clamped to 0,
/// anything more negative is rejected.
inline Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& s) {
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    return spectral_apply(s, [&](double lam) {
        if (lam < -1e-10 * scale)
            throw std::invalid_argument("psd_sqrt: matrix has a negative eigenvalue");
        return std::sqrt(std::max(lam, 0.0));
    });
}

/// Inverse square root on the range: eigenvalues <= cutoff map to 0.
inline Eigen::MatrixXd psd_inv_sqrt(const Eigen::MatrixXd& s, double cutoff = 1e-10) {
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    return spectral_apply(s, [&](double lam) {
        if (lam < -1e-10 * scale)
            throw std::invalid_argument("psd_inv_sqrt: matrix has a negative eigenvalue");
        return lam > cutoff ? 1.0 / std::sqrt(lam) : 0.0;
    });
}

/// Frobenius projection onto {T symmetric : 0 <= T <= I} by clamping
/// eigenvalues to [0, 1].
inline Eigen::MatrixXd clip_to_interval(const Eigen::MatrixXd& t) {
    return spectral_apply(t, [](double lam) { return std::clamp(lam, 0.0, 1.0); });
}

/// Smallest eigenvalue of a symmetric matrix.
inline double min_eigenvalue(const Eigen::MatrixXd& s) {
    return sym_eig(s).lambda.minCoeff();
}

/// Largest eigenvalue of a symmetric matrix.
inline double max_eigenvalue(const Eigen::MatrixXd& s) {
    return sym_eig(s).lambda.maxCoeff();
}

/// Moore-Penrose pseudo-inverse of a symmetric matrix via its spectrum.
inline Eigen::MatrixXd sym_pinv(const Eigen::MatrixXd& s, double cutoff = 1e-12) {
    const double scale = 1.0 + s.cwiseAbs().maxCoeff();
    return spectral_apply(s, [&](double lam) {
        return std::abs(lam) > cutoff * scale ? 1.0 / lam : 0.0;
    });
}

}  // namespace barytrans
