#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <sstream>

#include "errors.hpp"

namespace linbandit {

// Dense vectors/matrices for the small-dimension regime (d <= ~10).
// Matrices passed to the routines below are symmetric PSD by contract;
// is_symmetric() is the boundary check used by validators and tests.
using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

inline bool is_symmetric(const Mat& g, double rel_tol = 1e-12) {
    if (g.rows() != g.cols()) return false;
    const double scale = std::max(1.0, g.cwiseAbs().maxCoeff());
    return (g - g.transpose()).cwiseAbs().maxCoeff() <= rel_tol * scale;
}

/// G + x x^T. In-place flavour used on the per-round hot path.
inline void gram_accumulate_inplace(Mat& g, const Vec& x) {
    if (g.rows() != x.size() || g.cols() != x.size())
        throw std::invalid_argument("gram_accumulate: dimension mismatch");
    g.noalias() += x * x.transpose();
}

inline Mat gram_accumulate(Mat g, const Vec& x) {
    gram_accumulate_inplace(g, x);
    return g;
}

namespace detail {

inline constexpr double kEigRelTol = 1e-12;  // SPD cutoff: lambda_min > tol * lambda_max

inline Eigen::SelfAdjointEigenSolver<Mat> sym_eig(const Mat& g) {
    Eigen::SelfAdjointEigenSolver<Mat> es(g);
    if (es.info() != Eigen::Success)
        throw SingularMatrixError("symmetric eigendecomposition failed to converge");
    return es;
}

}  // namespace detail

/// Solve G v = b for symmetric positive definite G. Cholesky on the fast
/// path with an eigendecomposition fallback; the solution is accepted only
/// if ||Gv - b|| <= 1e-9 ||b||.
inline Vec psd_solve(const Mat& g, const Vec& b) {
    if (g.rows() != b.size())
        throw std::invalid_argument("psd_solve: dimension mismatch");
    Eigen::LLT<Mat> llt(g);
    if (llt.info() == Eigen::Success) {
        Vec v = llt.solve(b);
        if ((g * v - b).norm() <= 1e-9 * b.norm() + 1e-300) return v;
    }
    // Fallback: explicit spectral solve, rejecting ill-conditioned inputs.
    auto es = detail::sym_eig(g);
    const double lmax = es.eigenvalues().cwiseAbs().maxCoeff();
    if (es.eigenvalues().minCoeff() <= detail::kEigRelTol * lmax)
        throw SingularMatrixError("psd_solve: matrix is numerically singular");
    Vec v = es.eigenvectors() *
            (es.eigenvectors().transpose() * b).cwiseQuotient(es.eigenvalues());
    if ((g * v - b).norm() > 1e-9 * b.norm() + 1e-300)
        throw SingularMatrixError("psd_solve: residual tolerance not met");
    return v;
}

/// Moore-Penrose pseudo-inverse of a symmetric PSD matrix via symmetric
/// eigendecomposition. Eigenvalues below rank_tol * lambda_max are treated
/// as zero; the zero matrix maps to the zero matrix.
inline Mat psd_pseudo_inverse(const Mat& h, double rank_tol = 1e-10) {
    auto es = detail::sym_eig(h);
    const Vec& lam = es.eigenvalues();
    const double lmax = lam.size() ? lam.cwiseAbs().maxCoeff() : 0.0;
    Vec inv = Vec::Zero(lam.size());
    for (Eigen::Index i = 0; i < lam.size(); ++i)
        if (lam[i] > rank_tol * lmax && lam[i] > 0.0) inv[i] = 1.0 / lam[i];
    return es.eigenvectors() * inv.asDiagonal() * es.eigenvectors().transpose();
}

/// x^T G^-1 x for PD G, falling back to x^T G^dagger x when G is singular.
/// Note the pseudo-inverse convention annihilates null-space components of
/// x; callers that need "infinite" semantics for such components must test
/// for them separately.
inline double quad_form_inv(const Mat& g, const Vec& x) {
    if (g.rows() != x.size())
        throw std::invalid_argument("quad_form_inv: dimension mismatch");
    Eigen::LLT<Mat> llt(g);
    if (llt.info() == Eigen::Success) {
        Vec y = llt.matrixL().solve(x);
        double q = y.squaredNorm();
        if (std::isfinite(q)) return q;
    }
    auto es = detail::sym_eig(g);
    const double lmax = es.eigenvalues().size() ? es.eigenvalues().cwiseAbs().maxCoeff() : 0.0;
    double q = 0.0;
    for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) {
        const double lam = es.eigenvalues()[i];
        if (lam > detail::kEigRelTol * lmax && lam > 0.0) {
            const double c = es.eigenvectors().col(i).dot(x);
            q += c * c / lam;
        }
    }
    return q;
}

/// Least-squares point estimate from the accumulated Gram matrix and
/// response sum: theta_hat = G^-1 s.
inline Vec least_squares(const Mat& g, const Vec& s) { return psd_solve(g, s); }

/// Cached Cholesky factor of a running Gram matrix. Refreshed once per
/// round; all queries are allocation-free after the first compute.
class PsdFactor {
public:
    void compute(const Mat& g) {
        llt_.compute(g);
        ok_ = llt_.info() == Eigen::Success;
        if (ok_) {
            // Reject numerically rank-deficient factors (zero pivots).
            const auto& l = llt_.matrixLLT();
            double dmin = l.diagonal().minCoeff();
            double dmax = l.diagonal().maxCoeff();
            ok_ = dmin > 1e-9 * std::max(dmax, 1e-300) && std::isfinite(dmin);
        }
        if (work_.size() != g.rows()) work_.resize(g.rows());
    }

    bool ok() const { return ok_; }

    void solve_into(const Vec& b, Vec& out) const {
        out = b;
        llt_.solveInPlace(out);
    }

    /// ||x||^2_{G^-1} = ||L^-1 x||^2.
    double quad_form_inv(const Vec& x) {
        work_ = x;
        llt_.matrixL().solveInPlace(work_);
        return work_.squaredNorm();
    }

    /// z <- L^-T z, so that cov(L^-T n) = G^-1 for n ~ N(0, I).
    void whiten_transpose_inplace(Vec& z) const { llt_.matrixU().solveInPlace(z); }

private:
    Eigen::LLT<Mat> llt_;
    Vec work_;
    bool ok_ = false;
};

}  // namespace linbandit
