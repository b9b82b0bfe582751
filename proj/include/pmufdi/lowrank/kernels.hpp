#pragma once

// Complex-matrix kernels shared by the attack designer and the LD detector:
// nuclear norm and its prox (singular value thresholding), the l_{1,2}
// column-group norm and its prox, and a cached ridge least-squares solver.

#include <Eigen/Cholesky>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

#include "pmufdi/types.hpp"

namespace pmufdi {

namespace detail {

using SvdMatrix = Eigen::MatrixXcd;

inline Eigen::JacobiSVD<SvdMatrix> thin_svd(const ComplexMatrix& m) {
    require_finite(m, "SVD input");
    Eigen::JacobiSVD<SvdMatrix> svd(SvdMatrix(m), Eigen::ComputeThinU | Eigen::ComputeThinV);
    if (svd.info() != Eigen::Success) throw NumericalError("complex SVD failed");
    return svd;
}

}  // namespace detail

/// Singular values, descending, length min(rows, cols).
inline RealVector singular_values(const ComplexMatrix& m) {
    if (m.size() == 0) return RealVector();
    require_finite(m, "SVD input");
    Eigen::JacobiSVD<detail::SvdMatrix> svd{detail::SvdMatrix(m)};
    if (svd.info() != Eigen::Success) throw NumericalError("complex SVD failed");
    return svd.singularValues();
}

inline double nuclear_norm(const ComplexMatrix& m) {
    return singular_values(m).sum();
}

/// Prox of tau * nuclear norm: U max(S - tau, 0) V^H.
inline ComplexMatrix svt(const ComplexMatrix& m, double tau) {
    if (!(tau >= 0)) throw ValidationError("svt threshold must be >= 0");
    if (m.size() == 0) return m;
    const auto svd = detail::thin_svd(m);
    const RealVector& s = svd.singularValues();
    Eigen::Index keep = 0;
    while (keep < s.size() && s[keep] > tau) ++keep;
    ComplexMatrix out(m.rows(), m.cols());
    if (keep == 0) {
        out.setZero();
        return out;
    }
    const RealVector shrunk = (s.head(keep).array() - tau).matrix();
    out.noalias() = svd.matrixU().leftCols(keep) * shrunk.asDiagonal() *
                    svd.matrixV().leftCols(keep).adjoint();
    return out;
}

/// Sum of column Euclidean norms.
inline double l12_norm(const ComplexMatrix& c) {
    require_finite(c, "l12 input");
    return c.colwise().norm().sum();
}

inline RealVector column_norms(const ComplexMatrix& c) {
    return c.colwise().norm().transpose();
}

/// Prox of kappa * l_{1,2}: column j scaled by max(1 - kappa / ||c_j||, 0).
/// A column with norm exactly kappa maps to zero.
inline ComplexMatrix group_col_shrink(const ComplexMatrix& c, double kappa) {
    if (!(kappa >= 0)) throw ValidationError("group shrink threshold must be >= 0");
    ComplexMatrix out = c;
    if (kappa == 0.0) return out;
    for (Eigen::Index j = 0; j < c.cols(); ++j) {
        const double n = c.col(j).norm();
        if (n <= kappa)
            out.col(j).setZero();
        else
            out.col(j) *= (1.0 - kappa / n);
    }
    return out;
}

/// Minimizer of ||W A - B||_F^2 + rho ||W||_F^2, i.e. W = B A^H (A A^H + rho I)^{-1}.
/// The Cholesky factor of A A^H + rho I is computed once and reused across
/// right-hand sides.
class RidgeSolver {
public:
    RidgeSolver() = default;
    RidgeSolver(const ComplexMatrix& a, double rho) : a_adj_(a.adjoint()) {
        if (!(rho >= 0)) throw ValidationError("ridge rho must be >= 0");
        require_finite(a, "ridge design matrix");
        Eigen::MatrixXcd normal = a * a.adjoint();
        normal.diagonal().array() += rho;
        llt_.compute(normal);
        if (llt_.info() != Eigen::Success || !(llt_.rcond() > 1e-13))
            throw NumericalError("ridge normal matrix is singular (rho = 0 and A is row-rank deficient)");
    }

    Eigen::Index rows() const noexcept { return a_adj_.cols(); }

    ComplexMatrix solve(const ComplexMatrix& b) const {
        if (b.cols() != a_adj_.rows())
            throw DimensionError("ridge right-hand side has the wrong column count");
        // W N = B A^H with N Hermitian  <=>  N W^H = A B^H.
        const Eigen::MatrixXcd rhs = (b * a_adj_).adjoint();
        return llt_.solve(rhs).adjoint();
    }

private:
    Eigen::MatrixXcd a_adj_;
    Eigen::LLT<Eigen::MatrixXcd> llt_;
};

inline ComplexMatrix ridge_least_squares(const ComplexMatrix& a, const ComplexMatrix& b, double rho) {
    return RidgeSolver(a, rho).solve(b);
}

}  // namespace pmufdi
