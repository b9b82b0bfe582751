#pragma once

#include <Eigen/SVD>

#include "pmufdi/types.hpp"

namespace pmufdi {

/// Orthonormal bases for the column space (in C^N) and row space (in C^n_z)
/// of an N x n_z block, truncated at singular values above rel * sigma_max.
struct BlockSubspaces {
    Eigen::MatrixXcd column_basis;  // N x r, U_r
    Eigen::MatrixXcd row_basis;     // n_z x r, conj(V_r): rows of the block are combinations of its columns
    int rank = 0;
};

inline BlockSubspaces block_subspaces(const ComplexMatrix& z, double rel = 1e-9) {
    require_finite(z, "block");
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(Eigen::MatrixXcd(z), Eigen::ComputeThinU | Eigen::ComputeThinV);
    const RealVector& s = svd.singularValues();
    BlockSubspaces out;
    if (s.size() == 0 || s[0] == 0.0) {
        out.column_basis.resize(z.rows(), 0);
        out.row_basis.resize(z.cols(), 0);
        return out;
    }
    while (out.rank < s.size() && s[out.rank] > rel * s[0]) ++out.rank;
    out.column_basis = svd.matrixU().leftCols(out.rank);
    out.row_basis = svd.matrixV().leftCols(out.rank).conjugate();
    return out;
}

}  // namespace pmufdi
