#pragma once

// Column-sparse attacks built without knowledge of the data's temporal
// structure: a smooth random ramp per attacked state, pushed off the column
// space of Z. These are what the LD detector is meant to catch.

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "pmufdi/lowrank/subspace.hpp"
#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

/// N x n_states attack matrix with a ramp-plus-bump column per entry of
/// `columns`, orthogonal to the column space of `block.z`, each column scaled
/// to RMS `magnitude`.
inline ComplexMatrix naive_ramp_attack(const MeasurementBlock& block, int n_states,
                                       const std::vector<int>& columns, double magnitude,
                                       std::mt19937_64& rng) {
    if (!(magnitude > 0)) throw ValidationError("naive attack magnitude must be positive");
    const Eigen::Index n = block.z.rows();
    const BlockSubspaces sub = block_subspaces(block.z);
    std::uniform_real_distribution<double> slope(0.5, 1.5), bump(-0.5, 0.5),
        phase(0.0, 2.0 * std::numbers::pi);
    ComplexMatrix c = ComplexMatrix::Zero(n, n_states);
    for (int col : columns) {
        if (col < 0 || col >= n_states) throw ValidationError("attacked state column out of range");
        const double a = slope(rng), b = bump(rng);
        const Complex rot = std::polar(1.0, phase(rng));
        Eigen::VectorXcd v(n);
        for (Eigen::Index r = 0; r < n; ++r) {
            const double tau = static_cast<double>(r + 1) / static_cast<double>(n);
            v[r] = (a * tau + b * std::sin(std::numbers::pi * tau)) * rot;
        }
        if (sub.rank > 0) v -= sub.column_basis * (sub.column_basis.adjoint() * v);
        const double norm = v.norm();
        if (norm == 0.0) throw NumericalError("naive attack column vanished after projection");
        v *= magnitude * std::sqrt(static_cast<double>(n)) / norm;
        c.col(col) = v;
    }
    return c;
}

}  // namespace pmufdi
