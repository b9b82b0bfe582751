#pragma once

// Attack design: choose C with supp(C) in I to minimize the nuclear norm of
// the post-attack block Z + C Hbar^T.
//
// Only the |I| attacked columns of C are free, so the problem is solved over
// W (N x |I|) with G = the rows of Hbar^T indexed by I:
//
//     minimize ||M||_*   subject to  M = Z + W G
//
// by scaled ADMM: M <- svt(Z + W G - U, 1/rho), W <- least squares fit of
// M + U - Z onto G, U <- U + M - Z - W G. Residual balancing adapts rho.

#include <algorithm>
#include <iostream>
#include <optional>
#include <vector>

#include "pmufdi/grid/attack_sets.hpp"
#include "pmufdi/lowrank/kernels.hpp"
#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

struct AttackScenario {
    std::vector<BusId> attacked;          // I, when designed from bus ids
    std::vector<int> attacked_columns;    // I as 0-based state columns, ascending
    std::optional<AttackSetValidation> validation;
    ComplexMatrix c;                      // N x n_b, zero outside I
    MeasurementBlock attacked_block;      // Zbar* = Z + C Hbar^T
    double baseline_nuclear = 0.0;        // ||Z||_*
    double objective = 0.0;               // ||Zbar*||_*
    SolverDiagnostics diagnostics;
};

/// Z + C Hbar^T with metadata copied from Z and the attacked flag set.
inline MeasurementBlock apply_attack(const MeasurementBlock& block, const ComplexMatrix& c,
                                     const DependencyMatrix& dm) {
    if (c.rows() != block.z.rows() || c.cols() != dm.state_count() ||
        block.z.cols() != dm.measurement_count())
        throw DimensionError("attack matrix, block and dependency matrix sizes disagree");
    MeasurementBlock out = block;
    out.attacked = true;
    if (!c.isZero(0.0)) out.z += c * dm.h_bar().transpose();
    return out;
}

/// Columns of C Hbar^T whose norm exceeds eps * (largest column norm).
inline std::vector<int> induced_measurement_support(const ComplexMatrix& c,
                                                    const DependencyMatrix& dm, double eps) {
    if (!(eps >= 0)) throw ValidationError("support eps must be >= 0");
    if (c.cols() != dm.state_count()) throw DimensionError("attack matrix has wrong column count");
    const RealVector norms = column_norms(c * dm.h_bar().transpose());
    std::vector<int> out;
    const double top = norms.size() ? norms.maxCoeff() : 0.0;
    if (top == 0.0) return out;
    for (Eigen::Index j = 0; j < norms.size(); ++j)
        if (norms[j] > eps * top) out.push_back(static_cast<int>(j));
    return out;
}

inline AttackScenario design_attack(const MeasurementBlock& block, const DependencyMatrix& dm,
                                    std::vector<int> columns, const SolverOptions& opts = {}) {
    opts.validate();
    block.validate();
    if (block.z.cols() != dm.measurement_count())
        throw DimensionError("block column count != measurement count");
    std::sort(columns.begin(), columns.end());
    columns.erase(std::unique(columns.begin(), columns.end()), columns.end());
    for (int i : columns)
        if (i < 0 || i >= dm.state_count()) throw ValidationError("attacked state column out of range");

    const ComplexMatrix& z = block.z;
    require_finite(z, "measurement block");
    const Eigen::Index n = z.rows();

    AttackScenario sc;
    sc.attacked_columns = columns;
    sc.c = ComplexMatrix::Zero(n, dm.state_count());
    sc.baseline_nuclear = nuclear_norm(z);
    sc.diagnostics.final_rho = opts.rho;
    sc.diagnostics.converged = true;
    if (columns.empty()) {
        sc.attacked_block = apply_attack(block, sc.c, dm);
        sc.objective = sc.baseline_nuclear;
        return sc;
    }

    const auto k = static_cast<Eigen::Index>(columns.size());
    ComplexMatrix g(k, z.cols());
    for (Eigen::Index a = 0; a < k; ++a) g.row(a) = dm.h_bar().col(columns[static_cast<std::size_t>(a)]).transpose();
    const RidgeSolver fit(g, 0.0);

    const double tol = opts.abs_tolerance + opts.rel_tolerance * z.norm();
    double rho = opts.rho;
    ComplexMatrix w = ComplexMatrix::Zero(n, k);
    ComplexMatrix wg = ComplexMatrix::Zero(n, z.cols());
    ComplexMatrix u = ComplexMatrix::Zero(n, z.cols());
    double primal = 0.0, dual = 0.0;
    int it = 0;
    bool converged = false;
    for (it = 1; it <= opts.max_iterations; ++it) {
        const ComplexMatrix m = svt(z + wg - u, 1.0 / rho);
        ComplexMatrix w_next = fit.solve(m + u - z);
        ComplexMatrix wg_next = w_next * g;
        const ComplexMatrix r = m - z - wg_next;
        primal = r.norm();
        dual = rho * (wg_next - wg).norm();
        w = std::move(w_next);
        wg = std::move(wg_next);
        u += r;
        if (opts.verbosity > 1)
            std::clog << "design it " << it << " primal " << primal << " dual " << dual
                      << " rho " << rho << '\n';
        if (primal < tol && dual < tol) {
            converged = true;
            break;
        }
        if (opts.adaptation == PenaltyAdaptation::ResidualBalancing) {
            if (primal > opts.balance_ratio * dual) {
                rho *= opts.balance_factor;
                u /= opts.balance_factor;
            } else if (dual > opts.balance_ratio * primal) {
                rho /= opts.balance_factor;
                u *= opts.balance_factor;
            }
        }
    }
    if (!converged)
        throw ConvergenceError("attack design did not converge", opts.max_iterations, primal, dual);

    for (Eigen::Index a = 0; a < k; ++a) sc.c.col(columns[static_cast<std::size_t>(a)]) = w.col(a);
    sc.diagnostics = {std::min(it, opts.max_iterations), primal, dual, rho, true};
    sc.attacked_block = apply_attack(block, sc.c, dm);
    sc.objective = nuclear_norm(sc.attacked_block.z);
    if (sc.objective > sc.baseline_nuclear) {
        // C = 0 is feasible, so never return anything worse than no attack.
        sc.c.setZero();
        sc.attacked_block = apply_attack(block, sc.c, dm);
        sc.objective = sc.baseline_nuclear;
    }
    return sc;
}

/// Designs an attack on a validated bus set; throws if the set is invalid.
inline AttackScenario design_attack(const MeasurementBlock& block, const GridCase& grid,
                                    const DependencyMatrix& dm, const std::vector<BusId>& attacked,
                                    const SolverOptions& opts = {}) {
    AttackSetValidation v = validate_attack_set(grid, dm, attacked);
    if (!v.valid) {
        std::string why;
        for (const auto& r : v.reasons) why += (why.empty() ? "" : "; ") + r;
        throw ValidationError("attack set is not admissible: " + why);
    }
    std::vector<int> cols;
    for (BusId b : v.attacked) cols.push_back(grid.bus_index(b));
    AttackScenario sc = design_attack(block, dm, cols, opts);
    sc.attacked = v.attacked;
    sc.validation = std::move(v);
    return sc;
}

}  // namespace pmufdi
