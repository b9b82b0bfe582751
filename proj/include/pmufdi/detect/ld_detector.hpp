#pragma once

// Low-rank decomposition (LD) detector:
//
//     minimize ||Z_ld||_* + lambda ||C_ld||_{1,2}
//     subject to Zbar = Z_ld + C_ld Hbar^T
//
// Scaled ADMM on M = Z_ld and C = C_ld with A = Hbar^T:
//   M <- svt(Zbar - C A - U, 1/rho)
//   C <- argmin lambda ||C||_{1,2} + rho/2 ||C A - (Zbar - M - U)||_F^2
//        (accelerated proximal gradient, step 1/L with L = rho sigma_max(A)^2)
//   U <- U + M + C A - Zbar

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <cmath>
#include <iostream>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "pmufdi/grid/case.hpp"
#include "pmufdi/grid/measurement.hpp"
#include "pmufdi/lowrank/kernels.hpp"
#include "pmufdi/lowrank/subspace.hpp"
#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

enum class Outcome { Clean, Bypassed, DetectedWithinI, DetectedOutsideI };

inline const char* to_string(Outcome o) {
    switch (o) {
        case Outcome::Clean: return "Clean";
        case Outcome::Bypassed: return "Bypassed";
        case Outcome::DetectedWithinI: return "DetectedWithinI";
        case Outcome::DetectedOutsideI: return "DetectedOutsideI";
    }
    return "?";
}

/// Column flagged iff its norm exceeds max(rel * largest norm, abs * ||Zbar||_F / sqrt(N * cols)).
struct ThresholdPolicy {
    double rel = 1e-3;
    double abs = 1e-6;

    double threshold(const RealVector& norms, double data_fro, Eigen::Index rows,
                     Eigen::Index cols) const {
        const double top = norms.size() ? norms.maxCoeff() : 0.0;
        const double floor =
            abs * data_fro / std::sqrt(static_cast<double>(std::max<Eigen::Index>(1, rows * cols)));
        return std::max(rel * top, floor);
    }
};

struct InnerSolverOptions {
    int max_iterations = 2000;
    /// Inner stopping tolerance as a fraction of the outer residual tolerance.
    double relative_to_outer = 1e-2;
};

struct DetectionResult {
    ComplexMatrix z_ld;            // N x n_z
    ComplexMatrix c_ld;            // N x n_b
    double lambda = 0.0;
    RealVector state_norms;        // column norms of C_ld
    RealVector measurement_norms;  // column norms of C_ld Hbar^T
    std::vector<int> state_support;        // 0-based state columns
    std::vector<int> measurement_support;  // 0-based measurement columns
    double objective = 0.0;        // ||Z_ld||_* + lambda ||C_ld||_{1,2}
    double input_nuclear = 0.0;    // ||Zbar||_*, objective at the feasible point (Zbar, 0)
    double input_fro = 0.0;
    double feasibility = 0.0;      // ||Zbar - Z_ld - C_ld Hbar^T||_F
    SolverDiagnostics diagnostics;
    int inner_iterations = 0;

    /// Objective never exceeds that of (Zbar, 0), up to a relative slack.
    bool certificate_holds(double rel_slack = 1e-6) const {
        return objective <= input_nuclear * (1.0 + rel_slack);
    }
};

/// Fills the stored column norms and both supports from `c_ld`.
inline void identify_support(DetectionResult& r, const DependencyMatrix& dm,
                             const ThresholdPolicy& policy = {}) {
    const ComplexMatrix d = r.c_ld * dm.h_bar().transpose();
    r.state_norms = column_norms(r.c_ld);
    r.measurement_norms = column_norms(d);
    const auto flag = [&](const RealVector& norms, Eigen::Index cols) {
        const double th = policy.threshold(norms, r.input_fro, r.c_ld.rows(), cols);
        std::vector<int> out;
        for (Eigen::Index j = 0; j < norms.size(); ++j)
            if (norms[j] > th) out.push_back(static_cast<int>(j));
        return out;
    };
    r.state_support = flag(r.state_norms, r.c_ld.cols());
    r.measurement_support = flag(r.measurement_norms, d.cols());
}

inline DetectionResult detect(const MeasurementBlock& block, const DependencyMatrix& dm,
                              double lambda, const SolverOptions& opts = {},
                              const ThresholdPolicy& policy = {},
                              const InnerSolverOptions& inner = {}) {
    if (!(lambda > 0)) throw ValidationError("lambda must be > 0");
    opts.validate();
    block.validate();
    if (block.z.cols() != dm.measurement_count())
        throw DimensionError("block column count != measurement count");
    const ComplexMatrix& zbar = block.z;
    require_finite(zbar, "measurement block");

    const Eigen::Index n = zbar.rows();
    const Eigen::Index nb = dm.state_count();
    const ComplexMatrix a = dm.h_bar().transpose();  // n_b x n_z
    const Eigen::MatrixXcd gram = a * a.adjoint();   // n_b x n_b
    const double smax2 = Eigen::SelfAdjointEigenSolver<Eigen::MatrixXcd>(gram, Eigen::EigenvaluesOnly)
                             .eigenvalues()
                             .maxCoeff();

    DetectionResult res;
    res.lambda = lambda;
    res.input_fro = zbar.norm();
    res.input_nuclear = nuclear_norm(zbar);
    const double tol = opts.abs_tolerance + opts.rel_tolerance * res.input_fro;
    const double inner_tol = inner.relative_to_outer * tol;

    double rho = opts.rho;
    ComplexMatrix c = ComplexMatrix::Zero(n, nb);
    ComplexMatrix ca = ComplexMatrix::Zero(n, zbar.cols());
    ComplexMatrix u = ComplexMatrix::Zero(n, zbar.cols());
    ComplexMatrix m;
    double primal = 0.0, dual = 0.0;
    bool converged = false;
    int it = 0;
    for (it = 1; it <= opts.max_iterations; ++it) {
        m = svt(zbar - ca - u, 1.0 / rho);

        // Group-lasso sub-problem, warm-started at the current C.
        const ComplexMatrix target_ah = (zbar - m - u) * a.adjoint();  // B A^H
        const double lip = rho * smax2;
        const double kappa = lambda / lip;
        ComplexMatrix x = c, y = c;
        double t = 1.0;
        for (int k = 0; k < inner.max_iterations; ++k) {
            ++res.inner_iterations;
            const ComplexMatrix grad = rho * (y * gram - target_ah);
            ComplexMatrix x_next = group_col_shrink(y - grad / lip, kappa);
            const double t_next = 0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t * t));
            const ComplexMatrix step = x_next - x;
            y = x_next + ((t - 1.0) / t_next) * step;
            x = std::move(x_next);
            t = t_next;
            if ((step * a).norm() <= inner_tol) break;
        }

        ComplexMatrix ca_next = x * a;
        const ComplexMatrix r = m + ca_next - zbar;
        primal = r.norm();
        dual = rho * (ca_next - ca).norm();
        c = std::move(x);
        ca = std::move(ca_next);
        u += r;
        if (opts.verbosity > 1)
            std::clog << "detect it " << it << " primal " << primal << " dual " << dual
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
        throw ConvergenceError("LD detection did not converge", opts.max_iterations, primal, dual);

    res.z_ld = std::move(m);
    res.c_ld = std::move(c);
    res.feasibility = (zbar - res.z_ld - ca).norm();
    res.objective = nuclear_norm(res.z_ld) + lambda * l12_norm(res.c_ld);
    res.diagnostics = {it, primal, dual, rho, true};
    identify_support(res, dm, policy);
    return res;
}

/// Clean: nothing injected and nothing flagged. Bypassed: injected, nothing
/// flagged. DetectedWithinI: flagged states are a nonempty subset of I.
/// `injected` defaults to whether I is nonempty.
inline Outcome classify_outcome(const DetectionResult& r, const std::vector<int>& attacked_columns,
                                std::optional<bool> injected = std::nullopt) {
    const bool attacked = injected.value_or(!attacked_columns.empty());
    if (r.state_support.empty()) return attacked ? Outcome::Bypassed : Outcome::Clean;
    const std::set<int> in_i(attacked_columns.begin(), attacked_columns.end());
    const bool within = std::all_of(r.state_support.begin(), r.state_support.end(),
                                    [&](int j) { return in_i.count(j) != 0; });
    return within ? Outcome::DetectedWithinI : Outcome::DetectedOutsideI;
}

inline std::vector<BusId> to_bus_ids(const GridCase& grid, const std::vector<int>& columns) {
    std::vector<BusId> ids;
    for (int c : columns) ids.push_back(grid.buses().at(static_cast<std::size_t>(c)).id);
    return ids;
}

/// Norm of the part of each Hbar column lying outside the row space of the
/// block. A column-sparse term on state i can only be cheaper to report as
/// C_ld than to absorb into the low-rank part when this exceeds lambda.
inline RealVector off_row_space_norms(const MeasurementBlock& block, const DependencyMatrix& dm) {
    const BlockSubspaces sub = block_subspaces(block.z);
    const Eigen::MatrixXcd hb = dm.h_bar();
    Eigen::MatrixXcd resid = hb;
    if (sub.rank > 0) resid -= sub.row_basis * (sub.row_basis.adjoint() * hb);
    return resid.colwise().norm().transpose();
}

}  // namespace pmufdi
