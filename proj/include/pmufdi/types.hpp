#pragma once

#include <Eigen/Dense>

#include <complex>
#include <compare>
#include <cstdint>
#include <functional>
#include <ostream>

#include "pmufdi/error.hpp"

namespace pmufdi {

using Complex = std::complex<double>;
using ComplexMatrix = Eigen::Matrix<Complex, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

/// Integer identifier tagged by what it names, so bus and branch ids cannot be mixed up.
template <class Tag>
struct StrongId {
    int value = 0;

    constexpr StrongId() = default;
    constexpr explicit StrongId(int v) : value(v) {}

    friend constexpr auto operator<=>(StrongId, StrongId) = default;
    friend std::ostream& operator<<(std::ostream& os, StrongId id) { return os << id.value; }
};

struct BusTag {};
struct BranchTag {};
using BusId = StrongId<BusTag>;      // external bus number from the case file
using BranchId = StrongId<BranchTag>;  // 1-based row of the case file's branch table

inline bool all_finite(const ComplexMatrix& m) {
    return m.allFinite();
}

inline void require_finite(const ComplexMatrix& m, const char* what) {
    if (!m.allFinite()) throw NumericalError(std::string(what) + " contains NaN or Inf");
}

/// ADMM penalty update rule.
enum class PenaltyAdaptation { Fixed, ResidualBalancing };

struct SolverOptions {
    int max_iterations = 5000;
    double abs_tolerance = 1e-12;
    /// Residual tolerance relative to the Frobenius norm of the data block.
    double rel_tolerance = 1e-7;
    double rho = 1.0;
    PenaltyAdaptation adaptation = PenaltyAdaptation::ResidualBalancing;
    /// Residual ratio that triggers a penalty change, and the change factor.
    double balance_ratio = 10.0;
    double balance_factor = 2.0;
    int verbosity = 0;

    void validate() const {
        if (max_iterations < 1) throw ValidationError("solver max_iterations must be >= 1");
        if (!(abs_tolerance > 0) || !(rel_tolerance > 0))
            throw ValidationError("solver tolerances must be > 0");
        if (!(rho > 0)) throw ValidationError("solver rho must be > 0");
        if (!(balance_ratio > 1) || !(balance_factor > 1))
            throw ValidationError("penalty balancing ratio and factor must be > 1");
    }
};

/// Per-solve diagnostics shared by the attack designer and the detector.
struct SolverDiagnostics {
    int iterations = 0;
    double primal_residual = 0.0;
    double dual_residual = 0.0;
    double final_rho = 0.0;
    bool converged = false;
};

}  // namespace pmufdi

template <class Tag>
struct std::hash<pmufdi::StrongId<Tag>> {
    std::size_t operator()(pmufdi::StrongId<Tag> id) const noexcept {
        return std::hash<int>{}(id.value);
    }
};
