#pragma once

#include <cmath>
#include <cstdint>
#include <iostream>
#include <random>
#include <string>
#include <vector>

#include "pmufdi/grid/measurement.hpp"
#include "pmufdi/lowrank/kernels.hpp"
#include "pmufdi/scenario/loads.hpp"
#include "pmufdi/scenario/power_flow.hpp"

namespace pmufdi {

/// N x n_z matrix of PMU phasors; row r holds the sample at series index
/// start_index + r (1-based), i.e. time (start_index - 1 + r) / rate_hz seconds.
struct MeasurementBlock {
    ComplexMatrix z;
    double rate_hz = 30.0;
    int start_index = 1;
    std::vector<MeasurementLabel> labels;
    bool attacked = false;

    int rows() const noexcept { return static_cast<int>(z.rows()); }
    int cols() const noexcept { return static_cast<int>(z.cols()); }

    double time_of_row(int r) const { return (start_index - 1 + r) / rate_hz; }

    void validate() const {
        if (z.rows() < 1) throw ValidationError("measurement block needs at least one row");
        if (static_cast<Eigen::Index>(labels.size()) != z.cols())
            throw DimensionError("measurement block label count != column count");
        if (!(rate_hz > 0)) throw ValidationError("sampling rate must be positive");
    }

    /// Rows [first, first + length) by 1-based series index.
    MeasurementBlock window(int first, int length) const {
        const int offset = first - start_index;
        if (length < 1 || offset < 0 || offset + length > rows())
            throw ValidationError("window [" + std::to_string(first) + ", " +
                                  std::to_string(first + length - 1) +
                                  "] lies outside the block");
        MeasurementBlock w = *this;
        w.z = z.middleRows(offset, length);
        w.start_index = first;
        return w;
    }
};

struct StateBlock {
    ComplexMatrix x;  // N x n_b bus voltages
    std::vector<int> iterations;
    std::vector<double> mismatch;
};

struct GenerationOptions {
    double duration_s = 5.0;
    double rate_hz = 30.0;
    /// Disturbance starts at the first instant after this many seconds.
    double onset_s = 1.0;
    std::uint64_t seed = 1;
    DisturbanceModel disturbance;
    PowerFlowOptions power_flow;
};

struct GeneratedData {
    StateBlock states;
    MeasurementBlock measurements;
    LoadTrajectory loads;
};

inline int sample_count(double duration_s, double rate_hz) {
    const double t = duration_s * rate_hz;
    if (!(t >= 1) || std::abs(t - std::round(t)) > 1e-9)
        throw ValidationError("duration * rate must be a positive integer");
    return static_cast<int>(std::lround(t));
}

/// Solves one AC power flow per instant under the disturbed loads (flat
/// start first, then warm start) and maps states through H: Z = X H^T.
inline GeneratedData generate_block(const GridCase& grid, const DependencyMatrix& dm,
                                    const GenerationOptions& opts) {
    if (dm.state_count() != grid.bus_count())
        throw DimensionError("dependency matrix does not match the case");
    const int length = sample_count(opts.duration_s, opts.rate_hz);
    const int onset = static_cast<int>(std::lround(opts.onset_s * opts.rate_hz)) + 1;
    if (onset > length) throw ValidationError("disturbance onset lies after the block end");

    GeneratedData out;
    out.loads = perturb_loads(grid, length, onset, opts.seed, opts.disturbance);
    if (out.loads.clamped > 0)
        std::clog << "pmufdi: clamped " << out.loads.clamped
                  << " negative perturbed load(s) to zero\n";

    const PowerFlowSolver solver(grid, opts.power_flow);
    out.states.x.resize(length, grid.bus_count());
    std::optional<ComplexVector> warm;
    PowerFlowResult pf;
    for (int t = 1; t <= length; ++t) {
        // Unchanged demand reuses the previous solution, so pre-disturbance
        // rows are exactly equal rather than equal up to Newton roundoff.
        if (t > 1 && out.loads.at(t) == out.loads.at(t - 1)) {
            out.states.x.row(t - 1) = out.states.x.row(t - 2);
            out.states.iterations.push_back(0);
            out.states.mismatch.push_back(pf.max_mismatch);
            continue;
        }
        try {
            pf = solver.solve(out.loads.at(t), warm);
        } catch (const PowerFlowError& e) {
            throw PowerFlowError("instant t = " + std::to_string(t) + ": " + e.what(), e.mismatch());
        }
        out.states.x.row(t - 1) = pf.voltage.transpose();
        out.states.iterations.push_back(pf.iterations);
        out.states.mismatch.push_back(pf.max_mismatch);
        warm = pf.voltage;
    }

    MeasurementBlock& mb = out.measurements;
    mb.z = out.states.x * dm.h().transpose();
    mb.rate_hz = opts.rate_hz;
    mb.start_index = 1;
    mb.labels = dm.labels();
    return out;
}

/// Adds circular complex Gaussian noise, standard deviation `sigma` per axis.
inline MeasurementBlock add_noise(const MeasurementBlock& block, double sigma, std::uint64_t seed) {
    if (!(sigma >= 0)) throw ValidationError("noise sigma must be >= 0");
    MeasurementBlock out = block;
    if (sigma == 0.0) return out;
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, sigma);
    for (Eigen::Index r = 0; r < out.z.rows(); ++r)
        for (Eigen::Index c = 0; c < out.z.cols(); ++c) {
            const double re = normal(rng);
            const double im = normal(rng);
            out.z(r, c) += Complex(re, im);
        }
    return out;
}

inline RealVector singular_spectrum(const MeasurementBlock& block) {
    if (block.z.size() == 0) throw ValidationError("singular spectrum of an empty block");
    return singular_values(block.z);
}

}  // namespace pmufdi
