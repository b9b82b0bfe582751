#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "pmufdi/grid/case.hpp"

namespace pmufdi {

/// Random load disturbance d ~ N(0, p_t) starting at instant t0, with
/// p_t = scale / decay^(t - t0).
struct DisturbanceModel {
    enum class Parameter { Variance, StdDev };
    enum class Units { MW, PerUnit };
    enum class Draw { Shared, Independent };

    double scale = 60.0;
    double decay = 1.1;
    Parameter parameter = Parameter::Variance;
    Units units = Units::MW;
    /// Shared: one draw per instant added to every load bus.
    Draw draw = Draw::Shared;

    double parameter_at(int t, int onset) const {
        return scale / std::pow(decay, static_cast<double>(t - onset));
    }

    /// Standard deviation of d at instant t, in p.u. on `base_mva`.
    double sigma_pu(int t, int onset, double base_mva) const {
        const double p = parameter_at(t, onset);
        double sigma = parameter == Parameter::Variance ? std::sqrt(p) : p;
        if (units == Units::MW) sigma /= base_mva;
        return sigma;
    }
};

/// Per-bus complex demand (p.u.) for instants t = 1..T.
struct LoadTrajectory {
    std::vector<ComplexVector> demand;  // demand[t - 1], file bus order
    int onset = 1;
    std::uint64_t seed = 0;
    int clamped = 0;  // perturbed demands that went negative and were set to zero

    int length() const noexcept { return static_cast<int>(demand.size()); }
    const ComplexVector& at(int t) const { return demand.at(static_cast<std::size_t>(t - 1)); }
};

/// Only buses with nonzero base active demand are disturbed; reactive demand
/// follows at the base power factor.
inline LoadTrajectory perturb_loads(const GridCase& grid, int length, int onset,
                                    std::uint64_t seed, const DisturbanceModel& model = {}) {
    if (length < 1 || onset < 1 || onset > length)
        throw ValidationError("disturbance onset must satisfy 1 <= t0 <= T");
    const ComplexVector base = grid.demand();
    std::vector<int> disturbed;
    for (int i = 0; i < base.size(); ++i)
        if (base[i].real() != 0.0) disturbed.push_back(i);

    LoadTrajectory traj;
    traj.onset = onset;
    traj.seed = seed;
    traj.demand.assign(static_cast<std::size_t>(length), base);

    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal(0.0, 1.0);
    for (int t = onset; t <= length; ++t) {
        const double sigma = model.sigma_pu(t, onset, grid.base_mva());
        ComplexVector& s = traj.demand[static_cast<std::size_t>(t - 1)];
        const double shared = model.draw == DisturbanceModel::Draw::Shared ? sigma * normal(rng) : 0.0;
        for (int i : disturbed) {
            const double d =
                model.draw == DisturbanceModel::Draw::Shared ? shared : sigma * normal(rng);
            double p = base[i].real() + d;
            if (p < 0.0) {
                p = 0.0;
                ++traj.clamped;
            }
            s[i] = Complex(p, base[i].imag() * p / base[i].real());
        }
    }
    return traj;
}

}  // namespace pmufdi
