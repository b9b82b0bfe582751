#pragma once

#include <cmath>
#include <numbers>

#include "pmufdi/grid/case.hpp"

namespace pmufdi {

/// Bus admittance matrix and the branch-end current maps I_from = Yf V, I_to = Yt V.
struct Admittances {
    ComplexMatrix ybus;  // n_b x n_b
    ComplexMatrix yf;    // n_br x n_b
    ComplexMatrix yt;    // n_br x n_b
};

/// Two-port coefficients of one branch under the pi model with an ideal
/// transformer (tap * e^{j shift}) at the from end.
struct BranchStamp {
    Complex ff, ft, tf, tt;
};

inline BranchStamp branch_stamp(const Branch& br) {
    if (std::abs(br.impedance) == 0.0)
        throw ValidationError("branch " + std::to_string(br.id.value) +
                              " has zero series impedance");
    const Complex ys = 1.0 / br.impedance;
    const Complex half_charging(0.0, br.charging / 2.0);
    const Complex tap = std::polar(br.tap, br.shift_deg * std::numbers::pi / 180.0);
    BranchStamp s;
    s.tt = ys + half_charging;
    s.ff = s.tt / (tap * std::conj(tap));
    s.ft = -ys / std::conj(tap);
    s.tf = -ys / tap;
    return s;
}

/// Out-of-service branches keep their row in Yf/Yt but contribute zeros.
inline Admittances build_admittances(const GridCase& grid) {
    const int nb = grid.bus_count();
    const int nbr = grid.branch_count();
    Admittances a;
    a.yf = ComplexMatrix::Zero(nbr, nb);
    a.yt = ComplexMatrix::Zero(nbr, nb);
    for (int k = 0; k < nbr; ++k) {
        const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
        const BranchStamp s = branch_stamp(br);
        if (!br.in_service) continue;
        const int f = grid.bus_index(br.from), t = grid.bus_index(br.to);
        a.yf(k, f) += s.ff;
        a.yf(k, t) += s.ft;
        a.yt(k, f) += s.tf;
        a.yt(k, t) += s.tt;
    }
    // Ybus = Af^T Yf + At^T Yt + diag(shunts), with Af/At the from/to incidence.
    a.ybus = ComplexMatrix::Zero(nb, nb);
    for (int k = 0; k < nbr; ++k) {
        const Branch& br = grid.branches()[static_cast<std::size_t>(k)];
        const int f = grid.bus_index(br.from), t = grid.bus_index(br.to);
        a.ybus.row(f) += a.yf.row(k);
        a.ybus.row(t) += a.yt.row(k);
    }
    for (int i = 0; i < nb; ++i) a.ybus(i, i) += grid.buses()[static_cast<std::size_t>(i)].shunt;
    return a;
}

}  // namespace pmufdi
