#pragma once

#include <Eigen/LU>

#include <cmath>
#include <numbers>
#include <optional>
#include <vector>

#include "pmufdi/grid/admittance.hpp"
#include "pmufdi/grid/case.hpp"

namespace pmufdi {

struct PowerFlowOptions {
    int max_iterations = 20;
    double tolerance = 1e-8;  // p.u. power mismatch
};

struct PowerFlowResult {
    ComplexVector voltage;
    int iterations = 0;
    double max_mismatch = 0.0;
};

class PowerFlowError : public NumericalError {
public:
    PowerFlowError(const std::string& msg, double mismatch)
        : NumericalError(msg), mismatch_(mismatch) {}
    double mismatch() const noexcept { return mismatch_; }

private:
    double mismatch_;
};

/// Newton-Raphson AC power flow in polar coordinates.
///
/// A PV bus without an in-service generator is solved as PQ. Generator
/// reactive limits are not enforced; PV magnitudes stay at the setpoint of
/// the bus's first in-service generator.
class PowerFlowSolver {
public:
    explicit PowerFlowSolver(const GridCase& grid, PowerFlowOptions opts = {})
        : opts_(opts), ybus_(build_admittances(grid).ybus) {
        const int nb = grid.bus_count();
        gen_injection_ = ComplexVector::Zero(nb);
        vm_set_ = RealVector::Ones(nb);
        std::vector<bool> has_gen(static_cast<std::size_t>(nb), false);
        for (const auto& g : grid.generators()) {
            if (!g.in_service) continue;
            const int i = grid.bus_index(g.bus);
            gen_injection_[i] += Complex(g.pg, g.qg);
            if (!has_gen[static_cast<std::size_t>(i)]) vm_set_[i] = g.vg;
            has_gen[static_cast<std::size_t>(i)] = true;
        }
        slack_ = grid.slack_index();
        slack_angle_ = grid.buses()[static_cast<std::size_t>(slack_)].va_deg * std::numbers::pi / 180.0;
        if (!has_gen[static_cast<std::size_t>(slack_)])
            vm_set_[slack_] = grid.buses()[static_cast<std::size_t>(slack_)].vm;
        for (int i = 0; i < nb; ++i) {
            if (i == slack_) continue;
            const auto type = grid.buses()[static_cast<std::size_t>(i)].type;
            if (type == BusType::PV && has_gen[static_cast<std::size_t>(i)])
                pv_.push_back(i);
            else
                pq_.push_back(i);
        }
        pvpq_ = pv_;
        pvpq_.insert(pvpq_.end(), pq_.begin(), pq_.end());
    }

    const ComplexMatrix& ybus() const noexcept { return ybus_; }
    const std::vector<int>& pq_buses() const noexcept { return pq_; }
    const std::vector<int>& pv_buses() const noexcept { return pv_; }

    /// Flat start: setpoint magnitudes on slack/PV buses, 1.0 elsewhere, zero angles
    /// except the slack reference angle.
    ComplexVector flat_start() const {
        ComplexVector v(ybus_.rows());
        for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = Complex(1.0, 0.0);
        for (int i : pv_) v[i] = vm_set_[i];
        v[slack_] = std::polar(vm_set_[slack_], slack_angle_);
        return v;
    }

    /// Solves for bus voltages given per-bus demand (p.u.). `start` warm-starts the
    /// angles and PQ magnitudes; setpoint magnitudes are always re-imposed.
    PowerFlowResult solve(const ComplexVector& demand,
                          const std::optional<ComplexVector>& start = std::nullopt) const {
        const Eigen::Index nb = ybus_.rows();
        if (demand.size() != nb) throw DimensionError("demand vector length != bus count");
        if (!demand.allFinite()) throw ValidationError("demand contains NaN or Inf");
        const ComplexVector sbus = gen_injection_ - demand;

        RealVector va(nb), vm(nb);
        const ComplexVector v0 = start ? *start : flat_start();
        if (v0.size() != nb) throw DimensionError("start vector length != bus count");
        for (Eigen::Index i = 0; i < nb; ++i) {
            va[i] = std::arg(v0[i]);
            vm[i] = std::abs(v0[i]);
        }
        for (int i : pv_) vm[i] = vm_set_[i];
        vm[slack_] = vm_set_[slack_];
        va[slack_] = slack_angle_;

        const auto npv = static_cast<Eigen::Index>(pv_.size());
        const auto npq = static_cast<Eigen::Index>(pq_.size());
        const Eigen::Index n = npv + 2 * npq;

        PowerFlowResult res;
        ComplexVector v(nb);
        for (int it = 0;; ++it) {
            for (Eigen::Index i = 0; i < nb; ++i) v[i] = std::polar(vm[i], va[i]);
            const ComplexVector ibus = ybus_ * v;
            const ComplexVector mis = (v.array() * ibus.conjugate().array()).matrix() - sbus;
            Eigen::VectorXd f(n);
            for (Eigen::Index k = 0; k < npv + npq; ++k) f[k] = mis[pvpq_[static_cast<std::size_t>(k)]].real();
            for (Eigen::Index k = 0; k < npq; ++k) f[npv + npq + k] = mis[pq_[static_cast<std::size_t>(k)]].imag();
            res.max_mismatch = mismatch_norm(mis);
            res.iterations = it;
            if (res.max_mismatch < opts_.tolerance) break;
            if (it >= opts_.max_iterations)
                throw PowerFlowError("power flow did not converge in " +
                                         std::to_string(opts_.max_iterations) +
                                         " iterations (max mismatch " +
                                         std::to_string(res.max_mismatch) + " p.u.)",
                                     res.max_mismatch);

            const Eigen::MatrixXd jac = jacobian(v, ibus, n, npv, npq);
            Eigen::PartialPivLU<Eigen::MatrixXd> lu(jac);
            if (!(lu.rcond() > 1e-14)) throw PowerFlowError("power flow Jacobian is singular", res.max_mismatch);
            const Eigen::VectorXd dx = -lu.solve(f);
            if (!dx.allFinite()) throw PowerFlowError("power flow Jacobian is singular", res.max_mismatch);
            for (Eigen::Index k = 0; k < npv + npq; ++k) va[pvpq_[static_cast<std::size_t>(k)]] += dx[k];
            for (Eigen::Index k = 0; k < npq; ++k) vm[pq_[static_cast<std::size_t>(k)]] += dx[npv + npq + k];
        }
        res.voltage = v;
        return res;
    }

    /// Complex power injections S = V conj(Ybus V).
    ComplexVector injections(const ComplexVector& v) const {
        const ComplexVector ibus = ybus_ * v;
        return (v.array() * ibus.conjugate().array()).matrix();
    }

    /// Largest |S mismatch| over PQ buses and |P mismatch| over PV buses.
    double mismatch_norm(const ComplexVector& mis) const {
        double m = 0.0;
        for (int i : pq_) m = std::max(m, std::abs(mis[i]));
        for (int i : pv_) m = std::max(m, std::abs(mis[i].real()));
        return m;
    }

    const ComplexVector& generation() const noexcept { return gen_injection_; }

private:
    Eigen::MatrixXd jacobian(const ComplexVector& v, const ComplexVector& ibus, Eigen::Index n,
                             Eigen::Index npv, Eigen::Index npq) const {
        const Eigen::Index nb = v.size();
        // dS/dVa = j diag(V) conj(diag(I) - Y diag(V))
        // dS/dVm = diag(V) conj(Y diag(V/|V|)) + conj(diag(I)) diag(V/|V|)
        ComplexMatrix ds_dva(nb, nb), ds_dvm(nb, nb);
        const ComplexVector vnorm = v.array() / v.array().abs().cast<Complex>();
        for (Eigen::Index r = 0; r < nb; ++r) {
            for (Eigen::Index c = 0; c < nb; ++c) {
                const Complex y = ybus_(r, c);
                Complex a = -y * v[c];
                if (r == c) a += ibus[r];
                ds_dva(r, c) = Complex(0.0, 1.0) * v[r] * std::conj(a);
                Complex m = v[r] * std::conj(y * vnorm[c]);
                if (r == c) m += std::conj(ibus[r]) * vnorm[r];
                ds_dvm(r, c) = m;
            }
        }
        const Eigen::Index nang = npv + npq;
        Eigen::MatrixXd j(n, n);
        for (Eigen::Index a = 0; a < nang; ++a) {
            const int r = pvpq_[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < nang; ++b) j(a, b) = ds_dva(r, pvpq_[static_cast<std::size_t>(b)]).real();
            for (Eigen::Index b = 0; b < npq; ++b) j(a, nang + b) = ds_dvm(r, pq_[static_cast<std::size_t>(b)]).real();
        }
        for (Eigen::Index a = 0; a < npq; ++a) {
            const int r = pq_[static_cast<std::size_t>(a)];
            for (Eigen::Index b = 0; b < nang; ++b) j(nang + a, b) = ds_dva(r, pvpq_[static_cast<std::size_t>(b)]).imag();
            for (Eigen::Index b = 0; b < npq; ++b) j(nang + a, nang + b) = ds_dvm(r, pq_[static_cast<std::size_t>(b)]).imag();
        }
        return j;
    }

    PowerFlowOptions opts_;
    ComplexMatrix ybus_;
    ComplexVector gen_injection_;
    RealVector vm_set_;
    int slack_ = 0;
    double slack_angle_ = 0.0;
    std::vector<int> pv_, pq_, pvpq_;
};

inline PowerFlowResult solve_ac_power_flow(const GridCase& grid, const ComplexVector& demand,
                                           PowerFlowOptions opts = {}) {
    return PowerFlowSolver(grid, opts).solve(demand);
}

}  // namespace pmufdi
