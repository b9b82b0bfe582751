#pragma once

#include <Eigen/SVD>

#include <algorithm>
#include <set>
#include <string>
#include <vector>

#include "pmufdi/grid/admittance.hpp"
#include "pmufdi/grid/case.hpp"

namespace pmufdi {

/// Which phasors the PMUs report. Row order of H is voltages, then from-side
/// currents, then to-side currents, each in list order.
struct PmuPlan {
    std::vector<BusId> voltage_buses;
    std::vector<BranchId> from_branches;
    std::vector<BranchId> to_branches;

    int measurement_count() const noexcept {
        return static_cast<int>(voltage_buses.size() + from_branches.size() + to_branches.size());
    }

    void validate(const GridCase& grid) const {
        auto no_dups = [](const auto& ids, const char* what) {
            std::set<int> seen;
            for (auto id : ids)
                if (!seen.insert(id.value).second)
                    throw ValidationError(std::string("duplicate ") + what + " id " +
                                          std::to_string(id.value) + " in PMU plan");
        };
        no_dups(voltage_buses, "voltage bus");
        no_dups(from_branches, "from-side branch");
        no_dups(to_branches, "to-side branch");
        for (BusId b : voltage_buses) (void)grid.bus_index(b);
        for (BranchId k : from_branches) (void)grid.branch(k);
        for (BranchId k : to_branches) (void)grid.branch(k);
    }
};

enum class MeasurementKind { Voltage, FromCurrent, ToCurrent };

struct MeasurementLabel {
    MeasurementKind kind = MeasurementKind::Voltage;
    int id = 0;  // bus id for voltages, branch id for currents

    friend bool operator==(const MeasurementLabel&, const MeasurementLabel&) = default;

    /// "V7", "F12", "T12".
    std::string str() const {
        const char* p = kind == MeasurementKind::Voltage       ? "V"
                        : kind == MeasurementKind::FromCurrent ? "F"
                                                               : "T";
        return p + std::to_string(id);
    }

    static MeasurementLabel parse(const std::string& s) {
        if (s.size() < 2) throw ValidationError("bad measurement label '" + s + "'");
        MeasurementLabel l;
        switch (s[0]) {
            case 'V': l.kind = MeasurementKind::Voltage; break;
            case 'F': l.kind = MeasurementKind::FromCurrent; break;
            case 'T': l.kind = MeasurementKind::ToCurrent; break;
            default: throw ValidationError("bad measurement label '" + s + "'");
        }
        try {
            std::size_t used = 0;
            l.id = std::stoi(s.substr(1), &used);
            if (used != s.size() - 1) throw std::invalid_argument(s);
        } catch (const std::exception&) {
            throw ValidationError("bad measurement label '" + s + "'");
        }
        return l;
    }
};

/// Scales each row to unit Euclidean norm. All-zero rows are rejected.
inline ComplexMatrix normalize_rows(const ComplexMatrix& h) {
    ComplexMatrix out = h;
    for (Eigen::Index r = 0; r < h.rows(); ++r) {
        const double n = h.row(r).norm();
        if (n == 0.0)
            throw ValidationError("measurement row " + std::to_string(r) + " is all zero");
        out.row(r) /= n;
    }
    return out;
}

/// Linear map from bus-voltage states to PMU phasors, and its row-normalized form.
class DependencyMatrix {
public:
    DependencyMatrix() = default;
    DependencyMatrix(ComplexMatrix h, std::vector<MeasurementLabel> labels)
        : h_(std::move(h)), labels_(std::move(labels)) {
        if (static_cast<Eigen::Index>(labels_.size()) != h_.rows())
            throw DimensionError("one label per measurement row required");
        for (Eigen::Index r = 0; r < h_.rows(); ++r)
            if (h_.row(r).norm() == 0.0)
                throw ValidationError("measurement " + labels_[static_cast<std::size_t>(r)].str() +
                                      " has an all-zero row (isolated measurement)");
        h_bar_ = normalize_rows(h_);
    }

    const ComplexMatrix& h() const noexcept { return h_; }
    const ComplexMatrix& h_bar() const noexcept { return h_bar_; }
    const std::vector<MeasurementLabel>& labels() const noexcept { return labels_; }

    int measurement_count() const noexcept { return static_cast<int>(h_.rows()); }
    int state_count() const noexcept { return static_cast<int>(h_.cols()); }

    int index_of(const MeasurementLabel& l) const {
        auto it = std::find(labels_.begin(), labels_.end(), l);
        if (it == labels_.end()) throw ValidationError("measurement " + l.str() + " not in plan");
        return static_cast<int>(it - labels_.begin());
    }

private:
    ComplexMatrix h_;
    ComplexMatrix h_bar_;
    std::vector<MeasurementLabel> labels_;
};

inline DependencyMatrix build_measurement_matrix(const GridCase& grid, const PmuPlan& plan) {
    plan.validate(grid);
    const Admittances y = build_admittances(grid);
    const int nb = grid.bus_count();
    ComplexMatrix h = ComplexMatrix::Zero(plan.measurement_count(), nb);
    std::vector<MeasurementLabel> labels;
    labels.reserve(static_cast<std::size_t>(plan.measurement_count()));
    Eigen::Index r = 0;
    for (BusId b : plan.voltage_buses) {
        h(r++, grid.bus_index(b)) = 1.0;
        labels.push_back({MeasurementKind::Voltage, b.value});
    }
    for (BranchId k : plan.from_branches) {
        h.row(r++) = y.yf.row(k.value - 1);
        labels.push_back({MeasurementKind::FromCurrent, k.value});
    }
    for (BranchId k : plan.to_branches) {
        h.row(r++) = y.yt.row(k.value - 1);
        labels.push_back({MeasurementKind::ToCurrent, k.value});
    }
    return DependencyMatrix(std::move(h), std::move(labels));
}

struct Observability {
    bool observable = false;
    int rank = 0;
};

/// Numerical rank with singular values above 1e-8 * sigma_max.
inline Observability check_observability(const DependencyMatrix& dm) {
    const Eigen::MatrixXcd h = dm.h();
    Eigen::JacobiSVD<Eigen::MatrixXcd> svd(h);
    const RealVector& s = svd.singularValues();
    Observability o;
    if (s.size() == 0 || s[0] == 0.0) return o;
    const double cut = 1e-8 * s[0];
    for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > cut) ++o.rank;
    o.observable = o.rank == dm.state_count();
    return o;
}

}  // namespace pmufdi
