#pragma once

// Detector behavior across lambda on a fixed set of blocks (clean, designed
// attacks, naive attacks), and randomized naive-attack recovery trials.

#include <algorithm>
#include <cmath>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "pmufdi/attack/designer.hpp"
#include "pmufdi/attack/naive.hpp"
#include "pmufdi/detect/ld_detector.hpp"
#include "pmufdi/experiment/inputs.hpp"
#include "pmufdi/experiment/parallel.hpp"
#include "pmufdi/experiment/report.hpp"

namespace pmufdi {

/// Valid single-bus attack sets whose normalized dependency column keeps
/// more than `lambda` of its norm outside the row space of `window`. Only
/// these can be isolated by the detector as a column-sparse term.
inline std::vector<BusId> recoverable_single_buses(const ExperimentInputs& in,
                                                   const MeasurementBlock& window, double lambda) {
    const RealVector off = off_row_space_norms(window, in.dm);
    std::vector<BusId> out;
    for (const auto& s : enumerate_attack_sets(in.grid, in.dm, 1))
        if (off[in.grid.bus_index(s.front())] > lambda) out.push_back(s.front());
    return out;
}

struct SweepBlock {
    std::string kind;  // "clean", "designed" or "naive"
    std::vector<BusId> buses;
    std::vector<int> columns;
    MeasurementBlock block;
    std::string error;
};

struct SweepRow {
    double lambda = 0.0;
    int window_start = 0;
    std::string kind;
    std::vector<BusId> buses;
    std::string outcome;  // Outcome name, or "Error"
    std::vector<BusId> flagged;
    double max_state_norm = 0.0;
    int iterations = 0;
    std::string error;
};

struct SweepReport {
    std::vector<SweepRow> rows;

    int count(const std::string& kind, const std::string& outcome) const {
        return static_cast<int>(std::count_if(rows.begin(), rows.end(), [&](const SweepRow& r) {
            return r.kind == kind && r.outcome == outcome;
        }));
    }
};

/// Fixed blocks per window: the clean window, designed attacks on the
/// enumerated sets (truncated by config.limit), and one naive attack per
/// recoverable single bus at config.sweep.naive_magnitude.
inline std::vector<SweepBlock> sweep_blocks(const ExperimentConfig& config, const ExperimentInputs& in) {
    std::vector<SweepBlock> blocks;
    const auto sets = attack_sets_for(config, in);
    std::mt19937_64 rng(config.seed());
    for (const auto& w : in.windows) {
        blocks.push_back({"clean", {}, {}, w, ""});
        for (const auto& s : sets) {
            SweepBlock b{"designed", s, {}, w, ""};
            try {
                const AttackScenario sc = design_attack(w, in.grid, in.dm, s, config.solver);
                b.columns = sc.attacked_columns;
                b.block = sc.attacked_block;
            } catch (const std::exception& e) {
                b.error = e.what();
            }
            blocks.push_back(std::move(b));
        }
        for (BusId bus : recoverable_single_buses(in, w, config.lambda)) {
            const int col = in.grid.bus_index(bus);
            SweepBlock b{"naive", {bus}, {col}, w, ""};
            try {
                const ComplexMatrix c =
                    naive_ramp_attack(w, in.dm.state_count(), {col}, config.sweep.naive_magnitude, rng);
                b.block = apply_attack(w, c, in.dm);
            } catch (const std::exception& e) {
                b.error = e.what();
            }
            blocks.push_back(std::move(b));
        }
    }
    return blocks;
}

inline SweepReport lambda_sweep(const ExperimentConfig& config, const ExperimentInputs& in,
                                const std::vector<double>& lambdas) {
    if (lambdas.empty()) throw ValidationError("lambda sweep needs at least one lambda");
    for (double l : lambdas)
        if (!(l > 0)) throw ValidationError("lambda sweep values must be > 0");
    const std::vector<SweepBlock> blocks = sweep_blocks(config, in);

    SweepReport rep;
    rep.rows.resize(lambdas.size() * blocks.size());
    parallel_for(rep.rows.size(), config.workers, [&](std::size_t i) {
        const double lambda = lambdas[i / blocks.size()];
        const SweepBlock& b = blocks[i % blocks.size()];
        SweepRow& row = rep.rows[i];
        row.lambda = lambda;
        row.window_start = b.block.start_index;
        row.kind = b.kind;
        row.buses = b.buses;
        if (!b.error.empty()) {
            row.outcome = "Error";
            row.error = b.error;
            return;
        }
        try {
            const DetectionResult det = detect(b.block, in.dm, lambda, config.solver, config.threshold);
            row.outcome = to_string(classify_outcome(det, b.columns, b.kind != "clean"));
            row.flagged = to_bus_ids(in.grid, det.state_support);
            row.max_state_norm = det.state_norms.size() ? det.state_norms.maxCoeff() : 0.0;
            row.iterations = det.diagnostics.iterations;
        } catch (const std::exception& e) {
            row.outcome = "Error";
            row.error = e.what();
        }
    });
    return rep;
}

inline std::string sweep_csv(const SweepReport& rep) {
    using namespace report_detail;
    std::ostringstream os;
    os << "lambda,window_start,kind,buses,outcome,flagged,max_state_norm,iterations,error\n";
    for (const auto& r : rep.rows)
        os << num(r.lambda) << ',' << r.window_start << ',' << r.kind << ',' << join_ids(r.buses) << ','
           << r.outcome << ',' << join_ids(r.flagged) << ',' << num(r.max_state_norm) << ','
           << r.iterations << ',' << sanitize(r.error) << '\n';
    return os.str();
}

/// Outcome counts per (lambda, kind).
inline std::string sweep_summary_csv(const SweepReport& rep) {
    using namespace report_detail;
    std::map<std::pair<double, std::string>, std::map<std::string, int>> counts;
    for (const auto& r : rep.rows) ++counts[{r.lambda, r.kind}][r.outcome];
    std::ostringstream os;
    os << "lambda,kind,total,Clean,Bypassed,DetectedWithinI,DetectedOutsideI,Error\n";
    for (const auto& [key, m] : counts) {
        int total = 0;
        for (const auto& [k, v] : m) total += v;
        const auto get = [&](const char* k) {
            auto it = m.find(k);
            return it == m.end() ? 0 : it->second;
        };
        os << num(key.first) << ',' << key.second << ',' << total << ',' << get("Clean") << ','
           << get("Bypassed") << ',' << get("DetectedWithinI") << ',' << get("DetectedOutsideI") << ','
           << get("Error") << '\n';
    }
    return os.str();
}

struct NaiveTrial {
    int trial = 0;
    int window_start = 0;
    BusId bus;
    double magnitude = 0.0;
    std::vector<BusId> flagged;
    std::string outcome;
    bool exact = false;  // flagged set == {bus}
    std::string error;
};

/// Randomized single-bus naive attacks at config.lambda: window, bus (from
/// the recoverable valid singles) and log-uniform magnitude drawn per trial
/// from a generator seeded by `seed`.
inline std::vector<NaiveTrial> naive_trials(const ExperimentConfig& config, const ExperimentInputs& in,
                                            int count, std::uint64_t seed) {
    if (count < 0) throw ValidationError("naive trial count must be >= 0");
    std::vector<std::vector<BusId>> candidates;
    for (const auto& w : in.windows) candidates.push_back(recoverable_single_buses(in, w, config.lambda));

    struct Draw {
        std::size_t window;
        BusId bus;
        double magnitude;
        std::uint64_t attack_seed;
    };
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> log_mag(std::log(config.sweep.naive_min_magnitude),
                                                   std::log(config.sweep.naive_max_magnitude));
    std::vector<Draw> draws;
    std::vector<NaiveTrial> out(static_cast<std::size_t>(count));
    for (int t = 0; t < count; ++t) {
        std::uniform_int_distribution<std::size_t> pick_w(0, in.windows.size() - 1);
        const std::size_t w = pick_w(rng);
        Draw d{w, BusId{}, std::exp(log_mag(rng)), rng()};
        if (!candidates[w].empty()) {
            std::uniform_int_distribution<std::size_t> pick_b(0, candidates[w].size() - 1);
            d.bus = candidates[w][pick_b(rng)];
        }
        draws.push_back(d);
    }
    parallel_for(draws.size(), config.workers, [&](std::size_t i) {
        const Draw& d = draws[i];
        NaiveTrial& t = out[i];
        t.trial = static_cast<int>(i) + 1;
        t.window_start = in.windows[d.window].start_index;
        t.bus = d.bus;
        t.magnitude = d.magnitude;
        try {
            if (candidates[d.window].empty()) throw ValidationError("no recoverable single-bus attack set");
            const int col = in.grid.bus_index(d.bus);
            std::mt19937_64 attack_rng(d.attack_seed);
            const MeasurementBlock& w = in.windows[d.window];
            const ComplexMatrix c = naive_ramp_attack(w, in.dm.state_count(), {col}, d.magnitude, attack_rng);
            const DetectionResult det =
                detect(apply_attack(w, c, in.dm), in.dm, config.lambda, config.solver, config.threshold);
            t.flagged = to_bus_ids(in.grid, det.state_support);
            t.outcome = to_string(classify_outcome(det, {col}));
            t.exact = t.flagged.size() == 1 && t.flagged.front() == d.bus;
        } catch (const std::exception& e) {
            t.outcome = "Error";
            t.error = e.what();
        }
    });
    return out;
}

inline std::string naive_trials_csv(const std::vector<NaiveTrial>& trials) {
    using namespace report_detail;
    std::ostringstream os;
    os << "trial,window_start,bus,magnitude,outcome,flagged,exact,error\n";
    for (const auto& t : trials)
        os << t.trial << ',' << t.window_start << ',' << t.bus.value << ',' << num(t.magnitude) << ','
           << t.outcome << ',' << join_ids(t.flagged) << ',' << (t.exact ? 1 : 0) << ','
           << sanitize(t.error) << '\n';
    return os.str();
}

}  // namespace pmufdi
