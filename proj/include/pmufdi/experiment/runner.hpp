#pragma once

#include <chrono>
#include <iostream>
#include <string>
#include <vector>

#include "pmufdi/attack/designer.hpp"
#include "pmufdi/detect/ld_detector.hpp"
#include "pmufdi/experiment/inputs.hpp"
#include "pmufdi/experiment/parallel.hpp"
#include "pmufdi/experiment/report.hpp"

namespace pmufdi {

/// Designs the attack (skipped for an empty set), runs the detector on the
/// result and fills a report row. Stage errors are stored in the row.
inline ScenarioRow run_scenario(const ExperimentConfig& config, const ExperimentInputs& in,
                                const MeasurementBlock& window, const std::vector<BusId>& buses) {
    const auto t0 = std::chrono::steady_clock::now();
    ScenarioRow row;
    row.window_start = window.start_index;
    row.buses = buses;
    try {
        AttackScenario sc;
        if (buses.empty()) {
            sc = design_attack(window, in.dm, {}, config.solver);
            sc.attacked_block.attacked = false;
        } else {
            sc = design_attack(window, in.grid, in.dm, buses, config.solver);
        }
        row.baseline_nuclear = sc.baseline_nuclear;
        row.attacked_nuclear = sc.objective;
        row.fallback = !buses.empty() && sc.c.isZero(0.0);
        row.design_iterations = sc.diagnostics.iterations;
        row.design_primal = sc.diagnostics.primal_residual;
        row.design_dual = sc.diagnostics.dual_residual;

        const DetectionResult det =
            detect(sc.attacked_block, in.dm, config.lambda, config.solver, config.threshold);
        row.detect_iterations = det.diagnostics.iterations;
        row.detect_primal = det.diagnostics.primal_residual;
        row.detect_dual = det.diagnostics.dual_residual;
        row.feasibility = det.feasibility;
        row.ld_objective = det.objective;
        row.certificate = det.certificate_holds();
        row.max_state_norm = det.state_norms.size() ? det.state_norms.maxCoeff() : 0.0;
        row.flagged = to_bus_ids(in.grid, det.state_support);
        row.outcome = to_string(classify_outcome(det, sc.attacked_columns, !buses.empty()));
    } catch (const std::exception& e) {
        row.outcome = "Error";
        row.error = e.what();
        if (row.error.empty()) row.error = "unknown error";
    }
    row.wall_s = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return row;
}

/// |z| of the configured measurement before and after an attack on the
/// configured buses, for every window.
inline TraceResult run_trace(const ExperimentConfig& config, const ExperimentInputs& in) {
    TraceResult t;
    t.buses = config.trace.buses;
    t.measurement = config.trace.measurement;
    int col = -1;
    try {
        col = in.dm.index_of(MeasurementLabel::parse(t.measurement));
    } catch (const std::exception& e) {
        t.errors.push_back(e.what());
        return t;
    }
    for (const auto& w : in.windows) {
        try {
            const AttackScenario sc = design_attack(w, in.grid, in.dm, t.buses, config.solver);
            for (int r = 0; r < w.rows(); ++r)
                t.points.push_back({w.start_index, w.start_index + r, w.time_of_row(r), std::abs(w.z(r, col)),
                                    std::abs(sc.attacked_block.z(r, col))});
        } catch (const std::exception& e) {
            t.errors.push_back("window " + std::to_string(w.start_index) + ": " + e.what());
        }
    }
    return t;
}

inline nlohmann::ordered_json make_manifest(const ExperimentConfig& config, const ExperimentInputs& in,
                                            std::size_t set_count) {
    nlohmann::ordered_json m;
    m["case"] = config.case_path.filename().string();
    m["plan"] = config.plan_name();
    m["buses"] = in.grid.bus_count();
    m["branches"] = in.grid.branch_count();
    m["measurements"] = in.dm.measurement_count();
    m["observable"] = in.observability.observable;
    m["rank"] = in.observability.rank;
    m["seed"] = config.seed();
    m["duration_s"] = config.generation.duration_s;
    m["rate_hz"] = config.generation.rate_hz;
    m["onset_s"] = config.generation.onset_s;
    const auto& d = config.generation.disturbance;
    m["disturbance"] = {
        {"scale", d.scale},
        {"decay", d.decay},
        {"parameter", d.parameter == DisturbanceModel::Parameter::Variance ? "variance" : "stddev"},
        {"units", d.units == DisturbanceModel::Units::MW ? "MW" : "pu"},
        {"draw", d.draw == DisturbanceModel::Draw::Shared ? "shared" : "independent"},
        {"clamped", in.data.loads.clamped}};
    m["noise_sigma"] = config.noise_sigma;
    m["window_length"] = config.window_length;
    m["window_starts"] = config.window_starts;
    m["lambda"] = config.lambda;
    m["max_set_size"] = config.max_set_size;
    m["limit"] = config.limit;
    m["attack_sets"] = set_count;
    m["solver"] = {{"max_iterations", config.solver.max_iterations},
                   {"abs_tolerance", config.solver.abs_tolerance},
                   {"rel_tolerance", config.solver.rel_tolerance},
                   {"rho", config.solver.rho},
                   {"adaptation", config.solver.adaptation == PenaltyAdaptation::Fixed ? "fixed"
                                                                                     : "residual_balancing"}};
    m["threshold"] = {{"rel", config.threshold.rel}, {"abs", config.threshold.abs}};
    return m;
}

/// Generates the data, enumerates attack sets, and for every window and set
/// designs the attack, runs the detector and classifies the outcome. One
/// clean (set_size 0) row per window records the detector on unattacked data.
inline ExperimentReport run_experiment(const ExperimentConfig& config) {
    const ExperimentInputs in = prepare_inputs(config);
    const auto sets = attack_sets_for(config, in);

    struct Task {
        std::size_t window;
        const std::vector<BusId>* buses;
    };
    static const std::vector<BusId> kNone;
    std::vector<Task> tasks;
    for (std::size_t w = 0; w < in.windows.size(); ++w) {
        tasks.push_back({w, &kNone});
        for (const auto& s : sets) tasks.push_back({w, &s});
    }

    ExperimentReport report;
    report.window_starts = config.window_starts;
    report.scenarios.resize(tasks.size());
    parallel_for(tasks.size(), config.workers, [&](std::size_t i) {
        report.scenarios[i] = run_scenario(config, in, in.windows[tasks[i].window], *tasks[i].buses);
    });
    report.aggregates = aggregate(report.scenarios);

    for (const auto& w : in.windows) {
        const RealVector s = singular_spectrum(w);
        const double total = s.sum();
        double acc = 0.0;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            acc += s[k];
            report.spectrum.push_back({w.start_index, static_cast<int>(k + 1), s[k], total > 0 ? acc / total : 0.0});
        }
    }
    if (!config.trace.measurement.empty() && !config.trace.buses.empty()) {
        report.trace = run_trace(config, in);
        for (const auto& e : report.trace->errors) std::clog << "pmufdi: trace skipped: " << e << '\n';
    }
    report.manifest = make_manifest(config, in, sets.size());
    report.manifest["scenarios"] = report.attack_scenario_count();
    report.manifest["clean_windows"] = report.scenarios.size() - static_cast<std::size_t>(report.attack_scenario_count());
    report.manifest["errors"] = report.error_count();
    report.manifest["within_i_violations"] = report.within_i_violations();
    return report;
}

}  // namespace pmufdi
