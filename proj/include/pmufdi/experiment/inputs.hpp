#pragma once

#include <vector>

#include "pmufdi/experiment/config.hpp"
#include "pmufdi/grid/attack_sets.hpp"
#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

/// Everything the pipeline stages share, built once from a config.
struct ExperimentInputs {
    GridCase grid;
    PmuPlan plan;
    DependencyMatrix dm;
    Observability observability;
    GeneratedData data;
    std::vector<MeasurementBlock> windows;  // one per config window start
};

inline ExperimentInputs prepare_inputs(const ExperimentConfig& config) {
    config.validate();
    ExperimentInputs in;
    in.grid = load_case(config.case_path.string());
    in.plan = config.resolve_plan();
    in.plan.validate(in.grid);
    in.dm = build_measurement_matrix(in.grid, in.plan);
    in.observability = check_observability(in.dm);
    in.data = generate_block(in.grid, in.dm, config.generation);
    if (config.noise_sigma > 0)
        in.data.measurements = add_noise(in.data.measurements, config.noise_sigma, config.seed() + 1);
    for (int start : config.window_starts)
        in.windows.push_back(in.data.measurements.window(start, config.window_length));
    return in;
}

/// Enumerated sets, truncated to the first `limit` when limit > 0.
inline std::vector<std::vector<BusId>> attack_sets_for(const ExperimentConfig& config,
                                                       const ExperimentInputs& in) {
    auto sets = enumerate_attack_sets(in.grid, in.dm, config.max_set_size);
    if (config.limit > 0 && static_cast<int>(sets.size()) > config.limit)
        sets.resize(static_cast<std::size_t>(config.limit));
    return sets;
}

}  // namespace pmufdi
