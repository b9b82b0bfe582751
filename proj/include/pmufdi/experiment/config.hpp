#pragma once

// Experiment configuration, read from a JSON file. Every key is optional;
// unknown keys are rejected so typos fail loudly. Relative paths are resolved
// against the directory holding the config file.
//
// {
//   "case": "../data/case24_ieee_rts.m",
//   "plan": "ieee24"                       // or {"voltage_buses": [...],
//                                          //     "from_branches": [...], "to_branches": [...]}
//   "duration_s": 5, "rate_hz": 30, "onset_s": 1,
//   "window_length": 60, "window_starts": [31, 91],
//   "seed": 1, "lambda": 1.05, "max_set_size": 5, "limit": 0,
//   "workers": 1, "out_dir": "out/ieee24", "noise_sigma": 0,
//   "disturbance": {"scale": 60, "decay": 1.1, "parameter": "variance",
//                   "units": "MW", "draw": "shared"},
//   "power_flow": {"max_iterations": 20, "tolerance": 1e-8},
//   "solver": {"max_iterations": 5000, "abs_tolerance": 1e-12, "rel_tolerance": 1e-7,
//              "rho": 1, "adaptation": "residual_balancing",
//              "balance_ratio": 10, "balance_factor": 2},
//   "threshold": {"rel": 1e-3, "abs": 1e-6},
//   "trace": {"buses": [8], "measurement": "T12"},
//   "sweep": {"lambdas": [0.5, 1.05, 2, 5, 1e6], "naive_magnitude": 0.1,
//             "naive_trials": 50, "naive_min_magnitude": 0.01, "naive_max_magnitude": 1}
// }

#include <nlohmann/json.hpp>

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include "pmufdi/detect/ld_detector.hpp"
#include "pmufdi/grid/plans.hpp"
#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

struct TraceSpec {
    std::vector<BusId> buses;
    std::string measurement;  // label, e.g. "T12"; empty disables the trace
};

struct SweepSpec {
    std::vector<double> lambdas{0.5, 1.05, 2.0, 5.0, 1e6};
    double naive_magnitude = 0.1;
    int naive_trials = 50;
    double naive_min_magnitude = 0.01;
    double naive_max_magnitude = 1.0;
};

struct ExperimentConfig {
    std::filesystem::path case_path;
    /// Built-in plan name, or explicit lists.
    std::variant<std::string, PmuPlan> plan = std::string("ieee24");
    GenerationOptions generation;
    int window_length = 60;
    std::vector<int> window_starts{31, 91};
    double lambda = 1.05;
    int max_set_size = 5;
    /// Keep only the first `limit` enumerated sets; 0 keeps all.
    int limit = 0;
    int workers = 1;
    std::filesystem::path out_dir = "out";
    double noise_sigma = 0.0;
    SolverOptions solver;
    ThresholdPolicy threshold;
    TraceSpec trace;
    SweepSpec sweep;

    std::uint64_t seed() const noexcept { return generation.seed; }

    PmuPlan resolve_plan() const {
        if (const auto* name = std::get_if<std::string>(&plan)) return builtin_plan(*name);
        return std::get<PmuPlan>(plan);
    }

    std::string plan_name() const {
        if (const auto* name = std::get_if<std::string>(&plan)) return *name;
        return "custom";
    }

    void validate() const {
        if (case_path.empty()) throw ValidationError("config: 'case' is required");
        const int total = sample_count(generation.duration_s, generation.rate_hz);
        if (window_length < 1 || window_length > total)
            throw ValidationError("config: window_length must lie in [1, " + std::to_string(total) + "]");
        if (window_starts.empty()) throw ValidationError("config: at least one window start is required");
        for (int s : window_starts)
            if (s < 1 || s + window_length - 1 > total)
                throw ValidationError("config: window starting at " + std::to_string(s) +
                                      " does not fit in " + std::to_string(total) + " samples");
        if (!(lambda > 0)) throw ValidationError("config: lambda must be > 0");
        if (max_set_size < 1) throw ValidationError("config: max_set_size must be >= 1");
        if (limit < 0) throw ValidationError("config: limit must be >= 0");
        if (workers < 1) throw ValidationError("config: workers must be >= 1");
        if (!(noise_sigma >= 0)) throw ValidationError("config: noise_sigma must be >= 0");
        if (!(threshold.rel >= 0) || !(threshold.abs >= 0))
            throw ValidationError("config: threshold values must be >= 0");
        solver.validate();
        for (double l : sweep.lambdas)
            if (!(l > 0)) throw ValidationError("config: sweep lambdas must be > 0");
        if (!(sweep.naive_magnitude > 0) || !(sweep.naive_min_magnitude > 0) ||
            sweep.naive_max_magnitude < sweep.naive_min_magnitude)
            throw ValidationError("config: naive magnitudes must be positive and ordered");
        if (sweep.naive_trials < 0) throw ValidationError("config: naive_trials must be >= 0");
    }
};

namespace detail {

using nlohmann::json;

inline void check_keys(const json& j, const char* section, std::initializer_list<const char*> allowed) {
    if (!j.is_object()) throw ValidationError(std::string("config: '") + section + "' must be an object");
    const std::set<std::string> ok(allowed.begin(), allowed.end());
    for (const auto& [k, v] : j.items())
        if (!ok.count(k)) throw ValidationError(std::string("config: unknown key '") + k + "' in " + section);
}

template <class T>
void read(const json& j, const char* key, T& out) {
    if (!j.contains(key)) return;
    try {
        out = j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ValidationError(std::string("config: bad value for '") + key + "': " + e.what());
    }
}

inline std::vector<BusId> read_buses(const json& j) {
    std::vector<BusId> out;
    for (int v : j.get<std::vector<int>>()) out.emplace_back(v);
    return out;
}

inline std::vector<BranchId> read_branches(const json& j) {
    std::vector<BranchId> out;
    for (int v : j.get<std::vector<int>>()) out.emplace_back(v);
    return out;
}

}  // namespace detail

/// Parses config text; `base_dir` anchors relative paths.
inline ExperimentConfig parse_config(const std::string& text,
                                     const std::filesystem::path& base_dir = ".") {
    using detail::json;
    json j;
    try {
        j = json::parse(text, nullptr, true, true);
    } catch (const json::parse_error& e) {
        throw ParseError(e.what(), 0, static_cast<int>(e.byte));
    }
    detail::check_keys(j, "config",
                       {"case", "plan", "duration_s", "rate_hz", "onset_s", "window_length",
                        "window_starts", "seed", "lambda", "max_set_size", "limit", "workers",
                        "out_dir", "noise_sigma", "disturbance", "power_flow", "solver",
                        "threshold", "trace", "sweep"});
    ExperimentConfig c;
    const auto resolve = [&](const std::string& p) {
        std::filesystem::path path(p);
        return path.is_absolute() ? path : (base_dir / path).lexically_normal();
    };
    if (j.contains("case")) c.case_path = resolve(j.at("case").get<std::string>());
    if (j.contains("out_dir")) c.out_dir = resolve(j.at("out_dir").get<std::string>());

    if (j.contains("plan")) {
        const json& p = j.at("plan");
        if (p.is_string()) {
            c.plan = p.get<std::string>();
        } else {
            detail::check_keys(p, "plan", {"voltage_buses", "from_branches", "to_branches"});
            PmuPlan plan;
            if (p.contains("voltage_buses")) plan.voltage_buses = detail::read_buses(p.at("voltage_buses"));
            if (p.contains("from_branches")) plan.from_branches = detail::read_branches(p.at("from_branches"));
            if (p.contains("to_branches")) plan.to_branches = detail::read_branches(p.at("to_branches"));
            c.plan = plan;
        }
    }

    GenerationOptions& g = c.generation;
    detail::read(j, "duration_s", g.duration_s);
    detail::read(j, "rate_hz", g.rate_hz);
    detail::read(j, "onset_s", g.onset_s);
    detail::read(j, "seed", g.seed);
    detail::read(j, "window_length", c.window_length);
    detail::read(j, "window_starts", c.window_starts);
    detail::read(j, "lambda", c.lambda);
    detail::read(j, "max_set_size", c.max_set_size);
    detail::read(j, "limit", c.limit);
    detail::read(j, "workers", c.workers);
    detail::read(j, "noise_sigma", c.noise_sigma);

    if (j.contains("disturbance")) {
        const json& d = j.at("disturbance");
        detail::check_keys(d, "disturbance", {"scale", "decay", "parameter", "units", "draw"});
        detail::read(d, "scale", g.disturbance.scale);
        detail::read(d, "decay", g.disturbance.decay);
        std::string s;
        if (d.contains("parameter")) {
            s = d.at("parameter").get<std::string>();
            if (s == "variance") g.disturbance.parameter = DisturbanceModel::Parameter::Variance;
            else if (s == "stddev") g.disturbance.parameter = DisturbanceModel::Parameter::StdDev;
            else throw ValidationError("config: disturbance.parameter must be 'variance' or 'stddev'");
        }
        if (d.contains("units")) {
            s = d.at("units").get<std::string>();
            if (s == "MW") g.disturbance.units = DisturbanceModel::Units::MW;
            else if (s == "pu") g.disturbance.units = DisturbanceModel::Units::PerUnit;
            else throw ValidationError("config: disturbance.units must be 'MW' or 'pu'");
        }
        if (d.contains("draw")) {
            s = d.at("draw").get<std::string>();
            if (s == "shared") g.disturbance.draw = DisturbanceModel::Draw::Shared;
            else if (s == "independent") g.disturbance.draw = DisturbanceModel::Draw::Independent;
            else throw ValidationError("config: disturbance.draw must be 'shared' or 'independent'");
        }
    }
    if (j.contains("power_flow")) {
        const json& p = j.at("power_flow");
        detail::check_keys(p, "power_flow", {"max_iterations", "tolerance"});
        detail::read(p, "max_iterations", g.power_flow.max_iterations);
        detail::read(p, "tolerance", g.power_flow.tolerance);
    }
    if (j.contains("solver")) {
        const json& s = j.at("solver");
        detail::check_keys(s, "solver",
                           {"max_iterations", "abs_tolerance", "rel_tolerance", "rho", "adaptation",
                            "balance_ratio", "balance_factor", "verbosity"});
        detail::read(s, "max_iterations", c.solver.max_iterations);
        detail::read(s, "abs_tolerance", c.solver.abs_tolerance);
        detail::read(s, "rel_tolerance", c.solver.rel_tolerance);
        detail::read(s, "rho", c.solver.rho);
        detail::read(s, "balance_ratio", c.solver.balance_ratio);
        detail::read(s, "balance_factor", c.solver.balance_factor);
        detail::read(s, "verbosity", c.solver.verbosity);
        if (s.contains("adaptation")) {
            const auto a = s.at("adaptation").get<std::string>();
            if (a == "residual_balancing") c.solver.adaptation = PenaltyAdaptation::ResidualBalancing;
            else if (a == "fixed") c.solver.adaptation = PenaltyAdaptation::Fixed;
            else throw ValidationError("config: solver.adaptation must be 'residual_balancing' or 'fixed'");
        }
    }
    if (j.contains("threshold")) {
        const json& t = j.at("threshold");
        detail::check_keys(t, "threshold", {"rel", "abs"});
        detail::read(t, "rel", c.threshold.rel);
        detail::read(t, "abs", c.threshold.abs);
    }
    if (j.contains("trace")) {
        const json& t = j.at("trace");
        detail::check_keys(t, "trace", {"buses", "measurement"});
        if (t.contains("buses")) c.trace.buses = detail::read_buses(t.at("buses"));
        detail::read(t, "measurement", c.trace.measurement);
    }
    if (j.contains("sweep")) {
        const json& s = j.at("sweep");
        detail::check_keys(s, "sweep",
                           {"lambdas", "naive_magnitude", "naive_trials", "naive_min_magnitude",
                            "naive_max_magnitude"});
        detail::read(s, "lambdas", c.sweep.lambdas);
        detail::read(s, "naive_magnitude", c.sweep.naive_magnitude);
        detail::read(s, "naive_trials", c.sweep.naive_trials);
        detail::read(s, "naive_min_magnitude", c.sweep.naive_min_magnitude);
        detail::read(s, "naive_max_magnitude", c.sweep.naive_max_magnitude);
    }
    c.validate();
    return c;
}

inline ExperimentConfig load_config(const std::filesystem::path& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open config '" + path.string() + "'");
    std::stringstream ss;
    ss << is.rdbuf();
    try {
        return parse_config(ss.str(), path.parent_path().empty() ? "." : path.parent_path());
    } catch (const Error& e) {
        throw ValidationError(path.string() + ": " + e.what());
    }
}

}  // namespace pmufdi
