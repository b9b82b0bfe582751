// pmufdi: generate PMU data, design attacks, run the LD detector, and run
// full experiments or lambda sweeps from a JSON config.
//
// Exit codes: 0 success, 1 error, 2 a designed attack was flagged entirely
// inside its attacked set.

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include "pmufdi/pmufdi.hpp"

namespace fs = std::filesystem;
using namespace pmufdi;

namespace {

struct CommonFlags {
    std::string config;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> workers;
};

void add_common(CLI::App* sub, CommonFlags& f) {
    sub->add_option("--config", f.config, "experiment config (JSON)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", f.seed, "override the RNG seed");
    sub->add_option("--out-dir", f.out_dir, "output directory");
    sub->add_option("--workers", f.workers, "worker threads")->check(CLI::PositiveNumber);
}

ExperimentConfig load(const CommonFlags& f) {
    ExperimentConfig c = load_config(f.config);
    if (f.seed) c.generation.seed = *f.seed;
    if (f.out_dir) c.out_dir = *f.out_dir;
    if (f.workers) c.workers = *f.workers;
    c.validate();
    return c;
}

void ensure_dir(const fs::path& dir) {
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
}

std::vector<BusId> to_ids(const std::vector<int>& v) {
    std::vector<BusId> out;
    for (int b : v) out.emplace_back(b);
    return out;
}

const MeasurementBlock& pick_window(const ExperimentInputs& in, std::optional<int> start) {
    if (!start) return in.windows.front();
    for (const auto& w : in.windows)
        if (w.start_index == *start) return w;
    throw ValidationError("no configured window starts at " + std::to_string(*start));
}

MeasurementBlock load_block(const fs::path& p) {
    return p.extension() == ".bin" ? load_block_binary(p.string()) : load_block_csv(p.string());
}

std::string labels_of(const DependencyMatrix& dm, const std::vector<int>& rows) {
    std::string s;
    for (int r : rows) s += (s.empty() ? "" : " ") + dm.labels()[static_cast<std::size_t>(r)].str();
    return s;
}

int cmd_generate(const CommonFlags& f) {
    const ExperimentConfig c = load(f);
    const ExperimentInputs in = prepare_inputs(c);
    ensure_dir(c.out_dir);
    save_block_csv((c.out_dir / "block.csv").string(), in.data.measurements);
    save_block_binary((c.out_dir / "block.bin").string(), in.data.measurements);
    std::vector<SpectrumRow> spec;
    for (const auto& w : in.windows) {
        const RealVector s = singular_spectrum(w);
        double acc = 0.0;
        for (Eigen::Index k = 0; k < s.size(); ++k) {
            acc += s[k];
            spec.push_back({w.start_index, static_cast<int>(k + 1), s[k], acc / s.sum()});
        }
    }
    report_detail::write_atomic(c.out_dir / "spectrum.csv", spectrum_csv(spec));
    report_detail::write_atomic(c.out_dir / "spectrum.gp", spectrum_script(c.window_starts));
    int max_it = 0;
    for (int it : in.data.states.iterations) max_it = std::max(max_it, it);
    std::printf("generated %d x %d block (%d buses, rank(H) = %d, observable = %s), max Newton iterations %d\n",
                in.data.measurements.rows(), in.data.measurements.cols(), in.grid.bus_count(),
                in.observability.rank, in.observability.observable ? "yes" : "no", max_it);
    for (const auto& w : in.windows)
        std::printf("window %d: nuclear norm %.6f\n", w.start_index, nuclear_norm(w.z));
    std::printf("wrote %s\n", c.out_dir.string().c_str());
    return 0;
}

int cmd_attack(const CommonFlags& f, const std::vector<int>& buses, std::optional<int> window) {
    const ExperimentConfig c = load(f);
    const ExperimentInputs in = prepare_inputs(c);
    const MeasurementBlock& w = pick_window(in, window);
    const AttackScenario sc = design_attack(w, in.grid, in.dm, to_ids(buses), c.solver);
    ensure_dir(c.out_dir);
    save_block_csv((c.out_dir / "attacked.csv").string(), sc.attacked_block);
    save_block_binary((c.out_dir / "attacked.bin").string(), sc.attacked_block);

    const auto induced = induced_measurement_support(sc.c, in.dm, 1e-9);
    std::string body =
        "window_start,buses,subgraph,boundary,baseline_nuclear,attacked_nuclear,iterations,primal,dual,"
        "measurements_j,induced_support\n";
    body += std::to_string(w.start_index) + ',' + report_detail::join_ids(sc.attacked) + ',' +
            report_detail::join_ids(sc.validation->subgraph) + ',' +
            report_detail::join_ids(sc.validation->boundary) + ',' + report_detail::num(sc.baseline_nuclear) +
            ',' + report_detail::num(sc.objective) + ',' + std::to_string(sc.diagnostics.iterations) + ',' +
            report_detail::num(sc.diagnostics.primal_residual) + ',' +
            report_detail::num(sc.diagnostics.dual_residual) + ',' +
            labels_of(in.dm, sc.validation->measurements) + ',' + labels_of(in.dm, induced) + '\n';
    report_detail::write_atomic(c.out_dir / "attack.csv", body);

    std::string cm = "row";
    for (BusId b : sc.attacked) cm += ",C" + std::to_string(b.value);
    cm += '\n';
    for (Eigen::Index r = 0; r < sc.c.rows(); ++r) {
        cm += std::to_string(w.start_index + r);
        for (int col : sc.attacked_columns) cm += ',' + format_complex(sc.c(r, col));
        cm += '\n';
    }
    report_detail::write_atomic(c.out_dir / "attack_matrix.csv", cm);
    std::printf("I = {%s}: nuclear norm %.6f -> %.6f in %d iterations\n",
                report_detail::join_ids(sc.attacked).c_str(), sc.baseline_nuclear, sc.objective,
                sc.diagnostics.iterations);
    std::printf("wrote %s\n", c.out_dir.string().c_str());
    return 0;
}

int cmd_detect(const CommonFlags& f, std::optional<std::string> block_path, const std::vector<int>& buses,
               std::optional<double> lambda, std::optional<int> window) {
    ExperimentConfig c = load(f);
    if (lambda) c.lambda = *lambda;
    c.validate();
    const GridCase grid = load_case(c.case_path.string());
    const PmuPlan plan = c.resolve_plan();
    plan.validate(grid);
    const DependencyMatrix dm = build_measurement_matrix(grid, plan);

    MeasurementBlock block;
    if (block_path) {
        block = load_block(*block_path);
        if (block.labels != dm.labels()) throw ValidationError("block labels do not match the configured plan");
    } else {
        block = pick_window(prepare_inputs(c), window);
    }
    std::vector<int> cols;
    for (int b : buses) cols.push_back(grid.bus_index(BusId(b)));
    const DetectionResult det = detect(block, dm, c.lambda, c.solver, c.threshold);
    const Outcome outcome = classify_outcome(det, cols, block.attacked || !cols.empty());

    ensure_dir(c.out_dir);
    std::string body =
        "lambda,outcome,objective,input_nuclear,feasibility,iterations,primal,dual,certificate,flagged_states,"
        "flagged_measurements\n";
    body += report_detail::num(c.lambda) + ',' + to_string(outcome) + ',' + report_detail::num(det.objective) +
            ',' + report_detail::num(det.input_nuclear) + ',' + report_detail::num(det.feasibility) + ',' +
            std::to_string(det.diagnostics.iterations) + ',' + report_detail::num(det.diagnostics.primal_residual) +
            ',' + report_detail::num(det.diagnostics.dual_residual) + ',' + (det.certificate_holds() ? "1" : "0") +
            ',' + report_detail::join_ids(to_bus_ids(grid, det.state_support)) + ',' +
            labels_of(dm, det.measurement_support) + '\n';
    report_detail::write_atomic(c.out_dir / "detection.csv", body);
    std::string norms = "bus,column_norm,flagged\n";
    for (Eigen::Index j = 0; j < det.state_norms.size(); ++j) {
        const bool flagged =
            std::find(det.state_support.begin(), det.state_support.end(), static_cast<int>(j)) !=
            det.state_support.end();
        norms += std::to_string(grid.buses()[static_cast<std::size_t>(j)].id.value) + ',' +
                 report_detail::num(det.state_norms[j]) + ',' + (flagged ? "1" : "0") + '\n';
    }
    report_detail::write_atomic(c.out_dir / "column_norms.csv", norms);
    std::printf("lambda %.6g: %s, flagged {%s}, %d iterations\n", c.lambda, to_string(outcome),
                report_detail::join_ids(to_bus_ids(grid, det.state_support)).c_str(), det.diagnostics.iterations);
    return outcome == Outcome::DetectedWithinI && block.attacked ? 2 : 0;
}

int cmd_experiment(const CommonFlags& f, std::optional<double> lambda, std::optional<int> max_set_size,
                   std::optional<int> limit, bool timing) {
    ExperimentConfig c = load(f);
    if (lambda) c.lambda = *lambda;
    if (max_set_size) c.max_set_size = *max_set_size;
    if (limit) c.limit = *limit;
    c.validate();
    const ExperimentReport r = run_experiment(c);
    write_report(r, c.out_dir, timing);
    for (const auto& a : r.aggregates)
        std::printf("window %3d |I| = %d: %3d sets, nuclear norm min %.4f mean %.4f max %.4f, bypassed %d, "
                    "within %d, outside %d, errors %d\n",
                    a.window_start, a.set_size, a.count, a.min_nuclear, a.mean_nuclear, a.max_nuclear, a.bypassed,
                    a.detected_within, a.detected_outside, a.errors);
    for (const auto& s : r.scenarios)
        if (s.failed())
            std::fprintf(stderr, "scenario window %d I = {%s} failed: %s\n", s.window_start,
                         report_detail::join_ids(s.buses).c_str(), s.error.c_str());
    std::printf("wrote %s\n", c.out_dir.string().c_str());
    if (r.within_i_violations() > 0) {
        std::fprintf(stderr, "%d designed attack(s) flagged entirely inside I\n", r.within_i_violations());
        return 2;
    }
    return 0;
}

int cmd_sweep(const CommonFlags& f, const std::vector<double>& lambdas, std::optional<int> limit,
              std::optional<int> trials) {
    ExperimentConfig c = load(f);
    if (limit) c.limit = *limit;
    if (trials) c.sweep.naive_trials = *trials;
    c.validate();
    const ExperimentInputs in = prepare_inputs(c);
    const std::vector<double> ls = lambdas.empty() ? c.sweep.lambdas : lambdas;
    const SweepReport rep = lambda_sweep(c, in, ls);
    const auto naive = naive_trials(c, in, c.sweep.naive_trials, c.seed() + 7);
    ensure_dir(c.out_dir);
    report_detail::write_atomic(c.out_dir / "sweep.csv", sweep_csv(rep));
    report_detail::write_atomic(c.out_dir / "sweep_summary.csv", sweep_summary_csv(rep));
    report_detail::write_atomic(c.out_dir / "naive_trials.csv", naive_trials_csv(naive));
    std::fputs(sweep_summary_csv(rep).c_str(), stdout);
    const auto exact = std::count_if(naive.begin(), naive.end(), [](const NaiveTrial& t) { return t.exact; });
    std::printf("naive trials at lambda %.6g: %ld of %zu recovered exactly\n", c.lambda, static_cast<long>(exact),
                naive.size());
    std::printf("wrote %s\n", c.out_dir.string().c_str());
    return rep.count("designed", to_string(Outcome::DetectedWithinI)) > 0 ? 2 : 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Temporally correlated false data injection on synthetic PMU data, and the LD detector"};
    app.require_subcommand(1);

    CommonFlags gen_f, att_f, det_f, exp_f, sw_f;
    auto* gen = app.add_subcommand("generate", "solve the disturbed power flows and write the PMU block");
    add_common(gen, gen_f);

    auto* att = app.add_subcommand("attack", "design an attack on a bus set for one window");
    add_common(att, att_f);
    std::vector<int> att_buses;
    std::optional<int> att_window;
    att->add_option("--buses", att_buses, "attacked bus ids")->required()->delimiter(',');
    att->add_option("--window", att_window, "window start index (default: first configured window)");

    auto* det = app.add_subcommand("detect", "run the LD detector on a block");
    add_common(det, det_f);
    std::optional<std::string> det_block;
    std::vector<int> det_buses;
    std::optional<double> det_lambda;
    std::optional<int> det_window;
    det->add_option("--block", det_block, "block file (.csv or .bin); default: a generated clean window")
        ->check(CLI::ExistingFile);
    det->add_option("--buses", det_buses, "attacked bus ids, for outcome classification")->delimiter(',');
    det->add_option("--lambda", det_lambda, "detector weight")->check(CLI::PositiveNumber);
    det->add_option("--window", det_window, "window start index when no --block is given");

    auto* exp = app.add_subcommand("experiment", "full pipeline over all enumerated attack sets");
    add_common(exp, exp_f);
    std::optional<double> exp_lambda;
    std::optional<int> exp_max, exp_limit;
    bool exp_timing = false;
    exp->add_option("--lambda", exp_lambda, "detector weight")->check(CLI::PositiveNumber);
    exp->add_option("--max-set-size", exp_max, "largest |I| to enumerate")->check(CLI::PositiveNumber);
    exp->add_option("--limit", exp_limit, "keep only the first N attack sets (0 = all)")
        ->check(CLI::NonNegativeNumber);
    exp->add_flag("--timing", exp_timing, "also write timing.csv with per-scenario wall time");

    auto* sw = app.add_subcommand("sweep", "detector outcomes across lambda, plus naive-attack trials");
    add_common(sw, sw_f);
    std::vector<double> sw_lambdas;
    std::optional<int> sw_limit, sw_trials;
    sw->add_option("--lambda", sw_lambdas, "lambda values (repeatable or comma separated)")
        ->delimiter(',')
        ->check(CLI::PositiveNumber);
    sw->add_option("--limit", sw_limit, "keep only the first N designed attack sets (0 = all)")
        ->check(CLI::NonNegativeNumber);
    sw->add_option("--naive-trials", sw_trials, "number of randomized naive-attack trials")
        ->check(CLI::NonNegativeNumber);

    CLI11_PARSE(app, argc, argv);
    try {
        if (*gen) return cmd_generate(gen_f);
        if (*att) return cmd_attack(att_f, att_buses, att_window);
        if (*det) return cmd_detect(det_f, det_block, det_buses, det_lambda, det_window);
        if (*exp) return cmd_experiment(exp_f, exp_lambda, exp_max, exp_limit, exp_timing);
        if (*sw) return cmd_sweep(sw_f, sw_lambdas, sw_limit, sw_trials);
    } catch (const std::exception& e) {
        std::cerr << "pmufdi: " << e.what() << '\n';
        return 1;
    }
    return 1;
}
