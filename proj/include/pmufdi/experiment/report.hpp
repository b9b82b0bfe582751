#pragma once

// Experiment report: per-scenario rows, per-(window, |I|) aggregates, window
// spectra and an optional before/after measurement trace, written as CSV plus
// gnuplot scripts that read only those CSVs.
//
// Files in the output directory:
//   scenarios.csv   one row per (window, attack set); set_size 0 is the clean window
//   aggregates.csv  min/mean/max of the post-attack nuclear norm per (window, set_size)
//   spectrum.csv    singular values of each clean window
//   trace.csv       |z| of one measurement before and after one attack (if configured)
//   manifest.json   seed, case, plan and solver settings
//   timing.csv      wall time per scenario (only when requested; never compared)
//   *.gp            gnuplot scripts
//
// Numbers are printed with 17 significant digits; nothing depends on wall
// time or scheduling, so identical inputs give byte-identical files.

#include <nlohmann/json.hpp>

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <limits>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pmufdi/detect/ld_detector.hpp"
#include "pmufdi/types.hpp"

namespace pmufdi {

struct ScenarioRow {
    int window_start = 0;
    std::vector<BusId> buses;  // empty for the clean window
    double baseline_nuclear = 0.0;
    double attacked_nuclear = 0.0;
    bool fallback = false;     // designer returned C = 0 because its iterate was worse
    int design_iterations = 0;
    double design_primal = 0.0;
    double design_dual = 0.0;
    int detect_iterations = 0;
    double detect_primal = 0.0;
    double detect_dual = 0.0;
    double feasibility = 0.0;
    double ld_objective = 0.0;
    bool certificate = true;
    double max_state_norm = 0.0;
    std::vector<BusId> flagged;
    std::string outcome;       // Outcome name, or "Error"
    std::string error;
    double wall_s = 0.0;       // timing.csv only

    int set_size() const noexcept { return static_cast<int>(buses.size()); }
    double ratio() const { return baseline_nuclear > 0 ? attacked_nuclear / baseline_nuclear : 0.0; }
    bool failed() const noexcept { return !error.empty(); }
};

struct AggregateRow {
    int window_start = 0;
    int set_size = 0;
    int count = 0;  // rows without error
    double min_nuclear = 0.0, mean_nuclear = 0.0, max_nuclear = 0.0;
    double min_ratio = 0.0, mean_ratio = 0.0, max_ratio = 0.0;
    int clean = 0, bypassed = 0, detected_within = 0, detected_outside = 0, errors = 0;
};

struct SpectrumRow {
    int window_start = 0;
    int k = 0;  // 1-based
    double sigma = 0.0;
    double cumulative_fraction = 0.0;
};

struct TracePoint {
    int window_start = 0;
    int index = 0;  // 1-based series index
    double time_s = 0.0;
    double before = 0.0;
    double after = 0.0;
};

struct TraceResult {
    std::vector<BusId> buses;
    std::string measurement;
    std::vector<TracePoint> points;
    std::vector<std::string> errors;
};

struct ExperimentReport {
    nlohmann::ordered_json manifest;
    std::vector<int> window_starts;
    std::vector<ScenarioRow> scenarios;
    std::vector<AggregateRow> aggregates;
    std::vector<SpectrumRow> spectrum;
    std::optional<TraceResult> trace;

    int count_outcome(const std::string& name) const {
        return static_cast<int>(std::count_if(scenarios.begin(), scenarios.end(),
                                              [&](const ScenarioRow& r) { return r.outcome == name; }));
    }
    /// Rows with a nonempty attack set; clean baseline rows are not scenarios.
    int attack_scenario_count() const {
        return static_cast<int>(std::count_if(scenarios.begin(), scenarios.end(),
                                              [](const ScenarioRow& r) { return r.set_size() > 0; }));
    }
    /// Designed attacks flagged entirely inside I.
    int within_i_violations() const {
        return static_cast<int>(std::count_if(scenarios.begin(), scenarios.end(), [](const ScenarioRow& r) {
            return r.set_size() > 0 && r.outcome == to_string(Outcome::DetectedWithinI);
        }));
    }
    int error_count() const {
        return static_cast<int>(std::count_if(scenarios.begin(), scenarios.end(),
                                              [](const ScenarioRow& r) { return r.failed(); }));
    }
};

/// Aggregates over rows in (window, set_size) order; errored rows are counted
/// but excluded from the statistics. Means are summed in row order.
inline std::vector<AggregateRow> aggregate(const std::vector<ScenarioRow>& rows) {
    std::map<std::pair<int, int>, AggregateRow> groups;
    std::map<std::pair<int, int>, std::pair<double, double>> sums;
    for (const auto& r : rows) {
        const auto key = std::make_pair(r.window_start, r.set_size());
        auto [it, fresh] = groups.try_emplace(key);
        AggregateRow& a = it->second;
        if (fresh) {
            a.window_start = r.window_start;
            a.set_size = r.set_size();
            a.min_nuclear = a.min_ratio = std::numeric_limits<double>::infinity();
            a.max_nuclear = a.max_ratio = -std::numeric_limits<double>::infinity();
        }
        if (r.failed()) {
            ++a.errors;
            continue;
        }
        ++a.count;
        auto& s = sums[key];
        s.first += r.attacked_nuclear;
        s.second += r.ratio();
        a.min_nuclear = std::min(a.min_nuclear, r.attacked_nuclear);
        a.max_nuclear = std::max(a.max_nuclear, r.attacked_nuclear);
        a.min_ratio = std::min(a.min_ratio, r.ratio());
        a.max_ratio = std::max(a.max_ratio, r.ratio());
        if (r.outcome == to_string(Outcome::Clean)) ++a.clean;
        else if (r.outcome == to_string(Outcome::Bypassed)) ++a.bypassed;
        else if (r.outcome == to_string(Outcome::DetectedWithinI)) ++a.detected_within;
        else if (r.outcome == to_string(Outcome::DetectedOutsideI)) ++a.detected_outside;
    }
    std::vector<AggregateRow> out;
    for (auto& [key, a] : groups) {
        if (a.count > 0) {
            a.mean_nuclear = sums[key].first / a.count;
            a.mean_ratio = sums[key].second / a.count;
        } else {
            a.min_nuclear = a.max_nuclear = a.min_ratio = a.max_ratio = 0.0;
        }
        out.push_back(a);
    }
    return out;
}

namespace report_detail {

inline std::string num(double v) {
    char buf[40];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

inline std::string join_ids(const std::vector<BusId>& ids) {
    std::string s;
    for (BusId b : ids) s += (s.empty() ? "" : " ") + std::to_string(b.value);
    return s;
}

inline std::vector<BusId> split_ids(const std::string& s) {
    std::vector<BusId> out;
    std::istringstream is(s);
    int v;
    while (is >> v) out.emplace_back(v);
    return out;
}

/// Error text without separators that would break the CSV layout.
inline std::string sanitize(std::string s) {
    for (char& c : s)
        if (c == ',' || c == '\n' || c == '\r' || c == '"') c = ';';
    return s;
}

inline std::vector<std::string> split_csv(const std::string& line) {
    std::vector<std::string> out;
    std::string cell;
    std::istringstream ss(line);
    while (std::getline(ss, cell, ',')) out.push_back(cell);
    if (!line.empty() && line.back() == ',') out.emplace_back();
    return out;
}

inline double to_double(const std::string& s) {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
}

/// Writes `body` to path via a temporary file and a rename, so readers never
/// see a partially written file.
inline void write_atomic(const std::filesystem::path& path, const std::string& body) {
    const std::filesystem::path tmp = path.string() + ".tmp";
    {
        std::ofstream os(tmp, std::ios::binary | std::ios::trunc);
        if (!os) throw Error("cannot write '" + tmp.string() + "'");
        os << body;
        os.flush();
        if (!os) throw Error("write failed for '" + tmp.string() + "'");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error("cannot rename '" + tmp.string() + "' to '" + path.string() + "': " + ec.message());
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path.string() + "'");
    std::ostringstream ss;
    ss << is.rdbuf();
    return ss.str();
}

inline constexpr const char* kScenarioHeader =
    "window_start,set_size,buses,baseline_nuclear,attacked_nuclear,ratio,fallback,"
    "design_iterations,design_primal,design_dual,detect_iterations,detect_primal,detect_dual,"
    "feasibility,ld_objective,certificate,max_state_norm,flagged,outcome,error";

inline constexpr const char* kAggregateHeader =
    "window_start,set_size,count,min_nuclear,mean_nuclear,max_nuclear,min_ratio,mean_ratio,"
    "max_ratio,clean,bypassed,detected_within,detected_outside,errors";

}  // namespace report_detail

inline std::string scenarios_csv(const std::vector<ScenarioRow>& rows) {
    using namespace report_detail;
    std::ostringstream os;
    os << kScenarioHeader << '\n';
    for (const auto& r : rows) {
        os << r.window_start << ',' << r.set_size() << ',' << join_ids(r.buses) << ','
           << num(r.baseline_nuclear) << ',' << num(r.attacked_nuclear) << ',' << num(r.ratio()) << ','
           << (r.fallback ? 1 : 0) << ',' << r.design_iterations << ',' << num(r.design_primal) << ','
           << num(r.design_dual) << ',' << r.detect_iterations << ',' << num(r.detect_primal) << ','
           << num(r.detect_dual) << ',' << num(r.feasibility) << ',' << num(r.ld_objective) << ','
           << (r.certificate ? 1 : 0) << ',' << num(r.max_state_norm) << ',' << join_ids(r.flagged)
           << ',' << r.outcome << ',' << sanitize(r.error) << '\n';
    }
    return os.str();
}

inline std::string aggregates_csv(const std::vector<AggregateRow>& rows) {
    using namespace report_detail;
    std::ostringstream os;
    os << kAggregateHeader << '\n';
    for (const auto& a : rows)
        os << a.window_start << ',' << a.set_size << ',' << a.count << ',' << num(a.min_nuclear) << ','
           << num(a.mean_nuclear) << ',' << num(a.max_nuclear) << ',' << num(a.min_ratio) << ','
           << num(a.mean_ratio) << ',' << num(a.max_ratio) << ',' << a.clean << ',' << a.bypassed << ','
           << a.detected_within << ',' << a.detected_outside << ',' << a.errors << '\n';
    return os.str();
}

inline std::string spectrum_csv(const std::vector<SpectrumRow>& rows) {
    using namespace report_detail;
    std::ostringstream os;
    os << "window_start,k,sigma,cumulative_fraction\n";
    for (const auto& s : rows)
        os << s.window_start << ',' << s.k << ',' << num(s.sigma) << ',' << num(s.cumulative_fraction) << '\n';
    return os.str();
}

inline std::string trace_csv(const TraceResult& t) {
    using namespace report_detail;
    std::ostringstream os;
    os << "window_start,index,time_s,before,after\n";
    for (const auto& p : t.points)
        os << p.window_start << ',' << p.index << ',' << num(p.time_s) << ',' << num(p.before) << ','
           << num(p.after) << '\n';
    return os.str();
}

inline std::vector<ScenarioRow> parse_scenarios_csv(const std::string& text) {
    using namespace report_detail;
    std::istringstream is(text);
    std::string line;
    int lineno = 1;
    if (!std::getline(is, line) || line != kScenarioHeader)
        throw ParseError("unexpected scenarios.csv header", 1, 1);
    std::vector<ScenarioRow> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto c = split_csv(line);
        if (c.size() != 20) throw ParseError("expected 20 fields, got " + std::to_string(c.size()), lineno, 1);
        try {
            ScenarioRow r;
            r.window_start = std::stoi(c[0]);
            r.buses = split_ids(c[2]);
            if (static_cast<int>(r.buses.size()) != std::stoi(c[1]))
                throw ParseError("set_size does not match bus list", lineno, 2);
            r.baseline_nuclear = to_double(c[3]);
            r.attacked_nuclear = to_double(c[4]);
            r.fallback = c[6] == "1";
            r.design_iterations = std::stoi(c[7]);
            r.design_primal = to_double(c[8]);
            r.design_dual = to_double(c[9]);
            r.detect_iterations = std::stoi(c[10]);
            r.detect_primal = to_double(c[11]);
            r.detect_dual = to_double(c[12]);
            r.feasibility = to_double(c[13]);
            r.ld_objective = to_double(c[14]);
            r.certificate = c[15] == "1";
            r.max_state_norm = to_double(c[16]);
            r.flagged = split_ids(c[17]);
            r.outcome = c[18];
            r.error = c[19];
            rows.push_back(std::move(r));
        } catch (const ParseError&) {
            throw;
        } catch (const std::exception& e) {
            throw ParseError(std::string("bad field: ") + e.what(), lineno, 1);
        }
    }
    return rows;
}

inline std::string spectrum_script(const std::vector<int>& windows) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set terminal pngcairo size 900,540\n"
          "set output 'spectrum.png'\n"
          "set logscale y\n"
          "set xlabel 'index'\n"
          "set ylabel 'singular value'\n"
          "set grid\n"
          "plot ";
    for (std::size_t i = 0; i < windows.size(); ++i)
        os << (i ? ", \\\n     " : "") << "'spectrum.csv' skip 1 using (($1 == " << windows[i]
           << ") ? $2 : NaN):3 with linespoints title 'window from t = " << windows[i] << "'";
    os << '\n';
    return os.str();
}

inline std::string aggregates_script(const std::vector<int>& windows) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set terminal pngcairo size 900,540\n"
          "set output 'aggregates.png'\n"
          "set xlabel '|I|'\n"
          "set ylabel 'nuclear norm after attack'\n"
          "set xtics 1\n"
          "set grid\n"
          "plot ";
    for (std::size_t i = 0; i < windows.size(); ++i)
        os << (i ? ", \\\n     " : "") << "'aggregates.csv' skip 1 using (($1 == " << windows[i]
           << " && $2 > 0) ? $2 : NaN):5:4:6 with yerrorlines title 'window from t = " << windows[i]
           << " (mean, min-max)'";
    os << '\n';
    return os.str();
}

inline std::string trace_script(const TraceResult& t, const std::vector<int>& windows) {
    std::ostringstream os;
    os << "set datafile separator ','\n"
          "set terminal pngcairo size 900,540\n"
          "set output 'trace.png'\n"
          "set xlabel 'time (s)'\n"
          "set ylabel '|"
       << t.measurement << "| (p.u.)'\n"
       << "set title 'I = {" << report_detail::join_ids(t.buses) << "}'\n"
       << "set grid\n"
          "plot ";
    for (std::size_t i = 0; i < windows.size(); ++i) {
        const int w = windows[i];
        os << (i ? ", \\\n     " : "") << "'trace.csv' skip 1 using (($1 == " << w
           << ") ? $3 : NaN):4 with lines lw 2 title 'before (t = " << w << ")', \\\n"
           << "     'trace.csv' skip 1 using (($1 == " << w
           << ") ? $3 : NaN):5 with lines dt 2 lw 2 title 'after (t = " << w << ")'";
    }
    os << '\n';
    return os.str();
}

inline void write_report(const ExperimentReport& report, const std::filesystem::path& dir,
                         bool with_timing = false) {
    using report_detail::write_atomic;
    std::error_code ec;
    std::filesystem::create_directories(dir, ec);
    if (ec) throw Error("cannot create '" + dir.string() + "': " + ec.message());
    write_atomic(dir / "scenarios.csv", scenarios_csv(report.scenarios));
    write_atomic(dir / "aggregates.csv", aggregates_csv(report.aggregates));
    write_atomic(dir / "spectrum.csv", spectrum_csv(report.spectrum));
    write_atomic(dir / "manifest.json", report.manifest.dump(2) + "\n");
    write_atomic(dir / "spectrum.gp", spectrum_script(report.window_starts));
    write_atomic(dir / "aggregates.gp", aggregates_script(report.window_starts));
    if (report.trace && !report.trace->points.empty()) {
        write_atomic(dir / "trace.csv", trace_csv(*report.trace));
        write_atomic(dir / "trace.gp", trace_script(*report.trace, report.window_starts));
    }
    if (with_timing) {
        std::ostringstream os;
        os << "row,window_start,buses,wall_s\n";
        for (std::size_t i = 0; i < report.scenarios.size(); ++i) {
            const auto& r = report.scenarios[i];
            os << i + 1 << ',' << r.window_start << ',' << report_detail::join_ids(r.buses) << ','
               << report_detail::num(r.wall_s) << '\n';
        }
        write_atomic(dir / "timing.csv", os.str());
    }
}

/// Reads scenarios.csv and aggregates.csv from `dir` and checks that the
/// stored aggregates are exactly what the rows re-aggregate to.
inline ExperimentReport load_report(const std::filesystem::path& dir) {
    ExperimentReport r;
    r.scenarios = parse_scenarios_csv(report_detail::read_file(dir / "scenarios.csv"));
    r.aggregates = aggregate(r.scenarios);
    const std::string stored = report_detail::read_file(dir / "aggregates.csv");
    if (stored != aggregates_csv(r.aggregates))
        throw ValidationError("aggregates.csv in '" + dir.string() +
                              "' does not match the re-aggregated scenario rows");
    for (const auto& s : r.scenarios)
        if (std::find(r.window_starts.begin(), r.window_starts.end(), s.window_start) == r.window_starts.end())
            r.window_starts.push_back(s.window_start);
    const auto manifest = dir / "manifest.json";
    if (std::filesystem::exists(manifest))
        r.manifest = nlohmann::ordered_json::parse(report_detail::read_file(manifest));
    return r;
}

}  // namespace pmufdi
