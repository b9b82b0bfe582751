#pragma once

// Network description and a reader for the matrix-based MATPOWER case format.
//
// Supported subset: `mpc.baseMVA = <number>;` and the numeric tables
// `mpc.bus`, `mpc.gen`, `mpc.branch` (version 2 column layout). Any other
// `mpc.<name> = ...;` assignment is skipped, as are `%` comments and the
// `function` line. Rows are separated by `;` or newlines, values by
// whitespace or commas. All quantities are converted to per-unit on the
// system MVA base; bus and branch order follow the file.

#include <algorithm>
#include <cctype>
#include <cmath>
#include <fstream>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pmufdi/error.hpp"
#include "pmufdi/types.hpp"

namespace pmufdi {

enum class BusType { PQ = 1, PV = 2, Slack = 3 };

struct Bus {
    BusId id;
    BusType type = BusType::PQ;
    double base_kv = 0.0;
    Complex shunt;  // p.u. admittance at 1.0 p.u. voltage
    double vm = 1.0;
    double va_deg = 0.0;
};

struct Branch {
    BranchId id;
    BusId from;
    BusId to;
    Complex impedance;       // series r + jx, p.u.
    double charging = 0.0;   // total line charging susceptance b, p.u.
    double tap = 1.0;        // off-nominal ratio; 0 in the file means 1
    double shift_deg = 0.0;
    bool in_service = true;
};

struct Generator {
    BusId bus;
    double pg = 0.0, qg = 0.0;
    double qmax = 0.0, qmin = 0.0;
    double pmax = 0.0, pmin = 0.0;
    double vg = 1.0;
    bool in_service = true;
};

struct Load {
    BusId bus;
    double pd = 0.0, qd = 0.0;
};

class GridCase {
public:
    GridCase() = default;
    GridCase(double base_mva, std::vector<Bus> buses, std::vector<Branch> branches,
             std::vector<Generator> generators, std::vector<Load> loads)
        : base_mva_(base_mva), buses_(std::move(buses)), branches_(std::move(branches)),
          generators_(std::move(generators)), loads_(std::move(loads)) {
        validate();
    }

    double base_mva() const noexcept { return base_mva_; }
    const std::vector<Bus>& buses() const noexcept { return buses_; }
    const std::vector<Branch>& branches() const noexcept { return branches_; }
    const std::vector<Generator>& generators() const noexcept { return generators_; }
    const std::vector<Load>& loads() const noexcept { return loads_; }

    int bus_count() const noexcept { return static_cast<int>(buses_.size()); }
    int branch_count() const noexcept { return static_cast<int>(branches_.size()); }

    /// Position of `id` in file order; throws if absent.
    int bus_index(BusId id) const {
        auto it = index_.find(id.value);
        if (it == index_.end())
            throw ValidationError("unknown bus " + std::to_string(id.value));
        return it->second;
    }
    bool has_bus(BusId id) const { return index_.count(id.value) != 0; }

    const Branch& branch(BranchId id) const {
        if (id.value < 1 || id.value > branch_count())
            throw ValidationError("unknown branch " + std::to_string(id.value));
        return branches_[static_cast<std::size_t>(id.value - 1)];
    }

    int slack_index() const {
        for (std::size_t i = 0; i < buses_.size(); ++i)
            if (buses_[i].type == BusType::Slack) return static_cast<int>(i);
        throw ValidationError("case has no slack bus");
    }

    /// Per-bus base demand (p.u.) in file order.
    const ComplexVector& demand() const noexcept { return demand_; }

    /// Load bus: nonzero active or reactive base demand.
    bool is_load_bus(BusId id) const {
        const Complex s = demand_[bus_index(id)];
        return s.real() != 0.0 || s.imag() != 0.0;
    }

    /// Buses adjacent through in-service branches, sorted by index, self-loops dropped.
    std::vector<std::vector<int>> adjacency() const {
        std::vector<std::vector<int>> adj(buses_.size());
        for (const auto& br : branches_) {
            if (!br.in_service) continue;
            const int f = bus_index(br.from), t = bus_index(br.to);
            if (f == t) continue;
            adj[f].push_back(t);
            adj[t].push_back(f);
        }
        for (auto& a : adj) {
            std::sort(a.begin(), a.end());
            a.erase(std::unique(a.begin(), a.end()), a.end());
        }
        return adj;
    }

private:
    void validate() {
        if (!(base_mva_ > 0)) throw ValidationError("system MVA base must be positive");
        index_.clear();
        int slack = 0;
        for (std::size_t i = 0; i < buses_.size(); ++i) {
            if (!index_.emplace(buses_[i].id.value, static_cast<int>(i)).second)
                throw ValidationError("duplicate bus id " + std::to_string(buses_[i].id.value));
            if (buses_[i].type == BusType::Slack) ++slack;
        }
        if (slack == 0) throw ValidationError("case has no slack bus");
        if (slack > 1) throw ValidationError("case has more than one slack bus");
        for (const auto& br : branches_) {
            for (BusId end : {br.from, br.to})
                if (!index_.count(end.value))
                    throw ValidationError("branch " + std::to_string(br.id.value) +
                                          " references missing bus " + std::to_string(end.value));
            if (std::abs(br.impedance) == 0.0)
                throw ValidationError("branch " + std::to_string(br.id.value) +
                                      " has zero series impedance");
        }
        for (const auto& g : generators_)
            if (!index_.count(g.bus.value))
                throw ValidationError("generator references missing bus " +
                                      std::to_string(g.bus.value));
        demand_ = ComplexVector::Zero(bus_count());
        for (const auto& l : loads_) {
            if (!index_.count(l.bus.value))
                throw ValidationError("load references missing bus " +
                                      std::to_string(l.bus.value));
            demand_[index_.at(l.bus.value)] += Complex(l.pd, l.qd);
        }
    }

    double base_mva_ = 100.0;
    std::vector<Bus> buses_;
    std::vector<Branch> branches_;
    std::vector<Generator> generators_;
    std::vector<Load> loads_;
    std::unordered_map<int, int> index_;
    ComplexVector demand_;
};

namespace detail {

struct NumericTable {
    std::vector<std::vector<double>> rows;
    std::vector<int> row_lines;
};

class CaseLexer {
public:
    explicit CaseLexer(std::string_view text) : text_(text) {}

    bool at_end() {
        skip_blank(true);
        return pos_ >= text_.size();
    }
    int line() const noexcept { return line_; }
    int column() const noexcept { return col_; }

    [[noreturn]] void fail(const std::string& msg) const { throw ParseError(msg, line_, col_); }

    char peek() const { return pos_ < text_.size() ? text_[pos_] : '\0'; }

    void advance() {
        if (pos_ >= text_.size()) return;
        if (text_[pos_] == '\n') {
            ++line_;
            col_ = 1;
        } else {
            ++col_;
        }
        ++pos_;
    }

    /// Skips spaces, tabs, comments, and (optionally) newlines and `...` continuations.
    void skip_blank(bool newlines) {
        while (pos_ < text_.size()) {
            const char c = text_[pos_];
            if (c == '%' || c == '#') {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
            } else if (c == ' ' || c == '\t' || c == '\r') {
                advance();
            } else if (c == '\n' && newlines) {
                advance();
            } else if (text_.substr(pos_, 3) == "...") {
                while (pos_ < text_.size() && text_[pos_] != '\n') advance();
                advance();
            } else {
                break;
            }
        }
    }

    std::string identifier() {
        std::string out;
        while (std::isalnum(static_cast<unsigned char>(peek())) || peek() == '_' || peek() == '.') {
            out.push_back(peek());
            advance();
        }
        return out;
    }

    void expect(char c) {
        skip_blank(true);
        if (peek() != c) fail(std::string("expected '") + c + "'");
        advance();
    }

    double number() {
        const char* begin = text_.data() + pos_;
        char* end = nullptr;
        const std::string buf(begin, std::min<std::size_t>(64, text_.size() - pos_));
        const double v = std::strtod(buf.c_str(), &end);
        const std::size_t len = static_cast<std::size_t>(end - buf.c_str());
        if (len == 0) fail("expected a number");
        for (std::size_t i = 0; i < len; ++i) advance();
        if (std::isnan(v)) fail("NaN is not allowed");
        return v;
    }

    /// Skips to the `;` that ends the current statement, honoring bracket nesting and quotes.
    void skip_statement() {
        int depth = 0;
        while (pos_ < text_.size()) {
            const char c = peek();
            if (c == '%') {
                skip_blank(false);
                continue;
            }
            if (c == '\'' || c == '"') {
                const char q = c;
                advance();
                while (pos_ < text_.size() && peek() != q && peek() != '\n') advance();
                advance();
                continue;
            }
            if (c == '[' || c == '{' || c == '(') ++depth;
            if (c == ']' || c == '}' || c == ')') --depth;
            if (depth <= 0 && (c == ';' || (c == '\n' && depth == 0))) {
                advance();
                return;
            }
            advance();
        }
    }

    NumericTable table() {
        NumericTable t;
        expect('[');
        std::vector<double> row;
        int row_line = line_;
        auto flush = [&] {
            if (!row.empty()) {
                t.rows.push_back(std::move(row));
                t.row_lines.push_back(row_line);
                row.clear();
            }
        };
        for (;;) {
            skip_blank(false);
            const char c = peek();
            if (c == '\0') fail("unterminated matrix");
            if (c == ']') {
                advance();
                flush();
                break;
            }
            if (c == ';' || c == '\n') {
                advance();
                flush();
                continue;
            }
            if (c == ',') {
                advance();
                continue;
            }
            if (row.empty()) row_line = line_;
            if (std::isdigit(static_cast<unsigned char>(c)) || c == '-' || c == '+' || c == '.') {
                row.push_back(number());
            } else if (std::isalpha(static_cast<unsigned char>(c))) {
                const std::string word = identifier();
                if (word == "Inf" || word == "inf")
                    row.push_back(HUGE_VAL);
                else
                    fail("unexpected token '" + word + "' in matrix");
            } else {
                fail(std::string("unexpected character '") + c + "' in matrix");
            }
        }
        skip_blank(false);
        if (peek() == ';') advance();
        return t;
    }

private:
    std::string_view text_;
    std::size_t pos_ = 0;
    int line_ = 1;
    int col_ = 1;
};

inline void require_columns(const NumericTable& t, std::size_t n, const char* name) {
    for (std::size_t r = 0; r < t.rows.size(); ++r)
        if (t.rows[r].size() < n)
            throw ParseError(std::string(name) + " row needs at least " + std::to_string(n) +
                                 " columns",
                             t.row_lines[r], 1);
}

inline int as_int(double v, int line, const char* what) {
    if (v != std::floor(v) || std::abs(v) > 1e9)
        throw ParseError(std::string(what) + " must be an integer", line, 1);
    return static_cast<int>(v);
}

}  // namespace detail

/// Parses case-file text into a GridCase (per-unit, file order).
inline GridCase parse_case(std::string_view text) {
    detail::CaseLexer lex(text);
    std::optional<double> base_mva;
    std::optional<detail::NumericTable> bus_t, gen_t, branch_t;

    while (!lex.at_end()) {
        const int line = lex.line(), col = lex.column();
        const std::string word = lex.identifier();
        if (word.empty()) lex.fail(std::string("unexpected character '") + lex.peek() + "'");
        if (word == "function") {
            lex.skip_statement();
            continue;
        }
        if (word.rfind("mpc.", 0) != 0) {
            lex.skip_statement();
            continue;
        }
        lex.skip_blank(false);
        if (lex.peek() != '=') throw ParseError("expected '=' after " + word, line, col);
        lex.advance();
        lex.skip_blank(true);
        if (word == "mpc.baseMVA") {
            base_mva = lex.number();
            lex.skip_blank(false);
            if (lex.peek() == ';') lex.advance();
        } else if (word == "mpc.bus") {
            bus_t = lex.table();
        } else if (word == "mpc.gen") {
            gen_t = lex.table();
        } else if (word == "mpc.branch") {
            branch_t = lex.table();
        } else {
            lex.skip_statement();
        }
    }

    if (!base_mva) throw ParseError("missing mpc.baseMVA", lex.line(), 1);
    if (!bus_t) throw ParseError("missing mpc.bus table", lex.line(), 1);
    if (!branch_t) throw ParseError("missing mpc.branch table", lex.line(), 1);
    const double base = *base_mva;
    if (!(base > 0)) throw ValidationError("mpc.baseMVA must be positive");

    detail::require_columns(*bus_t, 13, "bus");
    detail::require_columns(*branch_t, 11, "branch");
    if (gen_t) detail::require_columns(*gen_t, 10, "gen");

    std::vector<Bus> buses;
    std::vector<Load> loads;
    for (std::size_t r = 0; r < bus_t->rows.size(); ++r) {
        const auto& v = bus_t->rows[r];
        const int ln = bus_t->row_lines[r];
        Bus b;
        b.id = BusId(detail::as_int(v[0], ln, "bus id"));
        const int type = detail::as_int(v[1], ln, "bus type");
        if (type < 1 || type > 3)
            throw ParseError("unsupported bus type " + std::to_string(type), ln, 1);
        b.type = static_cast<BusType>(type);
        b.shunt = Complex(v[4], v[5]) / base;
        b.vm = v[7];
        b.va_deg = v[8];
        b.base_kv = v[9];
        buses.push_back(b);
        if (v[2] != 0.0 || v[3] != 0.0) loads.push_back({b.id, v[2] / base, v[3] / base});
    }

    std::vector<Generator> gens;
    if (gen_t) {
        for (std::size_t r = 0; r < gen_t->rows.size(); ++r) {
            const auto& v = gen_t->rows[r];
            const int ln = gen_t->row_lines[r];
            Generator g;
            g.bus = BusId(detail::as_int(v[0], ln, "generator bus"));
            g.pg = v[1] / base;
            g.qg = v[2] / base;
            g.qmax = v[3] / base;
            g.qmin = v[4] / base;
            g.vg = v[5];
            g.in_service = v[7] > 0;
            g.pmax = v[8] / base;
            g.pmin = v[9] / base;
            gens.push_back(g);
        }
    }

    std::vector<Branch> branches;
    for (std::size_t r = 0; r < branch_t->rows.size(); ++r) {
        const auto& v = branch_t->rows[r];
        const int ln = branch_t->row_lines[r];
        Branch br;
        br.id = BranchId(static_cast<int>(r) + 1);
        br.from = BusId(detail::as_int(v[0], ln, "branch from-bus"));
        br.to = BusId(detail::as_int(v[1], ln, "branch to-bus"));
        br.impedance = Complex(v[2], v[3]);
        br.charging = v[4];
        br.tap = v[8] == 0.0 ? 1.0 : v[8];
        br.shift_deg = v[9];
        br.in_service = v[10] > 0;
        branches.push_back(br);
    }

    return GridCase(base, std::move(buses), std::move(branches), std::move(gens),
                    std::move(loads));
}

inline GridCase load_case(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw Error("cannot open case file '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_case(ss.str());
}

}  // namespace pmufdi
