#pragma once

// MeasurementBlock serialization.
//
// CSV layout:
//   # pmufdi-block rate_hz=<r> start_index=<s> attacked=<0|1>
//   t,<label 1>,...,<label n_z>
//   <series index>,<re+imj>,...
// Entries are printed with 17 significant digits, so a write/read cycle is
// exact. Labels are V<bus>, F<branch>, T<branch>.
//
// Binary cache (little-endian):
//   "PMUFDIB1" | u64 rows | u64 cols | f64 rate | i64 start | u8 attacked |
//   per label: u32 length + bytes | rows*cols (f64 re, f64 im), row-major.

#include <bit>
#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "pmufdi/scenario/block.hpp"

namespace pmufdi {

inline std::string format_complex(Complex v) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g%+.17gj", v.real(), v.imag());
    return buf;
}

inline Complex parse_complex(const std::string& s) {
    if (s.empty() || s.back() != 'j') throw ParseError("bad complex entry '" + s + "'", 0, 0);
    std::size_t split = std::string::npos;
    for (std::size_t i = s.size() - 1; i > 0; --i) {
        if ((s[i] == '+' || s[i] == '-') && s[i - 1] != 'e' && s[i - 1] != 'E') {
            split = i;
            break;
        }
    }
    if (split == std::string::npos) throw ParseError("bad complex entry '" + s + "'", 0, 0);
    try {
        std::size_t used_re = 0, used_im = 0;
        const std::string re = s.substr(0, split);
        const std::string im = s.substr(split, s.size() - split - 1);
        const double r = std::stod(re, &used_re);
        const double i = std::stod(im, &used_im);
        if (used_re != re.size() || used_im != im.size()) throw std::invalid_argument(s);
        return {r, i};
    } catch (const std::exception&) {
        throw ParseError("bad complex entry '" + s + "'", 0, 0);
    }
}

inline void write_block_csv(std::ostream& os, const MeasurementBlock& b) {
    b.validate();
    char meta[128];
    std::snprintf(meta, sizeof meta, "# pmufdi-block rate_hz=%.17g start_index=%d attacked=%d\n",
                  b.rate_hz, b.start_index, b.attacked ? 1 : 0);
    os << meta << "t";
    for (const auto& l : b.labels) os << ',' << l.str();
    os << '\n';
    for (Eigen::Index r = 0; r < b.z.rows(); ++r) {
        os << (b.start_index + r);
        for (Eigen::Index c = 0; c < b.z.cols(); ++c) os << ',' << format_complex(b.z(r, c));
        os << '\n';
    }
}

inline MeasurementBlock read_block_csv(std::istream& is) {
    MeasurementBlock b;
    std::string line;
    int lineno = 0;
    auto split = [](const std::string& s) {
        std::vector<std::string> out;
        std::stringstream ss(s);
        std::string cell;
        while (std::getline(ss, cell, ',')) out.push_back(cell);
        return out;
    };
    if (!std::getline(is, line)) throw ParseError("empty block file", 1, 1);
    ++lineno;
    int attacked = 0;
    if (std::sscanf(line.c_str(), "# pmufdi-block rate_hz=%lf start_index=%d attacked=%d",
                    &b.rate_hz, &b.start_index, &attacked) != 3)
        throw ParseError("missing block metadata line", lineno, 1);
    b.attacked = attacked != 0;
    if (!std::getline(is, line)) throw ParseError("missing header row", 2, 1);
    ++lineno;
    auto header = split(line);
    if (header.empty() || header[0] != "t") throw ParseError("header must start with 't'", lineno, 1);
    for (std::size_t i = 1; i < header.size(); ++i) b.labels.push_back(MeasurementLabel::parse(header[i]));

    std::vector<std::vector<Complex>> rows;
    while (std::getline(is, line)) {
        ++lineno;
        if (line.empty()) continue;
        auto cells = split(line);
        if (cells.size() != header.size())
            throw ParseError("row has " + std::to_string(cells.size()) + " cells, expected " +
                                 std::to_string(header.size()),
                             lineno, 1);
        if (std::stoi(cells[0]) != b.start_index + static_cast<int>(rows.size()))
            throw ParseError("non-consecutive series index", lineno, 1);
        std::vector<Complex> row;
        for (std::size_t i = 1; i < cells.size(); ++i) {
            try {
                row.push_back(parse_complex(cells[i]));
            } catch (const ParseError& e) {
                throw ParseError(e.what(), lineno, static_cast<int>(i) + 1);
            }
        }
        rows.push_back(std::move(row));
    }
    b.z.resize(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(b.labels.size()));
    for (std::size_t r = 0; r < rows.size(); ++r)
        for (std::size_t c = 0; c < rows[r].size(); ++c)
            b.z(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = rows[r][c];
    b.validate();
    return b;
}

namespace detail {

static_assert(std::endian::native == std::endian::little,
              "binary block cache assumes a little-endian host");

template <class T>
void put(std::ostream& os, T v) {
    os.write(reinterpret_cast<const char*>(&v), sizeof v);
}

template <class T>
T get(std::istream& is) {
    T v{};
    is.read(reinterpret_cast<char*>(&v), sizeof v);
    if (!is) throw Error("truncated binary block");
    return v;
}

inline constexpr char kBlockMagic[8] = {'P', 'M', 'U', 'F', 'D', 'I', 'B', '1'};

}  // namespace detail

inline void write_block_binary(std::ostream& os, const MeasurementBlock& b) {
    b.validate();
    os.write(detail::kBlockMagic, sizeof detail::kBlockMagic);
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(b.z.rows()));
    detail::put<std::uint64_t>(os, static_cast<std::uint64_t>(b.z.cols()));
    detail::put<double>(os, b.rate_hz);
    detail::put<std::int64_t>(os, b.start_index);
    detail::put<std::uint8_t>(os, b.attacked ? 1 : 0);
    for (const auto& l : b.labels) {
        const std::string s = l.str();
        detail::put<std::uint32_t>(os, static_cast<std::uint32_t>(s.size()));
        os.write(s.data(), static_cast<std::streamsize>(s.size()));
    }
    for (Eigen::Index r = 0; r < b.z.rows(); ++r)
        for (Eigen::Index c = 0; c < b.z.cols(); ++c) {
            detail::put<double>(os, b.z(r, c).real());
            detail::put<double>(os, b.z(r, c).imag());
        }
}

inline MeasurementBlock read_block_binary(std::istream& is) {
    char magic[8];
    is.read(magic, sizeof magic);
    if (!is || std::memcmp(magic, detail::kBlockMagic, sizeof magic) != 0)
        throw Error("not a pmufdi binary block");
    MeasurementBlock b;
    const auto rows = detail::get<std::uint64_t>(is);
    const auto cols = detail::get<std::uint64_t>(is);
    if (rows > (1u << 24) || cols > (1u << 24)) throw Error("implausible binary block dimensions");
    b.rate_hz = detail::get<double>(is);
    b.start_index = static_cast<int>(detail::get<std::int64_t>(is));
    b.attacked = detail::get<std::uint8_t>(is) != 0;
    for (std::uint64_t c = 0; c < cols; ++c) {
        const auto n = detail::get<std::uint32_t>(is);
        if (n > 64) throw Error("implausible label length in binary block");
        std::string s(n, '\0');
        is.read(s.data(), n);
        if (!is) throw Error("truncated binary block");
        b.labels.push_back(MeasurementLabel::parse(s));
    }
    b.z.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
    for (Eigen::Index r = 0; r < b.z.rows(); ++r)
        for (Eigen::Index c = 0; c < b.z.cols(); ++c) {
            const double re = detail::get<double>(is);
            const double im = detail::get<double>(is);
            b.z(r, c) = Complex(re, im);
        }
    b.validate();
    return b;
}

inline void save_block_csv(const std::string& path, const MeasurementBlock& b) {
    std::ofstream os(path);
    if (!os) throw Error("cannot write '" + path + "'");
    write_block_csv(os, b);
    if (!os) throw Error("write failed for '" + path + "'");
}

inline MeasurementBlock load_block_csv(const std::string& path) {
    std::ifstream is(path);
    if (!is) throw Error("cannot open '" + path + "'");
    return read_block_csv(is);
}

inline void save_block_binary(const std::string& path, const MeasurementBlock& b) {
    std::ofstream os(path, std::ios::binary);
    if (!os) throw Error("cannot write '" + path + "'");
    write_block_binary(os, b);
    if (!os) throw Error("write failed for '" + path + "'");
}

inline MeasurementBlock load_block_binary(const std::string& path) {
    std::ifstream is(path, std::ios::binary);
    if (!is) throw Error("cannot open '" + path + "'");
    return read_block_binary(is);
}

}  // namespace pmufdi
