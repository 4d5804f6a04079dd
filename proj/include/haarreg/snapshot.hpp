#pragma once

#include "haarreg/car.hpp"
#include "haarreg/dyadic.hpp"
#include "haarreg/error.hpp"
#include "haarreg/lattice.hpp"

#include <array>
#include <charconv>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

// Field snapshots: comma-separated text, one row per site in lexicographic
// (s1, s2) order. Raw fields carry `s1,s2,z1,...,zp`; regression samples
// carry `s1,s2,x1,x2,y`.

namespace haarreg {

namespace detail {

inline std::string format_real(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    for (;;) {
        const auto pos = line.find(',', start);
        out.push_back(line.substr(start, pos - start));
        if (pos == std::string_view::npos) break;
        start = pos + 1;
    }
    return out;
}

template <class T>
T parse_field(std::string_view text, const std::string& where) {
    while (!text.empty() && (text.front() == ' ' || text.front() == '\t')) text.remove_prefix(1);
    while (!text.empty() && (text.back() == ' ' || text.back() == '\t' || text.back() == '\r')) text.remove_suffix(1);
    T value{};
    auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), value);
    if (ec != std::errc{} || ptr != text.data() + text.size())
        throw Error(ErrorCode::ParseError, where + ": cannot parse '" + std::string(text) + "'");
    return value;
}

} // namespace detail

inline void write_field_snapshot(std::ostream& out, const LatticeGraph& graph, const FieldState& state) {
    out << "s1,s2";
    for (std::size_t c = 0; c < state.components; ++c) out << ",z" << (c + 1);
    out << '\n';
    for (std::size_t v = 0; v < graph.size(); ++v) {
        const auto [s1, s2] = graph.coords(v);
        out << s1 << ',' << s2;
        for (std::size_t c = 0; c < state.components; ++c) out << ',' << detail::format_real(state(v, c));
        out << '\n';
    }
}

inline void write_sample_snapshot(std::ostream& out, const LabeledSample& sample) {
    if (sample.dim() != 2 || sample.site_dim() != 2 || !sample.has_responses())
        throw Error(ErrorCode::InvalidConfig, "regression snapshots need 2-D sites, 2-D points and responses");
    out << "s1,s2,x1,x2,y\n";
    for (std::size_t i = 0; i < sample.size(); ++i) {
        const auto s = sample.site(i);
        const auto x = sample.point(i);
        out << s[0] << ',' << s[1] << ',' << detail::format_real(x[0]) << ',' << detail::format_real(x[1]) << ','
            << detail::format_real(sample.response(i)) << '\n';
    }
}

inline LabeledSample read_sample_snapshot(std::istream& in, const std::string& name = "<stream>") {
    std::string line;
    if (!std::getline(in, line)) throw Error(ErrorCode::ParseError, name + ": missing header");
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line != "s1,s2,x1,x2,y") throw Error(ErrorCode::ParseError, name + ": expected header 's1,s2,x1,x2,y', got '" + line + "'");
    LabeledSample sample(2, 2);
    std::size_t row = 1;
    while (std::getline(in, line)) {
        ++row;
        if (line.empty() || line == "\r") continue;
        const auto fields = detail::split_commas(line);
        const std::string where = name + ":" + std::to_string(row);
        if (fields.size() != 5) throw Error(ErrorCode::ParseError, where + ": expected 5 fields");
        const std::array<std::int64_t, 2> site{detail::parse_field<std::int64_t>(fields[0], where),
                                               detail::parse_field<std::int64_t>(fields[1], where)};
        const std::array<double, 2> x{detail::parse_field<double>(fields[2], where), detail::parse_field<double>(fields[3], where)};
        sample.add(x, detail::parse_field<double>(fields[4], where), site);
    }
    return sample;
}

inline LabeledSample read_sample_snapshot(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "'");
    return read_sample_snapshot(in, path.string());
}

} // namespace haarreg
