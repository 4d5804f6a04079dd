#pragma once

#include "haarreg/error.hpp"
#include "haarreg/harness.hpp"

#include <nlohmann/json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace haarreg {

inline constexpr const char* kResultCsvHeader = "lambda,design,regression,mode,mean_l2,sd_l2,replications,seed";

namespace detail {

inline std::string format_significant(const char* spec, double x) {
    char buf[48];
    std::snprintf(buf, sizeof buf, spec, x);
    return buf;
}

} // namespace detail

/// CSV with six significant digits; lambda without trailing zeros.
inline std::string format_csv(const std::vector<ResultRow>& rows) {
    std::string out = kResultCsvHeader;
    out += '\n';
    for (const auto& row : rows) {
        out += detail::format_significant("%.6g", row.lambda);
        out += ',' + to_string(row.design) + ',' + to_string(row.regression) + ',' + to_string(row.mode) + ',';
        out += detail::format_significant("%#.6g", row.mean_l2) + ',';
        out += detail::format_significant("%#.6g", row.sd_l2) + ',';
        out += std::to_string(row.replications) + ',' + std::to_string(row.seed) + '\n';
    }
    return out;
}

inline nlohmann::ordered_json rows_to_json(const std::vector<ResultRow>& rows) {
    nlohmann::ordered_json out = nlohmann::ordered_json::array();
    for (const auto& row : rows)
        out.push_back({{"lambda", row.lambda},
                       {"design", to_string(row.design)},
                       {"regression", to_string(row.regression)},
                       {"mode", to_string(row.mode)},
                       {"mean_l2", row.mean_l2},
                       {"sd_l2", row.sd_l2},
                       {"replications", row.replications},
                       {"seed", row.seed}});
    return out;
}

enum class OutputFormat { Csv, Json };

inline void export_rows(const std::vector<ResultRow>& rows, const std::filesystem::path& path, OutputFormat format) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error(ErrorCode::IoError, "cannot open '" + path.string() + "' for writing");
    if (format == OutputFormat::Csv)
        out << format_csv(rows);
    else
        out << rows_to_json(rows).dump(2) << '\n';
    out.flush();
    if (!out) throw Error(ErrorCode::IoError, "failed writing '" + path.string() + "'");
}

} // namespace haarreg
