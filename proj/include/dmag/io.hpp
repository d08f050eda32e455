#pragma once
// File plumbing for the CLI: RFC-4180 CSV, atomic writes, trace rows.

#include <cstdint>
#include <string>
#include <vector>

namespace dmag {

// quote iff the field contains a comma, quote, CR or LF
std::string csv_field(const std::string& raw);

// shortest round-trippable representation (%.17g trimmed)
std::string format_double(double v);

// write-then-rename so no partially written file survives an error
void write_file_atomic(const std::string& path, const std::string& content);

void ensure_parent_dir(const std::string& path);

struct TraceRow {
    double timestamp = 0.0;  // s
    double T = 0.0;          // s
    double offset = 0.0;     // rad
    std::uint64_t n = 0, N = 0, m = 0, M = 0;
    double omega_mean = 0.0; // rad/s internally; Hz in the file
    double omega_err = 0.0;
    double wall_time = 0.0;  // s
};

std::string trace_to_csv(const std::vector<TraceRow>& rows);
std::vector<TraceRow> trace_from_csv(const std::string& text);

} // namespace dmag
