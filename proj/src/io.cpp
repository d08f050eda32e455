#include "dmag/io.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "dmag/physics.hpp"

namespace dmag {

std::string csv_field(const std::string& raw) {
    if (raw.find_first_of(",\"\r\n") == std::string::npos) return raw;
    std::string out = "\"";
    for (char c : raw) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

std::string format_double(double v) {
    char buf[40];
    // round-trip exact; shorter forms when they reproduce the value
    for (int prec = 1; prec <= 17; ++prec) {
        std::snprintf(buf, sizeof buf, "%.*g", prec, v);
        if (std::strtod(buf, nullptr) == v) return buf;
    }
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

void ensure_parent_dir(const std::string& path) {
    const std::filesystem::path parent = std::filesystem::path(path).parent_path();
    if (!parent.empty()) std::filesystem::create_directories(parent);
}

void write_file_atomic(const std::string& path, const std::string& content) {
    ensure_parent_dir(path);
    const std::string tmp = path + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot open '" + tmp + "' for writing");
        out << content;
        out.flush();
        if (!out) throw std::runtime_error("write failed for '" + tmp + "'");
    }
    std::filesystem::rename(tmp, path);
}

namespace {

constexpr const char* trace_header =
    "timestamp_s,T_s,offset_rad,n,N,m,M,omega_mean_hz,omega_err_hz,wall_time_s";

std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"') {
                if (i + 1 < line.size() && line[i + 1] == '"') {
                    cur += '"';
                    ++i;
                } else {
                    quoted = false;
                }
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

} // namespace

std::string trace_to_csv(const std::vector<TraceRow>& rows) {
    std::ostringstream out;
    out << trace_header << "\r\n";
    for (const TraceRow& r : rows) {
        out << format_double(r.timestamp) << ',' << format_double(r.T) << ','
            << format_double(r.offset) << ',' << r.n << ',' << r.N << ',' << r.m << ',' << r.M
            << ',' << format_double(r.omega_mean / two_pi) << ','
            << format_double(r.omega_err / two_pi) << ',' << format_double(r.wall_time)
            << "\r\n";
    }
    return out.str();
}

std::vector<TraceRow> trace_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    std::vector<TraceRow> rows;
    bool first = true;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        if (first) {
            first = false;
            if (line != trace_header)
                throw std::runtime_error("trace CSV: unexpected header '" + line + "'");
            continue;
        }
        const std::vector<std::string> f = split_csv_line(line);
        if (f.size() != 10)
            throw std::runtime_error("trace CSV: expected 10 fields, got " +
                                     std::to_string(f.size()));
        TraceRow r;
        r.timestamp = std::stod(f[0]);
        r.T = std::stod(f[1]);
        r.offset = std::stod(f[2]);
        r.n = std::stoull(f[3]);
        r.N = std::stoull(f[4]);
        r.m = std::stoull(f[5]);
        r.M = std::stoull(f[6]);
        r.omega_mean = std::stod(f[7]) * two_pi;
        r.omega_err = std::stod(f[8]) * two_pi;
        r.wall_time = std::stod(f[9]);
        rows.push_back(r);
    }
    if (first) throw std::runtime_error("trace CSV: empty file");
    return rows;
}

} // namespace dmag
