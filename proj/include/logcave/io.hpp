#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "logcave/density.hpp"
#include "logcave/distances.hpp"
#include "logcave/empirical.hpp"
#include "logcave/errors.hpp"
#include "logcave/projection.hpp"
#include "logcave/regression.hpp"
#include "logcave/simulate.hpp"

namespace logcave::io {

using json = nlohmann::ordered_json;

inline constexpr std::string_view kToolVersion = "0.1.0";

// ---------------------------------------------------------------------------
// Number formatting: locale-independent, 17 significant digits, '.' decimal
// separator.  Used for CSV output; JSON output relies on the serializer's
// shortest-exact representation, which also round-trips bit-for-bit.
inline std::string format_double(double v) {
    char buf[64];
    auto res = std::to_chars(buf, buf + sizeof(buf), v,
                             std::chars_format::general, 17);
    return std::string(buf, res.ptr);
}

// ---------------------------------------------------------------------------
// Raw file access

inline std::string read_file_bytes(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path);
    std::string bytes((std::istreambuf_iterator<char>(in)),
                      std::istreambuf_iterator<char>());
    if (in.bad()) throw IoError("read failed on " + path);
    return bytes;
}

// Write-then-rename so readers never observe a half-written file.
inline void atomic_write(const std::string& path, std::string_view content) {
    std::filesystem::path target(path);
    std::filesystem::path tmp = target;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(),
                  static_cast<std::streamsize>(content.size()));
        out.flush();
        if (!out.good()) throw IoError("write failed on " + tmp.string());
    }
    std::error_code ec;
    std::filesystem::rename(tmp, target, ec);
    if (ec) {
        throw IoError("rename " + tmp.string() + " -> " + path + ": " +
                      ec.message());
    }
}

// ---------------------------------------------------------------------------
// Digests (FNV-1a, 64-bit) over raw input bytes

inline std::uint64_t fnv1a64(std::string_view bytes) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : bytes) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::string digest_hex(std::string_view bytes) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "fnv1a64:%016llx",
                  static_cast<unsigned long long>(fnv1a64(bytes)));
    return buf;
}

inline std::string digest_file(const std::string& path) {
    return digest_hex(read_file_bytes(path));
}

// ---------------------------------------------------------------------------
// CSV ingestion: comma-separated numeric columns, optional header line,
// tolerant of CRLF endings and blank lines.  Errors carry 1-based line
// numbers.

namespace detail {

inline std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t'))
        s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t'))
        s.remove_suffix(1);
    return s;
}

inline double parse_field(std::string_view field, const std::string& path,
                          std::size_t line_no) {
    std::string_view t = trim(field);
    double value = 0.0;
    auto res = std::from_chars(t.data(), t.data() + t.size(), value);
    if (res.ec != std::errc{} || res.ptr != t.data() + t.size()) {
        throw BadInput(path + ":" + std::to_string(line_no) +
                       ": not a number: '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace detail

// True when the first non-blank line contains a field that does not parse as
// a number; such a line is a column-header row.
inline bool csv_has_header(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    std::size_t start = 0;
    while (start <= bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        std::string_view line(bytes.data() + start,
                              (end == std::string::npos ? bytes.size() : end) -
                                  start);
        start = (end == std::string::npos) ? bytes.size() + 1 : end + 1;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;
        std::size_t fstart = 0;
        while (true) {
            std::size_t comma = line.find(',', fstart);
            std::string_view field = line.substr(
                fstart,
                (comma == std::string_view::npos ? line.size() : comma) -
                    fstart);
            std::string_view t = detail::trim(field);
            double value = 0.0;
            auto res = std::from_chars(t.data(), t.data() + t.size(), value);
            if (res.ec != std::errc{} || res.ptr != t.data() + t.size())
                return true;
            if (comma == std::string_view::npos) break;
            fstart = comma + 1;
        }
        return false;
    }
    return false;
}

// Parse a whole CSV file into rows of doubles.  All data rows must have the
// same column count.
inline std::vector<std::vector<double>> read_csv(const std::string& path,
                                                 bool has_header = false) {
    std::string bytes = read_file_bytes(path);
    std::vector<std::vector<double>> rows;
    std::size_t line_no = 0;
    std::size_t start = 0;
    bool skipped_header = !has_header;
    while (start <= bytes.size()) {
        std::size_t end = bytes.find('\n', start);
        std::string_view line(bytes.data() + start,
                              (end == std::string::npos ? bytes.size() : end) -
                                  start);
        start = (end == std::string::npos) ? bytes.size() + 1 : end + 1;
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
        if (detail::trim(line).empty()) continue;
        if (!skipped_header) {
            skipped_header = true;
            continue;
        }
        std::vector<double> row;
        std::size_t fstart = 0;
        while (true) {
            std::size_t comma = line.find(',', fstart);
            std::string_view field = line.substr(
                fstart,
                (comma == std::string_view::npos ? line.size() : comma) -
                    fstart);
            row.push_back(detail::parse_field(field, path, line_no));
            if (comma == std::string_view::npos) break;
            fstart = comma + 1;
        }
        if (!rows.empty() && row.size() != rows.front().size()) {
            throw BadInput(path + ":" + std::to_string(line_no) + ": expected " +
                           std::to_string(rows.front().size()) +
                           " columns, got " + std::to_string(row.size()));
        }
        rows.push_back(std::move(row));
    }
    if (rows.empty()) throw BadInput(path + ": no data rows");
    return rows;
}

// `value[,weight]` layout.  Returns (values, weights); weights is empty when
// the file has a single column.
inline std::pair<std::vector<double>, std::vector<double>> read_values_weights(
    const std::string& path, bool has_header = false) {
    auto rows = read_csv(path, has_header);
    std::size_t cols = rows.front().size();
    if (cols != 1 && cols != 2) {
        throw BadInput(path + ": expected 1 or 2 columns, got " +
                       std::to_string(cols));
    }
    std::vector<double> values, weights;
    values.reserve(rows.size());
    if (cols == 2) weights.reserve(rows.size());
    for (const auto& row : rows) {
        values.push_back(row[0]);
        if (cols == 2) weights.push_back(row[1]);
    }
    return {std::move(values), std::move(weights)};
}

// `x,y` layout for regression inputs.
inline std::pair<std::vector<double>, std::vector<double>> read_xy(
    const std::string& path, bool has_header = false) {
    auto rows = read_csv(path, has_header);
    if (rows.front().size() != 2) {
        throw BadInput(path + ": expected 2 columns (x,y), got " +
                       std::to_string(rows.front().size()));
    }
    std::vector<double> x, y;
    x.reserve(rows.size());
    y.reserve(rows.size());
    for (const auto& row : rows) {
        x.push_back(row[0]);
        y.push_back(row[1]);
    }
    return {std::move(x), std::move(y)};
}

// ---------------------------------------------------------------------------
// JSON serialization

inline json density_to_json(const LogConcaveDensity& d) {
    json j;
    j["knots"] = d.knots();
    j["logvals"] = d.logvals();
    return j;
}

inline LogConcaveDensity density_from_json(const json& j) {
    if (!j.contains("knots") || !j.contains("logvals")) {
        throw BadInput("density JSON requires 'knots' and 'logvals' arrays");
    }
    return LogConcaveDensity::normalized(
        j.at("knots").get<std::vector<double>>(),
        j.at("logvals").get<std::vector<double>>());
}

inline json certificate_to_json(const Certificate& c) {
    json j;
    j["total_integral"] = c.total_integral;
    j["max_prefix"] = c.max_prefix;
    j["max_knot_abs"] = c.max_knot_abs;
    j["passed"] = c.passed;
    j["tol"] = c.tol;
    return j;
}

inline json distance_report_to_json(const DistanceReport& r) {
    json j;
    j["d1"] = r.d1;
    j["dks"] = r.dks;
    j["dbl_upper"] = r.dbl_upper;
    j["r_used"] = r.r_used;
    j["dbl_loose"] = r.dbl_loose;
    return j;
}

inline json regression_fit_to_json(const RegressionFit& fit,
                                   std::string_view model) {
    json j;
    j["model"] = model;
    j["theta"] = fit.theta;
    j["mu"] = fit.mu_values;
    j["lambda_hat"] = fit.lambda_hat;
    j["psi"] = density_to_json(fit.psi);
    json trace = json::array();
    for (const auto& entry : fit.solver_trace) {
        json e;
        e["stage"] = entry.stage;
        e["lambda"] = entry.lambda;
        trace.push_back(std::move(e));
    }
    j["solver_trace"] = trace;
    return j;
}

inline json sim_report_to_json(const SimReport& r) {
    json j;
    j["scenario"] = scenario_name(r.config.scenario);
    json cfg;
    cfg["n"] = r.config.n;
    cfg["reps"] = r.config.reps;
    cfg["shape_r"] = r.config.shape_r;
    cfg["seed"] = r.config.seed;
    j["config"] = cfg;
    json line;
    line["intercept"] = r.true_intercept;
    line["slope"] = r.true_slope;
    j["true_line"] = line;
    j["design_redrawn_per_rep"] = r.design_redrawn_per_rep;
    j["rmse_mle"] = r.rmse_mle;
    j["rmse_ls"] = r.rmse_ls;
    json lin = json::array();
    for (const auto& rep : r.linear_reps) {
        json e;
        e["rep"] = rep.rep;
        e["seed"] = rep.seed;
        e["theta_mle"] = rep.theta_mle;
        e["theta_ls"] = rep.theta_ls;
        lin.push_back(std::move(e));
    }
    j["linear_reps"] = lin;
    json lad = json::array();
    for (const auto& rep : r.ladder_reps) {
        json e;
        e["rep"] = rep.rep;
        e["seed"] = rep.seed;
        e["n"] = rep.n;
        e["d1"] = rep.d1;
        e["l1"] = rep.l1;
        lad.push_back(std::move(e));
    }
    j["ladder_reps"] = lad;
    json iso = json::array();
    for (const auto& rep : r.iso_reps) {
        json e;
        e["rep"] = rep.rep;
        e["seed"] = rep.seed;
        e["n"] = rep.n;
        e["mu_err"] = rep.mu_err;
        e["density_l1"] = rep.density_l1;
        e["skipped"] = rep.skipped;
        iso.push_back(std::move(e));
    }
    j["iso_reps"] = iso;
    json traj = json::array();
    for (const auto& pt : r.distance_trajectory) {
        json e;
        e["metric"] = pt.metric;
        e["n"] = pt.n;
        e["value"] = pt.value;
        traj.push_back(std::move(e));
    }
    j["distance_trajectory"] = traj;
    j["skipped_reps"] = r.skipped_reps;
    return j;
}

// ---------------------------------------------------------------------------
// Curve CSV: one row per observation (input order), columns x, mu_hat and one
// quantile curve per requested level.  Column headers echo the levels as the
// caller spelled them.

inline std::string curves_csv(const std::vector<double>& x,
                              const std::vector<double>& mu,
                              const std::vector<std::string>& beta_labels,
                              const std::vector<std::vector<double>>& curves) {
    if (x.size() != mu.size())
        throw LengthMismatch("curves_csv: x size != mu size");
    if (beta_labels.size() != curves.size())
        throw LengthMismatch("curves_csv: label count != curve count");
    for (const auto& c : curves)
        if (c.size() != x.size())
            throw LengthMismatch("curves_csv: curve length != x size");
    std::string out = "x,mu_hat";
    for (const auto& label : beta_labels) {
        out += ",q_";
        out += label;
    }
    out += '\n';
    for (std::size_t i = 0; i < x.size(); ++i) {
        out += format_double(x[i]);
        out += ',';
        out += format_double(mu[i]);
        for (const auto& c : curves) {
            out += ',';
            out += format_double(c[i]);
        }
        out += '\n';
    }
    return out;
}

inline json parse_json(const std::string& path) {
    std::string bytes = read_file_bytes(path);
    json j = json::parse(bytes, nullptr, false);
    if (j.is_discarded()) throw BadInput(path + ": invalid JSON");
    return j;
}

inline void write_json(const std::string& path, const json& j) {
    atomic_write(path, j.dump(2) + "\n");
}

// ---------------------------------------------------------------------------
// Run manifest, emitted next to every CLI output.  Digests cover the raw
// bytes of each input file.  The timestamp and timings are the only fields
// allowed to differ between reruns of the same command.

struct RunManifest {
    std::string command;
    std::uint64_t seed = 0;
    std::vector<std::pair<std::string, std::string>> input_digests;
    std::string version;
    std::vector<std::pair<std::string, double>> timings_ms;
    std::string timestamp;
};

inline std::string iso_timestamp_utc() {
    std::time_t now = std::time(nullptr);
    std::tm tm{};
    gmtime_r(&now, &tm);
    char buf[32];
    std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline json manifest_to_json(const RunManifest& m) {
    json j;
    j["command"] = m.command;
    j["seed"] = m.seed;
    json digests = json::object();
    for (const auto& [path, digest] : m.input_digests) digests[path] = digest;
    j["input_digests"] = digests;
    j["version"] = m.version;
    json timings = json::object();
    for (const auto& [label, ms] : m.timings_ms) timings[label] = ms;
    j["timings_ms"] = timings;
    j["timestamp"] = m.timestamp;
    return j;
}

}  // namespace logcave::io
