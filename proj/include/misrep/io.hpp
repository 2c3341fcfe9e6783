#pragma once

// CSV ingestion/emission and JSON reports for the command-line tool.

#include <charconv>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "misrep/bootstrap.hpp"
#include "misrep/detect.hpp"
#include "misrep/error.hpp"
#include "misrep/misreport.hpp"
#include "misrep/series.hpp"
#include "misrep/simstudy.hpp"

namespace misrep::io {

using nlohmann::json;

/// Splits one CSV line. Supports double-quoted fields with "" escapes.
inline std::vector<std::string> split_csv_line(const std::string& line) {
    std::vector<std::string> out;
    std::string cur;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cur += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cur += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            out.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    out.push_back(cur);
    return out;
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t");
    if (b == std::string::npos) return {};
    const auto e = s.find_last_not_of(" \t");
    return s.substr(b, e - b + 1);
}

inline bool parse_double(const std::string& text, double& out) {
    const char* first = text.data();
    const char* last = text.data() + text.size();
    if (first != last && *first == '+') ++first;
    auto [ptr, ec] = std::from_chars(first, last, out);
    return ec == std::errc() && ptr == last;
}

struct CsvColumns {
    std::string value;      // required
    std::string index;      // optional label column
};

/// Reads one numeric column from a CSV with a header row. Blank cells and NA
/// are missing values. Errors carry 1-based line numbers.
inline Series read_series(std::istream& in, const CsvColumns& cols) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw DataError("empty input: a header row is required");
    ++lineno;
    const auto header = split_csv_line(line);
    auto find = [&](const std::string& name) -> std::ptrdiff_t {
        for (std::size_t i = 0; i < header.size(); ++i)
            if (trim(header[i]) == name) return static_cast<std::ptrdiff_t>(i);
        return -1;
    };
    const std::ptrdiff_t vcol = find(cols.value);
    if (vcol < 0) throw DataError("line 1: column '" + cols.value + "' not found in header");
    std::ptrdiff_t icol = -1;
    if (!cols.index.empty()) {
        icol = find(cols.index);
        if (icol < 0) throw DataError("line 1: index column '" + cols.index + "' not found in header");
    }

    std::vector<double> values;
    std::vector<std::string> labels;
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto fields = split_csv_line(line);
        const auto need = static_cast<std::size_t>(std::max(vcol, icol)) + 1;
        if (fields.size() < need)
            throw DataError("line " + std::to_string(lineno) + ": expected at least " + std::to_string(need) + " fields");
        const std::string cell = trim(fields[static_cast<std::size_t>(vcol)]);
        double v = missing_value;
        if (!cell.empty() && cell != "NA" && cell != "NaN") {
            if (!parse_double(cell, v) || !std::isfinite(v))
                throw DataError("line " + std::to_string(lineno) + ": cannot parse '" + cell + "' as a number");
        }
        values.push_back(v);
        if (icol >= 0) labels.push_back(trim(fields[static_cast<std::size_t>(icol)]));
    }
    if (values.empty()) throw DataError("no data rows after the header");
    Series s(std::move(values), std::move(labels));
    if (s.observed_count() == 0) throw DataError("column '" + cols.value + "' has no observed values");
    return s;
}

inline Series read_series_file(const std::string& path, const CsvColumns& cols) {
    std::ifstream in(path);
    if (!in) throw DataError("cannot open '" + path + "'");
    return read_series(in, cols);
}

inline std::string format_double(double v) {
    if (is_missing(v)) return "";
    std::ostringstream os;
    os.precision(17);
    os << v;
    return os.str();
}

inline void write_simulation_csv(std::ostream& out, const ObservedSample& s, bool with_latent) {
    out << (with_latent ? "t,y,x,z\n" : "t,y\n");
    for (std::size_t t = 0; t < s.y.size(); ++t) {
        out << t << ',' << format_double(s.y[t]);
        if (with_latent) out << ',' << format_double(s.x[t]) << ',' << s.z[t];
        out << '\n';
    }
}

/// (t, observed, reconstructed) for plotting.
inline void write_reconstruction_csv(std::ostream& out, const Series& y, const FitResult& f) {
    out << "t,observed,reconstructed,posterior\n";
    for (std::size_t t = 0; t < y.size(); ++t)
        out << y.label(t) << ',' << format_double(y[t]) << ',' << format_double(f.x_hat[t]) << ','
            << format_double(f.responsibilities.posterior[t]) << '\n';
}

/// (k, log rho(k), fitted line) for plotting.
inline void write_detection_csv(std::ostream& out, const DetectionReport& r) {
    out << "k,log_rho,fitted\n";
    for (std::size_t i = 0; i < r.lags_used.size(); ++i) {
        const double k = static_cast<double>(r.lags_used[i]);
        out << r.lags_used[i] << ',' << format_double(r.log_rho[i]) << ',' << format_double(r.intercept + r.slope * k)
            << '\n';
    }
}

inline json number_or_null(double v) { return std::isfinite(v) ? json(v) : json(nullptr); }

inline json to_json(const MisreportModel& m) {
    return {{"p", m.arma.p()},         {"r", m.arma.r()},           {"alpha", m.arma.alpha},
            {"theta", m.arma.theta},   {"mu_eps", m.arma.mu_eps},   {"sigma2_eps", m.arma.sigma2_eps},
            {"q", m.q},                {"omega", m.omega},          {"process_mean", m.arma.process_mean()}};
}

inline json to_json(const Series& y, const FitResult& f) {
    json trace = json::array();
    for (const auto& e : f.trace)
        trace.push_back({{"iteration", e.iteration},
                         {"q", e.q},
                         {"omega", e.omega},
                         {"alpha", e.alpha},
                         {"theta", e.theta},
                         {"distance", number_or_null(e.distance)}});
    json obs = json::array();
    for (std::size_t t = 0; t < y.size(); ++t)
        obs.push_back({{"t", y.label(t)},
                       {"y", number_or_null(y[t])},
                       {"posterior", number_or_null(f.responsibilities.posterior[t])},
                       {"z_hat", f.z_hat[t]},
                       {"x_hat", number_or_null(f.x_hat[t])}});
    return {{"model", to_json(f.model)},
            {"converged", f.converged},
            {"iterations", f.iterations},
            {"no_misreporting_detected", f.no_misreporting_detected},
            {"warnings", f.warnings},
            {"initial", {{"q", f.q_initial}, {"omega", f.omega_initial}}},
            {"latent_fit", {{"loglik", number_or_null(f.latent_fit.loglik)}, {"aic", number_or_null(f.latent_fit.aic)}}},
            {"trace", trace},
            {"observations", obs}};
}

inline json to_json(const DetectionReport& r) {
    return {{"intercept", r.intercept},
            {"slope", r.slope},
            {"intercept_se", number_or_null(r.intercept_se)},
            {"slope_se", number_or_null(r.slope_se)},
            {"t_statistic", number_or_null(r.t_statistic)},
            {"p_value", r.p_value},
            {"lags_used", r.lags_used},
            {"log_rho", r.log_rho},
            {"verdict", r.verdict},
            {"applicable", r.applicable},
            {"note", r.note}};
}

inline json to_json(const BootstrapSummary& s) {
    json params = json::array();
    for (const auto& p : s.parameters)
        params.push_back({{"name", p.name},
                          {"point", number_or_null(p.point)},
                          {"boot_mean", number_or_null(p.boot_mean)},
                          {"boot_se", number_or_null(p.boot_se)},
                          {"ci_low", number_or_null(p.ci_low)},
                          {"ci_high", number_or_null(p.ci_high)}});
    return {{"parameters", params},
            {"replicates_requested", s.replicates_requested},
            {"replicates_converged", s.replicates_converged},
            {"level", s.level},
            {"reliable", s.reliable},
            {"warnings", s.warnings}};
}

inline void write_metrics_csv(std::ostream& out, const std::vector<MetricsRow>& rows) {
    out << "structure,parameter,bias,AIL,coverage,n,count,failures\n";
    for (const auto& r : rows)
        out << '"' << r.structure << "\"," << r.parameter << ',' << format_double(r.bias) << ',' << format_double(r.ail)
            << ',' << format_double(r.coverage) << ',' << r.n << ',' << r.count << ',' << r.failures << '\n';
}

inline void write_records_csv(std::ostream& out, const std::vector<ReplicateRecord>& recs) {
    out << "point_id,structure,n,replicate,estimator,parameter,truth,estimate,ci_low,ci_high,ok\n";
    for (const auto& r : recs)
        out << r.point_id << ",\"" << r.structure << "\"," << r.n << ',' << r.replicate << ',' << to_string(r.estimator)
            << ',' << r.parameter << ',' << format_double(r.truth) << ',' << format_double(r.estimate) << ','
            << format_double(r.ci_low) << ',' << format_double(r.ci_high) << ',' << (r.ok ? 1 : 0) << '\n';
}

inline std::vector<ReplicateRecord> read_records_csv(std::istream& in) {
    std::string line;
    std::size_t lineno = 0;
    if (!std::getline(in, line)) throw DataError("empty records file");
    ++lineno;
    std::vector<ReplicateRecord> recs;
    auto num = [&](const std::string& s) {
        double v = missing_value;
        if (!s.empty() && !parse_double(s, v)) throw DataError("line " + std::to_string(lineno) + ": bad number '" + s + "'");
        return v;
    };
    while (std::getline(in, line)) {
        ++lineno;
        if (trim(line).empty()) continue;
        const auto f = split_csv_line(line);
        if (f.size() != 11) throw DataError("line " + std::to_string(lineno) + ": expected 11 fields");
        ReplicateRecord r;
        r.point_id = static_cast<std::size_t>(num(f[0]));
        r.structure = f[1];
        r.n = static_cast<std::size_t>(num(f[2]));
        r.replicate = static_cast<std::size_t>(num(f[3]));
        r.estimator = f[4] == "standard" ? Estimator::standard : Estimator::misreport;
        r.parameter = f[5];
        r.truth = num(f[6]);
        r.estimate = num(f[7]);
        r.ci_low = num(f[8]);
        r.ci_high = num(f[9]);
        r.ok = f[10] == "1";
        recs.push_back(std::move(r));
    }
    return recs;
}

}  // namespace misrep::io
