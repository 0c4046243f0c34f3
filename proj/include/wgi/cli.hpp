#pragma once

// Trace CSV, parameter sweeps and the bodies of the command-line subcommands.
// The subcommands write to caller-supplied streams so they can be exercised
// without spawning a process.

#include <cstdlib>
#include <future>
#include <iomanip>
#include <istream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include "wgi/scenario_io.hpp"
#include "wgi/simkit.hpp"

namespace wgi {

inline constexpr const char* kPrecisionEnv = "WGI_CSV_PRECISION";

inline const std::vector<std::string>& trace_columns() {
    static const std::vector<std::string> cols{"t",   "i_alpha", "i_beta", "vp_alpha", "vp_beta", "vp_hat_alpha",
                                               "vp_hat_beta", "v_c", "p", "q", "q_ref", "p_i", "p_i_max", "sat_i",
                                               "sat_mu", "mode"};
    return cols;
}

/// Significant digits requested through the environment, or 0 for shortest round-trip output.
inline int csv_precision_from_env() {
    const char* s = std::getenv(kPrecisionEnv);
    if (!s || !*s) return 0;
    char* end = nullptr;
    const long p = std::strtol(s, &end, 10);
    if (*end != '\0' || p < 1 || p > 17) throw Error(std::string(kPrecisionEnv) + " must be an integer in 1..17");
    return static_cast<int>(p);
}

namespace detail {
inline std::string fmt(double v, int precision) { return precision > 0 ? format_double(v, precision) : format_double(v); }

inline double parse_field(const std::string& s, std::size_t line, const std::string& col) {
    double v = 0.0;
    const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
    if (res.ec != std::errc{} || res.ptr != s.data() + s.size())
        throw Error("csv line " + std::to_string(line) + ": bad value '" + s + "' in column " + col);
    return v;
}
}  // namespace detail

/// Header plus every decimate-th row. precision 0 gives shortest round-trip decimals.
inline void write_trace_csv(std::ostream& out, const Trace& tr, int decimate = 1, int precision = 0) {
    if (decimate < 1) throw Error("decimation must be >= 1");
    const auto& cols = trace_columns();
    for (std::size_t c = 0; c < cols.size(); ++c) out << (c ? "," : "") << cols[c];
    out << '\n';
    auto f = [precision](double v) { return detail::fmt(v, precision); };
    for (std::size_t k = 0; k < tr.size(); k += static_cast<std::size_t>(decimate)) {
        const TraceRow& r = tr[k];
        out << f(r.t) << ',' << f(r.i.real()) << ',' << f(r.i.imag()) << ',' << f(r.v_p.real()) << ','
            << f(r.v_p.imag()) << ',' << f(r.v_p_hat.real()) << ',' << f(r.v_p_hat.imag()) << ',' << f(r.v_c) << ','
            << f(r.p) << ',' << f(r.q) << ',' << f(r.q_ref) << ',' << f(r.p_i) << ',' << f(r.p_i_max) << ','
            << (r.sat_i ? 1 : 0) << ',' << (r.sat_mu ? 1 : 0) << ',' << mode_name(r.mode) << '\n';
    }
}

/// Reads a trace written by write_trace_csv. Columns outside the CSV schema are left at zero.
inline Trace read_trace_csv(std::istream& in) {
    std::string line;
    if (!std::getline(in, line)) throw Error("csv: missing header");
    {
        std::vector<std::string> head;
        std::stringstream ss(line);
        for (std::string cell; std::getline(ss, cell, ',');) head.push_back(cell);
        if (head != trace_columns()) throw Error("csv: header does not match the trace schema");
    }
    Trace tr;
    std::size_t n = 1;
    const auto& cols = trace_columns();
    while (std::getline(in, line)) {
        ++n;
        if (line.empty()) continue;
        std::vector<std::string> cell;
        std::stringstream ss(line);
        for (std::string c; std::getline(ss, c, ',');) cell.push_back(c);
        if (cell.size() != cols.size()) throw Error("csv line " + std::to_string(n) + ": wrong number of fields");
        auto d = [&](std::size_t c) { return detail::parse_field(cell[c], n, cols[c]); };
        TraceRow r;
        r.t = d(0);
        r.i = {d(1), d(2)};
        r.v_p = {d(3), d(4)};
        r.v_p_hat = {d(5), d(6)};
        r.v_c = d(7);
        r.p = d(8);
        r.q = d(9);
        r.q_ref = d(10);
        r.p_i = d(11);
        r.p_i_max = d(12);
        r.sat_i = d(13) != 0.0;
        r.sat_mu = d(14) != 0.0;
        const auto m = parse_mode(cell[15]);
        if (!m) throw Error("csv line " + std::to_string(n) + ": unknown mode '" + cell[15] + "'");
        r.mode = *m;
        tr.push_back(r);
    }
    return tr;
}

inline std::string summary_line(const RunSummary& s) {
    std::ostringstream o;
    o << std::setprecision(6) << "peak |i| = " << s.peak_i << " A, peak v_c deviation = " << s.peak_v_c_deviation
      << " V, sat_i active = " << s.sat_i_time << " s, sat_mu active = " << s.sat_mu_time << " s";
    return o.str();
}

// ---------------------------------------------------------------- sweeps

enum class SweepParam { GridReactance, GridMagnitude, InputPower };

inline SweepParam parse_sweep_param(std::string_view s) {
    if (s == "X_g") return SweepParam::GridReactance;
    if (s == "v_g_magnitude" || s == "v_g") return SweepParam::GridMagnitude;
    if (s == "p_i") return SweepParam::InputPower;
    throw Error("unknown sweep parameter '" + std::string(s) + "' (expected X_g, v_g_magnitude or p_i)");
}

/// Applies one sweep value. For p_i every non-zero input-power command takes the value.
/// With per_unit the value is scaled by Z_b, V_b or S_b.
inline Scenario apply_sweep_value(Scenario sc, SweepParam param, double value, bool per_unit) {
    switch (param) {
        case SweepParam::GridReactance:
            sc.grid.X_g = per_unit ? value * sc.rating.Z_b() : value;
            break;
        case SweepParam::GridMagnitude:
            sc.grid.v_g_magnitude = per_unit ? value * sc.rating.V_b : value;
            break;
        case SweepParam::InputPower: {
            bool any = false;
            for (Event& e : sc.events)
                if (e.kind == EventKind::SetPiCommand && e.value != 0.0) {
                    e.value = per_unit ? value * sc.rating.S_b : value;
                    any = true;
                }
            if (!any) throw Error("scenario has no non-zero p_i command to sweep");
            break;
        }
    }
    return sc;
}

struct SweepRow {
    double value = 0.0;
    bool stable = false;
    RunSummary summary{};
    std::string error;
};

/// Bounded states and v_c back within 50% of its reference over the last quarter of the run.
inline bool is_stable(const Trace& tr, double v_c_ref) {
    if (tr.empty()) return false;
    const std::size_t tail = tr.size() - tr.size() / 4;
    for (std::size_t k = 0; k < tr.size(); ++k) {
        const TraceRow& r = tr[k];
        if (!std::isfinite(r.v_c) || !std::isfinite(std::abs(r.i)) || !std::isfinite(std::abs(r.v_p_hat))) return false;
        if (k >= tail && std::abs(r.v_c - v_c_ref) > 0.5 * v_c_ref) return false;
    }
    return true;
}

inline SweepRow sweep_point(const Scenario& base, SweepParam param, double value, bool per_unit) {
    SweepRow row;
    row.value = value;
    try {
        const Scenario sc = apply_sweep_value(base, param, value, per_unit);
        const Trace tr = run(sc);
        row.summary = summarize(tr, sc.control_period, sc.controller.v_c_ref);
        row.stable = is_stable(tr, sc.controller.v_c_ref);
    } catch (const std::exception& e) {
        row.error = e.what();
    }
    return row;
}

/// Runs the grid concurrently; rows come back in grid order.
inline std::vector<SweepRow> run_sweep(const Scenario& base, SweepParam param, const std::vector<double>& values,
                                       bool per_unit = false) {
    std::vector<std::future<SweepRow>> jobs;
    jobs.reserve(values.size());
    for (double v : values) jobs.push_back(std::async(std::launch::async, sweep_point, std::cref(base), param, v, per_unit));
    std::vector<SweepRow> rows;
    rows.reserve(values.size());
    for (auto& j : jobs) rows.push_back(j.get());
    return rows;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepRow>& rows, int precision = 0) {
    out << "value,stable,peak_i,peak_v_c,peak_v_c_dev,sat_i_time,sat_mu_time,error\n";
    auto f = [precision](double v) { return detail::fmt(v, precision); };
    for (const SweepRow& r : rows) {
        std::string err = r.error;
        for (char& c : err)
            if (c == ',' || c == '\n' || c == '"') c = ' ';
        out << f(r.value) << ',' << (r.stable ? 1 : 0) << ',' << f(r.summary.peak_i) << ',' << f(r.summary.peak_v_c)
            << ',' << f(r.summary.peak_v_c_deviation) << ',' << f(r.summary.sat_i_time) << ','
            << f(r.summary.sat_mu_time) << ',' << err << '\n';
    }
}

// ---------------------------------------------------------------- subcommands

/// Writes the trace CSV to out_path. Returns the process exit status.
inline int cmd_simulate(const std::string& scenario, const std::string& out_path, int decimate, std::ostream& log,
                        std::ostream& err) {
    try {
        const Scenario sc = load_scenario(scenario);
        const int dec = decimate > 0 ? decimate : sc.decimate;
        const int precision = csv_precision_from_env();
        const Trace tr = run(sc);
        std::ofstream f(out_path);
        if (!f) throw Error("cannot open output '" + out_path + "'");
        write_trace_csv(f, tr, dec, precision);
        f.close();
        if (!f) throw Error("failed writing '" + out_path + "'");
        log << sc.name << ": " << tr.size() << " samples, " << summary_line(summarize(tr, sc.control_period, sc.controller.v_c_ref))
            << '\n';
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

/// Prints the synthesized gains as a scenario gains section plus the eigenvalue report.
inline int cmd_tune(const std::string& scenario, std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = load_scenario(scenario);
        const TuningReport rep = synthesize_all(sc.tuning, sc.plant, sc.worst(), sc.rating.V_b);
        out << emit_gains_yaml(rep.gains);
        for (const EigenCheck& c : rep.checks) out << "# " << c.matrix << " eigenvalue mismatch " << c.max_rel_error << '\n';
        out << "# Re{k_i/k_p} = " << rep.ki_over_kp_real << '\n';
        if (!rep.ok()) {
            err << "error: eigenvalue check failed\n";
            return 1;
        }
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

inline int cmd_sweep(const std::string& scenario, const std::string& param, const std::vector<double>& values,
                     bool per_unit, std::ostream& out, std::ostream& err) {
    try {
        const Scenario sc = load_scenario(scenario);
        const SweepParam p = parse_sweep_param(param);
        write_sweep_csv(out, run_sweep(sc, p, values, per_unit), csv_precision_from_env());
        return 0;
    } catch (const std::exception& e) {
        err << "error: " << e.what() << '\n';
        return 1;
    }
}

}  // namespace wgi
