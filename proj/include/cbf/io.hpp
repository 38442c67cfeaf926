#pragma once

// Artifact formats: CSV tables, JSON reports and binary trajectory dumps.
//
// Binary trajectory layout (all integers and doubles little-endian):
//   8 bytes   magic "CBFTRAJ1"
//   u32       length L of the config JSON, then L bytes of UTF-8 JSON
//   u64 nx, u64 ny, u64 count
//   count records of: f64 t, (nx+1)*ny f64 ux values, nx*(ny+1) f64 uy values
// Face values are stored row by row, x index fastest.

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"

#include "cbf/direct_solver.hpp"
#include "cbf/errors.hpp"
#include "cbf/estimates.hpp"
#include "cbf/inverse_solver.hpp"
#include "cbf/manufactured.hpp"

namespace cbf {

using json = nlohmann::json;

inline constexpr int format_version = 1;

class IoError : public Error {
public:
    using Error::Error;
};

/// Writes through a sibling temporary file and renames it into place.
inline void write_file_atomic(const std::filesystem::path& path, const std::string& content) {
    namespace fs = std::filesystem;
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
        out.write(content.data(), std::streamsize(content.size()));
        out.flush();
        if (!out) throw IoError("write to " + tmp.string() + " failed");
    }
    std::error_code ec;
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp);
        throw IoError("cannot move " + tmp.string() + " to " + path.string() + ": " + ec.message());
    }
}

inline std::string read_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw IoError("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

/// Shortest text that reads back to the same double (17 significant digits).
inline std::string format_double(double v) {
    std::ostringstream os;
    os.imbue(std::locale::classic());
    os << std::setprecision(std::numeric_limits<double>::max_digits10) << v;
    return os.str();
}

struct CsvTable {
    std::vector<std::string> comments;  ///< written as leading '#' lines
    std::vector<std::string> columns;
    std::vector<std::vector<double>> rows;

    void add_row(std::vector<double> row) {
        if (row.size() != columns.size()) throw DimensionError("CSV row width differs from the header");
        rows.push_back(std::move(row));
    }

    std::string render() const {
        std::ostringstream os;
        for (const auto& c : comments) os << "# " << c << '\n';
        for (std::size_t k = 0; k < columns.size(); ++k) os << (k ? "," : "") << columns[k];
        os << '\n';
        for (const auto& row : rows) {
            for (std::size_t k = 0; k < row.size(); ++k) os << (k ? "," : "") << format_double(row[k]);
            os << '\n';
        }
        return os.str();
    }

    /// Parses the output of render(); comment lines are kept verbatim.
    static CsvTable parse(const std::string& text) {
        CsvTable t;
        std::istringstream in(text);
        std::string line;
        std::size_t lineno = 0;
        bool header = false;
        while (std::getline(in, line)) {
            ++lineno;
            if (!line.empty() && line.back() == '\r') line.pop_back();
            if (line.empty()) continue;
            if (line[0] == '#') {
                t.comments.push_back(line.size() > 2 ? line.substr(2) : std::string{});
                continue;
            }
            std::vector<std::string> cells;
            std::istringstream ls(line);
            std::string cell;
            while (std::getline(ls, cell, ',')) cells.push_back(cell);
            if (!header) {
                t.columns = std::move(cells);
                header = true;
                continue;
            }
            if (cells.size() != t.columns.size())
                throw IoError("CSV line " + std::to_string(lineno) + " has " + std::to_string(cells.size()) +
                              " fields, expected " + std::to_string(t.columns.size()));
            std::vector<double> row;
            for (const auto& c : cells) {
                std::size_t used = 0;
                double v = 0.0;
                try {
                    v = std::stod(c, &used);
                } catch (const std::exception&) {
                    used = 0;
                }
                if (used != c.size() || c.empty())
                    throw IoError("CSV line " + std::to_string(lineno) + ": '" + c + "' is not a number");
                row.push_back(v);
            }
            t.rows.push_back(std::move(row));
        }
        if (!header) throw IoError("CSV has no header line");
        return t;
    }

    std::size_t column(const std::string& name) const {
        for (std::size_t k = 0; k < columns.size(); ++k)
            if (columns[k] == name) return k;
        throw IoError("CSV has no column '" + name + "'");
    }
};

/// Reads a two-column (t, value) series sampled on a uniform grid from t = 0.
inline TimeSeries read_time_series_csv(const std::filesystem::path& path, const std::string& value_column) {
    const CsvTable t = CsvTable::parse(read_file(path));
    const std::size_t ct = t.column("t"), cv = t.column(value_column);
    if (t.rows.size() < 2) throw IoError(path.string() + ": a series needs at least two samples");
    const double t0 = t.rows[0][ct];
    const double dt = t.rows[1][ct] - t0;
    std::vector<double> v;
    for (std::size_t n = 0; n < t.rows.size(); ++n) {
        if (std::abs(t.rows[n][ct] - (t0 + double(n) * dt)) > 1e-9 * std::max(1.0, std::abs(t.rows[n][ct])))
            throw IoError(path.string() + ": sample times are not uniform at row " + std::to_string(n + 1));
        v.push_back(t.rows[n][cv]);
    }
    return TimeSeries(t0, dt, std::move(v));
}

inline json to_json(const SolverConfig& cfg) {
    return {{"nx", cfg.grid.nx()}, {"ny", cfg.grid.ny()}, {"dt", cfg.dt},
            {"T", cfg.T},          {"mu", cfg.params.mu}, {"alpha", cfg.params.alpha},
            {"beta", cfg.params.beta}, {"r", cfg.params.r}};
}

inline json to_json(const EstimateCheck& c) {
    return {{"name", c.name},       {"lhs", c.lhs},       {"rhs", c.rhs}, {"slack_allowed", c.slack_allowed},
            {"passed", c.passed}, {"context", c.context}};
}

inline json to_json(const IterationReport& rep) {
    json iterates = json::array();
    for (const auto& f : rep.iterates) iterates.push_back(f.samples());
    return {{"iterations", rep.iterations()},
            {"converged", rep.converged},
            {"diverged", rep.diverged},
            {"tol", rep.tol},
            {"residuals", rep.residuals},
            {"relative_residuals", rep.relative_residuals},
            {"contraction_ratios", rep.contraction_ratios},
            {"ball_radius_used", rep.ball_radius_used},
            {"start_distance", rep.start_distance},
            {"ball_center", rep.ball_center.samples()},
            {"iterates", iterates}};
}

inline json to_json(const AdmissibilityReport& a) {
    json j{{"label", AdmissibilityReport::label},
           {"r", a.r},
           {"C", a.C},
           {"T", a.T},
           {"a", a.a},
           {"a_tilde", a.a_tilde},
           {"self_map_bound", a.self_map_bound()},
           {"self_map_satisfied", a.self_map_satisfied},
           {"contraction_base", a.contraction_base},
           {"one_step_factor", a.one_step_factor},
           {"contraction_power", a.contraction_k},
           {"contraction_satisfied", a.contraction_satisfied}};
    auto opt = [&j](const char* key, const std::optional<double>& v) { j[key] = v ? json(*v) : json(nullptr); };
    opt("m1", a.m1);
    opt("m2", a.m2);
    opt("m4", a.m4);
    opt("m6", a.m6);
    return j;
}

inline json to_json(const DirectError& e) {
    return {{"max_l2", e.max_l2}, {"final_l2", e.final_l2}, {"max_h1", e.max_h1}};
}

inline json to_json(const StabilityExperiment& ex) {
    json deltas = json::array();
    for (std::size_t i = 0; i < ex.eps.size(); ++i) {
        json row{{"eps", ex.eps[i]}};
        if (ex.deltas[i]) {
            for (std::size_t k = 0; k < OutputDeltas::count; ++k) row[OutputDeltas::names[k]] = ex.deltas[i]->values[k];
        } else {
            row["failed"] = true;
        }
        deltas.push_back(std::move(row));
    }
    json slopes, ratios;
    for (std::size_t k = 0; k < OutputDeltas::count; ++k) {
        slopes[OutputDeltas::names[k]] = ex.slopes[k];
        ratios[OutputDeltas::names[k]] = ex.max_ratio[k];
    }
    return {{"kind", to_string(ex.kind)}, {"partial", ex.partial}, {"deltas", deltas},
            {"slopes", slopes},           {"max_ratio", ratios}};
}

namespace detail {

template <class T>
void put_le(std::string& out, T v) {
    static_assert(std::is_trivially_copyable_v<T>);
    unsigned char b[sizeof(T)];
    std::memcpy(b, &v, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(b[k], b[sizeof(T) - 1 - k]);
    out.append(reinterpret_cast<const char*>(b), sizeof(T));
}

template <class T>
T get_le(const std::string& in, std::size_t& pos) {
    if (pos + sizeof(T) > in.size()) throw IoError("truncated trajectory file");
    unsigned char b[sizeof(T)];
    std::memcpy(b, in.data() + pos, sizeof(T));
    if constexpr (std::endian::native == std::endian::big)
        for (std::size_t k = 0; k < sizeof(T) / 2; ++k) std::swap(b[k], b[sizeof(T) - 1 - k]);
    pos += sizeof(T);
    T v;
    std::memcpy(&v, b, sizeof(T));
    return v;
}

inline constexpr char trajectory_magic[9] = "CBFTRAJ1";

}  // namespace detail

inline std::string encode_trajectory(const Trajectory& traj, const json& config) {
    std::string out(detail::trajectory_magic, 8);
    const std::string meta = config.dump();
    detail::put_le<std::uint32_t>(out, std::uint32_t(meta.size()));
    out += meta;
    const Grid& g = traj.config.grid;
    detail::put_le<std::uint64_t>(out, std::uint64_t(g.nx()));
    detail::put_le<std::uint64_t>(out, std::uint64_t(g.ny()));
    detail::put_le<std::uint64_t>(out, std::uint64_t(traj.size()));
    for (std::size_t n = 0; n < traj.size(); ++n) {
        detail::put_le<double>(out, traj.time(n));
        for (double v : traj[n].ux_data()) detail::put_le<double>(out, v);
        for (double v : traj[n].uy_data()) detail::put_le<double>(out, v);
    }
    return out;
}

struct TrajectoryDump {
    json config;
    std::vector<double> times;
    std::vector<VelocityField> snapshots;
};

inline TrajectoryDump decode_trajectory(const std::string& bytes) {
    if (bytes.size() < 8 || bytes.compare(0, 8, detail::trajectory_magic) != 0)
        throw IoError("not a trajectory file (bad magic)");
    std::size_t pos = 8;
    const auto len = detail::get_le<std::uint32_t>(bytes, pos);
    if (pos + len > bytes.size()) throw IoError("truncated trajectory header");
    TrajectoryDump d;
    try {
        d.config = json::parse(bytes.substr(pos, len));
    } catch (const json::exception& e) {
        throw IoError(std::string("trajectory header is not valid JSON: ") + e.what());
    }
    pos += len;
    const auto nx = detail::get_le<std::uint64_t>(bytes, pos);
    const auto ny = detail::get_le<std::uint64_t>(bytes, pos);
    const auto count = detail::get_le<std::uint64_t>(bytes, pos);
    const Grid g{int(nx), int(ny)};
    for (std::uint64_t n = 0; n < count; ++n) {
        d.times.push_back(detail::get_le<double>(bytes, pos));
        VelocityField v(g);
        for (double& x : v.ux_data()) x = detail::get_le<double>(bytes, pos);
        for (double& x : v.uy_data()) x = detail::get_le<double>(bytes, pos);
        d.snapshots.push_back(std::move(v));
    }
    if (pos != bytes.size()) throw IoError("trailing bytes after trajectory records");
    return d;
}

}  // namespace cbf
