#ifndef PSO_IO_HPP
#define PSO_IO_HPP

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "pso/config.hpp"
#include "pso/meanfield.hpp"
#include "pso/runner.hpp"

namespace pso {

class IoError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

/// Writes to a sibling temporary file and renames it over `path`, so readers
/// see either the old or the new content.
inline void atomic_write(const std::filesystem::path& path, const std::string& content)
{
    namespace fs = std::filesystem;
    std::error_code ec;
    if (path.has_parent_path()) fs::create_directories(path.parent_path(), ec);
    fs::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw IoError("cannot write " + tmp.string());
        out << content;
        out.flush();
        if (!out) throw IoError("write failed for " + tmp.string());
    }
    fs::rename(tmp, path, ec);
    if (ec) {
        fs::remove(tmp, ec);
        throw IoError("cannot replace " + path.string());
    }
}

inline std::string series_csv(const RunReport& report)
{
    using detail::format_double;
    const std::size_t d = report.series.empty() ? 0 : report.series.front().consensus.size();
    std::string out = "t,H,variance,best_value";
    for (std::size_t k = 1; k <= d; ++k) out += ",consensus_" + std::to_string(k);
    out += '\n';
    for (const auto& row : report.series) {
        out += format_double(row.t) + ',' + format_double(row.h) + ',' + format_double(row.variance) + ',' +
               format_double(row.best_value);
        for (double c : row.consensus) out += ',' + format_double(c);
        out += '\n';
    }
    return out;
}

inline void emit_series(const RunReport& report, const std::filesystem::path& path)
{
    atomic_write(path, series_csv(report));
}

/// Parses series_csv output back into rows (the step column is not stored).
inline std::vector<SeriesRow> read_series_csv(std::istream& in)
{
    std::string line;
    if (!std::getline(in, line)) throw IoError("series file is empty");
    std::vector<SeriesRow> rows;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        std::vector<double> f;
        std::istringstream fields(line);
        std::string item;
        while (std::getline(fields, item, ',')) {
            char* end = nullptr;
            f.push_back(std::strtod(item.c_str(), &end));
            if (end != item.c_str() + item.size()) throw IoError("bad number in series file: " + item);
        }
        if (f.size() < 4) throw IoError("series row has fewer than 4 columns");
        SeriesRow r;
        r.t = f[0];
        r.h = f[1];
        r.variance = f[2];
        r.best_value = f[3];
        r.consensus.assign(f.begin() + 4, f.end());
        rows.push_back(std::move(r));
    }
    return rows;
}

inline nlohmann::json report_json(const RunReport& r)
{
    nlohmann::json j;
    j["final_consensus"] = r.final_consensus;
    j["best_value"] = r.best_value;
    j["success"] = r.success ? nlohmann::json(*r.success) : nlohmann::json(nullptr);
    j["epochs_completed"] = r.epochs_completed;
    j["epochs_planned"] = r.epochs_planned;
    j["steps_per_epoch"] = r.steps_per_epoch;
    j["steps"] = r.steps;
    j["final_particles"] = r.final_particles;
    j["diverged"] = r.diverged;
    j["divergence_step"] = r.divergence_step ? nlohmann::json(*r.divergence_step) : nlohmann::json(nullptr);
    j["stopped_early"] = r.stopped_early;
    j["kicks"] = r.kicks;
    j["series_rows"] = r.series.size();
    j["stagnation_reference"] = r.stagnation_reference;
    j["wall_seconds"] = r.wall_seconds;
    return j;
}

inline std::string phase_csv(const std::vector<PhaseCell>& cells)
{
    std::string out = "m,sigma2,success_prob\n";
    for (const auto& c : cells) {
        out += detail::format_double(c.m) + ',' + detail::format_double(c.sigma2) + ',' +
               detail::format_double(c.success_prob()) + '\n';
    }
    return out;
}

inline std::string mfa_csv(const MfaCurve& curve)
{
    std::string out = "N,error,stderr\n";
    for (const auto& p : curve.points) {
        out += std::to_string(p.n) + ',' + detail::format_double(p.error) + ',' + detail::format_double(p.std_error) + '\n';
    }
    return out;
}

inline nlohmann::json mfa_json(const MfaCurve& curve)
{
    auto num = [](double v) { return std::isfinite(v) ? nlohmann::json(v) : nlohmann::json(nullptr); };
    nlohmann::json j;
    j["slope"] = num(curve.fit.slope);
    j["slope_half_width"] = num(curve.fit.half_width);
    j["repetitions"] = curve.repetitions;
    j["excluded"] = curve.excluded;
    j["excluded_fraction"] = curve.excluded_fraction;
    j["coupling_verified"] = curve.coupling_verified;
    return j;
}

} // namespace pso

#endif // PSO_IO_HPP
