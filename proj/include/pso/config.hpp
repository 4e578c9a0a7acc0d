#ifndef PSO_CONFIG_HPP
#define PSO_CONFIG_HPP

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <sstream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "pso/runner.hpp"

namespace pso {

/// Bad key, bad value or unreadable config file.
class ConfigError : public std::runtime_error
{
public:
    using std::runtime_error::runtime_error;
};

namespace detail {

inline std::string trim(std::string_view s)
{
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string_view::npos) return {};
    const auto e = s.find_last_not_of(" \t\r\n");
    return std::string(s.substr(b, e - b + 1));
}

inline std::string unquote(std::string v)
{
    if (v.size() >= 2 && (v.front() == '"' || v.front() == '\'') && v.back() == v.front()) return v.substr(1, v.size() - 2);
    return v;
}

inline std::string format_double(double v)
{
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

} // namespace detail

/// Flat experiment configuration: dotted keys mapped to text values.
///
/// Every key is registered with a default; anything else is rejected. Files
/// use `key = value` lines, `[section]` headers prefix the keys that follow,
/// `#` starts a comment, lists are comma separated (optionally in brackets).
class Config
{
public:
    Config() : values_(defaults()) {}

    static const std::map<std::string, std::string>& defaults()
    {
        static const std::map<std::string, std::string> d = {
            {"objective.name", "rastrigin"},
            {"objective.dim", "20"},

            {"swarm.m", "0.2"},
            {"swarm.gamma", "auto"},
            {"swarm.lambda1", "0"},
            {"swarm.lambda2", "1"},
            {"swarm.sigma1", "0"},
            {"swarm.sigma2", "0"},
            {"swarm.alpha", "100"},
            {"swarm.beta", "inf"},
            {"swarm.theta", "0"},
            {"swarm.kappa", "50"},
            {"swarm.dt", "0.01"},
            {"swarm.diffusion", "anisotropic"},
            {"swarm.memory", "off"},
            {"swarm.particles", "100"},

            {"init.position", "gaussian"},
            {"init.position_mean", "2"},
            {"init.position_variance", "4"},
            {"init.position_lower", "-1"},
            {"init.position_upper", "1"},
            {"init.velocity", "gaussian"},
            {"init.velocity_mean", "0"},
            {"init.velocity_variance", "1"},
            {"init.velocity_lower", "-1"},
            {"init.velocity_upper", "1"},

            {"batch.data", "0"},
            {"batch.particles", "0"},
            {"batch.update", "full"},

            {"run.epochs", "1"},
            {"run.horizon", "none"},
            {"run.stop_on_window", "false"},
            {"run.stop_window", "20"},
            {"run.stop_tol", "1e-8"},
            {"run.record_interval", "1"},
            {"run.success_tol", "0.25"},
            {"run.seed", "0"},
            {"run.workers", "1"},

            {"schedule.cooling", "false"},
            {"schedule.mu", "0"},
            {"schedule.min_particles", "2"},
            {"schedule.stagnation", "false"},
            {"schedule.tau", "auto"},
            {"schedule.kick", "1"},
            {"schedule.kick_target", "velocity"},

            {"phase.m_grid", "0.2"},
            {"phase.sigma_grid", "0.5,1,1.5,2,2.5,3,3.5,4,4.5,5,5.5,6"},
            {"phase.runs_per_cell", "25"},

            {"mfa.ns", "50,100,200,400,800"},
            {"mfa.n_ref", "6400"},
            {"mfa.horizon", "5"},
            {"mfa.reps", "20"},

            {"laplace.n", "10000"},
            {"laplace.alpha_max_exp", "10"},
            {"laplace.distribution", "uniform"},

            {"bench.repeats", "3"},
        };
        return d;
    }

    /// Full key for `key`: itself when registered, otherwise the unique
    /// registered key ending in "." + key.
    static std::string resolve(const std::string& key)
    {
        const auto& d = defaults();
        if (d.count(key)) return key;
        std::string found;
        for (const auto& [full, _] : d) {
            if (full.size() > key.size() && full.compare(full.size() - key.size(), key.size(), key) == 0 &&
                full[full.size() - key.size() - 1] == '.') {
                if (!found.empty()) throw ConfigError("ambiguous config key \"" + key + "\" (" + found + ", " + full + ")");
                found = full;
            }
        }
        if (found.empty()) throw ConfigError("unknown config key \"" + key + "\"");
        return found;
    }

    void set(const std::string& key, const std::string& value) { values_[resolve(trimmed(key))] = detail::trim(value); }

    /// Applies a `key=value` override.
    void apply_override(std::string_view assignment)
    {
        const auto eq = assignment.find('=');
        if (eq == std::string_view::npos) throw ConfigError("override \"" + std::string(assignment) + "\" is not key=value");
        set(detail::trim(assignment.substr(0, eq)), detail::unquote(detail::trim(assignment.substr(eq + 1))));
    }

    void parse(std::istream& in, const std::string& origin = "<config>")
    {
        std::string line, section;
        std::size_t lineno = 0;
        while (std::getline(in, line)) {
            ++lineno;
            line = detail::trim(strip_comment(line));
            if (line.empty()) continue;
            if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
                section = detail::trim(std::string_view(line).substr(1, line.size() - 2));
                continue;
            }
            const auto eq = line.find('=');
            if (eq == std::string::npos) {
                throw ConfigError(origin + ":" + std::to_string(lineno) + ": expected key = value");
            }
            std::string key = detail::trim(std::string_view(line).substr(0, eq));
            if (!section.empty()) key = section + "." + key;
            set(key, detail::unquote(detail::trim(std::string_view(line).substr(eq + 1))));
        }
    }

    void load_file(const std::string& path)
    {
        std::ifstream in(path);
        if (!in) throw ConfigError("cannot read config file \"" + path + "\"");
        parse(in, path);
    }

    /// Effective configuration as a file that parse() reads back unchanged.
    std::string serialize() const
    {
        std::ostringstream out;
        std::string section;
        for (const auto& [key, value] : values_) {
            const auto dot = key.find('.');
            const std::string sec = key.substr(0, dot);
            if (sec != section) {
                if (!section.empty()) out << '\n';
                out << '[' << sec << "]\n";
                section = sec;
            }
            out << key.substr(dot + 1) << " = " << value << '\n';
        }
        return out.str();
    }

    const std::string& text(const std::string& key) const { return values_.at(resolve(key)); }

    double number(const std::string& key) const { return to_double(resolve(key), text(key)); }

    std::optional<double> optional_number(const std::string& key) const
    {
        const std::string& v = text(key);
        if (v == "none" || v == "auto") return std::nullopt;
        return to_double(resolve(key), v);
    }

    std::uint64_t integer(const std::string& key) const { return to_integer(resolve(key), text(key)); }

    bool flag(const std::string& key) const
    {
        const std::string& v = text(key);
        if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
        if (v == "false" || v == "0" || v == "off" || v == "no") return false;
        throw ConfigError("config key \"" + resolve(key) + "\" expects a boolean, got \"" + v + "\"");
    }

    std::vector<double> numbers(const std::string& key) const
    {
        std::vector<double> out;
        for (const auto& item : split_list(text(key))) out.push_back(to_double(resolve(key), item));
        return out;
    }

    std::vector<std::size_t> integers(const std::string& key) const
    {
        std::vector<std::size_t> out;
        for (const auto& item : split_list(text(key))) out.push_back(to_integer(resolve(key), item));
        return out;
    }

    friend bool operator==(const Config&, const Config&) = default;

private:
    std::map<std::string, std::string> values_;

    static std::string trimmed(const std::string& s) { return detail::trim(s); }

    static std::string strip_comment(const std::string& line)
    {
        bool quoted = false;
        for (std::size_t i = 0; i < line.size(); ++i) {
            if (line[i] == '"') quoted = !quoted;
            if (line[i] == '#' && !quoted) return line.substr(0, i);
        }
        return line;
    }

    static std::vector<std::string> split_list(std::string v)
    {
        v = detail::trim(v);
        if (v.size() >= 2 && v.front() == '[' && v.back() == ']') v = v.substr(1, v.size() - 2);
        std::vector<std::string> out;
        std::string item;
        std::istringstream in(v);
        while (std::getline(in, item, ',')) {
            item = detail::trim(item);
            if (!item.empty()) out.push_back(item);
        }
        return out;
    }

    static double to_double(const std::string& key, const std::string& v)
    {
        errno = 0;
        char* end = nullptr;
        const double d = std::strtod(v.c_str(), &end);
        if (v.empty() || end != v.c_str() + v.size() || errno == ERANGE) {
            throw ConfigError("config key \"" + key + "\" expects a number, got \"" + v + "\"");
        }
        return d;
    }

    static std::uint64_t to_integer(const std::string& key, const std::string& v)
    {
        errno = 0;
        char* end = nullptr;
        const unsigned long long u = std::strtoull(v.c_str(), &end, 10);
        if (v.empty() || v.front() == '-' || end != v.c_str() + v.size() || errno == ERANGE) {
            throw ConfigError("config key \"" + key + "\" expects a non-negative integer, got \"" + v + "\"");
        }
        return u;
    }
};

namespace detail {

inline Distribution distribution_from(const Config& c, const std::string& prefix)
{
    const std::string kind = c.text(prefix);
    if (kind == "gaussian") return Distribution::gaussian(c.numbers(prefix + "_mean"), c.numbers(prefix + "_variance"));
    if (kind == "uniform") return Distribution::uniform(c.numbers(prefix + "_lower"), c.numbers(prefix + "_upper"));
    throw ConfigError("config key \"" + prefix + "\" expects gaussian or uniform, got \"" + kind + "\"");
}

template <class E>
E choose(const Config& c, const std::string& key, std::initializer_list<std::pair<const char*, E>> options)
{
    const std::string& v = c.text(key);
    std::string names;
    for (const auto& [name, value] : options) {
        if (v == name) return value;
        names += names.empty() ? name : std::string(", ") + name;
    }
    throw ConfigError("config key \"" + key + "\" expects one of " + names + ", got \"" + v + "\"");
}

} // namespace detail

/// Builds and validates the run configuration. Violations surface as ConfigError.
inline RunConfig to_run_config(const Config& c)
{
    RunConfig r;
    r.objective_name = c.text("objective.name");
    SwarmParams& p = r.params;
    p.dim = c.integer("objective.dim");
    p.m = c.number("swarm.m");
    p.gamma = c.optional_number("swarm.gamma");
    p.lambda1 = c.number("swarm.lambda1");
    p.lambda2 = c.number("swarm.lambda2");
    p.sigma1 = c.number("swarm.sigma1");
    p.sigma2 = c.number("swarm.sigma2");
    p.alpha = c.number("swarm.alpha");
    p.beta = c.number("swarm.beta");
    p.theta = c.number("swarm.theta");
    p.kappa = c.number("swarm.kappa");
    p.dt = c.number("swarm.dt");
    p.diffusion = detail::choose<Diffusion>(c, "swarm.diffusion",
                                            {{"anisotropic", Diffusion::Anisotropic}, {"isotropic", Diffusion::Isotropic}});
    p.memory = detail::choose<MemoryMode>(
        c, "swarm.memory", {{"off", MemoryMode::Off}, {"hard", MemoryMode::Hard}, {"soft", MemoryMode::Soft}});
    p.particles = c.integer("swarm.particles");

    r.init.position = detail::distribution_from(c, "init.position");
    r.init.velocity = detail::distribution_from(c, "init.velocity");

    r.data_batch = c.integer("batch.data");
    r.particle_batch = c.integer("batch.particles");
    r.update = detail::choose<UpdateMode>(c, "batch.update", {{"full", UpdateMode::Full}, {"partial", UpdateMode::Partial}});

    r.epochs = c.integer("run.epochs");
    r.horizon = c.optional_number("run.horizon");
    r.stop_on_window = c.flag("run.stop_on_window");
    r.stop_window = c.integer("run.stop_window");
    r.stop_tol = c.number("run.stop_tol");
    r.record_interval = c.integer("run.record_interval");
    r.success_tol = c.number("run.success_tol");
    r.seed = c.integer("run.seed");

    r.schedule.cooling = c.flag("schedule.cooling");
    r.schedule.decay_rate = c.number("schedule.mu");
    r.schedule.min_particles = c.integer("schedule.min_particles");
    r.schedule.stagnation = c.flag("schedule.stagnation");
    r.schedule.stagnation_tol = c.optional_number("schedule.tau");
    r.schedule.kick_magnitude = c.number("schedule.kick");
    r.schedule.kick_target = detail::choose<KickTarget>(
        c, "schedule.kick_target", {{"velocity", KickTarget::Velocity}, {"position", KickTarget::Position}});

    try {
        resolve_shape(r, *resolve_objective(r));
    } catch (const std::invalid_argument& e) {
        throw ConfigError(e.what());
    }
    return r;
}

} // namespace pso

#endif // PSO_CONFIG_HPP
