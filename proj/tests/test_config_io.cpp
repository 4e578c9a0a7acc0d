#include <algorithm>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>

#include <gtest/gtest.h>

#include "pso/config.hpp"
#include "pso/io.hpp"

using namespace pso;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name)
{
    const fs::path dir = fs::temp_directory_path() / ("pso_config_io_" + name);
    fs::remove_all(dir);
    fs::create_directories(dir);
    return dir;
}

std::string slurp(const fs::path& p)
{
    std::ifstream in(p, std::ios::binary);
    std::ostringstream s;
    s << in.rdbuf();
    return s.str();
}

Config small()
{
    Config c;
    c.apply_override("dim=3");
    c.apply_override("swarm.particles=12");
    c.apply_override("sigma2=0.7");
    c.apply_override("epochs=40");
    c.apply_override("seed=5");
    return c;
}

} // namespace

TEST(Config, DefaultsAndSections)
{
    Config c;
    std::istringstream in(R"(# a comment
[objective]
name = sphere
dim = 7   # trailing comment

[swarm]
sigma2 = 1.5
memory = "hard"
[mfa]
ns = [10, 20, 40]
)");
    c.parse(in);
    EXPECT_EQ(c.text("objective.name"), "sphere");
    EXPECT_EQ(c.integer("objective.dim"), 7u);
    EXPECT_EQ(c.number("swarm.sigma2"), 1.5);
    EXPECT_EQ(c.text("memory"), "hard");
    EXPECT_EQ(c.integers("mfa.ns"), (std::vector<std::size_t>{10, 20, 40}));
    EXPECT_EQ(c.number("swarm.alpha"), 100.0);
    EXPECT_FALSE(c.optional_number("swarm.gamma"));
}

TEST(Config, BareKeysResolveBySuffix)
{
    EXPECT_EQ(Config::resolve("sigma2"), "swarm.sigma2");
    EXPECT_EQ(Config::resolve("n_ref"), "mfa.n_ref");
    EXPECT_EQ(Config::resolve("swarm.m"), "swarm.m");
}

TEST(Config, UnknownKeyIsNamed)
{
    Config c;
    try {
        c.apply_override("sigma3=1");
        FAIL() << "expected ConfigError";
    } catch (const ConfigError& e) {
        EXPECT_NE(std::string(e.what()).find("sigma3"), std::string::npos);
    }
    std::istringstream in("[swarm]\nbogus = 1\n");
    EXPECT_THROW(c.parse(in), ConfigError);
}

TEST(Config, AmbiguousKeyIsRejected)
{
    // horizon exists under both run and mfa.
    EXPECT_THROW(Config::resolve("horizon"), ConfigError);
    EXPECT_EQ(Config::resolve("run.horizon"), "run.horizon");
}

TEST(Config, MalformedValues)
{
    Config c;
    c.apply_override("dim=abc");
    EXPECT_THROW(c.integer("dim"), ConfigError);
    c.apply_override("stop_on_window=maybe");
    EXPECT_THROW(c.flag("stop_on_window"), ConfigError);
    EXPECT_THROW(c.apply_override("no equals sign"), ConfigError);
    std::istringstream in("[swarm\nm = 1\n");
    EXPECT_THROW(c.parse(in), ConfigError);
}

TEST(Config, InvalidShapeBecomesConfigError)
{
    auto c = small();
    c.apply_override("batch.particles=5");
    EXPECT_THROW(to_run_config(c), ConfigError);
    c.apply_override("batch.particles=4");
    EXPECT_NO_THROW(to_run_config(c));
    c.apply_override("memory=sometimes");
    EXPECT_THROW(to_run_config(c), ConfigError);
}

TEST(Config, MissingFileIsConfigError)
{
    Config c;
    EXPECT_THROW(c.load_file("/nonexistent/pso.toml"), ConfigError);
}

TEST(Config, SerializeRoundTripReproducesRun)
{
    auto c = small();
    c.apply_override("memory=hard");
    c.apply_override("lambda1=0.4");
    c.apply_override("sigma1=0.28");
    c.apply_override("dt=0.0123456789012345");
    Config back;
    std::istringstream in(c.serialize());
    back.parse(in);
    EXPECT_EQ(back, c);
    const auto a = run(to_run_config(c));
    const auto b = run(to_run_config(back));
    EXPECT_EQ(a.series, b.series);
}

TEST(SeriesCsv, RoundTripIsBitExact)
{
    const auto report = run(to_run_config(small()));
    std::istringstream in(series_csv(report));
    const auto rows = read_series_csv(in);
    ASSERT_EQ(rows.size(), report.series.size());
    for (std::size_t i = 0; i < rows.size(); ++i) {
        EXPECT_EQ(rows[i].t, report.series[i].t);
        EXPECT_EQ(rows[i].h, report.series[i].h);
        EXPECT_EQ(rows[i].variance, report.series[i].variance);
        EXPECT_EQ(rows[i].best_value, report.series[i].best_value);
        EXPECT_EQ(rows[i].consensus, report.series[i].consensus);
    }
}

TEST(SeriesCsv, HeaderAndZeroEpochs)
{
    auto c = small();
    c.apply_override("epochs=0");
    const std::string csv = series_csv(run(to_run_config(c)));
    EXPECT_EQ(csv.substr(0, csv.find('\n')), "t,H,variance,best_value,consensus_1,consensus_2,consensus_3");
    EXPECT_EQ(std::count(csv.begin(), csv.end(), '\n'), 2);
}

TEST(SeriesCsv, RecordIntervalThinsRows)
{
    auto c = small();
    c.apply_override("objective.name=sphere");
    c.apply_override("epochs=10000");
    c.apply_override("swarm.particles=4");
    c.apply_override("record_interval=100");
    const auto r = run(to_run_config(c));
    EXPECT_EQ(r.steps, 10000u);
    EXPECT_EQ(r.series.size(), 101u);
}

TEST(AtomicWrite, IdempotentAndReplaces)
{
    const auto dir = scratch("atomic");
    const auto p = dir / "sub" / "out.txt";
    atomic_write(p, "alpha\n");
    atomic_write(p, "alpha\n");
    EXPECT_EQ(slurp(p), "alpha\n");
    atomic_write(p, "beta\n");
    EXPECT_EQ(slurp(p), "beta\n");
    EXPECT_FALSE(fs::exists(dir / "sub" / "out.txt.tmp"));
}

TEST(AtomicWrite, UnwritablePathThrows)
{
    const auto dir = scratch("unwritable");
    const auto blocker = dir / "file";
    atomic_write(blocker, "x");
    EXPECT_THROW(atomic_write(blocker / "child.csv", "y"), IoError);
}

TEST(Reports, JsonAndPhaseCsv)
{
    const auto r = run(to_run_config(small()));
    const auto j = report_json(r);
    EXPECT_EQ(j.at("steps").get<std::uint64_t>(), r.steps);
    EXPECT_TRUE(j.contains("final_consensus"));

    std::vector<PhaseCell> cells(2);
    cells[0] = {0.2, 0.5, 4, 3, 0};
    cells[1] = {0.2, 1.0, 4, 0, 4};
    const std::string csv = phase_csv(cells);
    EXPECT_EQ(csv, "m,sigma2,success_prob\n0.20000000000000001,0.5,0.75\n0.20000000000000001,1,0\n");
}
