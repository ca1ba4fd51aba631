#include "../support.hpp"

#include "aada/config.hpp"
#include "aada/errors.hpp"
#include "aada/run_log.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <unistd.h>

using namespace aada;
using namespace aada::testing;
using nlohmann::json;
namespace fs = std::filesystem;

namespace {

std::string config_error_field(const json& j) {
    try {
        config_from_json(j);
    } catch (const ConfigError& e) {
        return e.field();
    }
    return "<accepted>";
}

json tiny_json(std::size_t max_round = 2) {
    json j = to_json(tiny_config(max_round));
    j.erase("output_dir");
    return j;
}

[[maybe_unused]] fs::path scratch_dir(const std::string& name) {
    const auto d = fs::temp_directory_path() / ("aada_harness_" + std::to_string(::getpid())) / name;
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
}

[[maybe_unused]] std::string slurp(const fs::path& p) {
    std::ifstream in(p);
    std::stringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

#ifdef AADA_CLI_PATH
int run_cli(const std::string& args, const fs::path& log) {
    const std::string cmd = std::string(AADA_CLI_PATH) + " " + args + " > " + log.string() + " 2>&1";
    const int status = std::system(cmd.c_str());
    return WIFEXITED(status) ? WEXITSTATUS(status) : -1;
}
#endif

} // namespace

TEST(Config, DefaultsAndPresets) {
    const auto toy = preset_config("toy");
    EXPECT_EQ(toy.schedule.batch_size, 64u);
    EXPECT_EQ(toy.schedule.phases, (std::vector<TrainPhase>{{30, 1e-3}, {30, 5e-4}, {30, 2.5e-4}}));
    EXPECT_EQ(toy.lambda_adv, 0.1);
    const auto digits = preset_config("paper-digits");
    EXPECT_EQ(digits.schedule.batch_size, 128u);
    EXPECT_EQ(digits.schedule.phases, (std::vector<TrainPhase>{{20, 2e-4}, {20, 1e-4}, {20, 5e-5}}));
    EXPECT_EQ(digits.max_round, 30u);
    EXPECT_EQ(digits.total_budget(), 300u);
    EXPECT_THROW(preset_config("imagenet"), ConfigError);
}

TEST(Config, JsonRoundTrip) {
    auto c = preset_config("paper-digits");
    c.budgets = {1, 2, 3};
    c.max_round = 3;
    c.grid.strategies = {Strategy::KCenter, Strategy::BvSB};
    EXPECT_EQ(config_from_json(to_json(c)), c);
}

TEST(Config, FieldLevelDiagnostics) {
    json j = tiny_json(3);
    j["budgets"] = {5, -1, 5};
    EXPECT_EQ(config_error_field(j), "budgets[1]");
    j = tiny_json(3);
    j["budgets"] = {5, 5};
    EXPECT_EQ(config_error_field(j), "budgets");
    j = tiny_json();
    j["dataset"]["noize"] = 0.1;
    EXPECT_EQ(config_error_field(j), "dataset.noize");
    j = tiny_json();
    j["strategy"] = "clever";
    EXPECT_EQ(config_error_field(j), "strategy");
    j = tiny_json();
    j["lambda_adv"] = "big";
    EXPECT_EQ(config_error_field(j), "lambda_adv");
    j = tiny_json();
    j["schedule"]["phases"][0]["learning_rate"] = -1;
    EXPECT_EQ(config_error_field(j).rfind("schedule.phases[0]", 0), 0u);
    j = tiny_json();
    j["seeds"] = json::array();
    EXPECT_EQ(config_error_field(j), "seeds");
}

TEST(Config, BudgetForRound) {
    auto c = tiny_config(3);
    c.budgets = {2, 4, 6};
    EXPECT_EQ(c.budget_for_round(2), 4u);
    EXPECT_EQ(c.total_budget(), 12u);
    c.budgets = {5};
    EXPECT_EQ(c.budget_for_round(3), 5u);
    EXPECT_EQ(c.total_budget(), 15u);
}

TEST(Curves, SingleLogHasZeroDeviation) {
    const auto log = run_aada(tiny_config(2), 1);
    const auto curves = aggregate_curves({log});
    ASSERT_EQ(curves.size(), 3u);
    for (const auto& p : curves) {
        EXPECT_EQ(p.sd_acc, 0.0);
        EXPECT_EQ(p.n_seeds, 1u);
    }
    EXPECT_EQ(curves[2].mean_acc, log.rounds[2].accuracy);
}

TEST(Curves, MeanAndDeviationRecomputed) {
    std::vector<RunLog> logs;
    for (std::uint64_t s = 1; s <= 5; ++s) logs.push_back(run_aada(tiny_config(2), s));
    const auto curves = aggregate_curves(logs);
    ASSERT_EQ(curves.size(), 3u);
    for (std::size_t r = 0; r < 3; ++r) {
        double m = 0;
        for (const auto& l : logs) m += l.rounds[r].accuracy;
        m /= 5.0;
        double v = 0;
        for (const auto& l : logs) v += (l.rounds[r].accuracy - m) * (l.rounds[r].accuracy - m);
        EXPECT_NEAR(curves[r].mean_acc, m, 1e-15);
        EXPECT_NEAR(curves[r].sd_acc, std::sqrt(v / 4.0), 1e-15);
        EXPECT_EQ(curves[r].n_seeds, 5u);
    }
    // Input order does not matter.
    std::reverse(logs.begin(), logs.end());
    const auto again = aggregate_curves(logs);
    for (std::size_t r = 0; r < 3; ++r) EXPECT_EQ(again[r].mean_acc, curves[r].mean_acc);
}

TEST(Curves, EmptyAndIncompatibleInputsRejected) {
    EXPECT_THROW(aggregate_curves({}), Error);
    const auto a = run_aada(tiny_config(2), 1);
    auto other = tiny_config(2);
    other.lambda_adv = 0.5;
    const auto b = run_aada(other, 2);
    EXPECT_THROW(aggregate_curves({a, b}), Error);
    EXPECT_THROW(emit_curves({}, "/nonexistent/never.csv"), Error);
}

TEST(Curves, TableRoundTrip) {
    std::vector<CurvePoint> pts{{0, 0, "adversarial", "random", 0.123456789012345678, 0.01, 3},
                                {1, 5, "joint", "kcenter", 2.0 / 3.0, 0.0, 3}};
    std::stringstream ss;
    write_curves(ss, pts);
    EXPECT_EQ(ss.str().substr(0, ss.str().find('\n')), kCurveHeader);
    const auto back = read_curves(ss);
    ASSERT_EQ(back.size(), 2u);
    EXPECT_EQ(back[0].mean_acc, pts[0].mean_acc);
    EXPECT_EQ(back[1].mean_acc, 2.0 / 3.0);
    EXPECT_EQ(back[1].strategy, "kcenter");
}

TEST(Grid, CountsAndDuplicateStrategies) {
    const auto base = tiny_config(1);
    const auto once = compare_strategies(base, {TrainScheme::Adversarial}, {Strategy::Random}, {1, 2, 3, 4, 5}, 1);
    EXPECT_EQ(once.cells.size(), 5u);
    EXPECT_EQ(once.curves.size(), 2u); // one row per round
    const auto twice = compare_strategies(base, {TrainScheme::Adversarial}, {Strategy::Random, Strategy::Random},
                                          {1, 2, 3, 4, 5}, 2);
    ASSERT_EQ(twice.curves.size(), once.curves.size());
    for (std::size_t i = 0; i < once.curves.size(); ++i) {
        EXPECT_EQ(twice.curves[i].mean_acc, once.curves[i].mean_acc);
        EXPECT_EQ(twice.curves[i].sd_acc, once.curves[i].sd_acc);
    }
}

TEST(Grid, WorkerCountDoesNotChangeResults) {
    const auto base = tiny_config(1);
    const auto a = compare_strategies(base, {TrainScheme::Adversarial, TrainScheme::TargetOnly},
                                      {Strategy::ImportanceWeight, Strategy::KMeans}, {1, 2}, 1);
    const auto b = compare_strategies(base, {TrainScheme::Adversarial, TrainScheme::TargetOnly},
                                      {Strategy::ImportanceWeight, Strategy::KMeans}, {1, 2}, 4);
    ASSERT_EQ(a.cells.size(), 8u);
    for (std::size_t i = 0; i < a.cells.size(); ++i) {
        EXPECT_EQ(run_log_to_string(*a.cells[i].log), run_log_to_string(*b.cells[i].log));
    }
}

TEST(Grid, FailuresAreReportedPerCell) {
    auto base = tiny_config(2, 60); // exceeds the pool
    GridResult r;
    EXPECT_NO_THROW(r = compare_strategies(base, {TrainScheme::Adversarial}, {Strategy::Random, Strategy::BvSB}, {1}, 2));
    EXPECT_EQ(r.failures(), 2u);
    EXPECT_FALSE(r.cells[0].error.empty());
    EXPECT_TRUE(r.curves.empty());
}

TEST(ParallelFor, RunsEveryIndexOnce) {
    std::vector<int> hits(100, 0);
    parallel_for(100, 4, [&](std::size_t i) { ++hits[i]; });
    EXPECT_EQ(std::count(hits.begin(), hits.end(), 1), 100);
    EXPECT_THROW(parallel_for(3, 2, [](std::size_t i) { if (i == 1) throw Error("x"); }), Error);
}

// ---- command line ------------------------------------------------------------------------

#ifdef AADA_CLI_PATH

TEST(Cli, RunWithZeroRounds) {
    const auto dir = scratch_dir("run0");
    std::ofstream(dir / "cfg.json") << tiny_json(0).dump();
    ASSERT_EQ(run_cli("run --config " + (dir / "cfg.json").string() + " --seed 3 --out " + (dir / "out").string(),
                      dir / "log.txt"), 0) << slurp(dir / "log.txt");
    const auto log = load_run_log((dir / "out" / "adversarial_importance_weight_seed3" / "runlog.json").string());
    EXPECT_EQ(log.rounds.size(), 1u);
    EXPECT_EQ(log.seed, 3u);
    EXPECT_TRUE(fs::exists(dir / "out" / "adversarial_importance_weight_seed3" / "checkpoint.json"));
    EXPECT_TRUE(fs::exists(dir / "out" / "curves.csv"));
}

TEST(Cli, NegativeBudgetNamesTheField) {
    const auto dir = scratch_dir("badbudget");
    json j = tiny_json(2);
    j["budgets"] = {3, -2};
    std::ofstream(dir / "cfg.json") << j.dump();
    const int code = run_cli("run --config " + (dir / "cfg.json").string() + " --out " + (dir / "out").string(),
                             dir / "log.txt");
    EXPECT_NE(code, 0);
    EXPECT_NE(slurp(dir / "log.txt").find("budgets[1]"), std::string::npos) << slurp(dir / "log.txt");
    EXPECT_FALSE(fs::exists(dir / "out"));
}

TEST(Cli, UnknownSubcommandFails) {
    const auto dir = scratch_dir("unknown");
    EXPECT_NE(run_cli("frobnicate", dir / "log.txt"), 0);
}

TEST(Cli, GridProducesEightCurveGroupsAndCurvesScoresWork) {
    const auto dir = scratch_dir("grid");
    json j = tiny_json(1);
    j["seeds"] = {1, 2};
    std::ofstream(dir / "cfg.json") << j.dump();
    ASSERT_EQ(run_cli("grid --config " + (dir / "cfg.json").string() + " --workers 2 --out " + (dir / "out").string(),
                      dir / "log.txt"), 0) << slurp(dir / "log.txt");
    const auto curves = read_curves_file((dir / "out" / "curves.csv").string());
    std::set<std::pair<std::string, std::string>> groups;
    for (const auto& p : curves) groups.insert({p.scheme, p.strategy});
    EXPECT_EQ(groups.size(), 8u);

    // `curves` over the same directory reproduces the table.
    ASSERT_EQ(run_cli("curves " + (dir / "out").string() + " --out " + (dir / "again.csv").string(), dir / "log2.txt"), 0)
        << slurp(dir / "log2.txt");
    EXPECT_EQ(slurp(dir / "again.csv"), slurp(dir / "out" / "curves.csv"));
}

TEST(Cli, OutputRootFromEnvironmentAndInspectScores) {
    const auto dir = scratch_dir("env");
    std::ofstream(dir / "cfg.json") << tiny_json(1).dump();
    const std::string env = "AADA_OUTPUT_ROOT=" + (dir / "envroot").string() + " ";
    const int status = std::system((env + AADA_CLI_PATH + " run --config " + (dir / "cfg.json").string() + " > " +
                                    (dir / "log.txt").string() + " 2>&1").c_str());
    ASSERT_EQ(WEXITSTATUS(status), 0) << slurp(dir / "log.txt");
    const auto scores = dir / "envroot" / "adversarial_importance_weight_seed1" / "scores" / "round_01.csv";
    ASSERT_TRUE(fs::exists(scores));
    ASSERT_EQ(run_cli("inspect-scores " + scores.string() + " --top 3", dir / "inspect.txt"), 0);
    const auto text = slurp(dir / "inspect.txt");
    EXPECT_NE(text.find("score"), std::string::npos);
    EXPECT_EQ(std::count(text.begin(), text.end(), '\n'), 4); // header + 3 rows
}

#endif
