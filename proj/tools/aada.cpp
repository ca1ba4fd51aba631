// aada: run, grid, curves, inspect-scores.
#include "aada/active_loop.hpp"
#include "aada/config.hpp"
#include "aada/errors.hpp"
#include "aada/run_log.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <mutex>
#include <optional>

namespace fs = std::filesystem;
using namespace aada;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string preset;
    std::optional<std::uint64_t> seed;
    std::string out;
    std::optional<std::size_t> workers;
    bool timing = false;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
    cmd->add_option("--config", f.config_path, "JSON run config")->check(CLI::ExistingFile);
    cmd->add_option("--preset", f.preset, "base preset when no config is given (toy, paper-digits)");
    cmd->add_option("--seed", f.seed, "run this seed only");
    cmd->add_option("--out", f.out, "output root (overrides AADA_OUTPUT_ROOT and the config)");
    cmd->add_option("--workers", f.workers, "parallel runs (0 = one per core)");
    cmd->add_flag("--timing", f.timing, "also write per-round wall-clock timings");
}

RunConfig resolve_config(const CommonFlags& f) {
    RunConfig config;
    if (!f.config_path.empty()) {
        config = load_config(f.config_path, f.preset.empty() ? "toy" : f.preset);
    } else {
        config = preset_config(f.preset.empty() ? "toy" : f.preset);
    }
    if (f.seed) config.seeds = {*f.seed};
    if (f.workers) config.workers = *f.workers;
    if (const char* env = std::getenv("AADA_OUTPUT_ROOT"); env && *env) config.output_dir = env;
    if (!f.out.empty()) config.output_dir = f.out;
    config.validate();
    return config;
}

std::string cell_name(TrainScheme scheme, Strategy strategy, std::uint64_t seed) {
    return std::string(to_string(scheme)) + "_" + std::string(to_string(strategy)) + "_seed" +
           std::to_string(seed);
}

// Writes score dumps and the final checkpoint while the run progresses.
RoundObserver artifact_writer(const fs::path& dir, std::size_t max_round) {
    fs::create_directories(dir / "scores");
    return [dir, max_round](const RoundEvent& ev) {
        if (ev.selection) {
            char name[32];
            std::snprintf(name, sizeof name, "round_%02zu.csv", ev.record.round);
            write_scores_file((dir / "scores" / name).string(), ev.selection->candidates,
                              ev.selection->indices);
        }
        if (ev.record.round == max_round) {
            save_checkpoint((dir / "checkpoint.json").string(), ev.model, ev.rng);
        }
    };
}

void write_run(const fs::path& dir, const RunLog& log, bool timing) {
    save_run_log(log, (dir / "runlog.json").string());
    if (timing) save_timings(log, (dir / "timings.csv").string());
}

void print_final(const std::string& name, const RunLog& log) {
    const auto& last = log.rounds.back();
    std::printf("%s: round %zu, %zu labels, accuracy %.4f\n", name.c_str(), last.round, last.n_labeled,
                last.accuracy);
}

int cmd_run(const CommonFlags& f) {
    const RunConfig config = resolve_config(f);
    const fs::path root(config.output_dir);
    std::vector<RunLog> logs(config.seeds.size());
    std::mutex io;
    parallel_for(config.seeds.size(), config.workers, [&](std::size_t i) {
        const auto seed = config.seeds[i];
        const fs::path dir = root / cell_name(config.scheme, config.strategy, seed);
        RunConfig one = config;
        one.seeds = {seed};
        logs[i] = run_aada(one, seed, artifact_writer(dir, config.max_round));
        write_run(dir, logs[i], f.timing);
        std::lock_guard lock(io);
        print_final(dir.filename().string(), logs[i]);
    });
    emit_curves(logs, (root / "curves.csv").string());
    return 0;
}

int cmd_grid(const CommonFlags& f) {
    const RunConfig config = resolve_config(f);
    const fs::path root(config.output_dir);
    auto schemes = config.grid.schemes;
    if (schemes.empty()) {
        schemes = {TrainScheme::Adversarial, TrainScheme::Joint, TrainScheme::FineTune, TrainScheme::TargetOnly};
    }
    auto strategies = config.grid.strategies;
    if (strategies.empty()) strategies = {Strategy::ImportanceWeight, Strategy::Random};

    std::mutex io;
    // Cells run through compare_strategies; artifacts are written from the completion hook,
    // each into the cell's own directory.
    const GridResult result = compare_strategies(
        config, schemes, strategies, config.seeds, config.workers,
        [&](const GridCell& cell, const RunLog& log) {
            const fs::path dir = root / cell_name(cell.scheme, cell.strategy, cell.seed);
            fs::create_directories(dir);
            write_run(dir, log, f.timing);
            print_final(dir.filename().string(), log);
        });
    for (const auto& c : result.cells) {
        if (!c.log) {
            std::fprintf(stderr, "cell %s failed: %s\n",
                         cell_name(c.cell.scheme, c.cell.strategy, c.cell.seed).c_str(), c.error.c_str());
        }
    }
    if (!result.curves.empty()) {
        fs::create_directories(root);
        write_curves_file((root / "curves.csv").string(), result.curves);
    }
    std::printf("grid: %zu cells, %zu failed\n", result.cells.size(), result.failures());
    return result.failures() == 0 ? 0 : 3;
}

int cmd_curves(const std::vector<std::string>& inputs, const std::string& out) {
    std::vector<RunLog> logs;
    for (const auto& in : inputs) {
        if (fs::is_directory(in)) {
            std::vector<fs::path> found;
            for (const auto& e : fs::recursive_directory_iterator(in)) {
                if (e.is_regular_file() && e.path().filename() == "runlog.json") found.push_back(e.path());
            }
            std::sort(found.begin(), found.end());
            for (const auto& p : found) logs.push_back(load_run_log(p.string()));
        } else {
            logs.push_back(load_run_log(in));
        }
    }
    const auto curves = aggregate_curves(logs);
    if (out.empty() || out == "-") {
        write_curves(std::cout, curves);
    } else {
        write_curves_file(out, curves);
    }
    return 0;
}

int cmd_inspect(const std::string& path, std::size_t top) {
    auto rows = read_scores_file(path);
    std::stable_sort(rows.begin(), rows.end(), [](const ScoreRow& a, const ScoreRow& b) {
        if (a.score != b.score) return a.score > b.score;
        return a.index < b.index;
    });
    if (top > 0 && rows.size() > top) rows.resize(top);
    std::printf("%-8s %-14s %-14s %-14s %s\n", "index", "score", "diversity", "uncertainty", "selected");
    for (const auto& r : rows) {
        std::printf("%-8zu %-14.6g %-14.6g %-14.6g %s\n", r.index, r.score, r.diversity_cue,
                    r.uncertainty_cue, r.selected ? "*" : "");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"Active adversarial domain adaptation experiments"};
    app.require_subcommand(1);
    app.set_version_flag("--version", std::string(AADA_CLI_VERSION));

    CommonFlags run_flags;
    auto* run = app.add_subcommand("run", "execute one config (every seed in it)");
    add_common(run, run_flags);

    CommonFlags grid_flags;
    auto* grid = app.add_subcommand("grid", "cross schemes x strategies x seeds");
    add_common(grid, grid_flags);

    std::vector<std::string> curve_inputs;
    std::string curve_out;
    auto* curves = app.add_subcommand("curves", "aggregate run logs into a curve table");
    curves->add_option("logs", curve_inputs, "runlog.json files or directories to search")->required();
    curves->add_option("--out", curve_out, "output file (default stdout)");

    std::string score_file;
    std::size_t top = 0;
    auto* inspect = app.add_subcommand("inspect-scores", "print a round's score file sorted by score");
    inspect->add_option("file", score_file, "scores/round_XX.csv")->required()->check(CLI::ExistingFile);
    inspect->add_option("--top", top, "only the first N rows");

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(run_flags);
        if (*grid) return cmd_grid(grid_flags);
        if (*curves) return cmd_curves(curve_inputs, curve_out);
        if (*inspect) return cmd_inspect(score_file, top);
    } catch (const ConfigError& e) {
        std::fprintf(stderr, "invalid config: %s\n", e.what());
        return 2;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 0;
}
