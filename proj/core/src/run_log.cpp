#include "aada/run_log.hpp"

#include "aada/errors.hpp"

#include <fstream>
#include <sstream>

namespace aada {

using nlohmann::json;

namespace {

json losses_json(const LossReport& l) {
    return {{"class", l.class_loss}, {"domain", l.domain_loss}, {"entropy", l.entropy_loss}};
}

LossReport losses_from(const json& j) {
    LossReport l;
    l.class_loss = j.at("class").get<double>();
    l.domain_loss = j.at("domain").get<double>();
    l.entropy_loss = j.at("entropy").get<double>();
    return l;
}

json round_json(const RoundRecord& r, bool include_timing) {
    json scores = json::array();
    for (const auto& c : r.selected_scores) {
        scores.push_back({{"index", c.index},
                          {"score", c.score},
                          {"diversity_cue", c.diversity_cue},
                          {"uncertainty_cue", c.uncertainty_cue}});
    }
    json epochs = json::array();
    for (const auto& e : r.training.epochs) {
        epochs.push_back({{"stage", e.stage},
                          {"epoch", e.epoch},
                          {"learning_rate", e.learning_rate},
                          {"loss", losses_json(e.mean)}});
    }
    json out = {{"round", r.round},
                {"strategy", r.strategy},
                {"selected", r.selected},
                {"selected_labels", r.selected_labels},
                {"selected_scores", scores},
                {"n_labeled", r.n_labeled},
                {"accuracy", r.accuracy},
                {"training", epochs}};
    if (include_timing) out["wall_clock_seconds"] = r.wall_clock_seconds;
    return out;
}

RoundRecord round_from(const json& j) {
    RoundRecord r;
    r.round = j.at("round").get<std::size_t>();
    r.strategy = j.at("strategy").get<std::string>();
    r.selected = j.at("selected").get<std::vector<std::size_t>>();
    r.selected_labels = j.at("selected_labels").get<std::vector<Label>>();
    for (const auto& c : j.at("selected_scores")) {
        r.selected_scores.push_back({c.at("index").get<std::size_t>(), c.at("score").get<double>(),
                                     c.at("diversity_cue").get<double>(),
                                     c.at("uncertainty_cue").get<double>()});
    }
    r.n_labeled = j.at("n_labeled").get<std::size_t>();
    r.accuracy = j.at("accuracy").get<double>();
    for (const auto& e : j.at("training")) {
        r.training.epochs.push_back({e.at("stage").get<std::string>(), e.at("epoch").get<std::size_t>(),
                                     e.at("learning_rate").get<double>(), losses_from(e.at("loss"))});
    }
    if (auto it = j.find("wall_clock_seconds"); it != j.end()) r.wall_clock_seconds = it->get<double>();
    return r;
}

} // namespace

json to_json(const RunLog& log, bool include_timing) {
    json rounds = json::array();
    for (const auto& r : log.rounds) rounds.push_back(round_json(r, include_timing));
    return {{"format", "aada-runlog"},
            {"version", 1},
            {"seed", log.seed},
            {"config", to_json(log.config)},
            {"environment",
             {{"library_version", log.environment.library_version},
              {"compiler", log.environment.compiler},
              {"platform", log.environment.platform},
              {"build_type", log.environment.build_type}}},
            {"data",
             {{"source", log.source_provenance},
              {"target", log.target_provenance},
              {"n_source", log.n_source},
              {"n_pool", log.n_pool},
              {"n_test", log.n_test},
              {"standardizer", {{"mean", log.standardizer.mean}, {"sd", log.standardizer.sd}}}}},
            {"rounds", rounds},
            {"labeled_target", log.labeled_target}};
}

RunLog run_log_from_json(const json& j) {
    try {
        if (j.at("format").get<std::string>() != "aada-runlog") throw FormatError("not a run log");
        if (j.at("version").get<int>() != 1) throw FormatError("unsupported run log version");
        RunLog log;
        log.seed = j.at("seed").get<std::uint64_t>();
        log.config = config_from_json(j.at("config"), RunConfig{});
        const auto& env = j.at("environment");
        log.environment = {env.at("library_version").get<std::string>(), env.at("compiler").get<std::string>(),
                           env.at("platform").get<std::string>(), env.at("build_type").get<std::string>()};
        const auto& data = j.at("data");
        log.source_provenance = data.at("source").get<std::string>();
        log.target_provenance = data.at("target").get<std::string>();
        log.n_source = data.at("n_source").get<std::size_t>();
        log.n_pool = data.at("n_pool").get<std::size_t>();
        log.n_test = data.at("n_test").get<std::size_t>();
        log.standardizer.mean = data.at("standardizer").at("mean").get<std::vector<double>>();
        log.standardizer.sd = data.at("standardizer").at("sd").get<std::vector<double>>();
        for (const auto& r : j.at("rounds")) log.rounds.push_back(round_from(r));
        log.labeled_target = j.at("labeled_target").get<std::vector<std::size_t>>();
        return log;
    } catch (const json::exception& e) {
        throw FormatError(std::string("run log: ") + e.what());
    }
}

std::string run_log_to_string(const RunLog& log, bool include_timing) {
    return to_json(log, include_timing).dump(1) + "\n";
}

void save_run_log(const RunLog& log, const std::string& path, bool include_timing) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << run_log_to_string(log, include_timing);
    if (!out) throw Error("write failed: " + path);
}

RunLog load_run_log(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot read " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw FormatError(path + ": " + e.what());
    }
    return run_log_from_json(j);
}

void save_timings(const RunLog& log, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot write " + path);
    out << "round,wall_clock_seconds\n";
    char buf[64];
    for (const auto& r : log.rounds) {
        std::snprintf(buf, sizeof buf, "%zu,%.6f\n", r.round, r.wall_clock_seconds);
        out << buf;
    }
}

} // namespace aada
