#pragma once

#include "aada/dann.hpp"
#include "aada/data.hpp"
#include "aada/sampling.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace aada {

enum class DatasetKind { Synthetic, Idx };

struct DatasetConfig {
    DatasetKind kind = DatasetKind::Synthetic;
    ShiftSpec shift;
    std::string source_images;
    std::string source_labels;
    std::string target_images;
    std::string target_labels;
    /// Subsample caps for IDX data; 0 keeps everything.
    std::size_t max_source = 0;
    std::size_t max_target = 0;
    double test_fraction = 1.0 / 3.0;

    friend bool operator==(const DatasetConfig&, const DatasetConfig&) = default;
};

/// Hidden sizes of the three heads; input width and class count come from the data.
struct ArchitectureConfig {
    std::vector<std::size_t> feature_hidden{32};
    std::size_t feature_dim = 32;
    std::vector<std::size_t> classifier_hidden{};
    std::vector<std::size_t> discriminator_hidden{32};

    friend bool operator==(const ArchitectureConfig&, const ArchitectureConfig&) = default;
};

struct GridConfig {
    std::vector<TrainScheme> schemes;
    std::vector<Strategy> strategies;

    friend bool operator==(const GridConfig&, const GridConfig&) = default;
};

/// Declarative description of one experiment (or a grid of them).
struct RunConfig {
    std::string preset = "toy";
    DatasetConfig dataset;
    ArchitectureConfig model;
    TrainScheme scheme = TrainScheme::Adversarial;
    Strategy strategy = Strategy::ImportanceWeight;
    double lambda_adv = 0.1;
    double lambda_ent = 0.1;
    TrainSchedule schedule;
    /// One entry per round, or a single entry repeated for every round.
    std::vector<std::int64_t> budgets{5};
    std::size_t max_round = 10;
    std::vector<std::uint64_t> seeds{1};
    std::string output_dir = "runs";
    bool warm_start = false;
    /// Use Random selection in round 1 regardless of strategy.
    bool warmup_random_first_round = false;
    LabeledTargetSide labeled_target_side = LabeledTargetSide::Labeled;
    /// 0 means one worker per available core.
    std::size_t workers = 0;
    GridConfig grid;

    /// Throws ConfigError naming the first offending field.
    void validate() const;
    /// Budget of round `r` (1-based).
    std::size_t budget_for_round(std::size_t r) const;
    std::size_t total_budget() const;

    friend bool operator==(const RunConfig&, const RunConfig&) = default;
};

/// Named starting points: "toy" (desk-scale defaults) and "paper-digits"
/// (batch 128, 3 x 20 epochs at {2e-4, 1e-4, 5e-5}, budget 10 for 30 rounds).
RunConfig preset_config(std::string_view name);
const std::vector<std::string>& preset_names();

nlohmann::json to_json(const RunConfig& config);
/// Overlays `j` on `base`. Unknown keys anywhere are rejected with a ConfigError naming the
/// dotted path. The result is validated.
RunConfig config_from_json(const nlohmann::json& j, RunConfig base);
RunConfig config_from_json(const nlohmann::json& j);
/// Reads a JSON config file; the `preset` key (or `fallback_preset`) supplies the base.
RunConfig load_config(const std::string& path, std::string_view fallback_preset = "toy");

} // namespace aada
