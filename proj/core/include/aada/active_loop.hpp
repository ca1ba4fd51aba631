#pragma once

#include "aada/config.hpp"
#include "aada/dann.hpp"
#include "aada/data.hpp"
#include "aada/sampling.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace aada {

/// Simulated annotator: ground truth for every row of the target pool.
class Oracle {
public:
    Oracle(std::vector<Label> labels, std::size_t num_classes);
    static Oracle from_dataset(const DomainDataset& pool) {
        return Oracle(pool.labels, pool.num_classes);
    }

    Label query(std::size_t pool_index) const;
    std::size_t size() const noexcept { return labels_.size(); }

private:
    std::vector<Label> labels_;
};

/// Source data, the target pool the loop selects from, and the held-out target test set.
struct ExperimentData {
    DomainDataset source;
    DomainDataset target_pool;
    DomainDataset target_test;
    std::vector<std::size_t> pool_origin;
    std::vector<std::size_t> test_origin;
    Standardizer standardizer;
};

/// Builds (or loads), splits and standardises the data. Synthetic data is generated from
/// the dataset seed mixed with the run seed.
ExperimentData prepare_experiment_data(const DatasetConfig& config, std::uint64_t run_seed);

struct RoundRecord {
    std::size_t round = 0;
    /// Strategy actually applied (after fallbacks); empty for round 0.
    std::string strategy;
    std::vector<std::size_t> selected; ///< target-pool indices
    std::vector<Label> selected_labels;
    std::vector<ScoredCandidate> selected_scores; ///< cue breakdown of the picks
    std::size_t n_labeled = 0;
    double accuracy = 0.0;
    TrainingReport training;
    double wall_clock_seconds = 0.0;
};

/// Partition of the data at the current round. L_s and L_t/U_t index the source set and
/// the target pool respectively.
struct ActiveState {
    std::vector<std::size_t> labeled_source;
    std::vector<std::size_t> labeled_target;
    std::vector<std::size_t> unlabeled_target; ///< ascending pool indices
    std::vector<Label> labeled_target_labels;
    std::size_t round = 0;
    std::vector<RoundRecord> history;

    static ActiveState initial(std::size_t n_source, std::size_t n_pool);

    /// Moves U_t positions `positions` into L_t with oracle labels; returns the pool indices.
    std::vector<std::size_t> acquire(std::span<const std::size_t> positions, const Oracle& oracle);

    /// Throws unless L_t and U_t partition [0, n_pool) and L_t labels match the oracle.
    void check_invariants(std::size_t n_pool, const Oracle& oracle) const;

    TrainingPools pools(const ExperimentData& data) const;
};

struct EnvironmentStamp {
    std::string library_version;
    std::string compiler;
    std::string platform;
    std::string build_type;
};

EnvironmentStamp environment_stamp();

struct RunLog {
    RunConfig config;   ///< echo with `seeds` = {seed}
    std::uint64_t seed = 0;
    EnvironmentStamp environment;
    Standardizer standardizer;
    std::string source_provenance;
    std::string target_provenance;
    std::size_t n_source = 0;
    std::size_t n_pool = 0;
    std::size_t n_test = 0;
    std::vector<RoundRecord> rounds;
    std::vector<std::size_t> labeled_target;
};

/// Per-round hook: the trained model, the selection that preceded training (empty in
/// round 0), and the state after acquisition.
struct RoundEvent {
    const RoundRecord& record;
    const DannModel& model;
    const Selection* selection;
    const ActiveState& state;
    const Rng& rng;
};

using RoundObserver = std::function<void(const RoundEvent&)>;

/// Multiclass accuracy with argmax ties broken towards the lower class index.
double evaluate(const DannModel& model, const DomainDataset& test);

/// Train on (L_s, U_t), then for each round: select b from U_t, query the oracle, move the
/// picks into L_t, retrain, evaluate on the held-out test set.
RunLog run_aada(const RunConfig& config, std::uint64_t seed, const ExperimentData& data,
                const Oracle& oracle, const RoundObserver& observer = {});

/// Convenience overload: prepares the data from `config.dataset` first.
RunLog run_aada(const RunConfig& config, std::uint64_t seed, const RoundObserver& observer = {});

// ---- strategy comparison ---------------------------------------------------------------

struct CurvePoint {
    std::size_t round = 0;
    std::size_t n_labeled = 0;
    std::string scheme;
    std::string strategy;
    double mean_acc = 0.0;
    double sd_acc = 0.0; ///< sample standard deviation; 0 for a single seed
    std::size_t n_seeds = 0;
};

/// Mean / SD of accuracy per (scheme, strategy, round). Logs of the same cell must share
/// every config field except the seed. Rows are ordered by scheme, strategy, round.
std::vector<CurvePoint> aggregate_curves(const std::vector<RunLog>& logs);

struct GridCell {
    TrainScheme scheme;
    Strategy strategy;
    std::uint64_t seed;
};

struct GridCellResult {
    GridCell cell;
    std::optional<RunLog> log;
    std::string error; ///< non-empty if the cell failed
};

struct GridResult {
    std::vector<GridCellResult> cells; ///< in grid order: scheme-major, then strategy, then seed
    std::vector<CurvePoint> curves;
    std::size_t failures() const;
};

/// Runs every (scheme, strategy, seed) cell on a bounded worker pool. A failing cell is
/// reported in its result without stopping the others.
GridResult compare_strategies(const RunConfig& base, const std::vector<TrainScheme>& schemes,
                              const std::vector<Strategy>& strategies,
                              const std::vector<std::uint64_t>& seeds, std::size_t workers,
                              const std::function<void(const GridCell&, const RunLog&)>& on_done = {});

/// Runs `task(i)` for i in [0, n) on at most `workers` threads (0 = hardware concurrency).
void parallel_for(std::size_t n, std::size_t workers, const std::function<void(std::size_t)>& task);

} // namespace aada
