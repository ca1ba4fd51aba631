#include "aada/active_loop.hpp"

#include "aada/errors.hpp"

#include <algorithm>
#include <chrono>
#include <numeric>

namespace aada {

// ---- Oracle -------------------------------------------------------------------------

Oracle::Oracle(std::vector<Label> labels, std::size_t num_classes) : labels_(std::move(labels)) {
    for (std::size_t i = 0; i < labels_.size(); ++i) {
        if (labels_[i] < 0 || static_cast<std::size_t>(labels_[i]) >= num_classes) {
            throw LabelError("Oracle: label " + std::to_string(labels_[i]) + " at pool index " +
                             std::to_string(i) + " outside [0, " + std::to_string(num_classes) + ")");
        }
    }
}

Label Oracle::query(std::size_t pool_index) const {
    if (pool_index >= labels_.size()) {
        throw BudgetError("Oracle: pool index " + std::to_string(pool_index) + " out of range");
    }
    return labels_[pool_index];
}

// ---- data -------------------------------------------------------------------------------

ExperimentData prepare_experiment_data(const DatasetConfig& config, std::uint64_t run_seed) {
    DomainDataset source;
    DomainDataset target;
    const std::uint64_t split_seed = Rng(run_seed).derive(3, config.shift.seed).seed();
    if (config.kind == DatasetKind::Synthetic) {
        ShiftSpec spec = config.shift;
        spec.seed = mix_seed(mix_seed(config.shift.seed) + run_seed);
        auto pair = gen_shifted_pair(spec);
        source = std::move(pair.source);
        target = std::move(pair.target);
    } else {
        source = load_idx(config.source_images, config.source_labels, DomainTag::Source);
        target = load_idx(config.target_images, config.target_labels, DomainTag::Target);
        if (source.features.cols() != target.features.cols()) {
            throw DimensionError("dataset", "source and target images have different sizes");
        }
        if (config.max_source > 0) source = subsample(source, config.max_source, split_seed + 1);
        if (config.max_target > 0) target = subsample(target, config.max_target, split_seed + 2);
        const auto classes = std::max(source.num_classes, target.num_classes);
        source.num_classes = target.num_classes = classes;
    }
    source.validate();
    target.validate();

    ExperimentData data;
    auto split = split_target(target, config.test_fraction, split_seed);
    data.source = std::move(source);
    data.target_pool = std::move(split.pool);
    data.target_test = std::move(split.test);
    data.pool_origin = std::move(split.pool_origin);
    data.test_origin = std::move(split.test_origin);
    data.standardizer = standardize(data.source, {&data.target_pool, &data.target_test});
    return data;
}

// ---- ActiveState --------------------------------------------------------------------

ActiveState ActiveState::initial(std::size_t n_source, std::size_t n_pool) {
    ActiveState s;
    s.labeled_source.resize(n_source);
    std::iota(s.labeled_source.begin(), s.labeled_source.end(), std::size_t{0});
    s.unlabeled_target.resize(n_pool);
    std::iota(s.unlabeled_target.begin(), s.unlabeled_target.end(), std::size_t{0});
    return s;
}

std::vector<std::size_t> ActiveState::acquire(std::span<const std::size_t> positions,
                                              const Oracle& oracle) {
    std::vector<bool> take(unlabeled_target.size(), false);
    std::vector<std::size_t> picked;
    picked.reserve(positions.size());
    for (auto p : positions) {
        if (p >= unlabeled_target.size()) {
            throw BudgetError("acquire: position " + std::to_string(p) + " outside U_t of size " +
                              std::to_string(unlabeled_target.size()));
        }
        if (take[p]) throw BudgetError("acquire: position " + std::to_string(p) + " selected twice");
        take[p] = true;
        picked.push_back(unlabeled_target[p]);
    }
    for (auto idx : picked) {
        labeled_target.push_back(idx);
        labeled_target_labels.push_back(oracle.query(idx));
    }
    std::vector<std::size_t> remaining;
    remaining.reserve(unlabeled_target.size() - picked.size());
    for (std::size_t i = 0; i < unlabeled_target.size(); ++i) {
        if (!take[i]) remaining.push_back(unlabeled_target[i]);
    }
    unlabeled_target = std::move(remaining);
    return picked;
}

void ActiveState::check_invariants(std::size_t n_pool, const Oracle& oracle) const {
    std::vector<int> seen(n_pool, 0);
    for (auto i : labeled_target) {
        if (i >= n_pool) throw Error("ActiveState: L_t index out of pool range");
        ++seen[i];
    }
    for (auto i : unlabeled_target) {
        if (i >= n_pool) throw Error("ActiveState: U_t index out of pool range");
        ++seen[i];
    }
    for (std::size_t i = 0; i < n_pool; ++i) {
        if (seen[i] != 1) {
            throw Error("ActiveState: pool index " + std::to_string(i) + " appears " +
                        std::to_string(seen[i]) + " times across L_t and U_t");
        }
    }
    if (labeled_target_labels.size() != labeled_target.size()) {
        throw Error("ActiveState: L_t label count mismatch");
    }
    for (std::size_t k = 0; k < labeled_target.size(); ++k) {
        if (labeled_target_labels[k] != oracle.query(labeled_target[k])) {
            throw Error("ActiveState: stored label disagrees with the oracle");
        }
    }
}

TrainingPools ActiveState::pools(const ExperimentData& data) const {
    TrainingPools p;
    p.labeled_source_x = data.source.features.gather_rows(labeled_source);
    p.labeled_source_y.reserve(labeled_source.size());
    for (auto i : labeled_source) p.labeled_source_y.push_back(data.source.labels[i]);
    const std::size_t d = data.target_pool.features.cols();
    p.labeled_target_x = labeled_target.empty() ? Matrix(0, d)
                                                : data.target_pool.features.gather_rows(labeled_target);
    p.labeled_target_y = labeled_target_labels;
    p.unlabeled_target_x = unlabeled_target.empty()
                               ? Matrix(0, d)
                               : data.target_pool.features.gather_rows(unlabeled_target);
    return p;
}

// ---- evaluation ---------------------------------------------------------------------------

double evaluate(const DannModel& model, const DomainDataset& test) {
    if (test.size() == 0) throw Error("evaluate: empty test set");
    const Matrix logits = predict(model.class_predictor, extract_features(model, test.features));
    std::size_t correct = 0;
    for (std::size_t r = 0; r < logits.rows(); ++r) {
        const auto row = logits.row(r);
        const auto best = static_cast<Label>(std::max_element(row.begin(), row.end()) - row.begin());
        if (best == test.labels[r]) ++correct;
    }
    return static_cast<double>(correct) / static_cast<double>(test.size());
}

EnvironmentStamp environment_stamp() {
    EnvironmentStamp e;
#ifdef AADA_VERSION_STRING
    e.library_version = AADA_VERSION_STRING;
#endif
#if defined(__clang__)
    e.compiler = "clang " __clang_version__;
#elif defined(__GNUC__)
    e.compiler = "gcc " __VERSION__;
#else
    e.compiler = "unknown";
#endif
#if defined(__linux__)
    e.platform = "linux";
#elif defined(__APPLE__)
    e.platform = "darwin";
#elif defined(_WIN32)
    e.platform = "windows";
#else
    e.platform = "unknown";
#endif
#if defined(__x86_64__)
    e.platform += "-x86_64";
#elif defined(__aarch64__)
    e.platform += "-aarch64";
#endif
#ifdef NDEBUG
    e.build_type = "release";
#else
    e.build_type = "debug";
#endif
    return e;
}

// ---- active-learning loop ---------------------------------------------------------------------------

namespace {

ModelDims dims_for(const RunConfig& config, const ExperimentData& data) {
    ModelDims d;
    d.input_dim = data.source.features.cols();
    d.feature_hidden = config.model.feature_hidden;
    d.feature_dim = config.model.feature_dim;
    d.classifier_hidden = config.model.classifier_hidden;
    d.discriminator_hidden = config.model.discriminator_hidden;
    d.num_classes = std::max({data.source.num_classes, data.target_pool.num_classes,
                              data.target_test.num_classes, std::size_t{2}});
    return d;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

} // namespace

RunLog run_aada(const RunConfig& config, std::uint64_t seed, const ExperimentData& data,
                const Oracle& oracle, const RoundObserver& observer) {
    config.validate();
    const std::size_t n_pool = data.target_pool.size();
    if (oracle.size() != n_pool) throw Error("run_aada: oracle does not cover the target pool");
    if (config.total_budget() > n_pool) {
        throw BudgetError("run_aada: total budget " + std::to_string(config.total_budget()) +
                          " exceeds the target pool of " + std::to_string(n_pool));
    }

    RunLog log;
    log.config = config;
    log.config.seeds = {seed};
    log.seed = seed;
    log.environment = environment_stamp();
    log.standardizer = data.standardizer;
    log.source_provenance = data.source.provenance;
    log.target_provenance = data.target_pool.provenance;
    log.n_source = data.source.size();
    log.n_pool = n_pool;
    log.n_test = data.target_test.size();

    const Rng root(seed);
    Rng init_rng = root.derive(0);
    DannModel model = DannModel::create(dims_for(config, data), config.lambda_adv, config.lambda_ent,
                                        init_rng, AdamHyper{config.schedule.phases.front().learning_rate});
    TrainOptions options;
    options.scheme = config.scheme;
    options.schedule = config.schedule;
    options.labeled_target_side = config.labeled_target_side;
    options.warm_start = config.warm_start;

    ActiveState state = ActiveState::initial(data.source.size(), n_pool);

    const auto train = [&](std::size_t round) {
        Rng round_rng = root.derive(1, round);
        TrainOptions opts = options;
        // Round 0 always starts from the initial draw.
        if (round == 0) opts.warm_start = false;
        const TrainingPools pools = state.pools(data);
        if (config.scheme == TrainScheme::TargetOnly && pools.labeled_target_x.rows() == 0) {
            return train_discriminator_only(model, pools, opts, round_rng);
        }
        return train_round(model, pools, opts, round_rng);
    };

    {
        const auto t0 = std::chrono::steady_clock::now();
        RoundRecord rec;
        rec.round = 0;
        rec.training = train(0);
        rec.accuracy = evaluate(model, data.target_test);
        rec.wall_clock_seconds = seconds_since(t0);
        state.history.push_back(rec);
        if (observer) observer({state.history.back(), model, nullptr, state, root});
    }

    for (std::size_t round = 1; round <= config.max_round; ++round) {
        const auto t0 = std::chrono::steady_clock::now();
        const std::size_t b = config.budget_for_round(round);
        const TrainingPools before = state.pools(data);
        const SelectionInputs inputs =
            make_selection_inputs(model, before.unlabeled_target_x, before.labeled_target_x);
        const Strategy strategy = (config.warmup_random_first_round && round == 1)
                                      ? Strategy::Random
                                      : config.strategy;
        const Selection selection = select(strategy, inputs, b, root.derive(2, round).seed());

        RoundRecord rec;
        rec.round = round;
        rec.strategy = std::string(to_string(selection.applied));
        for (auto pos : selection.indices) {
            if (pos < selection.candidates.size()) rec.selected_scores.push_back(selection.candidates[pos]);
        }
        rec.selected = state.acquire(selection.indices, oracle);
        for (auto idx : rec.selected) rec.selected_labels.push_back(oracle.query(idx));
        state.round = round;
        state.check_invariants(n_pool, oracle);

        rec.training = train(round);
        rec.n_labeled = state.labeled_target.size();
        rec.accuracy = evaluate(model, data.target_test);
        rec.wall_clock_seconds = seconds_since(t0);
        state.history.push_back(rec);
        if (observer) observer({state.history.back(), model, &selection, state, root});
    }

    log.rounds = state.history;
    log.labeled_target = state.labeled_target;
    return log;
}

RunLog run_aada(const RunConfig& config, std::uint64_t seed, const RoundObserver& observer) {
    config.validate();
    const ExperimentData data = prepare_experiment_data(config.dataset, seed);
    return run_aada(config, seed, data, Oracle::from_dataset(data.target_pool), observer);
}

} // namespace aada
