#include "aada/dann.hpp"

#include "aada/errors.hpp"

#include <numeric>

namespace aada {

namespace {

/// L_s u L_t with per-row domain labels.
struct LabeledPool {
    Matrix x;
    std::vector<Label> y;
    std::vector<int> domain;

    std::size_t size() const noexcept { return x.rows(); }

    LabeledBatch batch(std::span<const std::size_t> idx) const {
        LabeledBatch b;
        b.features = x.gather_rows(idx);
        b.class_labels.reserve(idx.size());
        b.domain_labels.reserve(idx.size());
        for (auto i : idx) {
            b.class_labels.push_back(y[i]);
            b.domain_labels.push_back(domain[i]);
        }
        return b;
    }
};

LabeledPool make_pool(const Matrix& x_a, const std::vector<Label>& y_a, int domain_a,
                      const Matrix& x_b, const std::vector<Label>& y_b, int domain_b) {
    LabeledPool p;
    p.x = vstack(x_a, x_b);
    p.y = y_a;
    p.y.insert(p.y.end(), y_b.begin(), y_b.end());
    p.domain.assign(x_a.rows(), domain_a);
    p.domain.resize(p.y.size(), domain_b);
    return p;
}

LabeledPool source_only(const TrainingPools& pools) {
    return make_pool(pools.labeled_source_x, pools.labeled_source_y, 1, Matrix{}, {}, 1);
}

LabeledPool target_only(const TrainingPools& pools) {
    return make_pool(Matrix{}, {}, 1, pools.labeled_target_x, pools.labeled_target_y, 1);
}

LabeledPool pooled(const TrainingPools& pools, LabeledTargetSide side) {
    return make_pool(pools.labeled_source_x, pools.labeled_source_y, 1, pools.labeled_target_x,
                     pools.labeled_target_y, side == LabeledTargetSide::Labeled ? 1 : 0);
}

/// Shuffled passes over [0, n) handed out in batches; reshuffles when exhausted.
class BatchCycler {
public:
    BatchCycler(std::size_t n, std::size_t batch_size) : order_(n), batch_(batch_size) {
        std::iota(order_.begin(), order_.end(), std::size_t{0});
        pos_ = n;
    }

    std::size_t batches_per_pass() const noexcept {
        return order_.empty() ? 0 : (order_.size() + batch_ - 1) / batch_;
    }

    std::vector<std::size_t> next(Rng& rng) {
        if (pos_ >= order_.size()) {
            rng.shuffle(order_);
            pos_ = 0;
        }
        const std::size_t end = std::min(order_.size(), pos_ + batch_);
        std::vector<std::size_t> idx(order_.begin() + static_cast<std::ptrdiff_t>(pos_),
                                     order_.begin() + static_cast<std::ptrdiff_t>(end));
        pos_ = end;
        return idx;
    }

private:
    std::vector<std::size_t> order_;
    std::size_t batch_;
    std::size_t pos_;
};

UnlabeledBatch draw_unlabeled(const Matrix& u, std::size_t count, Rng& rng) {
    if (u.rows() == 0) return UnlabeledBatch::target(Matrix(0, u.cols()));
    std::vector<std::size_t> idx(count);
    for (auto& i : idx) i = rng.index(u.rows());
    return UnlabeledBatch::target(u.gather_rows(idx));
}

/// Splits labeled rows by domain label and appends the unlabeled rows to side zero.
LossReport discriminator_update(DannModel& model, const LabeledBatch& labeled,
                                const UnlabeledBatch& unlabeled) {
    std::vector<std::size_t> one;
    std::vector<std::size_t> zero;
    for (std::size_t i = 0; i < labeled.domain_labels.size(); ++i) {
        (labeled.domain_labels[i] == 1 ? one : zero).push_back(i);
    }
    Matrix side_zero = labeled.features.gather_rows(zero);
    if (side_zero.rows() == 0) side_zero = Matrix(0, labeled.features.cols());
    side_zero = vstack(side_zero, unlabeled.features);
    return discriminator_step(model, labeled.features.gather_rows(one), side_zero);
}

class EpochAccumulator {
public:
    void add(const LossReport& r) {
        sum_.class_loss += r.class_loss;
        sum_.domain_loss += r.domain_loss;
        sum_.entropy_loss += r.entropy_loss;
        ++count_;
    }
    EpochLoss finish(std::string stage, std::size_t epoch, double lr) const {
        EpochLoss e{std::move(stage), epoch, lr, {}};
        if (count_ > 0) {
            const double n = static_cast<double>(count_);
            e.mean = {sum_.class_loss / n, sum_.domain_loss / n, sum_.entropy_loss / n};
        }
        return e;
    }

private:
    LossReport sum_;
    std::size_t count_ = 0;
};

void check_pools(const DannModel& model, const TrainingPools& pools) {
    const auto check = [&](const Matrix& m, const char* name) {
        if (m.rows() > 0 && m.cols() != model.dims.input_dim) {
            throw DimensionError(name, "has " + std::to_string(m.cols()) + " columns, model expects " +
                                           std::to_string(model.dims.input_dim));
        }
    };
    check(pools.labeled_source_x, "labeled_source_x");
    check(pools.labeled_target_x, "labeled_target_x");
    check(pools.unlabeled_target_x, "unlabeled_target_x");
    if (pools.labeled_source_x.rows() != pools.labeled_source_y.size() ||
        pools.labeled_target_x.rows() != pools.labeled_target_y.size()) {
        throw DimensionError("TrainingPools", "label counts do not match feature rows");
    }
}

void check_schedule(const TrainSchedule& s) {
    if (s.batch_size == 0) throw SchemeError("schedule.batch_size must be positive");
    if (s.phases.empty()) throw SchemeError("schedule has no phases");
}

void fresh_start(DannModel& model, const TrainOptions& options, Rng& rng) {
    Rng init = rng.derive(0);
    if (options.warm_start) {
        model.reset_optimizers();
    } else {
        model.reinitialize(init);
    }
}

/// Adversarial and Joint: batches of L_s u L_t with matched U_t batches.
void train_pooled(DannModel& model, const TrainingPools& pools, const TrainOptions& options,
                  Rng& rng, TrainingReport& report) {
    const LabeledPool pool = pooled(pools, options.labeled_target_side);
    BatchCycler cycler(pool.size(), options.schedule.batch_size);
    const bool adversarial = options.scheme == TrainScheme::Adversarial;
    const std::string stage = adversarial ? "adversarial" : "joint";
    std::size_t epoch_no = 0;
    for (const auto& phase : options.schedule.phases) {
        model.set_learning_rate(phase.learning_rate);
        for (std::size_t e = 0; e < phase.epochs; ++e) {
            EpochAccumulator acc;
            for (std::size_t it = 0; it < cycler.batches_per_pass(); ++it) {
                const auto idx = cycler.next(rng);
                const LabeledBatch lb = pool.batch(idx);
                const UnlabeledBatch ub = draw_unlabeled(pools.unlabeled_target_x, idx.size(), rng);
                acc.add(adversarial ? adversarial_step(model, lb, ub)
                                    : supervised_step(model, lb, &ub));
            }
            report.epochs.push_back(acc.finish(stage, epoch_no++, phase.learning_rate));
        }
    }
}

/// Supervised steps on `classifier_pool` (may be empty) interleaved with discriminator
/// steps on (L_s u L_t) vs U_t. One epoch is one pass over L_s u L_t.
void train_classifier_and_discriminator(DannModel& model, const TrainingPools& pools,
                                        const TrainOptions& options,
                                        const LabeledPool& classifier_pool, double lr_factor,
                                        const std::string& stage, Rng& rng,
                                        TrainingReport& report) {
    const LabeledPool disc_pool = pooled(pools, options.labeled_target_side);
    BatchCycler disc_cycler(disc_pool.size(), options.schedule.batch_size);
    BatchCycler cls_cycler(classifier_pool.size(), options.schedule.batch_size);
    const std::size_t iterations =
        std::max(disc_cycler.batches_per_pass(), cls_cycler.batches_per_pass());
    const bool have_unlabeled = pools.unlabeled_target_x.rows() > 0;
    std::size_t epoch_no = 0;
    for (const auto& phase : options.schedule.phases) {
        const double lr = phase.learning_rate * lr_factor;
        model.set_learning_rate(lr);
        for (std::size_t e = 0; e < phase.epochs; ++e) {
            EpochAccumulator acc;
            for (std::size_t it = 0; it < iterations; ++it) {
                LossReport r;
                if (classifier_pool.size() > 0) {
                    r.class_loss = supervised_step(model, classifier_pool.batch(cls_cycler.next(rng)))
                                       .class_loss;
                }
                if (have_unlabeled && disc_pool.size() > 0) {
                    const auto idx = disc_cycler.next(rng);
                    const LabeledBatch lb = disc_pool.batch(idx);
                    const UnlabeledBatch ub =
                        draw_unlabeled(pools.unlabeled_target_x, idx.size(), rng);
                    r.domain_loss = discriminator_update(model, lb, ub).domain_loss;
                }
                acc.add(r);
            }
            report.epochs.push_back(acc.finish(stage, epoch_no++, lr));
        }
    }
}

void train_supervised_only(DannModel& model, const LabeledPool& pool, const TrainSchedule& schedule,
                           const std::string& stage, Rng& rng, TrainingReport& report) {
    BatchCycler cycler(pool.size(), schedule.batch_size);
    std::size_t epoch_no = 0;
    for (const auto& phase : schedule.phases) {
        model.set_learning_rate(phase.learning_rate);
        for (std::size_t e = 0; e < phase.epochs; ++e) {
            EpochAccumulator acc;
            for (std::size_t it = 0; it < cycler.batches_per_pass(); ++it) {
                acc.add(supervised_step(model, pool.batch(cycler.next(rng))));
            }
            report.epochs.push_back(acc.finish(stage, epoch_no++, phase.learning_rate));
        }
    }
}

} // namespace

TrainingReport train_round(DannModel& model, const TrainingPools& pools,
                           const TrainOptions& options, Rng& rng) {
    check_pools(model, pools);
    check_schedule(options.schedule);
    const std::size_t n_s = pools.labeled_source_x.rows();
    const std::size_t n_t = pools.labeled_target_x.rows();
    switch (options.scheme) {
    case TrainScheme::Adversarial:
    case TrainScheme::Joint:
        if (n_s + n_t == 0) {
            throw SchemeError(std::string(to_string(options.scheme)) +
                              ": no labeled data in L_s u L_t");
        }
        break;
    case TrainScheme::FineTune:
        if (n_s == 0) throw SchemeError("finetune: L_s is empty, nothing to pre-train on");
        break;
    case TrainScheme::TargetOnly:
        if (n_t == 0) throw SchemeError("target_only: L_t is empty");
        break;
    }

    fresh_start(model, options, rng);
    TrainingReport report;
    switch (options.scheme) {
    case TrainScheme::Adversarial:
    case TrainScheme::Joint: {
        Rng batches = rng.derive(1);
        train_pooled(model, pools, options, batches, report);
        break;
    }
    case TrainScheme::FineTune: {
        Rng pretrain = rng.derive(1);
        train_supervised_only(model, source_only(pools), options.schedule, "pretrain", pretrain,
                              report);
        if (options.after_pretrain) options.after_pretrain(model);
        model.reset_optimizers();
        Rng tune = rng.derive(2);
        train_classifier_and_discriminator(model, pools, options, target_only(pools),
                                           options.schedule.finetune_lr_factor, "finetune", tune,
                                           report);
        break;
    }
    case TrainScheme::TargetOnly: {
        Rng batches = rng.derive(1);
        train_classifier_and_discriminator(model, pools, options, target_only(pools), 1.0,
                                           "target_only", batches, report);
        break;
    }
    }
    return report;
}

TrainingReport train_discriminator_only(DannModel& model, const TrainingPools& pools,
                                        const TrainOptions& options, Rng& rng) {
    check_pools(model, pools);
    check_schedule(options.schedule);
    fresh_start(model, options, rng);
    TrainingReport report;
    Rng batches = rng.derive(1);
    train_classifier_and_discriminator(model, pools, options, LabeledPool{}, 1.0,
                                       "discriminator", batches, report);
    return report;
}

} // namespace aada
