#include "../support.hpp"

#include "aada/dann.hpp"
#include "aada/data.hpp"
#include "aada/errors.hpp"

#include <gtest/gtest.h>

using namespace aada;
using namespace aada::testing;

namespace {

struct Batches {
    LabeledBatch labeled;
    UnlabeledBatch unlabeled;
};

Batches make_batches(Rng& rng, std::size_t n = 12) {
    Batches b;
    b.labeled.features = random_matrix(n, 2, rng);
    for (std::size_t i = 0; i < n; ++i) {
        b.labeled.class_labels.push_back(static_cast<Label>(i % 2));
        b.labeled.domain_labels.push_back(1);
    }
    b.unlabeled = UnlabeledBatch::target(random_matrix(n, 2, rng));
    return b;
}

TrainingPools moons_pools(std::size_t n_lt = 10) {
    ShiftSpec spec;
    spec.n_source = 300;
    spec.n_target = 200;
    spec.seed = 3;
    auto pair = gen_shifted_pair(spec);
    TrainingPools p;
    p.labeled_source_x = pair.source.features;
    p.labeled_source_y = pair.source.labels;
    std::vector<std::size_t> lt(n_lt), ut;
    for (std::size_t i = 0; i < n_lt; ++i) lt[i] = i;
    for (std::size_t i = n_lt; i < pair.target.size(); ++i) ut.push_back(i);
    p.labeled_target_x = n_lt ? pair.target.features.gather_rows(lt) : Matrix(0, 2);
    for (auto i : lt) p.labeled_target_y.push_back(pair.target.labels[i]);
    p.unlabeled_target_x = pair.target.features.gather_rows(ut);
    return p;
}

TrainOptions quick_options(TrainScheme scheme) {
    TrainOptions o;
    o.scheme = scheme;
    o.schedule.phases = {{3, 1e-3}};
    o.schedule.batch_size = 32;
    return o;
}

} // namespace

TEST(DannModel, CreateShapesHeads) {
    Rng rng(1);
    ModelDims d;
    d.input_dim = 5;
    d.num_classes = 4;
    const auto m = DannModel::create(d, 0.1, 0.1, rng);
    EXPECT_NO_THROW(m.validate());
    EXPECT_EQ(m.feature_extractor.input_dim(), 5u);
    EXPECT_EQ(m.feature_extractor.output_dim(), d.feature_dim);
    EXPECT_EQ(m.class_predictor.output_dim(), 4u);
    EXPECT_EQ(m.discriminator.output_dim(), 1u);
    EXPECT_EQ(m.feature_extractor.layers().back().activation, Activation::ReLU);
    EXPECT_EQ(m.class_predictor.layers().back().activation, Activation::Identity);
}

TEST(DannModel, NegativeLambdaRejected) {
    Rng rng(1);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, rng);
    m.lambda_adv = -1.0;
    EXPECT_THROW(m.validate(), Error);
}

TEST(Steps, ZeroLambdasMakeAdversarialEqualSupervised) {
    Rng rng(5);
    auto b = make_batches(rng);
    Rng init(9);
    auto a = DannModel::create(ModelDims{}, 0.0, 0.0, init);
    auto s = a;
    for (int i = 0; i < 5; ++i) {
        adversarial_step(a, b.labeled, b.unlabeled);
        supervised_step(s, b.labeled, &b.unlabeled);
    }
    EXPECT_TRUE(a.feature_extractor == s.feature_extractor);
    EXPECT_TRUE(a.class_predictor == s.class_predictor);
    EXPECT_TRUE(a.discriminator == s.discriminator);
}

TEST(Steps, DiscriminatorStepTouchesOnlyDiscriminator) {
    Rng rng(6);
    Rng init(2);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    const auto before = m;
    discriminator_step(m, random_matrix(8, 2, rng), random_matrix(8, 2, rng));
    EXPECT_TRUE(m.feature_extractor == before.feature_extractor);
    EXPECT_TRUE(m.class_predictor == before.class_predictor);
    EXPECT_FALSE(m.discriminator == before.discriminator);
}

TEST(Steps, SupervisedWithoutDiscriminatorBatchLeavesDiscriminator) {
    Rng rng(7);
    auto b = make_batches(rng);
    Rng init(3);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    const auto before = m;
    supervised_step(m, b.labeled);
    EXPECT_TRUE(m.discriminator == before.discriminator);
    EXPECT_FALSE(m.class_predictor == before.class_predictor);
}

TEST(Steps, EntropyTermOnlyWhenWeighted) {
    Rng rng(8);
    auto b = make_batches(rng);
    Rng init(4);
    auto m = DannModel::create(ModelDims{}, 0.0, 0.0, init);
    const auto g0 = compute_gradients(m, b.labeled, &b.unlabeled, StepMode::Adversarial);
    m.lambda_ent = 0.5;
    const auto g1 = compute_gradients(m, b.labeled, &b.unlabeled, StepMode::Adversarial);
    EXPECT_EQ(g0.losses.entropy_loss, g1.losses.entropy_loss);
    EXPECT_NE(g0.classifier.layers[0].bias, g1.classifier.layers[0].bias);
}

TEST(Inference, ProbabilitiesAreWellFormed) {
    Rng rng(10);
    Rng init(5);
    const auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    const Matrix x = random_matrix(20, 2, rng, 3.0);
    const auto out = infer(m, x);
    EXPECT_EQ(out.features, extract_features(m, x));
    EXPECT_EQ(out.class_probs, predict_class_probs(m, x));
    EXPECT_EQ(out.domain_probs, predict_domain_prob(m, x));
    for (double p : out.domain_probs) {
        EXPECT_GE(p, kDomainProbFloor);
        EXPECT_LE(p, 1.0 - kDomainProbFloor);
    }
    for (std::size_t i = 0; i < 20; ++i) {
        EXPECT_NEAR(out.class_probs(i, 0) + out.class_probs(i, 1), 1.0, 1e-12);
    }
}

TEST(TrainRound, SchemeDataIncompatibilities) {
    Rng init(1);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    Rng rng(2);
    const auto no_lt = moons_pools(0);
    EXPECT_THROW(train_round(m, no_lt, quick_options(TrainScheme::TargetOnly), rng), SchemeError);
    auto no_ls = moons_pools(5);
    no_ls.labeled_source_x = Matrix(0, 2);
    no_ls.labeled_source_y.clear();
    EXPECT_THROW(train_round(m, no_ls, quick_options(TrainScheme::FineTune), rng), SchemeError);
    auto none = no_ls;
    none.labeled_target_x = Matrix(0, 2);
    none.labeled_target_y.clear();
    EXPECT_THROW(train_round(m, none, quick_options(TrainScheme::Adversarial), rng), SchemeError);
    EXPECT_NO_THROW(train_round(m, no_ls, quick_options(TrainScheme::Adversarial), rng));
}

TEST(TrainRound, DeterministicAndLearns) {
    const auto pools = moons_pools();
    for (auto scheme : {TrainScheme::Adversarial, TrainScheme::Joint, TrainScheme::FineTune,
                        TrainScheme::TargetOnly}) {
        Rng i1(3), i2(3);
        auto a = DannModel::create(ModelDims{}, 0.1, 0.1, i1);
        auto b = DannModel::create(ModelDims{}, 0.1, 0.1, i2);
        Rng r1(11), r2(11);
        const auto rep = train_round(a, pools, quick_options(scheme), r1);
        train_round(b, pools, quick_options(scheme), r2);
        EXPECT_TRUE(a.feature_extractor == b.feature_extractor) << to_string(scheme);
        EXPECT_TRUE(a.discriminator == b.discriminator) << to_string(scheme);
        ASSERT_FALSE(rep.epochs.empty());
        EXPECT_LT(rep.epochs.back().mean.class_loss, rep.epochs.front().mean.class_loss + 1e-9)
            << to_string(scheme);
    }
}

TEST(TrainRound, AdversarialWithZeroLambdasEqualsJoint) {
    const auto pools = moons_pools();
    Rng i1(3), i2(3);
    auto a = DannModel::create(ModelDims{}, 0.0, 0.0, i1);
    auto j = DannModel::create(ModelDims{}, 0.0, 0.0, i2);
    Rng r1(4), r2(4);
    train_round(a, pools, quick_options(TrainScheme::Adversarial), r1);
    train_round(j, pools, quick_options(TrainScheme::Joint), r2);
    EXPECT_TRUE(a.feature_extractor == j.feature_extractor);
    EXPECT_TRUE(a.class_predictor == j.class_predictor);
}

TEST(TrainRound, FineTuneCallsPretrainObserverAndReducesRate) {
    const auto pools = moons_pools();
    Rng init(3);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    auto opts = quick_options(TrainScheme::FineTune);
    int calls = 0;
    opts.after_pretrain = [&](const DannModel&) { ++calls; };
    Rng rng(5);
    const auto rep = train_round(m, pools, opts, rng);
    EXPECT_EQ(calls, 1);
    EXPECT_EQ(rep.epochs.front().stage, "pretrain");
    EXPECT_EQ(rep.epochs.back().stage, "finetune");
    EXPECT_DOUBLE_EQ(rep.epochs.back().learning_rate, 0.5e-3);
}

TEST(TrainRound, WarmStartKeepsParameters) {
    const auto pools = moons_pools();
    Rng init(3);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    Rng r1(1);
    train_round(m, pools, quick_options(TrainScheme::Adversarial), r1);
    auto warm = m, cold = m;
    auto opts = quick_options(TrainScheme::Adversarial);
    opts.schedule.phases = {{0, 1e-3}};
    opts.warm_start = true;
    Rng r2(2), r3(2);
    train_round(warm, pools, opts, r2);
    EXPECT_TRUE(warm.feature_extractor == m.feature_extractor);
    opts.warm_start = false;
    train_round(cold, pools, opts, r3);
    EXPECT_FALSE(cold.feature_extractor == m.feature_extractor);
}

TEST(TrainRound, DiscriminatorOnlyLeavesClassifier) {
    const auto pools = moons_pools(0);
    Rng init(3);
    auto m = DannModel::create(ModelDims{}, 0.1, 0.1, init);
    Rng rng(8);
    auto opts = quick_options(TrainScheme::TargetOnly);
    opts.warm_start = true;
    const auto before = m;
    train_discriminator_only(m, pools, opts, rng);
    EXPECT_TRUE(m.feature_extractor == before.feature_extractor);
    EXPECT_TRUE(m.class_predictor == before.class_predictor);
    EXPECT_FALSE(m.discriminator == before.discriminator);
}

TEST(Checkpoint, RoundTripIsBitExact) {
    const auto pools = moons_pools();
    Rng init(3);
    auto m = DannModel::create(ModelDims{}, 0.25, 0.05, init);
    Rng rng(12);
    train_round(m, pools, quick_options(TrainScheme::Adversarial), rng);
    rng.next_u64();
    const std::string text = checkpoint_to_string(m, rng);
    const auto back = checkpoint_from_string(text);
    EXPECT_EQ(checkpoint_to_string(back.model, back.rng), text);
    EXPECT_TRUE(back.model.feature_extractor == m.feature_extractor);
    EXPECT_TRUE(back.model.discriminator == m.discriminator);
    EXPECT_EQ(back.model.lambda_adv, 0.25);
    EXPECT_EQ(back.model.class_optimizer.step_count, m.class_optimizer.step_count);
    auto r1 = rng, r2 = back.rng;
    EXPECT_EQ(r1.next_u64(), r2.next_u64());
    const Matrix x = pools.unlabeled_target_x;
    EXPECT_EQ(predict_domain_prob(back.model, x), predict_domain_prob(m, x));
}

TEST(Checkpoint, RejectsGarbage) {
    EXPECT_THROW(checkpoint_from_string("{}"), Error);
    EXPECT_THROW(checkpoint_from_string("not json"), Error);
}
