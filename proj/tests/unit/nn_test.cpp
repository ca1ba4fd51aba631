#include "../support.hpp"

#include "aada/errors.hpp"
#include "aada/nn.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace aada;
using namespace aada::testing;

TEST(Losses, CrossEntropyHandComputed) {
    // logits (1, 2, 3), label 2: log(e + e^2 + e^3) - 3 = 0.40760596444...
    const Matrix z = Matrix::from_rows({{1, 2, 3}});
    const std::vector<Label> y{2};
    const auto r = softmax_cross_entropy(z, y);
    EXPECT_NEAR(r.loss, 0.4076059644443803, 1e-12);
    // d/dz = softmax - onehot
    const double e1 = std::exp(1.0), e2 = std::exp(2.0), e3 = std::exp(3.0), s = e1 + e2 + e3;
    EXPECT_NEAR(r.gradient(0, 0), e1 / s, 1e-12);
    EXPECT_NEAR(r.gradient(0, 2), e3 / s - 1.0, 1e-12);
}

TEST(Losses, UniformLogitsGiveLogOfClassCount) {
    const Matrix z(4, 10, 0.3);
    const std::vector<Label> y{0, 3, 7, 9};
    EXPECT_NEAR(softmax_cross_entropy(z, y).loss, std::log(10.0), 1e-12);
}

TEST(Losses, CrossEntropyRejectsBadLabels) {
    const Matrix z(2, 3);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<Label>{0, 3}), LabelError);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<Label>{0, -1}), LabelError);
    EXPECT_THROW(softmax_cross_entropy(z, std::vector<Label>{0}), DimensionError);
}

TEST(Losses, BinaryLogisticHandComputed) {
    // log(1 + e) = 1.3132616875182228 for logit 1 and label 0; label 1 gives log(1 + e^-1).
    const double z[] = {1.0, 1.0};
    const int y[] = {0, 1};
    const auto r = binary_logistic_loss(z, y);
    EXPECT_NEAR(r.loss, (1.3132616875182228 + 0.31326168751822286) / 2.0, 1e-12);
    const double sig = 1.0 / (1.0 + std::exp(-1.0));
    EXPECT_NEAR(r.gradient[0], sig / 2.0, 1e-12);
    EXPECT_NEAR(r.gradient[1], (sig - 1.0) / 2.0, 1e-12);
}

TEST(Losses, SoftplusAndSigmoidStayFinite) {
    EXPECT_DOUBLE_EQ(softplus(1000.0), 1000.0);
    EXPECT_NEAR(softplus(-1000.0), 0.0, 1e-300);
    EXPECT_DOUBLE_EQ(sigmoid(0.0), 0.5);
    EXPECT_TRUE(std::isfinite(sigmoid(-1e6)));
}

TEST(Losses, SoftmaxRowsSumToOneForLargeLogits) {
    const Matrix p = softmax(Matrix::from_rows({{1000, 1000, -1000}, {0, 0, 0}}));
    EXPECT_NEAR(p(0, 0), 0.5, 1e-12);
    EXPECT_NEAR(p(1, 2), 1.0 / 3.0, 1e-12);
    const Matrix lp = log_softmax(Matrix::from_rows({{1000, 1000}}));
    EXPECT_NEAR(lp(0, 0), -std::log(2.0), 1e-12);
}

TEST(Losses, EntropyValuesAndDomain) {
    const auto h = entropy(Matrix::from_rows({{0.5, 0.5}, {1.0, 0.0}}));
    EXPECT_NEAR(h[0], std::log(2.0), 1e-15);
    EXPECT_EQ(h[1], 0.0);
    EXPECT_THROW(entropy(Matrix::from_rows({{0.5, 0.6}})), DistributionError);
    EXPECT_THROW(entropy(Matrix::from_rows({{1.5, -0.5}})), DistributionError);
}

TEST(Losses, MeanEntropyGradientMatchesFiniteDifferences) {
    Rng rng(12);
    Matrix z = random_matrix(5, 4, rng, 2.0);
    const auto r = mean_entropy_loss(z);
    EXPECT_NEAR(r.loss, ref_mean_entropy(z), 1e-12);
    for (std::size_t k = 0; k < z.size(); ++k) {
        const double orig = z.values()[k];
        z.values()[k] = orig + 1e-6;
        const double up = ref_mean_entropy(z);
        z.values()[k] = orig - 1e-6;
        const double down = ref_mean_entropy(z);
        z.values()[k] = orig;
        EXPECT_NEAR(r.gradient.values()[k], (up - down) / 2e-6, 1e-7);
    }
}

TEST(DenseStack, GlorotBoundsAndZeroBias) {
    Rng rng(1);
    const std::size_t dims[] = {10, 20, 3};
    const auto s = DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, rng);
    EXPECT_EQ(s.depth(), 2u);
    EXPECT_EQ(s.parameter_count(), 10u * 20 + 20 + 20 * 3 + 3);
    const double lim = std::sqrt(6.0 / 30.0);
    for (double w : s.layer(0).weight.values()) EXPECT_LE(std::abs(w), lim);
    for (double b : s.layer(1).bias) EXPECT_EQ(b, 0.0);
    EXPECT_EQ(s.layer(0).activation, Activation::ReLU);
    EXPECT_EQ(s.layer(1).activation, Activation::Identity);
}

TEST(DenseStack, ForwardHandComputed) {
    DenseLayer l1{Matrix::from_rows({{1, -1}, {2, 0.5}}), {0.5, -4}, Activation::ReLU};
    DenseLayer l2{Matrix::from_rows({{2}, {3}}), {1}, Activation::Identity};
    const DenseStack s({l1, l2});
    // x = (1, 1): pre = (3.5, -4.5) -> relu (3.5, 0) -> 2 * 3.5 + 1 = 8
    EXPECT_DOUBLE_EQ(predict(s, Matrix::from_rows({{1, 1}}))(0, 0), 8.0);
}

TEST(DenseStack, ChainingChecked) {
    DenseLayer a{Matrix(2, 3), {0, 0, 0}, Activation::ReLU};
    DenseLayer b{Matrix(4, 1), {0}, Activation::Identity};
    EXPECT_THROW(DenseStack({a, b}), DimensionError);
    DenseLayer c{Matrix(2, 3), {0}, Activation::ReLU};
    EXPECT_THROW(DenseStack({c}), DimensionError);
}

TEST(Backprop, MatchesFiniteDifferencesOnRandomStacks) {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        const std::size_t dims[] = {3, 5, 4, 2};
        DenseStack s = DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, rng);
        const Matrix x = random_matrix(6, 3, rng);
        const Matrix weights = random_matrix(6, 2, rng); // loss = sum(weights * output)
        const auto loss = [&](const DenseStack& st) {
            const Matrix y = predict(st, x);
            double t = 0;
            for (std::size_t k = 0; k < y.size(); ++k) t += y.values()[k] * weights.values()[k];
            return t;
        };
        const auto fwd = forward(s, x);
        const auto g = backward(s, fwd.cache, weights);
        for (std::size_t li = 0; li < s.depth(); ++li) {
            for (std::size_t k = 0; k < s.layer(li).weight.size(); ++k) {
                DenseStack p = s, m = s;
                p.mutable_layer(li).weight.values()[k] += 1e-6;
                m.mutable_layer(li).weight.values()[k] -= 1e-6;
                const double num = (loss(p) - loss(m)) / 2e-6;
                EXPECT_LT(relative_error(g.parameters.layers[li].weight.values()[k], num), 1e-5);
            }
        }
        // Input gradient too.
        for (std::size_t k = 0; k < x.size(); ++k) {
            Matrix xp = x, xm = x;
            xp.values()[k] += 1e-6;
            xm.values()[k] -= 1e-6;
            double lp = 0, lm = 0;
            const Matrix yp = predict(s, xp), ym = predict(s, xm);
            for (std::size_t j = 0; j < yp.size(); ++j) {
                lp += yp.values()[j] * weights.values()[j];
                lm += ym.values()[j] * weights.values()[j];
            }
            EXPECT_LT(relative_error(g.input_gradient.values()[k], (lp - lm) / 2e-6), 1e-5);
        }
    }
}

TEST(Backprop, StaleCacheAndShapeErrors) {
    Rng rng(2);
    const std::size_t dims[] = {2, 3, 1};
    DenseStack s = DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, rng);
    DenseStack other = s;
    const auto fwd = forward(s, Matrix(4, 2, 1.0));
    EXPECT_THROW(backward(s, fwd.cache, Matrix(4, 2)), DimensionError);
    EXPECT_THROW(backward(other, fwd.cache, Matrix(4, 1)), StaleCacheError);
    s.mutable_layer(0).bias[0] = 1.0;
    EXPECT_THROW(backward(s, fwd.cache, Matrix(4, 1)), StaleCacheError);
}

TEST(StackGradients, Arithmetic) {
    Rng rng(4);
    const std::size_t dims[] = {2, 2};
    const DenseStack s = DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, rng);
    auto z = StackGradients::zeros_like(s);
    EXPECT_TRUE(z.all_zero());
    z.layers[0].bias[1] = 2.0;
    auto w = z.scaled(-0.5);
    EXPECT_EQ(w.layers[0].bias[1], -1.0);
    w += z;
    EXPECT_EQ(w.layers[0].bias[1], 1.0);
    EXPECT_FALSE(w.all_zero());
}

TEST(Adam, FirstStepIsSignedLearningRate) {
    // After one bias-corrected step m_hat = g and v_hat = g^2, so the move is lr * g / (|g| + eps).
    std::vector<double> p{1.0, -2.0}, g{0.5, -3.0}, m(2, 0.0), v(2, 0.0);
    adam_update(p, g, m, v, 1, AdamHyper{0.1});
    EXPECT_DOUBLE_EQ(p[0], 1.0 - 0.1 * 0.5 / (0.5 + 1e-8));
    EXPECT_DOUBLE_EQ(p[1], -2.0 + 0.1 * 3.0 / (3.0 + 1e-8));
    EXPECT_DOUBLE_EQ(m[0], 0.05);
    EXPECT_DOUBLE_EQ(v[1], 0.001 * 9.0);
}

TEST(Adam, MinimisesQuadratic) {
    std::vector<double> p{5.0}, m{0.0}, v{0.0};
    for (std::uint64_t t = 1; t <= 2000; ++t) {
        std::vector<double> g{2.0 * (p[0] - 1.5)};
        adam_update(p, g, m, v, t, AdamHyper{0.05});
    }
    EXPECT_NEAR(p[0], 1.5, 1e-3);
}

TEST(Adam, StepCountAndRevision) {
    Rng rng(6);
    const std::size_t dims[] = {2, 2};
    DenseStack s = DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, rng);
    auto st = AdamState::for_stack(s);
    auto g = StackGradients::zeros_like(s);
    g.layers[0].weight(0, 0) = 1.0;
    const auto rev = s.revision();
    const double before = s.layer(0).weight(0, 0);
    adam_step(s, g, st);
    EXPECT_EQ(st.step_count, 1u);
    EXPECT_GT(s.revision(), rev);
    EXPECT_LT(s.layer(0).weight(0, 0), before);
    Rng again(6);
    // Zero-gradient entries still move only through their (zero) moments: unchanged.
    EXPECT_EQ(s.layer(0).weight(1, 1),
              DenseStack::glorot(dims, Activation::ReLU, Activation::Identity, again).layer(0).weight(1, 1));
}
