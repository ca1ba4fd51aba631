#include "aada/dann.hpp"

#include "aada/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace aada {

std::string_view to_string(TrainScheme s) noexcept {
    switch (s) {
    case TrainScheme::Adversarial: return "adversarial";
    case TrainScheme::Joint: return "joint";
    case TrainScheme::FineTune: return "finetune";
    case TrainScheme::TargetOnly: return "target_only";
    }
    return "adversarial";
}

TrainScheme scheme_from_string(std::string_view name) {
    for (auto s : {TrainScheme::Adversarial, TrainScheme::Joint, TrainScheme::FineTune,
                   TrainScheme::TargetOnly}) {
        if (to_string(s) == name) return s;
    }
    throw Error("unknown training scheme '" + std::string(name) +
                "' (expected adversarial, joint, finetune, target_only)");
}

std::string_view to_string(LabeledTargetSide s) noexcept {
    return s == LabeledTargetSide::Labeled ? "labeled" : "target";
}

LabeledTargetSide labeled_target_side_from_string(std::string_view name) {
    if (name == "labeled") return LabeledTargetSide::Labeled;
    if (name == "target") return LabeledTargetSide::Target;
    throw Error("unknown labeled-target side '" + std::string(name) +
                "' (expected labeled or target)");
}

// ---- DannModel -----------------------------------------------------------------

namespace {

std::vector<std::size_t> chain(std::size_t in, const std::vector<std::size_t>& hidden,
                               std::size_t out) {
    std::vector<std::size_t> dims{in};
    dims.insert(dims.end(), hidden.begin(), hidden.end());
    dims.push_back(out);
    return dims;
}

AdamHyper hyper_of(const AdamState& s) {
    return {s.learning_rate, s.beta1, s.beta2, s.epsilon};
}

} // namespace

DannModel DannModel::create(const ModelDims& dims, double lambda_adv, double lambda_ent, Rng& rng,
                            const AdamHyper& hyper) {
    if (dims.input_dim == 0 || dims.feature_dim == 0) {
        throw DimensionError("ModelDims", "input and feature dims must be positive");
    }
    if (dims.num_classes < 2) throw DimensionError("ModelDims", "need at least two classes");
    DannModel m;
    m.dims = dims;
    m.lambda_adv = lambda_adv;
    m.lambda_ent = lambda_ent;
    m.feature_optimizer.learning_rate = hyper.learning_rate;
    m.feature_optimizer.beta1 = hyper.beta1;
    m.feature_optimizer.beta2 = hyper.beta2;
    m.feature_optimizer.epsilon = hyper.epsilon;
    m.class_optimizer = m.feature_optimizer;
    m.discriminator_optimizer = m.feature_optimizer;
    m.reinitialize(rng);
    m.validate();
    return m;
}

void DannModel::reinitialize(Rng& rng) {
    const auto f = chain(dims.input_dim, dims.feature_hidden, dims.feature_dim);
    const auto y = chain(dims.feature_dim, dims.classifier_hidden, dims.num_classes);
    const auto d = chain(dims.feature_dim, dims.discriminator_hidden, 1);
    feature_extractor = DenseStack::glorot(f, Activation::ReLU, Activation::ReLU, rng);
    class_predictor = DenseStack::glorot(y, Activation::ReLU, Activation::Identity, rng);
    discriminator = DenseStack::glorot(d, Activation::ReLU, Activation::Identity, rng);
    reset_optimizers();
}

void DannModel::reset_optimizers() {
    feature_optimizer = AdamState::for_stack(feature_extractor, hyper_of(feature_optimizer));
    class_optimizer = AdamState::for_stack(class_predictor, hyper_of(class_optimizer));
    discriminator_optimizer =
        AdamState::for_stack(discriminator, hyper_of(discriminator_optimizer));
}

void DannModel::set_learning_rate(double lr) {
    feature_optimizer.learning_rate = lr;
    class_optimizer.learning_rate = lr;
    discriminator_optimizer.learning_rate = lr;
}

void DannModel::validate() const {
    if (feature_extractor.output_dim() != class_predictor.input_dim()) {
        throw DimensionError("class_predictor", "input dim does not match feature dim");
    }
    if (feature_extractor.output_dim() != discriminator.input_dim()) {
        throw DimensionError("discriminator", "input dim does not match feature dim");
    }
    if (class_predictor.output_dim() != dims.num_classes) {
        throw DimensionError("class_predictor", "output dim does not match num_classes");
    }
    if (discriminator.output_dim() != 1) {
        throw DimensionError("discriminator", "must output a single logit");
    }
    if (!(lambda_adv >= 0.0) || !(lambda_ent >= 0.0)) {
        throw Error("DannModel: lambda_adv and lambda_ent must be non-negative");
    }
}

UnlabeledBatch UnlabeledBatch::target(Matrix features) {
    UnlabeledBatch b;
    b.domain_labels.assign(features.rows(), 0);
    b.features = std::move(features);
    return b;
}

// ---- gradients -------------------------------------------------------------------

namespace {

void check_labeled(const LabeledBatch& b) {
    if (b.features.rows() == 0) throw Error("labeled batch is empty; class loss is undefined");
    if (b.class_labels.size() != b.features.rows() || b.domain_labels.size() != b.features.rows()) {
        throw DimensionError("LabeledBatch", "label counts do not match feature rows");
    }
}

void check_unlabeled(const UnlabeledBatch& b) {
    if (b.domain_labels.size() != b.features.rows()) {
        throw DimensionError("UnlabeledBatch", "domain label count does not match feature rows");
    }
}

std::vector<double> column(const Matrix& m) {
    return {m.data().begin(), m.data().end()};
}

Matrix as_column(const std::vector<double>& v) { return Matrix(v.size(), 1, v); }

Matrix rows_slice(const Matrix& m, std::size_t begin, std::size_t end) {
    std::vector<double> data(m.data().begin() + static_cast<std::ptrdiff_t>(begin * m.cols()),
                             m.data().begin() + static_cast<std::ptrdiff_t>(end * m.cols()));
    return Matrix(end - begin, m.cols(), std::move(data));
}

} // namespace

DannGradients compute_gradients(const DannModel& model, const LabeledBatch& labeled,
                                const UnlabeledBatch* unlabeled, StepMode mode) {
    check_labeled(labeled);
    const bool have_unlabeled = unlabeled != nullptr && unlabeled->features.rows() > 0;
    if (unlabeled != nullptr) check_unlabeled(*unlabeled);
    const bool adversarial = mode == StepMode::Adversarial;

    DannGradients out;
    out.discriminator = StackGradients::zeros_like(model.discriminator);

    // Class path on labeled rows.
    const auto f_l = forward(model.feature_extractor, labeled.features);
    const auto y_l = forward(model.class_predictor, f_l.output);
    const auto ce = softmax_cross_entropy(y_l.output, labeled.class_labels);
    out.losses.class_loss = ce.loss;
    auto by_l = backward(model.class_predictor, y_l.cache, ce.gradient);
    out.classifier = std::move(by_l.parameters);
    out.feature = backward(model.feature_extractor, f_l.cache, by_l.input_gradient).parameters;

    if (!have_unlabeled) {
        out.feature_domain_unreversed = StackGradients::zeros_like(model.feature_extractor);
        out.feature_domain_reversed = out.feature_domain_unreversed;
        return out;
    }

    const auto f_u = forward(model.feature_extractor, unlabeled->features);

    // Entropy regulariser on unlabeled rows.
    if (adversarial) {
        const auto y_u = forward(model.class_predictor, f_u.output);
        const auto ent = mean_entropy_loss(y_u.output);
        out.losses.entropy_loss = ent.loss;
        if (model.lambda_ent != 0.0) {
            Matrix g = ent.gradient;
            for (double& v : g.values()) v *= model.lambda_ent;
            auto by_u = backward(model.class_predictor, y_u.cache, g);
            out.classifier += by_u.parameters;
            out.feature += backward(model.feature_extractor, f_u.cache, by_u.input_gradient).parameters;
        }
    }

    // Domain path on [labeled; unlabeled] features.
    const Matrix stacked = vstack(f_l.output, f_u.output);
    std::vector<int> domain(labeled.domain_labels);
    domain.insert(domain.end(), unlabeled->domain_labels.begin(), unlabeled->domain_labels.end());
    const auto d = forward(model.discriminator, stacked);
    const auto bce = binary_logistic_loss(column(d.output), domain);
    out.losses.domain_loss = bce.loss;
    auto bd = backward(model.discriminator, d.cache, as_column(bce.gradient));
    out.discriminator = std::move(bd.parameters);

    const std::size_t n_l = labeled.features.rows();
    const Matrix g_feat_l = rows_slice(bd.input_gradient, 0, n_l);
    const Matrix g_feat_u = rows_slice(bd.input_gradient, n_l, stacked.rows());
    out.feature_domain_unreversed = backward(model.feature_extractor, f_l.cache, g_feat_l).parameters;
    out.feature_domain_unreversed +=
        backward(model.feature_extractor, f_u.cache, g_feat_u).parameters;

    if (adversarial) {
        out.feature_domain_reversed = out.feature_domain_unreversed.scaled(-model.lambda_adv);
        if (model.lambda_adv != 0.0) out.feature += out.feature_domain_reversed;
    } else {
        out.feature_domain_reversed = StackGradients::zeros_like(model.feature_extractor);
    }
    return out;
}

LossReport adversarial_step(DannModel& model, const LabeledBatch& labeled,
                            const UnlabeledBatch& unlabeled_target) {
    const auto g = compute_gradients(model, labeled, &unlabeled_target, StepMode::Adversarial);
    adam_step(model.feature_extractor, g.feature, model.feature_optimizer);
    adam_step(model.class_predictor, g.classifier, model.class_optimizer);
    if (unlabeled_target.features.rows() > 0) {
        adam_step(model.discriminator, g.discriminator, model.discriminator_optimizer);
    }
    return g.losses;
}

LossReport supervised_step(DannModel& model, const LabeledBatch& labeled,
                           const UnlabeledBatch* discriminator_batch) {
    const auto g = compute_gradients(model, labeled, discriminator_batch, StepMode::Supervised);
    adam_step(model.feature_extractor, g.feature, model.feature_optimizer);
    adam_step(model.class_predictor, g.classifier, model.class_optimizer);
    if (discriminator_batch != nullptr && discriminator_batch->features.rows() > 0) {
        adam_step(model.discriminator, g.discriminator, model.discriminator_optimizer);
    }
    return g.losses;
}

LossReport discriminator_step(DannModel& model, const Matrix& side_one, const Matrix& side_zero) {
    if (side_one.rows() + side_zero.rows() == 0) {
        throw Error("discriminator_step: both sides are empty");
    }
    const Matrix x = vstack(side_one, side_zero);
    std::vector<int> domain(side_one.rows(), 1);
    domain.resize(x.rows(), 0);
    const Matrix features = predict(model.feature_extractor, x);
    const auto d = forward(model.discriminator, features);
    const auto bce = binary_logistic_loss(column(d.output), domain);
    const auto bd = backward(model.discriminator, d.cache, as_column(bce.gradient));
    adam_step(model.discriminator, bd.parameters, model.discriminator_optimizer);
    LossReport r;
    r.domain_loss = bce.loss;
    return r;
}

// ---- inference -----------------------------------------------------------------

Matrix extract_features(const DannModel& model, const Matrix& x) {
    return predict(model.feature_extractor, x);
}

Matrix predict_class_probs(const DannModel& model, const Matrix& x) {
    return softmax(predict(model.class_predictor, extract_features(model, x)));
}

namespace {

std::vector<double> domain_probs_from_features(const DannModel& model, const Matrix& features) {
    const Matrix logits = predict(model.discriminator, features);
    std::vector<double> p(logits.rows());
    for (std::size_t i = 0; i < p.size(); ++i) {
        p[i] = std::clamp(sigmoid(logits(i, 0)), kDomainProbFloor, 1.0 - kDomainProbFloor);
    }
    return p;
}

} // namespace

std::vector<double> predict_domain_prob(const DannModel& model, const Matrix& x) {
    return domain_probs_from_features(model, extract_features(model, x));
}

ModelOutputs infer(const DannModel& model, const Matrix& x) {
    ModelOutputs out;
    out.features = extract_features(model, x);
    out.class_probs = softmax(predict(model.class_predictor, out.features));
    out.domain_probs = domain_probs_from_features(model, out.features);
    return out;
}

} // namespace aada
