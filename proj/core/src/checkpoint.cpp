#include "aada/dann.hpp"

#include "aada/errors.hpp"

#include <nlohmann/json.hpp>

#include <fstream>
#include <sstream>

namespace aada {

namespace {

using nlohmann::json;

constexpr const char* kFormat = "aada-checkpoint";
constexpr int kVersion = 1;

json stack_to_json(const DenseStack& stack) {
    json layers = json::array();
    for (const auto& l : stack.layers()) {
        layers.push_back({{"in", l.in_dim()},
                          {"out", l.out_dim()},
                          {"activation", to_string(l.activation)},
                          {"weight", l.weight.data()},
                          {"bias", l.bias}});
    }
    return layers;
}

DenseStack stack_from_json(const json& j) {
    std::vector<DenseLayer> layers;
    for (const auto& jl : j) {
        DenseLayer l;
        const auto in = jl.at("in").get<std::size_t>();
        const auto out = jl.at("out").get<std::size_t>();
        l.weight = Matrix(in, out, jl.at("weight").get<std::vector<double>>());
        l.bias = jl.at("bias").get<std::vector<double>>();
        l.activation = activation_from_string(jl.at("activation").get<std::string>());
        layers.push_back(std::move(l));
    }
    return DenseStack(std::move(layers));
}

json grads_to_json(const StackGradients& g) {
    json layers = json::array();
    for (const auto& l : g.layers) {
        layers.push_back({{"weight", l.weight.data()}, {"bias", l.bias}});
    }
    return layers;
}

StackGradients grads_from_json(const json& j, const DenseStack& shape) {
    StackGradients g = StackGradients::zeros_like(shape);
    if (j.size() != g.layers.size()) throw FormatError("checkpoint: optimizer depth mismatch");
    for (std::size_t i = 0; i < g.layers.size(); ++i) {
        const auto& l = shape.layer(i);
        g.layers[i].weight = Matrix(l.in_dim(), l.out_dim(), j[i].at("weight").get<std::vector<double>>());
        g.layers[i].bias = j[i].at("bias").get<std::vector<double>>();
        if (g.layers[i].bias.size() != l.out_dim()) {
            throw FormatError("checkpoint: optimizer bias length mismatch");
        }
    }
    return g;
}

json adam_to_json(const AdamState& s) {
    return {{"step_count", s.step_count},
            {"beta1", s.beta1},
            {"beta2", s.beta2},
            {"epsilon", s.epsilon},
            {"learning_rate", s.learning_rate},
            {"first_moment", grads_to_json(s.first_moment)},
            {"second_moment", grads_to_json(s.second_moment)}};
}

AdamState adam_from_json(const json& j, const DenseStack& shape) {
    AdamState s;
    s.step_count = j.at("step_count").get<std::uint64_t>();
    s.beta1 = j.at("beta1").get<double>();
    s.beta2 = j.at("beta2").get<double>();
    s.epsilon = j.at("epsilon").get<double>();
    s.learning_rate = j.at("learning_rate").get<double>();
    s.first_moment = grads_from_json(j.at("first_moment"), shape);
    s.second_moment = grads_from_json(j.at("second_moment"), shape);
    return s;
}

} // namespace

std::string checkpoint_to_string(const DannModel& model, const Rng& rng) {
    const auto& d = model.dims;
    json j = {
        {"format", kFormat},
        {"version", kVersion},
        {"dims",
         {{"input_dim", d.input_dim},
          {"feature_hidden", d.feature_hidden},
          {"feature_dim", d.feature_dim},
          {"classifier_hidden", d.classifier_hidden},
          {"discriminator_hidden", d.discriminator_hidden},
          {"num_classes", d.num_classes}}},
        {"lambda_adv", model.lambda_adv},
        {"lambda_ent", model.lambda_ent},
        {"heads",
         {{"feature_extractor", stack_to_json(model.feature_extractor)},
          {"class_predictor", stack_to_json(model.class_predictor)},
          {"discriminator", stack_to_json(model.discriminator)}}},
        {"optimizers",
         {{"feature_extractor", adam_to_json(model.feature_optimizer)},
          {"class_predictor", adam_to_json(model.class_optimizer)},
          {"discriminator", adam_to_json(model.discriminator_optimizer)}}},
        {"rng", {{"seed", rng.seed()}, {"state", rng.save_state()}}},
    };
    return j.dump(1) + "\n";
}

Checkpoint checkpoint_from_string(const std::string& text) {
    json j;
    try {
        j = json::parse(text);
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: not valid JSON: ") + e.what());
    }
    try {
        if (j.at("format").get<std::string>() != kFormat) {
            throw FormatError("checkpoint: unexpected format tag");
        }
        if (j.at("version").get<int>() != kVersion) {
            throw FormatError("checkpoint: unsupported version " +
                              std::to_string(j.at("version").get<int>()));
        }
        DannModel m;
        const auto& jd = j.at("dims");
        m.dims.input_dim = jd.at("input_dim").get<std::size_t>();
        m.dims.feature_hidden = jd.at("feature_hidden").get<std::vector<std::size_t>>();
        m.dims.feature_dim = jd.at("feature_dim").get<std::size_t>();
        m.dims.classifier_hidden = jd.at("classifier_hidden").get<std::vector<std::size_t>>();
        m.dims.discriminator_hidden = jd.at("discriminator_hidden").get<std::vector<std::size_t>>();
        m.dims.num_classes = jd.at("num_classes").get<std::size_t>();
        m.lambda_adv = j.at("lambda_adv").get<double>();
        m.lambda_ent = j.at("lambda_ent").get<double>();
        const auto& heads = j.at("heads");
        m.feature_extractor = stack_from_json(heads.at("feature_extractor"));
        m.class_predictor = stack_from_json(heads.at("class_predictor"));
        m.discriminator = stack_from_json(heads.at("discriminator"));
        const auto& opt = j.at("optimizers");
        m.feature_optimizer = adam_from_json(opt.at("feature_extractor"), m.feature_extractor);
        m.class_optimizer = adam_from_json(opt.at("class_predictor"), m.class_predictor);
        m.discriminator_optimizer = adam_from_json(opt.at("discriminator"), m.discriminator);
        m.validate();
        Rng rng;
        rng.restore_state(j.at("rng").at("seed").get<std::uint64_t>(),
                          j.at("rng").at("state").get<std::string>());
        return {std::move(m), rng};
    } catch (const json::exception& e) {
        throw FormatError(std::string("checkpoint: ") + e.what());
    }
}

void save_checkpoint(const std::string& path, const DannModel& model, const Rng& rng) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw Error("cannot open '" + path + "' for writing");
    out << checkpoint_to_string(model, rng);
    if (!out) throw Error("failed writing '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error("cannot open '" + path + "'");
    std::ostringstream buf;
    buf << in.rdbuf();
    return checkpoint_from_string(buf.str());
}

} // namespace aada
