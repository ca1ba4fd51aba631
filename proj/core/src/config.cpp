#include "aada/config.hpp"

#include "aada/errors.hpp"

#include <cmath>
#include <fstream>
#include <set>

namespace aada {

using nlohmann::json;

// ---- validation -----------------------------------------------------------------

namespace {

void require(bool ok, const std::string& field, const std::string& what) {
    if (!ok) throw ConfigError(field, what);
}

void require_positive_sizes(const std::vector<std::size_t>& v, const std::string& field) {
    for (std::size_t i = 0; i < v.size(); ++i) {
        require(v[i] > 0, field + "[" + std::to_string(i) + "]", "must be a positive integer");
    }
}

} // namespace

void RunConfig::validate() const {
    require(std::isfinite(lambda_adv) && lambda_adv >= 0.0, "lambda_adv", "must be a finite value >= 0");
    require(std::isfinite(lambda_ent) && lambda_ent >= 0.0, "lambda_ent", "must be a finite value >= 0");

    require(!schedule.phases.empty(), "schedule.phases", "must contain at least one phase");
    for (std::size_t i = 0; i < schedule.phases.size(); ++i) {
        const auto& p = schedule.phases[i];
        require(std::isfinite(p.learning_rate) && p.learning_rate > 0.0,
                "schedule.phases[" + std::to_string(i) + "].learning_rate", "must be positive");
    }
    require(schedule.batch_size > 0, "schedule.batch_size", "must be a positive integer");
    require(std::isfinite(schedule.finetune_lr_factor) && schedule.finetune_lr_factor > 0.0,
            "schedule.finetune_lr_factor", "must be positive");

    require(!budgets.empty(), "budgets", "must contain at least one entry");
    for (std::size_t i = 0; i < budgets.size(); ++i) {
        require(budgets[i] > 0, "budgets[" + std::to_string(i) + "]",
                "must be a positive integer, got " + std::to_string(budgets[i]));
    }
    require(budgets.size() == 1 || budgets.size() == max_round, "budgets",
            "has " + std::to_string(budgets.size()) + " entries but max_round is " +
                std::to_string(max_round) + " (give one entry per round or a single entry)");
    require(!seeds.empty(), "seeds", "must contain at least one seed");

    require(model.feature_dim > 0, "model.feature_dim", "must be a positive integer");
    require_positive_sizes(model.feature_hidden, "model.feature_hidden");
    require_positive_sizes(model.classifier_hidden, "model.classifier_hidden");
    require_positive_sizes(model.discriminator_hidden, "model.discriminator_hidden");

    const auto& d = dataset;
    require(d.test_fraction > 0.0 && d.test_fraction < 1.0, "dataset.test_fraction",
            "must lie strictly between 0 and 1");
    if (d.kind == DatasetKind::Synthetic) {
        require(d.shift.noise > 0.0, "dataset.noise", "must be positive");
        require(d.shift.n_source > 0, "dataset.n_source", "must be positive");
        require(d.shift.n_target > 0, "dataset.n_target", "must be positive");
        require(std::isfinite(d.shift.rotation_deg), "dataset.rotation_deg", "must be finite");
        require(d.shift.generator != Generator::GaussianMixture || d.shift.num_classes >= 2,
                "dataset.num_classes", "must be at least 2");
    } else {
        require(!d.source_images.empty(), "dataset.source_images", "is required for idx data");
        require(!d.source_labels.empty(), "dataset.source_labels", "is required for idx data");
        require(!d.target_images.empty(), "dataset.target_images", "is required for idx data");
        require(!d.target_labels.empty(), "dataset.target_labels", "is required for idx data");
    }
}

std::size_t RunConfig::budget_for_round(std::size_t r) const {
    if (r == 0 || r > max_round) throw ConfigError("budgets", "no budget for round " + std::to_string(r));
    const auto b = budgets.size() == 1 ? budgets.front() : budgets[r - 1];
    return static_cast<std::size_t>(b);
}

std::size_t RunConfig::total_budget() const {
    std::size_t total = 0;
    for (std::size_t r = 1; r <= max_round; ++r) total += budget_for_round(r);
    return total;
}

// ---- presets ---------------------------------------------------------------------

const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"toy", "paper-digits"};
    return names;
}

RunConfig preset_config(std::string_view name) {
    RunConfig c;
    if (name == "toy") return c;
    if (name == "paper-digits") {
        c.preset = "paper-digits";
        c.schedule.phases = {{20, 2e-4}, {20, 1e-4}, {20, 5e-5}};
        c.schedule.batch_size = 128;
        c.budgets = {10};
        c.max_round = 30;
        c.seeds = {1, 2, 3, 4, 5};
        c.model.feature_hidden = {256};
        c.model.feature_dim = 128;
        c.model.discriminator_hidden = {128};
        return c;
    }
    throw ConfigError("preset", "unknown preset '" + std::string(name) + "' (expected toy or paper-digits)");
}

// ---- JSON ------------------------------------------------------------------------

json to_json(const RunConfig& c) {
    const auto& d = c.dataset;
    json phases = json::array();
    for (const auto& p : c.schedule.phases) {
        phases.push_back({{"epochs", p.epochs}, {"learning_rate", p.learning_rate}});
    }
    json schemes = json::array();
    for (auto s : c.grid.schemes) schemes.push_back(to_string(s));
    json strategies = json::array();
    for (auto s : c.grid.strategies) strategies.push_back(to_string(s));
    return {
        {"preset", c.preset},
        {"dataset",
         {{"kind", d.kind == DatasetKind::Synthetic ? "synthetic" : "idx"},
          {"generator", to_string(d.shift.generator)},
          {"n_source", d.shift.n_source},
          {"n_target", d.shift.n_target},
          {"rotation_deg", d.shift.rotation_deg},
          {"translation", d.shift.translation},
          {"noise", d.shift.noise},
          {"seed", d.shift.seed},
          {"num_classes", d.shift.num_classes},
          {"source_images", d.source_images},
          {"source_labels", d.source_labels},
          {"target_images", d.target_images},
          {"target_labels", d.target_labels},
          {"max_source", d.max_source},
          {"max_target", d.max_target},
          {"test_fraction", d.test_fraction}}},
        {"model",
         {{"feature_hidden", c.model.feature_hidden},
          {"feature_dim", c.model.feature_dim},
          {"classifier_hidden", c.model.classifier_hidden},
          {"discriminator_hidden", c.model.discriminator_hidden}}},
        {"scheme", to_string(c.scheme)},
        {"strategy", to_string(c.strategy)},
        {"lambda_adv", c.lambda_adv},
        {"lambda_ent", c.lambda_ent},
        {"schedule",
         {{"phases", phases},
          {"batch_size", c.schedule.batch_size},
          {"finetune_lr_factor", c.schedule.finetune_lr_factor}}},
        {"budgets", c.budgets},
        {"max_round", c.max_round},
        {"seeds", c.seeds},
        {"output_dir", c.output_dir},
        {"warm_start", c.warm_start},
        {"warmup_random_first_round", c.warmup_random_first_round},
        {"labeled_target_side", to_string(c.labeled_target_side)},
        {"workers", c.workers},
        {"grid", {{"schemes", schemes}, {"strategies", strategies}}},
    };
}

namespace {

/// Visits the keys of one JSON object and rejects any key nobody asked for.
class ObjectReader {
public:
    ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
        if (!j_.is_object()) throw ConfigError(label(), "must be an object");
    }

    template <typename F>
    void field(const char* key, F&& apply) {
        seen_.insert(key);
        if (auto it = j_.find(key); it != j_.end()) apply(*it, child(key));
    }

    void finish() const {
        for (auto it = j_.begin(); it != j_.end(); ++it) {
            if (!seen_.contains(it.key())) throw ConfigError(child(it.key()), "unknown key");
        }
    }

private:
    std::string label() const { return path_.empty() ? "<root>" : path_; }
    std::string child(const std::string& key) const {
        return path_.empty() ? key : path_ + "." + key;
    }

    const json& j_;
    std::string path_;
    std::set<std::string> seen_;
};

double as_double(const json& j, const std::string& path) {
    if (!j.is_number()) throw ConfigError(path, "must be a number");
    return j.get<double>();
}

std::int64_t as_int(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "must be an integer");
    return j.get<std::int64_t>();
}

std::size_t as_count(const json& j, const std::string& path) {
    if (!j.is_number_integer()) throw ConfigError(path, "must be a non-negative integer");
    if (j.is_number_unsigned()) return j.get<std::size_t>();
    const auto v = j.get<std::int64_t>();
    if (v < 0) throw ConfigError(path, "must be a non-negative integer, got " + std::to_string(v));
    return static_cast<std::size_t>(v);
}

bool as_bool(const json& j, const std::string& path) {
    if (!j.is_boolean()) throw ConfigError(path, "must be true or false");
    return j.get<bool>();
}

std::string as_string(const json& j, const std::string& path) {
    if (!j.is_string()) throw ConfigError(path, "must be a string");
    return j.get<std::string>();
}

template <typename T, typename F>
std::vector<T> as_list(const json& j, const std::string& path, F&& each) {
    if (!j.is_array()) throw ConfigError(path, "must be a list");
    std::vector<T> out;
    for (std::size_t i = 0; i < j.size(); ++i) out.push_back(each(j[i], path + "[" + std::to_string(i) + "]"));
    return out;
}

template <typename F>
auto parse_enum(const json& j, const std::string& path, F&& from_string) {
    const auto s = as_string(j, path);
    try {
        return from_string(s);
    } catch (const Error& e) {
        throw ConfigError(path, e.what());
    }
}

void read_dataset(const json& j, const std::string& path, DatasetConfig& d) {
    ObjectReader r(j, path);
    r.field("kind", [&](const json& v, const std::string& p) {
        const auto s = as_string(v, p);
        if (s == "synthetic") d.kind = DatasetKind::Synthetic;
        else if (s == "idx") d.kind = DatasetKind::Idx;
        else throw ConfigError(p, "must be 'synthetic' or 'idx'");
    });
    r.field("generator", [&](const json& v, const std::string& p) {
        d.shift.generator = parse_enum(v, p, generator_from_string);
    });
    r.field("n_source", [&](const json& v, const std::string& p) { d.shift.n_source = as_count(v, p); });
    r.field("n_target", [&](const json& v, const std::string& p) { d.shift.n_target = as_count(v, p); });
    r.field("rotation_deg", [&](const json& v, const std::string& p) { d.shift.rotation_deg = as_double(v, p); });
    r.field("translation", [&](const json& v, const std::string& p) {
        const auto t = as_list<double>(v, p, as_double);
        if (t.size() != 2) throw ConfigError(p, "must have exactly two entries");
        d.shift.translation = {t[0], t[1]};
    });
    r.field("noise", [&](const json& v, const std::string& p) { d.shift.noise = as_double(v, p); });
    r.field("seed", [&](const json& v, const std::string& p) { d.shift.seed = as_count(v, p); });
    r.field("num_classes", [&](const json& v, const std::string& p) { d.shift.num_classes = as_count(v, p); });
    r.field("source_images", [&](const json& v, const std::string& p) { d.source_images = as_string(v, p); });
    r.field("source_labels", [&](const json& v, const std::string& p) { d.source_labels = as_string(v, p); });
    r.field("target_images", [&](const json& v, const std::string& p) { d.target_images = as_string(v, p); });
    r.field("target_labels", [&](const json& v, const std::string& p) { d.target_labels = as_string(v, p); });
    r.field("max_source", [&](const json& v, const std::string& p) { d.max_source = as_count(v, p); });
    r.field("max_target", [&](const json& v, const std::string& p) { d.max_target = as_count(v, p); });
    r.field("test_fraction", [&](const json& v, const std::string& p) { d.test_fraction = as_double(v, p); });
    r.finish();
}

void read_model(const json& j, const std::string& path, ArchitectureConfig& m) {
    ObjectReader r(j, path);
    r.field("feature_hidden", [&](const json& v, const std::string& p) {
        m.feature_hidden = as_list<std::size_t>(v, p, as_count);
    });
    r.field("feature_dim", [&](const json& v, const std::string& p) { m.feature_dim = as_count(v, p); });
    r.field("classifier_hidden", [&](const json& v, const std::string& p) {
        m.classifier_hidden = as_list<std::size_t>(v, p, as_count);
    });
    r.field("discriminator_hidden", [&](const json& v, const std::string& p) {
        m.discriminator_hidden = as_list<std::size_t>(v, p, as_count);
    });
    r.finish();
}

void read_schedule(const json& j, const std::string& path, TrainSchedule& s) {
    ObjectReader r(j, path);
    r.field("phases", [&](const json& v, const std::string& p) {
        s.phases = as_list<TrainPhase>(v, p, [](const json& e, const std::string& ep) {
            TrainPhase phase;
            ObjectReader pr(e, ep);
            pr.field("epochs", [&](const json& x, const std::string& xp) { phase.epochs = as_count(x, xp); });
            pr.field("learning_rate", [&](const json& x, const std::string& xp) {
                phase.learning_rate = as_double(x, xp);
            });
            pr.finish();
            return phase;
        });
    });
    r.field("batch_size", [&](const json& v, const std::string& p) { s.batch_size = as_count(v, p); });
    r.field("finetune_lr_factor", [&](const json& v, const std::string& p) {
        s.finetune_lr_factor = as_double(v, p);
    });
    r.finish();
}

void read_grid(const json& j, const std::string& path, GridConfig& g) {
    ObjectReader r(j, path);
    r.field("schemes", [&](const json& v, const std::string& p) {
        g.schemes = as_list<TrainScheme>(v, p, [](const json& e, const std::string& ep) {
            return parse_enum(e, ep, scheme_from_string);
        });
    });
    r.field("strategies", [&](const json& v, const std::string& p) {
        g.strategies = as_list<Strategy>(v, p, [](const json& e, const std::string& ep) {
            return parse_enum(e, ep, strategy_from_string);
        });
    });
    r.finish();
}

} // namespace

RunConfig config_from_json(const json& j, RunConfig c) {
    ObjectReader r(j, "");
    r.field("preset", [&](const json& v, const std::string& p) { c.preset = as_string(v, p); });
    r.field("dataset", [&](const json& v, const std::string& p) { read_dataset(v, p, c.dataset); });
    r.field("model", [&](const json& v, const std::string& p) { read_model(v, p, c.model); });
    r.field("scheme", [&](const json& v, const std::string& p) { c.scheme = parse_enum(v, p, scheme_from_string); });
    r.field("strategy", [&](const json& v, const std::string& p) {
        c.strategy = parse_enum(v, p, strategy_from_string);
    });
    r.field("lambda_adv", [&](const json& v, const std::string& p) { c.lambda_adv = as_double(v, p); });
    r.field("lambda_ent", [&](const json& v, const std::string& p) { c.lambda_ent = as_double(v, p); });
    r.field("schedule", [&](const json& v, const std::string& p) { read_schedule(v, p, c.schedule); });
    r.field("budgets", [&](const json& v, const std::string& p) {
        c.budgets = as_list<std::int64_t>(v, p, as_int);
    });
    r.field("max_round", [&](const json& v, const std::string& p) { c.max_round = as_count(v, p); });
    r.field("seeds", [&](const json& v, const std::string& p) {
        c.seeds = as_list<std::uint64_t>(v, p, as_count);
    });
    r.field("output_dir", [&](const json& v, const std::string& p) { c.output_dir = as_string(v, p); });
    r.field("warm_start", [&](const json& v, const std::string& p) { c.warm_start = as_bool(v, p); });
    r.field("warmup_random_first_round", [&](const json& v, const std::string& p) {
        c.warmup_random_first_round = as_bool(v, p);
    });
    r.field("labeled_target_side", [&](const json& v, const std::string& p) {
        c.labeled_target_side = parse_enum(v, p, labeled_target_side_from_string);
    });
    r.field("workers", [&](const json& v, const std::string& p) { c.workers = as_count(v, p); });
    r.field("grid", [&](const json& v, const std::string& p) { read_grid(v, p, c.grid); });
    r.finish();
    c.validate();
    return c;
}

RunConfig config_from_json(const json& j) {
    std::string preset = "toy";
    if (j.is_object() && j.contains("preset")) preset = as_string(j.at("preset"), "preset");
    return config_from_json(j, preset_config(preset));
}

RunConfig load_config(const std::string& path, std::string_view fallback_preset) {
    std::ifstream in(path);
    if (!in) throw ConfigError("--config", "cannot open '" + path + "'");
    json j;
    try {
        j = json::parse(in);
    } catch (const json::parse_error& e) {
        throw ConfigError("--config", std::string("not valid JSON: ") + e.what());
    }
    std::string preset(fallback_preset);
    if (j.is_object() && j.contains("preset")) preset = as_string(j.at("preset"), "preset");
    return config_from_json(j, preset_config(preset));
}

} // namespace aada
