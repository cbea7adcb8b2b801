#include "config.hpp"

#include <algorithm>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <set>

#include "errors.hpp"

namespace vascl {

namespace {

using nlohmann::json;

void reject_unknown(const json& j, const std::set<std::string>& allowed, const std::string& where) {
    if (!j.is_object()) throw ConfigError("config: " + where + " must be an object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!allowed.count(it.key())) {
            throw ConfigError("config: unknown key \"" + it.key() + "\" in " + where);
        }
    }
}

template <typename T>
T get_or(const json& j, const char* key, T fallback) {
    if (!j.contains(key)) return fallback;
    try {
        return j.at(key).get<T>();
    } catch (const json::exception& e) {
        throw ConfigError(std::string("config: bad value for \"") + key + "\": " + e.what());
    }
}

DataConfig parse_data(const json& j) {
    reject_unknown(j, {"kind", "components", "dim", "n", "scale", "std", "path"}, "data");
    DataConfig d;
    const std::string kind = get_or<std::string>(j, "kind", "mixture");
    if (kind == "mixture") {
        d.kind = DataConfig::Kind::Mixture;
    } else if (kind == "file") {
        d.kind = DataConfig::Kind::File;
    } else {
        throw ConfigError("config: data.kind must be \"mixture\" or \"file\"");
    }
    d.components = get_or<std::size_t>(j, "components", d.components);
    d.dim = get_or<std::size_t>(j, "dim", d.dim);
    d.n = get_or<std::size_t>(j, "n", d.n);
    d.scale = get_or<double>(j, "scale", d.scale);
    d.std_dev = get_or<double>(j, "std", d.std_dev);
    d.path = get_or<std::string>(j, "path", d.path);
    if (d.kind == DataConfig::Kind::File && d.path.empty()) {
        throw ConfigError("config: data.kind \"file\" requires data.path");
    }
    return d;
}

ModelConfig parse_model(const json& j) {
    reject_unknown(j, {"encoder_layers", "activation", "dropout", "head_layers", "head_hidden",
                       "head_out"},
                   "model");
    ModelConfig m;
    m.encoder_layers = get_or<std::vector<std::size_t>>(j, "encoder_layers", m.encoder_layers);
    m.activation = get_or<std::string>(j, "activation", m.activation);
    m.dropout = get_or<double>(j, "dropout", m.dropout);
    m.head_layers = get_or<std::size_t>(j, "head_layers", m.head_layers);
    m.head_hidden = get_or<std::size_t>(j, "head_hidden", m.head_hidden);
    m.head_out = get_or<std::size_t>(j, "head_out", m.head_out);
    return m;
}

LossConfig parse_loss(const json& j) {
    reject_unknown(j, {"tau", "k", "delta", "inner_steps", "init_std",
                       "stop_gradient_through_delta"},
                   "loss");
    LossConfig l;
    l.tau = get_or<double>(j, "tau", l.tau);
    l.k = get_or<std::size_t>(j, "k", l.k);
    l.delta = get_or<double>(j, "delta", l.delta);
    l.inner_steps = get_or<std::size_t>(j, "inner_steps", l.inner_steps);
    l.init_std = get_or<double>(j, "init_std", l.init_std);
    l.stop_gradient_through_delta =
        get_or<bool>(j, "stop_gradient_through_delta", l.stop_gradient_through_delta);
    return l;
}

OptimConfig parse_optim(const json& j) {
    reject_unknown(j, {"lr_head", "lr_encoder", "beta1", "beta2", "eps"}, "optimizer");
    OptimConfig o;
    o.lr_head = get_or<double>(j, "lr_head", o.lr_head);
    o.lr_encoder = get_or<double>(j, "lr_encoder", o.lr_encoder);
    o.beta1 = get_or<double>(j, "beta1", o.beta1);
    o.beta2 = get_or<double>(j, "beta2", o.beta2);
    o.eps = get_or<double>(j, "eps", o.eps);
    return o;
}

ScheduleConfig parse_schedule(const json& j) {
    reject_unknown(j, {"epochs", "batch_size", "eval_every", "max_steps"}, "schedule");
    ScheduleConfig s;
    s.epochs = get_or<std::size_t>(j, "epochs", s.epochs);
    s.batch_size = get_or<std::size_t>(j, "batch_size", s.batch_size);
    s.eval_every = get_or<std::size_t>(j, "eval_every", s.eval_every);
    s.max_steps = get_or<std::size_t>(j, "max_steps", s.max_steps);
    return s;
}

EvalOptions parse_eval(const json& j) {
    reject_unknown(j, {"holdout_fraction", "validation_metric", "kmeans_runs", "probe_splits",
                       "probe_shots", "distance", "purity_k", "num_pairs"},
                   "eval");
    EvalOptions e;
    e.holdout_fraction = get_or<double>(j, "holdout_fraction", e.holdout_fraction);
    e.validation_metric = get_or<std::string>(j, "validation_metric", e.validation_metric);
    e.kmeans_runs = get_or<std::size_t>(j, "kmeans_runs", e.kmeans_runs);
    e.probe_splits = get_or<std::size_t>(j, "probe_splits", e.probe_splits);
    e.probe_shots = get_or<std::size_t>(j, "probe_shots", e.probe_shots);
    e.distance = get_or<std::string>(j, "distance", e.distance);
    e.purity_k = get_or<std::vector<std::size_t>>(j, "purity_k", e.purity_k);
    e.num_pairs = get_or<std::size_t>(j, "num_pairs", e.num_pairs);
    return e;
}

}  // namespace

DistanceKind distance_from_string(const std::string& name) {
    if (name == "cosine") return DistanceKind::Cosine;
    if (name == "euclidean") return DistanceKind::Euclidean;
    throw ConfigError("config: distance must be \"cosine\" or \"euclidean\"");
}

ExperimentConfig ExperimentConfig::from_json(const json& j) {
    reject_unknown(j, {"seed", "mode", "data", "model", "loss", "optimizer", "schedule", "eval"},
                   "top level");
    ExperimentConfig c;
    c.seed_explicit = j.contains("seed");
    c.seed = get_or<std::uint64_t>(j, "seed", c.seed);
    c.mode = get_or<std::string>(j, "mode", c.mode);
    if (j.contains("data")) c.data = parse_data(j.at("data"));
    if (j.contains("model")) c.model = parse_model(j.at("model"));
    if (j.contains("loss")) c.loss = parse_loss(j.at("loss"));
    if (j.contains("optimizer")) c.optim = parse_optim(j.at("optimizer"));
    if (j.contains("schedule")) c.schedule = parse_schedule(j.at("schedule"));
    if (j.contains("eval")) c.eval = parse_eval(j.at("eval"));
    c.validate();
    return c;
}

ExperimentConfig ExperimentConfig::from_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("config: cannot open: " + path);
    json j;
    try {
        in >> j;
    } catch (const json::exception& e) {
        throw ConfigError("config: invalid JSON in " + path + ": " + e.what());
    }
    ExperimentConfig c = from_json(j);
    if (!c.seed_explicit) {
        // VASCL_SEED overrides the default seed when the config omits one
        if (const char* env = std::getenv("VASCL_SEED")) {
            c.seed = std::strtoull(env, nullptr, 10);
        }
    }
    return c;
}

void ExperimentConfig::validate() const {
    if (mode != "vascl" && mode != "dropout-only-baseline") {
        throw ConfigError("config: mode must be \"vascl\" or \"dropout-only-baseline\"");
    }
    loss.validate();
    if (model.head_layers != 2) {
        throw ConfigError("config: the contrastive head has exactly 2 layers");
    }
    if (!(model.dropout >= 0.0 && model.dropout < 1.0)) {
        throw ConfigError("config: model.dropout must be in [0, 1)");
    }
    activation_from_string(model.activation);
    distance_from_string(eval.distance);
    if (model.head_out == 0) throw ConfigError("config: model.head_out must be positive");
    if (optim.lr_head <= 0.0 || optim.lr_encoder <= 0.0) {
        throw ConfigError("config: learning rates must be positive");
    }
    if (schedule.batch_size < 2) throw ConfigError("config: schedule.batch_size must be >= 2");
    if (schedule.epochs == 0) throw ConfigError("config: schedule.epochs must be >= 1");
    if (schedule.eval_every == 0) throw ConfigError("config: schedule.eval_every must be >= 1");
    if (!(eval.holdout_fraction >= 0.0 && eval.holdout_fraction < 1.0)) {
        throw ConfigError("config: eval.holdout_fraction must be in [0, 1)");
    }
    if (eval.validation_metric != "purity10" && eval.validation_metric != "spearman") {
        throw ConfigError("config: eval.validation_metric must be \"purity10\" or \"spearman\"");
    }
    if (data.kind == DataConfig::Kind::Mixture) {
        if (data.components == 0 || data.dim == 0 || data.n == 0) {
            throw ConfigError("config: mixture dimensions must be positive");
        }
        if (data.std_dev <= 0.0) throw ConfigError("config: mixture std must be > 0");
    }
}

nlohmann::json ExperimentConfig::to_json() const {
    json j;
    j["seed"] = seed;
    j["mode"] = mode;
    j["data"]["kind"] = data.kind == DataConfig::Kind::Mixture ? "mixture" : "file";
    if (data.kind == DataConfig::Kind::Mixture) {
        j["data"]["components"] = data.components;
        j["data"]["dim"] = data.dim;
        j["data"]["n"] = data.n;
        j["data"]["scale"] = data.scale;
        j["data"]["std"] = data.std_dev;
    } else {
        j["data"]["path"] = data.path;
    }
    j["model"]["encoder_layers"] = model.encoder_layers;
    j["model"]["activation"] = model.activation;
    j["model"]["dropout"] = model.dropout;
    j["model"]["head_layers"] = model.head_layers;
    j["model"]["head_hidden"] = model.head_hidden;
    j["model"]["head_out"] = model.head_out;
    j["loss"]["tau"] = loss.tau;
    j["loss"]["k"] = loss.k;
    j["loss"]["delta"] = loss.delta;
    j["loss"]["inner_steps"] = loss.inner_steps;
    j["loss"]["init_std"] = loss.init_std;
    j["loss"]["stop_gradient_through_delta"] = loss.stop_gradient_through_delta;
    j["optimizer"]["lr_head"] = optim.lr_head;
    j["optimizer"]["lr_encoder"] = optim.lr_encoder;
    j["optimizer"]["beta1"] = optim.beta1;
    j["optimizer"]["beta2"] = optim.beta2;
    j["optimizer"]["eps"] = optim.eps;
    j["schedule"]["epochs"] = schedule.epochs;
    j["schedule"]["batch_size"] = schedule.batch_size;
    j["schedule"]["eval_every"] = schedule.eval_every;
    j["schedule"]["max_steps"] = schedule.max_steps;
    j["eval"]["holdout_fraction"] = eval.holdout_fraction;
    j["eval"]["validation_metric"] = eval.validation_metric;
    j["eval"]["kmeans_runs"] = eval.kmeans_runs;
    j["eval"]["probe_splits"] = eval.probe_splits;
    j["eval"]["probe_shots"] = eval.probe_shots;
    j["eval"]["distance"] = eval.distance;
    j["eval"]["purity_k"] = eval.purity_k;
    j["eval"]["num_pairs"] = eval.num_pairs;
    return j;
}

std::string ExperimentConfig::hash() const {
    // FNV-1a 64 over the canonical (sorted-key) serialization
    const std::string s = to_json().dump();
    std::uint64_t h = 0xcbf29ce484222325ull;
    for (unsigned char ch : s) {
        h ^= ch;
        h *= 0x100000001b3ull;
    }
    char buf[17];
    std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(h));
    return std::string(buf);
}

}  // namespace vascl
