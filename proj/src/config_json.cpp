#include "vdt/config_json.hpp"

#include <set>
#include <string>

#include "vdt/errors.hpp"

namespace vdt {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::set<std::string>& known,
                         const std::string& where) {
    if (!j.is_object()) throw ConfigError(where + ": expected a JSON object");
    for (auto it = j.begin(); it != j.end(); ++it) {
        if (!known.count(it.key())) {
            throw ConfigError(where + ": unknown key '" + it.key() + "'");
        }
    }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
    if (j.contains(key)) {
        try {
            out = j.at(key).get<T>();
        } catch (const json::exception& e) {
            throw ConfigError(std::string("config key '") + key + "': " + e.what());
        }
    }
}

}  // namespace

json to_json(const NetworkConfig& c) {
    return json{{"input_dim", c.input_dim},
                {"hidden_dims", c.hidden_dims},
                {"time_embed_dim", c.time_embed_dim},
                {"num_labels", c.num_labels},
                {"label_embed_dim", c.label_embed_dim},
                {"activation", c.activation == Activation::SmoothGated ? "smooth-gated" : "tanh"}};
}

NetworkConfig network_config_from_json(const json& j) {
    reject_unknown_keys(j, {"input_dim", "hidden_dims", "time_embed_dim", "num_labels",
                            "label_embed_dim", "activation"},
                        "network");
    NetworkConfig c;
    read(j, "input_dim", c.input_dim);
    read(j, "hidden_dims", c.hidden_dims);
    read(j, "time_embed_dim", c.time_embed_dim);
    read(j, "num_labels", c.num_labels);
    read(j, "label_embed_dim", c.label_embed_dim);
    if (j.contains("activation")) {
        const std::string a = j.at("activation").get<std::string>();
        if (a == "smooth-gated") {
            c.activation = Activation::SmoothGated;
        } else if (a == "tanh") {
            c.activation = Activation::Tanh;
        } else {
            throw ConfigError("network: unknown activation '" + a + "'");
        }
    }
    // Conditional nets default to a 16-dim label embedding unless overridden.
    if (c.num_labels > 0 && c.label_embed_dim == 0 && !j.contains("label_embed_dim")) {
        c.label_embed_dim = 16;
    }
    c.validate();
    return c;
}

json to_json(const DatasetSpec& s) {
    return json{{"name", s.name}, {"labels", s.labels_enabled}};
}

DatasetSpec dataset_spec_from_json(const json& j) {
    DatasetSpec s;
    if (j.is_string()) {
        s.name = j.get<std::string>();
    } else {
        reject_unknown_keys(j, {"name", "labels"}, "dataset");
        read(j, "name", s.name);
        read(j, "labels", s.labels_enabled);
    }
    s.validate();
    return s;
}

namespace {

const std::set<std::string> kTrainKeys = {
    "horizon",      "batch_size",  "iterations",   "primal_steps", "primal_stepsize",
    "noise_std",    "dual_lr",     "adam_beta1",   "adam_beta2",   "adam_epsilon",
    "coupling",     "cfg_uncond_prob", "seed",     "source",       "target",
    "network",      "pool_size",   "eval_n"};

TrainConfig train_config_from_json_impl(const json& j) {
    TrainConfig c;
    read(j, "horizon", c.horizon);
    read(j, "batch_size", c.batch_size);
    read(j, "iterations", c.iterations);
    read(j, "primal_steps", c.primal_steps);
    read(j, "primal_stepsize", c.primal_stepsize);
    read(j, "noise_std", c.noise_std);
    read(j, "dual_lr", c.dual_lr);
    read(j, "adam_beta1", c.adam_beta1);
    read(j, "adam_beta2", c.adam_beta2);
    read(j, "adam_epsilon", c.adam_epsilon);
    if (j.contains("coupling")) c.coupling = coupling_from_string(j.at("coupling").get<std::string>());
    read(j, "cfg_uncond_prob", c.cfg_uncond_prob);
    read(j, "seed", c.seed);
    if (j.contains("source")) c.source = dataset_spec_from_json(j.at("source"));
    if (j.contains("target")) c.target = dataset_spec_from_json(j.at("target"));
    if (j.contains("network")) c.network = network_config_from_json(j.at("network"));
    read(j, "pool_size", c.pool_size);
    read(j, "eval_n", c.eval_n);
    c.validate();
    return c;
}

}  // namespace

json to_json(const TrainConfig& c) {
    return json{{"horizon", c.horizon},
                {"batch_size", c.batch_size},
                {"iterations", c.iterations},
                {"primal_steps", c.primal_steps},
                {"primal_stepsize", c.primal_stepsize},
                {"noise_std", c.noise_std},
                {"dual_lr", c.dual_lr},
                {"adam_beta1", c.adam_beta1},
                {"adam_beta2", c.adam_beta2},
                {"adam_epsilon", c.adam_epsilon},
                {"coupling", to_string(c.coupling)},
                {"cfg_uncond_prob", c.cfg_uncond_prob},
                {"seed", c.seed},
                {"source", to_json(c.source)},
                {"target", to_json(c.target)},
                {"network", to_json(c.network)},
                {"pool_size", c.pool_size},
                {"eval_n", c.eval_n}};
}

TrainConfig train_config_from_json(const json& j) {
    reject_unknown_keys(j, kTrainKeys, "train config");
    return train_config_from_json_impl(j);
}

RunConfig run_config_from_json(const json& j) {
    std::set<std::string> keys = kTrainKeys;
    keys.insert("out_dir");
    reject_unknown_keys(j, keys, "run config");
    RunConfig rc;
    rc.train = train_config_from_json_impl(j);
    read(j, "out_dir", rc.out_dir);
    return rc;
}

}  // namespace vdt
