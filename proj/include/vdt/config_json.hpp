// JSON (de)serialization of configs. Parsing rejects unknown keys so typos in
// run files fail loudly.
#pragma once

#include <json.hpp>

#include "vdt/trainer.hpp"

namespace vdt {

nlohmann::json to_json(const NetworkConfig& c);
NetworkConfig network_config_from_json(const nlohmann::json& j);

nlohmann::json to_json(const DatasetSpec& s);
DatasetSpec dataset_spec_from_json(const nlohmann::json& j);

nlohmann::json to_json(const TrainConfig& c);
TrainConfig train_config_from_json(const nlohmann::json& j);

// Run file = TrainConfig keys plus optional "out_dir".
struct RunConfig {
    TrainConfig train;
    std::string out_dir;  // empty when not set
};
RunConfig run_config_from_json(const nlohmann::json& j);

}  // namespace vdt
