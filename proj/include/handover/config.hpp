#pragma once

// Layered run configuration: built-in defaults, then a JSON file, then
// command-line overrides. The effective config is echoed next to outputs.

#include "handover/features.hpp"
#include "handover/gripnet/train.hpp"
#include "handover/segmentation.hpp"
#include "handover/strategy.hpp"

#include <json.hpp>

#include <filesystem>
#include <memory>
#include <string>

namespace handover {

struct Config {
    features::FeatureConfig features;
    seg::SegmentationConfig segmentation;
    seg::Method segmentation_method = seg::Method::GripIntersection;
    strategy::Gr2Params gr2;  // model slot unused here
    strategy::LoadShareParams loadshare;
    strategy::PullForceParams pull;
    strategy::EngineOptions engine;
    gripnet::TrainConfig train;
    std::uint64_t seed = 42;

    // Throws Error(Parameter) on out-of-range values.
    void validate() const;
};

nlohmann::json to_json(const Config& config);

// Merge a partial JSON document over `base`. Unknown keys and wrong types
// are Format errors; the category bounds are fixed and may only be restated.
Config apply_patch(const Config& base, const nlohmann::json& patch);

Config load_config(const std::filesystem::path& file, const Config& base = {});

// "a.b.c=value": value is parsed as JSON when possible, else taken as a string.
Config apply_override(const Config& base, const std::string& assignment);

void write_config(const Config& config, const std::filesystem::path& dir);

strategy::StrategyKind make_strategy(strategy::StrategyTag tag, const Config& config,
                                     std::shared_ptr<const gripnet::VaeLstmModel> model);

}  // namespace handover
