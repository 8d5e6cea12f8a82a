#pragma once

// Mini-batch Adam training with a held-out split and early stopping.

#include "handover/gripnet/model.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace handover::gripnet {

enum class Stage { Pretrain, Finetune };

std::string_view to_string(Stage s);
Stage parse_stage(std::string_view text);

struct TrainConfig {
    std::size_t batch_size = 100;
    double learning_rate = 0.01;
    std::size_t max_epochs = 100;
    double test_fraction = 0.1;
    std::size_t patience = 10;
    double min_delta = 1e-4;
    std::uint64_t seed = 42;
    Stage stage = Stage::Pretrain;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double adam_eps = 1e-8;

    void validate() const;
};

struct EpochStats {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double train_accuracy = 0.0;
    double test_loss = 0.0;
    double test_accuracy = 0.0;
};

struct TrainResult {
    VaeLstmModel model;
    std::vector<EpochStats> curves;
    std::size_t best_epoch = 0;
    bool stopped_early = false;
    std::vector<std::size_t> train_indices;
    std::vector<std::size_t> test_indices;
};

// Fixed split of n windows from the seed: test_fraction of a seeded shuffle,
// rounded, at least one test window when n >= 2.
void split_indices(std::size_t n, const TrainConfig& config, std::vector<std::size_t>& train, std::vector<std::size_t>& test);

struct Evaluation {
    double loss = 0.0;  // eval-mode (z = mu) L_total
    double accuracy = 0.0;
    std::size_t true_pos = 0, false_pos = 0, true_neg = 0, false_neg = 0;
};

Evaluation evaluate(const VaeLstmModel& model, std::span<const GripWindow> windows, std::span<const std::size_t> indices);
Evaluation evaluate(const VaeLstmModel& model, std::span<const GripWindow> windows);

using EpochCallback = std::function<void(const EpochStats&)>;

// Without `initial` the model is randomly initialised from the seed and takes
// its normalization from the training split. With `initial` (required for
// finetune) training starts from its parameters and keeps its normalization.
TrainResult train(std::span<const GripWindow> dataset, const TrainConfig& config, const VaeLstmModel* initial = nullptr,
                  const EpochCallback& on_epoch = {});

}  // namespace handover::gripnet
