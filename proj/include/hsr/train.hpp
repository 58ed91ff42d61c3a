#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "hsr/arch.hpp"
#include "hsr/data.hpp"
#include "hsr/nn.hpp"

namespace hsr {

struct TrainConfig {
    ArchName arch = ArchName::CI2;
    int scale = 2;
    bool final_relu = false;
    std::filesystem::path dataset;           // manifest path, used by train(config)
    std::optional<Degradation> degradation;  // train on one segment only; pooled otherwise
    std::size_t batch_size = 64;
    std::size_t max_epochs = 100;
    std::size_t patience = 10;
    std::uint64_t seed = 42;
    double validation_fraction = 0.05;
    AdamConfig adam{};
    // Cosine decay from adam.learning_rate to this value over max_epochs; constant when unset.
    std::optional<double> final_learning_rate;
    std::size_t threads = 1;
    std::filesystem::path checkpoint;  // best-validation model; skipped when empty
    std::filesystem::path log;         // appended per epoch; skipped when empty
};

struct EpochRecord {
    std::size_t epoch = 0;
    double train_loss = 0.0;
    double val_loss = 0.0;
    double seconds = 0.0;
    std::uint32_t parameter_checksum = 0;
};

struct TrainResult {
    Model model;  // best-validation parameters
    std::vector<EpochRecord> log;
    std::size_t best_epoch = 0;
    double best_val_loss = 0.0;
    std::size_t train_pairs = 0;
    std::size_t val_pairs = 0;
};

std::uint32_t parameter_checksum(const Model& model);

// `on_epoch` is called after each completed epoch.
TrainResult train(const TrainConfig& config, const std::vector<PatchPair>& pairs,
                  const std::function<void(const EpochRecord&)>& on_epoch = {});

double learning_rate_at(const TrainConfig& config, std::size_t epoch);

// Loads config.dataset, rejecting a scale mismatch before any training.
TrainResult train(const TrainConfig& config, const std::function<void(const EpochRecord&)>& on_epoch = {});

// Mean per-pair loss of a model over a set of pairs.
double mean_loss(const Model& model, const std::vector<PatchPair>& pairs, std::span<const std::size_t> indices,
                 std::size_t threads = 1);

// Runs fn(i) for i in [0, n) over up to `threads` workers, contiguous chunks.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& fn);

}  // namespace hsr
