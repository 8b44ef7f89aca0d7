#pragma once

#include <cstdint>
#include <filesystem>
#include <functional>
#include <span>
#include <vector>

#include "palcare/model.hpp"
#include "palcare/sparse.hpp"

namespace palcare {

struct TrainConfig {
    size_t batch_size = 128;
    size_t snapshot_every = 250;
    size_t max_iterations = 2500;
    uint64_t seed = 42;
    AdamHyper adam;

    void validate() const;
};

struct TrainLogEntry {
    size_t iteration = 0;
    double train_loss = 0.0;  // mean batch loss since the previous snapshot
    double val_metric = 0.0;
};

struct TrainResult {
    MLPParams best;
    size_t best_iteration = 0;
    double best_metric = 0.0;
    std::vector<TrainLogEntry> log;
};

/// Validation score used for snapshot selection; higher is better.
using MetricFn = std::function<double(std::span<const double> scores,
                                      std::span<const double> labels)>;

/// Average precision of `scores` against 0/1 `labels`.
double validation_average_precision(std::span<const double> scores,
                                    std::span<const double> labels);

/// Mini-batch Adam on shuffled epochs. Snapshots are scored on the validation
/// set every `snapshot_every` iterations and after the last iteration; the
/// best-scoring snapshot is returned (earliest on ties).
TrainResult train(const SparseMatrix& train_x, std::span<const double> train_y,
                  const SparseMatrix& val_x, std::span<const double> val_y,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const MetricFn& metric = validation_average_precision);

void write_train_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path);

}  // namespace palcare
