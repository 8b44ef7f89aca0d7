#include "palcare/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "palcare/error.hpp"
#include "palcare/eval.hpp"
#include "palcare/text.hpp"

namespace palcare {

void TrainConfig::validate() const {
    if (batch_size < 1) throw Error(ErrorKind::Config, "train: batch_size must be >= 1");
    if (snapshot_every < 1) throw Error(ErrorKind::Config, "train: snapshot_every must be >= 1");
    if (max_iterations < 1) throw Error(ErrorKind::Config, "train: max_iterations must be >= 1");
    if (!(adam.learning_rate >= 0.0)) {
        throw Error(ErrorKind::Config, "train: learning rate must be non-negative");
    }
}

double validation_average_precision(std::span<const double> scores,
                                    std::span<const double> labels) {
    std::vector<ScoredExample> examples(scores.size());
    for (size_t i = 0; i < scores.size(); ++i) {
        examples[i] = {scores[i], labels[i] > 0.5, false};
    }
    return pr_curve_and_ap(examples).average_precision;
}

TrainResult train(const SparseMatrix& train_x, std::span<const double> train_y,
                  const SparseMatrix& val_x, std::span<const double> val_y,
                  const ModelConfig& model_config, const TrainConfig& train_config,
                  const MetricFn& metric) {
    train_config.validate();
    if (train_x.rows() == 0 || train_x.rows() != train_y.size() || val_x.rows() != val_y.size()) {
        throw Error(ErrorKind::Validation, "train: inconsistent matrix and label sizes");
    }
    if (train_x.cols() != model_config.input_dim || val_x.cols() != model_config.input_dim) {
        throw Error(ErrorKind::Validation, "train: feature dimension does not match the model");
    }

    MLPParams params = init_params(model_config);
    AdamState adam = AdamState::fresh(params, train_config.adam);
    std::mt19937_64 rng(train_config.seed);
    std::vector<size_t> order(train_x.rows());
    std::iota(order.begin(), order.end(), size_t{0});
    size_t cursor = order.size();

    TrainResult result;
    result.best_metric = -std::numeric_limits<double>::infinity();
    double loss_sum = 0.0;
    size_t loss_count = 0;
    std::vector<SparseRow> rows;
    std::vector<double> labels;

    for (size_t iteration = 1; iteration <= train_config.max_iterations; ++iteration) {
        rows.clear();
        labels.clear();
        while (rows.size() < train_config.batch_size) {
            if (cursor == order.size()) {
                std::shuffle(order.begin(), order.end(), rng);
                cursor = 0;
            }
            const size_t r = order[cursor++];
            rows.push_back(train_x.row(r));
            labels.push_back(train_y[r]);
            if (rows.size() == order.size()) break;
        }
        LossAndGradients step;
        try {
            step = loss_and_gradients(params, rows, labels);
        } catch (const Error& e) {
            if (e.kind() != ErrorKind::Numeric) throw;
            throw Error(ErrorKind::Numeric,
                        fmt::format("training diverged at iteration {}: {}", iteration, e.what()));
        }
        auto& [loss, grads] = step;
        if (!std::isfinite(loss)) {
            throw Error(ErrorKind::Numeric, fmt::format("training diverged at iteration {}", iteration));
        }
        adam_step(params, grads, adam);
        if (!params.all_finite()) {
            throw Error(ErrorKind::Numeric,
                        fmt::format("non-finite parameters after iteration {}", iteration));
        }
        loss_sum += loss;
        ++loss_count;

        if (iteration % train_config.snapshot_every == 0 ||
            iteration == train_config.max_iterations) {
            const std::vector<double> scores = predict(params, val_x);
            const double score = metric(scores, val_y);
            const double mean_loss = loss_sum / double(loss_count);
            result.log.push_back({iteration, mean_loss, score});
            spdlog::info("iteration {:>6}  train loss {:.5f}  validation metric {:.5f}", iteration,
                         mean_loss, score);
            if (result.best.layers.empty() || score > result.best_metric) {
                result.best_metric = score;
                result.best_iteration = iteration;
                result.best = params;
            }
            loss_sum = 0.0;
            loss_count = 0;
        }
    }
    return result;
}

void write_train_log(const std::vector<TrainLogEntry>& log, const std::filesystem::path& path) {
    auto out = text::open_output(path);
    out << "iteration\tloss\tval_ap\n";
    for (const auto& e : log) {
        out << e.iteration << '\t' << text::format_double(e.train_loss) << '\t'
            << text::format_double(e.val_metric) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

}  // namespace palcare
