#pragma once

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "config.hpp"

namespace palcare::cli {

/// Optional per-stage overrides of upstream artifact locations.
struct StageInputs {
    std::optional<std::filesystem::path> patients;
    std::optional<std::filesystem::path> events;
    std::optional<std::filesystem::path> cohort;
    std::optional<std::filesystem::path> features;
    std::optional<std::filesystem::path> vocab;
    std::optional<std::filesystem::path> model;
    std::optional<std::filesystem::path> descriptions;
};

struct Stage {
    const PipelineConfig& config;
    StageInputs inputs;
    std::filesystem::path out_dir;
};

/// Artifact names inside a stage's output directory.
namespace artifact {
inline constexpr const char* kPatients = "patients.tsv";
inline constexpr const char* kEvents = "events.tsv";
inline constexpr const char* kCohort = "cohort.tsv";
inline constexpr const char* kCohortStats = "cohort_stats.txt";
inline constexpr const char* kKmPositive = "km_positive.tsv";
inline constexpr const char* kKmNegative = "km_negative.tsv";
inline constexpr const char* kVocab = "vocab.tsv";
inline constexpr const char* kFeatures = "features.tsv";
inline constexpr const char* kModel = "model.ckpt";
inline constexpr const char* kTrainLog = "train_log.tsv";
inline constexpr const char* kTestScores = "test_scores.tsv";
inline constexpr const char* kEvalReport = "eval_report.txt";
}  // namespace artifact

/// Writes patients.tsv and events.tsv; returns the realized death prevalence.
double cmd_synth(const Stage& stage);
void cmd_cohort(const Stage& stage);
void cmd_featurize(const Stage& stage);
void cmd_train(const Stage& stage);
void cmd_eval(const Stage& stage);

/// Explains the listed patients, or the `top_k` highest-scoring test patients
/// when the list is empty. Returns the report paths.
std::vector<std::filesystem::path> cmd_explain(const Stage& stage,
                                               const std::vector<std::string>& patient_ids,
                                               size_t top_k);

}  // namespace palcare::cli
