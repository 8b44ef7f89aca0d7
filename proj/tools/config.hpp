#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>

#include "palcare/cohort.hpp"
#include "palcare/eval.hpp"
#include "palcare/model.hpp"
#include "palcare/synth.hpp"
#include "palcare/train.hpp"

namespace palcare::cli {

/// Flat `section.key = value` configuration. Every key has a default; see
/// README for the full list.
struct PipelineConfig {
    uint64_t seed = 42;
    std::filesystem::path data_dir = "data";
    std::filesystem::path out_dir = "out";
    std::optional<Day> snapshot_date;

    SynthConfig synth;
    CohortConfig cohort;
    int min_patient_count = 100;
    ModelConfig model;
    TrainConfig train;
    EvalOptions eval;

    PipelineConfig();

    /// Applies one key; throws Error(Config) for unknown keys or bad values.
    void set(const std::string& key, const std::string& value);
    void set_seed(uint64_t seed);
    void validate() const;

    /// Canonical key/value listing, used in stage manifests.
    std::map<std::string, std::string> echo() const;

    static PipelineConfig load(const std::filesystem::path& path);
};

}  // namespace palcare::cli
