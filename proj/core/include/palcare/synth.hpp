#pragma once

#include <cstddef>
#include <cstdint>

#include "palcare/event_log.hpp"

namespace palcare {

/// Parameters of the synthetic population generator.
struct SynthConfig {
    size_t n_patients = 20000;
    double target_prevalence = 0.07;
    size_t diagnosis_codes = 600;
    size_t procedure_codes = 400;
    size_t medication_codes = 250;
    int32_t history_span = 1460;  // days of record before the snapshot date
    uint64_t seed = 42;
    Day snapshot_date = Day::from_ymd(2014, 12, 31);

    /// Throws Error(Config) when a field is out of range.
    void validate() const;
};

/// Latent per-patient state, exposed so tests can check the signal the
/// generator plants.
struct SynthLatent {
    std::string patient_id;
    double severity = 0.0;
    double death_probability = 0.0;
};

struct SynthResult {
    Snapshot snapshot;
    std::vector<SynthLatent> latent;  // same order as snapshot.patients()
    double realized_prevalence = 0.0;
};

/// Two-component (baseline / elevated severity) population with Poisson daily
/// encounter counts. Severity raises both the rate of a designated subset of
/// "risk" codes and the probability of death, so code counts carry signal.
/// Deterministic for a given config.
SynthResult generate_synthetic(const SynthConfig& config);

/// Risk codes are the first ~8% of each category's universe.
size_t risk_code_count(size_t universe_size);

}  // namespace palcare
