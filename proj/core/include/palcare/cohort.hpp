#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "palcare/event_log.hpp"

namespace palcare {

/// Interval constraints in days. Three months map to 90 days, twelve to 365.
struct CohortConfig {
    int32_t lead_min = 90;
    int32_t lead_max = 365;
    int32_t history_min = 365;
    int32_t followup_min = 365;
    std::array<double, 3> split_ratios = {0.8, 0.1, 0.1};
    uint64_t seed = 42;

    void validate() const;
};

enum class Label : uint8_t { Negative, Positive };
enum class Split : uint8_t { Train, Validation, Test };

std::string_view label_token(Label label);
std::string_view split_token(Split split);

struct PredictionPoint {
    std::string patient_id;
    Day prediction_date;
    Label label = Label::Negative;
    bool admitted = false;
    Split split = Split::Train;

    bool operator==(const PredictionPoint&) const = default;
};

/// A patient's record truncated at the prediction date. Deliberately carries
/// no death date: featurization only ever sees this type.
struct CensoredPatient {
    std::string patient_id;
    Demographics demographics;
    Day prediction_date;
    std::vector<Event> events;  // all dated <= prediction_date

    bool operator==(const CensoredPatient&) const = default;
};

std::optional<Day> select_prediction_date_positive(const PatientRecord& patient,
                                                   const CohortConfig& config);
std::optional<Day> select_prediction_date_negative(const PatientRecord& patient,
                                                   const CohortConfig& config);

/// Shifts inpatient prediction dates to the second day of admission. Returns
/// nothing if the shifted point no longer satisfies its label constraints.
std::optional<PredictionPoint> adjust_admitted(PredictionPoint point,
                                               const PatientRecord& patient,
                                               const CohortConfig& config);

/// Label constraints on a given prediction date (history, lead or follow-up).
/// Does not require the date to be an encounter date.
bool satisfies_label_constraints(const PatientRecord& patient, Day prediction_date,
                                 Label label, const CohortConfig& config);

CensoredPatient censor(const PatientRecord& patient, Day prediction_date);
CensoredPatient censor(const CensoredPatient& patient, Day prediction_date);

struct CohortStats {
    struct Row {
        size_t alive = 0;
        size_t deceased = 0;
        size_t total() const { return alive + deceased; }
    };
    Row in_ehr;
    Row selected;
    Row admitted;
    // Filled in once splits are assigned.
    std::array<Row, 3> by_split{};

    void write(std::ostream& out) const;
};

struct Cohort {
    std::vector<PredictionPoint> points;  // sorted by patient_id
    CohortStats stats;
};

/// Selects and adjusts one prediction point per eligible patient. Splits are
/// left at Train; call split_cohort to assign them.
Cohort build_cohort(const Snapshot& snapshot, const CohortConfig& config);

/// Per-patient uniform assignment, deterministic given the seed.
void split_cohort(std::vector<PredictionPoint>& points, const std::array<double, 3>& ratios,
                  uint64_t seed);

void tally_splits(Cohort& cohort);

void write_points(const std::vector<PredictionPoint>& points,
                  const std::filesystem::path& path);

/// With `hide_test_labels`, test rows come back labelled Negative.
std::vector<PredictionPoint> read_points(const std::filesystem::path& path,
                                         bool hide_test_labels = false);

}  // namespace palcare
