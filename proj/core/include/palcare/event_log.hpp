#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "palcare/date.hpp"

namespace palcare {

enum class CodeCategory : uint8_t { Diagnosis, Procedure, Medication, Encounter };

inline constexpr std::array<CodeCategory, 4> kCodeCategories = {
    CodeCategory::Diagnosis, CodeCategory::Procedure, CodeCategory::Medication,
    CodeCategory::Encounter};

/// File tokens: DX, PX, RX, ENC.
std::string_view category_token(CodeCategory category);
std::optional<CodeCategory> parse_category(std::string_view token);

enum class Gender : uint8_t { Female, Male };

std::string_view gender_token(Gender gender);
std::optional<Gender> parse_gender(std::string_view token);
inline Gender opposite(Gender g) { return g == Gender::Female ? Gender::Male : Gender::Female; }

/// Encounter codes with special meaning to cohort construction.
inline constexpr std::string_view kInpatientEncounter = "Inpatient";

/// One coded event. Events are owned by their PatientRecord, so the patient id
/// is implied by containment.
struct Event {
    Day date;
    CodeCategory category = CodeCategory::Diagnosis;
    std::string code;

    bool operator==(const Event&) const = default;
};

/// Canonical event order: date, then category, then code.
bool event_less(const Event& a, const Event& b);

struct Demographics {
    Day birth_date;
    Gender gender = Gender::Female;
    std::string race;
    std::string ethnicity;

    bool operator==(const Demographics&) const = default;
};

struct PatientRecord {
    std::string patient_id;
    Demographics demographics;
    std::optional<Day> death_date;
    std::vector<Event> events;  // sorted by event_less

    bool operator==(const PatientRecord&) const = default;

    bool is_inpatient_admission(Day day) const;
    std::optional<Day> first_encounter() const;
    std::optional<Day> last_encounter() const;
};

/// Immutable once built; patients are sorted by patient_id.
class Snapshot {
public:
    Snapshot() = default;
    /// Validates every invariant and throws Error(Validation) on violation.
    Snapshot(Day snapshot_date, std::vector<PatientRecord> patients);

    Day snapshot_date() const { return snapshot_date_; }
    const std::vector<PatientRecord>& patients() const { return patients_; }
    const PatientRecord* find(std::string_view patient_id) const;
    size_t event_count() const;

private:
    Day snapshot_date_;
    std::vector<PatientRecord> patients_;
};

/// Reads the tab-separated patients and events files. When `snapshot_date` is
/// not given, the latest event or death date is used.
Snapshot load_snapshot(const std::filesystem::path& patients_path,
                       const std::filesystem::path& events_path,
                       std::optional<Day> snapshot_date = std::nullopt);

void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& patients_path,
                    const std::filesystem::path& events_path);

/// Throws Error(Validation) if the record breaks an invariant.
void validate_patient(const PatientRecord& patient, std::optional<Day> snapshot_date);

}  // namespace palcare
