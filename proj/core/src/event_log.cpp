#include "palcare/event_log.hpp"

#include <algorithm>
#include <limits>
#include <map>
#include <tuple>

#include <spdlog/spdlog.h>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

constexpr std::string_view kPatientsHeader =
    "patient_id\tbirth_date\tgender\trace\tethnicity\tdeath_date";
constexpr std::string_view kEventsHeader = "patient_id\tdate\tcategory\tcode";

bool has_control_chars(std::string_view token) {
    return std::any_of(token.begin(), token.end(),
                       [](char c) { return c == '\t' || c == '\n' || c == '\r'; });
}

Day require_date(std::string_view field, const std::string& where) {
    auto day = Day::parse(field);
    if (!day) {
        throw Error(ErrorKind::Parse,
                    where + ": invalid ISO-8601 date '" + std::string(field) + "'");
    }
    return *day;
}

}  // namespace

std::string_view category_token(CodeCategory category) {
    switch (category) {
    case CodeCategory::Diagnosis: return "DX";
    case CodeCategory::Procedure: return "PX";
    case CodeCategory::Medication: return "RX";
    case CodeCategory::Encounter: return "ENC";
    }
    return "?";
}

std::optional<CodeCategory> parse_category(std::string_view token) {
    for (CodeCategory c : kCodeCategories) {
        if (category_token(c) == token) {
            return c;
        }
    }
    return std::nullopt;
}

std::string_view gender_token(Gender gender) {
    return gender == Gender::Female ? "female" : "male";
}

std::optional<Gender> parse_gender(std::string_view token) {
    if (token == "female") return Gender::Female;
    if (token == "male") return Gender::Male;
    return std::nullopt;
}

bool event_less(const Event& a, const Event& b) {
    return std::tie(a.date, a.category, a.code) < std::tie(b.date, b.category, b.code);
}

bool PatientRecord::is_inpatient_admission(Day day) const {
    auto it = std::lower_bound(events.begin(), events.end(), day,
                               [](const Event& e, Day d) { return e.date < d; });
    for (; it != events.end() && it->date == day; ++it) {
        if (it->category == CodeCategory::Encounter && it->code == kInpatientEncounter) {
            return true;
        }
    }
    return false;
}

std::optional<Day> PatientRecord::first_encounter() const {
    for (const Event& e : events) {
        if (e.category == CodeCategory::Encounter) return e.date;
    }
    return std::nullopt;
}

std::optional<Day> PatientRecord::last_encounter() const {
    for (auto it = events.rbegin(); it != events.rend(); ++it) {
        if (it->category == CodeCategory::Encounter) return it->date;
    }
    return std::nullopt;
}

void validate_patient(const PatientRecord& patient, std::optional<Day> snapshot_date) {
    const std::string who = "patient '" + patient.patient_id + "'";
    if (patient.patient_id.empty() || has_control_chars(patient.patient_id)) {
        throw Error(ErrorKind::Validation, "patient id must be a non-empty token");
    }
    if (has_control_chars(patient.demographics.race) ||
        has_control_chars(patient.demographics.ethnicity)) {
        throw Error(ErrorKind::Validation, who + ": race/ethnicity contain control characters");
    }
    if (patient.death_date && snapshot_date && *patient.death_date > *snapshot_date) {
        throw Error(ErrorKind::Validation, who + ": death date after snapshot date");
    }
    for (size_t i = 0; i < patient.events.size(); ++i) {
        const Event& e = patient.events[i];
        if (e.code.empty() || has_control_chars(e.code)) {
            throw Error(ErrorKind::Validation, who + ": event codes must be non-empty tokens");
        }
        if (i > 0 && event_less(e, patient.events[i - 1])) {
            throw Error(ErrorKind::Validation, who + ": events are not sorted");
        }
        if (e.date < patient.demographics.birth_date) {
            throw Error(ErrorKind::Validation,
                        who + ": event on " + e.date.iso() + " precedes birth date");
        }
        if (patient.death_date && e.date > *patient.death_date) {
            throw Error(ErrorKind::Validation,
                        who + ": event on " + e.date.iso() + " after death date");
        }
        if (snapshot_date && e.date > *snapshot_date) {
            throw Error(ErrorKind::Validation,
                        who + ": event on " + e.date.iso() + " after snapshot date");
        }
    }
}

Snapshot::Snapshot(Day snapshot_date, std::vector<PatientRecord> patients)
    : snapshot_date_(snapshot_date), patients_(std::move(patients)) {
    std::sort(patients_.begin(), patients_.end(),
              [](const PatientRecord& a, const PatientRecord& b) {
                  return a.patient_id < b.patient_id;
              });
    for (size_t i = 0; i < patients_.size(); ++i) {
        if (i > 0 && patients_[i].patient_id == patients_[i - 1].patient_id) {
            throw Error(ErrorKind::Validation,
                        "duplicate patient id '" + patients_[i].patient_id + "'");
        }
        validate_patient(patients_[i], snapshot_date_);
    }
}

const PatientRecord* Snapshot::find(std::string_view patient_id) const {
    auto it = std::lower_bound(patients_.begin(), patients_.end(), patient_id,
                               [](const PatientRecord& p, std::string_view id) {
                                   return p.patient_id < id;
                               });
    if (it == patients_.end() || it->patient_id != patient_id) {
        return nullptr;
    }
    return &*it;
}

size_t Snapshot::event_count() const {
    size_t n = 0;
    for (const auto& p : patients_) n += p.events.size();
    return n;
}

Snapshot load_snapshot(const std::filesystem::path& patients_path,
                       const std::filesystem::path& events_path,
                       std::optional<Day> snapshot_date) {
    std::vector<PatientRecord> patients;
    std::map<std::string, size_t, std::less<>> by_id;
    std::string line;

    text::LineReader preader(patients_path);
    if (!preader.next(line) || line != kPatientsHeader) {
        throw Error(ErrorKind::Parse, preader.where() + ": missing or unexpected header");
    }
    while (preader.next(line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 6) {
            throw Error(ErrorKind::Parse, preader.where() + ": expected 6 fields, got " +
                                              std::to_string(f.size()));
        }
        PatientRecord p;
        p.patient_id = std::string(f[0]);
        if (p.patient_id.empty()) {
            throw Error(ErrorKind::Parse, preader.where() + ": empty patient id");
        }
        p.demographics.birth_date = require_date(f[1], preader.where());
        auto gender = parse_gender(f[2]);
        if (!gender) {
            throw Error(ErrorKind::Parse,
                        preader.where() + ": unknown gender '" + std::string(f[2]) + "'");
        }
        p.demographics.gender = *gender;
        p.demographics.race = std::string(f[3]);
        p.demographics.ethnicity = std::string(f[4]);
        if (!f[5].empty()) {
            p.death_date = require_date(f[5], preader.where());
        }
        if (!by_id.emplace(p.patient_id, patients.size()).second) {
            throw Error(ErrorKind::Validation,
                        preader.where() + ": duplicate patient id '" + p.patient_id + "'");
        }
        patients.push_back(std::move(p));
    }

    text::LineReader ereader(events_path);
    if (!ereader.next(line) || line != kEventsHeader) {
        throw Error(ErrorKind::Parse, ereader.where() + ": missing or unexpected header");
    }
    while (ereader.next(line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 4) {
            throw Error(ErrorKind::Parse, ereader.where() + ": expected 4 fields, got " +
                                              std::to_string(f.size()));
        }
        auto it = by_id.find(f[0]);
        if (it == by_id.end()) {
            throw Error(ErrorKind::Validation,
                        ereader.where() + ": event references unknown patient '" +
                            std::string(f[0]) + "'");
        }
        PatientRecord& p = patients[it->second];
        Event e;
        e.date = require_date(f[1], ereader.where());
        auto category = parse_category(f[2]);
        if (!category) {
            throw Error(ErrorKind::Parse,
                        ereader.where() + ": unknown category '" + std::string(f[2]) + "'");
        }
        e.category = *category;
        e.code = std::string(f[3]);
        if (e.code.empty()) {
            throw Error(ErrorKind::Parse, ereader.where() + ": empty code");
        }
        if (p.death_date && e.date > *p.death_date) {
            throw Error(ErrorKind::Validation, ereader.where() + ": event for patient '" +
                                                   p.patient_id + "' dated after death date");
        }
        if (snapshot_date && e.date > *snapshot_date) {
            throw Error(ErrorKind::Validation, ereader.where() + ": event for patient '" +
                                                   p.patient_id + "' dated after snapshot date");
        }
        if (e.date < p.demographics.birth_date) {
            throw Error(ErrorKind::Validation, ereader.where() + ": event for patient '" +
                                                   p.patient_id + "' dated before birth");
        }
        p.events.push_back(std::move(e));
    }

    Day resolved = snapshot_date.value_or(Day(std::numeric_limits<int32_t>::min()));
    for (auto& p : patients) {
        std::sort(p.events.begin(), p.events.end(), event_less);
        if (!snapshot_date) {
            if (!p.events.empty()) resolved = std::max(resolved, p.events.back().date);
            if (p.death_date) resolved = std::max(resolved, *p.death_date);
            resolved = std::max(resolved, p.demographics.birth_date);
        }
    }
    spdlog::debug("loaded {} patients from {}", patients.size(), patients_path.string());
    return Snapshot(resolved, std::move(patients));
}

void write_snapshot(const Snapshot& snapshot, const std::filesystem::path& patients_path,
                    const std::filesystem::path& events_path) {
    auto pout = text::open_output(patients_path);
    pout << kPatientsHeader << '\n';
    for (const auto& p : snapshot.patients()) {
        pout << p.patient_id << '\t' << p.demographics.birth_date.iso() << '\t'
             << gender_token(p.demographics.gender) << '\t' << p.demographics.race << '\t'
             << p.demographics.ethnicity << '\t' << (p.death_date ? p.death_date->iso() : "")
             << '\n';
    }
    auto eout = text::open_output(events_path);
    eout << kEventsHeader << '\n';
    for (const auto& p : snapshot.patients()) {
        for (const auto& e : p.events) {
            eout << p.patient_id << '\t' << e.date.iso() << '\t' << category_token(e.category)
                 << '\t' << e.code << '\n';
        }
    }
    if (!pout || !eout) {
        throw Error(ErrorKind::Io, "failed writing snapshot files");
    }
}

}  // namespace palcare
