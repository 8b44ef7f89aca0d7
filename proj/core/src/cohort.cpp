#include "palcare/cohort.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

constexpr std::string_view kPointsHeader = "patient_id\tprediction_date\tlabel\tadmitted\tsplit";

// Encounter dates mapped to whether any encounter that day is an inpatient
// admission. Built by a full scan so event order does not matter.
std::map<Day, bool> encounter_days(const PatientRecord& patient) {
    std::map<Day, bool> days;
    for (const Event& e : patient.events) {
        if (e.category != CodeCategory::Encounter) continue;
        days[e.date] = days[e.date] || e.code == kInpatientEncounter;
    }
    return days;
}

template <typename Admissible>
std::optional<Day> choose(const std::map<Day, bool>& days, Admissible admissible, bool earliest) {
    std::vector<std::pair<Day, bool>> candidates;
    for (const auto& [day, inpatient] : days) {
        if (admissible(day)) candidates.emplace_back(day, inpatient);
    }
    if (candidates.empty()) return std::nullopt;
    bool any_inpatient = std::any_of(candidates.begin(), candidates.end(),
                                     [](const auto& c) { return c.second; });
    if (any_inpatient) {
        std::erase_if(candidates, [](const auto& c) { return !c.second; });
    }
    // candidates are in ascending date order (std::map iteration)
    return earliest ? candidates.front().first : candidates.back().first;
}

}  // namespace

void CohortConfig::validate() const {
    if (!(lead_min > 0 && lead_min < lead_max)) {
        throw Error(ErrorKind::Config, "cohort: require 0 < lead_min < lead_max");
    }
    if (history_min <= 0 || followup_min <= 0) {
        throw Error(ErrorKind::Config, "cohort: history_min and followup_min must be positive");
    }
    double sum = 0.0;
    for (double r : split_ratios) {
        if (!(r > 0.0)) throw Error(ErrorKind::Config, "cohort: split ratios must be positive");
        sum += r;
    }
    if (std::abs(sum - 1.0) > 1e-9) {
        throw Error(ErrorKind::Config, "cohort: split ratios must sum to 1");
    }
}

std::string_view label_token(Label label) {
    return label == Label::Positive ? "positive" : "negative";
}

std::string_view split_token(Split split) {
    switch (split) {
    case Split::Train: return "train";
    case Split::Validation: return "validation";
    case Split::Test: return "test";
    }
    return "?";
}

bool satisfies_label_constraints(const PatientRecord& patient, Day prediction_date, Label label,
                                 const CohortConfig& config) {
    auto days = encounter_days(patient);
    if (days.empty()) return false;
    const Day first = days.begin()->first;
    const Day last = days.rbegin()->first;
    if (prediction_date - first < config.history_min) return false;
    if (label == Label::Positive) {
        if (!patient.death_date) return false;
        int32_t lead = *patient.death_date - prediction_date;
        return lead >= config.lead_min && lead <= config.lead_max;
    }
    return !patient.death_date && last - prediction_date >= config.followup_min;
}

std::optional<Day> select_prediction_date_positive(const PatientRecord& patient,
                                                   const CohortConfig& config) {
    if (!patient.death_date) return std::nullopt;
    auto days = encounter_days(patient);
    if (days.empty()) return std::nullopt;
    const Day first = days.begin()->first;
    const Day death = *patient.death_date;
    return choose(
        days,
        [&](Day d) {
            int32_t lead = death - d;
            return lead >= config.lead_min && lead <= config.lead_max &&
                   d - first >= config.history_min;
        },
        /*earliest=*/true);
}

std::optional<Day> select_prediction_date_negative(const PatientRecord& patient,
                                                   const CohortConfig& config) {
    if (patient.death_date) return std::nullopt;
    auto days = encounter_days(patient);
    if (days.empty()) return std::nullopt;
    const Day first = days.begin()->first;
    const Day last = days.rbegin()->first;
    return choose(
        days,
        [&](Day d) { return last - d >= config.followup_min && d - first >= config.history_min; },
        /*earliest=*/false);
}

std::optional<PredictionPoint> adjust_admitted(PredictionPoint point,
                                               const PatientRecord& patient,
                                               const CohortConfig& config) {
    auto days = encounter_days(patient);
    auto it = days.find(point.prediction_date);
    if (it == days.end() || !it->second) {
        point.admitted = false;
        return point;
    }
    point.admitted = true;
    point.prediction_date = point.prediction_date + 1;
    if (!satisfies_label_constraints(patient, point.prediction_date, point.label, config)) {
        return std::nullopt;
    }
    return point;
}

CensoredPatient censor(const PatientRecord& patient, Day prediction_date) {
    CensoredPatient out{patient.patient_id, patient.demographics, prediction_date, {}};
    for (const Event& e : patient.events) {
        if (e.date <= prediction_date) out.events.push_back(e);
    }
    return out;
}

CensoredPatient censor(const CensoredPatient& patient, Day prediction_date) {
    CensoredPatient out{patient.patient_id, patient.demographics,
                        std::min(prediction_date, patient.prediction_date), {}};
    for (const Event& e : patient.events) {
        if (e.date <= out.prediction_date) out.events.push_back(e);
    }
    return out;
}

Cohort build_cohort(const Snapshot& snapshot, const CohortConfig& config) {
    config.validate();
    Cohort cohort;
    auto& stats = cohort.stats;
    for (const PatientRecord& patient : snapshot.patients()) {
        const bool deceased = patient.death_date.has_value();
        (deceased ? stats.in_ehr.deceased : stats.in_ehr.alive)++;

        auto date = deceased ? select_prediction_date_positive(patient, config)
                             : select_prediction_date_negative(patient, config);
        if (!date) continue;
        PredictionPoint point{patient.patient_id, *date,
                              deceased ? Label::Positive : Label::Negative, false, Split::Train};
        auto adjusted = adjust_admitted(std::move(point), patient, config);
        if (!adjusted) {
            spdlog::debug("{}: admitted shift broke label constraints, dropped",
                          patient.patient_id);
            continue;
        }
        (deceased ? stats.selected.deceased : stats.selected.alive)++;
        if (adjusted->admitted) {
            (deceased ? stats.admitted.deceased : stats.admitted.alive)++;
        }
        cohort.points.push_back(std::move(*adjusted));
    }
    spdlog::info("cohort: {} of {} patients selected ({} admitted)", stats.selected.total(),
                 stats.in_ehr.total(), stats.admitted.total());
    return cohort;
}

void split_cohort(std::vector<PredictionPoint>& points, const std::array<double, 3>& ratios,
                  uint64_t seed) {
    std::sort(points.begin(), points.end(), [](const auto& a, const auto& b) {
        return a.patient_id < b.patient_id;
    });
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double train_cut = ratios[0];
    const double validation_cut = ratios[0] + ratios[1];
    for (auto& p : points) {
        double u = unit(rng);
        p.split = u < train_cut ? Split::Train : u < validation_cut ? Split::Validation : Split::Test;
    }
}

void tally_splits(Cohort& cohort) {
    cohort.stats.by_split = {};
    for (const auto& p : cohort.points) {
        auto& row = cohort.stats.by_split[static_cast<size_t>(p.split)];
        (p.label == Label::Positive ? row.deceased : row.alive)++;
    }
}

void CohortStats::write(std::ostream& out) const {
    out << "# patient counts\n";
    out << "\tAlive\tDeceased\tTotal\n";
    auto row = [&](std::string_view name, const Row& r) {
        out << name << '\t' << r.alive << '\t' << r.deceased << '\t' << r.total() << '\n';
    };
    row("In EHR", in_ehr);
    row("Selected", selected);
    row("Admitted", admitted);
    out << "# data split\n";
    out << "\tTraining\tValidation\tTesting\tTotal\n";
    Row total;
    for (const auto& r : by_split) {
        total.alive += r.alive;
        total.deceased += r.deceased;
    }
    out << "Alive\t" << by_split[0].alive << '\t' << by_split[1].alive << '\t'
        << by_split[2].alive << '\t' << total.alive << '\n';
    out << "Deceased\t" << by_split[0].deceased << '\t' << by_split[1].deceased << '\t'
        << by_split[2].deceased << '\t' << total.deceased << '\n';
    out << "Total\t" << by_split[0].total() << '\t' << by_split[1].total() << '\t'
        << by_split[2].total() << '\t' << total.total() << '\n';
}

void write_points(const std::vector<PredictionPoint>& points, const std::filesystem::path& path) {
    auto out = text::open_output(path);
    out << kPointsHeader << '\n';
    for (const auto& p : points) {
        out << p.patient_id << '\t' << p.prediction_date.iso() << '\t' << label_token(p.label)
            << '\t' << (p.admitted ? 1 : 0) << '\t' << split_token(p.split) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

std::vector<PredictionPoint> read_points(const std::filesystem::path& path,
                                         bool hide_test_labels) {
    text::LineReader reader(path);
    std::string line;
    if (!reader.next(line) || line != kPointsHeader) {
        throw Error(ErrorKind::Parse, reader.where() + ": missing or unexpected header");
    }
    std::vector<PredictionPoint> points;
    while (reader.next(line)) {
        if (line.empty()) continue;
        auto f = text::split(line);
        if (f.size() != 5) {
            throw Error(ErrorKind::Parse, reader.where() + ": expected 5 fields");
        }
        PredictionPoint p;
        p.patient_id = std::string(f[0]);
        auto day = Day::parse(f[1]);
        if (!day) throw Error(ErrorKind::Parse, reader.where() + ": bad prediction date");
        p.prediction_date = *day;
        if (f[2] == "positive") {
            p.label = Label::Positive;
        } else if (f[2] == "negative") {
            p.label = Label::Negative;
        } else {
            throw Error(ErrorKind::Parse, reader.where() + ": bad label");
        }
        if (f[3] != "0" && f[3] != "1") {
            throw Error(ErrorKind::Parse, reader.where() + ": admitted must be 0 or 1");
        }
        p.admitted = f[3] == "1";
        if (f[4] == "train") {
            p.split = Split::Train;
        } else if (f[4] == "validation") {
            p.split = Split::Validation;
        } else if (f[4] == "test") {
            p.split = Split::Test;
        } else {
            throw Error(ErrorKind::Parse, reader.where() + ": bad split");
        }
        if (hide_test_labels && p.split == Split::Test) p.label = Label::Negative;
        points.push_back(std::move(p));
    }
    return points;
}

}  // namespace palcare
