#include "palcare/explain.hpp"

#include <algorithm>
#include <set>

#include <fmt/format.h>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

const char* section_title(ReportSection s) {
    switch (s) {
    case ReportSection::Diagnosis: return "Top Diagnostic factors";
    case ReportSection::Procedure: return "Top Procedural factors";
    case ReportSection::Medication: return "Top Medication factors";
    case ReportSection::Encounter: return "Top Encounter factors";
    case ReportSection::Demographic: return "Top Demographic factors";
    }
    return "?";
}

ReportSection section_of(CodeCategory c) { return static_cast<ReportSection>(c); }

double probability(const MLPParams& model, const FeatureVocabulary& vocab,
                   const CensoredPatient& patient) {
    const SparseVector v = featurize(patient, vocab);
    return forward(model, v.view());
}

}  // namespace

CensoredPatient ablate_code(const CensoredPatient& patient, CodeCategory category,
                            std::string_view code) {
    CensoredPatient out = patient;
    std::erase_if(out.events,
                  [&](const Event& e) { return e.category == category && e.code == code; });
    return out;
}

Influence code_influence(const MLPParams& model, const FeatureVocabulary& vocab,
                         const CensoredPatient& patient, CodeCategory category,
                         std::string_view code) {
    Influence inf;
    inf.section = section_of(category);
    inf.code = std::string(code);
    for (const Event& e : patient.events) {
        if (e.category == category && e.code == code &&
            slice_of(patient.prediction_date - e.date)) {
            inf.original_value += 1.0;
        }
    }
    inf.influence = probability(model, vocab, patient) -
                    probability(model, vocab, ablate_code(patient, category, code));
    return inf;
}

CensoredPatient with_demographic_probe(const CensoredPatient& patient, DemographicProbe probe) {
    CensoredPatient out = patient;
    if (probe == DemographicProbe::Age) {
        out.demographics.birth_date = patient.prediction_date;
    } else {
        out.demographics.gender = opposite(patient.demographics.gender);
    }
    return out;
}

std::array<Influence, 2> demographic_influence(const MLPParams& model,
                                               const FeatureVocabulary& vocab,
                                               const CensoredPatient& patient) {
    const double p = probability(model, vocab, patient);
    Influence age;
    age.section = ReportSection::Demographic;
    age.code = "Age";
    age.original_value = age_in_years(patient.demographics.birth_date, patient.prediction_date);
    age.influence =
        p - probability(model, vocab, with_demographic_probe(patient, DemographicProbe::Age));

    Influence gender;
    gender.section = ReportSection::Demographic;
    gender.code = "Gender";
    gender.original_value = 1.0;
    gender.influence =
        p - probability(model, vocab, with_demographic_probe(patient, DemographicProbe::Gender));
    return {age, gender};
}

ExplanationReport explain(const MLPParams& model, const FeatureVocabulary& vocab,
                          const CensoredPatient& patient) {
    ExplanationReport report;
    report.patient_id = patient.patient_id;
    report.probability = probability(model, vocab, patient);

    std::set<std::pair<CodeCategory, std::string_view>> present;
    for (const Event& e : patient.events) {
        if (slice_of(patient.prediction_date - e.date)) present.emplace(e.category, e.code);
    }
    std::vector<Influence> all;
    for (const auto& [category, code] : present) {
        all.push_back(code_influence(model, vocab, patient, category, code));
    }
    for (auto& d : demographic_influence(model, vocab, patient)) all.push_back(std::move(d));

    for (auto& inf : all) {
        if (inf.influence > 0.0) report.sections[size_t(inf.section)].push_back(std::move(inf));
    }
    for (auto& section : report.sections) {
        std::sort(section.begin(), section.end(), [](const Influence& a, const Influence& b) {
            if (a.influence != b.influence) return a.influence > b.influence;
            return a.code < b.code;
        });
        if (section.size() > kTopPerSection) section.resize(kTopPerSection);
    }
    return report;
}

void ExplanationReport::write(std::ostream& out,
                              const std::map<std::string, std::string>* descriptions) const {
    out << "Patient ID\t" << patient_id << '\n';
    out << "Probability score\t" << fmt::format("{:.4f}", probability) << '\n';
    out << "Factors\tCode\tValue\tInfluence\tDescription\n";
    for (size_t s = 0; s < kReportSectionCount; ++s) {
        const char* title = section_title(static_cast<ReportSection>(s));
        if (sections[s].empty()) {
            out << title << "\t\t\t\t\n";
            continue;
        }
        for (const auto& inf : sections[s]) {
            std::string description;
            if (descriptions) {
                if (auto it = descriptions->find(inf.code); it != descriptions->end()) {
                    description = it->second;
                }
            }
            out << title << '\t' << inf.code << '\t' << text::format_double(inf.original_value)
                << '\t' << fmt::format("{:.4f}", inf.influence) << '\t' << description << '\n';
        }
    }
}

std::map<std::string, std::string> read_code_descriptions(const std::filesystem::path& path) {
    text::LineReader reader(path);
    std::map<std::string, std::string> descriptions;
    std::string line;
    while (reader.next(line)) {
        if (line.empty() || line.front() == '#') continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorKind::Parse, reader.where() + ": expected code<TAB>description");
        }
        descriptions[line.substr(0, tab)] = line.substr(tab + 1);
    }
    return descriptions;
}

}  // namespace palcare
