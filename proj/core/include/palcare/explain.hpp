#pragma once

#include <array>
#include <filesystem>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "palcare/cohort.hpp"
#include "palcare/features.hpp"
#include "palcare/model.hpp"

namespace palcare {

enum class ReportSection : uint8_t { Diagnosis, Procedure, Medication, Encounter, Demographic };
inline constexpr size_t kReportSectionCount = 5;
inline constexpr size_t kTopPerSection = 5;

enum class DemographicProbe : uint8_t { Age, Gender };

struct Influence {
    ReportSection section = ReportSection::Diagnosis;
    std::string code;           // the code, or "Age" / "Gender" for demographic probes
    double original_value = 0;  // window count of the code, age in years, or 1 for gender
    double influence = 0;       // p_original - p_ablated
};

struct ExplanationReport {
    std::string patient_id;
    double probability = 0.0;
    std::array<std::vector<Influence>, kReportSectionCount> sections;

    /// Code descriptions are optional and keyed by the bare code.
    void write(std::ostream& out, const std::map<std::string, std::string>* descriptions = nullptr) const;
};

/// Copy of the patient with every event matching (category, code) removed.
CensoredPatient ablate_code(const CensoredPatient& patient, CodeCategory category,
                            std::string_view code);

Influence code_influence(const MLPParams& model, const FeatureVocabulary& vocab,
                         const CensoredPatient& patient, CodeCategory category,
                         std::string_view code);

/// Age probe sets age to 0; gender probe swaps to the opposite sex.
std::array<Influence, 2> demographic_influence(const MLPParams& model,
                                               const FeatureVocabulary& vocab,
                                               const CensoredPatient& patient);

CensoredPatient with_demographic_probe(const CensoredPatient& patient, DemographicProbe probe);

/// Ablates each distinct in-window code plus the demographic probes and keeps
/// the top positive influences per section, ties broken by code.
ExplanationReport explain(const MLPParams& model, const FeatureVocabulary& vocab,
                          const CensoredPatient& patient);

/// Tab-separated code -> description file.
std::map<std::string, std::string> read_code_descriptions(const std::filesystem::path& path);

}  // namespace palcare
