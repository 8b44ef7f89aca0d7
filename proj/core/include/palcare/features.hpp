#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "palcare/cohort.hpp"
#include "palcare/sparse.hpp"

namespace palcare {

/// Observation window: event age a = PD - date in days, 0 <= a <= 365.
/// Slices: [0,30) [30,90) [90,180) [180,365].
inline constexpr int32_t kWindowDays = 365;
inline constexpr int kSliceCount = 4;

/// Slice number 1..4 for an event of the given age, or nothing outside the
/// window (including future events).
std::optional<int> slice_of(int32_t age_days);

enum class SummaryStat : uint8_t {
    UniqueCodes,
    TotalCodes,
    MaxPerDay,
    MinPerDay,
    RangePerDay,
    MeanPerDay,
    VarPerDay,
};
inline constexpr size_t kSummaryStatCount = 7;
std::string_view stat_token(SummaryStat stat);

using CategoryStats = std::array<double, kSummaryStatCount>;

struct SliceKey {
    int slice = 1;
    CodeCategory category = CodeCategory::Diagnosis;
    std::string code;

    auto operator<=>(const SliceKey&) const = default;
};

std::map<SliceKey, int> slice_counts(const CensoredPatient& patient);

/// Summary statistics over the window. Per-day statistics use active days
/// only (days with at least one code of the category); variance is the
/// population variance. All zero when the category is absent.
CategoryStats category_stats(const CensoredPatient& patient, CodeCategory category);

/// Whole years, floor(days / 365.25). Throws if `at` precedes `birth`.
int age_in_years(Day birth, Day at);

struct SliceCountFeature {
    int slice = 1;
    CodeCategory category = CodeCategory::Diagnosis;
    std::string code;
    auto operator<=>(const SliceCountFeature&) const = default;
};

struct CategoryStatFeature {
    CodeCategory category = CodeCategory::Diagnosis;
    SummaryStat stat = SummaryStat::UniqueCodes;
    auto operator<=>(const CategoryStatFeature&) const = default;
};

enum class DemographicField : uint8_t { Age, Female, Male, Race, Ethnicity };

struct DemographicFeature {
    DemographicField field = DemographicField::Age;
    std::string token;  // race / ethnicity value; empty otherwise
    auto operator<=>(const DemographicFeature&) const = default;
};

using FeatureDescriptor = std::variant<SliceCountFeature, CategoryStatFeature, DemographicFeature>;

/// Token grammar used in vocabulary files:
///   slice:<1-4>:<DX|PX|RX|ENC>:<code>
///   stat:<DX|PX|RX|ENC>:<unique_codes|total_codes|max_per_day|min_per_day|
///                         range_per_day|mean_per_day|var_per_day>
///   demo:age | demo:gender:female | demo:gender:male
///   demo:race:<token> | demo:ethnicity:<token>
std::string descriptor_token(const FeatureDescriptor& descriptor);
FeatureDescriptor parse_descriptor(std::string_view token);

class FeatureVocabulary {
public:
    FeatureVocabulary() = default;
    FeatureVocabulary(std::vector<FeatureDescriptor> descriptors, int min_patient_count);

    size_t size() const { return descriptors_.size(); }
    const FeatureDescriptor& descriptor(size_t index) const { return descriptors_.at(index); }
    const std::vector<FeatureDescriptor>& descriptors() const { return descriptors_; }
    int min_patient_count() const { return min_patient_count_; }

    std::optional<int32_t> index_of(const FeatureDescriptor& descriptor) const;
    std::optional<int32_t> slice_index(int slice, CodeCategory category,
                                       std::string_view code) const;
    std::optional<int32_t> stat_index(CodeCategory category, SummaryStat stat) const;
    std::optional<int32_t> demographic_index(DemographicField field,
                                             std::string_view token = {}) const;

    /// SHA-256 of the serialised vocabulary; embedded in model checkpoints.
    std::string checksum() const;
    std::string serialize() const;
    void write(const std::filesystem::path& path) const;
    static FeatureVocabulary read(const std::filesystem::path& path);

private:
    std::vector<FeatureDescriptor> descriptors_;
    int min_patient_count_ = 0;
    std::map<FeatureDescriptor, int32_t> lookup_;
    std::array<std::map<std::string, std::array<int32_t, kSliceCount>, std::less<>>, 4> slices_;
};

/// Enumerates candidates over the training patients only. Slice-count
/// features survive iff strictly more than `min_patient_count` distinct
/// patients have them; summary statistics and demographics are always kept.
FeatureVocabulary build_vocabulary(std::span<const CensoredPatient> training,
                                   int min_patient_count = 100);

/// Slice counts, summary statistics and demographics restricted to the
/// vocabulary. Codes unknown to the vocabulary are ignored.
SparseVector featurize(const CensoredPatient& patient, const FeatureVocabulary& vocab);

SparseMatrix featurize_all(std::span<const CensoredPatient> patients,
                           const FeatureVocabulary& vocab);

}  // namespace palcare
