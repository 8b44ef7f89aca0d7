#include "palcare/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <tuple>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "palcare/checksum.hpp"
#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

constexpr std::array<int32_t, kSliceCount> kSliceEnds = {30, 90, 180, kWindowDays + 1};
constexpr std::string_view kVocabHeader = "# palcare vocabulary v1\tmin_patient_count=";

constexpr std::array<SummaryStat, kSummaryStatCount> kStats = {
    SummaryStat::UniqueCodes, SummaryStat::TotalCodes,  SummaryStat::MaxPerDay,
    SummaryStat::MinPerDay,   SummaryStat::RangePerDay, SummaryStat::MeanPerDay,
    SummaryStat::VarPerDay};

size_t category_slot(CodeCategory c) { return static_cast<size_t>(c); }

std::optional<SummaryStat> parse_stat(std::string_view token) {
    for (SummaryStat s : kStats) {
        if (stat_token(s) == token) return s;
    }
    return std::nullopt;
}

[[noreturn]] void bad_token(std::string_view token) {
    throw Error(ErrorKind::Parse, "bad feature descriptor '" + std::string(token) + "'");
}

}  // namespace

std::optional<int> slice_of(int32_t age_days) {
    if (age_days < 0) return std::nullopt;
    for (int s = 0; s < kSliceCount; ++s) {
        if (age_days < kSliceEnds[s]) return s + 1;
    }
    return std::nullopt;
}

std::string_view stat_token(SummaryStat stat) {
    switch (stat) {
    case SummaryStat::UniqueCodes: return "unique_codes";
    case SummaryStat::TotalCodes: return "total_codes";
    case SummaryStat::MaxPerDay: return "max_per_day";
    case SummaryStat::MinPerDay: return "min_per_day";
    case SummaryStat::RangePerDay: return "range_per_day";
    case SummaryStat::MeanPerDay: return "mean_per_day";
    case SummaryStat::VarPerDay: return "var_per_day";
    }
    return "?";
}

std::map<SliceKey, int> slice_counts(const CensoredPatient& patient) {
    std::map<SliceKey, int> counts;
    for (const Event& e : patient.events) {
        if (auto slice = slice_of(patient.prediction_date - e.date)) {
            counts[SliceKey{*slice, e.category, e.code}] += 1;
        }
    }
    return counts;
}

CategoryStats category_stats(const CensoredPatient& patient, CodeCategory category) {
    std::map<Day, int> per_day;
    std::set<std::string_view> unique;
    int total = 0;
    for (const Event& e : patient.events) {
        if (e.category != category || !slice_of(patient.prediction_date - e.date)) continue;
        per_day[e.date] += 1;
        unique.insert(e.code);
        ++total;
    }
    CategoryStats stats{};
    if (per_day.empty()) return stats;
    int max_day = 0;
    int min_day = std::numeric_limits<int>::max();
    for (const auto& [day, n] : per_day) {
        max_day = std::max(max_day, n);
        min_day = std::min(min_day, n);
    }
    const double days = double(per_day.size());
    const double mean = double(total) / days;
    double var = 0.0;
    for (const auto& [day, n] : per_day) var += (n - mean) * (n - mean);
    var /= days;

    stats[size_t(SummaryStat::UniqueCodes)] = double(unique.size());
    stats[size_t(SummaryStat::TotalCodes)] = double(total);
    stats[size_t(SummaryStat::MaxPerDay)] = double(max_day);
    stats[size_t(SummaryStat::MinPerDay)] = double(min_day);
    stats[size_t(SummaryStat::RangePerDay)] = double(max_day - min_day);
    stats[size_t(SummaryStat::MeanPerDay)] = mean;
    stats[size_t(SummaryStat::VarPerDay)] = var;
    return stats;
}

int age_in_years(Day birth, Day at) {
    if (at < birth) {
        throw Error(ErrorKind::Validation,
                    "prediction date " + at.iso() + " precedes birth date " + birth.iso());
    }
    return static_cast<int>(std::floor(double(at - birth) / 365.25));
}

std::string descriptor_token(const FeatureDescriptor& descriptor) {
    return std::visit(
        [](const auto& d) -> std::string {
            using T = std::decay_t<decltype(d)>;
            if constexpr (std::is_same_v<T, SliceCountFeature>) {
                return fmt::format("slice:{}:{}:{}", d.slice, category_token(d.category), d.code);
            } else if constexpr (std::is_same_v<T, CategoryStatFeature>) {
                return fmt::format("stat:{}:{}", category_token(d.category), stat_token(d.stat));
            } else {
                switch (d.field) {
                case DemographicField::Age: return "demo:age";
                case DemographicField::Female: return "demo:gender:female";
                case DemographicField::Male: return "demo:gender:male";
                case DemographicField::Race: return "demo:race:" + d.token;
                case DemographicField::Ethnicity: return "demo:ethnicity:" + d.token;
                }
                return "demo:?";
            }
        },
        descriptor);
}

FeatureDescriptor parse_descriptor(std::string_view token) {
    auto take = [&](std::string_view& rest) {
        auto pos = rest.find(':');
        if (pos == std::string_view::npos) bad_token(token);
        auto head = rest.substr(0, pos);
        rest.remove_prefix(pos + 1);
        return head;
    };
    std::string_view rest = token;
    if (rest.starts_with("slice:")) {
        rest.remove_prefix(6);
        auto slice = take(rest);
        auto category = parse_category(take(rest));
        if (slice.size() != 1 || slice[0] < '1' || slice[0] > '4' || !category || rest.empty()) {
            bad_token(token);
        }
        return SliceCountFeature{slice[0] - '0', *category, std::string(rest)};
    }
    if (rest.starts_with("stat:")) {
        rest.remove_prefix(5);
        auto category = parse_category(take(rest));
        auto stat = parse_stat(rest);
        if (!category || !stat) bad_token(token);
        return CategoryStatFeature{*category, *stat};
    }
    if (rest == "demo:age") return DemographicFeature{DemographicField::Age, {}};
    if (rest == "demo:gender:female") return DemographicFeature{DemographicField::Female, {}};
    if (rest == "demo:gender:male") return DemographicFeature{DemographicField::Male, {}};
    if (rest.starts_with("demo:race:")) {
        return DemographicFeature{DemographicField::Race, std::string(rest.substr(10))};
    }
    if (rest.starts_with("demo:ethnicity:")) {
        return DemographicFeature{DemographicField::Ethnicity, std::string(rest.substr(15))};
    }
    bad_token(token);
}

FeatureVocabulary::FeatureVocabulary(std::vector<FeatureDescriptor> descriptors,
                                     int min_patient_count)
    : descriptors_(std::move(descriptors)), min_patient_count_(min_patient_count) {
    for (size_t i = 0; i < descriptors_.size(); ++i) {
        const auto index = static_cast<int32_t>(i);
        if (!lookup_.emplace(descriptors_[i], index).second) {
            throw Error(ErrorKind::Validation,
                        "duplicate feature descriptor " + descriptor_token(descriptors_[i]));
        }
        if (const auto* s = std::get_if<SliceCountFeature>(&descriptors_[i])) {
            auto& bucket = slices_[category_slot(s->category)];
            auto it = bucket.find(s->code);
            if (it == bucket.end()) {
                std::array<int32_t, kSliceCount> none;
                none.fill(-1);
                it = bucket.emplace(s->code, none).first;
            }
            it->second[size_t(s->slice - 1)] = index;
        }
    }
}

std::optional<int32_t> FeatureVocabulary::index_of(const FeatureDescriptor& descriptor) const {
    auto it = lookup_.find(descriptor);
    if (it == lookup_.end()) return std::nullopt;
    return it->second;
}

std::optional<int32_t> FeatureVocabulary::slice_index(int slice, CodeCategory category,
                                                      std::string_view code) const {
    const auto& bucket = slices_[category_slot(category)];
    auto it = bucket.find(code);
    if (it == bucket.end() || slice < 1 || slice > kSliceCount) return std::nullopt;
    int32_t index = it->second[size_t(slice - 1)];
    if (index < 0) return std::nullopt;
    return index;
}

std::optional<int32_t> FeatureVocabulary::stat_index(CodeCategory category,
                                                     SummaryStat stat) const {
    return index_of(CategoryStatFeature{category, stat});
}

std::optional<int32_t> FeatureVocabulary::demographic_index(DemographicField field,
                                                            std::string_view token) const {
    return index_of(DemographicFeature{field, std::string(token)});
}

std::string FeatureVocabulary::serialize() const {
    std::ostringstream out;
    out << kVocabHeader << min_patient_count_ << '\n';
    for (size_t i = 0; i < descriptors_.size(); ++i) {
        out << i << '\t' << descriptor_token(descriptors_[i]) << '\n';
    }
    return out.str();
}

std::string FeatureVocabulary::checksum() const { return sha256_hex(serialize()); }

void FeatureVocabulary::write(const std::filesystem::path& path) const {
    auto out = text::open_output(path);
    out << serialize();
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

FeatureVocabulary FeatureVocabulary::read(const std::filesystem::path& path) {
    text::LineReader reader(path);
    std::string line;
    if (!reader.next(line) || !line.starts_with(kVocabHeader)) {
        throw Error(ErrorKind::Parse, reader.where() + ": missing vocabulary header");
    }
    const int min_count = static_cast<int>(
        text::parse_int(std::string_view(line).substr(kVocabHeader.size()), reader.where()));
    std::vector<FeatureDescriptor> descriptors;
    while (reader.next(line)) {
        if (line.empty()) continue;
        auto tab = line.find('\t');
        if (tab == std::string::npos) {
            throw Error(ErrorKind::Parse, reader.where() + ": expected index<TAB>descriptor");
        }
        auto index = text::parse_int(std::string_view(line).substr(0, tab), reader.where());
        if (index != static_cast<long long>(descriptors.size())) {
            throw Error(ErrorKind::Parse, reader.where() + ": indices must be contiguous");
        }
        descriptors.push_back(parse_descriptor(std::string_view(line).substr(tab + 1)));
    }
    return FeatureVocabulary(std::move(descriptors), min_count);
}

FeatureVocabulary build_vocabulary(std::span<const CensoredPatient> training,
                                   int min_patient_count) {
    if (training.empty()) {
        throw Error(ErrorKind::Validation, "cannot build a vocabulary from an empty training set");
    }
    std::map<SliceKey, int> patients_with;
    std::set<std::string> races, ethnicities;
    for (const auto& patient : training) {
        for (const auto& [key, count] : slice_counts(patient)) {
            patients_with[key] += 1;
        }
        races.insert(patient.demographics.race);
        ethnicities.insert(patient.demographics.ethnicity);
    }

    std::vector<SliceCountFeature> kept;
    for (const auto& [key, n] : patients_with) {
        if (n > min_patient_count) kept.push_back({key.slice, key.category, key.code});
    }
    std::sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) {
        return std::tie(a.category, a.slice, a.code) < std::tie(b.category, b.slice, b.code);
    });

    std::vector<FeatureDescriptor> descriptors(kept.begin(), kept.end());
    for (CodeCategory c : kCodeCategories) {
        for (SummaryStat s : kStats) descriptors.emplace_back(CategoryStatFeature{c, s});
    }
    descriptors.emplace_back(DemographicFeature{DemographicField::Age, {}});
    descriptors.emplace_back(DemographicFeature{DemographicField::Female, {}});
    descriptors.emplace_back(DemographicFeature{DemographicField::Male, {}});
    for (const auto& r : races) descriptors.emplace_back(DemographicFeature{DemographicField::Race, r});
    for (const auto& e : ethnicities) {
        descriptors.emplace_back(DemographicFeature{DemographicField::Ethnicity, e});
    }
    spdlog::info("vocabulary: {} of {} slice-count candidates kept, {} features total",
                 kept.size(), patients_with.size(), descriptors.size());
    return FeatureVocabulary(std::move(descriptors), min_patient_count);
}

SparseVector featurize(const CensoredPatient& patient, const FeatureVocabulary& vocab) {
    std::vector<std::pair<int32_t, double>> entries;
    auto put = [&](std::optional<int32_t> index, double value) {
        if (index && value != 0.0) entries.emplace_back(*index, value);
    };

    for (const auto& [key, count] : slice_counts(patient)) {
        put(vocab.slice_index(key.slice, key.category, key.code), double(count));
    }
    for (CodeCategory c : kCodeCategories) {
        const CategoryStats stats = category_stats(patient, c);
        for (SummaryStat s : kStats) put(vocab.stat_index(c, s), stats[size_t(s)]);
    }
    const auto& demo = patient.demographics;
    put(vocab.demographic_index(DemographicField::Age),
        double(age_in_years(demo.birth_date, patient.prediction_date)));
    put(vocab.demographic_index(demo.gender == Gender::Female ? DemographicField::Female
                                                               : DemographicField::Male),
        1.0);
    put(vocab.demographic_index(DemographicField::Race, demo.race), 1.0);
    put(vocab.demographic_index(DemographicField::Ethnicity, demo.ethnicity), 1.0);

    std::sort(entries.begin(), entries.end());
    SparseVector v;
    v.indices.reserve(entries.size());
    v.values.reserve(entries.size());
    for (const auto& [index, value] : entries) {
        v.indices.push_back(index);
        v.values.push_back(value);
    }
    return v;
}

SparseMatrix featurize_all(std::span<const CensoredPatient> patients,
                           const FeatureVocabulary& vocab) {
    SparseMatrix m(vocab.size());
    for (const auto& p : patients) m.append_row(featurize(p, vocab));
    return m;
}

}  // namespace palcare
