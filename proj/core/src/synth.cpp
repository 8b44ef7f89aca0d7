#include "palcare/synth.hpp"

#include <algorithm>
#include <cmath>
#include <random>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "palcare/error.hpp"

namespace palcare {

namespace {

constexpr double kIllFraction = 0.15;
constexpr double kSeveritySlope = 3.0;
// Deaths are placed late enough that a 3-12 month lead with a year of history
// is usually reachable.
constexpr int32_t kMinDeathOffset = 640;

struct Universe {
    CodeCategory category;
    std::vector<std::string> codes;
    size_t risk_count = 0;
    std::discrete_distribution<size_t> general;
};

std::string code_token(CodeCategory category, size_t k) {
    switch (category) {
    case CodeCategory::Diagnosis: return fmt::format("{}.{}", 140 + k / 10, k % 10);
    case CodeCategory::Procedure: return fmt::format("{}", 70000 + k * 3);
    case CodeCategory::Medication: return fmt::format("{}", 20000 + k * 37);
    case CodeCategory::Encounter: break;
    }
    return {};
}

Universe make_universe(CodeCategory category, size_t size) {
    Universe u;
    u.category = category;
    u.risk_count = risk_code_count(size);
    std::vector<double> weights(size);
    for (size_t k = 0; k < size; ++k) {
        u.codes.push_back(code_token(category, k));
        // Zipf-like code popularity.
        weights[k] = 1.0 / std::pow(double(k) + 5.0, 1.1);
    }
    u.general = std::discrete_distribution<size_t>(weights.begin(), weights.end());
    return u;
}

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

struct Draft {
    double severity = 0.0;
    int age_years = 0;
    Gender gender = Gender::Female;
    size_t race = 0;
    size_t ethnicity = 0;
    int32_t first_offset = 0;
};

const std::array<std::string, 5> kRaces = {"White", "Asian", "Black", "Pacific Islander",
                                           "Other"};
const std::array<double, 5> kRaceWeights = {0.55, 0.2, 0.08, 0.02, 0.15};
const std::array<std::string, 3> kEthnicities = {"Non-Hispanic", "Hispanic", "Unknown"};
const std::array<double, 3> kEthnicityWeights = {0.75, 0.17, 0.08};

}  // namespace

size_t risk_code_count(size_t universe_size) {
    return std::max<size_t>(1, universe_size * 8 / 100);
}

void SynthConfig::validate() const {
    if (n_patients == 0) {
        throw Error(ErrorKind::Config, "synth: n_patients must be positive");
    }
    if (!(target_prevalence > 0.0 && target_prevalence < 1.0)) {
        throw Error(ErrorKind::Config, "synth: target_prevalence must lie in (0, 1)");
    }
    if (diagnosis_codes == 0 || procedure_codes == 0 || medication_codes == 0) {
        throw Error(ErrorKind::Config, "synth: code universes must be non-empty");
    }
    if (history_span < 4 * kMinDeathOffset / 3) {
        throw Error(ErrorKind::Config,
                    fmt::format("synth: history_span must be at least {} days",
                                4 * kMinDeathOffset / 3));
    }
}

SynthResult generate_synthetic(const SynthConfig& config) {
    config.validate();
    std::mt19937_64 rng(config.seed);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::normal_distribution<double> normal(0.0, 1.0);
    std::discrete_distribution<size_t> race_dist(kRaceWeights.begin(), kRaceWeights.end());
    std::discrete_distribution<size_t> eth_dist(kEthnicityWeights.begin(),
                                                kEthnicityWeights.end());

    std::array<Universe, 3> universes = {
        make_universe(CodeCategory::Diagnosis, config.diagnosis_codes),
        make_universe(CodeCategory::Procedure, config.procedure_codes),
        make_universe(CodeCategory::Medication, config.medication_codes)};

    const size_t n = config.n_patients;
    std::vector<Draft> drafts(n);
    for (auto& d : drafts) {
        bool ill = unit(rng) < kIllFraction;
        double log_sev = ill ? 0.3 + 0.5 * normal(rng) : -1.5 + 0.5 * normal(rng);
        d.age_years = 18 + static_cast<int>(unit(rng) * 77.0);
        d.severity = std::exp(log_sev) * (1.0 + (d.age_years - 18) / 150.0);
        d.gender = unit(rng) < 0.52 ? Gender::Female : Gender::Male;
        d.race = race_dist(rng);
        d.ethnicity = eth_dist(rng);
        d.first_offset = static_cast<int32_t>(unit(rng) * (config.history_span / 4));
    }

    // Intercept of the death model, solved so the expected prevalence matches
    // the target exactly for this draw of severities.
    double lo = -30.0, hi = 30.0;
    for (int iter = 0; iter < 200; ++iter) {
        double mid = 0.5 * (lo + hi);
        double mean = 0.0;
        for (const auto& d : drafts) mean += sigmoid(mid + kSeveritySlope * d.severity);
        mean /= double(n);
        (mean < config.target_prevalence ? lo : hi) = mid;
    }
    const double intercept = 0.5 * (lo + hi);

    std::vector<PatientRecord> patients;
    std::vector<SynthLatent> latent;
    patients.reserve(n);
    latent.reserve(n);
    size_t deaths = 0;
    const Day snapshot = config.snapshot_date;
    const int width = std::max(7, int(std::to_string(n).size()));

    std::poisson_distribution<int> poisson;
    using PoissonParam = std::poisson_distribution<int>::param_type;

    for (size_t i = 0; i < n; ++i) {
        const Draft& d = drafts[i];
        PatientRecord p;
        p.patient_id = fmt::format("P{:0{}d}", i + 1, width);
        p.demographics.gender = d.gender;
        p.demographics.race = kRaces[d.race];
        p.demographics.ethnicity = kEthnicities[d.ethnicity];
        p.demographics.birth_date =
            snapshot - static_cast<int32_t>(d.age_years * 365.25 + unit(rng) * 365.0);

        const double p_death = sigmoid(intercept + kSeveritySlope * d.severity);
        const Day first = snapshot - config.history_span + d.first_offset;
        Day end = snapshot;
        if (unit(rng) < p_death) {
            const int32_t room = (snapshot - first) - kMinDeathOffset;
            p.death_date = first + kMinDeathOffset + static_cast<int32_t>(unit(rng) * room);
            end = *p.death_date;
            ++deaths;
        }

        const double base_rate = (1.0 + 2.0 * d.severity) / 40.0;
        const double risk_share = 0.03 + 0.3 * d.severity / (1.0 + d.severity);
        for (Day day = first; day <= end; day = day + 1) {
            double terminal = 0.0;
            if (p.death_date) {
                terminal = std::exp(-double(*p.death_date - day) / 365.0);
            }
            int encounters = poisson(rng, PoissonParam(base_rate + 0.08 * terminal));
            if (day == first) encounters = std::max(encounters, 1);
            for (int k = 0; k < encounters; ++k) {
                double u = unit(rng);
                double inpatient = 0.04 + 0.05 * std::min(d.severity, 2.0) + 0.1 * terminal;
                std::string type = u < inpatient          ? "Inpatient"
                                   : u < inpatient + 0.12 ? "Hx Scan"
                                   : u < inpatient + 0.37 ? "Office Visit"
                                                          : "Outpatient";
                const bool admitted = type == kInpatientEncounter;
                p.events.push_back({day, CodeCategory::Encounter, std::move(type)});

                const std::array<double, 3> means = {admitted ? 3.0 : 1.2, admitted ? 1.5 : 0.6,
                                                     admitted ? 1.0 : 0.5};
                const double q = std::min(0.9, risk_share + 0.4 * terminal);
                for (size_t c = 0; c < universes.size(); ++c) {
                    Universe& uni = universes[c];
                    int count = poisson(rng, PoissonParam(means[c]));
                    for (int j = 0; j < count; ++j) {
                        size_t code = unit(rng) < q
                                          ? static_cast<size_t>(unit(rng) * uni.risk_count)
                                          : uni.general(rng);
                        p.events.push_back({day, uni.category, uni.codes[code]});
                    }
                }
            }
        }
        std::sort(p.events.begin(), p.events.end(), event_less);
        latent.push_back({p.patient_id, d.severity, p_death});
        patients.push_back(std::move(p));
    }

    SynthResult result;
    result.realized_prevalence = double(deaths) / double(n);
    result.snapshot = Snapshot(snapshot, std::move(patients));
    result.latent = std::move(latent);
    spdlog::info("synthesised {} patients, {} events, death prevalence {:.4f}", n,
                 result.snapshot.event_count(), result.realized_prevalence);
    return result;
}

}  // namespace palcare
