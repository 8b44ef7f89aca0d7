#include "palcare/km.hpp"

#include <algorithm>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

double KMCurve::survival_at(int32_t time) const {
    double s = 1.0;
    for (const auto& p : points) {
        if (p.time > time) break;
        s = p.survival;
    }
    return s;
}

void KMCurve::write(const std::filesystem::path& path) const {
    auto out = text::open_output(path);
    out << "time\tsurvival\n";
    for (const auto& p : points) {
        out << p.time << '\t' << text::format_double(p.survival) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

KMCurve kaplan_meier(std::vector<SurvivalObservation> observations) {
    std::sort(observations.begin(), observations.end(),
              [](const auto& a, const auto& b) { return a.time < b.time; });
    KMCurve curve;
    curve.points.push_back({0, 1.0});
    size_t at_risk = observations.size();
    double survival = 1.0;
    for (size_t i = 0; i < observations.size();) {
        const int32_t t = observations[i].time;
        if (t <= 0) {
            throw Error(ErrorKind::Validation, "kaplan_meier: times must be positive");
        }
        size_t deaths = 0, leaving = 0;
        for (; i < observations.size() && observations[i].time == t; ++i) {
            deaths += observations[i].event ? 1 : 0;
            ++leaving;
        }
        survival *= 1.0 - double(deaths) / double(at_risk);
        curve.points.push_back({t, survival});
        at_risk -= leaving;
    }
    return curve;
}

KMByLabel km_censor_curve(const std::vector<PredictionPoint>& points, const Snapshot& snapshot) {
    std::vector<SurvivalObservation> positive, negative;
    for (const auto& point : points) {
        const PatientRecord* patient = snapshot.find(point.patient_id);
        if (!patient) {
            throw Error(ErrorKind::UnknownPatient,
                        "km: unknown patient '" + point.patient_id + "'");
        }
        if (patient->death_date) {
            positive.push_back({*patient->death_date - point.prediction_date, true});
        } else {
            auto last = patient->last_encounter();
            int32_t time = last ? *last - point.prediction_date : 0;
            negative.push_back({std::max(time, 1), false});
        }
    }
    return {kaplan_meier(std::move(positive)), kaplan_meier(std::move(negative))};
}

}  // namespace palcare
