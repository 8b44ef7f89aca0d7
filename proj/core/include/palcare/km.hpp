#pragma once

#include <cstdint>
#include <filesystem>
#include <vector>

#include "palcare/cohort.hpp"

namespace palcare {

struct SurvivalObservation {
    int32_t time = 0;  // days, must be positive
    bool event = false;
};

struct KMPoint {
    int32_t time = 0;
    double survival = 1.0;
};

/// Step function starting at (0, 1.0) with one point per distinct observed
/// time, event or censoring.
struct KMCurve {
    std::vector<KMPoint> points;

    double survival_at(int32_t time) const;
    void write(const std::filesystem::path& path) const;
};

KMCurve kaplan_meier(std::vector<SurvivalObservation> observations);

struct KMByLabel {
    KMCurve positive;
    KMCurve negative;
};

/// Time from prediction date to death (event) or to the last encounter
/// (censoring), estimated separately for each label class.
KMByLabel km_censor_curve(const std::vector<PredictionPoint>& points, const Snapshot& snapshot);

}  // namespace palcare
