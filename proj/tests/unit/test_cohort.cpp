#include <gtest/gtest.h>

#include <algorithm>
#include <sstream>

#include "oracles.hpp"
#include "palcare/cohort.hpp"
#include "palcare/error.hpp"
#include "palcare/km.hpp"
#include "temp_dir.hpp"

using namespace palcare;
using namespace palcare::oracle;

namespace {

const CohortConfig kConfig{};

std::optional<int32_t> select(const PatientRecord& p) {
    auto d = p.death_date ? select_prediction_date_positive(p, kConfig)
                          : select_prediction_date_negative(p, kConfig);
    if (!d) return std::nullopt;
    return d->days_since_epoch();
}

}  // namespace

TEST(SelectPositive, InpatientPreferredOverEarlierOutpatient) {
    auto p = patient("A", {enc(0), enc(400), enc(500, "Inpatient")}, 700);
    EXPECT_EQ(select(p), 500);
    EXPECT_EQ(choose(p, kConfig), 500);
}

TEST(SelectPositive, LeadTooShort) {
    EXPECT_EQ(select(patient("A", {enc(0), enc(570)}, 600)), std::nullopt);
    EXPECT_EQ(select(patient("A", {enc(570)}, 600)), std::nullopt);
}

TEST(SelectPositive, EarliestCandidate) {
    EXPECT_EQ(select(patient("A", {enc(0), enc(370), enc(380)}, 600)), 370);
}

TEST(SelectPositive, BoundariesInclusive) {
    // lead exactly 365 and 90; history exactly 365
    EXPECT_EQ(select(patient("A", {enc(0), enc(365)}, 730)), 365);
    EXPECT_EQ(select(patient("A", {enc(0), enc(365)}, 455)), 365);
    EXPECT_EQ(select(patient("A", {enc(0), enc(365)}, 731)), std::nullopt);
    EXPECT_EQ(select(patient("A", {enc(0), enc(365)}, 454)), std::nullopt);
    EXPECT_EQ(select(patient("A", {enc(1), enc(365)}, 600)), std::nullopt);
}

TEST(SelectNegative, Examples) {
    EXPECT_EQ(select(patient("A", {enc(0), enc(400), enc(800)})), 400);
    EXPECT_EQ(select(patient("A", {enc(0)})), std::nullopt);
    EXPECT_EQ(select(patient("A", {enc(0), enc(400, "Inpatient"), enc(420), enc(900)})), 400);
}

TEST(SelectNegative, OnlyEncountersDefineTheTimeline) {
    // A diagnosis on day 0 does not count as the first encounter.
    auto p = patient("A", {ev(0, CodeCategory::Diagnosis, "1"), enc(100), enc(500), enc(900)});
    EXPECT_EQ(select(p), 500);
    auto q = patient("A", {enc(0), enc(400), ev(900, CodeCategory::Medication, "1")});
    EXPECT_EQ(select(q), std::nullopt);
}

TEST(Selectors, MutuallyExclusiveByDeathDate) {
    auto p = patient("A", {enc(0), enc(400), enc(800)}, 900);
    EXPECT_EQ(select_prediction_date_negative(p, kConfig), std::nullopt);
    auto q = patient("A", {enc(0), enc(400), enc(800)});
    EXPECT_EQ(select_prediction_date_positive(q, kConfig), std::nullopt);
}

TEST(Selectors, InvariantUnderEventPermutation) {
    std::mt19937_64 rng(11);
    for (int i = 0; i < 300; ++i) {
        auto p = random_history(rng, "P");
        auto expected = select(p);
        for (int k = 0; k < 5; ++k) {
            std::shuffle(p.events.begin(), p.events.end(), rng);
            EXPECT_EQ(select(p), expected);
        }
    }
}

TEST(AdjustAdmitted, SecondDayOfAdmission) {
    auto p = patient("A", {enc(0), enc(500, "Inpatient")}, 700);
    auto point = adjust_admitted({"A", Day(500), Label::Positive, false, Split::Train}, p, kConfig);
    ASSERT_TRUE(point);
    EXPECT_EQ(point->prediction_date, Day(501));
    EXPECT_TRUE(point->admitted);
}

TEST(AdjustAdmitted, OutpatientUnchanged) {
    auto p = patient("A", {enc(0), enc(500)}, 700);
    PredictionPoint in{"A", Day(500), Label::Positive, false, Split::Train};
    auto point = adjust_admitted(in, p, kConfig);
    ASSERT_TRUE(point);
    EXPECT_EQ(*point, in);
}

TEST(AdjustAdmitted, DroppedWhenShiftBreaksLeadMin) {
    auto p = patient("A", {enc(0), enc(500, "Inpatient")}, 590);
    ASSERT_EQ(select(p), 500);
    EXPECT_FALSE(adjust_admitted({"A", Day(500), Label::Positive, false, Split::Train}, p, kConfig));
    auto n = patient("B", {enc(0), enc(400, "Inpatient"), enc(765)});
    ASSERT_EQ(select(n), 400);
    EXPECT_FALSE(adjust_admitted({"B", Day(400), Label::Negative, false, Split::Train}, n, kConfig));
}

TEST(Censor, Examples) {
    auto p = patient("A", {ev(100, CodeCategory::Diagnosis, "x"), ev(200, CodeCategory::Diagnosis, "y"),
                           ev(300, CodeCategory::Diagnosis, "z")},
                     400);
    auto c = censor(p, Day(200));
    ASSERT_EQ(c.events.size(), 2u);
    EXPECT_EQ(c.events[1].code, "y");
    EXPECT_EQ(censor(p, Day(300)).events, p.events);
    EXPECT_EQ(c.demographics, p.demographics);
    EXPECT_EQ(c.prediction_date, Day(200));

    std::mt19937_64 rng(5);
    for (int i = 0; i < 100; ++i) {
        auto r = random_history(rng, "R");
        const Day pd(std::uniform_int_distribution<int32_t>(0, 1200)(rng));
        auto once = censor(r, pd);
        EXPECT_EQ(censor(once, pd), once);
        for (const auto& e : once.events) EXPECT_LE(e.date, pd);
    }
}

TEST(BuildCohort, ZeroDeathsGiveZeroPositives) {
    std::vector<PatientRecord> ps;
    for (int i = 0; i < 20; ++i) {
        ps.push_back(patient("N" + std::to_string(i), {enc(0), enc(400 + i), enc(800 + 2 * i)}));
    }
    auto cohort = build_cohort(Snapshot(Day(2000), ps), kConfig);
    EXPECT_EQ(cohort.points.size(), 20u);
    for (const auto& p : cohort.points) EXPECT_EQ(p.label, Label::Negative);
    EXPECT_EQ(cohort.stats.selected.deceased, 0u);
}

TEST(BuildCohort, HundredPatientFixtureMatchesOracle) {
    std::mt19937_64 rng(101);
    std::vector<PatientRecord> ps;
    for (int i = 0; i < 100; ++i) ps.push_back(random_history(rng, "P" + std::to_string(1000 + i)));
    Snapshot snap(Day(5000), ps);
    auto cohort = build_cohort(snap, kConfig);

    size_t selected = 0, admitted = 0, deceased = 0;
    size_t k = 0;
    for (const auto& p : snap.patients()) {
        if (k < cohort.points.size() && cohort.points[k].patient_id == p.patient_id) {
            EXPECT_EQ(check_point(p, cohort.points[k], kConfig), "") << p.patient_id;
            ++selected;
            admitted += cohort.points[k].admitted;
            deceased += p.death_date.has_value();
            ++k;
        } else {
            EXPECT_TRUE(exclusion_ok(p, kConfig)) << p.patient_id;
        }
    }
    EXPECT_EQ(k, cohort.points.size());
    EXPECT_EQ(cohort.stats.selected.total(), selected);
    EXPECT_EQ(cohort.stats.selected.deceased, deceased);
    EXPECT_EQ(cohort.stats.admitted.total(), admitted);
    EXPECT_EQ(cohort.stats.in_ehr.total(), 100u);
    EXPECT_GT(selected, 10u);
}

TEST(SplitCohort, DeterministicAndNearRatios) {
    std::vector<PredictionPoint> points;
    for (int i = 0; i < 10000; ++i) {
        points.push_back({"P" + std::to_string(100000 + i), Day(0), Label::Negative, false, Split::Train});
    }
    auto a = points, b = points;
    split_cohort(a, {0.8, 0.1, 0.1}, 9);
    split_cohort(b, {0.8, 0.1, 0.1}, 9);
    EXPECT_EQ(a, b);
    std::array<double, 3> n{};
    for (const auto& p : a) n[static_cast<size_t>(p.split)] += 1;
    EXPECT_NEAR(n[0] / 10000, 0.8, 0.01);
    EXPECT_NEAR(n[1] / 10000, 0.1, 0.01);
    EXPECT_NEAR(n[2] / 10000, 0.1, 0.01);
    auto c = points;
    split_cohort(c, {0.8, 0.1, 0.1}, 10);
    EXPECT_NE(a, c);
}

TEST(CohortConfig, Validation) {
    CohortConfig c;
    EXPECT_NO_THROW(c.validate());
    c.lead_min = 400;
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.split_ratios = {0.8, 0.1, 0.2};
    EXPECT_THROW(c.validate(), Error);
    c = {};
    c.history_min = 0;
    EXPECT_THROW(c.validate(), Error);
}

TEST(CohortFile, RoundTripAndHiddenTestLabels) {
    testutil::TempDir dir;
    std::vector<PredictionPoint> pts = {
        {"A", Day::from_ymd(2013, 1, 1), Label::Positive, true, Split::Train},
        {"B", Day::from_ymd(2013, 2, 1), Label::Positive, false, Split::Test},
        {"C", Day::from_ymd(2013, 3, 1), Label::Negative, false, Split::Validation},
    };
    write_points(pts, dir / "c.tsv");
    EXPECT_EQ(read_points(dir / "c.tsv"), pts);
    auto hidden = read_points(dir / "c.tsv", true);
    EXPECT_EQ(hidden[0].label, Label::Positive);
    EXPECT_EQ(hidden[1].label, Label::Negative);
}

TEST(CohortStats, TableLayout) {
    Cohort c;
    c.stats.in_ehr = {10, 2};
    c.stats.selected = {8, 2};
    c.stats.admitted = {3, 1};
    std::ostringstream out;
    c.stats.write(out);
    EXPECT_NE(out.str().find("In EHR\t10\t2\t12"), std::string::npos) << out.str();
    EXPECT_NE(out.str().find("Admitted\t3\t1\t4"), std::string::npos);
}

TEST(KaplanMeier, TwoSubjectFixture) {
    auto km = kaplan_meier({{5, true}, {10, false}});
    EXPECT_EQ(km.points.front().time, 0);
    EXPECT_EQ(km.points.front().survival, 1.0);
    EXPECT_EQ(km.survival_at(4), 1.0);
    EXPECT_EQ(km.survival_at(5), 0.5);
    EXPECT_EQ(km.survival_at(10), 0.5);
}

TEST(KaplanMeier, HandComputedWithTies) {
    // n=5: deaths at 2 (x2), censored at 3, death at 4, censored at 6
    auto km = kaplan_meier({{2, true}, {2, true}, {3, false}, {4, true}, {6, false}});
    EXPECT_DOUBLE_EQ(km.survival_at(2), 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(km.survival_at(3), 3.0 / 5.0);
    EXPECT_DOUBLE_EQ(km.survival_at(4), 3.0 / 5.0 * (1.0 - 1.0 / 2.0));
    for (size_t i = 1; i < km.points.size(); ++i) {
        EXPECT_LT(km.points[i - 1].time, km.points[i].time);
        EXPECT_LE(km.points[i].survival, km.points[i - 1].survival);
    }
}

TEST(KaplanMeier, NoDeathsStaysAtOne) {
    auto km = kaplan_meier({{3, false}, {7, false}});
    for (const auto& p : km.points) EXPECT_EQ(p.survival, 1.0);
}

TEST(KaplanMeier, ClassSeparationAt365) {
    std::mt19937_64 rng(23);
    std::vector<PatientRecord> ps;
    for (int i = 0; i < 400; ++i) ps.push_back(random_history(rng, "P" + std::to_string(i)));
    Snapshot snap(Day(5000), ps);
    auto cohort = build_cohort(snap, kConfig);
    auto km = km_censor_curve(cohort.points, snap);
    ASSERT_GT(km.positive.points.size(), 1u);
    EXPECT_EQ(km.positive.survival_at(365), 0.0);
    EXPECT_EQ(km.negative.survival_at(365), 1.0);
}
