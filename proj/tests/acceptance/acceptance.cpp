// Runs every primary acceptance criterion and prints one PASS/FAIL line each.
// Exit status is the number of failed criteria.

#include <chrono>
#include <functional>
#include <iostream>
#include <map>
#include <random>
#include <set>
#include <string>

#include <fmt/format.h>
#include <spdlog/spdlog.h>

#include "config.hpp"
#include "oracles.hpp"
#include "palcare/error.hpp"
#include "palcare/explain.hpp"
#include "palcare/km.hpp"
#include "palcare/text.hpp"
#include "pipeline.hpp"
#include "temp_dir.hpp"

using namespace palcare;
using namespace palcare::oracle;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

namespace {

struct Outcome {
    bool pass = false;
    std::string detail;
};

double seconds_since(Clock::time_point start) {
    return std::chrono::duration<double>(Clock::now() - start).count();
}

// ------------------------------------------------------------------ model

Outcome gradient_correctness() {
    const auto start = Clock::now();
    std::mt19937_64 rng(2024);
    double worst = 0.0;
    std::string worst_case;
    for (Activation a : {Activation::Selu, Activation::Relu, Activation::Tanh}) {
        for (size_t depth : {1, 3, 8}) {
            ModelConfig c;
            c.input_dim = 12;
            c.hidden_dims.assign(depth, 8);
            c.activation = a;
            c.seed = rng();
            MLPParams p = init_params(c);
            std::normal_distribution<double> bias(0.0, 0.1);
            for (auto& layer : p.layers) for (double& b : layer.bias) b = bias(rng);
            std::vector<SparseVector> xs;
            std::vector<double> ys;
            for (int i = 0; i < 6; ++i) {
                xs.push_back(random_sparse(rng, 12, 0.4));
                ys.push_back(double(i % 2));
            }
            const double err = gradient_check(p, xs, ys, 1e-5);
            if (err >= worst) {
                worst = err;
                worst_case = fmt::format("{} depth {}", activation_token(a), depth);
            }
        }
    }
    const double elapsed = seconds_since(start);
    return {worst < 1e-4 && elapsed < 30.0,
            fmt::format("max relative error {:.3e} ({}), {:.2f} s", worst, worst_case, elapsed)};
}

Outcome selu_constants() {
    const double at_one = activate(1.0, Activation::Selu);
    const double tail = activate(-50.0, Activation::Selu);
    const double asymptote = -kSeluLambda * kSeluAlpha;
    const bool ok = std::abs(at_one - 1.0507009873554805) <= 1e-12 && std::abs(tail - asymptote) <= 1e-6;
    return {ok, fmt::format("selu(1) = {:.17g}, selu(-50) = {:.17g}, -lambda*alpha = {:.17g}", at_one,
                            tail, asymptote)};
}

// ---------------------------------------------------------------- metrics

Outcome metric_oracles() {
    size_t cases = 0, ap_mismatch = 0, auc_mismatch = 0, single_class_ok = 0;
    std::mt19937_64 rng(7);
    auto check = [&](const std::vector<ScoredExample>& xs) {
        ++cases;
        if (pr_curve_and_ap(xs).average_precision != brute_average_precision(xs)) ++ap_mismatch;
        if (roc_and_auroc(xs).auroc != pairwise_auroc(xs)) ++auc_mismatch;
    };
    for (size_t n = 2; n <= 10; ++n) {
        for (uint32_t mask = 1; mask + 1 < (1u << n); ++mask) {
            std::vector<ScoredExample> xs(n);
            for (size_t i = 0; i < n; ++i) xs[i].label = (mask >> i) & 1u;
            if (n <= 5) {
                // every score vector over n levels, covering every tie pattern
                size_t total = 1;
                for (size_t i = 0; i < n; ++i) total *= n;
                for (size_t code = 0; code < total; ++code) {
                    size_t c = code;
                    for (size_t i = 0; i < n; ++i, c /= n) xs[i].score = double(c % n) / double(n);
                    check(xs);
                }
            } else {
                for (int draw = 0; draw < 24; ++draw) {
                    std::uniform_int_distribution<int> level(0, 1 + draw % int(n));
                    for (auto& x : xs) x.score = double(level(rng)) / double(n + 1);
                    check(xs);
                }
            }
        }
        std::vector<ScoredExample> single(n, ScoredExample{0.5, true, false});
        try {
            pr_curve_and_ap(single);
        } catch (const Error&) {
            ++single_class_ok;
        }
    }

    double worst_rank = 0.0;
    for (int trial = 0; trial < 1000; ++trial) {
        const size_t n = std::uniform_int_distribution<size_t>(2, 2000)(rng);
        const int levels = std::uniform_int_distribution<int>(2, 200)(rng);
        std::uniform_int_distribution<int> level(0, levels - 1);
        std::vector<ScoredExample> xs(n);
        for (size_t i = 0; i < n; ++i) {
            xs[i] = {double(level(rng)) / levels, i == 0 ? true : i == 1 ? false : bool(rng() & 1), false};
        }
        worst_rank = std::max(worst_rank, std::abs(roc_and_auroc(xs).auroc - rank_auroc(xs)));
    }
    const bool ok = ap_mismatch == 0 && auc_mismatch == 0 && single_class_ok == 9 && worst_rank <= 1e-9;
    return {ok, fmt::format("{} labelled score vectors (n<=10): {} AP / {} AUROC mismatches vs "
                            "brute force; rank-statistic max |diff| {:.2e} over 1000 instances",
                            cases, ap_mismatch, auc_mismatch, worst_rank)};
}

Outcome calibration_property() {
    std::mt19937_64 rng(99);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    std::vector<ScoredExample> xs(100000);
    for (auto& x : xs) {
        x.score = u(rng);
        x.label = u(rng) < x.score;
    }
    double worst = 0.0;
    for (const auto& p : reliability_curve(xs, 10).points) worst = std::max(worst, std::abs(p.x - p.y));
    const double b = brier(xs);
    const double expected = 1.0 / 6.0;  // E[p(1-p)] for p ~ U(0,1)
    return {worst < 0.05 && std::abs(b - expected) <= 0.01,
            fmt::format("max bin deviation {:.4f}, Brier {:.5f} vs {:.5f}", worst, b, expected)};
}

// ----------------------------------------------------------------- cohort

Outcome cohort_constraints() {
    const CohortConfig config;
    std::mt19937_64 rng(10000);
    std::vector<PatientRecord> patients;
    for (int i = 0; i < 10000; ++i) patients.push_back(random_history(rng, fmt::format("R{:05d}", i)));
    const Snapshot snapshot(Day(5000), patients);
    const Cohort cohort = build_cohort(snapshot, config);

    size_t violations = 0, excluded = 0, empty = 0, shift_drops = 0;
    size_t k = 0;
    std::string first_problem;
    for (const auto& p : snapshot.patients()) {
        if (k < cohort.points.size() && cohort.points[k].patient_id == p.patient_id) {
            auto problem = check_point(p, cohort.points[k], config);
            if (!problem.empty()) {
                ++violations;
                if (first_problem.empty()) first_problem = p.patient_id + ": " + problem;
            }
            ++k;
            continue;
        }
        ++excluded;
        if (candidates(p, config).empty()) {
            ++empty;
        } else if (exclusion_ok(p, config)) {
            ++shift_drops;
        } else {
            ++violations;
            if (first_problem.empty()) first_problem = p.patient_id + ": wrongly excluded";
        }
    }
    return {violations == 0 && k == cohort.points.size(),
            fmt::format("10000 histories, {} points, {} violations; {} excluded ({} no candidate, "
                        "{} dropped by the second-day re-check){}",
                        cohort.points.size(), violations, excluded, empty, shift_drops,
                        first_problem.empty() ? "" : "; first: " + first_problem)};
}

Outcome km_checks(const fs::path& e2e_out, const Snapshot* e2e_snapshot) {
    const KMCurve two = kaplan_meier({{5, true}, {10, false}});
    const bool fixture = two.points.front().time == 0 && two.points.front().survival == 1.0 &&
                         two.survival_at(5) == 0.5 && two.survival_at(10) == 0.5;

    std::mt19937_64 rng(365);
    std::vector<PatientRecord> patients;
    for (int i = 0; i < 3000; ++i) patients.push_back(random_history(rng, fmt::format("K{:05d}", i)));
    const Snapshot snapshot(Day(5000), patients);
    const KMByLabel random_km = km_censor_curve(build_cohort(snapshot, {}).points, snapshot);
    bool separation = random_km.positive.survival_at(365) == 0.0 &&
                      random_km.negative.survival_at(365) == 1.0;
    std::string synthetic = "not run";
    if (e2e_snapshot) {
        const KMByLabel km = km_censor_curve(read_points(e2e_out / "cohort.tsv"), *e2e_snapshot);
        const bool s = km.positive.survival_at(365) == 0.0 && km.negative.survival_at(365) == 1.0;
        separation = separation && s;
        synthetic = fmt::format("S+(365)={} S-(365)={}", km.positive.survival_at(365),
                                km.negative.survival_at(365));
    }
    return {fixture && separation,
            fmt::format("2-subject S(5)={} S(10)={}; random cohort S+(365)={} S-(365)={}; synthetic {}",
                        two.survival_at(5), two.survival_at(10), random_km.positive.survival_at(365),
                        random_km.negative.survival_at(365), synthetic)};
}

// --------------------------------------------------------------- features

Outcome featurization_invariants() {
    std::mt19937_64 rng(1000);
    std::vector<CensoredPatient> train;
    for (int i = 0; i < 300; ++i) train.push_back(random_censored(rng, fmt::format("T{}", i)));
    const FeatureVocabulary vocab = build_vocabulary(train, 3);
    size_t slice_sum = 0, future = 0, dense = 0, negative = 0;
    for (int i = 0; i < 1000; ++i) {
        const CensoredPatient p = random_censored(rng, fmt::format("F{}", i));
        const SparseVector x = featurize(p, vocab);

        std::map<std::pair<CodeCategory, std::string>, int> window, sliced;
        for (const auto& e : p.events) {
            if (p.prediction_date - e.date <= kWindowDays) window[{e.category, e.code}] += 1;
        }
        for (const auto& [key, n] : slice_counts(p)) sliced[{key.category, key.code}] += n;
        slice_sum += sliced != window;

        CensoredPatient later = p;
        const int extra = std::uniform_int_distribution<int>(1, 5)(rng);
        for (int k = 0; k < extra; ++k) {
            const auto& source = p.events.empty() ? Event{p.prediction_date, CodeCategory::Diagnosis, "250.00"}
                                                  : p.events[rng() % p.events.size()];
            later.events.push_back({p.prediction_date + std::uniform_int_distribution<int32_t>(1, 400)(rng),
                                    source.category, source.code});
        }
        future += !(featurize(later, vocab) == x && featurize(censor(later, p.prediction_date), vocab) == x);

        dense += x.to_dense(vocab.size()) != dense_features(p, vocab);
        for (double v : x.values) negative += !(v >= 0.0);
    }
    return {slice_sum + future + dense + negative == 0,
            fmt::format("1000 fixtures, vocabulary {}: {} slice-sum, {} post-date, {} dense-reference, "
                        "{} negative-value violations",
                        vocab.size(), slice_sum, future, dense, negative)};
}

// ---------------------------------------------------------------- explain

Outcome explanation_invariants() {
    std::mt19937_64 rng(4242);
    std::vector<CensoredPatient> pool;
    for (int i = 0; i < 200; ++i) pool.push_back(random_censored(rng, fmt::format("X{}", i)));
    const FeatureVocabulary vocab = build_vocabulary(pool, 1);
    ModelConfig mc;
    mc.input_dim = vocab.size();
    mc.hidden_dims = {16, 16};
    mc.seed = 5;
    const MLPParams model = init_params(mc);

    size_t absent = 0, two_path = 0, determinism = 0;
    for (int i = 0; i < 1000; ++i) {
        const CensoredPatient& p = pool[rng() % pool.size()];
        const CodeCategory c = kCodeCategories[rng() % 4];
        const auto miss = code_influence(model, vocab, p, c, fmt::format("absent-{}", i));
        absent += miss.influence != 0.0;

        if (p.events.empty()) continue;
        const Event& target = p.events[rng() % p.events.size()];
        CensoredPatient built = p;
        built.events.clear();
        for (const auto& e : p.events) {
            if (e.category != target.category || e.code != target.code) built.events.push_back(e);
        }
        two_path += featurize(ablate_code(p, target.category, target.code), vocab) != featurize(built, vocab);
    }
    for (int i = 0; i < 50; ++i) {
        std::ostringstream a, b;
        explain(model, vocab, pool[i]).write(a);
        explain(model, vocab, pool[i]).write(b);
        determinism += a.str() != b.str();
    }
    return {absent + two_path + determinism == 0,
            fmt::format("1000 pairs: {} non-zero absent-code influences, {} two-path mismatches; "
                        "{} non-deterministic reports of 50",
                        absent, two_path, determinism)};
}

// --------------------------------------------------------------- pipeline

struct EndToEnd {
    Outcome outcome;
    std::optional<Snapshot> snapshot;
};

EndToEnd end_to_end(const fs::path& root) {
    const auto start = Clock::now();
    cli::PipelineConfig config;
    config.data_dir = root / "data";
    config.out_dir = root / "out";
    // Defaults: 20,000 patients, 7% prevalence, 8:1:1, 4x64 SeLU, batch 128,
    // snapshots every 250 iterations.
    const cli::Stage synth{config, {}, config.data_dir};
    const cli::Stage stage{config, {}, config.out_dir};
    const double prevalence = cli::cmd_synth(synth);
    cli::cmd_cohort(stage);
    cli::cmd_featurize(stage);
    cli::cmd_train(stage);
    cli::cmd_eval(stage);
    const double elapsed = seconds_since(start);

    std::map<std::string, std::string> report;
    text::LineReader reader(config.out_dir / "eval_report.txt");
    std::string line;
    while (reader.next(line)) {
        auto f = text::split(line);
        if (f.size() == 2) report[std::string(f[0])] = std::string(f[1]);
    }
    const double auroc = std::stod(report.at("overall.auroc"));
    const double ap = std::stod(report.at("overall.average_precision"));
    const double test_prevalence = std::stod(report.at("overall.prevalence"));
    const bool ok = auroc >= 0.85 && ap >= 3.0 * test_prevalence && elapsed < 600.0;
    EndToEnd result;
    result.outcome = {ok, fmt::format("realized prevalence {:.4f}; test n={} prevalence {:.4f}: AUROC {:.4f}, "
                                      "AP {:.4f} ({:.1f}x prevalence), Brier {}; wall {:.1f} s",
                                      prevalence, report.at("overall.n"), test_prevalence, auroc, ap,
                                      ap / test_prevalence, report.at("overall.brier"), elapsed)};
    result.snapshot = load_snapshot(config.data_dir / "patients.tsv", config.data_dir / "events.tsv");
    return result;
}

Outcome determinism(const fs::path& root) {
    cli::PipelineConfig config;
    config.data_dir = root / "data";
    config.out_dir = root / "out";
    config.set("synth.n_patients", "4000");
    config.set("features.min_patient_count", "20");
    config.set("train.max_iterations", "500");
    const cli::Stage synth{config, {}, config.data_dir};
    const cli::Stage stage{config, {}, config.out_dir};
    auto run = [&] {
        cli::cmd_synth(synth);
        cli::cmd_cohort(stage);
        cli::cmd_featurize(stage);
        cli::cmd_train(stage);
        cli::cmd_eval(stage);
        cli::cmd_explain(stage, {}, 3);
        std::map<std::string, std::string> bytes;
        for (const auto& e : fs::recursive_directory_iterator(root)) {
            if (e.is_regular_file()) bytes[fs::relative(e.path(), root).string()] = testutil::slurp(e.path());
        }
        return bytes;
    };
    const auto first = run();
    const auto second = run();
    std::vector<std::string> differing;
    for (const auto& [name, content] : first) {
        auto it = second.find(name);
        if (it == second.end() || it->second != content) differing.push_back(name);
    }
    return {differing.empty() && first.size() == second.size(),
            fmt::format("{} artifacts across six stages compared after a rerun, {} differ{}", first.size(),
                        differing.size(), differing.empty() ? "" : " (first: " + differing.front() + ")")};
}

}  // namespace

int main() {
    spdlog::set_level(spdlog::level::warn);
    int failures = 0;
    auto report = [&](const std::string& name, const std::function<Outcome()>& fn) {
        Outcome o;
        try {
            o = fn();
        } catch (const std::exception& e) {
            o = {false, std::string("exception: ") + e.what()};
        }
        std::cout << (o.pass ? "PASS " : "FAIL ") << name << ": " << o.detail << std::endl;
        failures += !o.pass;
    };

    testutil::TempDir e2e_dir, det_dir;
    EndToEnd e2e;
    report("gradient_correctness", gradient_correctness);
    report("metric_oracles", metric_oracles);
    report("cohort_constraints", cohort_constraints);
    report("featurization_invariants", featurization_invariants);
    report("explanation_invariants", explanation_invariants);
    report("selu_constants", selu_constants);
    report("end_to_end_synthetic", [&] {
        e2e = end_to_end(e2e_dir.path());
        return e2e.outcome;
    });
    report("calibration_property", calibration_property);
    report("kaplan_meier", [&] {
        return km_checks(e2e_dir / "out", e2e.snapshot ? &*e2e.snapshot : nullptr);
    });
    report("determinism", [&] { return determinism(det_dir.path()); });
    std::cout << (failures == 0 ? "ALL PASS" : fmt::format("{} FAILED", failures)) << std::endl;
    return failures;
}
