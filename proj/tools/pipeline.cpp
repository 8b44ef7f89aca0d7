#include "pipeline.hpp"

#include <algorithm>
#include <map>

#include <fmt/format.h>
#include <nlohmann/json.hpp>
#include <spdlog/spdlog.h>

#include "palcare/checksum.hpp"
#include "palcare/error.hpp"
#include "palcare/event_log.hpp"
#include "palcare/explain.hpp"
#include "palcare/features.hpp"
#include "palcare/km.hpp"
#include "palcare/text.hpp"

namespace palcare::cli {

namespace fs = std::filesystem;

namespace {

class Manifest {
public:
    Manifest(std::string stage, const PipelineConfig& config) {
        doc_["stage"] = std::move(stage);
        doc_["seed"] = config.seed;
        doc_["config"] = config.echo();
        doc_["inputs"] = nlohmann::json::object();
        doc_["outputs"] = nlohmann::json::object();
    }

    void input(const std::string& name, const fs::path& path) { add("inputs", name, path); }
    void output(const std::string& name, const fs::path& path) { add("outputs", name, path); }

    void write(const fs::path& out_dir) const {
        const fs::path path = out_dir / (doc_["stage"].get<std::string>() + ".manifest.json");
        auto out = text::open_output(path);
        out << doc_.dump(2) << '\n';
    }

private:
    void add(const char* section, const std::string& name, const fs::path& path) {
        doc_[section][name] = {{"path", path.filename().string()}, {"sha256", sha256_file(path)}};
    }
    nlohmann::json doc_;
};

fs::path require(const std::optional<fs::path>& override_path, const fs::path& fallback,
                 std::string_view producer) {
    fs::path path = override_path.value_or(fallback);
    if (!fs::exists(path)) {
        throw Error(ErrorKind::StageOrder,
                    fmt::format("missing {} (run `palcare {}` first)", path.string(), producer));
    }
    return path;
}

fs::path prepare(const Stage& stage) {
    stage.config.validate();
    std::error_code ec;
    fs::create_directories(stage.out_dir, ec);
    if (ec) {
        throw Error(ErrorKind::Io, "cannot create " + stage.out_dir.string() + ": " + ec.message());
    }
    return stage.out_dir;
}

struct EventLogPaths {
    fs::path patients;
    fs::path events;
};

EventLogPaths event_log_paths(const Stage& stage) {
    const auto& dir = stage.config.data_dir;
    return {require(stage.inputs.patients, dir / artifact::kPatients, "synth"),
            require(stage.inputs.events, dir / artifact::kEvents, "synth")};
}

// Labels as 0/1 doubles for the rows of one split.
struct SplitRows {
    SparseMatrix x;
    std::vector<double> y;
    std::vector<size_t> rows;
};

SplitRows select_split(const SparseMatrix& all, const std::vector<PredictionPoint>& points,
                       Split split) {
    SplitRows out{SparseMatrix(all.cols()), {}, {}};
    for (size_t r = 0; r < points.size(); ++r) {
        if (points[r].split != split) continue;
        SparseRow row = all.row(r);
        SparseVector v{{row.indices.begin(), row.indices.end()},
                       {row.values.begin(), row.values.end()}};
        out.x.append_row(v);
        out.y.push_back(points[r].label == Label::Positive ? 1.0 : 0.0);
        out.rows.push_back(r);
    }
    return out;
}

struct ModelBundle {
    Checkpoint checkpoint;
    FeatureVocabulary vocab;
    fs::path model_path;
    fs::path vocab_path;
};

ModelBundle load_model(const Stage& stage) {
    ModelBundle b;
    b.vocab_path = require(stage.inputs.vocab, stage.out_dir / artifact::kVocab, "featurize");
    b.model_path = require(stage.inputs.model, stage.out_dir / artifact::kModel, "train");
    b.vocab = FeatureVocabulary::read(b.vocab_path);
    b.checkpoint = load_checkpoint(b.model_path);
    if (b.checkpoint.vocabulary_checksum != b.vocab.checksum()) {
        throw Error(ErrorKind::Mismatch,
                    fmt::format("checkpoint {} was trained against a different vocabulary than {}",
                                b.model_path.string(), b.vocab_path.string()));
    }
    if (b.checkpoint.params.input_dim() != b.vocab.size()) {
        throw Error(ErrorKind::Mismatch, "checkpoint input dimension differs from vocabulary size");
    }
    return b;
}

SparseMatrix load_features(const fs::path& path, const std::vector<PredictionPoint>& points,
                           size_t vocab_size) {
    SparseMatrix m = SparseMatrix::read(path);
    if (m.rows() != points.size() || m.cols() != vocab_size) {
        throw Error(ErrorKind::Mismatch,
                    fmt::format("{} has shape {}x{}, expected {}x{}", path.string(), m.rows(),
                                m.cols(), points.size(), vocab_size));
    }
    return m;
}

}  // namespace

double cmd_synth(const Stage& stage) {
    const fs::path out = prepare(stage);
    SynthResult result = generate_synthetic(stage.config.synth);
    write_snapshot(result.snapshot, out / artifact::kPatients, out / artifact::kEvents);
    Manifest manifest("synth", stage.config);
    manifest.output("patients", out / artifact::kPatients);
    manifest.output("events", out / artifact::kEvents);
    manifest.write(out);
    return result.realized_prevalence;
}

void cmd_cohort(const Stage& stage) {
    const fs::path out = prepare(stage);
    const auto log = event_log_paths(stage);
    const Snapshot snapshot = load_snapshot(log.patients, log.events, stage.config.snapshot_date);
    Cohort cohort = build_cohort(snapshot, stage.config.cohort);
    split_cohort(cohort.points, stage.config.cohort.split_ratios, stage.config.cohort.seed);
    tally_splits(cohort);

    write_points(cohort.points, out / artifact::kCohort);
    {
        auto stats = text::open_output(out / artifact::kCohortStats);
        cohort.stats.write(stats);
    }
    const KMByLabel km = km_censor_curve(cohort.points, snapshot);
    km.positive.write(out / artifact::kKmPositive);
    km.negative.write(out / artifact::kKmNegative);

    Manifest manifest("cohort", stage.config);
    manifest.input("patients", log.patients);
    manifest.input("events", log.events);
    for (const char* name : {artifact::kCohort, artifact::kCohortStats, artifact::kKmPositive,
                             artifact::kKmNegative}) {
        manifest.output(name, out / name);
    }
    manifest.write(out);
}

void cmd_featurize(const Stage& stage) {
    const fs::path out = prepare(stage);
    const auto log = event_log_paths(stage);
    const fs::path cohort_path = require(stage.inputs.cohort, out / artifact::kCohort, "cohort");
    const Snapshot snapshot = load_snapshot(log.patients, log.events, stage.config.snapshot_date);
    // Labels are not needed to featurize.
    const auto points = read_points(cohort_path, /*hide_test_labels=*/true);

    std::vector<CensoredPatient> censored;
    std::vector<CensoredPatient> training;
    censored.reserve(points.size());
    for (const auto& point : points) {
        const PatientRecord* patient = snapshot.find(point.patient_id);
        if (!patient) {
            throw Error(ErrorKind::UnknownPatient,
                        "cohort references unknown patient '" + point.patient_id + "'");
        }
        censored.push_back(censor(*patient, point.prediction_date));
        if (point.split == Split::Train) training.push_back(censored.back());
    }
    const FeatureVocabulary vocab = build_vocabulary(training, stage.config.min_patient_count);
    const SparseMatrix matrix = featurize_all(censored, vocab);
    vocab.write(out / artifact::kVocab);
    matrix.write(out / artifact::kFeatures);
    spdlog::info("featurized {} rows, {} features, {:.1f} non-zeros per row", matrix.rows(),
                 matrix.cols(), matrix.rows() ? double(matrix.nnz()) / double(matrix.rows()) : 0.0);

    Manifest manifest("featurize", stage.config);
    manifest.input("patients", log.patients);
    manifest.input("events", log.events);
    manifest.input("cohort", cohort_path);
    manifest.output("vocab", out / artifact::kVocab);
    manifest.output("features", out / artifact::kFeatures);
    manifest.write(out);
}

void cmd_train(const Stage& stage) {
    const fs::path out = prepare(stage);
    const fs::path cohort_path = require(stage.inputs.cohort, out / artifact::kCohort, "cohort");
    const fs::path vocab_path = require(stage.inputs.vocab, out / artifact::kVocab, "featurize");
    const fs::path features_path =
        require(stage.inputs.features, out / artifact::kFeatures, "featurize");

    const auto points = read_points(cohort_path, /*hide_test_labels=*/true);
    const FeatureVocabulary vocab = FeatureVocabulary::read(vocab_path);
    const SparseMatrix all = load_features(features_path, points, vocab.size());
    const SplitRows train_rows = select_split(all, points, Split::Train);
    const SplitRows val_rows = select_split(all, points, Split::Validation);

    ModelConfig model_config = stage.config.model;
    model_config.input_dim = vocab.size();
    TrainResult result = train(train_rows.x, train_rows.y, val_rows.x, val_rows.y, model_config,
                               stage.config.train);
    spdlog::info("selected snapshot at iteration {} (validation AP {:.4f})", result.best_iteration,
                 result.best_metric);
    save_checkpoint(out / artifact::kModel, result.best, vocab.checksum());
    write_train_log(result.log, out / artifact::kTrainLog);

    Manifest manifest("train", stage.config);
    manifest.input("cohort", cohort_path);
    manifest.input("vocab", vocab_path);
    manifest.input("features", features_path);
    manifest.output("model", out / artifact::kModel);
    manifest.output("train_log", out / artifact::kTrainLog);
    manifest.write(out);
}

void cmd_eval(const Stage& stage) {
    const fs::path out = prepare(stage);
    const fs::path cohort_path = require(stage.inputs.cohort, out / artifact::kCohort, "cohort");
    const fs::path features_path =
        require(stage.inputs.features, out / artifact::kFeatures, "featurize");
    const ModelBundle bundle = load_model(stage);

    const auto points = read_points(cohort_path);
    const SparseMatrix all = load_features(features_path, points, bundle.vocab.size());
    const SplitRows test = select_split(all, points, Split::Test);
    const std::vector<double> scores = predict(bundle.checkpoint.params, test.x);

    std::vector<ScoredExample> examples;
    {
        auto score_out = text::open_output(out / artifact::kTestScores);
        score_out << "patient_id\tscore\tlabel\tadmitted\n";
        for (size_t k = 0; k < test.rows.size(); ++k) {
            const PredictionPoint& p = points[test.rows[k]];
            examples.push_back({scores[k], p.label == Label::Positive, p.admitted});
            score_out << p.patient_id << '\t' << text::format_double(scores[k]) << '\t'
                      << (p.label == Label::Positive ? 1 : 0) << '\t' << (p.admitted ? 1 : 0)
                      << '\n';
        }
    }
    const EvaluationReport report = evaluate_all(examples, stage.config.eval);
    report.write(out);
    spdlog::info("test AP {:.4f}, AUROC {:.4f}, Brier {:.4f}", report.overall.average_precision,
                 report.overall.auroc, report.overall.brier);

    Manifest manifest("eval", stage.config);
    manifest.input("cohort", cohort_path);
    manifest.input("features", features_path);
    manifest.input("vocab", bundle.vocab_path);
    manifest.input("model", bundle.model_path);
    manifest.output("report", out / artifact::kEvalReport);
    manifest.output("test_scores", out / artifact::kTestScores);
    for (const char* name : {"pr_curve.tsv", "roc_curve.tsv", "reliability.tsv",
                             "admitted_pr_curve.tsv", "admitted_roc_curve.tsv",
                             "admitted_reliability.tsv"}) {
        if (fs::exists(out / name)) manifest.output(name, out / name);
    }
    manifest.write(out);
}

std::vector<fs::path> cmd_explain(const Stage& stage, const std::vector<std::string>& patient_ids,
                                  size_t top_k) {
    const fs::path out = prepare(stage);
    const auto log = event_log_paths(stage);
    const fs::path cohort_path = require(stage.inputs.cohort, out / artifact::kCohort, "cohort");
    const ModelBundle bundle = load_model(stage);
    const Snapshot snapshot = load_snapshot(log.patients, log.events, stage.config.snapshot_date);
    const auto points = read_points(cohort_path, /*hide_test_labels=*/true);

    auto censored_for = [&](const PredictionPoint& point) {
        const PatientRecord* patient = snapshot.find(point.patient_id);
        if (!patient) {
            throw Error(ErrorKind::UnknownPatient, "unknown patient '" + point.patient_id + "'");
        }
        return censor(*patient, point.prediction_date);
    };

    std::vector<const PredictionPoint*> chosen;
    if (!patient_ids.empty()) {
        for (const auto& id : patient_ids) {
            auto it = std::find_if(points.begin(), points.end(),
                                   [&](const PredictionPoint& p) { return p.patient_id == id; });
            if (it == points.end()) {
                throw Error(ErrorKind::UnknownPatient, "patient '" + id + "' is not in the cohort");
            }
            chosen.push_back(&*it);
        }
    } else {
        std::vector<std::pair<double, const PredictionPoint*>> scored;
        for (const auto& p : points) {
            if (p.split != Split::Test) continue;
            const SparseVector v = featurize(censored_for(p), bundle.vocab);
            scored.emplace_back(forward(bundle.checkpoint.params, v.view()), &p);
        }
        std::sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
            if (a.first != b.first) return a.first > b.first;
            return a.second->patient_id < b.second->patient_id;
        });
        for (size_t k = 0; k < std::min(top_k, scored.size()); ++k) chosen.push_back(scored[k].second);
    }

    std::map<std::string, std::string> descriptions;
    std::optional<fs::path> descriptions_path = stage.inputs.descriptions;
    if (descriptions_path) descriptions = read_code_descriptions(*descriptions_path);

    Manifest manifest("explain", stage.config);
    manifest.input("patients", log.patients);
    manifest.input("events", log.events);
    manifest.input("cohort", cohort_path);
    manifest.input("vocab", bundle.vocab_path);
    manifest.input("model", bundle.model_path);
    if (descriptions_path) manifest.input("descriptions", *descriptions_path);

    std::vector<fs::path> written;
    for (const PredictionPoint* point : chosen) {
        const ExplanationReport report =
            explain(bundle.checkpoint.params, bundle.vocab, censored_for(*point));
        const fs::path path = out / ("explain_" + point->patient_id + ".txt");
        {
            auto file = text::open_output(path);
            report.write(file, descriptions_path ? &descriptions : nullptr);
        }
        manifest.output(path.filename().string(), path);
        written.push_back(path);
    }
    manifest.write(out);
    return written;
}

}  // namespace palcare::cli
