#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace palcare {

struct ScoredExample {
    double score = 0.0;  // probability in [0, 1]
    bool label = false;
    bool admitted = false;
};

enum class CurveKind { PrecisionRecall, Roc, Reliability };

struct CurvePoint {
    double x = 0.0;
    double y = 0.0;
    bool operator==(const CurvePoint&) const = default;
};

struct CurvePoints {
    CurveKind kind = CurveKind::PrecisionRecall;
    std::vector<CurvePoint> points;

    /// Two-column text with a header naming the axes.
    void write(const std::filesystem::path& path) const;
};

struct PrResult {
    /// (recall, precision) at every distinct threshold, descending score.
    CurvePoints raw;
    /// Precision replaced by the best precision at any recall >= r; begins
    /// with a recall-0 point.
    CurvePoints interpolated;
    /// Non-interpolated sum over thresholds of (R_n - R_{n-1}) * P_n.
    double average_precision = 0.0;
};

/// Examples sharing a score enter the sweep together. Throws on single-class
/// input.
PrResult pr_curve_and_ap(std::span<const ScoredExample> examples);

/// Largest recall whose interpolated precision reaches `target`; 0 if none.
double recall_at_precision(const CurvePoints& interpolated_pr, double target = 0.9);

struct RocResult {
    CurvePoints curve;  // (FPR, TPR) from (0,0) to (1,1)
    double auroc = 0.0;
};

/// Trapezoidal area over the tie-grouped sweep, equal to the probability that
/// a random positive outscores a random negative with ties counted one half.
RocResult roc_and_auroc(std::span<const ScoredExample> examples);

double brier(std::span<const ScoredExample> examples);

/// Equal-width bins over [0, 1] (a score of 1.0 falls in the top bin); one
/// (mean score, positive fraction) point per non-empty bin.
CurvePoints reliability_curve(std::span<const ScoredExample> examples, size_t n_bins = 10);

struct EvalOptions {
    size_t n_bins = 10;
    double precision_target = 0.9;
};

struct MetricsBundle {
    size_t n = 0;
    size_t positives = 0;
    double prevalence = 0.0;
    double average_precision = 0.0;
    double auroc = 0.0;
    double brier = 0.0;
    double recall_at_precision = 0.0;
    PrResult pr;
    RocResult roc;
    CurvePoints reliability;
};

MetricsBundle compute_metrics(std::span<const ScoredExample> examples, const EvalOptions& options);

struct EvaluationReport {
    EvalOptions options;
    MetricsBundle overall;
    size_t admitted_n = 0;
    /// Empty when the admitted subset lacks one of the classes.
    std::optional<MetricsBundle> admitted;

    std::string to_text() const;
    /// Writes eval_report.txt plus the curve files into `directory`.
    void write(const std::filesystem::path& directory) const;
};

EvaluationReport evaluate_all(std::span<const ScoredExample> examples,
                              const EvalOptions& options = {});

}  // namespace palcare
