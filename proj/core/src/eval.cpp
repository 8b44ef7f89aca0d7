#include "palcare/eval.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include <fmt/format.h>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare {

namespace {

struct ThresholdCounts {
    size_t tp = 0;
    size_t fp = 0;
};

// Cumulative (tp, fp) after each distinct score, highest score first.
std::vector<ThresholdCounts> sweep(std::span<const ScoredExample> examples, size_t& positives,
                                   size_t& negatives) {
    std::vector<std::pair<double, bool>> sorted;
    sorted.reserve(examples.size());
    positives = 0;
    for (const auto& e : examples) {
        if (!std::isfinite(e.score)) {
            throw Error(ErrorKind::Validation, "scores must be finite");
        }
        sorted.emplace_back(e.score, e.label);
        positives += e.label ? 1 : 0;
    }
    negatives = examples.size() - positives;
    if (positives == 0 || negatives == 0) {
        throw Error(ErrorKind::Validation, "metric needs both positive and negative examples");
    }
    std::sort(sorted.begin(), sorted.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<ThresholdCounts> counts;
    ThresholdCounts c;
    for (size_t i = 0; i < sorted.size();) {
        const double s = sorted[i].first;
        for (; i < sorted.size() && sorted[i].first == s; ++i) {
            (sorted[i].second ? c.tp : c.fp) += 1;
        }
        counts.push_back(c);
    }
    return counts;
}

std::pair<const char*, const char*> axis_names(CurveKind kind) {
    switch (kind) {
    case CurveKind::PrecisionRecall: return {"recall", "precision"};
    case CurveKind::Roc: return {"fpr", "tpr"};
    case CurveKind::Reliability: return {"mean_predicted", "observed_fraction"};
    }
    return {"x", "y"};
}

void write_bundle(std::ostream& out, std::string_view prefix, const MetricsBundle& m,
                  double target) {
    auto row = [&](std::string_view name, const std::string& value) {
        out << prefix << '.' << name << '\t' << value << '\n';
    };
    row("n", std::to_string(m.n));
    row("positives", std::to_string(m.positives));
    row("prevalence", text::format_double(m.prevalence));
    row("average_precision", text::format_double(m.average_precision));
    row("auroc", text::format_double(m.auroc));
    row("brier", text::format_double(m.brier));
    row(fmt::format("recall_at_precision_{}", text::format_double(target)),
        text::format_double(m.recall_at_precision));
}

}  // namespace

void CurvePoints::write(const std::filesystem::path& path) const {
    auto out = text::open_output(path);
    auto [x, y] = axis_names(kind);
    out << x << '\t' << y << '\n';
    for (const auto& p : points) {
        out << text::format_double(p.x) << '\t' << text::format_double(p.y) << '\n';
    }
    if (!out) throw Error(ErrorKind::Io, "failed writing " + path.string());
}

PrResult pr_curve_and_ap(std::span<const ScoredExample> examples) {
    size_t positives = 0, negatives = 0;
    const auto counts = sweep(examples, positives, negatives);
    PrResult result;
    result.raw.kind = CurveKind::PrecisionRecall;
    result.interpolated.kind = CurveKind::PrecisionRecall;
    double previous_recall = 0.0;
    for (const auto& c : counts) {
        const double recall = double(c.tp) / double(positives);
        const double precision = double(c.tp) / double(c.tp + c.fp);
        result.average_precision += (recall - previous_recall) * precision;
        previous_recall = recall;
        result.raw.points.push_back({recall, precision});
    }
    std::vector<CurvePoint> interp = result.raw.points;
    for (size_t i = interp.size() - 1; i-- > 0;) {
        interp[i].y = std::max(interp[i].y, interp[i + 1].y);
    }
    result.interpolated.points.push_back({0.0, interp.front().y});
    result.interpolated.points.insert(result.interpolated.points.end(), interp.begin(),
                                      interp.end());
    return result;
}

double recall_at_precision(const CurvePoints& interpolated_pr, double target) {
    double best = 0.0;
    for (const auto& p : interpolated_pr.points) {
        if (p.y >= target) best = std::max(best, p.x);
    }
    return best;
}

RocResult roc_and_auroc(std::span<const ScoredExample> examples) {
    size_t positives = 0, negatives = 0;
    const auto counts = sweep(examples, positives, negatives);
    RocResult result;
    result.curve.kind = CurveKind::Roc;
    result.curve.points.push_back({0.0, 0.0});
    // Twice the trapezoid area in units of (1/negatives) x (1/positives),
    // accumulated exactly in integers.
    uint64_t twice_area = 0;
    ThresholdCounts previous;
    for (const auto& c : counts) {
        twice_area += uint64_t(c.fp - previous.fp) * uint64_t(c.tp + previous.tp);
        result.curve.points.push_back(
            {double(c.fp) / double(negatives), double(c.tp) / double(positives)});
        previous = c;
    }
    result.auroc = double(twice_area) / (2.0 * double(positives) * double(negatives));
    return result;
}

double brier(std::span<const ScoredExample> examples) {
    if (examples.empty()) throw Error(ErrorKind::Validation, "brier: no examples");
    double sum = 0.0;
    for (const auto& e : examples) {
        const double d = e.score - (e.label ? 1.0 : 0.0);
        sum += d * d;
    }
    return sum / double(examples.size());
}

CurvePoints reliability_curve(std::span<const ScoredExample> examples, size_t n_bins) {
    if (examples.empty()) throw Error(ErrorKind::Validation, "reliability: no examples");
    if (n_bins == 0) throw Error(ErrorKind::Config, "reliability: need at least one bin");
    std::vector<double> score_sum(n_bins, 0.0);
    std::vector<size_t> positives(n_bins, 0), count(n_bins, 0);
    for (const auto& e : examples) {
        if (!(e.score >= 0.0 && e.score <= 1.0)) {
            throw Error(ErrorKind::Validation, "reliability: scores must lie in [0, 1]");
        }
        size_t bin = std::min(n_bins - 1, static_cast<size_t>(e.score * double(n_bins)));
        score_sum[bin] += e.score;
        positives[bin] += e.label ? 1 : 0;
        count[bin] += 1;
    }
    CurvePoints curve;
    curve.kind = CurveKind::Reliability;
    for (size_t b = 0; b < n_bins; ++b) {
        if (count[b] == 0) continue;
        curve.points.push_back(
            {score_sum[b] / double(count[b]), double(positives[b]) / double(count[b])});
    }
    return curve;
}

MetricsBundle compute_metrics(std::span<const ScoredExample> examples, const EvalOptions& options) {
    MetricsBundle m;
    m.n = examples.size();
    for (const auto& e : examples) m.positives += e.label ? 1 : 0;
    m.prevalence = m.n ? double(m.positives) / double(m.n) : 0.0;
    m.pr = pr_curve_and_ap(examples);
    m.average_precision = m.pr.average_precision;
    m.recall_at_precision = recall_at_precision(m.pr.interpolated, options.precision_target);
    m.roc = roc_and_auroc(examples);
    m.auroc = m.roc.auroc;
    m.brier = brier(examples);
    m.reliability = reliability_curve(examples, options.n_bins);
    return m;
}

EvaluationReport evaluate_all(std::span<const ScoredExample> examples, const EvalOptions& options) {
    EvaluationReport report;
    report.options = options;
    report.overall = compute_metrics(examples, options);
    std::vector<ScoredExample> admitted;
    for (const auto& e : examples) {
        if (e.admitted) admitted.push_back(e);
    }
    report.admitted_n = admitted.size();
    const bool has_pos = std::any_of(admitted.begin(), admitted.end(), [](auto& e) { return e.label; });
    const bool has_neg = std::any_of(admitted.begin(), admitted.end(), [](auto& e) { return !e.label; });
    if (has_pos && has_neg) report.admitted = compute_metrics(admitted, options);
    return report;
}

std::string EvaluationReport::to_text() const {
    std::ostringstream out;
    out << "metric\tvalue\n";
    write_bundle(out, "overall", overall, options.precision_target);
    if (admitted) {
        write_bundle(out, "admitted", *admitted, options.precision_target);
    } else {
        out << "admitted.n\t" << admitted_n << '\n';
        for (const char* name : {"average_precision", "auroc", "brier"}) {
            out << "admitted." << name << "\tunavailable\n";
        }
        out << "admitted.recall_at_precision_" << text::format_double(options.precision_target)
            << "\tunavailable\n";
    }
    return out.str();
}

void EvaluationReport::write(const std::filesystem::path& directory) const {
    {
        auto out = text::open_output(directory / "eval_report.txt");
        out << to_text();
    }
    overall.pr.interpolated.write(directory / "pr_curve.tsv");
    overall.roc.curve.write(directory / "roc_curve.tsv");
    overall.reliability.write(directory / "reliability.tsv");
    if (admitted) {
        admitted->pr.interpolated.write(directory / "admitted_pr_curve.tsv");
        admitted->roc.curve.write(directory / "admitted_roc_curve.tsv");
        admitted->reliability.write(directory / "admitted_reliability.tsv");
    } else {
        for (const char* stale : {"admitted_pr_curve.tsv", "admitted_roc_curve.tsv",
                                  "admitted_reliability.tsv"}) {
            std::filesystem::remove(directory / stale);
        }
    }
}

}  // namespace palcare
