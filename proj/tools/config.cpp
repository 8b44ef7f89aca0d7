#include "config.hpp"

#include <sstream>

#include <fmt/format.h>
#include <fmt/ranges.h>

#include "palcare/error.hpp"
#include "palcare/text.hpp"

namespace palcare::cli {

namespace {

std::string trim(std::string_view s) {
    const auto first = s.find_first_not_of(" \t");
    if (first == std::string_view::npos) return {};
    const auto last = s.find_last_not_of(" \t");
    return std::string(s.substr(first, last - first + 1));
}

template <typename T>
T as_unsigned(const std::string& key, const std::string& value) {
    long long v = text::parse_int(value, "config key " + key);
    if (v < 0) throw Error(ErrorKind::Config, "config key " + key + " must be non-negative");
    return static_cast<T>(v);
}

int as_int(const std::string& key, const std::string& value) {
    return static_cast<int>(text::parse_int(value, "config key " + key));
}

double as_double(const std::string& key, const std::string& value) {
    return text::parse_double(value, "config key " + key);
}

Day as_day(const std::string& key, const std::string& value) {
    auto d = Day::parse(value);
    if (!d) throw Error(ErrorKind::Config, "config key " + key + " needs an ISO-8601 date");
    return *d;
}

}  // namespace

PipelineConfig::PipelineConfig() { set_seed(seed); }

void PipelineConfig::set_seed(uint64_t s) {
    seed = s;
    synth.seed = s;
    cohort.seed = s + 1;
    model.seed = s + 2;
    train.seed = s + 3;
}

void PipelineConfig::set(const std::string& key, const std::string& value) {
    try {
        if (key == "seed") set_seed(as_unsigned<uint64_t>(key, value));
        else if (key == "paths.data_dir") data_dir = value;
        else if (key == "paths.out_dir") out_dir = value;
        else if (key == "cohort.snapshot_date") snapshot_date = as_day(key, value);
        else if (key == "synth.n_patients") synth.n_patients = as_unsigned<size_t>(key, value);
        else if (key == "synth.target_prevalence") synth.target_prevalence = as_double(key, value);
        else if (key == "synth.diagnosis_codes") synth.diagnosis_codes = as_unsigned<size_t>(key, value);
        else if (key == "synth.procedure_codes") synth.procedure_codes = as_unsigned<size_t>(key, value);
        else if (key == "synth.medication_codes") synth.medication_codes = as_unsigned<size_t>(key, value);
        else if (key == "synth.history_span") synth.history_span = as_int(key, value);
        else if (key == "synth.snapshot_date") synth.snapshot_date = as_day(key, value);
        else if (key == "cohort.lead_min") cohort.lead_min = as_int(key, value);
        else if (key == "cohort.lead_max") cohort.lead_max = as_int(key, value);
        else if (key == "cohort.history_min") cohort.history_min = as_int(key, value);
        else if (key == "cohort.followup_min") cohort.followup_min = as_int(key, value);
        else if (key == "cohort.split_train") cohort.split_ratios[0] = as_double(key, value);
        else if (key == "cohort.split_validation") cohort.split_ratios[1] = as_double(key, value);
        else if (key == "cohort.split_test") cohort.split_ratios[2] = as_double(key, value);
        else if (key == "features.min_patient_count") min_patient_count = as_int(key, value);
        else if (key == "model.hidden_dims") {
            model.hidden_dims.clear();
            for (auto part : text::split(value, ',')) {
                model.hidden_dims.push_back(as_unsigned<size_t>(key, trim(part)));
            }
        } else if (key == "model.activation") {
            auto a = parse_activation(value);
            if (!a) throw Error(ErrorKind::Config, "model.activation must be selu, relu or tanh");
            model.activation = *a;
        } else if (key == "train.batch_size") train.batch_size = as_unsigned<size_t>(key, value);
        else if (key == "train.snapshot_every") train.snapshot_every = as_unsigned<size_t>(key, value);
        else if (key == "train.max_iterations") train.max_iterations = as_unsigned<size_t>(key, value);
        else if (key == "train.learning_rate") train.adam.learning_rate = as_double(key, value);
        else if (key == "eval.n_bins") eval.n_bins = as_unsigned<size_t>(key, value);
        else if (key == "eval.precision_target") eval.precision_target = as_double(key, value);
        else throw Error(ErrorKind::Config, "unknown config key '" + key + "'");
    } catch (const Error& e) {
        if (e.kind() == ErrorKind::Config) throw;
        throw Error(ErrorKind::Config, e.what());
    }
}

void PipelineConfig::validate() const {
    synth.validate();
    cohort.validate();
    train.validate();
    if (min_patient_count < 0) {
        throw Error(ErrorKind::Config, "features.min_patient_count must be non-negative");
    }
    if (model.hidden_dims.empty()) throw Error(ErrorKind::Config, "model.hidden_dims is empty");
    for (size_t w : model.hidden_dims) {
        if (w == 0) throw Error(ErrorKind::Config, "model.hidden_dims entries must be positive");
    }
    if (eval.n_bins == 0) throw Error(ErrorKind::Config, "eval.n_bins must be positive");
    if (!(eval.precision_target > 0.0 && eval.precision_target <= 1.0)) {
        throw Error(ErrorKind::Config, "eval.precision_target must lie in (0, 1]");
    }
}

std::map<std::string, std::string> PipelineConfig::echo() const {
    auto d = [](double v) { return text::format_double(v); };
    std::map<std::string, std::string> kv = {
        {"seed", std::to_string(seed)},
        {"paths.data_dir", data_dir.string()},
        {"paths.out_dir", out_dir.string()},
        {"cohort.snapshot_date", snapshot_date ? snapshot_date->iso() : ""},
        {"synth.n_patients", std::to_string(synth.n_patients)},
        {"synth.target_prevalence", d(synth.target_prevalence)},
        {"synth.diagnosis_codes", std::to_string(synth.diagnosis_codes)},
        {"synth.procedure_codes", std::to_string(synth.procedure_codes)},
        {"synth.medication_codes", std::to_string(synth.medication_codes)},
        {"synth.history_span", std::to_string(synth.history_span)},
        {"synth.snapshot_date", synth.snapshot_date.iso()},
        {"cohort.lead_min", std::to_string(cohort.lead_min)},
        {"cohort.lead_max", std::to_string(cohort.lead_max)},
        {"cohort.history_min", std::to_string(cohort.history_min)},
        {"cohort.followup_min", std::to_string(cohort.followup_min)},
        {"cohort.split_train", d(cohort.split_ratios[0])},
        {"cohort.split_validation", d(cohort.split_ratios[1])},
        {"cohort.split_test", d(cohort.split_ratios[2])},
        {"features.min_patient_count", std::to_string(min_patient_count)},
        {"model.hidden_dims", fmt::format("{}", fmt::join(model.hidden_dims, ","))},
        {"model.activation", std::string(activation_token(model.activation))},
        {"train.batch_size", std::to_string(train.batch_size)},
        {"train.snapshot_every", std::to_string(train.snapshot_every)},
        {"train.max_iterations", std::to_string(train.max_iterations)},
        {"train.learning_rate", d(train.adam.learning_rate)},
        {"eval.n_bins", std::to_string(eval.n_bins)},
        {"eval.precision_target", d(eval.precision_target)},
    };
    return kv;
}

PipelineConfig PipelineConfig::load(const std::filesystem::path& path) {
    PipelineConfig config;
    text::LineReader reader(path);
    std::string line;
    while (reader.next(line)) {
        auto hash = line.find('#');
        std::string body = trim(hash == std::string::npos ? line : line.substr(0, hash));
        if (body.empty()) continue;
        auto eq = body.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, reader.where() + ": expected key = value");
        }
        try {
            config.set(trim(body.substr(0, eq)), trim(body.substr(eq + 1)));
        } catch (const Error& e) {
            throw Error(ErrorKind::Config, reader.where() + ": " + e.what());
        }
    }
    return config;
}

}  // namespace palcare::cli
