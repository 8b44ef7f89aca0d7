#include <cstdlib>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <spdlog/cfg/env.h>
#include <spdlog/spdlog.h>

#include "config.hpp"
#include "palcare/error.hpp"
#include "pipeline.hpp"

namespace fs = std::filesystem;
using namespace palcare;

namespace {

struct Options {
    std::optional<std::string> config_path;
    std::optional<uint64_t> seed;
    std::optional<std::string> out;
    std::optional<std::string> snapshot_date;
    std::vector<std::string> set;
    cli::StageInputs inputs;
    std::vector<std::string> patients;
    size_t top_k = 5;
};

void add_common(CLI::App& cmd, Options& o) {
    cmd.add_option("--config", o.config_path, "Configuration file (key = value lines)")
        ->check(CLI::ExistingFile);
    cmd.add_option("--seed", o.seed, "Global seed; stage seeds derive from it");
    cmd.add_option("--out", o.out, "Output directory");
    cmd.add_option("--set", o.set, "Override one config key, as key=value");
}

void add_input(CLI::App& cmd, const std::string& flag, std::optional<fs::path>& target,
               const std::string& help) {
    cmd.add_option(flag, target, help);
}

cli::PipelineConfig resolve_config(const Options& o) {
    cli::PipelineConfig config =
        o.config_path ? cli::PipelineConfig::load(*o.config_path) : cli::PipelineConfig{};
    for (const auto& kv : o.set) {
        auto eq = kv.find('=');
        if (eq == std::string::npos) {
            throw Error(ErrorKind::Config, "--set expects key=value, got '" + kv + "'");
        }
        config.set(kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (o.seed) config.set_seed(*o.seed);
    if (o.snapshot_date) config.set("cohort.snapshot_date", *o.snapshot_date);
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    spdlog::set_pattern("[%l] %v");
    spdlog::set_level(spdlog::level::info);
    spdlog::cfg::load_env_levels();  // SPDLOG_LEVEL
    if (const char* level = std::getenv("PALCARE_LOG_LEVEL")) {
        spdlog::set_level(spdlog::level::from_str(level));
    }

    CLI::App app{"Palliative care referral risk pipeline"};
    app.require_subcommand(1);
    Options o;

    auto* synth = app.add_subcommand("synth", "Generate a synthetic event log");
    add_common(*synth, o);

    auto* cohort = app.add_subcommand("cohort", "Select prediction points and split the cohort");
    add_common(*cohort, o);
    add_input(*cohort, "--patients", o.inputs.patients, "Patients file");
    add_input(*cohort, "--events", o.inputs.events, "Events file");
    cohort->add_option("--snapshot-date", o.snapshot_date, "Data snapshot date (YYYY-MM-DD)");

    auto* featurize = app.add_subcommand("featurize", "Build the vocabulary and feature matrix");
    add_common(*featurize, o);
    add_input(*featurize, "--patients", o.inputs.patients, "Patients file");
    add_input(*featurize, "--events", o.inputs.events, "Events file");
    add_input(*featurize, "--cohort", o.inputs.cohort, "Cohort file");
    featurize->add_option("--snapshot-date", o.snapshot_date, "Data snapshot date (YYYY-MM-DD)");

    auto* train = app.add_subcommand("train", "Fit the network and keep the best snapshot");
    add_common(*train, o);
    add_input(*train, "--cohort", o.inputs.cohort, "Cohort file");
    add_input(*train, "--features", o.inputs.features, "Feature matrix");
    add_input(*train, "--vocab", o.inputs.vocab, "Vocabulary");

    auto* eval = app.add_subcommand("eval", "Score the test split and write metrics");
    add_common(*eval, o);
    add_input(*eval, "--cohort", o.inputs.cohort, "Cohort file");
    add_input(*eval, "--features", o.inputs.features, "Feature matrix");
    add_input(*eval, "--vocab", o.inputs.vocab, "Vocabulary");
    add_input(*eval, "--model", o.inputs.model, "Model checkpoint");

    auto* explain = app.add_subcommand("explain", "Write per-patient explanation reports");
    add_common(*explain, o);
    add_input(*explain, "--patients", o.inputs.patients, "Patients file");
    add_input(*explain, "--events", o.inputs.events, "Events file");
    add_input(*explain, "--cohort", o.inputs.cohort, "Cohort file");
    add_input(*explain, "--vocab", o.inputs.vocab, "Vocabulary");
    add_input(*explain, "--model", o.inputs.model, "Model checkpoint");
    add_input(*explain, "--descriptions", o.inputs.descriptions, "Code description file");
    explain->add_option("--patient", o.patients, "Patient id to explain (repeatable)");
    explain->add_option("--top-k", o.top_k, "Explain the k highest-scoring test patients");
    explain->add_option("--snapshot-date", o.snapshot_date, "Data snapshot date (YYYY-MM-DD)");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }

    try {
        const cli::PipelineConfig config = resolve_config(o);
        const fs::path default_out = synth->parsed() ? config.data_dir : config.out_dir;
        const cli::Stage stage{config, o.inputs, o.out ? fs::path(*o.out) : default_out};

        if (synth->parsed()) {
            const double prevalence = cli::cmd_synth(stage);
            std::cout << "realized_prevalence\t" << prevalence << '\n';
        } else if (cohort->parsed()) {
            cli::cmd_cohort(stage);
        } else if (featurize->parsed()) {
            cli::cmd_featurize(stage);
        } else if (train->parsed()) {
            cli::cmd_train(stage);
        } else if (eval->parsed()) {
            cli::cmd_eval(stage);
        } else if (explain->parsed()) {
            for (const auto& path : cli::cmd_explain(stage, o.patients, o.top_k)) {
                std::cout << path.string() << '\n';
            }
        }
    } catch (const Error& e) {
        std::cerr << "error: " << error_kind_token(e.kind()) << ": " << e.what() << '\n';
        return EXIT_FAILURE;
    } catch (const std::exception& e) {
        std::cerr << "error: internal: " << e.what() << '\n';
        return EXIT_FAILURE;
    }
    return EXIT_SUCCESS;
}
