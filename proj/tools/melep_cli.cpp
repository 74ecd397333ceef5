// melep: transferability scores, checkpoint ranking and correlation studies.
//
// Exit codes: 0 success, 1 usage error, 2 data or validation error, 3 internal error.

#include <melep/core.hpp>
#include <melep/errors.hpp>
#include <melep/io.hpp>
#include <melep/study.hpp>
#include <melep/synth.hpp>

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>
#include <string>

namespace fs = std::filesystem;
using melep::io::Json;

namespace {

constexpr int exit_ok = 0;
constexpr int exit_usage = 1;
constexpr int exit_data = 2;
constexpr int exit_internal = 3;

struct UsageError : std::runtime_error
{
    using std::runtime_error::runtime_error;
};

void emit(const Json& value, const std::string& out_path)
{
    if (out_path.empty()) {
        std::cout << melep::io::canonical_dump(value);
        std::cout.flush();
    } else {
        melep::io::write_json(value, out_path);
    }
}

unsigned resolve_threads(unsigned requested)
{
    return requested > 0 ? requested : melep::default_thread_count();
}

struct ComputeArgs
{
    std::string preds;
    std::string labels;
    std::optional<double> cap;
    std::string source_weights;
    std::string out;
};

int run_compute(const ComputeArgs& args)
{
    const auto labels = melep::io::read_label_csv(args.labels);
    const auto preds = melep::io::align_to_labels(melep::io::read_prediction_csv(args.preds), labels, args.preds);

    melep::MelepOptions<double> options;
    options.cap = args.cap;
    if (!args.source_weights.empty()) options.source_weights = melep::io::read_weight_vector(args.source_weights);

    const auto report = melep::compute_melep(preds, labels, options);
    emit(melep::io::to_json(report, labels.target_label_names(), preds.source_label_names()), args.out);
    return exit_ok;
}

struct RankArgs
{
    std::string manifest;
    std::string labels;
    std::optional<double> cap;
    std::string out;
    unsigned threads = 0;
};

int run_rank(const RankArgs& args)
{
    const auto manifest = melep::io::read_manifest(args.manifest);
    const auto labels = melep::io::read_label_csv(args.labels.empty() ? manifest.labels_path : fs::path(args.labels));
    const auto checkpoints = melep::io::load_checkpoints(manifest, labels);

    melep::MelepOptions<double> options;
    options.cap = args.cap;
    const auto ranking = melep::rank_checkpoints(labels, checkpoints, options, resolve_threads(args.threads));
    emit(melep::ranking_to_json(ranking, labels), args.out);
    return exit_ok;
}

struct StudyArgs
{
    std::string manifest;
    std::string labels;
    std::string sampler_config;
    bool proxy = false;
    std::string f1;
    std::optional<double> cap;
    std::string binning = "equal-width";
    std::string folds_out;
    std::string out;
    unsigned threads = 0;
};

int run_study(const StudyArgs& args)
{
    if (!args.proxy && args.f1.empty()) throw UsageError("study needs --proxy or --f1 PATH");
    if (args.proxy && !args.f1.empty()) throw UsageError("--proxy and --f1 are mutually exclusive");

    const auto manifest = melep::io::read_manifest(args.manifest);
    const auto labels = melep::io::read_label_csv(args.labels.empty() ? manifest.labels_path : fs::path(args.labels));
    const auto checkpoints = melep::io::load_checkpoints(manifest, labels);

    melep::StudyOptions options;
    options.sampler = melep::io::sampler_config_from_json(melep::io::read_json(args.sampler_config));
    options.proxy = args.proxy;
    if (!args.f1.empty()) options.external_f1 = melep::read_f1_table(args.f1);
    options.weight_cap = args.cap;
    options.binning = melep::binning_mode_from_string(args.binning);
    options.threads = resolve_threads(args.threads);

    const auto folds = melep::sample_folds(labels, options.sampler);
    if (!args.folds_out.empty()) melep::io::write_json(melep::io::folds_to_json(folds, options.sampler), args.folds_out);
    const auto report = melep::run_study_on_folds(labels, checkpoints, folds, options);
    emit(melep::io::to_json(report), args.out);
    return exit_ok;
}

struct SynthArgs
{
    std::string config;
    std::string out_dir;
};

int run_synth(const SynthArgs& args)
{
    const auto config = melep::io::synth_config_from_json(melep::io::read_json(args.config));
    const fs::path dir(args.out_dir);
    std::error_code ec;
    fs::create_directories(dir, ec);
    if (ec || !fs::is_directory(dir))
        throw melep::ParseError(melep::ParseErrorKind::io, dir.string(), 0, 0, "cannot create output directory");

    const auto generated = melep::generate_world(config.world);
    melep::io::write_label_csv(generated.labels, dir / "labels.csv");

    melep::io::DatasetManifest manifest;
    manifest.name = config.name;
    manifest.labels_path = "labels.csv";
    for (const auto& ckpt_config : config.checkpoints) {
        const auto ckpt = melep::make_checkpoint(generated.world, ckpt_config);
        const auto preds = melep::generate_predictions(generated.world, ckpt);
        const std::string file = "preds_" + ckpt.checkpoint_id + ".csv";
        melep::io::write_prediction_csv(preds, dir / file);
        manifest.predictions.push_back({ckpt.checkpoint_id, file, preds.source_label_names()});
    }
    melep::io::write_manifest(manifest, dir / "manifest.json");
    return exit_ok;
}

} // namespace

int main(int argc, char** argv)
{
    CLI::App app{"MELEP transferability scores for multi-label classification"};
    app.require_subcommand(1);
    app.set_help_all_flag("--help-all", "Show help for every subcommand");

    ComputeArgs compute;
    auto* compute_cmd = app.add_subcommand("compute", "Compute MELEP for one prediction matrix");
    compute_cmd->add_option("--preds", compute.preds, "Prediction CSV (id,<source labels>...)")->required();
    compute_cmd->add_option("--labels", compute.labels, "Label CSV (id,<target labels>...)")->required();
    compute_cmd->add_option("--cap", compute.cap, "Upper bound on target-label weights")->check(CLI::PositiveNumber);
    compute_cmd->add_option("--source-weights", compute.source_weights, "File with one source-label weight per line");
    compute_cmd->add_option("--out", compute.out, "Write the JSON report here instead of stdout");

    RankArgs rank;
    auto* rank_cmd = app.add_subcommand("rank", "Rank checkpoints by MELEP (best first)");
    rank_cmd->add_option("--manifest", rank.manifest, "Checkpoint manifest JSON")->required();
    rank_cmd->add_option("--labels", rank.labels, "Label CSV (defaults to the manifest's labels_path)");
    rank_cmd->add_option("--cap", rank.cap, "Upper bound on target-label weights")->check(CLI::PositiveNumber);
    rank_cmd->add_option("--threads", rank.threads, "Worker threads (default: MELEP_THREADS or 1)");
    rank_cmd->add_option("--out", rank.out, "Write the JSON ranking here instead of stdout");

    StudyArgs study;
    auto* study_cmd = app.add_subcommand("study", "Correlate fold MELEP with downstream F1");
    study_cmd->add_option("--manifest", study.manifest, "Checkpoint manifest JSON")->required();
    study_cmd->add_option("--labels", study.labels, "Label CSV (defaults to the manifest's labels_path)");
    study_cmd->add_option("--sampler-config", study.sampler_config, "Fold sampler config JSON")->required();
    study_cmd->add_flag("--proxy", study.proxy, "Use the Empirical-Predictor proxy for downstream F1");
    study_cmd->add_option("--f1", study.f1, "CSV fold_id,checkpoint_id,weighted_f1 from external fine-tuning");
    study_cmd->add_option("--cap", study.cap, "Upper bound on target-label weights")->check(CLI::PositiveNumber);
    study_cmd->add_option("--binning", study.binning, "Distance-level binning")
        ->check(CLI::IsMember({"equal-width", "quantile"}));
    study_cmd->add_option("--folds-out", study.folds_out, "Also write the sampled folds as JSON");
    study_cmd->add_option("--threads", study.threads, "Worker threads (default: MELEP_THREADS or 1)");
    study_cmd->add_option("--out", study.out, "Write the JSON report here instead of stdout");

    SynthArgs synth;
    auto* synth_cmd = app.add_subcommand("synth", "Generate a synthetic labels file, checkpoints and manifest");
    synth_cmd->add_option("--config", synth.config, "Synthetic bench config JSON")->required();
    synth_cmd->add_option("--out-dir", synth.out_dir, "Output directory")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e, std::cerr, std::cerr);
        return exit_usage;
    }

    try {
        if (compute_cmd->parsed()) return run_compute(compute);
        if (rank_cmd->parsed()) return run_rank(rank);
        if (study_cmd->parsed()) return run_study(study);
        if (synth_cmd->parsed()) return run_synth(synth);
    } catch (const UsageError& e) {
        std::cerr << "melep: " << e.what() << "\n";
        return exit_usage;
    } catch (const melep::Error& e) {
        std::cerr << "melep: " << e.what() << "\n";
        return exit_data;
    } catch (const std::exception& e) {
        std::cerr << "melep: internal error: " << e.what() << "\n";
        return exit_internal;
    }
    return exit_internal;
}
