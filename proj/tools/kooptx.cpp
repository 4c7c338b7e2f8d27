// Command-line front end: dataset synthesis, feature extraction, Koopman
// fitting and figures, classifier training/evaluation, the five-system
// comparison, and the dictionary ablation grid. Exit codes: 0 success,
// 2 configuration error, 3 data error, 1 anything else.
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "kooptx/dataset.hpp"
#include "kooptx/errors.hpp"
#include "kooptx/experiment.hpp"
#include "kooptx/koopman.hpp"
#include "kooptx/labels.hpp"
#include "kooptx/signal.hpp"
#include "kooptx/svg.hpp"
#include "kooptx/synth.hpp"

namespace {

using namespace kooptx;

struct CliArgs {
    std::string config, data, out = ".", task = "four", kind;
    uint64_t seed = 0;
    bool seed_given = false;
};

PipelineConfig resolve_config(const CliArgs& args) {
    PipelineConfig cfg;
    if (!args.config.empty()) cfg = load_pipeline_config(args.config);
    if (args.seed_given) {
        cfg.base_seed = args.seed;
        cfg.train.seed = args.seed;
    }
    validate_pipeline_config(cfg);
    return cfg;
}

// Truncate every record to the configured excerpt length and z-score it,
// keeping all records regardless of diagnosis (used by the label-free
// feature dump).
PreparedData all_records(const std::vector<RawRecord>& records,
                         const PipelineConfig& cfg) {
    if (records.empty()) throw DataError("no records in dataset");
    const double fs = records.front().signal.fs;
    const auto want = static_cast<size_t>(std::llround(cfg.record_seconds * fs));
    PreparedData data;
    data.fs = fs;
    data.labels.assign(records.size(), 0);
    for (const RawRecord& r : records) {
        if (r.signal.samples.size() < want)
            throw DataError(r.file + ": " + std::to_string(r.signal.samples.size()) +
                            " samples, need " + std::to_string(want));
        Signal cut{std::vector<double>(r.signal.samples.begin(),
                                       r.signal.samples.begin() + static_cast<long>(want)),
                   fs};
        data.signals.push_back(zscore(cut));
    }
    return data;
}

int cmd_synth(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    std::filesystem::create_directories(args.out);
    emit_dataset(args.out, static_cast<size_t>(cfg.records_per_class),
                 cfg.record_seconds, cfg.fs, cfg.base_seed);
    std::printf("wrote %d records per class to %s\n", cfg.records_per_class,
                args.out.c_str());
    return 0;
}

int cmd_features(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    SystemKind system;
    if (args.kind == "koopman") system = SystemKind::KoopmanTx;
    else if (args.kind == "wavelet") system = SystemKind::WaveletTx;
    else if (args.kind == "hybrid") system = SystemKind::HybridTx;
    else throw ConfigError("unknown feature kind '" + args.kind +
                           "' (expected koopman, wavelet or hybrid)");

    const std::vector<RawRecord> records = load_dataset(args.data);
    const PreparedData data = all_records(records, cfg);
    const std::vector<Mat> tokens = build_tokens(data, system, cfg);

    std::filesystem::create_directories(args.out);
    const std::string path = args.out + "/features.csv";
    std::FILE* f = std::fopen(path.c_str(), "w");
    if (!f) throw DataError("cannot write " + path);
    std::fputs("file, window", f);
    for (size_t c = 0; c < tokens.front().cols; ++c) std::fprintf(f, ", f%zu", c);
    std::fputs("\n", f);
    for (size_t i = 0; i < tokens.size(); ++i)
        for (size_t r = 0; r < tokens[i].rows; ++r) {
            std::fprintf(f, "%s, %zu", records[i].file.c_str(), r);
            for (size_t c = 0; c < tokens[i].cols; ++c)
                std::fprintf(f, ", %.17g", tokens[i](r, c));
            std::fputs("\n", f);
        }
    std::fclose(f);
    std::printf("wrote %s (%zu records x %zu windows, %zu features)\n", path.c_str(),
                tokens.size(), tokens.front().rows, tokens.front().cols);
    return 0;
}

int fit_and_plot(const CliArgs& args, bool save_model) {
    const PipelineConfig cfg = resolve_config(args);
    const Signal raw = read_signal_csv(args.data);
    const Signal sig = zscore(raw);
    const auto wlen = static_cast<size_t>(std::llround(cfg.window_seconds * sig.fs));
    if (sig.samples.size() < wlen)
        throw DataError(args.data + ": " + std::to_string(sig.samples.size()) +
                        " samples, need " + std::to_string(wlen));
    const std::vector<double> window(sig.samples.begin(),
                                     sig.samples.begin() + static_cast<long>(wlen));

    const KoopmanModel model = edmd_fit(window, sig.fs, cfg.dict, cfg.svd_rank, cfg.ridge);
    std::filesystem::create_directories(args.out);
    if (save_model) save_model_json(model, args.out + "/model.json");
    emit_eigen_plot(model, args.out + "/eigenvalues.svg");
    emit_mode_heatmap(mode_amplitudes(model, window), args.out + "/modes.svg");
    // The readout tracks the newest sample of each embedded state, so the
    // reconstruction aligns with the window from sample delay-1 onward.
    const int steps = static_cast<int>(wlen) - cfg.dict.delay + 1;
    const ReconResult recon = reconstruct(model, window, steps);
    const std::vector<double> tail(window.begin() + cfg.dict.delay - 1, window.end());
    emit_reconstruction_overlay(tail, recon.samples, sig.fs,
                                args.out + "/reconstruction.svg");
    const ReconError err = reconstruction_error(tail, recon.samples);
    std::printf("effective rank %d, reconstruction NRMSE %.4g%s\n",
                model.effective_rank, err.nrmse,
                recon.used_fallback ? " (fallback path)" : "");
    return 0;
}

int cmd_train(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    run_train(load_dataset(args.data), task_from_name(args.task), cfg, args.out);
    return 0;
}

int cmd_eval(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    run_eval(load_dataset(args.data), task_from_name(args.task), cfg, args.out);
    return 0;
}

int cmd_compare(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    run_compare(load_dataset(args.data), task_from_name(args.task), cfg, args.out);
    return 0;
}

int cmd_ablate(const CliArgs& args) {
    const PipelineConfig cfg = resolve_config(args);
    const PreparedData data =
        prepare_data(load_dataset(args.data), task_from_name(args.task), cfg);
    const AblationResult ab = run_ablation(trainval_view(data), cfg);
    std::filesystem::create_directories(args.out);
    write_ablation_csv(args.out + "/ablation.csv", ab);
    write_winner_json(args.out + "/winner.json", ab.winner);
    std::printf("winner: delay %d, centers %d, sigma %g, rank %d (val macro-F1 %.4f)\n",
                ab.winner.delay, ab.winner.rbf_centers, ab.winner.rbf_sigma,
                ab.winner.svd_rank, ab.winner.val_macro_f1);
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Koopman-spectral and wavelet pipelines for quasi-periodic signals"};
    app.require_subcommand(1);

    CliArgs args;
    const auto add_common = [&](CLI::App* sub, bool needs_data) {
        sub->add_option("--config", args.config, "JSON config file");
        auto* data = sub->add_option("--data", args.data, "input dataset directory or file");
        if (needs_data) data->required();
        sub->add_option("--out", args.out, "output directory");
        sub->add_option("--seed", args.seed, "seed override")
            ->each([&](const std::string&) { args.seed_given = true; });
        sub->add_option("--task", args.task, "classification task: binary or four")
            ->check(CLI::IsMember({"binary", "four"}));
    };

    CLI::App* synth = app.add_subcommand("synth", "emit a synthetic labeled dataset");
    add_common(synth, false);
    CLI::App* features =
        app.add_subcommand("features", "per-window feature matrices as CSV");
    features->add_option("kind", args.kind, "koopman, wavelet or hybrid")->required();
    add_common(features, true);
    CLI::App* fitk =
        app.add_subcommand("fit-koopman", "fit one window; model JSON plus figures");
    add_common(fitk, true);
    CLI::App* train = app.add_subcommand("train", "train the configured system");
    add_common(train, true);
    CLI::App* eval =
        app.add_subcommand("eval", "score a trained checkpoint on the test split");
    add_common(eval, true);
    CLI::App* compare =
        app.add_subcommand("compare", "run all five systems and emit report CSVs");
    add_common(compare, true);
    CLI::App* ablate =
        app.add_subcommand("ablate", "dictionary hyperparameter grid on train/val");
    add_common(ablate, true);
    CLI::App* plot = app.add_subcommand("plot", "figures for one signal, no model file");
    add_common(plot, true);

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return 2;  // bad invocation is a configuration error
    }

    try {
        if (synth->parsed()) return cmd_synth(args);
        if (features->parsed()) return cmd_features(args);
        if (fitk->parsed()) return fit_and_plot(args, true);
        if (train->parsed()) return cmd_train(args);
        if (eval->parsed()) return cmd_eval(args);
        if (compare->parsed()) return cmd_compare(args);
        if (ablate->parsed()) return cmd_ablate(args);
        if (plot->parsed()) return fit_and_plot(args, false);
    } catch (const kooptx::ConfigError& e) {
        std::fprintf(stderr, "config error: %s\n", e.what());
        return 2;
    } catch (const kooptx::DataError& e) {
        std::fprintf(stderr, "data error: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 1;
    }
    return 1;
}
