// Command-line front end: preprocess | train | eval | predict | tune | mood.
// Exit codes: 0 success, 2 input/config errors, 3 numeric failures.

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include <CLI11.hpp>

#include "leapmood/cli.hpp"
#include "leapmood/common.hpp"

namespace {

struct CommonArgs {
    std::string config_path;
    std::optional<std::uint64_t> seed;
    std::optional<std::string> out_dir;
    std::optional<int> parallel;
};

void add_common(CLI::App* cmd, CommonArgs& args) {
    cmd->add_option("--config", args.config_path, "run config JSON")->required();
    cmd->add_option("--seed", args.seed, "override the config seed");
    cmd->add_option("--out", args.out_dir, "override the output directory");
    cmd->add_option("--parallel", args.parallel, "worker threads (1 = serial)");
}

leapmood::cli::RunConfig make_config(const CommonArgs& args) {
    leapmood::cli::RunConfig config = leapmood::cli::RunConfig::load(args.config_path);
    if (args.seed) config.seed = *args.seed;
    if (args.out_dir) config.out_dir = *args.out_dir;
    if (args.parallel) config.threads = *args.parallel;
    return config;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"LEAPMood pipeline: phonetic-hashing preprocessing, recurrent+CRF emotion "
                 "recognition, GA hyperparameter tuning, K-means mood aggregation"};
    app.require_subcommand(1);

    CommonArgs args;
    void (*runner)(const leapmood::cli::RunConfig&) = nullptr;

    auto wire = [&](const char* name, const char* desc,
                    void (*fn)(const leapmood::cli::RunConfig&)) {
        CLI::App* cmd = app.add_subcommand(name, desc);
        add_common(cmd, args);
        cmd->callback([&runner, fn]() { runner = fn; });
    };

    wire("preprocess", "build vocabulary and encode the corpus", leapmood::cli::run_preprocess);
    wire("train", "train the emotion recognition model", leapmood::cli::run_train);
    wire("eval", "score a trained model on a held-out split", leapmood::cli::run_eval);
    wire("predict", "write per-utterance logits and decoded labels", leapmood::cli::run_predict);
    wire("tune", "genetic-algorithm hyperparameter search", leapmood::cli::run_tune);
    wire("mood", "window-level mood prediction over a chat log", leapmood::cli::run_mood);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 2;
    }

    try {
        runner(make_config(args));
    } catch (const leapmood::NumericError& e) {
        std::cerr << "numeric error: " << e.what() << "\n";
        return 3;
    } catch (const leapmood::InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
