#ifndef LEAPMOOD_CLI_HPP
#define LEAPMOOD_CLI_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leapmood/corpus.hpp"
#include "leapmood/erc.hpp"
#include "leapmood/ga.hpp"

namespace leapmood::cli {

/// One config file drives every subcommand; sections mirror the pipeline
/// stages. The seed is mandatory (no wall-clock fallbacks), so a (config,
/// seed) pair fully determines every output byte in single-threaded mode.
struct RunConfig {
    std::uint64_t seed = 0;
    std::string out_dir = "out";
    LabelSet labels;

    // data
    std::string data_format;  // "dailydialog" | "chat_csv"
    std::string data_text_path;
    std::string data_labels_path;
    std::string data_csv_path;
    int data_window_minutes = 60;  // chat conversations for training
    double val_fraction = 0.1;
    double test_fraction = 0.1;
    std::string eval_split = "test";

    // preprocess
    std::size_t vocab_size = 30000;
    std::size_t max_seq_len = 100;
    std::size_t max_char_len = 10;
    std::string acronyms_path;

    // model
    erc::HyperParams hyper;
    double learning_rate = 1e-4;
    double crf_loss_weight = 1.0;
    int patience = 3;
    std::string metric = "micro_f1_excluding";  // or "accuracy"

    // ga
    ga::GaConfig ga_config;
    std::string ga_evaluator = "surrogate";  // or "real"
    std::string ga_metric = "accuracy";      // the Eq. 3 numerator
    std::vector<ga::GeneSpec> genes;         // defaults unless overridden
    std::vector<double> surrogate_target;    // defaults unless overridden

    // mood
    int mood_window_minutes = 60;
    std::size_t kmeans_k = 2;
    std::map<std::string, int> polarity_by_name;  // defaults unless overridden
    std::string mood_fit_csv;

    int threads = 1;

    static RunConfig load(const std::string& path);
    static RunConfig from_json_text(const std::string& text, const std::string& origin);

    // artifact locations under out_dir
    std::string vocab_path() const { return out_dir + "/vocab.json"; }
    std::string corpus_path(const std::string& split) const {
        return out_dir + "/corpus." + split + ".bin";
    }
    std::string stats_path() const { return out_dir + "/stats.csv"; }
    std::string model_path() const { return out_dir + "/model.bin"; }
    std::string history_path() const { return out_dir + "/history.csv"; }
    std::string metrics_csv_path() const { return out_dir + "/metrics.csv"; }
    std::string predictions_path() const { return out_dir + "/predictions.csv"; }
    std::string ga_history_path() const { return out_dir + "/ga_history.csv"; }
    std::string best_chromosome_path() const { return out_dir + "/best_chromosome.json"; }
    std::string best_model_config_path() const { return out_dir + "/best_model_config.json"; }
    std::string kmeans_path() const { return out_dir + "/kmeans.json"; }
    std::string mood_csv_path() const { return out_dir + "/mood.csv"; }

    /// Polarity map by label id, from the config or the built-in defaults.
    std::map<int, int> polarity_by_id() const;
};

/// Each command returns normally on success and throws InputError /
/// NumericError otherwise; the binary maps those to exit codes 2 / 3.
void run_preprocess(const RunConfig& config);
void run_train(const RunConfig& config);
void run_eval(const RunConfig& config);
void run_predict(const RunConfig& config);
void run_tune(const RunConfig& config);
void run_mood(const RunConfig& config);

}  // namespace leapmood::cli

#endif
