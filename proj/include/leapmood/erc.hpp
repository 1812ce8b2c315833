#ifndef LEAPMOOD_ERC_HPP
#define LEAPMOOD_ERC_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "leapmood/encode.hpp"
#include "leapmood/nn/adam.hpp"
#include "leapmood/nn/crf.hpp"
#include "leapmood/nn/layers.hpp"
#include "leapmood/rng.hpp"

namespace leapmood::erc {

/// The 10 tunable genes. Defaults are the published training recipe.
struct HyperParams {
    int batch_size = 90;
    int epochs = 25;
    int word_emb_dim = 56;
    int char_emb_dim = 16;
    int char_lstm_hidden = 20;
    double spatial_dropout = 0.0;
    double lstm_dropout = 0.0;
    double lstm_recurrent_dropout = 0.0;
    int bilstm_hidden = 57;
    double bilstm_recurrent_dropout = 0.0;
};

struct ModelConfig {
    HyperParams hyper;
    std::size_t vocab_size = 0;  // embedding rows, reserved ids included
    std::size_t char_vocab_size = 32;
    std::size_t max_seq_len = 100;
    std::size_t max_char_len = 10;
    std::size_t label_count = 0;
    double learning_rate = 1e-4;
    std::size_t attention_dim = 57;  // fixed to bilstm_hidden unless overridden
    double crf_loss_weight = 1.0;    // CRF NLL share of the training loss

    void validate() const;  // throws InputError
};

/// Analytic per-component weight counts; the denominator of the GA fitness.
struct ParamCounts {
    std::uint64_t word_embedding = 0;
    std::uint64_t char_embedding = 0;
    std::uint64_t char_lstm = 0;
    std::uint64_t bilstm = 0;
    std::uint64_t attention = 0;
    std::uint64_t dense = 0;
    std::uint64_t crf = 0;
    std::uint64_t total = 0;
};

ParamCounts count_params(const ModelConfig& config);

/// Every weight tensor of the model, in the fixed order used by the
/// optimizer and the serializer.
struct ErcParams {
    Tensor word_emb;
    Tensor char_emb;
    nn::LstmParams char_lstm;
    nn::LstmParams bilstm_fwd;
    nn::LstmParams bilstm_bwd;
    nn::AttentionParams attention;
    nn::DenseParams dense;
    nn::CrfParams crf;

    static ErcParams zeros(const ModelConfig& config);

    std::vector<Tensor*> tensors();
    std::vector<const Tensor*> tensors() const;
    std::vector<std::pair<std::string, const Tensor*>> named() const;
    std::size_t total_elements() const;
};

/// Glorot-uniform weights, zero biases with forget gates at 1, zero CRF.
ErcParams init_params(const ModelConfig& config, Rng& rng);

/// w_c = N_total / (K * N_c) over the K classes present; absent classes get 0.
std::vector<double> class_weights(const std::vector<std::uint64_t>& label_counts);

enum class MetricKind { Accuracy, MicroF1Excluding };

struct TrainOptions {
    MetricKind metric = MetricKind::MicroF1Excluding;
    std::vector<int> excluded_labels;  // classes the F1 metric skips
    int patience = 3;
    int grad_slots = 8;  // fixed accumulation chunks; independent of threads
    int threads = 1;
};

struct EpochStats {
    int epoch = 0;
    double train_loss = 0.0;
    double val_metric = 0.0;
};

struct TrainedModel {
    ModelConfig config;
    ErcParams params;
    std::uint64_t vocab_fingerprint = 0;
    std::vector<EpochStats> history;
    double best_val_metric = 0.0;
};

/// Mini-batch Adam over shuffled whole conversations with class-weighted
/// cross-entropy + CRF NLL. Early-stops once the monitored validation metric
/// fails to improve for `patience` consecutive epochs (the pre-training
/// metric is the baseline) and returns the best-validation checkpoint.
TrainedModel train(const std::vector<EncodedDialogue>& train_data,
                   const std::vector<EncodedDialogue>& val_data, const ModelConfig& config,
                   const TrainOptions& options, Rng& rng);

struct Prediction {
    std::vector<std::vector<double>> logits;  // per-utterance softmax rows
    std::vector<int> labels;                  // CRF-decoded path
};

/// Dropout disabled; pure function of (model, input).
Prediction predict(const TrainedModel& model, const EncodedDialogue& conversation);

void save_model(const TrainedModel& model, const std::string& path);
TrainedModel load_model(const std::string& path);

std::string config_to_json_text(const ModelConfig& config);
ModelConfig config_from_json_text(const std::string& text);

// ---------------------------------------------------------------------------
// Training internals, exposed for the parallel-equivalence tests and the
// benchmark target.
// ---------------------------------------------------------------------------

/// Unscaled loss + gradient accumulation over one batch. Conversations are
/// assigned to `slots` fixed interleaved chunks; each chunk accumulates in
/// index order and chunks reduce in slot order, so the result is bitwise
/// identical no matter how many threads execute the chunks.
struct BatchResult {
    double loss_sum = 0.0;          // sum of CE + weighted CRF NLL
    std::size_t utterance_count = 0;
};

BatchResult accumulate_batch_serial(const ErcParams& params, const ModelConfig& config,
                                    const std::vector<const EncodedDialogue*>& batch,
                                    const std::vector<std::uint64_t>& conversation_ids,
                                    const std::vector<double>& weights, std::uint64_t seed,
                                    std::uint64_t epoch, int slots, ErcParams& grads);

BatchResult accumulate_batch_parallel(const ErcParams& params, const ModelConfig& config,
                                      const std::vector<const EncodedDialogue*>& batch,
                                      const std::vector<std::uint64_t>& conversation_ids,
                                      const std::vector<double>& weights, std::uint64_t seed,
                                      std::uint64_t epoch, int slots, int threads,
                                      ErcParams& grads);

/// Emission rows (log-probabilities) for one conversation with dropout off.
Tensor conversation_emissions(const ErcParams& params, const ModelConfig& config,
                              const EncodedDialogue& conversation,
                              std::vector<std::vector<double>>* probs_out = nullptr);

}  // namespace leapmood::erc

#endif
