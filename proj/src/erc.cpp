#include "leapmood/erc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <numeric>

#include <json.hpp>

#include "leapmood/common.hpp"
#include "leapmood/eval.hpp"
#include "leapmood/parallel.hpp"

namespace leapmood::erc {

void ModelConfig::validate() const {
    auto positive = [](long v, const char* what) {
        if (v < 1) throw InputError(std::string("model config: ") + what + " must be >= 1");
    };
    positive(hyper.batch_size, "batch_size");
    positive(hyper.epochs, "epochs");
    positive(hyper.word_emb_dim, "word_emb_dim");
    positive(hyper.char_emb_dim, "char_emb_dim");
    positive(hyper.char_lstm_hidden, "char_lstm_hidden");
    positive(hyper.bilstm_hidden, "bilstm_hidden");
    positive(static_cast<long>(vocab_size), "vocab_size");
    positive(static_cast<long>(char_vocab_size), "char_vocab_size");
    positive(static_cast<long>(max_seq_len), "max_seq_len");
    positive(static_cast<long>(max_char_len), "max_char_len");
    positive(static_cast<long>(label_count), "label_count");
    positive(static_cast<long>(attention_dim), "attention_dim");
    for (double rate : {hyper.spatial_dropout, hyper.lstm_dropout, hyper.lstm_recurrent_dropout,
                        hyper.bilstm_recurrent_dropout}) {
        if (rate < 0.0 || rate > 0.5) {
            throw InputError("model config: dropout rates must be in [0, 0.5]");
        }
    }
    if (learning_rate <= 0.0) throw InputError("model config: learning_rate must be > 0");
    if (crf_loss_weight < 0.0) throw InputError("model config: crf_loss_weight must be >= 0");
}

ParamCounts count_params(const ModelConfig& config) {
    const std::uint64_t vw = config.vocab_size;
    const std::uint64_t vc = config.char_vocab_size;
    const std::uint64_t dw = static_cast<std::uint64_t>(config.hyper.word_emb_dim);
    const std::uint64_t dc = static_cast<std::uint64_t>(config.hyper.char_emb_dim);
    const std::uint64_t hc = static_cast<std::uint64_t>(config.hyper.char_lstm_hidden);
    const std::uint64_t hb = static_cast<std::uint64_t>(config.hyper.bilstm_hidden);
    const std::uint64_t a = config.attention_dim;
    const std::uint64_t labels = config.label_count;
    const std::uint64_t din = dw + hc;

    ParamCounts c;
    c.word_embedding = vw * dw;
    c.char_embedding = vc * dc;
    c.char_lstm = 4 * ((dc + hc) * hc + hc);
    c.bilstm = 2 * 4 * ((din + hb) * hb + hb);
    c.attention = (2 * hb * a + a) + a;
    c.dense = 2 * hb * labels + labels;
    c.crf = labels * labels + 2 * labels;
    c.total = c.word_embedding + c.char_embedding + c.char_lstm + c.bilstm + c.attention +
              c.dense + c.crf;
    return c;
}

ErcParams ErcParams::zeros(const ModelConfig& config) {
    const auto dw = static_cast<std::size_t>(config.hyper.word_emb_dim);
    const auto dc = static_cast<std::size_t>(config.hyper.char_emb_dim);
    const auto hc = static_cast<std::size_t>(config.hyper.char_lstm_hidden);
    const auto hb = static_cast<std::size_t>(config.hyper.bilstm_hidden);

    ErcParams p;
    p.word_emb = Tensor::zeros({config.vocab_size, dw});
    p.char_emb = Tensor::zeros({config.char_vocab_size, dc});
    p.char_lstm = nn::LstmParams::zeros(dc, hc);
    p.bilstm_fwd = nn::LstmParams::zeros(dw + hc, hb);
    p.bilstm_bwd = nn::LstmParams::zeros(dw + hc, hb);
    p.attention = nn::AttentionParams::zeros(config.attention_dim, 2 * hb);
    p.dense = nn::DenseParams::zeros(config.label_count, 2 * hb);
    p.crf = nn::CrfParams::zeros(config.label_count);
    return p;
}

std::vector<Tensor*> ErcParams::tensors() {
    return {&word_emb,      &char_emb,      &char_lstm.w,  &char_lstm.u,  &char_lstm.b,
            &bilstm_fwd.w,  &bilstm_fwd.u,  &bilstm_fwd.b, &bilstm_bwd.w, &bilstm_bwd.u,
            &bilstm_bwd.b,  &attention.w,   &attention.b,  &attention.v,  &dense.w,
            &dense.b,       &crf.transition, &crf.start,   &crf.end};
}

std::vector<const Tensor*> ErcParams::tensors() const {
    auto mutable_list = const_cast<ErcParams*>(this)->tensors();
    return std::vector<const Tensor*>(mutable_list.begin(), mutable_list.end());
}

std::vector<std::pair<std::string, const Tensor*>> ErcParams::named() const {
    static const char* names[] = {"word_emb",      "char_emb",      "char_lstm.w",
                                  "char_lstm.u",   "char_lstm.b",   "bilstm_fwd.w",
                                  "bilstm_fwd.u",  "bilstm_fwd.b",  "bilstm_bwd.w",
                                  "bilstm_bwd.u",  "bilstm_bwd.b",  "attention.w",
                                  "attention.b",   "attention.v",   "dense.w",
                                  "dense.b",       "crf.transition", "crf.start",
                                  "crf.end"};
    const auto list = tensors();
    std::vector<std::pair<std::string, const Tensor*>> out;
    out.reserve(list.size());
    for (std::size_t i = 0; i < list.size(); ++i) out.emplace_back(names[i], list[i]);
    return out;
}

std::size_t ErcParams::total_elements() const {
    std::size_t n = 0;
    for (const Tensor* t : tensors()) n += t->numel();
    return n;
}

namespace {

void glorot_fill(Tensor& t, Rng& rng) {
    const double fan_sum = static_cast<double>(t.shape[0] + (t.shape.size() > 1 ? t.shape[1] : 1));
    const double limit = std::sqrt(6.0 / fan_sum);
    for (double& v : t.data) v = rng.uniform(-limit, limit);
}

void lstm_init(nn::LstmParams& p, Rng& rng) {
    glorot_fill(p.w, rng);
    glorot_fill(p.u, rng);
    p.b.fill(0.0);
    const std::size_t h = p.hidden_dim();
    for (std::size_t j = h; j < 2 * h; ++j) p.b.data[j] = 1.0;  // forget gate bias
}

}  // namespace

ErcParams init_params(const ModelConfig& config, Rng& rng) {
    ErcParams p = ErcParams::zeros(config);
    for (double& v : p.word_emb.data) v = rng.uniform(-0.05, 0.05);
    for (double& v : p.char_emb.data) v = rng.uniform(-0.05, 0.05);
    // PAD rows stay zero; padded positions must not inject signal
    std::fill(p.word_emb.row(0), p.word_emb.row(0) + p.word_emb.shape[1], 0.0);
    std::fill(p.char_emb.row(0), p.char_emb.row(0) + p.char_emb.shape[1], 0.0);
    lstm_init(p.char_lstm, rng);
    lstm_init(p.bilstm_fwd, rng);
    lstm_init(p.bilstm_bwd, rng);
    glorot_fill(p.attention.w, rng);
    p.attention.b.fill(0.0);
    glorot_fill(p.attention.v, rng);
    glorot_fill(p.dense.w, rng);
    p.dense.b.fill(0.0);
    // CRF starts decoupled (zero transitions)
    return p;
}

std::vector<double> class_weights(const std::vector<std::uint64_t>& label_counts) {
    if (label_counts.empty()) throw InputError("class_weights: empty histogram");
    std::uint64_t total = 0;
    std::size_t present = 0;
    for (std::uint64_t c : label_counts) {
        total += c;
        if (c > 0) ++present;
    }
    if (present == 0) throw InputError("class_weights: no class has any samples");
    std::vector<double> weights(label_counts.size(), 0.0);
    for (std::size_t c = 0; c < label_counts.size(); ++c) {
        if (label_counts[c] > 0) {
            weights[c] = static_cast<double>(total) /
                         (static_cast<double>(present) * static_cast<double>(label_counts[c]));
        }
    }
    return weights;
}

// ---------------------------------------------------------------------------
// Forward / backward over one conversation
// ---------------------------------------------------------------------------

namespace {

struct DropoutMasks {
    std::vector<double> spatial;      // d_in channels
    std::vector<double> char_input;   // d_c channels
    std::vector<double> char_rec;     // h_c
    std::vector<double> bilstm_fwd_rec, bilstm_bwd_rec;  // h_b each
};

DropoutMasks draw_masks(const ModelConfig& config, Rng& rng) {
    const auto& h = config.hyper;
    const std::size_t din = static_cast<std::size_t>(h.word_emb_dim + h.char_lstm_hidden);
    DropoutMasks m;
    if (h.spatial_dropout > 0.0) {
        m.spatial = nn::dropout_mask_vector(din, h.spatial_dropout, rng);
    }
    if (h.lstm_dropout > 0.0) {
        m.char_input = nn::dropout_mask_vector(static_cast<std::size_t>(h.char_emb_dim),
                                               h.lstm_dropout, rng);
    }
    if (h.lstm_recurrent_dropout > 0.0) {
        m.char_rec = nn::dropout_mask_vector(static_cast<std::size_t>(h.char_lstm_hidden),
                                             h.lstm_recurrent_dropout, rng);
    }
    if (h.bilstm_recurrent_dropout > 0.0) {
        m.bilstm_fwd_rec = nn::dropout_mask_vector(static_cast<std::size_t>(h.bilstm_hidden),
                                                   h.bilstm_recurrent_dropout, rng);
        m.bilstm_bwd_rec = nn::dropout_mask_vector(static_cast<std::size_t>(h.bilstm_hidden),
                                                   h.bilstm_recurrent_dropout, rng);
    }
    return m;
}

struct UtteranceState {
    std::vector<Tensor> char_inputs;          // per valid token: L_c x d_c, post input-mask
    std::vector<nn::LstmCache> char_caches;   // per valid token
    std::vector<std::size_t> char_valid;      // per valid token
    Tensor concat;                            // T x d_in, post spatial mask
    nn::BiLstmCache bilstm_cache;
    Tensor bilstm_hidden;                     // T x 2h
    nn::AttentionCache attn_cache;
    std::vector<double> pooled;               // 2h
    std::vector<double> probs;                // L
    std::vector<double> logprobs;             // L
};

std::size_t count_valid_chars(const EncodedUtterance& utt, std::size_t token) {
    std::size_t n = 0;
    while (n < utt.max_char_len && utt.char_at(token, n) != kPadId) ++n;
    return n;
}

/// Forward for one utterance; masks may be null entries (no dropout at that
/// site). When `state` is null only the probability row is produced.
void utterance_forward(const ErcParams& params, const ModelConfig& config,
                       const EncodedUtterance& utt, const DropoutMasks* masks,
                       UtteranceState& state) {
    const auto dw = static_cast<std::size_t>(config.hyper.word_emb_dim);
    const auto dc = static_cast<std::size_t>(config.hyper.char_emb_dim);
    const auto hc = static_cast<std::size_t>(config.hyper.char_lstm_hidden);
    const std::size_t steps = config.max_seq_len;
    const std::size_t din = dw + hc;
    const std::size_t valid = utt.valid_len;

    state.concat = Tensor::zeros({steps, din});
    state.char_inputs.resize(valid);
    state.char_caches.resize(valid);
    state.char_valid.resize(valid);

    const std::vector<double>* char_rec =
        (masks && !masks->char_rec.empty()) ? &masks->char_rec : nullptr;

    for (std::size_t t = 0; t < valid; ++t) {
        double* row = state.concat.row(t);
        const auto word_id = static_cast<std::size_t>(utt.word_ids[t]);
        const double* wrow = params.word_emb.row(word_id);
        std::copy(wrow, wrow + dw, row);

        const std::size_t cv = count_valid_chars(utt, t);
        state.char_valid[t] = cv;
        if (cv > 0) {
            Tensor cseq = Tensor::zeros({config.max_char_len, dc});
            for (std::size_t c = 0; c < cv; ++c) {
                const auto cid = static_cast<std::size_t>(utt.char_at(t, c));
                const double* crow = params.char_emb.row(cid);
                double* dst = cseq.row(c);
                if (masks && !masks->char_input.empty()) {
                    for (std::size_t j = 0; j < dc; ++j) dst[j] = crow[j] * masks->char_input[j];
                } else {
                    std::copy(crow, crow + dc, dst);
                }
            }
            auto res = nn::lstm_forward(cseq, params.char_lstm, cv, char_rec);
            const double* last = res.hidden.row(cv - 1);
            std::copy(last, last + hc, row + dw);
            state.char_inputs[t] = std::move(cseq);
            state.char_caches[t] = std::move(res.cache);
        }

        if (masks && !masks->spatial.empty()) {
            for (std::size_t j = 0; j < din; ++j) row[j] *= masks->spatial[j];
        }
    }

    const std::vector<double>* frec =
        (masks && !masks->bilstm_fwd_rec.empty()) ? &masks->bilstm_fwd_rec : nullptr;
    const std::vector<double>* brec =
        (masks && !masks->bilstm_bwd_rec.empty()) ? &masks->bilstm_bwd_rec : nullptr;

    auto bi = nn::bilstm_forward(state.concat, params.bilstm_fwd, params.bilstm_bwd, valid,
                                 frec, brec);
    state.bilstm_hidden = std::move(bi.hidden);
    state.bilstm_cache = std::move(bi.cache);

    if (valid > 0) {
        auto attn = nn::attention_pool(state.bilstm_hidden, params.attention, valid);
        state.pooled = std::move(attn.pooled);
        state.attn_cache = std::move(attn.cache);
    } else {
        // an utterance that cleaned down to nothing still needs an emission row
        state.pooled.assign(2 * static_cast<std::size_t>(config.hyper.bilstm_hidden), 0.0);
        state.attn_cache.valid_len = 0;
    }

    const std::vector<double> z = nn::dense_logits(state.pooled, params.dense);
    state.probs = nn::softmax(z);
    state.logprobs = nn::log_softmax(z);
}

void utterance_backward(const ErcParams& params, const ModelConfig& config,
                        const EncodedUtterance& utt, const DropoutMasks* masks,
                        const UtteranceState& state, const std::vector<double>& grad_logits,
                        ErcParams& grads) {
    const auto dw = static_cast<std::size_t>(config.hyper.word_emb_dim);
    const auto dc = static_cast<std::size_t>(config.hyper.char_emb_dim);
    const auto hc = static_cast<std::size_t>(config.hyper.char_lstm_hidden);
    const std::size_t din = dw + hc;
    const std::size_t valid = utt.valid_len;

    const std::vector<double> dpooled =
        nn::dense_backward(grad_logits, state.pooled, params.dense, grads.dense);
    if (valid == 0) return;  // nothing upstream of the dense bias

    Tensor dhidden = nn::attention_backward(dpooled, state.bilstm_hidden, params.attention,
                                            state.attn_cache, grads.attention);

    const std::vector<double>* frec =
        (masks && !masks->bilstm_fwd_rec.empty()) ? &masks->bilstm_fwd_rec : nullptr;
    const std::vector<double>* brec =
        (masks && !masks->bilstm_bwd_rec.empty()) ? &masks->bilstm_bwd_rec : nullptr;

    Tensor dconcat =
        nn::bilstm_backward(dhidden, state.concat, params.bilstm_fwd, params.bilstm_bwd,
                            state.bilstm_cache, frec, brec, grads.bilstm_fwd, grads.bilstm_bwd);

    const std::vector<double>* char_rec =
        (masks && !masks->char_rec.empty()) ? &masks->char_rec : nullptr;

    for (std::size_t t = 0; t < valid; ++t) {
        double* drow = dconcat.row(t);
        if (masks && !masks->spatial.empty()) {
            for (std::size_t j = 0; j < din; ++j) drow[j] *= masks->spatial[j];
        }
        const auto word_id = static_cast<std::size_t>(utt.word_ids[t]);
        double* werow = grads.word_emb.row(word_id);
        for (std::size_t j = 0; j < dw; ++j) werow[j] += drow[j];

        const std::size_t cv = state.char_valid[t];
        if (cv == 0) continue;
        Tensor dchar_hidden = Tensor::zeros({config.max_char_len, hc});
        std::copy(drow + dw, drow + din, dchar_hidden.row(cv - 1));

        Tensor dcseq = nn::lstm_backward(dchar_hidden, state.char_inputs[t], params.char_lstm,
                                         state.char_caches[t], char_rec, grads.char_lstm);

        for (std::size_t c = 0; c < cv; ++c) {
            const auto cid = static_cast<std::size_t>(utt.char_at(t, c));
            double* cerow = grads.char_emb.row(cid);
            const double* src = dcseq.row(c);
            if (masks && !masks->char_input.empty()) {
                for (std::size_t j = 0; j < dc; ++j) cerow[j] += src[j] * masks->char_input[j];
            } else {
                for (std::size_t j = 0; j < dc; ++j) cerow[j] += src[j];
            }
        }
    }
}

/// Loss (class-weighted CE + weighted CRF NLL) and gradients for one
/// conversation. `rng` is the conversation's private dropout stream.
double conversation_loss_grad(const ErcParams& params, const ModelConfig& config,
                              const EncodedDialogue& dlg, const std::vector<double>& weights,
                              Rng rng, ErcParams& grads) {
    const std::size_t n_utts = dlg.utterances.size();
    if (n_utts == 0) throw InputError("training conversation with no utterances");
    if (dlg.labels.size() != n_utts) {
        throw InputError("training conversation has " + std::to_string(n_utts) +
                         " utterances but " + std::to_string(dlg.labels.size()) + " labels");
    }

    std::vector<UtteranceState> states(n_utts);
    std::vector<DropoutMasks> masks(n_utts);
    Tensor emissions = Tensor::zeros({n_utts, config.label_count});

    double ce = 0.0;
    for (std::size_t s = 0; s < n_utts; ++s) {
        masks[s] = draw_masks(config, rng);
        utterance_forward(params, config, dlg.utterances[s], &masks[s], states[s]);
        const int gold = dlg.labels[s];
        if (gold < 0 || static_cast<std::size_t>(gold) >= config.label_count) {
            throw InputError("training label out of range: " + std::to_string(gold));
        }
        ce -= weights[static_cast<std::size_t>(gold)] *
              states[s].logprobs[static_cast<std::size_t>(gold)];
        for (std::size_t y = 0; y < config.label_count; ++y) {
            emissions.at(s, y) = states[s].logprobs[y];
        }
    }

    Tensor demissions;
    nn::CrfParams local = nn::CrfParams::zeros_like(params.crf);
    const double nll = nn::crf_nll(emissions, dlg.labels, params.crf, &demissions, &local);
    const double w = config.crf_loss_weight;
    for (std::size_t i = 0; i < local.transition.numel(); ++i)
        grads.crf.transition.data[i] += w * local.transition.data[i];
    for (std::size_t i = 0; i < local.start.numel(); ++i)
        grads.crf.start.data[i] += w * local.start.data[i];
    for (std::size_t i = 0; i < local.end.numel(); ++i)
        grads.crf.end.data[i] += w * local.end.data[i];

    for (std::size_t s = 0; s < n_utts; ++s) {
        std::vector<double> dlogp(config.label_count);
        for (std::size_t y = 0; y < config.label_count; ++y) {
            dlogp[y] = w * demissions.at(s, y);
        }
        const auto gold = static_cast<std::size_t>(dlg.labels[s]);
        dlogp[gold] -= weights[gold];
        const std::vector<double> dz = nn::log_softmax_backward(dlogp, states[s].probs);
        utterance_backward(params, config, dlg.utterances[s], &masks[s], states[s], dz, grads);
    }
    return ce + w * nll;
}

void add_params(ErcParams& into, const ErcParams& from) {
    auto dst = into.tensors();
    auto src = from.tensors();
    for (std::size_t i = 0; i < dst.size(); ++i) {
        for (std::size_t j = 0; j < dst[i]->numel(); ++j) {
            dst[i]->data[j] += src[i]->data[j];
        }
    }
}

void scale_params(ErcParams& p, double factor) {
    for (Tensor* t : p.tensors()) {
        for (double& v : t->data) v *= factor;
    }
}

}  // namespace

// ---------------------------------------------------------------------------
// Batch accumulation: fixed interleaved slots, reduced in slot order. The
// serial and OpenMP variants walk the identical association tree, so their
// results match bit for bit.
// ---------------------------------------------------------------------------

BatchResult accumulate_batch_serial(const ErcParams& params, const ModelConfig& config,
                                    const std::vector<const EncodedDialogue*>& batch,
                                    const std::vector<std::uint64_t>& conversation_ids,
                                    const std::vector<double>& weights, std::uint64_t seed,
                                    std::uint64_t epoch, int slots, ErcParams& grads) {
    const int n_slots = std::max(1, std::min<int>(slots, static_cast<int>(batch.size())));
    std::vector<ErcParams> slot_grads;
    std::vector<double> slot_loss(static_cast<std::size_t>(n_slots), 0.0);
    slot_grads.reserve(static_cast<std::size_t>(n_slots));
    for (int s = 0; s < n_slots; ++s) slot_grads.push_back(ErcParams::zeros(config));

    for (int s = 0; s < n_slots; ++s) {
        for (std::size_t i = static_cast<std::size_t>(s); i < batch.size();
             i += static_cast<std::size_t>(n_slots)) {
            Rng stream = Rng::stream(seed, epoch, conversation_ids[i]);
            slot_loss[static_cast<std::size_t>(s)] += conversation_loss_grad(
                params, config, *batch[i], weights, stream, slot_grads[static_cast<std::size_t>(s)]);
        }
    }

    BatchResult result;
    for (int s = 0; s < n_slots; ++s) {
        add_params(grads, slot_grads[static_cast<std::size_t>(s)]);
        result.loss_sum += slot_loss[static_cast<std::size_t>(s)];
    }
    for (const EncodedDialogue* dlg : batch) result.utterance_count += dlg->utterances.size();
    return result;
}

BatchResult accumulate_batch_parallel(const ErcParams& params, const ModelConfig& config,
                                      const std::vector<const EncodedDialogue*>& batch,
                                      const std::vector<std::uint64_t>& conversation_ids,
                                      const std::vector<double>& weights, std::uint64_t seed,
                                      std::uint64_t epoch, int slots, int threads,
                                      ErcParams& grads) {
    const int n_slots = std::max(1, std::min<int>(slots, static_cast<int>(batch.size())));
    std::vector<ErcParams> slot_grads;
    std::vector<double> slot_loss(static_cast<std::size_t>(n_slots), 0.0);
    slot_grads.reserve(static_cast<std::size_t>(n_slots));
    for (int s = 0; s < n_slots; ++s) slot_grads.push_back(ErcParams::zeros(config));

    const int n_threads = effective_threads(threads);
#ifdef _OPENMP
#pragma omp parallel for schedule(static) num_threads(n_threads)
#endif
    for (int s = 0; s < n_slots; ++s) {
        for (std::size_t i = static_cast<std::size_t>(s); i < batch.size();
             i += static_cast<std::size_t>(n_slots)) {
            Rng stream = Rng::stream(seed, epoch, conversation_ids[i]);
            slot_loss[static_cast<std::size_t>(s)] += conversation_loss_grad(
                params, config, *batch[i], weights, stream, slot_grads[static_cast<std::size_t>(s)]);
        }
    }
    (void)n_threads;

    BatchResult result;
    for (int s = 0; s < n_slots; ++s) {
        add_params(grads, slot_grads[static_cast<std::size_t>(s)]);
        result.loss_sum += slot_loss[static_cast<std::size_t>(s)];
    }
    for (const EncodedDialogue* dlg : batch) result.utterance_count += dlg->utterances.size();
    return result;
}

Tensor conversation_emissions(const ErcParams& params, const ModelConfig& config,
                              const EncodedDialogue& conversation,
                              std::vector<std::vector<double>>* probs_out) {
    const std::size_t n_utts = conversation.utterances.size();
    if (n_utts == 0) throw InputError("predict: conversation has no utterances");
    Tensor emissions = Tensor::zeros({n_utts, config.label_count});
    if (probs_out) probs_out->resize(n_utts);
    UtteranceState state;
    for (std::size_t s = 0; s < n_utts; ++s) {
        utterance_forward(params, config, conversation.utterances[s], nullptr, state);
        for (std::size_t y = 0; y < config.label_count; ++y) {
            emissions.at(s, y) = state.logprobs[y];
        }
        if (probs_out) (*probs_out)[s] = state.probs;
    }
    return emissions;
}

// ---------------------------------------------------------------------------
// Training loop
// ---------------------------------------------------------------------------

namespace {

double evaluate_metric(const ErcParams& params, const ModelConfig& config,
                       const std::vector<EncodedDialogue>& data, const TrainOptions& options) {
    eval::ConfusionMatrix cm(config.label_count);
    for (const auto& dlg : data) {
        Tensor emissions = conversation_emissions(params, config, dlg, nullptr);
        auto [path, score] = nn::crf_viterbi(emissions, params.crf);
        (void)score;
        cm.add(eval::confusion(dlg.labels, path, config.label_count));
    }
    if (options.metric == MetricKind::Accuracy) return eval::accuracy(cm);
    return eval::metrics(cm, options.excluded_labels).micro_f1;
}

ErcParams copy_params(const ErcParams& src, const ModelConfig& config) {
    ErcParams dst = ErcParams::zeros(config);
    auto d = dst.tensors();
    auto s = src.tensors();
    for (std::size_t i = 0; i < d.size(); ++i) d[i]->data = s[i]->data;
    return dst;
}

}  // namespace

TrainedModel train(const std::vector<EncodedDialogue>& train_data,
                   const std::vector<EncodedDialogue>& val_data, const ModelConfig& config,
                   const TrainOptions& options, Rng& rng) {
    config.validate();
    if (train_data.empty()) throw InputError("train: empty training split");
    if (val_data.empty()) throw InputError("train: empty validation split");

    std::vector<std::uint64_t> histogram(config.label_count, 0);
    for (const auto& dlg : train_data) {
        for (int lab : dlg.labels) {
            if (lab < 0 || static_cast<std::size_t>(lab) >= config.label_count) {
                throw InputError("train: label out of range: " + std::to_string(lab));
            }
            ++histogram[static_cast<std::size_t>(lab)];
        }
    }
    const std::vector<double> weights = class_weights(histogram);

    TrainedModel model;
    model.config = config;
    model.params = init_params(config, rng);

    auto param_list = model.params.tensors();
    nn::AdamState adam = nn::AdamState::init_like(param_list);
    nn::AdamConfig adam_config;
    adam_config.lr = config.learning_rate;

    const std::uint64_t dropout_seed = rng.next_u64();

    double best_metric = evaluate_metric(model.params, config, val_data, options);
    ErcParams best_params = copy_params(model.params, config);
    int stale_epochs = 0;
    const int stop_after = std::max(1, options.patience);

    std::vector<std::size_t> order(train_data.size());
    std::iota(order.begin(), order.end(), 0);
    ErcParams grads = ErcParams::zeros(config);

    for (int epoch = 1; epoch <= config.hyper.epochs; ++epoch) {
        // Fisher-Yates off the master stream
        for (std::size_t i = order.size(); i > 1; --i) {
            const auto j = static_cast<std::size_t>(
                rng.uniform_int(0, static_cast<std::int64_t>(i) - 1));
            std::swap(order[i - 1], order[j]);
        }

        double epoch_loss_sum = 0.0;
        std::size_t epoch_utts = 0;
        const auto batch_size = static_cast<std::size_t>(config.hyper.batch_size);

        for (std::size_t start = 0, batch_no = 0; start < order.size();
             start += batch_size, ++batch_no) {
            const std::size_t stop = std::min(start + batch_size, order.size());
            std::vector<const EncodedDialogue*> batch;
            std::vector<std::uint64_t> ids;
            batch.reserve(stop - start);
            ids.reserve(stop - start);
            for (std::size_t i = start; i < stop; ++i) {
                batch.push_back(&train_data[order[i]]);
                ids.push_back(order[i]);
            }

            for (Tensor* t : grads.tensors()) t->fill(0.0);
            BatchResult res;
            if (options.threads > 1) {
                res = accumulate_batch_parallel(model.params, config, batch, ids, weights,
                                                dropout_seed, static_cast<std::uint64_t>(epoch),
                                                options.grad_slots, options.threads, grads);
            } else {
                res = accumulate_batch_serial(model.params, config, batch, ids, weights,
                                              dropout_seed, static_cast<std::uint64_t>(epoch),
                                              options.grad_slots, grads);
            }
            if (!std::isfinite(res.loss_sum)) {
                throw NumericError("training diverged at epoch " + std::to_string(epoch) +
                                   ", batch " + std::to_string(batch_no));
            }
            scale_params(grads, 1.0 / static_cast<double>(res.utterance_count));

            std::vector<const Tensor*> grad_list;
            for (Tensor* t : grads.tensors()) grad_list.push_back(t);
            adam_step(param_list, grad_list, adam, adam_config);

            epoch_loss_sum += res.loss_sum;
            epoch_utts += res.utterance_count;
        }

        const double val_metric = evaluate_metric(model.params, config, val_data, options);
        model.history.push_back(
            {epoch, epoch_loss_sum / static_cast<double>(epoch_utts), val_metric});

        if (val_metric > best_metric) {
            best_metric = val_metric;
            best_params = copy_params(model.params, config);
            stale_epochs = 0;
        } else {
            ++stale_epochs;
            if (stale_epochs >= stop_after) break;
        }
    }

    model.params = std::move(best_params);
    model.best_val_metric = best_metric;
    return model;
}

Prediction predict(const TrainedModel& model, const EncodedDialogue& conversation) {
    Prediction out;
    Tensor emissions =
        conversation_emissions(model.params, model.config, conversation, &out.logits);
    auto [path, score] = nn::crf_viterbi(emissions, model.params.crf);
    (void)score;
    out.labels = std::move(path);
    return out;
}

// ---------------------------------------------------------------------------
// Serialization: JSON header + little-endian float64 payload.
// ---------------------------------------------------------------------------

namespace {

constexpr char kModelMagic[8] = {'L', 'P', 'M', 'M', 'O', 'D', 'L', '1'};

nlohmann::json config_to_json(const ModelConfig& c) {
    nlohmann::json j;
    j["batch_size"] = c.hyper.batch_size;
    j["epochs"] = c.hyper.epochs;
    j["word_emb_dim"] = c.hyper.word_emb_dim;
    j["char_emb_dim"] = c.hyper.char_emb_dim;
    j["char_lstm_hidden"] = c.hyper.char_lstm_hidden;
    j["spatial_dropout"] = c.hyper.spatial_dropout;
    j["lstm_dropout"] = c.hyper.lstm_dropout;
    j["lstm_recurrent_dropout"] = c.hyper.lstm_recurrent_dropout;
    j["bilstm_hidden"] = c.hyper.bilstm_hidden;
    j["bilstm_recurrent_dropout"] = c.hyper.bilstm_recurrent_dropout;
    j["vocab_size"] = c.vocab_size;
    j["char_vocab_size"] = c.char_vocab_size;
    j["max_seq_len"] = c.max_seq_len;
    j["max_char_len"] = c.max_char_len;
    j["label_count"] = c.label_count;
    j["learning_rate"] = c.learning_rate;
    j["attention_dim"] = c.attention_dim;
    j["crf_loss_weight"] = c.crf_loss_weight;
    return j;
}

ModelConfig config_from_json(const nlohmann::json& j) {
    ModelConfig c;
    c.hyper.batch_size = j.at("batch_size").get<int>();
    c.hyper.epochs = j.at("epochs").get<int>();
    c.hyper.word_emb_dim = j.at("word_emb_dim").get<int>();
    c.hyper.char_emb_dim = j.at("char_emb_dim").get<int>();
    c.hyper.char_lstm_hidden = j.at("char_lstm_hidden").get<int>();
    c.hyper.spatial_dropout = j.at("spatial_dropout").get<double>();
    c.hyper.lstm_dropout = j.at("lstm_dropout").get<double>();
    c.hyper.lstm_recurrent_dropout = j.at("lstm_recurrent_dropout").get<double>();
    c.hyper.bilstm_hidden = j.at("bilstm_hidden").get<int>();
    c.hyper.bilstm_recurrent_dropout = j.at("bilstm_recurrent_dropout").get<double>();
    c.vocab_size = j.at("vocab_size").get<std::size_t>();
    c.char_vocab_size = j.at("char_vocab_size").get<std::size_t>();
    c.max_seq_len = j.at("max_seq_len").get<std::size_t>();
    c.max_char_len = j.at("max_char_len").get<std::size_t>();
    c.label_count = j.at("label_count").get<std::size_t>();
    c.learning_rate = j.at("learning_rate").get<double>();
    c.attention_dim = j.at("attention_dim").get<std::size_t>();
    c.crf_loss_weight = j.at("crf_loss_weight").get<double>();
    return c;
}

}  // namespace

void save_model(const TrainedModel& model, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw InputError("cannot write model file: " + path);

    nlohmann::json header;
    header["format_version"] = 1;
    header["config"] = config_to_json(model.config);
    header["vocab_fingerprint"] = hex64(model.vocab_fingerprint);
    header["best_val_metric"] = model.best_val_metric;
    nlohmann::json hist = nlohmann::json::array();
    for (const auto& e : model.history) {
        hist.push_back({{"epoch", e.epoch},
                        {"train_loss", e.train_loss},
                        {"val_metric", e.val_metric}});
    }
    header["history"] = hist;

    nlohmann::json dir = nlohmann::json::array();
    std::uint64_t offset = 0;
    for (const auto& [name, tensor] : model.params.named()) {
        dir.push_back({{"name", name}, {"shape", tensor->shape}, {"offset", offset}});
        offset += tensor->numel();
    }
    header["tensors"] = dir;
    const std::string header_text = header.dump();

    out.write(kModelMagic, sizeof(kModelMagic));
    const std::uint64_t header_len = header_text.size();
    out.write(reinterpret_cast<const char*>(&header_len), sizeof(header_len));
    out.write(header_text.data(), static_cast<std::streamsize>(header_text.size()));
    for (const auto& [name, tensor] : model.params.named()) {
        (void)name;
        out.write(reinterpret_cast<const char*>(tensor->data.data()),
                  static_cast<std::streamsize>(tensor->data.size() * sizeof(double)));
    }
    if (!out) throw InputError("failed writing model file: " + path);
}

TrainedModel load_model(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open model file: " + path);

    char magic[8];
    in.read(magic, sizeof(magic));
    if (!in || std::memcmp(magic, kModelMagic, sizeof(magic)) != 0) {
        throw InputError("not a model file (bad magic or version): " + path);
    }
    std::uint64_t header_len = 0;
    in.read(reinterpret_cast<char*>(&header_len), sizeof(header_len));
    if (!in) throw InputError("truncated model file: " + path);
    std::string header_text(header_len, '\0');
    in.read(header_text.data(), static_cast<std::streamsize>(header_len));
    if (!in) throw InputError("truncated model header: " + path);

    nlohmann::json header;
    try {
        header = nlohmann::json::parse(header_text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError("corrupt model header: " + std::string(e.what()));
    }
    if (header.at("format_version").get<int>() != 1) {
        throw InputError("unsupported model format version in " + path);
    }

    TrainedModel model;
    model.config = config_from_json(header.at("config"));
    model.config.validate();
    model.vocab_fingerprint =
        std::stoull(header.at("vocab_fingerprint").get<std::string>(), nullptr, 16);
    model.best_val_metric = header.value("best_val_metric", 0.0);
    for (const auto& e : header.at("history")) {
        model.history.push_back({e.at("epoch").get<int>(), e.at("train_loss").get<double>(),
                                 e.at("val_metric").get<double>()});
    }

    model.params = ErcParams::zeros(model.config);
    const auto expected = model.params.named();
    const auto& dir = header.at("tensors");
    if (dir.size() != expected.size()) {
        throw InputError("model tensor directory has " + std::to_string(dir.size()) +
                         " entries, expected " + std::to_string(expected.size()));
    }
    std::uint64_t offset = 0;
    auto mutable_tensors = model.params.tensors();
    for (std::size_t i = 0; i < expected.size(); ++i) {
        const auto& entry = dir[i];
        const std::string name = entry.at("name").get<std::string>();
        if (name != expected[i].first) {
            throw InputError("model tensor " + std::to_string(i) + " is '" + name +
                             "', expected '" + expected[i].first + "'");
        }
        const auto shape = entry.at("shape").get<std::vector<std::size_t>>();
        if (shape != expected[i].second->shape) {
            throw InputError("model tensor '" + name + "' has unexpected shape");
        }
        if (entry.at("offset").get<std::uint64_t>() != offset) {
            throw InputError("model tensor '" + name + "' has inconsistent offset");
        }
        Tensor* t = mutable_tensors[i];
        in.read(reinterpret_cast<char*>(t->data.data()),
                static_cast<std::streamsize>(t->data.size() * sizeof(double)));
        if (!in) throw InputError("model payload truncated at tensor '" + name + "'");
        offset += t->numel();
    }
    return model;
}

std::string config_to_json_text(const ModelConfig& config) {
    return config_to_json(config).dump(2) + "\n";
}

ModelConfig config_from_json_text(const std::string& text) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw InputError(std::string("model config is not valid JSON: ") + e.what());
    }
    return config_from_json(j);
}

}  // namespace leapmood::erc
