#include "leapmood/nn/layers.hpp"

#include <algorithm>
#include <cmath>

#include "leapmood/common.hpp"

namespace leapmood::nn {

// ---------------------------------------------------------------------------
// LSTM
// ---------------------------------------------------------------------------

LstmParams LstmParams::zeros(std::size_t input_dim, std::size_t hidden_dim) {
    LstmParams p;
    p.w = Tensor::zeros({4 * hidden_dim, input_dim});
    p.u = Tensor::zeros({4 * hidden_dim, hidden_dim});
    p.b = Tensor::zeros({4 * hidden_dim});
    return p;
}

LstmForwardResult lstm_forward(const Tensor& inputs, const LstmParams& params,
                               std::size_t valid_len,
                               const std::vector<double>* recurrent_mask) {
    const std::size_t steps = inputs.shape[0];
    const std::size_t h = params.hidden_dim();
    if (valid_len > steps) throw InputError("lstm_forward: valid_len exceeds sequence length");

    LstmForwardResult out;
    out.hidden = Tensor::zeros({steps, h});
    out.cache.gates = Tensor::zeros({steps, 4 * h});
    out.cache.cells = Tensor::zeros({steps, h});
    out.cache.masked_prev = Tensor::zeros({steps, h});
    out.cache.valid_len = valid_len;

    std::vector<double> pre(4 * h);
    for (std::size_t t = 0; t < valid_len; ++t) {
        std::copy(params.b.data.begin(), params.b.data.end(), pre.begin());
        matvec_acc(params.w, inputs.row(t), pre.data());

        double* masked = out.cache.masked_prev.row(t);
        if (t > 0) {
            const double* hprev = out.hidden.row(t - 1);
            for (std::size_t j = 0; j < h; ++j) {
                masked[j] = recurrent_mask ? (*recurrent_mask)[j] * hprev[j] : hprev[j];
            }
        }
        matvec_acc(params.u, masked, pre.data());

        double* gates = out.cache.gates.row(t);
        for (std::size_t j = 0; j < h; ++j) {
            gates[j] = sigmoid(pre[j]);                    // input
            gates[h + j] = sigmoid(pre[h + j]);            // forget
            gates[2 * h + j] = std::tanh(pre[2 * h + j]);  // candidate
            gates[3 * h + j] = sigmoid(pre[3 * h + j]);    // output
        }

        double* cell = out.cache.cells.row(t);
        const double* cprev = (t > 0) ? out.cache.cells.row(t - 1) : nullptr;
        double* hid = out.hidden.row(t);
        for (std::size_t j = 0; j < h; ++j) {
            cell[j] = gates[h + j] * (cprev ? cprev[j] : 0.0) + gates[j] * gates[2 * h + j];
            hid[j] = gates[3 * h + j] * std::tanh(cell[j]);
        }
    }
    check_finite(out.hidden, "lstm_forward output");
    return out;
}

Tensor lstm_backward(const Tensor& grad_hidden, const Tensor& inputs, const LstmParams& params,
                     const LstmCache& cache, const std::vector<double>* recurrent_mask,
                     LstmParams& grads) {
    const std::size_t h = params.hidden_dim();
    Tensor dinputs = Tensor::zeros(inputs.shape);
    if (cache.valid_len == 0) return dinputs;

    std::vector<double> dcell_next(h, 0.0);
    std::vector<double> dh_rec(h, 0.0);
    std::vector<double> da(4 * h);
    std::vector<double> uT_da(h);

    for (std::size_t ti = cache.valid_len; ti-- > 0;) {
        const double* gates = cache.gates.row(ti);
        const double* cell = cache.cells.row(ti);
        const double* cprev = (ti > 0) ? cache.cells.row(ti - 1) : nullptr;

        for (std::size_t j = 0; j < h; ++j) {
            const double gi = gates[j];
            const double gf = gates[h + j];
            const double gg = gates[2 * h + j];
            const double go = gates[3 * h + j];
            const double tc = std::tanh(cell[j]);

            const double dh = grad_hidden.row(ti)[j] + dh_rec[j];
            const double dout = dh * tc;
            double dc = dcell_next[j] + dh * go * (1.0 - tc * tc);

            da[j] = (dc * gg) * gi * (1.0 - gi);                       // input gate
            da[h + j] = (dc * (cprev ? cprev[j] : 0.0)) * gf * (1.0 - gf);  // forget gate
            da[2 * h + j] = (dc * gi) * (1.0 - gg * gg);               // candidate
            da[3 * h + j] = dout * go * (1.0 - go);                    // output gate
            dcell_next[j] = dc * gf;
        }

        outer_acc(grads.w, da.data(), inputs.row(ti));
        outer_acc(grads.u, da.data(), cache.masked_prev.row(ti));
        for (std::size_t j = 0; j < 4 * h; ++j) grads.b.data[j] += da[j];

        matvec_t_acc(params.w, da.data(), dinputs.row(ti));

        std::fill(uT_da.begin(), uT_da.end(), 0.0);
        matvec_t_acc(params.u, da.data(), uT_da.data());
        for (std::size_t j = 0; j < h; ++j) {
            dh_rec[j] = recurrent_mask ? (*recurrent_mask)[j] * uT_da[j] : uT_da[j];
        }
    }
    return dinputs;
}

// ---------------------------------------------------------------------------
// BiLSTM
// ---------------------------------------------------------------------------

namespace {

Tensor reverse_valid_rows(const Tensor& inputs, std::size_t valid_len) {
    Tensor out = Tensor::zeros(inputs.shape);
    const std::size_t cols = inputs.shape[1];
    for (std::size_t t = 0; t < valid_len; ++t) {
        const double* src = inputs.row(valid_len - 1 - t);
        std::copy(src, src + cols, out.row(t));
    }
    return out;
}

}  // namespace

BiLstmForwardResult bilstm_forward(const Tensor& inputs, const LstmParams& fwd,
                                   const LstmParams& bwd, std::size_t valid_len,
                                   const std::vector<double>* fwd_recurrent_mask,
                                   const std::vector<double>* bwd_recurrent_mask) {
    const std::size_t steps = inputs.shape[0];
    const std::size_t h = fwd.hidden_dim();

    BiLstmForwardResult out;
    out.cache.reversed_inputs = reverse_valid_rows(inputs, valid_len);

    LstmForwardResult f = lstm_forward(inputs, fwd, valid_len, fwd_recurrent_mask);
    LstmForwardResult b =
        lstm_forward(out.cache.reversed_inputs, bwd, valid_len, bwd_recurrent_mask);

    out.hidden = Tensor::zeros({steps, 2 * h});
    for (std::size_t t = 0; t < valid_len; ++t) {
        const double* fr = f.hidden.row(t);
        const double* br = b.hidden.row(valid_len - 1 - t);  // un-reverse
        double* dst = out.hidden.row(t);
        std::copy(fr, fr + h, dst);
        std::copy(br, br + h, dst + h);
    }
    out.cache.fwd = std::move(f.cache);
    out.cache.bwd = std::move(b.cache);
    return out;
}

Tensor bilstm_backward(const Tensor& grad_hidden, const Tensor& inputs, const LstmParams& fwd,
                       const LstmParams& bwd, const BiLstmCache& cache,
                       const std::vector<double>* fwd_recurrent_mask,
                       const std::vector<double>* bwd_recurrent_mask, LstmParams& fwd_grads,
                       LstmParams& bwd_grads) {
    const std::size_t steps = inputs.shape[0];
    const std::size_t h = fwd.hidden_dim();
    const std::size_t valid = cache.fwd.valid_len;

    Tensor dfwd = Tensor::zeros({steps, h});
    Tensor dbwd = Tensor::zeros({steps, h});  // in reversed time
    for (std::size_t t = 0; t < valid; ++t) {
        const double* g = grad_hidden.row(t);
        std::copy(g, g + h, dfwd.row(t));
        std::copy(g + h, g + 2 * h, dbwd.row(valid - 1 - t));
    }

    Tensor dx = lstm_backward(dfwd, inputs, fwd, cache.fwd, fwd_recurrent_mask, fwd_grads);
    Tensor dx_rev = lstm_backward(dbwd, cache.reversed_inputs, bwd, cache.bwd,
                                  bwd_recurrent_mask, bwd_grads);
    const std::size_t cols = inputs.shape[1];
    for (std::size_t t = 0; t < valid; ++t) {
        const double* src = dx_rev.row(t);
        double* dst = dx.row(valid - 1 - t);
        for (std::size_t c = 0; c < cols; ++c) dst[c] += src[c];
    }
    return dx;
}

// ---------------------------------------------------------------------------
// Attention
// ---------------------------------------------------------------------------

AttentionParams AttentionParams::zeros(std::size_t attn_dim, std::size_t input_dim) {
    AttentionParams p;
    p.w = Tensor::zeros({attn_dim, input_dim});
    p.b = Tensor::zeros({attn_dim});
    p.v = Tensor::zeros({attn_dim});
    return p;
}

AttentionForwardResult attention_pool(const Tensor& hidden, const AttentionParams& params,
                                      std::size_t valid_len) {
    const std::size_t steps = hidden.shape[0];
    const std::size_t k = hidden.shape[1];
    const std::size_t a = params.b.numel();
    if (valid_len == 0) throw InputError("attention_pool: nothing to pool (valid_len == 0)");
    if (valid_len > steps) throw InputError("attention_pool: valid_len exceeds rows");

    AttentionForwardResult out;
    out.cache.tanh_proj = Tensor::zeros({steps, a});
    out.cache.alpha.assign(steps, 0.0);
    out.cache.valid_len = valid_len;

    std::vector<double> scores(valid_len);
    for (std::size_t t = 0; t < valid_len; ++t) {
        double* u = out.cache.tanh_proj.row(t);
        std::copy(params.b.data.begin(), params.b.data.end(), u);
        matvec_acc(params.w, hidden.row(t), u);
        double e = 0.0;
        for (std::size_t j = 0; j < a; ++j) {
            u[j] = std::tanh(u[j]);
            e += params.v.data[j] * u[j];
        }
        scores[t] = e;
    }

    const double mx = *std::max_element(scores.begin(), scores.end());
    double z = 0.0;
    for (std::size_t t = 0; t < valid_len; ++t) {
        out.cache.alpha[t] = std::exp(scores[t] - mx);
        z += out.cache.alpha[t];
    }
    for (std::size_t t = 0; t < valid_len; ++t) out.cache.alpha[t] /= z;

    out.pooled.assign(k, 0.0);
    for (std::size_t t = 0; t < valid_len; ++t) {
        const double* hrow = hidden.row(t);
        const double w = out.cache.alpha[t];
        for (std::size_t c = 0; c < k; ++c) out.pooled[c] += w * hrow[c];
    }
    check_finite(out.pooled, "attention_pool output");
    return out;
}

Tensor attention_backward(const std::vector<double>& grad_pooled, const Tensor& hidden,
                          const AttentionParams& params, const AttentionCache& cache,
                          AttentionParams& grads) {
    const std::size_t k = hidden.shape[1];
    const std::size_t a = params.b.numel();
    const std::size_t valid = cache.valid_len;

    Tensor dhidden = Tensor::zeros(hidden.shape);

    // through the weighted sum
    std::vector<double> dalpha(valid, 0.0);
    for (std::size_t t = 0; t < valid; ++t) {
        const double* hrow = hidden.row(t);
        double* drow = dhidden.row(t);
        double acc = 0.0;
        for (std::size_t c = 0; c < k; ++c) {
            acc += grad_pooled[c] * hrow[c];
            drow[c] += cache.alpha[t] * grad_pooled[c];
        }
        dalpha[t] = acc;
    }

    // softmax jacobian
    double dot = 0.0;
    for (std::size_t t = 0; t < valid; ++t) dot += dalpha[t] * cache.alpha[t];
    std::vector<double> dscore(valid);
    for (std::size_t t = 0; t < valid; ++t) dscore[t] = cache.alpha[t] * (dalpha[t] - dot);

    // through e_t = v . tanh(W h_t + b)
    std::vector<double> dpre(a);
    for (std::size_t t = 0; t < valid; ++t) {
        const double* u = cache.tanh_proj.row(t);
        for (std::size_t j = 0; j < a; ++j) {
            grads.v.data[j] += dscore[t] * u[j];
            dpre[j] = dscore[t] * params.v.data[j] * (1.0 - u[j] * u[j]);
            grads.b.data[j] += dpre[j];
        }
        outer_acc(grads.w, dpre.data(), hidden.row(t));
        matvec_t_acc(params.w, dpre.data(), dhidden.row(t));
    }
    return dhidden;
}

// ---------------------------------------------------------------------------
// Dense + softmax
// ---------------------------------------------------------------------------

DenseParams DenseParams::zeros(std::size_t out_dim, std::size_t in_dim) {
    DenseParams p;
    p.w = Tensor::zeros({out_dim, in_dim});
    p.b = Tensor::zeros({out_dim});
    return p;
}

std::vector<double> dense_logits(const std::vector<double>& x, const DenseParams& params) {
    std::vector<double> z(params.b.data.begin(), params.b.data.end());
    matvec_acc(params.w, x.data(), z.data());
    return z;
}

std::vector<double> softmax(const std::vector<double>& z) {
    const double mx = *std::max_element(z.begin(), z.end());
    std::vector<double> p(z.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < z.size(); ++i) {
        p[i] = std::exp(z[i] - mx);
        sum += p[i];
    }
    for (double& v : p) v /= sum;
    return p;
}

std::vector<double> log_softmax(const std::vector<double>& z) {
    const double mx = *std::max_element(z.begin(), z.end());
    double sum = 0.0;
    for (double v : z) sum += std::exp(v - mx);
    const double lse = mx + std::log(sum);
    std::vector<double> lp(z.size());
    for (std::size_t i = 0; i < z.size(); ++i) lp[i] = z[i] - lse;
    return lp;
}

std::vector<double> dense_softmax(const std::vector<double>& x, const DenseParams& params) {
    std::vector<double> p = softmax(dense_logits(x, params));
    check_finite(p, "dense_softmax output");
    return p;
}

std::vector<double> dense_backward(const std::vector<double>& grad_logits,
                                   const std::vector<double>& x, const DenseParams& params,
                                   DenseParams& grads) {
    outer_acc(grads.w, grad_logits.data(), x.data());
    for (std::size_t i = 0; i < grad_logits.size(); ++i) grads.b.data[i] += grad_logits[i];
    std::vector<double> dx(x.size(), 0.0);
    matvec_t_acc(params.w, grad_logits.data(), dx.data());
    return dx;
}

std::vector<double> softmax_backward(const std::vector<double>& grad_probs,
                                     const std::vector<double>& probs) {
    double dot = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) dot += grad_probs[i] * probs[i];
    std::vector<double> dz(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = probs[i] * (grad_probs[i] - dot);
    return dz;
}

std::vector<double> log_softmax_backward(const std::vector<double>& grad_logprobs,
                                         const std::vector<double>& probs) {
    double sum = 0.0;
    for (double g : grad_logprobs) sum += g;
    std::vector<double> dz(probs.size());
    for (std::size_t i = 0; i < probs.size(); ++i) dz[i] = grad_logprobs[i] - probs[i] * sum;
    return dz;
}

// ---------------------------------------------------------------------------
// Dropout
// ---------------------------------------------------------------------------

std::vector<double> dropout_mask_vector(std::size_t n, double rate, Rng& rng) {
    if (rate < 0.0 || rate >= 1.0) throw InputError("dropout rate must be in [0, 1)");
    std::vector<double> mask(n, 1.0);
    if (rate == 0.0) return mask;
    const double scale = 1.0 / (1.0 - rate);
    for (double& m : mask) m = (rng.next_double() < rate) ? 0.0 : scale;
    return mask;
}

DropoutResult dropout_apply(const Tensor& x, double rate, DropoutMode mode, Rng& rng,
                            bool training) {
    if (rate < 0.0 || rate >= 1.0) throw InputError("dropout rate must be in [0, 1)");
    DropoutResult out;
    out.mask = Tensor::zeros(x.shape);
    out.mask.fill(1.0);
    if (training && rate > 0.0) {
        if (mode == DropoutMode::Standard) {
            const double scale = 1.0 / (1.0 - rate);
            for (double& m : out.mask.data) m = (rng.next_double() < rate) ? 0.0 : scale;
        } else {
            // one channel mask shared by every timestep (rows)
            const std::size_t channels = x.shape.back();
            const std::vector<double> mask = dropout_mask_vector(channels, rate, rng);
            const std::size_t rows = x.numel() / channels;
            for (std::size_t r = 0; r < rows; ++r) {
                for (std::size_t c = 0; c < channels; ++c) {
                    out.mask.data[r * channels + c] = mask[c];
                }
            }
        }
    }
    out.output = x;
    for (std::size_t i = 0; i < x.numel(); ++i) out.output.data[i] *= out.mask.data[i];
    return out;
}

}  // namespace leapmood::nn
