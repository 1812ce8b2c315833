#ifndef LEAPMOOD_NN_LAYERS_HPP
#define LEAPMOOD_NN_LAYERS_HPP

#include <cstddef>
#include <vector>

#include "leapmood/rng.hpp"
#include "leapmood/tensor.hpp"

namespace leapmood::nn {

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gradient buffers are parameter-shaped structs; backward passes accumulate
// (+=) into them so callers control batching and reduction order.

// ---------------------------------------------------------------------------
// LSTM. Gate order in the stacked matrices is [input; forget; candidate;
// output]. Positions >= valid_len produce zero states and zero gradients.
// ---------------------------------------------------------------------------

struct LstmParams {
    Tensor w;  // 4h x d
    Tensor u;  // 4h x h
    Tensor b;  // 4h

    std::size_t input_dim() const { return w.shape[1]; }
    std::size_t hidden_dim() const { return u.shape[1]; }

    static LstmParams zeros(std::size_t input_dim, std::size_t hidden_dim);
    static LstmParams zeros_like(const LstmParams& p) {
        return zeros(p.input_dim(), p.hidden_dim());
    }
    std::size_t param_count() const { return w.numel() + u.numel() + b.numel(); }
};

struct LstmCache {
    Tensor gates;        // T x 4h, post-activation
    Tensor cells;        // T x h
    Tensor masked_prev;  // T x h, recurrent-mask * h_{t-1} as fed to U
    std::size_t valid_len = 0;
};

struct LstmForwardResult {
    Tensor hidden;  // T x h
    LstmCache cache;
};

/// `recurrent_mask`, when given, is a length-h inverted-dropout mask applied
/// to h_{t-1} before the recurrent matmul; one mask for every timestep.
LstmForwardResult lstm_forward(const Tensor& inputs, const LstmParams& params,
                               std::size_t valid_len,
                               const std::vector<double>* recurrent_mask = nullptr);

/// Returns d inputs; accumulates parameter gradients into `grads`.
Tensor lstm_backward(const Tensor& grad_hidden, const Tensor& inputs, const LstmParams& params,
                     const LstmCache& cache, const std::vector<double>* recurrent_mask,
                     LstmParams& grads);

// ---------------------------------------------------------------------------
// BiLSTM: forward pass over the valid range concatenated with a backward pass
// over the reversed valid range. Output is T x 2h; padded rows stay zero.
// ---------------------------------------------------------------------------

struct BiLstmCache {
    LstmCache fwd;
    LstmCache bwd;
    Tensor reversed_inputs;
};

struct BiLstmForwardResult {
    Tensor hidden;  // T x 2h
    BiLstmCache cache;
};

BiLstmForwardResult bilstm_forward(const Tensor& inputs, const LstmParams& fwd,
                                   const LstmParams& bwd, std::size_t valid_len,
                                   const std::vector<double>* fwd_recurrent_mask = nullptr,
                                   const std::vector<double>* bwd_recurrent_mask = nullptr);

Tensor bilstm_backward(const Tensor& grad_hidden, const Tensor& inputs, const LstmParams& fwd,
                       const LstmParams& bwd, const BiLstmCache& cache,
                       const std::vector<double>* fwd_recurrent_mask,
                       const std::vector<double>* bwd_recurrent_mask, LstmParams& fwd_grads,
                       LstmParams& bwd_grads);

// ---------------------------------------------------------------------------
// Additive attention pooling: e_t = v . tanh(W h_t + b), alpha = softmax over
// valid positions, output = sum alpha_t h_t.
// ---------------------------------------------------------------------------

struct AttentionParams {
    Tensor w;  // a x k
    Tensor b;  // a
    Tensor v;  // a

    static AttentionParams zeros(std::size_t attn_dim, std::size_t input_dim);
    static AttentionParams zeros_like(const AttentionParams& p) {
        return zeros(p.b.numel(), p.w.shape[1]);
    }
    std::size_t param_count() const { return w.numel() + b.numel() + v.numel(); }
};

struct AttentionCache {
    Tensor tanh_proj;           // T x a
    std::vector<double> alpha;  // length T, zero beyond valid_len
    std::size_t valid_len = 0;
};

struct AttentionForwardResult {
    std::vector<double> pooled;  // k
    AttentionCache cache;
};

/// valid_len must be >= 1; there is nothing to pool otherwise.
AttentionForwardResult attention_pool(const Tensor& hidden, const AttentionParams& params,
                                      std::size_t valid_len);

Tensor attention_backward(const std::vector<double>& grad_pooled, const Tensor& hidden,
                          const AttentionParams& params, const AttentionCache& cache,
                          AttentionParams& grads);

// ---------------------------------------------------------------------------
// Dense + softmax head.
// ---------------------------------------------------------------------------

struct DenseParams {
    Tensor w;  // L x k
    Tensor b;  // L

    static DenseParams zeros(std::size_t out_dim, std::size_t in_dim);
    static DenseParams zeros_like(const DenseParams& p) {
        return zeros(p.b.numel(), p.w.shape[1]);
    }
    std::size_t param_count() const { return w.numel() + b.numel(); }
};

std::vector<double> dense_logits(const std::vector<double>& x, const DenseParams& params);

/// Max-subtracted softmax; output strictly positive, sums to 1.
std::vector<double> softmax(const std::vector<double>& z);
std::vector<double> log_softmax(const std::vector<double>& z);

/// The full head as one op: softmax(W x + b).
std::vector<double> dense_softmax(const std::vector<double>& x, const DenseParams& params);

/// Backprop through the affine part given d logits; returns dx.
std::vector<double> dense_backward(const std::vector<double>& grad_logits,
                                   const std::vector<double>& x, const DenseParams& params,
                                   DenseParams& grads);

/// d logits from d probs for p = softmax(z).
std::vector<double> softmax_backward(const std::vector<double>& grad_probs,
                                     const std::vector<double>& probs);

/// d logits from d log-probs for lp = log_softmax(z).
std::vector<double> log_softmax_backward(const std::vector<double>& grad_logprobs,
                                         const std::vector<double>& probs);

// ---------------------------------------------------------------------------
// Dropout (inverted: kept values scaled by 1/(1-rate)).
//   Standard       - iid element mask.
//   SpatialChannel - one mask over the channel axis (last dim), shared by
//                    every timestep; zeroed channels are zero everywhere.
//   Recurrent      - one mask reused across timesteps of a recurrent input;
//                    same mask algebra as SpatialChannel, applied by the
//                    LSTM to h_{t-1} at every step.
// ---------------------------------------------------------------------------

enum class DropoutMode { Standard, SpatialChannel, Recurrent };

struct DropoutResult {
    Tensor output;
    Tensor mask;  // same shape; each entry 0 or 1/(1-rate)
};

/// training=false is the identity (mask of ones). rate must be in [0, 1).
DropoutResult dropout_apply(const Tensor& x, double rate, DropoutMode mode, Rng& rng,
                            bool training = true);

/// Scaled mask vector for recurrent/spatial use in the training loop.
std::vector<double> dropout_mask_vector(std::size_t n, double rate, Rng& rng);

}  // namespace leapmood::nn

#endif
