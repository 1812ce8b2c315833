#ifndef LEAPMOOD_NN_CRF_HPP
#define LEAPMOOD_NN_CRF_HPP

#include <utility>
#include <vector>

#include "leapmood/tensor.hpp"

namespace leapmood::nn {

/// Linear-chain CRF over a conversation's per-utterance emission scores.
struct CrfParams {
    Tensor transition;  // L x L, [from][to]
    Tensor start;       // L
    Tensor end;         // L

    static CrfParams zeros(std::size_t label_count);
    static CrfParams zeros_like(const CrfParams& p) { return zeros(p.label_count()); }
    std::size_t label_count() const { return start.numel(); }
    std::size_t param_count() const {
        return transition.numel() + start.numel() + end.numel();
    }
};

/// start[y_0] + sum_s emissions[s][y_s] + sum_s T[y_s][y_{s+1}] + end[y_last].
double crf_path_score(const Tensor& emissions, const std::vector<int>& path,
                      const CrfParams& params);

/// Negative log-likelihood: logZ - score(gold), logZ by the forward algorithm
/// in log space. Always >= 0. When grad outputs are non-null, fills
/// d emissions and accumulates parameter gradients (marginals minus gold
/// indicators, via forward-backward).
double crf_nll(const Tensor& emissions, const std::vector<int>& gold, const CrfParams& params,
               Tensor* grad_emissions = nullptr, CrfParams* grads = nullptr);

/// Highest-scoring path; ties broken toward the lowest label id at each
/// backtrack step, so decoding is deterministic.
std::pair<std::vector<int>, double> crf_viterbi(const Tensor& emissions,
                                                const CrfParams& params);

}  // namespace leapmood::nn

#endif
