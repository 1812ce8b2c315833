#include "leapmood/nn/crf.hpp"

#include <algorithm>
#include <cmath>

#include "leapmood/common.hpp"

namespace leapmood::nn {

namespace {

double log_sum_exp(const double* v, std::size_t n) {
    const double mx = *std::max_element(v, v + n);
    double sum = 0.0;
    for (std::size_t i = 0; i < n; ++i) sum += std::exp(v[i] - mx);
    return mx + std::log(sum);
}

void check_labels(const std::vector<int>& path, std::size_t label_count) {
    for (int y : path) {
        if (y < 0 || static_cast<std::size_t>(y) >= label_count) {
            throw InputError("CRF label out of range: " + std::to_string(y));
        }
    }
}

}  // namespace

CrfParams CrfParams::zeros(std::size_t label_count) {
    CrfParams p;
    p.transition = Tensor::zeros({label_count, label_count});
    p.start = Tensor::zeros({label_count});
    p.end = Tensor::zeros({label_count});
    return p;
}

double crf_path_score(const Tensor& emissions, const std::vector<int>& path,
                      const CrfParams& params) {
    const std::size_t steps = emissions.shape[0];
    if (path.size() != steps) throw InputError("CRF path length mismatch");
    check_labels(path, params.label_count());

    double score = params.start.data[static_cast<std::size_t>(path[0])];
    for (std::size_t s = 0; s < steps; ++s) {
        score += emissions.at(s, static_cast<std::size_t>(path[s]));
        if (s + 1 < steps) {
            score += params.transition.at(static_cast<std::size_t>(path[s]),
                                          static_cast<std::size_t>(path[s + 1]));
        }
    }
    score += params.end.data[static_cast<std::size_t>(path.back())];
    return score;
}

double crf_nll(const Tensor& emissions, const std::vector<int>& gold, const CrfParams& params,
               Tensor* grad_emissions, CrfParams* grads) {
    const std::size_t steps = emissions.shape[0];
    const std::size_t labels = params.label_count();
    if (steps == 0) throw InputError("crf_nll: empty sequence");
    if (gold.size() != steps) throw InputError("crf_nll: gold label count mismatch");
    check_labels(gold, labels);

    // forward recursion in log space
    Tensor alpha = Tensor::zeros({steps, labels});
    for (std::size_t y = 0; y < labels; ++y) {
        alpha.at(0, y) = params.start.data[y] + emissions.at(0, y);
    }
    std::vector<double> work(labels);
    for (std::size_t s = 1; s < steps; ++s) {
        for (std::size_t y = 0; y < labels; ++y) {
            for (std::size_t p = 0; p < labels; ++p) {
                work[p] = alpha.at(s - 1, p) + params.transition.at(p, y);
            }
            alpha.at(s, y) = emissions.at(s, y) + log_sum_exp(work.data(), labels);
        }
    }
    for (std::size_t y = 0; y < labels; ++y) work[y] = alpha.at(steps - 1, y) + params.end.data[y];
    const double log_z = log_sum_exp(work.data(), labels);

    const double loss = log_z - crf_path_score(emissions, gold, params);
    check_finite(loss, "crf_nll loss");

    if (grad_emissions || grads) {
        // backward recursion for marginals
        Tensor beta = Tensor::zeros({steps, labels});
        for (std::size_t y = 0; y < labels; ++y) beta.at(steps - 1, y) = params.end.data[y];
        for (std::size_t s = steps - 1; s-- > 0;) {
            for (std::size_t y = 0; y < labels; ++y) {
                for (std::size_t n = 0; n < labels; ++n) {
                    work[n] = params.transition.at(y, n) + emissions.at(s + 1, n) +
                              beta.at(s + 1, n);
                }
                beta.at(s, y) = log_sum_exp(work.data(), labels);
            }
        }

        if (grad_emissions) *grad_emissions = Tensor::zeros(emissions.shape);
        for (std::size_t s = 0; s < steps; ++s) {
            for (std::size_t y = 0; y < labels; ++y) {
                const double marginal = std::exp(alpha.at(s, y) + beta.at(s, y) - log_z);
                const double indicator = (gold[s] == static_cast<int>(y)) ? 1.0 : 0.0;
                if (grad_emissions) grad_emissions->at(s, y) = marginal - indicator;
                if (grads) {
                    if (s == 0) grads->start.data[y] += marginal - indicator;
                    if (s == steps - 1) grads->end.data[y] += marginal - indicator;
                }
            }
        }
        if (grads) {
            for (std::size_t s = 0; s + 1 < steps; ++s) {
                for (std::size_t y = 0; y < labels; ++y) {
                    for (std::size_t n = 0; n < labels; ++n) {
                        const double pair = std::exp(alpha.at(s, y) + params.transition.at(y, n) +
                                                     emissions.at(s + 1, n) + beta.at(s + 1, n) -
                                                     log_z);
                        const double indicator =
                            (gold[s] == static_cast<int>(y) && gold[s + 1] == static_cast<int>(n))
                                ? 1.0
                                : 0.0;
                        grads->transition.at(y, n) += pair - indicator;
                    }
                }
            }
        }
    }
    return loss;
}

std::pair<std::vector<int>, double> crf_viterbi(const Tensor& emissions,
                                                const CrfParams& params) {
    const std::size_t steps = emissions.shape[0];
    const std::size_t labels = params.label_count();
    if (steps == 0) throw InputError("crf_viterbi: empty sequence");

    Tensor best = Tensor::zeros({steps, labels});
    std::vector<std::vector<int>> back(steps, std::vector<int>(labels, 0));
    for (std::size_t y = 0; y < labels; ++y) {
        best.at(0, y) = params.start.data[y] + emissions.at(0, y);
    }
    for (std::size_t s = 1; s < steps; ++s) {
        for (std::size_t y = 0; y < labels; ++y) {
            // strict '>' keeps the lowest previous label on ties
            double top = best.at(s - 1, 0) + params.transition.at(0, y);
            int arg = 0;
            for (std::size_t p = 1; p < labels; ++p) {
                const double cand = best.at(s - 1, p) + params.transition.at(p, y);
                if (cand > top) {
                    top = cand;
                    arg = static_cast<int>(p);
                }
            }
            best.at(s, y) = top + emissions.at(s, y);
            back[s][y] = arg;
        }
    }

    double top = best.at(steps - 1, 0) + params.end.data[0];
    int arg = 0;
    for (std::size_t y = 1; y < labels; ++y) {
        const double cand = best.at(steps - 1, y) + params.end.data[y];
        if (cand > top) {
            top = cand;
            arg = static_cast<int>(y);
        }
    }

    std::vector<int> path(steps);
    path[steps - 1] = arg;
    for (std::size_t s = steps - 1; s > 0; --s) {
        path[s - 1] = back[s][static_cast<std::size_t>(path[s])];
    }
    return {path, top};
}

}  // namespace leapmood::nn
