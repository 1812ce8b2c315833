#ifndef LEAPMOOD_NN_ADAM_HPP
#define LEAPMOOD_NN_ADAM_HPP

#include <cstdint>
#include <vector>

#include "leapmood/tensor.hpp"

namespace leapmood::nn {

struct AdamConfig {
    double lr = 1e-4;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

/// First/second moment buffers aligned with a fixed parameter-tensor order.
struct AdamState {
    std::vector<Tensor> m, v;
    std::int64_t step = 0;

    static AdamState init_like(const std::vector<Tensor*>& params);
};

/// Standard bias-corrected Adam update, in place.
void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& config);

}  // namespace leapmood::nn

#endif
