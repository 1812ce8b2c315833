#include "leapmood/nn/adam.hpp"

#include <cmath>

#include "leapmood/common.hpp"

namespace leapmood::nn {

AdamState AdamState::init_like(const std::vector<Tensor*>& params) {
    AdamState s;
    s.m.reserve(params.size());
    s.v.reserve(params.size());
    for (const Tensor* p : params) {
        s.m.push_back(Tensor::zeros(p->shape));
        s.v.push_back(Tensor::zeros(p->shape));
    }
    return s;
}

void adam_step(const std::vector<Tensor*>& params, const std::vector<const Tensor*>& grads,
               AdamState& state, const AdamConfig& config) {
    if (params.size() != grads.size() || params.size() != state.m.size()) {
        throw InputError("adam_step: parameter/gradient/state count mismatch");
    }
    ++state.step;
    const double bc1 = 1.0 - std::pow(config.beta1, static_cast<double>(state.step));
    const double bc2 = 1.0 - std::pow(config.beta2, static_cast<double>(state.step));

    for (std::size_t i = 0; i < params.size(); ++i) {
        Tensor& p = *params[i];
        const Tensor& g = *grads[i];
        if (!p.same_shape(g)) {
            throw InputError("adam_step: gradient shape mismatch at tensor " + std::to_string(i));
        }
        Tensor& m = state.m[i];
        Tensor& v = state.v[i];
        for (std::size_t j = 0; j < p.numel(); ++j) {
            const double gj = g.data[j];
            m.data[j] = config.beta1 * m.data[j] + (1.0 - config.beta1) * gj;
            v.data[j] = config.beta2 * v.data[j] + (1.0 - config.beta2) * gj * gj;
            const double mhat = m.data[j] / bc1;
            const double vhat = v.data[j] / bc2;
            p.data[j] -= config.lr * mhat / (std::sqrt(vhat) + config.eps);
        }
        check_finite(p, "adam_step parameter tensor " + std::to_string(i));
    }
}

}  // namespace leapmood::nn
