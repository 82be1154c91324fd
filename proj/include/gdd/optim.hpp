#pragma once

#include <cmath>
#include <vector>

#include "gdd/model.hpp"
#include "gdd/tensor.hpp"

namespace gdd {

struct AdamOptions {
    double lr = 5e-5;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    std::vector<Tensor> m, v;
    std::uint64_t step = 0;
};

/// One Adam update with bias correction. Moments are created lazily on the
/// first call and must keep matching the parameter shapes afterwards.
inline void adam_step(const std::vector<Tensor*>& params, const std::vector<Tensor>& grads, AdamState& state,
                      const AdamOptions& opt = {}) {
    if (params.size() != grads.size())
        throw shape_error("adam: " + std::to_string(grads.size()) + " gradients for " + std::to_string(params.size()) +
                          " parameters");
    for (std::size_t i = 0; i < params.size(); ++i)
        if (params[i]->shape() != grads[i].shape())
            throw shape_error("adam: gradient " + shape_str(grads[i].shape()) + " does not match parameter " +
                              shape_str(params[i]->shape()));
    if (state.m.empty()) {
        for (const Tensor* p : params) {
            state.m.emplace_back(p->shape());
            state.v.emplace_back(p->shape());
        }
    } else if (state.m.size() != params.size()) {
        throw shape_error("adam: optimizer state belongs to a different parameter set");
    }
    ++state.step;
    const double t = static_cast<double>(state.step);
    const double c1 = 1.0 - std::pow(opt.beta1, t), c2 = 1.0 - std::pow(opt.beta2, t);
    for (std::size_t i = 0; i < params.size(); ++i) {
        auto p = params[i]->data();
        auto g = grads[i].data();
        auto m = state.m[i].data();
        auto v = state.v[i].data();
        if (m.size() != p.size()) throw shape_error("adam: optimizer state belongs to a different parameter set");
        for (std::size_t k = 0; k < p.size(); ++k) {
            m[k] = opt.beta1 * m[k] + (1.0 - opt.beta1) * g[k];
            v[k] = opt.beta2 * v[k] + (1.0 - opt.beta2) * g[k] * g[k];
            p[k] -= opt.lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + opt.eps);
        }
    }
}

inline void adam_step(ModelParams& params, const std::vector<Tensor>& grads, AdamState& state,
                      const AdamOptions& opt = {}) {
    std::vector<Tensor*> ptrs;
    for (auto& p : params) ptrs.push_back(&p.value);
    adam_step(ptrs, grads, state, opt);
}

} // namespace gdd
