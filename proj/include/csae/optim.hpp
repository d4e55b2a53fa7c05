// Adam with bias correction and the step-decay learning-rate schedule.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>

#include "csae/layers.hpp"
#include "csae/tensor.hpp"

namespace csae {

template <typename T>
struct AdamStateT {
    T alpha = T(1e-4);   // per-step learning rate, schedule-derived
    T beta1 = T(0.9);
    T beta2 = T(0.999);
    T epsilon = T(1e-7);
    long t = 0;          // completed steps
};

using AdamState = AdamStateT<float>;

namespace detail {

template <typename T>
void adam_apply_tensor(TensorT<T>& theta, TensorT<T>& m, TensorT<T>& v, const TensorT<T>& g,
                       const AdamStateT<T>& s) {
    if (!g.same_shape(theta))
        throw std::invalid_argument("adam: gradient shape " + g.shape_string() +
                                    " does not match parameter shape " + theta.shape_string());
    const T bc1 = T(1) - std::pow(s.beta1, static_cast<T>(s.t));
    const T bc2 = T(1) - std::pow(s.beta2, static_cast<T>(s.t));
    for (std::int64_t i = 0; i < theta.size(); ++i) {
        const T gi = g[i];
        if (!std::isfinite(gi)) throw std::runtime_error("adam: non-finite gradient");
        m[i] = s.beta1 * m[i] + (T(1) - s.beta1) * gi;
        v[i] = s.beta2 * v[i] + (T(1) - s.beta2) * gi * gi;
        const T mhat = m[i] / bc1;
        const T vhat = v[i] / bc2;
        theta[i] -= s.alpha * mhat / (std::sqrt(vhat) + s.epsilon);
    }
}

}  // namespace detail

// applies one already-counted step to a single parameter set; callers that
// update several layers per step bump state.t once and call this per layer
template <typename T>
void adam_apply(LayerParamsT<T>& p, const ParamGradsT<T>& g, const AdamStateT<T>& s) {
    if (s.t < 1) throw std::logic_error("adam_apply: step counter not incremented");
    if (p.w.size()) detail::adam_apply_tensor(p.w, p.mw, p.vw, g.gw, s);
    if (p.b.size()) detail::adam_apply_tensor(p.b, p.mb, p.vb, g.gb, s);
}

// self-contained step: increments t, then updates the parameter set
template <typename T>
void adam_step(LayerParamsT<T>& p, const ParamGradsT<T>& g, AdamStateT<T>& s) {
    s.t += 1;
    adam_apply(p, g, s);
}

struct LrSchedule {
    float base = 1e-4f;
    float decay_factor = 1.0f / 3.0f;
    int period_epochs = 50;
};

inline float lr_at_epoch(const LrSchedule& sched, int epoch) {
    if (epoch < 0) throw std::invalid_argument("lr_at_epoch: negative epoch");
    float lr = sched.base;
    for (int i = 0; i < epoch / sched.period_epochs; ++i) lr *= sched.decay_factor;
    return lr;
}

}  // namespace csae
