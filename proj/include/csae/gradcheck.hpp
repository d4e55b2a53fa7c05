// Central finite-difference validation of every backward pass, run at double
// precision (32-bit float is too coarse for h=1e-5 differences). The loss is
// a fixed random projection of the layer output, so every output element
// contributes to every checked gradient.
#pragma once

#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "csae/layers.hpp"
#include "csae/losses.hpp"
#include "csae/rng.hpp"
#include "csae/tensor.hpp"

namespace csae {

namespace detail {

inline double rel_err(double analytic, double numeric) {
    return std::abs(analytic - numeric) /
           std::max(1.0, std::abs(analytic) + std::abs(numeric));
}

inline Tensor64 random_tensor(std::vector<int> shape, std::mt19937& rng, double lo = -1.0,
                              double hi = 1.0) {
    Tensor64 t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i)
        t[i] = lo + (hi - lo) * uniform_double(rng);
    return t;
}

// uniform magnitude in [0.1, 1.0] with random sign: keeps relu inputs away
// from the kink, where finite differences are meaningless
inline Tensor64 random_tensor_off_zero(std::vector<int> shape, std::mt19937& rng) {
    Tensor64 t(std::move(shape));
    for (std::int64_t i = 0; i < t.size(); ++i) {
        const double mag = 0.1 + 0.9 * uniform_double(rng);
        t[i] = (rng() & 1u) ? mag : -mag;
    }
    return t;
}

}  // namespace detail

constexpr double kGradCheckStep = 1e-5;

// Max relative error between analytic gradients and central differences for
// one layer, over all parameters and the input.
inline double gradient_check(const LayerSpec& spec, const std::vector<int>& input_shape,
                             std::mt19937& rng) {
    SequentialT<double> net;
    net.add(spec);
    Tensor64 x = (spec.kind == LayerKind::relu)
                     ? detail::random_tensor_off_zero(input_shape, rng)
                     : detail::random_tensor(input_shape, rng);
    if (spec.has_params()) {
        auto& p = net.params[0];
        if (spec.kind == LayerKind::dense) {
            p.w = detail::random_tensor({input_shape[1], spec.units}, rng);
            if (spec.use_bias) p.b = detail::random_tensor({spec.units}, rng);
        } else if (spec.kind == LayerKind::conv2d) {
            p.w = detail::random_tensor({spec.kernel_h, spec.kernel_w, input_shape[3], spec.filters},
                                        rng);
            if (spec.use_bias) p.b = detail::random_tensor({spec.filters}, rng);
        } else {
            p.w = detail::random_tensor({spec.kernel_h, spec.kernel_w, spec.filters, input_shape[3]},
                                        rng);
            if (spec.use_bias) p.b = detail::random_tensor({spec.filters}, rng);
        }
    }

    ForwardTraceT<double> trace;
    Tensor64 y = seq_forward(net, x, &trace);
    const Tensor64 proj = detail::random_tensor(y.shape(), rng);

    auto loss_of = [&](const Tensor64& input) {
        Tensor64 out = seq_forward(net, input);
        double s = 0.0;
        for (std::int64_t i = 0; i < out.size(); ++i) s += proj[i] * out[i];
        return s;
    };

    std::vector<ParamGradsT<double>> grads;
    Tensor64 gx = seq_backward(net, trace, proj, grads, true);

    double worst = 0.0;
    auto check_tensor = [&](Tensor64& target, const Tensor64& analytic) {
        for (std::int64_t i = 0; i < target.size(); ++i) {
            const double orig = target[i];
            target[i] = orig + kGradCheckStep;
            const double lp = loss_of(x);
            target[i] = orig - kGradCheckStep;
            const double lm = loss_of(x);
            target[i] = orig;
            const double numeric = (lp - lm) / (2.0 * kGradCheckStep);
            if (!std::isfinite(numeric) || !std::isfinite(analytic[i]))
                throw std::runtime_error("gradient_check: non-finite value");
            worst = std::max(worst, detail::rel_err(analytic[i], numeric));
        }
    };

    check_tensor(x, gx);
    if (spec.has_params()) {
        check_tensor(net.params[0].w, grads[0].gw);
        if (net.params[0].b.size()) check_tensor(net.params[0].b, grads[0].gb);
    }
    return worst;
}

// fused softmax + cross-entropy gradient vs differences through the softmax
inline double gradient_check_softmax_ce(int batch, int classes, std::mt19937& rng) {
    Tensor64 logits = detail::random_tensor({batch, classes}, rng);
    std::vector<int> labels(static_cast<std::size_t>(batch));
    for (auto& l : labels) l = static_cast<int>(uniform_index(rng, static_cast<std::uint32_t>(classes)));

    auto loss_of = [&](const Tensor64& z) {
        return categorical_crossentropy(softmax_forward(z), labels).first;
    };

    const Tensor64 analytic = categorical_crossentropy(softmax_forward(logits), labels).second;
    double worst = 0.0;
    for (std::int64_t i = 0; i < logits.size(); ++i) {
        const double orig = logits[i];
        logits[i] = orig + kGradCheckStep;
        const double lp = loss_of(logits);
        logits[i] = orig - kGradCheckStep;
        const double lm = loss_of(logits);
        logits[i] = orig;
        const double numeric = (lp - lm) / (2.0 * kGradCheckStep);
        if (!std::isfinite(numeric)) throw std::runtime_error("gradient_check: non-finite value");
        worst = std::max(worst, detail::rel_err(analytic[i], numeric));
    }
    return worst;
}

inline double gradient_check_mse(const std::vector<int>& shape, std::mt19937& rng) {
    Tensor64 x_hat = detail::random_tensor(shape, rng);
    const Tensor64 x_ref = detail::random_tensor(shape, rng);
    const Tensor64 analytic = mse_loss(x_hat, x_ref).second;
    double worst = 0.0;
    for (std::int64_t i = 0; i < x_hat.size(); ++i) {
        const double orig = x_hat[i];
        x_hat[i] = orig + kGradCheckStep;
        const double lp = mse_loss(x_hat, x_ref).first;
        x_hat[i] = orig - kGradCheckStep;
        const double lm = mse_loss(x_hat, x_ref).first;
        x_hat[i] = orig;
        const double numeric = (lp - lm) / (2.0 * kGradCheckStep);
        worst = std::max(worst, detail::rel_err(analytic[i], numeric));
    }
    return worst;
}

struct GradCheckCase {
    std::string name;
    double max_rel_err = 0.0;
    double tolerance = 0.0;
    bool passed() const { return max_rel_err < tolerance; }
};

// the full suite on small random instances; `seeds` independent repetitions
// per case, worst error reported
inline std::vector<GradCheckCase> run_gradcheck_suite(int seeds = 20, std::uint32_t base_seed = 1) {
    std::vector<GradCheckCase> cases = {
        {"dense", 0.0, 1e-6},
        {"conv2d_stride2", 0.0, 1e-5},
        {"conv2d_transpose_stride2", 0.0, 1e-5},
        {"relu", 0.0, 1e-5},
        {"sigmoid", 0.0, 1e-5},
        {"softmax_crossentropy", 0.0, 1e-6},
        {"mse", 0.0, 1e-6},
    };
    for (int s = 0; s < seeds; ++s) {
        std::mt19937 rng(base_seed + static_cast<std::uint32_t>(s) * 7919u);
        cases[0].max_rel_err = std::max(
            cases[0].max_rel_err, gradient_check(LayerSpec::dense(5, "gc"), {4, 3}, rng));
        cases[1].max_rel_err = std::max(
            cases[1].max_rel_err,
            gradient_check(LayerSpec::conv2d(3, 3, 2, "gc"), {2, 6, 6, 2}, rng));
        cases[2].max_rel_err = std::max(
            cases[2].max_rel_err,
            gradient_check(LayerSpec::conv2d_transpose(3, 3, 2, "gc"), {2, 3, 3, 2}, rng));
        cases[3].max_rel_err = std::max(
            cases[3].max_rel_err,
            gradient_check(LayerSpec::activation(LayerKind::relu), {4, 7}, rng));
        cases[4].max_rel_err = std::max(
            cases[4].max_rel_err,
            gradient_check(LayerSpec::activation(LayerKind::sigmoid), {4, 7}, rng));
        cases[5].max_rel_err = std::max(cases[5].max_rel_err, gradient_check_softmax_ce(4, 5, rng));
        cases[6].max_rel_err = std::max(cases[6].max_rel_err, gradient_check_mse({3, 4, 4, 1}, rng));
    }
    return cases;
}

}  // namespace csae
