// Reconstruction and classification losses with their analytic gradients.
#pragma once

#include <cmath>
#include <stdexcept>
#include <utility>
#include <vector>

#include "csae/tensor.hpp"

namespace csae {

// mean squared error over all elements; grad = 2*(x_hat - x)/N
template <typename T>
std::pair<T, TensorT<T>> mse_loss(const TensorT<T>& x_hat, const TensorT<T>& x) {
    if (!x_hat.same_shape(x))
        throw std::invalid_argument("mse_loss: shape mismatch " + x_hat.shape_string() +
                                    " vs " + x.shape_string());
    const std::int64_t n = x.size();
    TensorT<T> grad = TensorT<T>::zeros(x.shape());
    T loss = T(0);
    const T inv_n = T(1) / static_cast<T>(n);
    for (std::int64_t i = 0; i < n; ++i) {
        const T d = x_hat[i] - x[i];
        loss += d * d * inv_n;
        grad[i] = T(2) * d * inv_n;
    }
    return {loss, std::move(grad)};
}

// Categorical cross-entropy on softmax outputs. Probabilities are clipped to
// [1e-7, 1-1e-7] for the loss value; the returned gradient is with respect to
// the pre-softmax logits, i.e. the fused form (p - onehot(y)) / batch.
template <typename T>
std::pair<T, TensorT<T>> categorical_crossentropy(const TensorT<T>& probs,
                                                  const std::vector<int>& labels) {
    if (probs.rank() != 2)
        throw std::invalid_argument("categorical_crossentropy: expected rank-2 probabilities");
    const int batch = probs.dim(0), k = probs.dim(1);
    if (static_cast<int>(labels.size()) != batch)
        throw std::invalid_argument("categorical_crossentropy: label count mismatch");
    const T clip_lo = T(1e-7), clip_hi = T(1) - T(1e-7);
    const T inv_b = T(1) / static_cast<T>(batch);
    TensorT<T> grad({batch, k});
    T loss = T(0);
    for (int b = 0; b < batch; ++b) {
        const int y = labels[static_cast<std::size_t>(b)];
        if (y < 0 || y >= k)
            throw std::invalid_argument("categorical_crossentropy: label " + std::to_string(y) +
                                        " out of range [0," + std::to_string(k) + ")");
        const T* prow = probs.data() + static_cast<std::size_t>(b) * k;
        T* grow = grad.data() + static_cast<std::size_t>(b) * k;
        const T p = std::min(std::max(prow[y], clip_lo), clip_hi);
        loss -= std::log(p) * inv_b;
        for (int j = 0; j < k; ++j) grow[j] = prow[j] * inv_b;
        grow[y] -= inv_b;
    }
    return {loss, std::move(grad)};
}

}  // namespace csae
