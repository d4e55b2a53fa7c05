// Layer forward/backward passes: dense, strided same-padding conv2d, its
// transposed counterpart, the activations, and a small sequential container.
//
// Conventions:
//   - images are [batch, height, width, channels], channels innermost
//   - conv kernels are [kh, kw, in_channels, out_channels]
//   - transposed-conv kernels are [kh, kw, out_channels, in_channels], i.e.
//     the kernel of the strided convolution the layer is the adjoint of
//   - convolution is cross-correlation (no kernel flip)
//
// All accumulation orders are fixed, so results are bitwise reproducible
// run to run for a given build.
#pragma once

#include <cmath>
#include <stdexcept>
#include <string>
#include <vector>

#include "csae/tensor.hpp"

namespace csae {

template <typename T>
struct LayerParamsT {
    TensorT<T> w, b;              // empty b when the layer has no bias
    TensorT<T> mw, vw, mb, vb;    // Adam first/second moments, zeroed

    void init_moments() {
        if (w.size()) {
            mw = TensorT<T>::zeros(w.shape());
            vw = TensorT<T>::zeros(w.shape());
        }
        if (b.size()) {
            mb = TensorT<T>::zeros(b.shape());
            vb = TensorT<T>::zeros(b.shape());
        }
    }
};

using LayerParams = LayerParamsT<float>;

enum class LayerKind { dense, conv2d, conv2d_transpose, relu, sigmoid, softmax, flatten, reshape };

struct LayerSpec {
    LayerKind kind = LayerKind::dense;
    int kernel_h = 0, kernel_w = 0;   // conv kinds
    int filters = 0;                  // conv kinds: output channels
    int stride = 1;
    int units = 0;                    // dense
    bool use_bias = true;
    int reshape_h = 0, reshape_w = 0, reshape_c = 0;
    std::string name;                 // parameter name used by checkpoints

    static LayerSpec dense(int units, std::string name) {
        LayerSpec s;
        s.kind = LayerKind::dense;
        s.units = units;
        s.name = std::move(name);
        return s;
    }
    static LayerSpec conv2d(int kernel, int filters, int stride, std::string name) {
        LayerSpec s;
        s.kind = LayerKind::conv2d;
        s.kernel_h = s.kernel_w = kernel;
        s.filters = filters;
        s.stride = stride;
        s.name = std::move(name);
        return s;
    }
    static LayerSpec conv2d_transpose(int kernel, int filters, int stride, std::string name) {
        LayerSpec s = conv2d(kernel, filters, stride, std::move(name));
        s.kind = LayerKind::conv2d_transpose;
        return s;
    }
    static LayerSpec activation(LayerKind kind) {
        LayerSpec s;
        s.kind = kind;
        return s;
    }
    static LayerSpec flatten() { return activation(LayerKind::flatten); }
    static LayerSpec reshape(int h, int w, int c) {
        LayerSpec s;
        s.kind = LayerKind::reshape;
        s.reshape_h = h;
        s.reshape_w = w;
        s.reshape_c = c;
        return s;
    }

    bool has_params() const {
        return kind == LayerKind::dense || kind == LayerKind::conv2d ||
               kind == LayerKind::conv2d_transpose;
    }
};

// ---------------------------------------------------------------- dense ---

template <typename T>
TensorT<T> dense_forward(const LayerParamsT<T>& p, const TensorT<T>& x) {
    if (x.rank() != 2 || p.w.rank() != 2 || x.dim(1) != p.w.dim(0))
        throw std::invalid_argument("dense_forward: expected x [b,in] and w [in,out], got " +
                                    x.shape_string() + " and " + p.w.shape_string());
    const int batch = x.dim(0), in = x.dim(1), out = p.w.dim(1);
    TensorT<T> y({batch, out});
    std::vector<T> scratch(static_cast<std::size_t>(out));
    T* __restrict acc = scratch.data();
    for (int b = 0; b < batch; ++b) {
        if (p.b.size())
            for (int j = 0; j < out; ++j) acc[j] = p.b[j];
        else
            for (int j = 0; j < out; ++j) acc[j] = T(0);
        const T* __restrict xrow = x.data() + static_cast<std::size_t>(b) * in;
        for (int i = 0; i < in; ++i) {
            const T xv = xrow[i];
            const T* __restrict wrow = p.w.data() + static_cast<std::size_t>(i) * out;
#pragma omp simd
            for (int j = 0; j < out; ++j) acc[j] += xv * wrow[j];
        }
        T* yrow = y.data() + static_cast<std::size_t>(b) * out;
        for (int j = 0; j < out; ++j) yrow[j] = acc[j];
    }
    return y;
}

template <typename T>
void dense_backward(const LayerParamsT<T>& p, const TensorT<T>& x, const TensorT<T>& gout,
                    TensorT<T>* gx, TensorT<T>& gw, TensorT<T>& gb) {
    const int batch = x.dim(0), in = x.dim(1), out = p.w.dim(1);
    if (gout.rank() != 2 || gout.dim(0) != batch || gout.dim(1) != out)
        throw std::invalid_argument("dense_backward: grad shape mismatch");
    gw = TensorT<T>::zeros(p.w.shape());
    {
        // per input unit, accumulate its gw row over the batch in scratch
        std::vector<T> scratch(static_cast<std::size_t>(out));
        T* __restrict acc = scratch.data();
        for (int i = 0; i < in; ++i) {
            for (int j = 0; j < out; ++j) acc[j] = T(0);
            for (int b = 0; b < batch; ++b) {
                const T xv = x.data()[static_cast<std::size_t>(b) * in + i];
                const T* __restrict grow = gout.data() + static_cast<std::size_t>(b) * out;
#pragma omp simd
                for (int j = 0; j < out; ++j) acc[j] += xv * grow[j];
            }
            T* gwrow = gw.data() + static_cast<std::size_t>(i) * out;
            for (int j = 0; j < out; ++j) gwrow[j] = acc[j];
        }
    }
    if (p.b.size()) {
        gb = TensorT<T>::zeros(p.b.shape());
        for (int b = 0; b < batch; ++b) {
            const T* grow = gout.data() + static_cast<std::size_t>(b) * out;
#pragma omp simd
            for (int j = 0; j < out; ++j) gb[j] += grow[j];
        }
    }
    if (gx) {
        *gx = TensorT<T>::zeros(x.shape());
        for (int b = 0; b < batch; ++b) {
            const T* grow = gout.data() + static_cast<std::size_t>(b) * out;
            T* gxrow = gx->data() + static_cast<std::size_t>(b) * in;
            for (int i = 0; i < in; ++i) {
                const T* wrow = p.w.data() + static_cast<std::size_t>(i) * out;
                T acc = T(0);
#pragma omp simd reduction(+ : acc)
                for (int j = 0; j < out; ++j) acc += wrow[j] * grow[j];
                gxrow[i] = acc;
            }
        }
    }
}

// --------------------------------------------------------------- conv2d ---

// same-padding geometry: out = ceil(in/stride), total pad split floor-left /
// ceil-right
struct ConvGeom {
    int out_h = 0, out_w = 0;
    int pad_top = 0, pad_left = 0;
};

inline ConvGeom conv_same_geom(int h, int w, int kh, int kw, int stride) {
    ConvGeom g;
    g.out_h = (h + stride - 1) / stride;
    g.out_w = (w + stride - 1) / stride;
    const int pad_h = std::max((g.out_h - 1) * stride + kh - h, 0);
    const int pad_w = std::max((g.out_w - 1) * stride + kw - w, 0);
    g.pad_top = pad_h / 2;
    g.pad_left = pad_w / 2;
    return g;
}

namespace detail {

// valid output range for one kernel offset: positions where the tap lands
// inside [0, in_dim)
inline std::pair<int, int> valid_out_range(int offset, int pad, int stride, int in_dim,
                                           int out_dim) {
    const int num = pad - offset;
    int lo = num <= 0 ? 0 : (num + stride - 1) / stride;
    int hi = (in_dim - 1 + pad - offset) / stride;  // inclusive
    return {std::min(lo, out_dim), std::min(hi, out_dim - 1)};
}

// y[b,oh,ow,co] = sum_{kh,kw,ci} x[b, oh*s-pt+kh, ow*s-pl+kw, ci] * k[kh,kw,ci,co]
// accumulates each output row in a scratch buffer, written back once
template <typename T>
void conv_same_fwd(const TensorT<T>& x, const TensorT<T>& k, const T* bias, int stride,
                   TensorT<T>& y) {
    const int batch = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
    const int kh = k.dim(0), kw = k.dim(1), cout = k.dim(3);
    const ConvGeom g = conv_same_geom(h, w, kh, kw, stride);
    y = TensorT<T>({batch, g.out_h, g.out_w, cout});
    std::vector<T> scratch(static_cast<std::size_t>(cout));
    T* __restrict acc = scratch.data();
    for (int b = 0; b < batch; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                if (bias)
                    for (int f = 0; f < cout; ++f) acc[f] = bias[f];
                else
                    for (int f = 0; f < cout; ++f) acc[f] = T(0);
                for (int r = 0; r < kh; ++r) {
                    const int ih = oh * stride - g.pad_top + r;
                    if (ih < 0 || ih >= h) continue;
                    for (int c = 0; c < kw; ++c) {
                        const int iw = ow * stride - g.pad_left + c;
                        if (iw < 0 || iw >= w) continue;
                        const T* __restrict xrow = x.data() + x.offset4(b, ih, iw);
                        const T* __restrict krow =
                            k.data() + (static_cast<std::size_t>(r) * kw + c) * cin * cout;
                        for (int ci = 0; ci < cin; ++ci) {
                            const T xv = xrow[ci];
                            const T* __restrict kr = krow + static_cast<std::size_t>(ci) * cout;
#pragma omp simd
                            for (int f = 0; f < cout; ++f) acc[f] += xv * kr[f];
                        }
                    }
                }
                T* yrow = y.data() + y.offset4(b, oh, ow);
                for (int f = 0; f < cout; ++f) yrow[f] = acc[f];
            }
        }
    }
}

// gx[b,ih,iw,ci] += sum_co k[kh,kw,ci,co] * gout[b,oh,ow,co]; gx must be
// pre-shaped to the conv input shape. Works on a [kh,kw,co,ci] transposed
// kernel copy so the inner accumulation is contiguous.
template <typename T>
void conv_same_grad_x(const TensorT<T>& gout, const TensorT<T>& k, int stride, TensorT<T>& gx) {
    const int batch = gx.dim(0), h = gx.dim(1), w = gx.dim(2), cin = gx.dim(3);
    const int kh = k.dim(0), kw = k.dim(1), cout = k.dim(3);
    const ConvGeom g = conv_same_geom(h, w, kh, kw, stride);

    std::vector<T> kt(static_cast<std::size_t>(kh) * kw * cout * cin);
    for (int r = 0; r < kh; ++r)
        for (int c = 0; c < kw; ++c) {
            const T* src = k.data() + (static_cast<std::size_t>(r) * kw + c) * cin * cout;
            T* dst = kt.data() + (static_cast<std::size_t>(r) * kw + c) * cin * cout;
            for (int ci = 0; ci < cin; ++ci)
                for (int f = 0; f < cout; ++f)
                    dst[static_cast<std::size_t>(f) * cin + ci] =
                        src[static_cast<std::size_t>(ci) * cout + f];
        }

    std::vector<T> scratch(static_cast<std::size_t>(cin));
    T* __restrict acc = scratch.data();
    for (int b = 0; b < batch; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                const T* __restrict grow = gout.data() + gout.offset4(b, oh, ow);
                for (int r = 0; r < kh; ++r) {
                    const int ih = oh * stride - g.pad_top + r;
                    if (ih < 0 || ih >= h) continue;
                    for (int c = 0; c < kw; ++c) {
                        const int iw = ow * stride - g.pad_left + c;
                        if (iw < 0 || iw >= w) continue;
                        const T* __restrict ktrow =
                            kt.data() + (static_cast<std::size_t>(r) * kw + c) * cin * cout;
                        for (int ci = 0; ci < cin; ++ci) acc[ci] = T(0);
                        for (int f = 0; f < cout; ++f) {
                            const T gv = grow[f];
                            const T* __restrict ktr = ktrow + static_cast<std::size_t>(f) * cin;
#pragma omp simd
                            for (int ci = 0; ci < cin; ++ci) acc[ci] += gv * ktr[ci];
                        }
                        T* gxrow = gx.data() + gx.offset4(b, ih, iw);
                        for (int ci = 0; ci < cin; ++ci) gxrow[ci] += acc[ci];
                    }
                }
            }
        }
    }
}

// gk[kh,kw,ci,co] += sum_{b,oh,ow} x[b,ih,iw,ci] * gout[b,oh,ow,co]; gk
// pre-shaped and zeroed by the caller. Batch-major iteration keeps x and
// gout streaming while the gk block stays cache-resident.
template <typename T>
void conv_same_grad_w(const TensorT<T>& x, const TensorT<T>& gout, int stride, TensorT<T>& gk) {
    const int batch = x.dim(0), h = x.dim(1), w = x.dim(2), cin = x.dim(3);
    const int kh = gk.dim(0), kw = gk.dim(1), cout = gk.dim(3);
    const ConvGeom g = conv_same_geom(h, w, kh, kw, stride);
    for (int b = 0; b < batch; ++b) {
        for (int oh = 0; oh < g.out_h; ++oh) {
            for (int ow = 0; ow < g.out_w; ++ow) {
                const T* __restrict grow = gout.data() + gout.offset4(b, oh, ow);
                for (int r = 0; r < kh; ++r) {
                    const int ih = oh * stride - g.pad_top + r;
                    if (ih < 0 || ih >= h) continue;
                    for (int c = 0; c < kw; ++c) {
                        const int iw = ow * stride - g.pad_left + c;
                        if (iw < 0 || iw >= w) continue;
                        const T* __restrict xrow = x.data() + x.offset4(b, ih, iw);
                        T* __restrict gkrow =
                            gk.data() + (static_cast<std::size_t>(r) * kw + c) * cin * cout;
                        for (int ci = 0; ci < cin; ++ci) {
                            const T xv = xrow[ci];
                            T* __restrict gkr = gkrow + static_cast<std::size_t>(ci) * cout;
#pragma omp simd
                            for (int f = 0; f < cout; ++f) gkr[f] += xv * grow[f];
                        }
                    }
                }
            }
        }
    }
}

// per-channel sum of a rank-4 tensor over batch and space
template <typename T>
void channel_sums(const TensorT<T>& t, TensorT<T>& out) {
    const int channels = t.dim(3);
    out = TensorT<T>({channels});
    const std::int64_t rows = t.size() / channels;
    for (std::int64_t r = 0; r < rows; ++r) {
        const T* row = t.data() + r * channels;
#pragma omp simd
        for (int f = 0; f < channels; ++f) out[f] += row[f];
    }
}

}  // namespace detail

template <typename T>
TensorT<T> conv2d_forward(const LayerParamsT<T>& p, const TensorT<T>& x, int stride) {
    if (x.rank() != 4 || p.w.rank() != 4)
        throw std::invalid_argument("conv2d_forward: expected rank-4 input and kernel");
    if (x.dim(3) != p.w.dim(2))
        throw std::invalid_argument("conv2d_forward: channel mismatch, input has " +
                                    std::to_string(x.dim(3)) + " channels, kernel expects " +
                                    std::to_string(p.w.dim(2)));
    TensorT<T> y;
    detail::conv_same_fwd(x, p.w, p.b.size() ? p.b.data() : nullptr, stride, y);
    return y;
}

template <typename T>
void conv2d_backward(const LayerParamsT<T>& p, const TensorT<T>& x, const TensorT<T>& gout,
                     int stride, TensorT<T>* gx, TensorT<T>& gw, TensorT<T>& gb) {
    gw = TensorT<T>::zeros(p.w.shape());
    detail::conv_same_grad_w(x, gout, stride, gw);
    if (p.b.size()) detail::channel_sums(gout, gb);
    if (gx) {
        *gx = TensorT<T>::zeros(x.shape());
        detail::conv_same_grad_x(gout, p.w, stride, *gx);
    }
}

// fractionally strided convolution: [b,h,w,c] -> [b,h*s,w*s,f]; exact adjoint
// of conv2d with the same kernel
template <typename T>
TensorT<T> conv2d_transpose_forward(const LayerParamsT<T>& p, const TensorT<T>& x, int stride) {
    if (x.rank() != 4 || p.w.rank() != 4)
        throw std::invalid_argument("conv2d_transpose_forward: expected rank-4 input and kernel");
    if (x.dim(3) != p.w.dim(3))
        throw std::invalid_argument("conv2d_transpose_forward: channel mismatch, input has " +
                                    std::to_string(x.dim(3)) + " channels, kernel expects " +
                                    std::to_string(p.w.dim(3)));
    const int batch = x.dim(0), f = p.w.dim(2);
    TensorT<T> y({batch, x.dim(1) * stride, x.dim(2) * stride, f});
    detail::conv_same_grad_x(x, p.w, stride, y);
    if (p.b.size()) {
        const std::int64_t rows = y.size() / f;
        for (std::int64_t r = 0; r < rows; ++r) {
            T* row = y.data() + r * f;
#pragma omp simd
            for (int j = 0; j < f; ++j) row[j] += p.b[j];
        }
    }
    return y;
}

template <typename T>
void conv2d_transpose_backward(const LayerParamsT<T>& p, const TensorT<T>& x,
                               const TensorT<T>& gout, int stride, TensorT<T>* gx,
                               TensorT<T>& gw, TensorT<T>& gb) {
    gw = TensorT<T>::zeros(p.w.shape());
    detail::conv_same_grad_w(gout, x, stride, gw);
    if (p.b.size()) detail::channel_sums(gout, gb);
    if (gx) detail::conv_same_fwd(gout, p.w, static_cast<const T*>(nullptr), stride, *gx);
}

// ---------------------------------------------------------- activations ---

template <typename T>
TensorT<T> relu_forward(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (std::int64_t i = 0; i < y.size(); ++i) y[i] = y[i] > T(0) ? y[i] : T(0);
    return y;
}

// subgradient at 0 is 0
template <typename T>
TensorT<T> relu_backward(const TensorT<T>& x, const TensorT<T>& gout) {
    TensorT<T> gin = gout;
    for (std::int64_t i = 0; i < gin.size(); ++i)
        if (!(x[i] > T(0))) gin[i] = T(0);
    return gin;
}

template <typename T>
TensorT<T> sigmoid_forward(const TensorT<T>& x) {
    TensorT<T> y = x;
    for (std::int64_t i = 0; i < y.size(); ++i) y[i] = T(1) / (T(1) + std::exp(-y[i]));
    return y;
}

template <typename T>
TensorT<T> sigmoid_backward(const TensorT<T>& y, const TensorT<T>& gout) {
    TensorT<T> gin = gout;
    for (std::int64_t i = 0; i < gin.size(); ++i) gin[i] *= y[i] * (T(1) - y[i]);
    return gin;
}

// row-wise softmax with max subtraction for overflow safety
template <typename T>
TensorT<T> softmax_forward(const TensorT<T>& x) {
    if (x.rank() != 2) throw std::invalid_argument("softmax: expected rank-2 input");
    const int batch = x.dim(0), n = x.dim(1);
    TensorT<T> y = x;
    for (int b = 0; b < batch; ++b) {
        T* row = y.data() + static_cast<std::size_t>(b) * n;
        T mx = row[0];
        for (int j = 1; j < n; ++j) mx = std::max(mx, row[j]);
        T sum = T(0);
        for (int j = 0; j < n; ++j) {
            row[j] = std::exp(row[j] - mx);
            sum += row[j];
        }
        for (int j = 0; j < n; ++j) row[j] /= sum;
    }
    return y;
}

template <typename T>
TensorT<T> softmax_backward(const TensorT<T>& y, const TensorT<T>& gout) {
    const int batch = y.dim(0), n = y.dim(1);
    TensorT<T> gin({batch, n});
    for (int b = 0; b < batch; ++b) {
        const T* yrow = y.data() + static_cast<std::size_t>(b) * n;
        const T* grow = gout.data() + static_cast<std::size_t>(b) * n;
        T dot = T(0);
        for (int j = 0; j < n; ++j) dot += yrow[j] * grow[j];
        T* orow = gin.data() + static_cast<std::size_t>(b) * n;
        for (int j = 0; j < n; ++j) orow[j] = yrow[j] * (grow[j] - dot);
    }
    return gin;
}

enum class Activation { relu, sigmoid, softmax, linear };

template <typename T>
TensorT<T> activation_forward(Activation kind, const TensorT<T>& x) {
    switch (kind) {
        case Activation::relu: return relu_forward(x);
        case Activation::sigmoid: return sigmoid_forward(x);
        case Activation::softmax: return softmax_forward(x);
        default: return x;
    }
}

// `cached` is the layer input for relu and the layer output for
// sigmoid/softmax (where the output form of the derivative is cheaper)
template <typename T>
TensorT<T> activation_backward(Activation kind, const TensorT<T>& cached, const TensorT<T>& gout) {
    switch (kind) {
        case Activation::relu: return relu_backward(cached, gout);
        case Activation::sigmoid: return sigmoid_backward(cached, gout);
        case Activation::softmax: return softmax_backward(cached, gout);
        default: return gout;
    }
}

// ------------------------------------------------------------ sequential ---

template <typename T>
struct ParamGradsT {
    TensorT<T> gw, gb;
};

using ParamGrads = ParamGradsT<float>;

template <typename T>
struct SequentialT {
    std::vector<LayerSpec> specs;
    std::vector<LayerParamsT<T>> params;  // parallel to specs, empty where unused

    void add(LayerSpec spec) {
        specs.push_back(std::move(spec));
        params.emplace_back();
    }
    int layer_count() const { return static_cast<int>(specs.size()); }
};

using Sequential = SequentialT<float>;

template <typename T>
struct ForwardTraceT {
    std::vector<TensorT<T>> inputs;  // inputs[i] = input seen by layer i
    TensorT<T> output;
};

template <typename T>
TensorT<T> layer_forward(const LayerSpec& spec, const LayerParamsT<T>& p, const TensorT<T>& x) {
    switch (spec.kind) {
        case LayerKind::dense: return dense_forward(p, x);
        case LayerKind::conv2d: return conv2d_forward(p, x, spec.stride);
        case LayerKind::conv2d_transpose: return conv2d_transpose_forward(p, x, spec.stride);
        case LayerKind::relu: return relu_forward(x);
        case LayerKind::sigmoid: return sigmoid_forward(x);
        case LayerKind::softmax: return softmax_forward(x);
        case LayerKind::flatten:
            return x.reshaped({x.dim(0), static_cast<int>(x.size() / x.dim(0))});
        case LayerKind::reshape:
            return x.reshaped({x.dim(0), spec.reshape_h, spec.reshape_w, spec.reshape_c});
    }
    throw std::logic_error("layer_forward: unknown layer kind");
}

template <typename T>
TensorT<T> seq_forward(const SequentialT<T>& net, const TensorT<T>& x,
                       ForwardTraceT<T>* trace = nullptr) {
    TensorT<T> cur = x;
    if (trace) {
        trace->inputs.clear();
        trace->inputs.reserve(net.specs.size());
    }
    for (int i = 0; i < net.layer_count(); ++i) {
        if (trace) trace->inputs.push_back(cur);
        cur = layer_forward(net.specs[static_cast<std::size_t>(i)],
                            net.params[static_cast<std::size_t>(i)], cur);
    }
    if (trace) trace->output = cur;
    return cur;
}

// Backpropagates `grad` through layers [0, from_layer]. `grad` is the loss
// gradient at the output of layer `from_layer` (default: the net output).
// Passing from_layer = layer_count()-2 skips a trailing softmax, for use with
// the fused softmax/cross-entropy gradient. Returns the gradient at the net
// input when need_input_grad is set.
template <typename T>
TensorT<T> seq_backward(const SequentialT<T>& net, const ForwardTraceT<T>& trace, TensorT<T> grad,
                        std::vector<ParamGradsT<T>>& grads, bool need_input_grad,
                        int from_layer = -1) {
    const int n = net.layer_count();
    if (from_layer < 0) from_layer = n - 1;
    grads.assign(static_cast<std::size_t>(n), ParamGradsT<T>{});
    for (int i = from_layer; i >= 0; --i) {
        const LayerSpec& spec = net.specs[static_cast<std::size_t>(i)];
        const LayerParamsT<T>& p = net.params[static_cast<std::size_t>(i)];
        const TensorT<T>& input = trace.inputs[static_cast<std::size_t>(i)];
        const TensorT<T>& output =
            (i + 1 < n) ? trace.inputs[static_cast<std::size_t>(i + 1)] : trace.output;
        const bool want_gx = (i > 0) || need_input_grad;
        switch (spec.kind) {
            case LayerKind::dense: {
                TensorT<T> gx;
                auto& g = grads[static_cast<std::size_t>(i)];
                dense_backward(p, input, grad, want_gx ? &gx : nullptr, g.gw, g.gb);
                if (want_gx) grad = std::move(gx);
                break;
            }
            case LayerKind::conv2d: {
                TensorT<T> gx;
                auto& g = grads[static_cast<std::size_t>(i)];
                conv2d_backward(p, input, grad, spec.stride, want_gx ? &gx : nullptr, g.gw, g.gb);
                if (want_gx) grad = std::move(gx);
                break;
            }
            case LayerKind::conv2d_transpose: {
                TensorT<T> gx;
                auto& g = grads[static_cast<std::size_t>(i)];
                conv2d_transpose_backward(p, input, grad, spec.stride, want_gx ? &gx : nullptr,
                                          g.gw, g.gb);
                if (want_gx) grad = std::move(gx);
                break;
            }
            case LayerKind::relu: grad = relu_backward(input, grad); break;
            case LayerKind::sigmoid: grad = sigmoid_backward(output, grad); break;
            case LayerKind::softmax: grad = softmax_backward(output, grad); break;
            case LayerKind::flatten:
            case LayerKind::reshape: grad = grad.reshaped(input.shape()); break;
        }
    }
    return need_input_grad ? grad : TensorT<T>();
}

}  // namespace csae
