// Dense n-dimensional row-major tensor and the handful of primitives the
// rest of the library is built on. Image tensors use [batch, height, width,
// channels] ordering. Templated on the scalar type so the same code paths
// run at float (training) and double (gradient checking).
#pragma once

#include <cstdint>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace csae {

template <typename T>
class TensorT {
public:
    TensorT() = default;

    explicit TensorT(std::vector<int> shape, T fill = T(0))
        : shape_(std::move(shape)) {
        data_.assign(checked_size(shape_), fill);
    }

    TensorT(std::vector<int> shape, std::vector<T> data)
        : shape_(std::move(shape)), data_(std::move(data)) {
        if (checked_size(shape_) != static_cast<std::int64_t>(data_.size()))
            throw std::invalid_argument(
                "tensor: shape/data length mismatch (" + shape_string() + " vs " +
                std::to_string(data_.size()) + " values)");
    }

    static TensorT zeros(std::vector<int> shape) { return TensorT(std::move(shape)); }

    const std::vector<int>& shape() const { return shape_; }
    int rank() const { return static_cast<int>(shape_.size()); }
    int dim(int i) const { return shape_.at(static_cast<std::size_t>(i)); }
    std::int64_t size() const { return static_cast<std::int64_t>(data_.size()); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::int64_t i) { return data_[static_cast<std::size_t>(i)]; }
    const T& operator[](std::int64_t i) const { return data_[static_cast<std::size_t>(i)]; }

    // rank-specific accessors; index arithmetic is the caller's hot path,
    // so these stay unchecked beyond construction-time invariants
    T& at2(int i, int j) { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }
    const T& at2(int i, int j) const { return data_[static_cast<std::size_t>(i) * shape_[1] + j]; }

    T& at4(int b, int y, int x, int c) {
        return data_[((static_cast<std::size_t>(b) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }
    const T& at4(int b, int y, int x, int c) const {
        return data_[((static_cast<std::size_t>(b) * shape_[1] + y) * shape_[2] + x) * shape_[3] + c];
    }

    // flat offset of a [b, y, x, 0] element in a rank-4 tensor
    std::int64_t offset4(int b, int y, int x) const {
        return ((static_cast<std::int64_t>(b) * shape_[1] + y) * shape_[2] + x) * shape_[3];
    }

    TensorT reshaped(std::vector<int> new_shape) const {
        TensorT out(std::move(new_shape), data_);
        return out;
    }

    bool same_shape(const TensorT& other) const { return shape_ == other.shape_; }

    std::string shape_string() const {
        std::string s = "[";
        for (std::size_t i = 0; i < shape_.size(); ++i) {
            if (i) s += ",";
            s += std::to_string(shape_[i]);
        }
        return s + "]";
    }

private:
    static std::int64_t checked_size(const std::vector<int>& shape) {
        if (shape.empty())
            throw std::invalid_argument("tensor: rank must be >= 1");
        std::int64_t n = 1;
        for (int d : shape) {
            if (d < 1)
                throw std::invalid_argument("tensor: every dimension must be >= 1");
            n *= d;
        }
        return n;
    }

    std::vector<int> shape_;
    std::vector<T> data_;
};

using Tensor = TensorT<float>;
using Tensor64 = TensorT<double>;

// standard matrix product of rank-2 tensors [m,k] x [k,n] -> [m,n]
template <typename T>
TensorT<T> matmul(const TensorT<T>& a, const TensorT<T>& b) {
    if (a.rank() != 2 || b.rank() != 2)
        throw std::invalid_argument("matmul: both operands must be rank-2");
    if (a.dim(1) != b.dim(0))
        throw std::invalid_argument("matmul: inner dimensions disagree (" +
                                    a.shape_string() + " x " + b.shape_string() + ")");
    const int m = a.dim(0), k = a.dim(1), n = b.dim(1);
    TensorT<T> out({m, n});
    for (int i = 0; i < m; ++i) {
        const T* arow = a.data() + static_cast<std::size_t>(i) * k;
        T* orow = out.data() + static_cast<std::size_t>(i) * n;
        for (int p = 0; p < k; ++p) {
            const T av = arow[p];
            const T* brow = b.data() + static_cast<std::size_t>(p) * n;
#pragma omp simd
            for (int j = 0; j < n; ++j) orow[j] += av * brow[j];
        }
    }
    return out;
}

// per-row index of the maximum; ties go to the lowest index
template <typename T>
std::vector<int> argmax_rows(const TensorT<T>& a) {
    if (a.rank() != 2)
        throw std::invalid_argument("argmax_rows: expected rank-2 tensor");
    const int m = a.dim(0), n = a.dim(1);
    std::vector<int> out(static_cast<std::size_t>(m));
    for (int i = 0; i < m; ++i) {
        const T* row = a.data() + static_cast<std::size_t>(i) * n;
        int best = 0;
        for (int j = 1; j < n; ++j)
            if (row[j] > row[best]) best = j;
        out[static_cast<std::size_t>(i)] = best;
    }
    return out;
}

enum class ElemOp { add, sub, mul };

// elementwise op for identical shapes, or rank-1 b broadcast along the last
// axis of a (the bias-add case); no other broadcasting is supported
template <typename T>
TensorT<T> elementwise(const TensorT<T>& a, const TensorT<T>& b, ElemOp op) {
    auto apply = [op](T x, T y) {
        switch (op) {
            case ElemOp::add: return x + y;
            case ElemOp::sub: return x - y;
            default: return x * y;
        }
    };
    TensorT<T> out = a;
    if (a.same_shape(b)) {
        for (std::int64_t i = 0; i < a.size(); ++i) out[i] = apply(a[i], b[i]);
        return out;
    }
    const int last = a.dim(a.rank() - 1);
    if (b.rank() == 1 && b.dim(0) == last) {
        const std::int64_t rows = a.size() / last;
        for (std::int64_t r = 0; r < rows; ++r)
            for (int j = 0; j < last; ++j)
                out[r * last + j] = apply(a[r * last + j], b[j]);
        return out;
    }
    throw std::invalid_argument("elementwise: incompatible shapes " + a.shape_string() +
                                " vs " + b.shape_string());
}

}  // namespace csae
