#pragma once

#include <cstddef>
#include <cstdint>
#include <initializer_list>
#include <numeric>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cbnn/errors.hpp"
#include "cbnn/ring.hpp"

namespace cbnn {

/// Dimension list of a row-major dense tensor. Convolution activations use
/// channel-major (C,H,W) order throughout.
class Shape {
public:
    Shape() = default;
    Shape(std::initializer_list<std::size_t> dims) : dims_(dims) {}
    explicit Shape(std::vector<std::size_t> dims) : dims_(std::move(dims)) {}

    std::size_t rank() const { return dims_.size(); }
    std::size_t operator[](std::size_t i) const { return dims_[i]; }
    const std::vector<std::size_t>& dims() const { return dims_; }

    std::size_t count() const {
        return std::accumulate(dims_.begin(), dims_.end(), std::size_t{1},
                               std::multiplies<>());
    }

    bool operator==(const Shape& o) const = default;

    std::string str() const {
        std::string s = "(";
        for (std::size_t i = 0; i < dims_.size(); ++i)
            s += (i ? "," : "") + std::to_string(dims_[i]);
        return s + ")";
    }

private:
    std::vector<std::size_t> dims_;
};

/// Dense row-major tensor over an arbitrary scalar. Ring values use
/// Tensor<ring_t>, the plaintext oracle uses Tensor<double>, bit tensors
/// Tensor<uint8_t>. Value semantics; safe to share read-only across threads.
template <typename T>
class Tensor {
public:
    using Scalar = T;
    using EigenMatrix = Eigen::Matrix<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

    Tensor() = default;
    explicit Tensor(Shape shape, T fill = T{})
        : shape_(std::move(shape)), data_(shape_.count(), fill) {}
    Tensor(Shape shape, std::vector<T> data) : shape_(std::move(shape)), data_(std::move(data)) {
        if (shape_.count() != data_.size())
            throw RangeError("tensor data length " + std::to_string(data_.size()) +
                             " does not match shape " + shape_.str());
    }

    const Shape& shape() const { return shape_; }
    std::size_t size() const { return data_.size(); }
    bool empty() const { return data_.empty(); }

    T* data() { return data_.data(); }
    const T* data() const { return data_.data(); }
    std::vector<T>& values() { return data_; }
    const std::vector<T>& values() const { return data_; }

    T& operator[](std::size_t i) { return data_[i]; }
    const T& operator[](std::size_t i) const { return data_[i]; }

    /// Same elements reinterpreted under a new shape (element count must match).
    Tensor reshaped(Shape s) const {
        if (s.count() != size())
            throw RangeError("reshape " + shape_.str() + " -> " + s.str() +
                             " changes element count");
        Tensor t = *this;
        t.shape_ = std::move(s);
        return t;
    }

    /// 2-D Eigen view; rows*cols must equal size().
    auto matrix(Eigen::Index rows, Eigen::Index cols) {
        return Eigen::Map<EigenMatrix>(data_.data(), rows, cols);
    }
    auto matrix(Eigen::Index rows, Eigen::Index cols) const {
        return Eigen::Map<const EigenMatrix>(data_.data(), rows, cols);
    }
    auto array() { return Eigen::Map<Eigen::Array<T, Eigen::Dynamic, 1>>(data_.data(), size()); }
    auto array() const {
        return Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, 1>>(data_.data(), size());
    }

    bool operator==(const Tensor& o) const = default;

private:
    Shape shape_;
    std::vector<T> data_;
};

using RingTensor = Tensor<ring_t>;
using RealTensor = Tensor<double>;
using BitTensor = Tensor<std::uint8_t>;

namespace detail {
inline void check_same_shape(const Shape& a, const Shape& b, const char* op) {
    if (!(a == b))
        throw RangeError(std::string(op) + ": shape mismatch " + a.str() + " vs " + b.str());
}
} // namespace detail

// ---- elementwise ring arithmetic -------------------------------------------------

namespace detail {
template <typename F>
RingTensor zip(const Ring& ring, const RingTensor& a, const RingTensor& b, const char* op,
               F f) {
    check_same_shape(a.shape(), b.shape(), op);
    RingTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ring.reduce(f(a[i], b[i]));
    return out;
}
} // namespace detail

inline RingTensor add(const Ring& ring, const RingTensor& a, const RingTensor& b) {
    return detail::zip(ring, a, b, "add", [](ring_t x, ring_t y) { return x + y; });
}

inline RingTensor sub(const Ring& ring, const RingTensor& a, const RingTensor& b) {
    return detail::zip(ring, a, b, "sub", [](ring_t x, ring_t y) { return x - y; });
}

inline RingTensor mul(const Ring& ring, const RingTensor& a, const RingTensor& b) {
    return detail::zip(ring, a, b, "mul", [](ring_t x, ring_t y) { return x * y; });
}

inline RingTensor neg(const Ring& ring, const RingTensor& a) {
    RingTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ring.neg(a[i]);
    return out;
}

inline RingTensor scale(const Ring& ring, const RingTensor& a, ring_t c) {
    RingTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ring.mul(a[i], c);
    return out;
}

inline RingTensor add_scalar(const Ring& ring, const RingTensor& a, ring_t c) {
    RingTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ring.add(a[i], c);
    return out;
}

inline RingTensor xor_mask(const Ring& ring, const RingTensor& a, const RingTensor& m) {
    detail::check_same_shape(a.shape(), m.shape(), "xor");
    RingTensor out(a.shape());
    for (std::size_t i = 0; i < a.size(); ++i) out[i] = ring.reduce(a[i] ^ m[i]);
    return out;
}

// ---- matmul / convolution --------------------------------------------------------

/// a: (m,k), b: (k,n) -> (m,n). Unsigned overflow wraps mod 2^64; reducing the
/// result afterwards yields exact arithmetic mod 2^l for any l <= 64.
template <typename T>
Tensor<T> matmul(const Tensor<T>& a, const Tensor<T>& b) {
    if (a.shape().rank() != 2 || b.shape().rank() != 2 || a.shape()[1] != b.shape()[0])
        throw RangeError("matmul: incompatible shapes " + a.shape().str() + " x " +
                         b.shape().str());
    Eigen::Index m = static_cast<Eigen::Index>(a.shape()[0]);
    Eigen::Index k = static_cast<Eigen::Index>(a.shape()[1]);
    Eigen::Index n = static_cast<Eigen::Index>(b.shape()[1]);
    Tensor<T> out(Shape{a.shape()[0], b.shape()[1]});
    out.matrix(m, n).noalias() = a.matrix(m, k) * b.matrix(k, n);
    return out;
}

inline RingTensor matmul(const Ring& ring, const RingTensor& a, const RingTensor& b) {
    RingTensor out = matmul(a, b);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] &= ring.mask();
    return out;
}

/// Geometry of a 2-D convolution over channel-major (C,H,W) activations.
struct Conv2dGeom {
    std::size_t in_channels = 0;
    std::size_t out_channels = 0;
    std::size_t kernel = 3;
    std::size_t stride = 1;
    std::size_t pad = 0;
    bool depthwise = false; // per-channel conv, out_channels == in_channels

    std::size_t out_dim(std::size_t in) const {
        if (in + 2 * pad < kernel)
            throw RangeError("conv: kernel larger than padded input");
        return (in + 2 * pad - kernel) / stride + 1;
    }
    Shape out_shape(const Shape& in) const {
        if (in.rank() != 3 || in[0] != in_channels)
            throw RangeError("conv: expected " + std::to_string(in_channels) +
                             "-channel (C,H,W) input, got " + in.str());
        return Shape{out_channels, out_dim(in[1]), out_dim(in[2])};
    }
};

/// Patch matrix for conv-as-matmul: (C*k*k, H_out*W_out), zero padding.
template <typename T>
Tensor<T> im2col(const Tensor<T>& x, const Conv2dGeom& g) {
    const Shape& s = x.shape();
    std::size_t C = s[0], H = s[1], W = s[2];
    std::size_t Ho = g.out_dim(H), Wo = g.out_dim(W);
    Tensor<T> patches(Shape{C * g.kernel * g.kernel, Ho * Wo});
    std::size_t row = 0;
    for (std::size_t c = 0; c < C; ++c) {
        for (std::size_t ki = 0; ki < g.kernel; ++ki) {
            for (std::size_t kj = 0; kj < g.kernel; ++kj, ++row) {
                T* dst = patches.data() + row * Ho * Wo;
                for (std::size_t oi = 0; oi < Ho; ++oi) {
                    std::ptrdiff_t ii = static_cast<std::ptrdiff_t>(oi * g.stride + ki) -
                                        static_cast<std::ptrdiff_t>(g.pad);
                    for (std::size_t oj = 0; oj < Wo; ++oj) {
                        std::ptrdiff_t jj = static_cast<std::ptrdiff_t>(oj * g.stride + kj) -
                                            static_cast<std::ptrdiff_t>(g.pad);
                        bool inside = ii >= 0 && ii < static_cast<std::ptrdiff_t>(H) &&
                                      jj >= 0 && jj < static_cast<std::ptrdiff_t>(W);
                        dst[oi * Wo + oj] =
                            inside ? x[(c * H + static_cast<std::size_t>(ii)) * W +
                                       static_cast<std::size_t>(jj)]
                                   : T{};
                    }
                }
            }
        }
    }
    return patches;
}

/// Standard convolution, weights (C_out, C_in, k, k) flattened row-major.
template <typename T>
Tensor<T> conv2d(const Tensor<T>& x, const Tensor<T>& w, const Conv2dGeom& g) {
    Shape out_shape = g.out_shape(x.shape());
    Tensor<T> patches = im2col(x, g);
    Tensor<T> wm = w.reshaped(Shape{g.out_channels, g.in_channels * g.kernel * g.kernel});
    Tensor<T> out = matmul(wm, patches);
    return out.reshaped(out_shape);
}

/// Depthwise convolution: channel c of the output depends only on channel c of
/// the input; weights (C, k, k).
template <typename T>
Tensor<T> depthwise_conv2d(const Tensor<T>& x, const Tensor<T>& w, const Conv2dGeom& g) {
    const Shape& s = x.shape();
    std::size_t C = s[0], H = s[1], W = s[2];
    std::size_t Ho = g.out_dim(H), Wo = g.out_dim(W);
    Tensor<T> out(Shape{C, Ho, Wo});
    Conv2dGeom single{1, 1, g.kernel, g.stride, g.pad, false};
    for (std::size_t c = 0; c < C; ++c) {
        Tensor<T> xc(Shape{1, H, W},
                     std::vector<T>(x.data() + c * H * W, x.data() + (c + 1) * H * W));
        Tensor<T> wc(Shape{1, 1, g.kernel, g.kernel},
                     std::vector<T>(w.data() + c * g.kernel * g.kernel,
                                    w.data() + (c + 1) * g.kernel * g.kernel));
        Tensor<T> oc = conv2d(xc, wc, single);
        std::copy(oc.data(), oc.data() + Ho * Wo, out.data() + c * Ho * Wo);
    }
    return out;
}

/// Sliding-window sum over each channel of a (C,H,W) tensor; the building
/// block of the Sign-fused maxpool (max of bits == Sign(window sum - 1)).
template <typename T>
Tensor<T> window_sum(const Tensor<T>& x, std::size_t window, std::size_t stride) {
    const Shape& s = x.shape();
    if (s.rank() != 3) throw RangeError("window_sum expects (C,H,W), got " + s.str());
    std::size_t C = s[0], H = s[1], W = s[2];
    if (H < window || W < window) throw RangeError("window larger than input");
    std::size_t Ho = (H - window) / stride + 1, Wo = (W - window) / stride + 1;
    Tensor<T> out(Shape{C, Ho, Wo});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t oi = 0; oi < Ho; ++oi)
            for (std::size_t oj = 0; oj < Wo; ++oj) {
                T acc{};
                for (std::size_t ki = 0; ki < window; ++ki)
                    for (std::size_t kj = 0; kj < window; ++kj)
                        acc += x[(c * H + oi * stride + ki) * W + oj * stride + kj];
                out[(c * Ho + oi) * Wo + oj] = acc;
            }
    return out;
}

// ---- fixed-point tensor encode/decode --------------------------------------------

inline RingTensor encode_tensor(const FixedPointCodec& codec, const RealTensor& x,
                                int scale) {
    const Ring& ring = codec.ring();
    double limit = std::ldexp(1.0, static_cast<int>(ring.bits()) - scale - 1);
    RingTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        double v = x[i];
        if (!(std::fabs(v) < limit))
            throw RangeError("fixed-point encode overflow at scale 2^" +
                             std::to_string(scale));
        out[i] = ring.from_signed(static_cast<std::int64_t>(std::llround(std::ldexp(v, scale))));
    }
    return out;
}

inline RingTensor encode_tensor(const FixedPointCodec& codec, const RealTensor& x) {
    return encode_tensor(codec, x, static_cast<int>(codec.frac_bits()));
}

inline RealTensor decode_tensor(const FixedPointCodec& codec, const RingTensor& x,
                                int scale) {
    RealTensor out(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) out[i] = codec.decode_at(x[i], scale);
    return out;
}

} // namespace cbnn
