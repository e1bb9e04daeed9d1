#include "cbnn/oracle.hpp"

#include <algorithm>
#include <cmath>

namespace cbnn {

namespace {

RealTensor maxpool_real(const RealTensor& x, std::size_t window, std::size_t stride) {
    const Shape& s = x.shape();
    std::size_t C = s[0], H = s[1], W = s[2];
    std::size_t Ho = (H - window) / stride + 1, Wo = (W - window) / stride + 1;
    RealTensor out(Shape{C, Ho, Wo});
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t oi = 0; oi < Ho; ++oi)
            for (std::size_t oj = 0; oj < Wo; ++oj) {
                double m = -std::numeric_limits<double>::infinity();
                for (std::size_t ki = 0; ki < window; ++ki)
                    for (std::size_t kj = 0; kj < window; ++kj)
                        m = std::max(m, x[(c * H + oi * stride + ki) * W + oj * stride + kj]);
                out[(c * Ho + oi) * Wo + oj] = m;
            }
    return out;
}

RealTensor linear_real(const Layer& l, const RealTensor& x) {
    if (l.kind == LayerKind::Fc) {
        RealTensor w = l.weights.reshaped(Shape{l.out_features, l.in_features});
        RealTensor xin = x.reshaped(Shape{l.in_features, 1});
        RealTensor z = matmul(w, xin).reshaped(Shape{l.out_features});
        for (std::size_t i = 0; i < z.size(); ++i) z[i] += l.bias[i];
        return z;
    }
    RealTensor z = l.kind == LayerKind::DwConv ? depthwise_conv2d(x, l.weights, l.geom)
                                               : conv2d(x, l.weights, l.geom);
    std::size_t hw = z.size() / l.geom.out_channels;
    for (std::size_t c = 0; c < l.geom.out_channels; ++c)
        for (std::size_t i = 0; i < hw; ++i) z[c * hw + i] += l.bias[c];
    return z;
}

} // namespace

RealTensor forward_real(const ModelGraph& graph, const RealTensor& x,
                        std::vector<RealTensor>* trace) {
    if (!(x.shape().count() == graph.input_shape.count()))
        throw RangeError("input has " + std::to_string(x.size()) + " elements, expected " +
                         graph.input_shape.str());
    RealTensor cur = x.reshaped(graph.input_shape);
    for (const Layer& l : graph.layers) {
        switch (l.kind) {
            case LayerKind::Fc:
            case LayerKind::Conv:
            case LayerKind::DwConv:
            case LayerKind::PwConv: cur = linear_real(l, cur); break;
            case LayerKind::BatchNorm: {
                std::size_t C = l.bn.channels();
                std::size_t hw = cur.size() / C;
                for (std::size_t c = 0; c < C; ++c) {
                    double gp = l.bn.gamma[c] / std::sqrt(l.bn.var[c] + l.bn.eps);
                    for (std::size_t i = 0; i < hw; ++i) {
                        double& v = cur[c * hw + i];
                        v = gp * (v - l.bn.mean[c]) + l.bn.beta[c];
                    }
                }
                break;
            }
            case LayerKind::Sign:
                for (auto& v : cur.values()) v = v >= 0.0 ? 1.0 : 0.0;
                break;
            case LayerKind::Relu:
                for (auto& v : cur.values()) v = std::max(v, 0.0);
                break;
            case LayerKind::MaxPool:
                cur = maxpool_real(cur, l.pool_window, l.pool_stride);
                break;
            case LayerKind::FusedSignMaxPool: {
                RealTensor sums = window_sum(cur, l.pool_window, l.pool_stride);
                for (auto& v : sums.values()) v = (v - 1.0 >= 0.0) ? 1.0 : 0.0;
                cur = std::move(sums);
                break;
            }
            case LayerKind::Flatten: cur = cur.reshaped(Shape{cur.size()}); break;
            case LayerKind::Truncate: break; // pure scale bookkeeping on reals
            case LayerKind::Output: break;
        }
        if (trace) trace->push_back(cur);
    }
    return cur;
}

EncodedLayerParams encode_layer_params(const Layer& layer, const FixedPointCodec& codec) {
    if (layer.out_scale < 0)
        throw ConfigError(layer.name + ": layer has no compiled scales");
    EncodedLayerParams p;
    p.weights = encode_tensor(codec, layer.weights, static_cast<int>(codec.frac_bits()));
    p.bias = encode_tensor(codec, layer.bias, layer.out_scale);
    return p;
}

RingTensor forward_fixed(const ModelGraph& graph, const RealTensor& x,
                         std::vector<RingTensor>* trace) {
    if (!graph.compiled)
        throw ConfigError("fixed-point forward requires a compiled graph");
    const Ring ring(graph.ring_bits);
    const FixedPointCodec codec(ring, graph.frac_bits);
    RingTensor cur = encode_tensor(codec, x.reshaped(graph.input_shape));
    for (const Layer& l : graph.layers) {
        switch (l.kind) {
            case LayerKind::Fc: {
                EncodedLayerParams p = encode_layer_params(l, codec);
                RingTensor w = p.weights.reshaped(Shape{l.out_features, l.in_features});
                RingTensor xin = cur.reshaped(Shape{l.in_features, 1});
                cur = matmul(ring, w, xin).reshaped(Shape{l.out_features});
                cur = add(ring, cur, p.bias);
                break;
            }
            case LayerKind::Conv:
            case LayerKind::PwConv:
            case LayerKind::DwConv: {
                EncodedLayerParams p = encode_layer_params(l, codec);
                RingTensor z = l.kind == LayerKind::DwConv
                                   ? depthwise_conv2d(cur, p.weights, l.geom)
                                   : conv2d(cur, p.weights, l.geom);
                for (auto& v : z.values()) v &= ring.mask();
                std::size_t hw = z.size() / l.geom.out_channels;
                for (std::size_t c = 0; c < l.geom.out_channels; ++c)
                    for (std::size_t i = 0; i < hw; ++i)
                        z[c * hw + i] = ring.add(z[c * hw + i], p.bias[c]);
                cur = std::move(z);
                break;
            }
            case LayerKind::Sign:
                for (auto& v : cur.values()) v = ring.msb(v) ? 0 : 1;
                break;
            case LayerKind::Relu:
                for (auto& v : cur.values()) v = ring.msb(v) ? 0 : v;
                break;
            case LayerKind::FusedSignMaxPool: {
                RingTensor sums = window_sum(cur, l.pool_window, l.pool_stride);
                for (auto& v : sums.values()) {
                    v = ring.sub(ring.reduce(v), 1);
                    v = ring.msb(v) ? 0 : 1;
                }
                cur = std::move(sums);
                break;
            }
            case LayerKind::Truncate:
                for (auto& v : cur.values()) v = ring.asr(v, graph.frac_bits);
                break;
            case LayerKind::Flatten: cur = cur.reshaped(Shape{cur.size()}); break;
            case LayerKind::Output: break;
            case LayerKind::MaxPool:
            case LayerKind::BatchNorm:
                throw ConfigError("fixed-point forward met an uncompiled layer");
        }
        if (trace) trace->push_back(cur);
    }
    return cur;
}

std::size_t argmax(const RealTensor& v) {
    return static_cast<std::size_t>(
        std::max_element(v.values().begin(), v.values().end()) - v.values().begin());
}

std::size_t argmax_signed(const Ring& ring, const RingTensor& v) {
    std::size_t best = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (ring.to_signed(v[i]) > ring.to_signed(v[best])) best = i;
    return best;
}

std::vector<double> softmax_t(const std::vector<double>& logits, double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("softmax temperature must be > 0");
    if (logits.empty()) throw ConfigError("softmax of an empty logit vector");
    double m = *std::max_element(logits.begin(), logits.end());
    std::vector<double> out(logits.size());
    double sum = 0.0;
    for (std::size_t i = 0; i < logits.size(); ++i) {
        out[i] = std::exp((logits[i] - m) / temperature);
        sum += out[i];
    }
    for (auto& v : out) v /= sum;
    return out;
}

double cross_entropy(const std::vector<double>& p, const std::vector<double>& q) {
    if (p.size() != q.size()) throw ConfigError("cross entropy needs equal lengths");
    double h = 0.0;
    for (std::size_t i = 0; i < p.size(); ++i) {
        if (p[i] == 0.0) continue;
        if (!(q[i] > 0.0))
            throw std::domain_error("cross entropy undefined: q = 0 where p > 0");
        h -= p[i] * std::log(q[i]);
    }
    return h;
}

double kd_loss(const std::vector<double>& student_logits,
               const std::vector<double>& teacher_logits, std::size_t hard_label,
               const DistillConfig& cfg) {
    cfg.validate();
    if (student_logits.size() != teacher_logits.size())
        throw ConfigError("kd loss needs matching class counts");
    if (hard_label >= student_logits.size()) throw ConfigError("hard label out of range");
    std::vector<double> q1 = softmax_t(student_logits, 1.0);
    double student = -std::log(q1[hard_label]);
    std::vector<double> qt = softmax_t(student_logits, cfg.temperature);
    std::vector<double> pt = softmax_t(teacher_logits, cfg.temperature);
    return cfg.lambda * student + (1.0 - cfg.lambda) * cross_entropy(pt, qt);
}

} // namespace cbnn
