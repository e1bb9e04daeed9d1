#include "cbnn/model.hpp"

namespace cbnn {

const char* layer_kind_name(LayerKind k) {
    switch (k) {
        case LayerKind::Fc: return "fc";
        case LayerKind::Conv: return "conv";
        case LayerKind::DwConv: return "dwconv";
        case LayerKind::PwConv: return "pwconv";
        case LayerKind::BatchNorm: return "batchnorm";
        case LayerKind::Sign: return "sign";
        case LayerKind::Relu: return "relu";
        case LayerKind::MaxPool: return "maxpool";
        case LayerKind::FusedSignMaxPool: return "fused_sign_maxpool";
        case LayerKind::Flatten: return "flatten";
        case LayerKind::Truncate: return "truncate";
        case LayerKind::Output: return "output";
    }
    return "?";
}

namespace {
void expect_channels(const Layer& l, const Shape& in, std::size_t channels) {
    if (in.rank() < 1) throw RangeError(l.name + ": missing input shape");
    std::size_t c = in.rank() == 3 ? in[0] : in.count();
    if (c != channels)
        throw RangeError(l.name + ": expected " + std::to_string(channels) +
                         " channels, got " + in.str());
}
} // namespace

Shape layer_out_shape(const Layer& layer, const Shape& in) {
    switch (layer.kind) {
        case LayerKind::Fc: {
            if (in.count() != layer.in_features)
                throw RangeError(layer.name + ": fc expects " +
                                 std::to_string(layer.in_features) + " features, got " +
                                 in.str());
            // parameter payloads are absent in plan skeletons; validate when present
            if (!layer.weights.empty() &&
                (layer.weights.size() != layer.in_features * layer.out_features ||
                 layer.bias.size() != layer.out_features))
                throw RangeError(layer.name + ": fc parameter sizes inconsistent");
            return Shape{layer.out_features};
        }
        case LayerKind::Conv:
        case LayerKind::PwConv: {
            Shape out = layer.geom.out_shape(in);
            std::size_t expect = layer.geom.out_channels * layer.geom.in_channels *
                                 layer.geom.kernel * layer.geom.kernel;
            if (!layer.weights.empty() &&
                (layer.weights.size() != expect || layer.bias.size() != layer.geom.out_channels))
                throw RangeError(layer.name + ": conv parameter sizes inconsistent");
            return out;
        }
        case LayerKind::DwConv: {
            if (!layer.geom.depthwise || layer.geom.out_channels != layer.geom.in_channels)
                throw RangeError(layer.name + ": depthwise geometry inconsistent");
            Shape out = layer.geom.out_shape(in);
            std::size_t expect =
                layer.geom.in_channels * layer.geom.kernel * layer.geom.kernel;
            if (!layer.weights.empty() &&
                (layer.weights.size() != expect || layer.bias.size() != layer.geom.out_channels))
                throw RangeError(layer.name + ": depthwise parameter sizes inconsistent");
            return out;
        }
        case LayerKind::BatchNorm: {
            expect_channels(layer, in, layer.bn.channels());
            if (layer.bn.beta.size() != layer.bn.channels() ||
                layer.bn.mean.size() != layer.bn.channels() ||
                layer.bn.var.size() != layer.bn.channels())
                throw RangeError(layer.name + ": batchnorm parameter sizes inconsistent");
            return in;
        }
        case LayerKind::Sign:
        case LayerKind::Relu:
        case LayerKind::Truncate: return in;
        case LayerKind::MaxPool:
        case LayerKind::FusedSignMaxPool: {
            if (in.rank() != 3)
                throw RangeError(layer.name + ": pooling expects (C,H,W), got " + in.str());
            if (in[1] < layer.pool_window || in[2] < layer.pool_window)
                throw RangeError(layer.name + ": pool window larger than input");
            std::size_t ho = (in[1] - layer.pool_window) / layer.pool_stride + 1;
            std::size_t wo = (in[2] - layer.pool_window) / layer.pool_stride + 1;
            return Shape{in[0], ho, wo};
        }
        case LayerKind::Flatten: return Shape{in.count()};
        case LayerKind::Output: return in;
    }
    throw RangeError("unknown layer kind");
}

std::vector<Shape> infer_shapes(const ModelGraph& graph) {
    if (graph.layers.empty()) throw RangeError("model has no layers");
    if (graph.input_shape.rank() == 0) throw RangeError("model has no input shape");
    std::vector<Shape> out;
    out.reserve(graph.layers.size());
    Shape cur = graph.input_shape;
    for (const auto& l : graph.layers) {
        cur = layer_out_shape(l, cur);
        out.push_back(cur);
    }
    return out;
}

} // namespace cbnn
