#pragma once

#include <string>
#include <vector>

#include "cbnn/tensor.hpp"

namespace cbnn {

enum class LayerKind : std::uint8_t {
    Fc = 1,
    Conv = 2,
    DwConv = 3,
    PwConv = 4,
    BatchNorm = 5,
    Sign = 6,
    Relu = 7,
    MaxPool = 8,
    FusedSignMaxPool = 9,
    Flatten = 10,
    Truncate = 11,
    Output = 12,
};

const char* layer_kind_name(LayerKind k);

/// Frozen inference-time batch-normalization constants, per channel.
struct BnParams {
    RealTensor gamma;
    RealTensor beta;
    RealTensor mean;
    RealTensor var;
    double eps = 1e-5;

    std::size_t channels() const { return gamma.size(); }
};

struct Layer {
    LayerKind kind = LayerKind::Fc;
    std::string name;

    // Fc
    std::size_t in_features = 0;
    std::size_t out_features = 0;
    // Conv / DwConv / PwConv
    Conv2dGeom geom{};
    // Parameters in plaintext real form (pre-sharing)
    RealTensor weights;
    RealTensor bias;
    // BatchNorm
    BnParams bn;
    // MaxPool / FusedSignMaxPool
    std::size_t pool_window = 2;
    std::size_t pool_stride = 2;

    // Compiled annotations: power-of-two scale of input/output raw values.
    int in_scale = -1;
    int out_scale = -1;

    bool is_linear() const {
        return kind == LayerKind::Fc || kind == LayerKind::Conv ||
               kind == LayerKind::DwConv || kind == LayerKind::PwConv;
    }
    std::size_t weight_count() const { return weights.size(); }
    std::size_t param_count() const { return weights.size() + bias.size(); }
};

/// Ordered layer list plus the ring/codec configuration it was built for.
struct ModelGraph {
    unsigned ring_bits = 32;
    unsigned frac_bits = 13;
    unsigned msb_budget = 8;
    Shape input_shape;
    std::vector<Layer> layers;
    bool compiled = false;

    std::size_t param_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.param_count();
        return n;
    }
    std::size_t weight_count() const {
        std::size_t n = 0;
        for (const auto& l : layers) n += l.weight_count();
        return n;
    }
};

/// Output shape of one layer given its input shape; throws on inconsistency.
Shape layer_out_shape(const Layer& layer, const Shape& in);

/// Shape chain of the whole graph: result[i] is the output shape of layer i.
/// Validates geometry/parameter consistency end to end.
std::vector<Shape> infer_shapes(const ModelGraph& graph);

} // namespace cbnn
