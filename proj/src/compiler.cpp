#include "cbnn/compiler.hpp"

#include <cmath>
#include <cstdio>

namespace cbnn {

RealTensor bn_sign_threshold(const BnParams& bn) {
    std::size_t C = bn.channels();
    RealTensor t(Shape{C});
    for (std::size_t c = 0; c < C; ++c) {
        if (!(bn.gamma[c] > 0.0))
            throw RangeError("bn/sign fusion requires gamma > 0, violated at channel " +
                             std::to_string(c));
        double gp = bn.gamma[c] / std::sqrt(bn.var[c] + bn.eps);
        double bp = bn.beta[c] - gp * bn.mean[c];
        t[c] = bp / gp;
    }
    return t;
}

void fuse_bn_into_linear(Layer& linear, const BnParams& bn) {
    if (!linear.is_linear()) throw ConfigError("bn fusion target is not a linear layer");
    std::size_t C = bn.channels();
    std::size_t rows =
        linear.kind == LayerKind::Fc ? linear.out_features : linear.geom.out_channels;
    if (rows != C || linear.bias.size() != C)
        throw RangeError("bn fusion: channel count mismatch (" + std::to_string(rows) +
                         " vs " + std::to_string(C) + ")");
    std::size_t row_len = linear.weights.size() / rows;
    for (std::size_t c = 0; c < C; ++c) {
        double gp = bn.gamma[c] / std::sqrt(bn.var[c] + bn.eps);
        for (std::size_t j = 0; j < row_len; ++j) linear.weights[c * row_len + j] *= gp;
        linear.bias[c] = bn.beta[c] + (linear.bias[c] - bn.mean[c]) * gp;
    }
}

SeparableCounts separable_weight_counts(std::size_t c_in, std::size_t c_out, std::size_t k) {
    return {c_in * c_out * k * k, c_in * k * k + c_in * c_out};
}

std::size_t substitute_separable(ModelGraph& graph, std::size_t min_channels) {
    std::vector<Layer> out;
    std::size_t substituted = 0;
    for (const auto& l : graph.layers) {
        if (l.kind != LayerKind::Conv || l.geom.in_channels < min_channels) {
            out.push_back(l);
            continue;
        }
        const Conv2dGeom& g = l.geom;
        Layer dw;
        dw.kind = LayerKind::DwConv;
        dw.name = l.name + "_dw";
        dw.geom = Conv2dGeom{g.in_channels, g.in_channels, g.kernel, g.stride, g.pad, true};
        dw.weights = RealTensor(Shape{g.in_channels, g.kernel, g.kernel});
        for (std::size_t c = 0; c < g.in_channels; ++c)
            dw.weights[c * g.kernel * g.kernel + (g.kernel / 2) * g.kernel + g.kernel / 2] =
                1.0; // centre tap
        dw.bias = RealTensor(Shape{g.in_channels});

        Layer pw;
        pw.kind = LayerKind::PwConv;
        pw.name = l.name + "_pw";
        pw.geom = Conv2dGeom{g.in_channels, g.out_channels, 1, 1, 0};
        pw.weights = RealTensor(Shape{g.out_channels, g.in_channels, 1, 1});
        for (std::size_t co = 0; co < g.out_channels; ++co)
            pw.weights[co * g.in_channels + (co % g.in_channels)] = 1.0;
        pw.bias = l.bias; // keep the original bias on the pointwise stage

        out.push_back(std::move(dw));
        out.push_back(std::move(pw));
        ++substituted;
    }
    graph.layers = std::move(out);
    return substituted;
}

namespace {

/// Worst-case output magnitude of a linear layer under |input| <= bound,
/// per-channel: max_c ( sum_j |W_cj| * bound + |b_c| ).
double linear_bound(const Layer& l, double in_bound) {
    std::size_t rows = l.kind == LayerKind::Fc ? l.out_features : l.geom.out_channels;
    std::size_t row_len = l.weights.size() / rows;
    double worst = 0.0;
    for (std::size_t c = 0; c < rows; ++c) {
        double s = 0.0;
        for (std::size_t j = 0; j < row_len; ++j) s += std::fabs(l.weights[c * row_len + j]);
        // depthwise rows see only their own channel, standard rows the whole input
        worst = std::max(worst, s * in_bound + std::fabs(l.bias[c]));
    }
    return worst;
}

LayerKind next_effective_kind(const std::vector<Layer>& layers, std::size_t i) {
    for (std::size_t j = i + 1; j < layers.size(); ++j)
        if (layers[j].kind != LayerKind::Flatten) return layers[j].kind;
    return LayerKind::Output;
}

} // namespace

CompiledModel compile(const ModelGraph& graph, const CompileOptions& options) {
    const Ring ring(graph.ring_bits);
    const unsigned f = graph.frac_bits;
    const unsigned d = graph.msb_budget;
    const double msb_limit = std::ldexp(1.0, static_cast<int>(graph.ring_bits - 1 - d));
    const double trunc_limit = std::ldexp(1.0, static_cast<int>(graph.ring_bits - 2));
    const double repr_limit = std::ldexp(1.0, static_cast<int>(graph.ring_bits - 1));

    ModelGraph g;
    g.ring_bits = graph.ring_bits;
    g.frac_bits = graph.frac_bits;
    g.msb_budget = graph.msb_budget;
    g.input_shape = graph.input_shape;

    if (graph.compiled) {
        g = graph; // rewrites are idempotent; a compiled plan passes through
    } else {
        // Pass 1: fold every BatchNorm into its preceding linear layer. A BN
        // feeding Sign only shifts the comparison threshold (added to the
        // bias); any other successor takes the full affine fold.
        std::vector<Layer> fused;
        for (std::size_t i = 0; i < graph.layers.size(); ++i) {
            const Layer& l = graph.layers[i];
            if (l.kind != LayerKind::BatchNorm) {
                fused.push_back(l);
                continue;
            }
            if (fused.empty() || !fused.back().is_linear())
                throw ConfigError(l.name + ": batchnorm must follow a linear layer");
            Layer& prev = fused.back();
            bool sign_next = i + 1 < graph.layers.size() &&
                             graph.layers[i + 1].kind == LayerKind::Sign;
            if (sign_next) {
                RealTensor t = bn_sign_threshold(l.bn);
                if (t.size() != prev.bias.size())
                    throw RangeError(l.name + ": threshold channel mismatch");
                for (std::size_t c = 0; c < t.size(); ++c) prev.bias[c] += t[c];
            } else {
                fuse_bn_into_linear(prev, l.bn);
            }
        }

        // Pass 2: a MaxPool over Sign activations becomes the fused kernel;
        // any other MaxPool has no secure realization in this engine.
        for (std::size_t i = 0; i < fused.size(); ++i) {
            if (fused[i].kind != LayerKind::MaxPool) continue;
            if (i == 0 || fused[i - 1].kind != LayerKind::Sign)
                throw ConfigError(fused[i].name +
                                  ": maxpool must be preceded by Sign to compile");
            fused[i].kind = LayerKind::FusedSignMaxPool;
        }

        g.layers = std::move(fused);
    }

    // Pass 3: scale tracking, truncation placement and range analysis.
    std::vector<Layer> placed;
    std::vector<double> bounds;
    int scale = static_cast<int>(f);
    double bound = options.input_bound;

    auto raw = [&](double b, int s) { return std::ldexp(b, s); };
    auto push_trunc = [&](const std::string& after) {
        if (raw(bound, scale) >= trunc_limit)
            throw RangeError(after + ": truncation input exceeds 2^(l-2), bound " +
                             std::to_string(raw(bound, scale)));
        Layer t;
        t.kind = LayerKind::Truncate;
        t.name = after + "_trunc";
        t.in_scale = scale;
        scale -= static_cast<int>(f);
        t.out_scale = scale;
        bound += std::ldexp(1.0, -scale); // one ulp of probabilistic error
        placed.push_back(std::move(t));
        bounds.push_back(bound);
    };
    auto check_msb = [&](const Layer& l, double b, int s) {
        if (raw(b, s) >= msb_limit)
            throw RangeError(std::string(l.name.empty() ? layer_kind_name(l.kind) : l.name) +
                             ": msb input bound " + std::to_string(raw(b, s)) +
                             " exceeds the 2^(l-1-d) budget; lower d, rescale weights or "
                             "normalize inputs");
    };

    const std::vector<Layer>& src = g.layers;
    for (std::size_t i = 0; i < src.size(); ++i) {
        Layer l = src[i];
        if (l.kind == LayerKind::Truncate && !graph.compiled) {
            // explicit truncation in an uncompiled graph: honour it
            push_trunc(l.name.empty() ? "explicit" : l.name);
            continue;
        }
        l.in_scale = scale;
        switch (l.kind) {
            case LayerKind::Fc:
            case LayerKind::Conv:
            case LayerKind::DwConv:
            case LayerKind::PwConv: {
                bound = linear_bound(l, bound);
                scale += static_cast<int>(f);
                l.out_scale = scale;
                placed.push_back(l);
                bounds.push_back(bound);
                if (raw(bound, scale) >= repr_limit)
                    throw RangeError(l.name + ": output bound " +
                                     std::to_string(raw(bound, scale)) +
                                     " is not representable in the ring");
                if (scale == 2 * static_cast<int>(f) && !graph.compiled) {
                    LayerKind nk = next_effective_kind(src, i);
                    bool feeds_sign = nk == LayerKind::Sign;
                    bool feeds_consumer = nk == LayerKind::Relu || nk == LayerKind::Fc ||
                                          nk == LayerKind::Conv || nk == LayerKind::DwConv ||
                                          nk == LayerKind::PwConv;
                    // Truncation is skipped before Sign (scale does not change
                    // the sign bit) unless the MSB budget needs the headroom.
                    if (feeds_consumer || (feeds_sign && raw(bound, scale) >= msb_limit))
                        push_trunc(l.name);
                }
                break;
            }
            case LayerKind::Truncate: { // compiled graph path
                l.out_scale = scale - static_cast<int>(f);
                scale = l.out_scale;
                bound += std::ldexp(1.0, -scale);
                placed.push_back(l);
                bounds.push_back(bound);
                break;
            }
            case LayerKind::Sign: {
                check_msb(l, bound, scale);
                scale = 0;
                bound = 1.0;
                l.out_scale = scale;
                placed.push_back(l);
                bounds.push_back(bound);
                break;
            }
            case LayerKind::Relu: {
                check_msb(l, bound, scale);
                l.out_scale = scale;
                placed.push_back(l);
                bounds.push_back(bound);
                break;
            }
            case LayerKind::FusedSignMaxPool: {
                double sum_bound =
                    static_cast<double>(l.pool_window * l.pool_window) * bound + 1.0;
                check_msb(l, sum_bound, scale);
                scale = 0;
                bound = 1.0;
                l.out_scale = scale;
                placed.push_back(l);
                bounds.push_back(bound);
                break;
            }
            case LayerKind::Flatten:
            case LayerKind::Output: {
                l.out_scale = scale;
                placed.push_back(l);
                bounds.push_back(bound);
                break;
            }
            case LayerKind::MaxPool:
            case LayerKind::BatchNorm:
                throw ConfigError("internal: unfused layer survived compilation");
        }
    }

    CompiledModel out;
    out.graph = std::move(g);
    out.graph.layers = std::move(placed);
    out.graph.compiled = true;
    out.bounds = std::move(bounds);

    // Pass 4: shape validation plus the analytic round/byte model.
    std::vector<Shape> shapes = infer_shapes(out.graph);
    const std::uint64_t wb = graph.ring_bits / 8;
    char buf[16];
    for (std::size_t i = 0; i < out.graph.layers.size(); ++i) {
        const Layer& l = out.graph.layers[i];
        std::uint64_t n = shapes[i].count();
        std::snprintf(buf, sizeof(buf), "L%03zu:", i);
        LayerCost c;
        c.layer_index = i;
        c.phase = buf + std::string(layer_kind_name(l.kind));
        switch (l.kind) {
            case LayerKind::Fc:
            case LayerKind::Conv:
            case LayerKind::DwConv:
            case LayerKind::PwConv:
                c.rounds = 1;
                c.bytes = {n * wb, n * wb, n * wb};
                break;
            case LayerKind::Truncate:
                c.rounds = 2;
                c.bytes = {n * wb, 4 * n * wb, n * wb};
                break;
            case LayerKind::Sign:
                c.rounds = 6; // msb (2 OT legs + reshare + opening) + sign OT
                c.bytes = {5 * n * wb, 7 * n * wb, 5 * n * wb};
                break;
            case LayerKind::Relu:
                c.rounds = 9; // msb + two OTs + reshare
                c.bytes = {7 * n * wb, 9 * n * wb, 6 * n * wb};
                break;
            case LayerKind::FusedSignMaxPool:
                c.rounds = 6;
                c.bytes = {5 * n * wb, 7 * n * wb, 5 * n * wb};
                break;
            case LayerKind::Output:
                c.rounds = 1; // reveal to the data owner
                c.bytes = {0, n * wb, n * wb};
                break;
            default: break; // flatten: free
        }
        out.layer_costs.push_back(std::move(c));
    }

    // Setup: P1 deals every parameter tensor (two components to each of two
    // parties), P0 deals the encoded input the same way.
    std::uint64_t param_words = 0;
    for (const auto& l : out.graph.layers)
        if (l.is_linear()) param_words += l.weights.size() + l.bias.size();
    out.setup_param_bytes = {4 * out.graph.input_shape.count() * wb, 4 * param_words * wb, 0};
    out.setup_rounds = 3;
    return out;
}

} // namespace cbnn
