#pragma once

#include <array>
#include <cstdint>

#include "cbnn/model.hpp"

namespace cbnn {

/// Per-channel Sign threshold t = beta'/gamma' of the BN/Sign fusion:
/// Sign(gamma'*x + beta') == Sign(x + t) because gamma' is positive.
/// Channels with gamma <= 0 would flip the comparison and are rejected.
RealTensor bn_sign_threshold(const BnParams& bn);

/// Folds BN into the preceding linear layer: W *= gamma', b = beta + (b - mean)*gamma'.
void fuse_bn_into_linear(Layer& linear, const BnParams& bn);

/// Replaces standard convolutions with at least min_channels input channels by
/// a depthwise + pointwise pair of matching geometry (identity-flavored
/// initialization; parameters are retrained or imported afterwards).
/// Returns the number of substituted layers.
std::size_t substitute_separable(ModelGraph& graph, std::size_t min_channels = 16);

/// Weight counts of a k x k convolution in standard and separable form.
struct SeparableCounts {
    std::size_t standard;
    std::size_t separable;
};
SeparableCounts separable_weight_counts(std::size_t c_in, std::size_t c_out, std::size_t k);

/// Analytic communication cost of one compiled layer: protocol rounds and
/// payload bytes sent per party, matched against measured TrafficStats.
struct LayerCost {
    std::size_t layer_index = 0;
    std::string phase;
    std::uint64_t rounds = 0;
    std::array<std::uint64_t, 3> bytes{};
};

struct CompileOptions {
    double input_bound = 1.0; // inputs assumed within [-input_bound, input_bound]
};

/// A validated, MPC-executable plan: BN fused away, Sign-led maxpools fused,
/// truncations placed, scales annotated, ranges proven, costs precomputed.
struct CompiledModel {
    ModelGraph graph;
    std::vector<LayerCost> layer_costs;
    std::vector<double> bounds; // decoded worst-case magnitude per layer output
    std::uint64_t setup_rounds = 3; // skeleton broadcast, parameter deal, input deal
    std::array<std::uint64_t, 3> setup_param_bytes{}; // deal payloads per party

    std::uint64_t protocol_rounds() const {
        std::uint64_t r = 0;
        for (const auto& c : layer_costs) r += c.rounds;
        return r;
    }
    std::uint64_t total_rounds() const { return setup_rounds + protocol_rounds(); }
    std::array<std::uint64_t, 3> total_bytes(std::uint64_t skeleton_bytes) const {
        std::array<std::uint64_t, 3> b = setup_param_bytes;
        b[1] += 2 * skeleton_bytes; // P1 broadcasts the plan skeleton to P0 and P2
        for (const auto& c : layer_costs)
            for (int p = 0; p < 3; ++p) b[p] += c.bytes[p];
        return b;
    }
};

/// Rewrites and annotates a model for secure execution. Throws RangeError when
/// the worst-case interval analysis cannot prove an MSB input fits the
/// |x| < 2^(l-1-d) budget (naming the offending layer) and ConfigError on
/// structurally un-runnable graphs (BN without a preceding linear layer,
/// MaxPool not preceded by Sign). Compiling a compiled model is the identity.
CompiledModel compile(const ModelGraph& graph, const CompileOptions& options = {});

} // namespace cbnn
