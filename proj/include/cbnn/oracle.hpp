#pragma once

#include <vector>

#include "cbnn/model.hpp"

namespace cbnn {

// ---- reference forward passes -----------------------------------------------------

/// Exact real-arithmetic forward pass. Handles uncompiled graphs (BatchNorm,
/// plain MaxPool) as well as compiled ones (Truncate is a no-op on reals).
/// Sign maps non-negative values to 1, negative to 0.
RealTensor forward_real(const ModelGraph& graph, const RealTensor& x,
                        std::vector<RealTensor>* trace = nullptr);

/// Deterministic fixed-point mirror of the secure pipeline: identical
/// encoding, wrapping ring arithmetic, shift truncation and {0,1} Sign. The
/// ground truth for every protocol test; requires a compiled graph.
RingTensor forward_fixed(const ModelGraph& graph, const RealTensor& x,
                         std::vector<RingTensor>* trace = nullptr);

/// Ring encoding of one layer's parameters at the compiled scales: weights at
/// 2^f, bias at the layer's output scale. Shared by the oracle and the secure
/// engine so both sides operate on bit-identical values.
struct EncodedLayerParams {
    RingTensor weights;
    RingTensor bias;
};
EncodedLayerParams encode_layer_params(const Layer& layer, const FixedPointCodec& codec);

std::size_t argmax(const RealTensor& v);
std::size_t argmax_signed(const Ring& ring, const RingTensor& v);

// ---- knowledge-distillation losses ------------------------------------------------

struct DistillConfig {
    double temperature = 10.0; // T > 0
    double lambda = 0.1;       // weight of the hard-label student loss, in [0,1]

    void validate() const {
        if (!(temperature > 0.0)) throw ConfigError("distillation temperature must be > 0");
        if (lambda < 0.0 || lambda > 1.0) throw ConfigError("lambda must lie in [0,1]");
    }
};

/// softmax(z/T), log-sum-exp stabilized; entries sum to 1.
std::vector<double> softmax_t(const std::vector<double>& logits, double temperature);

/// H(p,q) = -sum p_i log q_i; domain error when q_i = 0 meets p_i > 0.
double cross_entropy(const std::vector<double>& p, const std::vector<double>& q);

/// The combined loss: lambda * (-log q_class at T=1) + (1-lambda) * H(p^T, q^T)
/// with the teacher's softened distribution as the target.
double kd_loss(const std::vector<double>& student_logits,
               const std::vector<double>& teacher_logits, std::size_t hard_label,
               const DistillConfig& cfg);

} // namespace cbnn
