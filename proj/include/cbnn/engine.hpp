#pragma once

#include <optional>

#include "cbnn/compiler.hpp"
#include "cbnn/oracle.hpp"
#include "cbnn/shares.hpp"

namespace cbnn {

struct InferOptions {
    /// Reconstruct the output at every party instead of only the data owner.
    bool reveal_all = false;
};

struct InferResult {
    std::optional<RingTensor> output; // raw ring logits where revealed
    Shape output_shape;
    int output_scale = 0;
};

/// The SPMD secure-inference program. The model owner P1 passes the compiled
/// plan, the data owner P0 the plaintext input; P2 contributes only
/// randomness. Setup broadcasts the parameter-free plan skeleton and deals the
/// encoded parameters and input; then every layer runs its protocol in order
/// and the output is revealed to P0 (or to all parties).
InferResult secure_infer(PartyCtx& ctx, const CompiledModel* model, const RealTensor* input,
                         const InferOptions& opts = {});

/// In-process three-party execution of secure_infer with a fresh seed setup.
struct SimulationResult {
    RingTensor output_raw;
    RealTensor output;
    std::size_t argmax_index = 0;
    int output_scale = 0;
    TrafficStats stats;
};

SimulationResult simulate_inference(const CompiledModel& model, const RealTensor& input,
                                    std::uint64_t seed, const InferOptions& opts = {},
                                    double inject_latency_ms = 0.0,
                                    const std::function<void(PartyCtx&)>& setup_hook = {});

/// Checks measured traffic against the compiled analytic cost model (rounds
/// and bytes per party, per layer phase plus setup). Returns an empty string
/// on a full match, else a description of the first mismatch.
std::string cost_model_mismatch(const CompiledModel& model, const TrafficStats& stats,
                                const InferOptions& opts = {});

} // namespace cbnn
