#pragma once

#include "cbnn/shares.hpp"

namespace cbnn {

enum class LinearKind { Fc, Conv, DwConv, PwConv };

/// One linear layer's shared parameters. Weight layout: FC (out,in); Conv and
/// PwConv (C_out, C_in, k, k); DwConv (C, k, k). Bias length equals the output
/// features/channels and is stored at the layer's output scale.
struct LinearParams {
    LinearKind kind = LinearKind::Fc;
    Conv2dGeom geom{};
    RssShare w;
    RssShare b;
};

/// Secure linear layer inference: each party combines the three local
/// cross-products W_i*X_i + W_{i+1}*X_i + W_i*X_{i+1}, adds its bias component
/// and a zero-sharing mask, and reshares to its predecessor. Exactly one round;
/// the result is bit-exact ring arithmetic (products live at the sum of the
/// operand scales).
RssShare linear_infer(PartyCtx& ctx, const LinearParams& params, const RssShare& x);

/// Separable convolution: the linear protocol twice, depthwise then pointwise.
RssShare separable_conv_infer(PartyCtx& ctx, const LinearParams& dw,
                              const LinearParams& pw, const RssShare& x);

/// Probabilistic fixed-point truncation (two rounds). P1 deals a masked pair
/// (r, r >> f) with r uniform in [0, 2^(l-2)); the parties open v = x + r to
/// P0 and P2 only, and the result is (v >> f) - [r >> f]. The error against
/// floor(x / 2^f) is 0 or +1 ulp provided |x| < 2^(l-2); out-of-range inputs
/// produce large errors.
RssShare truncate(PartyCtx& ctx, const RssShare& x, unsigned frac_bits);

/// Output shape of one linear layer for a given input shape.
Shape linear_out_shape(const LinearParams& params, const Shape& in);

} // namespace cbnn
