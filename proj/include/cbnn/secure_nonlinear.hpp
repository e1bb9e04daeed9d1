#pragma once

#include "cbnn/ot3.hpp"
#include "cbnn/shares.hpp"

namespace cbnn {

/// Binary-to-arithmetic share conversion. One 3-party OT (two rounds): the
/// model owner P1 builds the message pair m_i = (i ^ x1 ^ x2) - a1 - a2 from
/// pairwise masks, the data owner P0 selects with its replicated bit and
/// forwards its result to the helper so all three hold a consistent RSS of the
/// bit as a value in {0,1} of the ring.
RssShare b2a_convert(PartyCtx& ctx, const BitShare& x);

/// MSB extraction. Samples a shared private bit beta and a small shared
/// positive mask r, converts beta to arithmetic form, computes and opens
/// u = (1-2*beta) * (2x+1) * r, and returns bit shares of msb(u) ^ beta.
/// Multiplying 2x+1 instead of x keeps the masked product nonzero, so the
/// opened sign is well defined for every in-budget input including x = 0.
/// Requires |signed(x)| < 2^(l-1-d); four rounds (OT legs, reshare, opening).
BitShare msb_extract(PartyCtx& ctx, const RssShare& x);

/// Secure Sign activation on a previously extracted MSB: shares of
/// 1 ^ msb(x) in {0,1} of the ring. One OT (two rounds) plus a forwarded
/// replica that overlaps the next protocol round.
RssShare secure_sign(PartyCtx& ctx, const BitShare& msb);

/// Secure ReLU: shares of (1 ^ msb(x)) * x, exact (the {0,1} factor does not
/// change scale). Two OTs with P0/P2 exchanging sender and receiver roles plus
/// one reshare round: five rounds after the MSB extraction.
RssShare secure_relu(PartyCtx& ctx, const RssShare& x, const BitShare& msb);

/// Sign-fused maxpool over {0,1} activations: the max of a window is
/// Sign(window sum - 1), so pooling costs one local sum and one Sign instead
/// of secure comparisons. Window/stride default to 2x2/2.
RssShare fused_sign_maxpool(PartyCtx& ctx, const RssShare& acts, std::size_t window = 2,
                            std::size_t stride = 2);

/// Analytic round counts of the nonlinear protocols, asserted against measured
/// traffic in the tests and used by the compiler's cost model.
namespace rounds {
inline constexpr std::uint64_t kOt = 2;
inline constexpr std::uint64_t kB2a = kOt;
inline constexpr std::uint64_t kMul = 1;
inline constexpr std::uint64_t kOpen = 1;
inline constexpr std::uint64_t kMsb = kB2a + kMul + kOpen; // 4
inline constexpr std::uint64_t kSign = kOt;                // +2
inline constexpr std::uint64_t kRelu = 2 * kOt + 1;        // +5
inline constexpr std::uint64_t kTrunc = 2;
inline constexpr std::uint64_t kLinear = 1;
inline constexpr std::uint64_t kMaxpool = kMsb + kSign;
inline constexpr std::uint64_t kReveal = 1;
} // namespace rounds

} // namespace cbnn
