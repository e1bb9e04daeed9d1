#pragma once

#include <array>
#include <functional>
#include <optional>

#include "cbnn/party.hpp"
#include "cbnn/tensor.hpp"

namespace cbnn {

/// 2-out-of-3 replicated arithmetic share: P_i holds the additive components
/// (x_i, x_{i+1}) of x = x_0 + x_1 + x_2 mod 2^l.
struct RssShare {
    PartyId party{};
    RingTensor s0; // component index party
    RingTensor s1; // component index party+1

    const Shape& shape() const { return s0.shape(); }
    std::size_t size() const { return s0.size(); }
};

/// Same replication structure modulo 2: x = x_0 ^ x_1 ^ x_2.
struct BitShare {
    PartyId party{};
    BitTensor s0;
    BitTensor s1;

    const Shape& shape() const { return s0.shape(); }
    std::size_t size() const { return s0.size(); }
};

// ---- dealing and reconstruction (local; used by tests and the dealer) ------------

/// Splits x into three consistent replicated shares. rng supplies the two free
/// components; an all-zero rng yields all-zero randomness (share(0) -> 0).
std::array<RssShare, 3> share_secret(const Ring& ring, const RingTensor& x,
                                     const std::function<ring_t()>& rng);

std::array<BitShare, 3> share_bits(const BitTensor& x,
                                   const std::function<ring_t()>& rng);

/// Rebuilds x from any two parties' shares; throws DesyncError when the
/// overlapping replicated component disagrees.
RingTensor reconstruct(const Ring& ring, const RssShare& a, const RssShare& b);
BitTensor reconstruct_bits(const BitShare& a, const BitShare& b);

// ---- local share algebra ----------------------------------------------------------

RssShare add_shares(const Ring& ring, const RssShare& x, const RssShare& y);
RssShare sub_shares(const Ring& ring, const RssShare& x, const RssShare& y);
RssShare neg_share(const Ring& ring, const RssShare& x);

/// x + c for a public constant tensor c: the parties holding component 0
/// (P0 and P2 hold its two replicas) add c to that component.
RssShare add_const(const Ring& ring, const RssShare& x, const RingTensor& c);
RssShare add_const(const Ring& ring, const RssShare& x, ring_t c);

/// x * c for a public scalar (both components scale).
RssShare scale_share(const Ring& ring, const RssShare& x, ring_t c);

BitShare xor_bitshares(const BitShare& x, const BitShare& y);
/// b ^ c for a public bit tensor c, applied to component 0 at its holders.
BitShare xor_const_bits(const BitShare& x, const BitTensor& c);

// ---- communicating primitives -----------------------------------------------------

/// z = x*y elementwise. One round: each party sends its masked additive
/// component z_i to its predecessor (one l-bit word per element).
RssShare mul_shares(PartyCtx& ctx, const RssShare& x, const RssShare& y);

/// AND over Z_2 via the multiplication protocol modulo 2 (one round, packed bits).
BitShare and_bitshares(PartyCtx& ctx, const BitShare& x, const BitShare& y);

/// Opens x to every party (each sends its second component to its predecessor).
RingTensor open_to_all(PartyCtx& ctx, const RssShare& x);

/// Opens the product x*y to every party in a single broadcast round: parties
/// exchange zero-masked 3-of-3 components of the product instead of resharing
/// first. Used by MSB extraction, where the product itself is the public value.
RingTensor open_product(PartyCtx& ctx, const RssShare& x, const RssShare& y);

/// Reveals x to one party only; the two others send their copy of the missing
/// component and the target cross-checks them.
std::optional<RingTensor> reveal_to(PartyCtx& ctx, const RssShare& x, PartyId target);

/// Dealer-based input sharing: the dealer holds x, derives two components from
/// its private randomness and hands each party its replicated pair. One round.
RssShare deal_input(PartyCtx& ctx, PartyId dealer, const RingTensor* x, const Shape& shape);

/// Correlated randomness as shares ------------------------------------------------

/// 2-of-3 RSS of an unknown uniform ring value (no communication).
RssShare rand_rss_2of3(PartyCtx& ctx, const Shape& shape);

/// 2-of-3 XOR shares of an unknown uniform bit (no communication).
BitShare rand_bit_2of3(PartyCtx& ctx, const Shape& shape);

/// 3-of-3 additive sharing of zero (no communication).
RingTensor zero_randomness_3of3(PartyCtx& ctx, const Shape& shape);

} // namespace cbnn
