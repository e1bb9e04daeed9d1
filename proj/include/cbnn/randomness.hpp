#pragma once

#include <array>
#include <cstdint>
#include <utility>

#include "cbnn/party_id.hpp"
#include "cbnn/prf.hpp"
#include "cbnn/tensor.hpp"

namespace cbnn {

/// Kind-tagged PRF streams. Each kind owns its own counter so no block is ever
/// reused across protocols.
enum class RandKind : std::uint8_t {
    Zero3 = 1,      // 3-out-of-3 additive sharing of zero
    Rand2 = 2,      // 2-out-of-3 RSS of an unknown uniform value
    RandBit = 3,    // 2-out-of-3 XOR shares of an unknown bit
    BitZero3 = 4,   // XOR sharing of zero (bit re-sharing masks)
    MsbMaskR = 5,   // bounded components of the multiplicative MSB mask r
    OtMask = 6,     // sender/receiver common OT pad
    B2aMask = 7,    // arithmetic masks inside the bit->arithmetic OT
    SignMask = 8,   // beta_1 / beta_2 of the secure Sign assembly
    ReluMask = 9,   // alpha_2 / gamma_1 pairwise masks of secure ReLU
    PrivMask = 10,  // party-private masks (alpha_1 at P1, gamma_0 at P0)
    TruncComp = 11, // pairwise share components of the truncation pair
    TruncVal = 12,  // P1-private truncation mask value r
    Deal = 13,      // dealer randomness for input/parameter sharing
};

/// Per-party correlated-randomness state. P_i holds k_i (shared with P_{i-1})
/// and k_{i+1} (shared with P_{i+1}) plus one private key. Counters advance
/// identically at both holders of a key because every protocol step draws the
/// same streams at every party that owns them.
class RandomnessCtx {
public:
    RandomnessCtx(PartyId me, const PrfKey& key_self, const PrfKey& key_next,
                  const PrfKey& key_priv)
        : me_(me), prf_self_(key_self), prf_next_(key_next), prf_priv_(key_priv) {}

    PartyId me() const { return me_; }

    /// a_i = F(k_{i+1}, cnt) - F(k_i, cnt); the three parties' outputs sum to 0.
    RingTensor zero3(const Ring& ring, const Shape& shape);

    /// XOR analogue of zero3 over Z_2.
    BitTensor bit_zero3(const Shape& shape);

    /// (a_i, a_{i+1}) = (F(k_i), F(k_{i+1})): a consistent RSS pair of an
    /// unknown uniform value. first = component index me, second = me+1.
    std::pair<RingTensor, RingTensor> rand2of3(const Ring& ring, const Shape& shape);

    /// RSS pair of an unknown uniform bit.
    std::pair<BitTensor, BitTensor> bit2of3(const Shape& shape);

    /// RSS pair whose components are uniform in [0, 2^bits); the secret value
    /// is the plain integer sum of the three components (no wrap for small bits).
    std::pair<RingTensor, RingTensor> bounded2of3(const Ring& ring, const Shape& shape,
                                                  unsigned bits, RandKind kind);

    /// Stream shared with one neighbour only (OT pads, pairwise masks).
    RingTensor pair_ring(PartyId other, RandKind kind, const Ring& ring, const Shape& shape);
    RingTensor pair_ring_bounded(PartyId other, RandKind kind, const Ring& ring,
                                 const Shape& shape, unsigned bits);

    /// This party's private stream.
    RingTensor priv_ring(RandKind kind, const Ring& ring, const Shape& shape);
    RingTensor priv_ring_bounded(RandKind kind, const Ring& ring, const Shape& shape,
                                 unsigned bits);

private:
    enum Slot { kSelf = 0, kNext = 1, kPriv = 2 };

    const Aes128Prf& prf(Slot s) const;
    std::uint64_t& counter(Slot s, RandKind k);
    RingTensor draw(Slot s, RandKind k, const Shape& shape, ring_t mask);
    Slot slot_for(PartyId other) const;

    PartyId me_;
    Aes128Prf prf_self_, prf_next_, prf_priv_;
    std::array<std::array<std::uint64_t, 32>, 3> counters_{};
};

/// Out-of-band seed setup: derives the three pairwise keys and the per-party
/// private keys from one master seed, and hands each party its view.
struct SeedSetup {
    std::array<PrfKey, 3> pair_keys; // pair_keys[j] shared by P_j and P_{j-1}
    std::array<PrfKey, 3> priv_keys;

    static SeedSetup from_seed(std::uint64_t seed);
    RandomnessCtx ctx_for(PartyId p) const;
};

} // namespace cbnn
