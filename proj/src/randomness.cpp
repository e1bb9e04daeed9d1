#include "cbnn/randomness.hpp"

namespace cbnn {

const Aes128Prf& RandomnessCtx::prf(Slot s) const {
    switch (s) {
        case kSelf: return prf_self_;
        case kNext: return prf_next_;
        default: return prf_priv_;
    }
}

std::uint64_t& RandomnessCtx::counter(Slot s, RandKind k) {
    return counters_[s][static_cast<std::size_t>(k)];
}

RingTensor RandomnessCtx::draw(Slot s, RandKind k, const Shape& shape, ring_t mask) {
    std::uint64_t cnt = counter(s, k)++;
    auto words = prf(s).words(static_cast<std::uint8_t>(k), cnt, shape.count());
    RingTensor out(shape);
    for (std::size_t i = 0; i < words.size(); ++i) out[i] = words[i] & mask;
    return out;
}

RingTensor RandomnessCtx::zero3(const Ring& ring, const Shape& shape) {
    RingTensor hi = draw(kNext, RandKind::Zero3, shape, ring.mask());
    RingTensor lo = draw(kSelf, RandKind::Zero3, shape, ring.mask());
    return sub(ring, hi, lo);
}

BitTensor RandomnessCtx::bit_zero3(const Shape& shape) {
    RingTensor hi = draw(kNext, RandKind::BitZero3, shape, 1);
    RingTensor lo = draw(kSelf, RandKind::BitZero3, shape, 1);
    BitTensor out(shape);
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<std::uint8_t>(hi[i] ^ lo[i]);
    return out;
}

std::pair<RingTensor, RingTensor> RandomnessCtx::rand2of3(const Ring& ring,
                                                          const Shape& shape) {
    RingTensor self = draw(kSelf, RandKind::Rand2, shape, ring.mask());
    RingTensor next = draw(kNext, RandKind::Rand2, shape, ring.mask());
    return {std::move(self), std::move(next)};
}

std::pair<BitTensor, BitTensor> RandomnessCtx::bit2of3(const Shape& shape) {
    RingTensor self = draw(kSelf, RandKind::RandBit, shape, 1);
    RingTensor next = draw(kNext, RandKind::RandBit, shape, 1);
    BitTensor a(shape), b(shape);
    for (std::size_t i = 0; i < a.size(); ++i) {
        a[i] = static_cast<std::uint8_t>(self[i]);
        b[i] = static_cast<std::uint8_t>(next[i]);
    }
    return {std::move(a), std::move(b)};
}

std::pair<RingTensor, RingTensor> RandomnessCtx::bounded2of3(const Ring& ring,
                                                             const Shape& shape,
                                                             unsigned bits, RandKind kind) {
    ring_t mask = bits == 0 ? 0 : ((ring_t{1} << bits) - 1);
    mask &= ring.mask();
    RingTensor self = draw(kSelf, kind, shape, mask);
    RingTensor next = draw(kNext, kind, shape, mask);
    return {std::move(self), std::move(next)};
}

RandomnessCtx::Slot RandomnessCtx::slot_for(PartyId other) const {
    if (other == me_.next()) return kNext;
    if (other == me_.prev()) return kSelf;
    throw RangeError("pairwise stream requested with self");
}

RingTensor RandomnessCtx::pair_ring(PartyId other, RandKind kind, const Ring& ring,
                                    const Shape& shape) {
    return draw(slot_for(other), kind, shape, ring.mask());
}

RingTensor RandomnessCtx::pair_ring_bounded(PartyId other, RandKind kind, const Ring& ring,
                                            const Shape& shape, unsigned bits) {
    ring_t mask = (bits == 0 ? 0 : ((ring_t{1} << bits) - 1)) & ring.mask();
    return draw(slot_for(other), kind, shape, mask);
}

RingTensor RandomnessCtx::priv_ring(RandKind kind, const Ring& ring, const Shape& shape) {
    return draw(kPriv, kind, shape, ring.mask());
}

RingTensor RandomnessCtx::priv_ring_bounded(RandKind kind, const Ring& ring,
                                            const Shape& shape, unsigned bits) {
    ring_t mask = (bits == 0 ? 0 : ((ring_t{1} << bits) - 1)) & ring.mask();
    return draw(kPriv, kind, shape, mask);
}

SeedSetup SeedSetup::from_seed(std::uint64_t seed) {
    PrfKey master = key_from_seed(seed);
    SeedSetup s;
    for (int j = 0; j < 3; ++j) {
        s.pair_keys[j] = derive_key(master, static_cast<std::uint64_t>(j));
        s.priv_keys[j] = derive_key(master, static_cast<std::uint64_t>(16 + j));
    }
    return s;
}

RandomnessCtx SeedSetup::ctx_for(PartyId p) const {
    // P_i holds (k_i, k_{i+1}); k_j is shared between P_j and P_{j-1}.
    return RandomnessCtx(p, pair_keys[p.id], pair_keys[p.next().id], priv_keys[p.id]);
}

} // namespace cbnn
