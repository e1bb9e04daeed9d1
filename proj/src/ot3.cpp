#include "cbnn/ot3.hpp"

namespace cbnn {

std::optional<RingTensor> ot3_transfer(PartyCtx& ctx, const OtRoles& roles,
                                       const OtMessagePair* msgs, const BitTensor* choice,
                                       const Shape& shape) {
    auto scope = ctx.phase("ot3");
    roles.validate();
    const Ring& ring = ctx.ring();
    const PartyId me = ctx.me();

    if (me == roles.sender) {
        if (!msgs || !(msgs->m0.shape() == shape) || !(msgs->m1.shape() == shape))
            throw ConfigError("OT sender needs a message pair of the batch shape");
        RingTensor mask0 = ctx.rand().pair_ring(roles.receiver, RandKind::OtMask, ring, shape);
        RingTensor mask1 = ctx.rand().pair_ring(roles.receiver, RandKind::OtMask, ring, shape);
        RingTensor s0 = xor_mask(ring, msgs->m0, mask0);
        RingTensor s1 = xor_mask(ring, msgs->m1, mask1);
        ctx.send_ring(roles.helper, tag::ot_masked_pair, s0);
        ctx.send_ring(roles.helper, tag::ot_masked_pair, s1);
        ctx.round();
        ctx.round();
        return std::nullopt;
    }

    if (me == roles.helper) {
        if (!choice || !(choice->shape() == shape))
            throw ConfigError("OT helper needs choice bits of the batch shape");
        RingTensor s0 = ctx.recv_ring(roles.sender, tag::ot_masked_pair, shape);
        RingTensor s1 = ctx.recv_ring(roles.sender, tag::ot_masked_pair, shape);
        ctx.round();
        RingTensor sc(shape);
        for (std::size_t i = 0; i < sc.size(); ++i)
            sc[i] = ((*choice)[i] & 1) ? s1[i] : s0[i];
        ctx.send_ring(roles.receiver, tag::ot_selected, sc);
        ctx.round();
        return std::nullopt;
    }

    if (me == roles.receiver) {
        if (!choice || !(choice->shape() == shape))
            throw ConfigError("OT receiver needs choice bits of the batch shape");
        // Both pads are drawn to keep the shared stream counters aligned with
        // the sender; only the chosen pad is used.
        RingTensor mask0 = ctx.rand().pair_ring(roles.sender, RandKind::OtMask, ring, shape);
        RingTensor mask1 = ctx.rand().pair_ring(roles.sender, RandKind::OtMask, ring, shape);
        ctx.round();
        RingTensor sc = ctx.recv_ring(roles.helper, tag::ot_selected, shape);
        ctx.round();
        RingTensor mc(shape);
        for (std::size_t i = 0; i < mc.size(); ++i)
            mc[i] = ring.reduce(sc[i] ^ (((*choice)[i] & 1) ? mask1[i] : mask0[i]));
        return mc;
    }

    throw ConfigError("party " + me.str() + " has no role in this OT");
}

} // namespace cbnn
