#include "cbnn/secure_nonlinear.hpp"

namespace cbnn {

namespace {

/// (sel ^ b0 ^ b1) as a ring tensor, elementwise over two bit tensors.
RingTensor xor_bits_as_ring(int sel, const BitTensor& b0, const BitTensor& b1) {
    RingTensor out(b0.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = static_cast<ring_t>((sel ^ b0[i] ^ b1[i]) & 1);
    return out;
}

} // namespace

RssShare b2a_convert(PartyCtx& ctx, const BitShare& x) {
    auto scope = ctx.phase("b2a");
    const Ring& ring = ctx.ring();
    const Shape& shape = x.shape();
    const PartyId me = ctx.me();
    const OtRoles roles{PartyId{1}, PartyId{0}, PartyId{2}};

    // Arithmetic masks double as share components: a1 lives on the P0/P1
    // stream (P0 needs it as its second component), a2 on the P1/P2 stream.
    RingTensor a1 = (me.id == 0 || me.id == 1)
                        ? ctx.rand().pair_ring(me.id == 0 ? me.next() : me.prev(),
                                               RandKind::B2aMask, ring, shape)
                        : RingTensor();
    RingTensor a2 = (me.id == 1 || me.id == 2)
                        ? ctx.rand().pair_ring(me.id == 1 ? me.next() : me.prev(),
                                               RandKind::B2aMask, ring, shape)
                        : RingTensor();

    if (me.id == 1) {
        RingTensor masks = add(ring, a1, a2);
        OtMessagePair msgs{sub(ring, xor_bits_as_ring(0, x.s0, x.s1), masks),
                           sub(ring, xor_bits_as_ring(1, x.s0, x.s1), masks)};
        ot3_transfer(ctx, roles, &msgs, nullptr, shape);
        return {me, std::move(a1), std::move(a2)};
    }
    if (me.id == 0) {
        auto mc = ot3_transfer(ctx, roles, nullptr, &x.s0, shape);
        // P2 holds the replica of component 0; forward it. The message shares
        // the following round's window, so no barrier is declared here.
        ctx.send_ring(PartyId{2}, tag::b2a_replica, *mc);
        return {me, std::move(*mc), std::move(a1)};
    }
    ot3_transfer(ctx, roles, nullptr, &x.s1, shape);
    RingTensor mc = ctx.recv_ring(PartyId{0}, tag::b2a_replica, shape);
    return {me, std::move(a2), std::move(mc)};
}

BitShare msb_extract(PartyCtx& ctx, const RssShare& x) {
    auto scope = ctx.phase("msb");
    const Ring& ring = ctx.ring();
    const Shape& shape = x.shape();
    const unsigned d = ctx.config().msb_budget;

    // Mask material: a private shared bit and a small positive shared factor
    // r = 1 + r0 + r1 + r2 with components below 2^(d-3), so r < 2^(d-1).
    BitShare beta = rand_bit_2of3(ctx, shape);
    auto [r_self, r_next] = ctx.rand().bounded2of3(ring, shape, d - 3, RandKind::MsbMaskR);
    RssShare r{ctx.me(), std::move(r_self), std::move(r_next)};
    r = add_const(ring, r, ring_t{1});

    RssShare beta_arith = b2a_convert(ctx, beta);

    // u = (2x+1) * r * (1-2*beta); the first product is reshared, the second
    // is fused with the opening (3-of-3 components are broadcast directly).
    RssShare y = add_const(ring, scale_share(ring, x, 2), ring_t{1});
    RssShare w = mul_shares(ctx, y, r);
    RssShare sign_flip = add_const(ring, scale_share(ring, beta_arith, ring.neg(2)), ring_t{1});
    RingTensor u = open_product(ctx, w, sign_flip);

    BitTensor beta_prime(shape);
    for (std::size_t i = 0; i < shape.count(); ++i)
        beta_prime[i] = static_cast<std::uint8_t>(ring.msb(u[i]));
    return xor_const_bits(beta, beta_prime);
}

RssShare secure_sign(PartyCtx& ctx, const BitShare& msb) {
    auto scope = ctx.phase("sign");
    const Ring& ring = ctx.ring();
    const Shape& shape = msb.shape();
    const PartyId me = ctx.me();
    const OtRoles roles{PartyId{1}, PartyId{0}, PartyId{2}};

    RingTensor b1 = (me.id == 0 || me.id == 1)
                        ? ctx.rand().pair_ring(me.id == 0 ? me.next() : me.prev(),
                                               RandKind::SignMask, ring, shape)
                        : RingTensor();
    RingTensor b2 = (me.id == 1 || me.id == 2)
                        ? ctx.rand().pair_ring(me.id == 1 ? me.next() : me.prev(),
                                               RandKind::SignMask, ring, shape)
                        : RingTensor();

    if (me.id == 1) {
        RingTensor masks = add(ring, b1, b2);
        OtMessagePair msgs{sub(ring, xor_bits_as_ring(1, msb.s0, msb.s1), masks),
                           sub(ring, xor_bits_as_ring(0, msb.s0, msb.s1), masks)};
        ot3_transfer(ctx, roles, &msgs, nullptr, shape);
        return {me, std::move(b1), std::move(b2)};
    }
    if (me.id == 0) {
        auto mc = ot3_transfer(ctx, roles, nullptr, &msb.s0, shape);
        ctx.send_ring(PartyId{2}, tag::sign_replica, *mc);
        return {me, std::move(*mc), std::move(b1)};
    }
    ot3_transfer(ctx, roles, nullptr, &msb.s1, shape);
    RingTensor mc = ctx.recv_ring(PartyId{0}, tag::sign_replica, shape);
    return {me, std::move(b2), std::move(mc)};
}

RssShare secure_relu(PartyCtx& ctx, const RssShare& x, const BitShare& msb) {
    auto scope = ctx.phase("relu");
    const Ring& ring = ctx.ring();
    const Shape& shape = x.shape();
    const PartyId me = ctx.me();

    // Pairwise masks: alpha2 on P1/P2, gamma1 on P0/P1; alpha1 and gamma0 stay
    // private to their owners and become additive components below.
    RingTensor alpha1 =
        me.id == 1 ? ctx.rand().priv_ring(RandKind::PrivMask, ring, shape) : RingTensor();
    RingTensor gamma0 =
        me.id == 0 ? ctx.rand().priv_ring(RandKind::PrivMask, ring, shape) : RingTensor();
    RingTensor alpha2 = (me.id == 1 || me.id == 2)
                            ? ctx.rand().pair_ring(me.id == 1 ? me.next() : me.prev(),
                                                   RandKind::ReluMask, ring, shape)
                            : RingTensor();
    RingTensor gamma1 = (me.id == 0 || me.id == 1)
                            ? ctx.rand().pair_ring(me.id == 0 ? me.next() : me.prev(),
                                                   RandKind::ReluMask, ring, shape)
                            : RingTensor();

    // OT 1: P1 sends (1 ^ i ^ msb1 ^ msb2)*(x1+x2) - alpha1 - alpha2; P0 selects
    // with msb0. The result is a 3-of-3 sharing of (1 ^ msb)*(x1+x2).
    const OtRoles first{PartyId{1}, PartyId{0}, PartyId{2}};
    RingTensor part0;
    if (me.id == 1) {
        RingTensor x12 = add(ring, x.s0, x.s1);
        RingTensor masks = add(ring, alpha1, alpha2);
        OtMessagePair msgs{
            sub(ring, mul(ring, xor_bits_as_ring(1, msb.s0, msb.s1), x12), masks),
            sub(ring, mul(ring, xor_bits_as_ring(0, msb.s0, msb.s1), x12), masks)};
        ot3_transfer(ctx, first, &msgs, nullptr, shape);
    } else if (me.id == 0) {
        part0 = *ot3_transfer(ctx, first, nullptr, &msb.s0, shape);
    } else {
        ot3_transfer(ctx, first, nullptr, &msb.s1, shape);
    }

    // OT 2: roles switched, P0 sends (1 ^ i ^ msb0 ^ msb1)*x0 - gamma0 - gamma1;
    // P2 selects with msb2 (helper P1 holds the same bit).
    const OtRoles second{PartyId{0}, PartyId{2}, PartyId{1}};
    RingTensor part2;
    if (me.id == 0) {
        RingTensor masks = add(ring, gamma0, gamma1);
        OtMessagePair msgs{
            sub(ring, mul(ring, xor_bits_as_ring(1, msb.s0, msb.s1), x.s0), masks),
            sub(ring, mul(ring, xor_bits_as_ring(0, msb.s0, msb.s1), x.s0), masks)};
        ot3_transfer(ctx, second, &msgs, nullptr, shape);
    } else if (me.id == 2) {
        part2 = *ot3_transfer(ctx, second, nullptr, &msb.s0, shape);
    } else {
        ot3_transfer(ctx, second, nullptr, &msb.s1, shape);
    }

    // 3-of-3 assembly: the two unmasked OT outputs plus every mask, then one
    // reshare round back to RSS form.
    RingTensor c(shape);
    switch (me.id) {
        case 0: c = add(ring, part0, gamma0); break;
        case 1: c = add(ring, alpha1, gamma1); break;
        default: c = add(ring, alpha2, part2); break;
    }
    c = add(ring, c, ctx.rand().zero3(ring, shape));
    ctx.send_ring(me.prev(), tag::relu_reshare, c);
    RingTensor cnext = ctx.recv_ring(me.next(), tag::relu_reshare, shape);
    ctx.round();
    return {me, std::move(c), std::move(cnext)};
}

RssShare fused_sign_maxpool(PartyCtx& ctx, const RssShare& acts, std::size_t window,
                            std::size_t stride) {
    auto scope = ctx.phase("maxpool");
    const Ring& ring = ctx.ring();
    RssShare sums{ctx.me(), window_sum(acts.s0, window, stride),
                  window_sum(acts.s1, window, stride)};
    for (auto& v : sums.s0.values()) v &= ring.mask();
    for (auto& v : sums.s1.values()) v &= ring.mask();
    sums = add_const(ring, sums, ring.neg(1));
    BitShare m = msb_extract(ctx, sums);
    return secure_sign(ctx, m);
}

} // namespace cbnn
