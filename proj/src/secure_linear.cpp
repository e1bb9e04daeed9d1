#include "cbnn/secure_linear.hpp"

namespace cbnn {

namespace {

RingTensor local_linear(const Ring& ring, const LinearParams& p, const RingTensor& w,
                        const RingTensor& x) {
    switch (p.kind) {
        case LinearKind::Fc: {
            std::size_t out = p.w.shape()[0], in = p.w.shape()[1];
            RingTensor wm = w.reshaped(Shape{out, in});
            RingTensor xv = x.reshaped(Shape{in, 1});
            return matmul(ring, wm, xv).reshaped(Shape{out});
        }
        case LinearKind::Conv:
        case LinearKind::PwConv: {
            RingTensor y = conv2d(x, w, p.geom);
            for (auto& v : y.values()) v &= ring.mask();
            return y;
        }
        case LinearKind::DwConv: {
            RingTensor y = depthwise_conv2d(x, w, p.geom);
            for (auto& v : y.values()) v &= ring.mask();
            return y;
        }
    }
    throw ConfigError("unknown linear kind");
}

RingTensor broadcast_bias(const Ring& ring, const RingTensor& z, const RingTensor& b) {
    RingTensor out = z;
    if (z.shape().rank() == 1) {
        detail::check_same_shape(z.shape(), b.shape(), "bias");
        return add(ring, z, b);
    }
    std::size_t C = z.shape()[0], hw = z.size() / C;
    if (b.size() != C) throw RangeError("bias length must equal output channels");
    for (std::size_t c = 0; c < C; ++c)
        for (std::size_t i = 0; i < hw; ++i)
            out[c * hw + i] = ring.add(out[c * hw + i], b[c]);
    return out;
}

} // namespace

Shape linear_out_shape(const LinearParams& params, const Shape& in) {
    if (params.kind == LinearKind::Fc) {
        if (in.count() != params.w.shape()[1])
            throw RangeError("fc: input size " + in.str() + " does not match weights " +
                             params.w.shape().str());
        return Shape{params.w.shape()[0]};
    }
    return params.geom.out_shape(in);
}

RssShare linear_infer(PartyCtx& ctx, const LinearParams& params, const RssShare& x) {
    auto scope = ctx.phase("linear");
    const Ring& ring = ctx.ring();
    Shape out_shape = linear_out_shape(params, x.shape());

    RingTensor xin = params.kind == LinearKind::Fc ? x.s0 : x.s0;
    // Z_i = f(W_i, X_i) + f(W_{i+1}, X_i) + f(W_i, X_{i+1}) + b_i + a_i
    RingTensor zi = local_linear(ring, params, params.w.s0, x.s0);
    zi = add(ring, zi, local_linear(ring, params, params.w.s1, x.s0));
    zi = add(ring, zi, local_linear(ring, params, params.w.s0, x.s1));
    zi = broadcast_bias(ring, zi, params.b.s0);
    zi = add(ring, zi, ctx.rand().zero3(ring, out_shape));

    ctx.send_ring(ctx.me().prev(), tag::linear_reshare, zi);
    RingTensor znext = ctx.recv_ring(ctx.me().next(), tag::linear_reshare, out_shape);
    ctx.round();
    return {ctx.me(), std::move(zi), std::move(znext)};
}

RssShare separable_conv_infer(PartyCtx& ctx, const LinearParams& dw,
                              const LinearParams& pw, const RssShare& x) {
    if (dw.kind != LinearKind::DwConv || pw.kind != LinearKind::PwConv)
        throw ConfigError("separable convolution expects a depthwise/pointwise pair");
    RssShare mid = linear_infer(ctx, dw, x);
    return linear_infer(ctx, pw, mid);
}

RssShare truncate(PartyCtx& ctx, const RssShare& x, unsigned frac_bits) {
    auto scope = ctx.phase("trunc");
    const Ring& ring = ctx.ring();
    const Shape& shape = x.shape();
    const PartyId me = ctx.me();

    // Pairwise components of the mask pair are free; P1 completes both values
    // with a dealt component c0 so that r stays in [0, 2^(l-2)) and the dealt
    // shift shares reconstruct to exactly r >> f.
    RingTensor c1r = (me.id == 0 || me.id == 1)
                         ? ctx.rand().pair_ring(me.id == 0 ? me.next() : me.prev(),
                                                RandKind::TruncComp, ring, shape)
                         : RingTensor();
    RingTensor c2r = (me.id == 1 || me.id == 2)
                         ? ctx.rand().pair_ring(me.id == 1 ? me.next() : me.prev(),
                                                RandKind::TruncComp, ring, shape)
                         : RingTensor();
    RingTensor c1s = (me.id == 0 || me.id == 1)
                         ? ctx.rand().pair_ring(me.id == 0 ? me.next() : me.prev(),
                                                RandKind::TruncComp, ring, shape)
                         : RingTensor();
    RingTensor c2s = (me.id == 1 || me.id == 2)
                         ? ctx.rand().pair_ring(me.id == 1 ? me.next() : me.prev(),
                                                RandKind::TruncComp, ring, shape)
                         : RingTensor();

    RssShare r_share{me, RingTensor(shape), RingTensor(shape)};
    RssShare rs_share{me, RingTensor(shape), RingTensor(shape)};

    if (me.id == 1) {
        RingTensor r =
            ctx.rand().priv_ring_bounded(RandKind::TruncVal, ring, shape, ring.bits() - 2);
        RingTensor rs(shape);
        for (std::size_t i = 0; i < rs.size(); ++i) rs[i] = r[i] >> frac_bits;
        RingTensor c0r = sub(ring, r, add(ring, c1r, c2r));
        RingTensor c0s = sub(ring, rs, add(ring, c1s, c2s));
        ctx.send_ring(PartyId{0}, tag::trunc_pair, c0r);
        ctx.send_ring(PartyId{0}, tag::trunc_pair, c0s);
        ctx.send_ring(PartyId{2}, tag::trunc_pair, c0r);
        ctx.send_ring(PartyId{2}, tag::trunc_pair, c0s);
        ctx.round();
        r_share = {me, c1r, c2r};
        rs_share = {me, c1s, c2s};
    } else if (me.id == 0) {
        RingTensor c0r = ctx.recv_ring(PartyId{1}, tag::trunc_pair, shape);
        RingTensor c0s = ctx.recv_ring(PartyId{1}, tag::trunc_pair, shape);
        ctx.round();
        r_share = {me, std::move(c0r), c1r};
        rs_share = {me, std::move(c0s), c1s};
    } else {
        RingTensor c0r = ctx.recv_ring(PartyId{1}, tag::trunc_pair, shape);
        RingTensor c0s = ctx.recv_ring(PartyId{1}, tag::trunc_pair, shape);
        ctx.round();
        r_share = {me, c2r, std::move(c0r)};
        rs_share = {me, c2s, std::move(c0s)};
    }

    // Open v = x + r to P0 and P2 only; P1 knows r in clear and must not see v.
    RssShare v = add_shares(ring, x, r_share);
    RssShare y = neg_share(ring, rs_share);
    if (me.id == 0) {
        ctx.send_ring(PartyId{2}, tag::trunc_open, v.s1); // v_1
        RingTensor v2 = ctx.recv_ring(PartyId{2}, tag::trunc_open, shape);
        ctx.round();
        RingTensor opened = add(ring, add(ring, v.s0, v.s1), v2);
        RingTensor shifted(shape);
        for (std::size_t i = 0; i < shape.count(); ++i)
            shifted[i] = ring.asr(opened[i], frac_bits);
        y = add_const(ring, y, shifted);
    } else if (me.id == 2) {
        ctx.send_ring(PartyId{0}, tag::trunc_open, v.s0); // v_2
        RingTensor v1 = ctx.recv_ring(PartyId{0}, tag::trunc_open, shape);
        ctx.round();
        RingTensor opened = add(ring, add(ring, v.s0, v.s1), v1);
        RingTensor shifted(shape);
        for (std::size_t i = 0; i < shape.count(); ++i)
            shifted[i] = ring.asr(opened[i], frac_bits);
        y = add_const(ring, y, shifted);
    } else {
        ctx.round();
    }
    return y;
}

} // namespace cbnn
