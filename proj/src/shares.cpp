#include "cbnn/shares.hpp"

namespace cbnn {

std::array<RssShare, 3> share_secret(const Ring& ring, const RingTensor& x,
                                     const std::function<ring_t()>& rng) {
    RingTensor c0(x.shape()), c1(x.shape()), c2(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        c0[i] = ring.reduce(rng());
        c1[i] = ring.reduce(rng());
        c2[i] = ring.sub(x[i], ring.add(c0[i], c1[i]));
    }
    std::array<RingTensor, 3> c{std::move(c0), std::move(c1), std::move(c2)};
    std::array<RssShare, 3> out;
    for (int i = 0; i < 3; ++i)
        out[i] = RssShare{PartyId{i}, c[i], c[(i + 1) % 3]};
    return out;
}

std::array<BitShare, 3> share_bits(const BitTensor& x,
                                   const std::function<ring_t()>& rng) {
    BitTensor c0(x.shape()), c1(x.shape()), c2(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i) {
        c0[i] = rng() & 1;
        c1[i] = rng() & 1;
        c2[i] = (x[i] ^ c0[i] ^ c1[i]) & 1;
    }
    std::array<BitTensor, 3> c{std::move(c0), std::move(c1), std::move(c2)};
    std::array<BitShare, 3> out;
    for (int i = 0; i < 3; ++i)
        out[i] = BitShare{PartyId{i}, c[i], c[(i + 1) % 3]};
    return out;
}

namespace {
template <typename S>
void check_distinct_pair(const S& a, const S& b) {
    if (a.party == b.party) throw DesyncError("reconstruct needs two distinct parties");
    detail::check_same_shape(a.shape(), b.shape(), "reconstruct");
}
} // namespace

RingTensor reconstruct(const Ring& ring, const RssShare& a, const RssShare& b) {
    check_distinct_pair(a, b);
    // Order the two shares so that q follows p cyclically: p holds (x_p, x_{p+1}),
    // q = p+1 holds (x_{p+1}, x_{p+2}); the overlap x_{p+1} must agree.
    const RssShare& p = (b.party == a.party.next()) ? a : b;
    const RssShare& q = (b.party == a.party.next()) ? b : a;
    if (!(q.party == p.party.next()))
        throw DesyncError("reconstruct: inconsistent party pair");
    if (!(p.s1 == q.s0))
        throw DesyncError("reconstruct: replicated components disagree between " +
                          p.party.str() + " and " + q.party.str());
    return add(ring, add(ring, p.s0, p.s1), q.s1);
}

BitTensor reconstruct_bits(const BitShare& a, const BitShare& b) {
    check_distinct_pair(a, b);
    const BitShare& p = (b.party == a.party.next()) ? a : b;
    const BitShare& q = (b.party == a.party.next()) ? b : a;
    if (!(q.party == p.party.next()))
        throw DesyncError("reconstruct: inconsistent party pair");
    if (!(p.s1 == q.s0))
        throw DesyncError("reconstruct: replicated bit components disagree");
    BitTensor out(p.shape());
    for (std::size_t i = 0; i < out.size(); ++i)
        out[i] = (p.s0[i] ^ p.s1[i] ^ q.s1[i]) & 1;
    return out;
}

RssShare add_shares(const Ring& ring, const RssShare& x, const RssShare& y) {
    if (!(x.party == y.party)) throw DesyncError("add_shares: party mismatch");
    return {x.party, add(ring, x.s0, y.s0), add(ring, x.s1, y.s1)};
}

RssShare sub_shares(const Ring& ring, const RssShare& x, const RssShare& y) {
    if (!(x.party == y.party)) throw DesyncError("sub_shares: party mismatch");
    return {x.party, sub(ring, x.s0, y.s0), sub(ring, x.s1, y.s1)};
}

RssShare neg_share(const Ring& ring, const RssShare& x) {
    return {x.party, neg(ring, x.s0), neg(ring, x.s1)};
}

RssShare add_const(const Ring& ring, const RssShare& x, const RingTensor& c) {
    detail::check_same_shape(x.shape(), c.shape(), "add_const");
    RssShare out = x;
    // Component 0 is replicated at P0 (first slot) and P2 (second slot).
    if (x.party.id == 0) out.s0 = add(ring, out.s0, c);
    if (x.party.id == 2) out.s1 = add(ring, out.s1, c);
    return out;
}

RssShare add_const(const Ring& ring, const RssShare& x, ring_t c) {
    return add_const(ring, x, RingTensor(x.shape(), c));
}

RssShare scale_share(const Ring& ring, const RssShare& x, ring_t c) {
    return {x.party, scale(ring, x.s0, c), scale(ring, x.s1, c)};
}

BitShare xor_bitshares(const BitShare& x, const BitShare& y) {
    if (!(x.party == y.party)) throw DesyncError("xor_bitshares: party mismatch");
    detail::check_same_shape(x.shape(), y.shape(), "xor_bitshares");
    BitShare out{x.party, BitTensor(x.shape()), BitTensor(x.shape())};
    for (std::size_t i = 0; i < x.size(); ++i) {
        out.s0[i] = (x.s0[i] ^ y.s0[i]) & 1;
        out.s1[i] = (x.s1[i] ^ y.s1[i]) & 1;
    }
    return out;
}

BitShare xor_const_bits(const BitShare& x, const BitTensor& c) {
    detail::check_same_shape(x.shape(), c.shape(), "xor_const_bits");
    BitShare out = x;
    if (x.party.id == 0)
        for (std::size_t i = 0; i < c.size(); ++i) out.s0[i] = (out.s0[i] ^ c[i]) & 1;
    if (x.party.id == 2)
        for (std::size_t i = 0; i < c.size(); ++i) out.s1[i] = (out.s1[i] ^ c[i]) & 1;
    return out;
}

RssShare mul_shares(PartyCtx& ctx, const RssShare& x, const RssShare& y) {
    auto scope = ctx.phase("mul");
    const Ring& ring = ctx.ring();
    detail::check_same_shape(x.shape(), y.shape(), "mul_shares");
    // z_i = x_i*y_i + x_i*y_{i+1} + x_{i+1}*y_i + a_i, then reshare to P_{i-1}.
    RingTensor zi = mul(ring, x.s0, y.s0);
    zi = add(ring, zi, mul(ring, x.s0, y.s1));
    zi = add(ring, zi, mul(ring, x.s1, y.s0));
    zi = add(ring, zi, ctx.rand().zero3(ring, x.shape()));
    ctx.send_ring(ctx.me().prev(), tag::mul_reshare, zi);
    RingTensor znext = ctx.recv_ring(ctx.me().next(), tag::mul_reshare, x.shape());
    ctx.round();
    return {ctx.me(), std::move(zi), std::move(znext)};
}

BitShare and_bitshares(PartyCtx& ctx, const BitShare& x, const BitShare& y) {
    auto scope = ctx.phase("bitand");
    detail::check_same_shape(x.shape(), y.shape(), "and_bitshares");
    BitTensor zi = ctx.rand().bit_zero3(x.shape());
    for (std::size_t i = 0; i < x.size(); ++i)
        zi[i] = (zi[i] ^ (x.s0[i] & y.s0[i]) ^ (x.s0[i] & y.s1[i]) ^ (x.s1[i] & y.s0[i])) & 1;
    ctx.send_bits(ctx.me().prev(), tag::bitmul_reshare, zi);
    BitTensor znext = ctx.recv_bits(ctx.me().next(), tag::bitmul_reshare, x.shape());
    ctx.round();
    return {ctx.me(), std::move(zi), std::move(znext)};
}

RingTensor open_to_all(PartyCtx& ctx, const RssShare& x) {
    auto scope = ctx.phase("open");
    const Ring& ring = ctx.ring();
    // P_i lacks x_{i+2}, which is the first component of P_{i+1}'s pair; each
    // party therefore sends its second component to its predecessor.
    ctx.send_ring(ctx.me().prev(), tag::open_all, x.s1);
    RingTensor missing = ctx.recv_ring(ctx.me().next(), tag::open_all, x.shape());
    ctx.round();
    return add(ring, add(ring, x.s0, x.s1), missing);
}

RingTensor open_product(PartyCtx& ctx, const RssShare& x, const RssShare& y) {
    auto scope = ctx.phase("open");
    const Ring& ring = ctx.ring();
    detail::check_same_shape(x.shape(), y.shape(), "open_product");
    RingTensor ui = mul(ring, x.s0, y.s0);
    ui = add(ring, ui, mul(ring, x.s0, y.s1));
    ui = add(ring, ui, mul(ring, x.s1, y.s0));
    ui = add(ring, ui, ctx.rand().zero3(ring, x.shape()));
    ctx.send_ring(ctx.me().next(), tag::open_pair, ui);
    ctx.send_ring(ctx.me().prev(), tag::open_pair, ui);
    RingTensor a = ctx.recv_ring(ctx.me().next(), tag::open_pair, x.shape());
    RingTensor b = ctx.recv_ring(ctx.me().prev(), tag::open_pair, x.shape());
    ctx.round();
    return add(ring, add(ring, ui, a), b);
}

std::optional<RingTensor> reveal_to(PartyCtx& ctx, const RssShare& x, PartyId target) {
    auto scope = ctx.phase("reveal");
    const Ring& ring = ctx.ring();
    // The missing component at the target is x_{target+2}: the second component
    // of P_{target+1} and the first of P_{target+2}. Both send; target compares.
    if (ctx.me() == target.next()) {
        ctx.send_ring(target, tag::reveal, x.s1);
        ctx.round();
        return std::nullopt;
    }
    if (ctx.me() == target.prev()) {
        ctx.send_ring(target, tag::reveal, x.s0);
        ctx.round();
        return std::nullopt;
    }
    RingTensor a = ctx.recv_ring(target.next(), tag::reveal, x.shape());
    RingTensor b = ctx.recv_ring(target.prev(), tag::reveal, x.shape());
    ctx.round();
    if (!(a == b))
        throw DesyncError("reveal: replicated component copies disagree at " +
                          ctx.me().str());
    return add(ring, add(ring, x.s0, x.s1), a);
}

RssShare deal_input(PartyCtx& ctx, PartyId dealer, const RingTensor* x, const Shape& shape) {
    auto scope = ctx.phase("deal");
    const Ring& ring = ctx.ring();
    if (ctx.me() == dealer) {
        if (!x) throw ConfigError("dealer has no input tensor");
        if (!(x->shape() == shape)) throw ConfigError("dealer input shape mismatch");
        RingTensor c0 = ctx.rand().priv_ring(RandKind::Deal, ring, shape);
        RingTensor c1 = ctx.rand().priv_ring(RandKind::Deal, ring, shape);
        RingTensor c2 = sub(ring, *x, add(ring, c0, c1));
        std::array<RingTensor, 3> c{std::move(c0), std::move(c1), std::move(c2)};
        for (int i = 0; i < 3; ++i) {
            if (PartyId{i} == dealer) continue;
            ctx.send_ring(PartyId{i}, tag::deal_share, c[i]);
            ctx.send_ring(PartyId{i}, tag::deal_share, c[(i + 1) % 3]);
        }
        ctx.round();
        return {ctx.me(), c[dealer.id], c[dealer.next().id]};
    }
    RingTensor s0 = ctx.recv_ring(dealer, tag::deal_share, shape);
    RingTensor s1 = ctx.recv_ring(dealer, tag::deal_share, shape);
    ctx.round();
    return {ctx.me(), std::move(s0), std::move(s1)};
}

RssShare rand_rss_2of3(PartyCtx& ctx, const Shape& shape) {
    auto [a, b] = ctx.rand().rand2of3(ctx.ring(), shape);
    return {ctx.me(), std::move(a), std::move(b)};
}

BitShare rand_bit_2of3(PartyCtx& ctx, const Shape& shape) {
    auto [a, b] = ctx.rand().bit2of3(shape);
    return {ctx.me(), std::move(a), std::move(b)};
}

RingTensor zero_randomness_3of3(PartyCtx& ctx, const Shape& shape) {
    return ctx.rand().zero3(ctx.ring(), shape);
}

} // namespace cbnn
