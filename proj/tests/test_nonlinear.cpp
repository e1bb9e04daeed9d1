#include "doctest.h"

#include <mutex>
#include <random>

#include "cbnn/secure_nonlinear.hpp"
#include "support/test_util.hpp"

using namespace cbnn;
using namespace cbnn::test;

namespace {

ProtocolConfig cfg_default() { return ProtocolConfig{}; }

/// Shares x across the three parties locally and runs an SPMD protocol on it.
template <typename F>
auto run_on_shares(const ProtocolConfig& cfg, std::uint64_t seed, const RingTensor& x, F f,
                   TrafficStats* stats_out = nullptr) {
    auto sx = share_secret(cfg.ring, x, seeded_rng(seed * 31 + 1));
    auto seeds = SeedSetup::from_seed(seed);
    auto [outs, stats] =
        run_in_process(cfg, seeds, [&](PartyCtx& ctx) { return f(ctx, sx[ctx.me().id]); });
    if (stats_out) *stats_out = stats;
    return outs;
}

RingTensor signed_tensor(const Ring& ring, const std::vector<std::int64_t>& vals) {
    RingTensor t(Shape{vals.size()});
    for (std::size_t i = 0; i < vals.size(); ++i) t[i] = ring.from_signed(vals[i]);
    return t;
}

} // namespace

TEST_CASE("b2a conversion is exact for all component combinations") {
    ProtocolConfig cfg = cfg_default();
    for (int bits = 0; bits < 8; ++bits) {
        BitTensor c0(Shape{1}, std::uint8_t(bits & 1));
        BitTensor c1(Shape{1}, std::uint8_t((bits >> 1) & 1));
        BitTensor c2(Shape{1}, std::uint8_t((bits >> 2) & 1));
        auto sx = bit_shares_from_components(c0, c1, c2);
        auto seeds = SeedSetup::from_seed(200 + bits);
        auto [outs, stats] = run_in_process(
            cfg, seeds, [&](PartyCtx& ctx) { return b2a_convert(ctx, sx[ctx.me().id]); });
        ring_t expect = (c0[0] ^ c1[0] ^ c2[0]) & 1;
        CHECK(reconstruct(cfg.ring, outs[0], outs[1])[0] == expect);
        CHECK(reconstruct(cfg.ring, outs[1], outs[2])[0] == expect);
        CHECK(stats.rounds() == rounds::kB2a);
    }
}

TEST_CASE("msb extraction matches plaintext msb on forced and random inputs") {
    ProtocolConfig cfg = cfg_default();
    FixedPointCodec codec = cfg.codec();

    SUBCASE("forced values") {
        RingTensor x(Shape{4});
        x[0] = codec.encode(1.0);
        x[1] = codec.encode(-1.0);
        x[2] = 0;
        x[3] = codec.encode(-3.7);
        TrafficStats stats;
        auto outs = run_on_shares(
            cfg, 7, x, [](PartyCtx& ctx, const RssShare& s) { return msb_extract(ctx, s); },
            &stats);
        BitTensor got = reconstruct_bits(outs[0], outs[2]);
        CHECK(got[0] == 0);
        CHECK(got[1] == 1);
        CHECK(got[2] == 0);
        CHECK(got[3] == 1);
        CHECK(stats.rounds() == rounds::kMsb);
    }

    SUBCASE("random in-budget batch") {
        constexpr std::size_t kN = 100000;
        std::mt19937_64 gen(17);
        std::uniform_int_distribution<std::int64_t> dist(-(1 << 20) + 1, (1 << 20) - 1);
        RingTensor x(Shape{kN});
        for (auto& v : x.values()) v = cfg.ring.from_signed(dist(gen));
        auto outs = run_on_shares(cfg, 8, x, [](PartyCtx& ctx, const RssShare& s) {
            return msb_extract(ctx, s);
        });
        BitTensor got = reconstruct_bits(outs[0], outs[1]);
        for (std::size_t i = 0; i < kN; ++i) {
            REQUIRE(got[i] == cfg.ring.msb(x[i]));
        }
    }
}

TEST_CASE("msb extraction is exhaustively correct for l=16, d=4") {
    ProtocolConfig cfg;
    cfg.ring = Ring(16);
    cfg.frac_bits = 6;
    cfg.msb_budget = 4;
    const std::int64_t budget = 1 << 11; // 2^(l-1-d)
    std::vector<std::int64_t> vals;
    for (std::int64_t v = -budget + 1; v < budget; ++v) vals.push_back(v);
    RingTensor x = signed_tensor(cfg.ring, vals);
    auto outs = run_on_shares(cfg, 9, x, [](PartyCtx& ctx, const RssShare& s) {
        return msb_extract(ctx, s);
    });
    BitTensor got = reconstruct_bits(outs[1], outs[2]);
    for (std::size_t i = 0; i < vals.size(); ++i) {
        REQUIRE(got[i] == (vals[i] < 0 ? 1 : 0));
    }
}

TEST_CASE("secure sign produces {0,1} activations equal to the step function") {
    ProtocolConfig cfg = cfg_default();
    FixedPointCodec codec = cfg.codec();

    SUBCASE("forced msb values") {
        for (int b = 0; b <= 1; ++b) {
            BitTensor bt(Shape{1}, std::uint8_t(b));
            auto sm = share_bits(bt, seeded_rng(b + 3));
            auto seeds = SeedSetup::from_seed(300 + b);
            auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
                return secure_sign(ctx, sm[ctx.me().id]);
            });
            CHECK(reconstruct(cfg.ring, outs[0], outs[1])[0] == ring_t(1 - b));
            CHECK(stats.rounds() == rounds::kSign);
        }
    }

    SUBCASE("end to end over random fixed-point inputs") {
        constexpr std::size_t kN = 10000;
        std::mt19937_64 gen(21);
        std::uniform_real_distribution<double> dist(-500.0, 500.0);
        RingTensor x(Shape{kN});
        for (auto& v : x.values()) v = codec.encode(dist(gen));
        TrafficStats stats;
        auto outs = run_on_shares(
            cfg, 10, x,
            [](PartyCtx& ctx, const RssShare& s) {
                return secure_sign(ctx, msb_extract(ctx, s));
            },
            &stats);
        RingTensor got = reconstruct(cfg.ring, outs[0], outs[2]);
        for (std::size_t i = 0; i < kN; ++i)
            REQUIRE(got[i] == (cfg.ring.to_signed(x[i]) >= 0 ? 1 : 0));
        CHECK(stats.rounds() == rounds::kMsb + rounds::kSign);
    }
}

TEST_CASE("secure relu reconstructs to max(x, 0) exactly") {
    ProtocolConfig cfg = cfg_default();
    FixedPointCodec codec = cfg.codec();

    RingTensor x(Shape{10002});
    x[0] = codec.encode(5.0);
    x[1] = codec.encode(-3.0);
    std::mt19937_64 gen(23);
    std::uniform_real_distribution<double> dist(-900.0, 900.0);
    for (std::size_t i = 2; i < x.size(); ++i) x[i] = codec.encode(dist(gen));

    TrafficStats stats;
    auto outs = run_on_shares(
        cfg, 11, x,
        [](PartyCtx& ctx, const RssShare& s) {
            BitShare m = msb_extract(ctx, s);
            return secure_relu(ctx, s, m);
        },
        &stats);
    RingTensor got = reconstruct(cfg.ring, outs[1], outs[2]);
    CHECK(got[0] == codec.encode(5.0));
    CHECK(got[1] == 0);
    for (std::size_t i = 0; i < x.size(); ++i)
        REQUIRE(got[i] == (cfg.ring.msb(x[i]) ? ring_t{0} : x[i]));
    CHECK(stats.rounds() == rounds::kMsb + rounds::kRelu);
}

TEST_CASE("fused sign maxpool computes the OR of every binary window") {
    ProtocolConfig cfg = cfg_default();
    // Lay all 16 possible 2x2 binary windows out on one 1x8x8 plane.
    RingTensor acts(Shape{1, 8, 8});
    for (int w = 0; w < 16; ++w) {
        std::size_t oi = (w / 4) * 2, oj = (w % 4) * 2;
        acts[(oi + 0) * 8 + oj + 0] = (w >> 0) & 1;
        acts[(oi + 0) * 8 + oj + 1] = (w >> 1) & 1;
        acts[(oi + 1) * 8 + oj + 0] = (w >> 2) & 1;
        acts[(oi + 1) * 8 + oj + 1] = (w >> 3) & 1;
    }
    TrafficStats stats;
    auto outs = run_on_shares(
        cfg, 12, acts,
        [](PartyCtx& ctx, const RssShare& s) { return fused_sign_maxpool(ctx, s); }, &stats);
    RingTensor got = reconstruct(cfg.ring, outs[0], outs[1]);
    CHECK(got.shape() == Shape{1, 4, 4});
    for (int w = 0; w < 16; ++w) {
        ring_t expect = w == 0 ? 0 : 1; // OR of the window bits
        CHECK(got[(w / 4) * 4 + (w % 4)] == expect);
    }
    CHECK(stats.rounds() == rounds::kMaxpool);
}

TEST_CASE("the opened msb mask value has a uniformly random sign") {
    // u = (1-2*beta)*(2x+1)*r is the only value the extraction opens. With a
    // fixed input and fresh (beta, r) per run its sign bit must be uniform,
    // since the private bit beta flips it.
    ProtocolConfig cfg = cfg_default();
    FixedPointCodec codec = cfg.codec();
    constexpr std::size_t kN = 64;
    constexpr int kRuns = 200;
    RingTensor x(Shape{kN}, codec.encode(3.0));

    std::vector<ring_t> signs;
    signs.reserve(kRuns * kN);
    for (int run = 0; run < kRuns; ++run) {
        auto sx = share_secret(cfg.ring, x, seeded_rng(7000 + run));
        auto seeds = SeedSetup::from_seed(9000 + run);
        // Re-run the extraction steps and return the opened value itself.
        auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
            const Ring& ring = ctx.ring();
            RssShare s = sx[ctx.me().id];
            BitShare beta = rand_bit_2of3(ctx, x.shape());
            auto [r0, r1] = ctx.rand().bounded2of3(ring, x.shape(),
                                                   ctx.config().msb_budget - 3,
                                                   RandKind::MsbMaskR);
            RssShare r{ctx.me(), std::move(r0), std::move(r1)};
            r = add_const(ring, r, ring_t{1});
            RssShare ba = b2a_convert(ctx, beta);
            RssShare y = add_const(ring, scale_share(ring, s, 2), ring_t{1});
            RssShare w = mul_shares(ctx, y, r);
            RssShare flip = add_const(ring, scale_share(ring, ba, ring.neg(2)), ring_t{1});
            return open_product(ctx, w, flip);
        });
        for (std::size_t i = 0; i < kN; ++i) {
            CHECK(outs[0][i] != 0); // 2x+1 keeps the opened product nonzero
            signs.push_back(static_cast<ring_t>(cfg.ring.msb(outs[0][i])));
        }
    }
    std::vector<std::uint64_t> counts(2, 0);
    for (ring_t s : signs) ++counts[s];
    CHECK(chi_square(counts, static_cast<double>(signs.size())) < chi_square_critical(1.0));
}
