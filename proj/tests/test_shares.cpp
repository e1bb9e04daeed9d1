#include "doctest.h"

#include <random>

#include "cbnn/shares.hpp"
#include "support/test_util.hpp"

using namespace cbnn;
using namespace cbnn::test;

namespace {
ProtocolConfig cfg32() {
    ProtocolConfig cfg;
    cfg.ring = Ring(32);
    return cfg;
}

RingTensor random_tensor(const Ring& ring, const Shape& shape, std::mt19937_64& gen) {
    RingTensor t(shape);
    for (auto& v : t.values()) v = gen() & ring.mask();
    return t;
}
} // namespace

TEST_CASE("share with zero randomness leaves all components zero") {
    Ring ring(32);
    RingTensor zero(Shape{4});
    auto shares = share_secret(ring, zero, zero_rng());
    for (const auto& s : shares)
        for (std::size_t i = 0; i < s.size(); ++i) {
            CHECK(s.s0[i] == 0);
            CHECK(s.s1[i] == 0);
        }
}

TEST_CASE("share then reconstruct returns the secret for every party pair") {
    Ring ring(32);
    std::mt19937_64 gen(23);
    auto rng = seeded_rng(99);
    for (int rep = 0; rep < 1000; ++rep) {
        RingTensor x = random_tensor(ring, Shape{3}, gen);
        auto sh = share_secret(ring, x, rng);
        CHECK(reconstruct(ring, sh[0], sh[1]) == x);
        CHECK(reconstruct(ring, sh[1], sh[2]) == x);
        CHECK(reconstruct(ring, sh[0], sh[2]) == x);
    }
}

TEST_CASE("reconstruct detects a corrupted replica") {
    Ring ring(32);
    RingTensor x(Shape{2}, std::vector<ring_t>{5, 6});
    auto sh = share_secret(ring, x, seeded_rng(1));
    sh[1].s0[0] ^= 1; // P1's copy of component 1 now disagrees with P0's
    CHECK_THROWS_AS(reconstruct(ring, sh[0], sh[1]), DesyncError);
    CHECK_THROWS_AS(reconstruct(ring, sh[0], sh[0]), DesyncError);
}

TEST_CASE("local share addition reconstructs to the plaintext sum") {
    Ring ring(32);
    std::mt19937_64 gen(29);
    auto rng = seeded_rng(7);
    for (int rep = 0; rep < 200; ++rep) {
        RingTensor x = random_tensor(ring, Shape{5}, gen);
        RingTensor y = random_tensor(ring, Shape{5}, gen);
        auto sx = share_secret(ring, x, rng);
        auto sy = share_secret(ring, y, rng);
        std::array<RssShare, 3> sum;
        for (int i = 0; i < 3; ++i) sum[i] = add_shares(ring, sx[i], sy[i]);
        CHECK(reconstruct(ring, sum[0], sum[2]) == add(ring, x, y));
    }

    // x + (-x) reconstructs to zero
    RingTensor x = random_tensor(ring, Shape{4}, gen);
    auto sx = share_secret(ring, x, rng);
    auto sn = share_secret(ring, neg(ring, x), rng);
    std::array<RssShare, 3> sum;
    for (int i = 0; i < 3; ++i) sum[i] = add_shares(ring, sx[i], sn[i]);
    CHECK(reconstruct(ring, sum[1], sum[2]) == RingTensor(Shape{4}, ring_t{0}));
}

TEST_CASE("add_const touches exactly the replicated component 0") {
    Ring ring(32);
    RingTensor five(Shape{1}, std::vector<ring_t>{5});
    auto sh = share_secret(ring, five, seeded_rng(3));
    std::array<RssShare, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = add_const(ring, sh[i], RingTensor(Shape{1}, 0));
    CHECK(reconstruct(ring, out[0], out[1])[0] == 5);
    for (int i = 0; i < 3; ++i) out[i] = add_const(ring, sh[i], RingTensor(Shape{1}, 10));
    CHECK(reconstruct(ring, out[0], out[1])[0] == 15);
    CHECK(reconstruct(ring, out[1], out[2])[0] == 15);
    CHECK_THROWS_AS(add_const(ring, sh[0], RingTensor(Shape{2}, 1)), RangeError);
}

TEST_CASE("zero randomness sums to zero across parties and advances") {
    ProtocolConfig cfg = cfg32();
    auto seeds = SeedSetup::from_seed(42);
    auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
        std::vector<RingTensor> draws;
        for (int i = 0; i < 100; ++i) draws.push_back(zero_randomness_3of3(ctx, Shape{4}));
        return draws;
    });
    for (int i = 0; i < 100; ++i) {
        RingTensor sum = add(cfg.ring, add(cfg.ring, outs[0][i], outs[1][i]), outs[2][i]);
        for (std::size_t j = 0; j < sum.size(); ++j) CHECK(sum[j] == 0);
    }
    CHECK(!(outs[0][0] == outs[0][1])); // counter advanced
    CHECK(stats.total_messages() == 0);
    CHECK(stats.rounds() == 0);
}

TEST_CASE("2-of-3 randomness is replication consistent and uniform") {
    ProtocolConfig cfg = cfg32();
    auto seeds = SeedSetup::from_seed(43);
    constexpr int kDraws = 10000;
    auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
        std::vector<RssShare> draws;
        draws.reserve(kDraws);
        for (int i = 0; i < kDraws; ++i) draws.push_back(rand_rss_2of3(ctx, Shape{1}));
        return draws;
    });
    CHECK(stats.total_messages() == 0);

    std::vector<ring_t> values;
    values.reserve(kDraws);
    for (int i = 0; i < kDraws; ++i) {
        CHECK(outs[0][i].s1 == outs[1][i].s0);
        CHECK(outs[1][i].s1 == outs[2][i].s0);
        CHECK(outs[2][i].s1 == outs[0][i].s0);
        values.push_back(reconstruct(cfg.ring, outs[0][i], outs[1][i])[0]);
    }
    CHECK(uniform_low_bits(values));
    CHECK(values[0] != values[1]);
}

TEST_CASE("share multiplication reconstructs to the ring product") {
    ProtocolConfig cfg = cfg32();
    auto seeds = SeedSetup::from_seed(44);
    std::mt19937_64 gen(31);
    constexpr std::size_t kPairs = 1000;

    RingTensor x(Shape{kPairs}), y(Shape{kPairs});
    for (auto& v : x.values()) v = gen() & cfg.ring.mask();
    for (auto& v : y.values()) v = gen() & cfg.ring.mask();
    // include the forced cases
    x[0] = 0;
    x[1] = 1;

    auto sx = share_secret(cfg.ring, x, seeded_rng(5));
    auto sy = share_secret(cfg.ring, y, seeded_rng(6));

    auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
        return mul_shares(ctx, sx[ctx.me().id], sy[ctx.me().id]);
    });

    RingTensor z = reconstruct(cfg.ring, outs[0], outs[1]);
    CHECK(z == mul(cfg.ring, x, y));
    CHECK(z[0] == 0);
    CHECK(z[1] == y[1]);

    // exactly one round, one l-bit word per element per party
    CHECK(stats.rounds() == 1);
    for (int p = 0; p < 3; ++p) {
        CHECK(stats.party[p].rounds == 1);
        CHECK(stats.party[p].bytes == kPairs * cfg.ring.bits() / 8);
        CHECK(stats.party[p].messages == 1);
    }
}

TEST_CASE("masked mul reshare values look uniform on the wire") {
    ProtocolConfig cfg = cfg32();
    constexpr int kRuns = 64;
    constexpr std::size_t kN = 256;
    RingTensor x(Shape{kN}, ring_t{3});
    RingTensor y(Shape{kN}, ring_t{5});
    auto sx = share_secret(cfg.ring, x, seeded_rng(8));
    auto sy = share_secret(cfg.ring, y, seeded_rng(9));

    std::vector<ring_t> observed;
    std::mutex m;
    for (int run = 0; run < kRuns; ++run) {
        auto seeds = SeedSetup::from_seed(1000 + run);
        run_in_process(
            cfg, seeds,
            [&](PartyCtx& ctx) { return mul_shares(ctx, sx[ctx.me().id], sy[ctx.me().id]); },
            30.0, [&](PartyCtx& ctx) {
                if (ctx.me().id != 0) return;
                ctx.wiretap = [&](PartyId, Tag, std::span<const std::uint8_t> payload) {
                    std::lock_guard lk(m);
                    for (std::size_t i = 0; i + 4 <= payload.size(); i += 4)
                        observed.push_back(static_cast<ring_t>(payload[i]) |
                                           (static_cast<ring_t>(payload[i + 1]) << 8));
                };
            });
    }
    CHECK(observed.size() == kRuns * kN);
    CHECK(uniform_low_bits(observed));
}

TEST_CASE("bit share xor and and follow the truth tables") {
    ProtocolConfig cfg = cfg32();
    for (int a = 0; a <= 1; ++a)
        for (int b = 0; b <= 1; ++b) {
            BitTensor ta(Shape{1}, std::uint8_t(a)), tb(Shape{1}, std::uint8_t(b));
            auto sa = share_bits(ta, seeded_rng(a * 2 + b));
            auto sb = share_bits(tb, seeded_rng(a + b * 7 + 1));

            std::array<BitShare, 3> x;
            for (int i = 0; i < 3; ++i) x[i] = xor_bitshares(sa[i], sb[i]);
            CHECK(reconstruct_bits(x[0], x[1])[0] == (a ^ b));

            auto seeds = SeedSetup::from_seed(77 + a * 2 + b);
            auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
                return and_bitshares(ctx, sa[ctx.me().id], sb[ctx.me().id]);
            });
            CHECK(reconstruct_bits(outs[0], outs[2])[0] == (a & b));
            CHECK(stats.rounds() == 1);
        }

    // xor of a share with itself reconstructs to zero
    BitTensor one(Shape{3}, std::uint8_t(1));
    auto s = share_bits(one, seeded_rng(123));
    std::array<BitShare, 3> z;
    for (int i = 0; i < 3; ++i) z[i] = xor_bitshares(s[i], s[i]);
    for (std::size_t i = 0; i < 3; ++i) CHECK(reconstruct_bits(z[0], z[1])[i] == 0);
}

TEST_CASE("open, open_product and reveal_to agree with plaintext") {
    ProtocolConfig cfg = cfg32();
    auto seeds = SeedSetup::from_seed(52);
    std::mt19937_64 gen(37);
    RingTensor x(Shape{8}), y(Shape{8});
    for (auto& v : x.values()) v = gen() & cfg.ring.mask();
    for (auto& v : y.values()) v = gen() & cfg.ring.mask();
    auto sx = share_secret(cfg.ring, x, seeded_rng(11));
    auto sy = share_secret(cfg.ring, y, seeded_rng(12));

    auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
        RingTensor opened = open_to_all(ctx, sx[ctx.me().id]);
        RingTensor prod = open_product(ctx, sx[ctx.me().id], sy[ctx.me().id]);
        auto mine = reveal_to(ctx, sy[ctx.me().id], PartyId{0});
        return std::tuple{opened, prod, mine};
    });
    for (int p = 0; p < 3; ++p) {
        CHECK(std::get<0>(outs[p]) == x);
        CHECK(std::get<1>(outs[p]) == mul(cfg.ring, x, y));
    }
    REQUIRE(std::get<2>(outs[0]).has_value());
    CHECK(*std::get<2>(outs[0]) == y);
    CHECK(!std::get<2>(outs[1]).has_value());
    CHECK(stats.rounds() == 3);
}

TEST_CASE("dealer-based input sharing distributes consistent shares") {
    ProtocolConfig cfg = cfg32();
    auto seeds = SeedSetup::from_seed(53);
    RingTensor x(Shape{4}, std::vector<ring_t>{1, 2, 3, 4});
    auto [outs, stats] = run_in_process(cfg, seeds, [&](PartyCtx& ctx) {
        const RingTensor* input = ctx.me().id == 1 ? &x : nullptr;
        return deal_input(ctx, PartyId{1}, input, Shape{4});
    });
    CHECK(reconstruct(cfg.ring, outs[0], outs[2]) == x);
    CHECK(reconstruct(cfg.ring, outs[1], outs[2]) == x);
    CHECK(stats.rounds() == 1);
}
