#include "doctest.h"

#include <random>

#include "cbnn/ring.hpp"
#include "cbnn/tensor.hpp"

using namespace cbnn;

TEST_CASE("fixed-point encode hits the forced values") {
    FixedPointCodec codec(Ring(32), 13);
    CHECK(codec.encode(0.0) == 0);
    CHECK(codec.encode(1.0) == 8192);
    CHECK(codec.encode(-1.5) == (uint64_t(1) << 32) - 12288);
    CHECK(codec.decode(8192) == doctest::Approx(1.0));
    CHECK(codec.decode(0) == 0.0);
}

TEST_CASE("encode overflows outside the representable range") {
    FixedPointCodec codec(Ring(32), 13);
    // l-f-1 = 18 integer bits
    CHECK_NOTHROW(codec.encode(262143.0));
    CHECK_THROWS_AS(codec.encode(262144.0), RangeError);
    CHECK_THROWS_AS(codec.encode(-3e6), RangeError);
}

TEST_CASE("decode(encode(x)) round-trips within half an ulp") {
    FixedPointCodec codec(Ring(32), 13);
    std::mt19937_64 gen(7);
    std::uniform_real_distribution<double> dist(-100.0, 100.0);
    for (int i = 0; i < 1000; ++i) {
        double x = dist(gen);
        double back = codec.decode(codec.encode(x));
        CHECK(std::fabs(back - x) <= std::ldexp(1.0, -14));
    }
}

TEST_CASE("encode is monotone on the representable range") {
    FixedPointCodec codec(Ring(16), 6);
    std::mt19937_64 gen(11);
    std::uniform_real_distribution<double> dist(-500.0, 500.0);
    for (int i = 0; i < 2000; ++i) {
        double a = dist(gen), b = dist(gen);
        if (a > b) std::swap(a, b);
        Ring r = codec.ring();
        CHECK(r.to_signed(codec.encode(a)) <= r.to_signed(codec.encode(b)));
    }
}

TEST_CASE("ring arithmetic wraps mod 2^l") {
    Ring r(32);
    CHECK(r.add(0xFFFFFFFFull, 1) == 0);
    CHECK(r.mul(12345, 0) == 0);
    CHECK(r.sub(0, 1) == 0xFFFFFFFFull);
    Ring r8(8);
    CHECK(r8.add(255, 3) == 2);
}

TEST_CASE("ring multiplication matches a wide-integer reference") {
    Ring r(32);
    std::mt19937_64 gen(3);
    for (int i = 0; i < 10000; ++i) {
        ring_t a = gen() & r.mask(), b = gen() & r.mask();
        unsigned __int128 wide = static_cast<unsigned __int128>(a) * b;
        CHECK(r.mul(a, b) == static_cast<ring_t>(wide & r.mask()));
    }
}

TEST_CASE("ring axioms hold on random triples") {
    Ring r(32);
    std::mt19937_64 gen(5);
    for (int i = 0; i < 2000; ++i) {
        ring_t a = gen() & r.mask(), b = gen() & r.mask(), c = gen() & r.mask();
        CHECK(r.add(a, b) == r.add(b, a));
        CHECK(r.mul(a, b) == r.mul(b, a));
        CHECK(r.add(r.add(a, b), c) == r.add(a, r.add(b, c)));
        CHECK(r.mul(r.mul(a, b), c) == r.mul(a, r.mul(b, c)));
        CHECK(r.mul(a, r.add(b, c)) == r.add(r.mul(a, b), r.mul(a, c)));
    }
}

TEST_CASE("msb equals the sign bit") {
    Ring r32(32);
    CHECK(r32.msb(0) == 0);
    CHECK(r32.msb(ring_t(1) << 31) == 1);
    FixedPointCodec codec(r32, 13);
    CHECK(r32.msb(codec.encode(-3.7)) == 1);
    CHECK(r32.msb(codec.encode(3.7)) == 0);

    Ring r8(8);
    for (ring_t v = 0; v < 256; ++v) {
        CHECK(r8.msb(v) == (v >= 128 ? 1 : 0));
        CHECK(r8.msb(v) == (r8.to_signed(v) < 0 ? 1 : 0));
    }
    std::mt19937_64 gen(9);
    for (int i = 0; i < 5000; ++i) {
        ring_t v = gen() & r32.mask();
        CHECK(r32.msb(v) == (v >= (ring_t(1) << 31) ? 1 : 0));
    }
}

TEST_CASE("arithmetic shift right is floor division by 2^s") {
    Ring r(32);
    CHECK(r.to_signed(r.asr(r.from_signed(-8192), 13)) == -1);
    CHECK(r.to_signed(r.asr(r.from_signed(8191), 13)) == 0);
    CHECK(r.to_signed(r.asr(r.from_signed(-1), 13)) == -1);
    std::mt19937_64 gen(13);
    for (int i = 0; i < 5000; ++i) {
        std::int64_t v = static_cast<std::int32_t>(gen());
        std::int64_t expect =
            static_cast<std::int64_t>(std::floor(static_cast<double>(v) / 8192.0));
        CHECK(r.to_signed(r.asr(r.from_signed(v), 13)) == expect);
    }
}

TEST_CASE("tensor reshape preserves elements and rejects bad counts") {
    RingTensor t(Shape{2, 3});
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = i;
    RingTensor v = t.reshaped(Shape{3, 2});
    CHECK(v.shape() == Shape{3, 2});
    CHECK(v[5] == 5);
    CHECK_THROWS_AS(t.reshaped(Shape{4, 2}), RangeError);
    CHECK_THROWS_AS(RingTensor(Shape{2, 2}, std::vector<ring_t>{1, 2, 3}), RangeError);
}

TEST_CASE("ring matmul matches a naive reference") {
    Ring r(32);
    std::mt19937_64 gen(17);
    RingTensor a(Shape{3, 4}), b(Shape{4, 2});
    for (auto& v : a.values()) v = gen() & r.mask();
    for (auto& v : b.values()) v = gen() & r.mask();
    RingTensor c = matmul(r, a, b);
    for (std::size_t i = 0; i < 3; ++i)
        for (std::size_t j = 0; j < 2; ++j) {
            ring_t acc = 0;
            for (std::size_t k = 0; k < 4; ++k)
                acc = r.add(acc, r.mul(a[i * 4 + k], b[k * 2 + j]));
            CHECK(c[i * 2 + j] == acc);
        }
}
