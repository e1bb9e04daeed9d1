#pragma once

#include <cmath>
#include <cstdint>
#include <string>

#include "cbnn/errors.hpp"

namespace cbnn {

/// Raw storage for an element of Z_{2^l}, l <= 64. Values are kept reduced
/// (high 64-l bits zero); every operation re-reduces, nothing widens silently.
using ring_t = std::uint64_t;

/// The ring Z_{2^l} with two's-complement signed interpretation.
class Ring {
public:
    explicit constexpr Ring(unsigned bits = 32)
        : bits_(bits), mask_(bits >= 64 ? ~ring_t{0} : ((ring_t{1} << bits) - 1)) {
        if (bits < 2 || bits > 64)
            throw RangeError("ring width must be in [2,64], got " + std::to_string(bits));
    }

    constexpr unsigned bits() const { return bits_; }
    constexpr ring_t mask() const { return mask_; }

    constexpr ring_t reduce(ring_t a) const { return a & mask_; }
    constexpr ring_t add(ring_t a, ring_t b) const { return (a + b) & mask_; }
    constexpr ring_t sub(ring_t a, ring_t b) const { return (a - b) & mask_; }
    constexpr ring_t mul(ring_t a, ring_t b) const { return (a * b) & mask_; }
    constexpr ring_t neg(ring_t a) const { return (ring_t{0} - a) & mask_; }

    /// Bit l-1; equals 1 iff the signed interpretation is negative.
    constexpr int msb(ring_t a) const { return static_cast<int>((a >> (bits_ - 1)) & 1); }

    constexpr ring_t from_signed(std::int64_t v) const {
        return static_cast<ring_t>(v) & mask_;
    }

    constexpr std::int64_t to_signed(ring_t a) const {
        a &= mask_;
        if (bits_ == 64) return static_cast<std::int64_t>(a);
        ring_t half = ring_t{1} << (bits_ - 1);
        return a >= half ? static_cast<std::int64_t>(a) - (std::int64_t{1} << bits_)
                         : static_cast<std::int64_t>(a);
    }

    /// Arithmetic shift right on the signed interpretation (floor division by 2^s).
    constexpr ring_t asr(ring_t a, unsigned s) const {
        return from_signed(to_signed(a) >> s);
    }

    constexpr bool operator==(const Ring& o) const { return bits_ == o.bits_; }

private:
    unsigned bits_;
    ring_t mask_;
};

/// Fixed-point encoding of reals into Z_{2^l}: encode(x) = round(x*2^f) mod 2^l,
/// rounding half away from zero. Representable range is |x| < 2^(l-f-1).
class FixedPointCodec {
public:
    explicit FixedPointCodec(Ring ring = Ring(32), unsigned frac_bits = 13)
        : ring_(ring), frac_bits_(frac_bits) {
        if (frac_bits >= ring.bits())
            throw RangeError("fractional bits must be smaller than the ring width");
    }

    const Ring& ring() const { return ring_; }
    unsigned frac_bits() const { return frac_bits_; }

    ring_t encode(double x) const {
        double limit = std::ldexp(1.0, static_cast<int>(ring_.bits() - frac_bits_ - 1));
        if (!(std::fabs(x) < limit))
            throw RangeError("fixed-point encode overflow: |" + std::to_string(x) +
                             "| >= " + std::to_string(limit));
        double scaled = std::ldexp(x, static_cast<int>(frac_bits_));
        return ring_.from_signed(static_cast<std::int64_t>(std::llround(scaled)));
    }

    double decode(ring_t e) const { return decode_at(e, static_cast<int>(frac_bits_)); }

    /// Decode a value that sits at an explicit scale 2^scale (products live at 2^{2f}).
    double decode_at(ring_t e, int scale) const {
        return std::ldexp(static_cast<double>(ring_.to_signed(e)), -scale);
    }

private:
    Ring ring_;
    unsigned frac_bits_;
};

} // namespace cbnn
