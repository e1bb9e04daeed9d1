#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "cbnn/shares.hpp"
#include "cbnn/tensor.hpp"

namespace cbnn::test {

inline std::function<ring_t()> zero_rng() {
    return [] { return ring_t{0}; };
}

inline std::function<ring_t()> seeded_rng(std::uint64_t seed) {
    auto gen = std::make_shared<std::mt19937_64>(seed);
    return [gen] { return (*gen)(); };
}

/// Chi-square statistic of observed counts against a uniform expectation.
inline double chi_square(const std::vector<std::uint64_t>& counts, double total) {
    double expected = total / static_cast<double>(counts.size());
    double stat = 0.0;
    for (auto c : counts) {
        double d = static_cast<double>(c) - expected;
        stat += d * d / expected;
    }
    return stat;
}

/// Wilson-Hilferty upper critical value of chi-square with df degrees of
/// freedom; z is the standard normal quantile (2.3263 for alpha = 0.01).
inline double chi_square_critical(double df, double z = 2.326348) {
    double t = 2.0 / (9.0 * df);
    double c = 1.0 - t + z * std::sqrt(t);
    return df * c * c * c;
}

/// Uniformity check over the low `bins`-sized histogram of sampled values.
inline bool uniform_low_bits(const std::vector<ring_t>& samples, std::size_t bins = 256,
                             double alpha_z = 2.326348) {
    std::vector<std::uint64_t> counts(bins, 0);
    for (ring_t s : samples) ++counts[s % bins];
    double stat = chi_square(counts, static_cast<double>(samples.size()));
    return stat < chi_square_critical(static_cast<double>(bins - 1), alpha_z);
}

/// Fixed-components construction of replicated shares (exhaustive truth tables).
inline std::array<BitShare, 3> bit_shares_from_components(const BitTensor& c0,
                                                          const BitTensor& c1,
                                                          const BitTensor& c2) {
    std::array<BitTensor, 3> c{c0, c1, c2};
    std::array<BitShare, 3> out;
    for (int i = 0; i < 3; ++i) out[i] = BitShare{PartyId{i}, c[i], c[(i + 1) % 3]};
    return out;
}

} // namespace cbnn::test
