#pragma once

#include <array>
#include <cstdint>
#include <vector>

namespace cbnn {

using PrfKey = std::array<std::uint8_t, 16>;

/// Keyed PRF F(k, stream, counter) built from AES-128 in counter mode.
/// The input block is (kind, counter, block index); one block yields two
/// 64-bit words. Deterministic: the same (key, kind, counter) never produces
/// two different values.
class Aes128Prf {
public:
    explicit Aes128Prf(const PrfKey& key);
    Aes128Prf(const Aes128Prf&) = delete;
    Aes128Prf& operator=(const Aes128Prf&) = delete;
    Aes128Prf(Aes128Prf&&) noexcept;
    Aes128Prf& operator=(Aes128Prf&&) noexcept;
    ~Aes128Prf();

    /// n 64-bit words of the stream (kind, counter).
    std::vector<std::uint64_t> words(std::uint8_t kind, std::uint64_t counter,
                                     std::size_t n) const;

private:
    void* ctx_ = nullptr; // EVP_CIPHER_CTX
};

/// Derive a fresh key from a master key and an index (used for the out-of-band
/// seed setup: pairwise keys k_0..k_2 plus one private key per party).
PrfKey derive_key(const PrfKey& master, std::uint64_t index);

PrfKey key_from_seed(std::uint64_t seed);

} // namespace cbnn
