#include "cbnn/prf.hpp"

#include <cstring>
#include <stdexcept>

#include <openssl/evp.h>

namespace cbnn {

namespace {
EVP_CIPHER_CTX* make_ctx(const PrfKey& key) {
    EVP_CIPHER_CTX* ctx = EVP_CIPHER_CTX_new();
    if (!ctx || EVP_EncryptInit_ex(ctx, EVP_aes_128_ecb(), nullptr, key.data(), nullptr) != 1)
        throw std::runtime_error("AES init failed");
    EVP_CIPHER_CTX_set_padding(ctx, 0);
    return ctx;
}

void put_u64(std::uint8_t* p, std::uint64_t v) {
    for (int i = 0; i < 8; ++i) p[i] = static_cast<std::uint8_t>(v >> (8 * i));
}

std::uint64_t get_u64(const std::uint8_t* p) {
    std::uint64_t v = 0;
    for (int i = 0; i < 8; ++i) v |= static_cast<std::uint64_t>(p[i]) << (8 * i);
    return v;
}
} // namespace

Aes128Prf::Aes128Prf(const PrfKey& key) : ctx_(make_ctx(key)) {}

Aes128Prf::Aes128Prf(Aes128Prf&& o) noexcept : ctx_(o.ctx_) { o.ctx_ = nullptr; }

Aes128Prf& Aes128Prf::operator=(Aes128Prf&& o) noexcept {
    if (this != &o) {
        if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
        ctx_ = o.ctx_;
        o.ctx_ = nullptr;
    }
    return *this;
}

Aes128Prf::~Aes128Prf() {
    if (ctx_) EVP_CIPHER_CTX_free(static_cast<EVP_CIPHER_CTX*>(ctx_));
}

std::vector<std::uint64_t> Aes128Prf::words(std::uint8_t kind, std::uint64_t counter,
                                            std::size_t n) const {
    std::size_t blocks = (n + 1) / 2;
    std::vector<std::uint8_t> in(blocks * 16, 0), out(blocks * 16 + 16);
    for (std::size_t b = 0; b < blocks; ++b) {
        std::uint8_t* p = in.data() + b * 16;
        p[0] = kind;
        put_u64(p + 1, counter);
        p[9] = static_cast<std::uint8_t>(b);
        p[10] = static_cast<std::uint8_t>(b >> 8);
        p[11] = static_cast<std::uint8_t>(b >> 16);
        p[12] = static_cast<std::uint8_t>(b >> 24);
    }
    int len = 0;
    auto* ctx = static_cast<EVP_CIPHER_CTX*>(ctx_);
    if (EVP_EncryptUpdate(ctx, out.data(), &len, in.data(), static_cast<int>(in.size())) != 1)
        throw std::runtime_error("AES encrypt failed");
    std::vector<std::uint64_t> words(n);
    for (std::size_t i = 0; i < n; ++i) words[i] = get_u64(out.data() + i * 8);
    return words;
}

PrfKey derive_key(const PrfKey& master, std::uint64_t index) {
    Aes128Prf prf(master);
    auto w = prf.words(0xFF, index, 2);
    PrfKey k;
    put_u64(k.data(), w[0]);
    put_u64(k.data() + 8, w[1]);
    return k;
}

PrfKey key_from_seed(std::uint64_t seed) {
    PrfKey k{};
    put_u64(k.data(), seed);
    put_u64(k.data() + 8, ~seed);
    return k;
}

} // namespace cbnn
