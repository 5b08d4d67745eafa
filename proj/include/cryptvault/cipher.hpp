#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <memory>

#include <openssl/evp.h>

#include "cryptvault/bytes.hpp"
#include "cryptvault/errors.hpp"

namespace cryptvault {

inline constexpr std::size_t kBlockSize = 16;
inline constexpr std::uint8_t kAlgorithmAes128Cbc = 1;

struct CipherConfig {
    std::size_t block_size = kBlockSize;
    std::uint8_t algorithm_id = kAlgorithmAes128Cbc;
};

// Per-file key material. The IV is derived from the key envelope, never
// stored next to the ciphertext.
struct RawKey {
    std::array<std::uint8_t, kBlockSize> key_bytes{};
    std::array<std::uint8_t, kBlockSize> iv_bytes{};
};

// Smallest multiple of 16 strictly greater than n. A full padding block is
// emitted even for block-aligned input, so expansion is always 1..16 bytes.
constexpr std::uint64_t padded_size(std::uint64_t n) noexcept {
    return n / kBlockSize * kBlockSize + kBlockSize;
}

// Append k bytes of value k, k = 16 - (n mod 16), k in [1,16].
inline Bytes pad(ByteView plaintext) {
    const auto k = static_cast<std::uint8_t>(kBlockSize - plaintext.size() % kBlockSize);
    Bytes out(plaintext.begin(), plaintext.end());
    out.insert(out.end(), k, k);
    return out;
}

inline Bytes unpad(ByteView padded) {
    if (padded.empty() || padded.size() % kBlockSize != 0)
        throw InvalidPadding("padded length is not a positive multiple of the block size");
    const std::uint8_t k = padded.back();
    if (k < 1 || k > kBlockSize)
        throw InvalidPadding();
    for (std::size_t i = padded.size() - k; i < padded.size(); ++i)
        if (padded[i] != k)
            throw InvalidPadding();
    return Bytes(padded.begin(), padded.end() - k);
}

namespace detail {

struct EvpCtxDeleter {
    void operator()(EVP_CIPHER_CTX* p) const noexcept { EVP_CIPHER_CTX_free(p); }
};
using EvpCtx = std::unique_ptr<EVP_CIPHER_CTX, EvpCtxDeleter>;

inline const EVP_CIPHER* cipher_for(const CipherConfig& cfg) {
    if (cfg.block_size != kBlockSize)
        throw UnsupportedAlgorithm("unsupported block size");
    if (cfg.algorithm_id != kAlgorithmAes128Cbc)
        throw UnsupportedAlgorithm("unknown algorithm id " + std::to_string(cfg.algorithm_id));
    return EVP_aes_128_cbc();
}

// Raw CBC transform without library padding; input must be block-aligned.
inline Bytes cbc_transform(ByteView input, const RawKey& key, const CipherConfig& cfg, bool encrypting) {
    EvpCtx ctx(EVP_CIPHER_CTX_new());
    if (!ctx)
        throw Error("cipher context allocation failed");
    if (EVP_CipherInit_ex(ctx.get(), cipher_for(cfg), nullptr, key.key_bytes.data(),
                          key.iv_bytes.data(), encrypting ? 1 : 0) != 1)
        throw Error("cipher init failed");
    EVP_CIPHER_CTX_set_padding(ctx.get(), 0);

    Bytes out(input.size() + kBlockSize);
    std::size_t written = 0;
    std::size_t consumed = 0;
    constexpr std::size_t kChunk = std::size_t{1} << 28;
    while (consumed < input.size()) {
        const auto n = static_cast<int>(std::min(kChunk, input.size() - consumed));
        int len = 0;
        if (EVP_CipherUpdate(ctx.get(), out.data() + written, &len, input.data() + consumed, n) != 1)
            throw Error("cipher update failed");
        written += static_cast<std::size_t>(len);
        consumed += static_cast<std::size_t>(n);
    }
    int len = 0;
    if (EVP_CipherFinal_ex(ctx.get(), out.data() + written, &len) != 1)
        throw Error("cipher finalization failed");
    written += static_cast<std::size_t>(len);
    out.resize(written);
    return out;
}

} // namespace detail

// Ciphertext is exactly padded_size(|plaintext|) bytes: no IV, header or tag
// inside the file. Deterministic for a fixed (plaintext, key, iv).
inline Bytes encrypt(ByteView plaintext, const RawKey& key, const CipherConfig& cfg = {}) {
    return detail::cbc_transform(pad(plaintext), key, cfg, true);
}

inline Bytes decrypt(ByteView ciphertext, const RawKey& key, const CipherConfig& cfg = {}) {
    if (ciphertext.empty() || ciphertext.size() % kBlockSize != 0)
        throw MalformedCiphertext("ciphertext length is not a positive multiple of the block size");
    return unpad(detail::cbc_transform(ciphertext, key, cfg, false));
}

} // namespace cryptvault
