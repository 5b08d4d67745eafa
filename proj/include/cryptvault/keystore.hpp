#pragma once

#include <array>
#include <chrono>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <string>
#include <string_view>

#include <openssl/rand.h>

#include "cryptvault/bytes.hpp"
#include "cryptvault/cipher.hpp"
#include "cryptvault/digest.hpp"
#include "cryptvault/errors.hpp"
#include "cryptvault/fs.hpp"

namespace cryptvault {

inline constexpr std::size_t kEnvelopeSize = 141;
inline constexpr std::array<std::uint8_t, 4> kEnvelopeMagic = {'C', 'V', 'K', 'E'};
inline constexpr std::uint8_t kEnvelopeVersion = 1;
inline constexpr std::size_t kEnvelopeReserved = 47;

// Fixed-size key record, stored apart from the ciphertext. Serialized layout:
//   magic[4] version[1] algorithm_id[1] file_id_hash[32] key_bytes[16]
//   created_at[8, big-endian] plaintext_checksum[32] reserved[47, zero]
// which sums to 141 bytes for every file regardless of its size or type.
struct KeyEnvelope {
    std::uint8_t version = kEnvelopeVersion;
    std::uint8_t algorithm_id = kAlgorithmAes128Cbc;
    Digest file_id_hash{};
    std::array<std::uint8_t, kBlockSize> key_bytes{};
    std::uint64_t created_at = 0;
    Digest plaintext_checksum{};

    friend bool operator==(const KeyEnvelope&, const KeyEnvelope&) = default;
};

static_assert(4 + 1 + 1 + sizeof(Digest) + kBlockSize + 8 + sizeof(Digest) + kEnvelopeReserved ==
              kEnvelopeSize);

inline KeyEnvelope generate_key(std::string_view file_id, const Digest& plaintext_digest,
                                const CipherConfig& cfg) {
    if (file_id.empty())
        throw InvalidArgument("file id must be non-empty");
    if (cfg.block_size != kBlockSize)
        throw UnsupportedAlgorithm("unsupported block size");
    KeyEnvelope env;
    env.algorithm_id = cfg.algorithm_id;
    env.file_id_hash = sha256(file_id);
    env.plaintext_checksum = plaintext_digest;
    env.created_at = static_cast<std::uint64_t>(
        std::chrono::duration_cast<std::chrono::seconds>(
            std::chrono::system_clock::now().time_since_epoch())
            .count());
    if (RAND_bytes(env.key_bytes.data(), static_cast<int>(env.key_bytes.size())) != 1)
        throw Error("secure random generator failed");
    return env;
}

inline Bytes serialize_envelope(const KeyEnvelope& env) {
    Bytes out(kEnvelopeSize, 0);
    std::uint8_t* p = out.data();
    std::memcpy(p, kEnvelopeMagic.data(), kEnvelopeMagic.size());
    p += kEnvelopeMagic.size();
    *p++ = env.version;
    *p++ = env.algorithm_id;
    std::memcpy(p, env.file_id_hash.data(), env.file_id_hash.size());
    p += env.file_id_hash.size();
    std::memcpy(p, env.key_bytes.data(), env.key_bytes.size());
    p += env.key_bytes.size();
    put_u64_be(env.created_at, p);
    p += 8;
    std::memcpy(p, env.plaintext_checksum.data(), env.plaintext_checksum.size());
    // remaining 47 bytes stay zero
    return out;
}

inline KeyEnvelope parse_envelope(ByteView bytes) {
    if (bytes.size() != kEnvelopeSize)
        throw BadLength("key envelope must be " + std::to_string(kEnvelopeSize) +
                        " bytes, got " + std::to_string(bytes.size()));
    if (std::memcmp(bytes.data(), kEnvelopeMagic.data(), kEnvelopeMagic.size()) != 0)
        throw BadMagic("key envelope magic mismatch");
    KeyEnvelope env;
    const std::uint8_t* p = bytes.data() + kEnvelopeMagic.size();
    env.version = *p++;
    if (env.version > kEnvelopeVersion)
        throw UnsupportedVersion("key envelope version " + std::to_string(env.version) +
                                 " not supported");
    env.algorithm_id = *p++;
    std::memcpy(env.file_id_hash.data(), p, env.file_id_hash.size());
    p += env.file_id_hash.size();
    std::memcpy(env.key_bytes.data(), p, env.key_bytes.size());
    p += env.key_bytes.size();
    env.created_at = get_u64_be(p);
    p += 8;
    std::memcpy(env.plaintext_checksum.data(), p, env.plaintext_checksum.size());
    return env;
}

// IV = first 16 bytes of sha256(file_id_hash || created_at || tag). Fully
// determined by envelope fields, so decryption needs nothing from the
// ciphertext file; keys are fresh per envelope, which makes this safe.
inline std::array<std::uint8_t, kBlockSize> derive_iv(const KeyEnvelope& env) {
    Bytes material;
    material.reserve(env.file_id_hash.size() + 8 + 2);
    material.insert(material.end(), env.file_id_hash.begin(), env.file_id_hash.end());
    std::uint8_t ts[8];
    put_u64_be(env.created_at, ts);
    material.insert(material.end(), ts, ts + 8);
    material.push_back('i');
    material.push_back('v');
    const Digest d = sha256(ByteView(material));
    std::array<std::uint8_t, kBlockSize> iv{};
    std::memcpy(iv.data(), d.data(), iv.size());
    return iv;
}

inline RawKey raw_key(const KeyEnvelope& env) {
    return RawKey{env.key_bytes, derive_iv(env)};
}

// Key files live under a root that must stay disjoint from the data root
// (removable-medium role). Filename is hex(file_id_hash), so the key store
// leaks no logical names.
class KeyStore {
public:
    KeyStore(FsAdapter& fs, std::filesystem::path key_root, std::filesystem::path data_root)
        : fs_(&fs), key_root_(std::move(key_root)) {
        ensure_disjoint_roots(data_root, key_root_);
    }

    const std::filesystem::path& root() const { return key_root_; }

    std::filesystem::path key_path(std::string_view file_id) const {
        const Digest h = sha256(file_id);
        return key_root_ / to_hex(ByteView(h.data(), h.size()));
    }

    std::filesystem::path store(const KeyEnvelope& env) {
        const std::filesystem::path p =
            key_root_ / to_hex(ByteView(env.file_id_hash.data(), env.file_id_hash.size()));
        fs_->write_file_atomic(p, ByteView(serialize_envelope(env)));
        return p;
    }

    KeyEnvelope load(std::string_view file_id) const {
        const auto p = key_path(file_id);
        const auto blob = fs_->read_file(p);
        if (!blob)
            throw KeyNotFound("key not found for '" + std::string(file_id) + "'");
        KeyEnvelope env = parse_envelope(ByteView(*blob));
        if (env.file_id_hash != sha256(file_id))
            throw IntegrityFailure("key envelope does not match file id '" +
                                   std::string(file_id) + "'");
        return env;
    }

    bool remove(std::string_view file_id) { return fs_->remove(key_path(file_id)); }

private:
    FsAdapter* fs_;
    std::filesystem::path key_root_;
};

} // namespace cryptvault
