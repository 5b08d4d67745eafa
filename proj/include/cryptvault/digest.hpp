#pragma once

#include <array>
#include <cstdint>
#include <string_view>

#include <openssl/evp.h>

#include "cryptvault/bytes.hpp"
#include "cryptvault/errors.hpp"

namespace cryptvault {

using Digest = std::array<std::uint8_t, 32>;

inline Digest sha256(ByteView data) {
    Digest out{};
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), out.data(), &len, EVP_sha256(), nullptr) != 1 ||
        len != out.size())
        throw Error("sha256 computation failed");
    return out;
}

inline Digest sha256(std::string_view s) {
    return sha256(as_bytes_view(s));
}

} // namespace cryptvault
