// hash.hpp -- hashing primitives behind the search-engine fleet filters:
// MurmurHash3 x86 32-bit over wrapped base64 (favicon filters) and SHA-256
// (body hash filters). SHA digests come from OpenSSL; Murmur3 is implemented
// here since no system library provides it.

#ifndef SDWAN_HASH_HPP
#define SDWAN_HASH_HPP

#include <cstdint>
#include <cstring>
#include <span>
#include <string>

#include <openssl/evp.h>

#include "sdwan/core.hpp"

namespace sdwan {

// MurmurHash3 x86_32 (public-domain algorithm by Austin Appleby).
inline std::uint32_t murmur3_x86_32(std::span<const std::uint8_t> data,
                                    std::uint32_t seed = 0) {
    const std::uint32_t c1 = 0xcc9e2d51u;
    const std::uint32_t c2 = 0x1b873593u;
    std::uint32_t h = seed;

    const size_t nblocks = data.size() / 4;
    for (size_t i = 0; i < nblocks; ++i) {
        std::uint32_t k;
        std::memcpy(&k, data.data() + i * 4, 4); // little-endian hosts only
        k *= c1;
        k = (k << 15) | (k >> 17);
        k *= c2;
        h ^= k;
        h = (h << 13) | (h >> 19);
        h = h * 5 + 0xe6546b64u;
    }

    const std::uint8_t* tail = data.data() + nblocks * 4;
    std::uint32_t k1 = 0;
    switch (data.size() & 3) {
    case 3: k1 ^= static_cast<std::uint32_t>(tail[2]) << 16; [[fallthrough]];
    case 2: k1 ^= static_cast<std::uint32_t>(tail[1]) << 8; [[fallthrough]];
    case 1:
        k1 ^= tail[0];
        k1 *= c1;
        k1 = (k1 << 15) | (k1 >> 17);
        k1 *= c2;
        h ^= k1;
    }

    h ^= static_cast<std::uint32_t>(data.size());
    h ^= h >> 16;
    h *= 0x85ebca6bu;
    h ^= h >> 13;
    h *= 0xc2b2ae35u;
    h ^= h >> 16;
    return h;
}

inline std::string base64_encode(std::span<const std::uint8_t> data) {
    static const char tbl[] =
        "ABCDEFGHIJKLMNOPQRSTUVWXYZabcdefghijklmnopqrstuvwxyz0123456789+/";
    std::string out;
    out.reserve((data.size() + 2) / 3 * 4);
    size_t i = 0;
    for (; i + 3 <= data.size(); i += 3) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8) | data[i + 2];
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += tbl[v & 63];
    }
    if (i + 1 == data.size()) {
        std::uint32_t v = data[i] << 16;
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += "==";
    } else if (i + 2 == data.size()) {
        std::uint32_t v = (data[i] << 16) | (data[i + 1] << 8);
        out += tbl[(v >> 18) & 63];
        out += tbl[(v >> 12) & 63];
        out += tbl[(v >> 6) & 63];
        out += '=';
    }
    return out;
}

// Base64 with 76-column wrapping, every line newline-terminated; empty input
// encodes to the empty string. This is the exact text the favicon filters
// hash, so the values below interoperate with rendered queries.
inline std::string base64_wrapped76(std::span<const std::uint8_t> data) {
    if (data.empty()) return {};
    std::string b64 = base64_encode(data);
    std::string out;
    out.reserve(b64.size() + b64.size() / 76 + 2);
    for (size_t i = 0; i < b64.size(); i += 76) {
        out.append(b64, i, std::min<size_t>(76, b64.size() - i));
        out += '\n';
    }
    return out;
}

inline std::string sha256_hex(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(),
                   nullptr) != 1)
        throw Error("sha256 digest failed");
    static const char hex[] = "0123456789abcdef";
    std::string out;
    out.reserve(2 * len);
    for (unsigned int i = 0; i < len; ++i) {
        out += hex[digest[i] >> 4];
        out += hex[digest[i] & 0xf];
    }
    return out;
}

inline std::string sha1_raw(std::span<const std::uint8_t> data) {
    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int len = 0;
    if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha1(),
                   nullptr) != 1)
        throw Error("sha1 digest failed");
    return std::string(reinterpret_cast<char*>(digest), len);
}

inline std::span<const std::uint8_t> as_bytes(std::string_view s) {
    return {reinterpret_cast<const std::uint8_t*>(s.data()), s.size()};
}

// Favicon filter value: MurmurHash3 of the wrapped base64 text of the icon
// bytes, reported as a signed 32-bit integer.
inline std::int32_t favicon_hash(std::span<const std::uint8_t> icon) {
    std::string text = base64_wrapped76(icon);
    return static_cast<std::int32_t>(murmur3_x86_32(as_bytes(text)));
}

} // namespace sdwan

#endif // SDWAN_HASH_HPP
