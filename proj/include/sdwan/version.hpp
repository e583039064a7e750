// version.hpp -- parsing and ordering of the heterogeneous appliance version
// strings that appear in banners, asset names and vendor catalogs: plain
// dotted versions, dotted-with-revision forms like 9.1.2r142, vendor release
// tags like R7_3_QA_P1_D1, and train-suffixed forms like 4.20.5F.

#ifndef SDWAN_VERSION_HPP
#define SDWAN_VERSION_HPP

#include <cstdint>
#include <string>
#include <variant>
#include <vector>

#include "sdwan/core.hpp"

namespace sdwan {

enum class Scheme { dotted, dotted_rev, release_tag, suffixed };

inline std::string to_string(Scheme s) {
    switch (s) {
    case Scheme::dotted: return "dotted";
    case Scheme::dotted_rev: return "dotted_rev";
    case Scheme::release_tag: return "release_tag";
    case Scheme::suffixed: return "suffixed";
    }
    return "?";
}

inline std::optional<Scheme> scheme_from_string(std::string_view s) {
    for (Scheme v : {Scheme::dotted, Scheme::dotted_rev, Scheme::release_tag,
                     Scheme::suffixed})
        if (to_string(v) == s) return v;
    return std::nullopt;
}

// One token of a version string: a non-negative integer or an alpha run.
using VersionToken = std::variant<std::int64_t, std::string>;

struct VersionId {
    std::string raw;
    std::vector<VersionToken> segments;
    Scheme scheme = Scheme::dotted;

    friend bool operator==(const VersionId& a, const VersionId& b) {
        return a.scheme == b.scheme && a.segments == b.segments;
    }
};

enum class Ordering { Less, Equal, Greater, Incomparable };

inline std::string to_string(Ordering o) {
    switch (o) {
    case Ordering::Less: return "Less";
    case Ordering::Equal: return "Equal";
    case Ordering::Greater: return "Greater";
    case Ordering::Incomparable: return "Incomparable";
    }
    return "?";
}

namespace detail {

// Leading v/V before a digit is presentation, not version content.
inline std::string_view strip_version_prefix(std::string_view s) {
    if (s.size() >= 2 && (s[0] == 'v' || s[0] == 'V') &&
        std::isdigit(static_cast<unsigned char>(s[1])))
        return s.substr(1);
    return s;
}

// Split on '.', '_', '-' and on every digit/alpha boundary. Other characters
// also act as separators so "6.2 (build 7)" tokenizes without surprises.
inline std::vector<VersionToken> tokenize_version(std::string_view s) {
    std::vector<VersionToken> out;
    size_t i = 0;
    while (i < s.size()) {
        unsigned char c = s[i];
        if (std::isdigit(c)) {
            size_t j = i;
            while (j < s.size() && std::isdigit(static_cast<unsigned char>(s[j])))
                ++j;
            out.emplace_back(
                static_cast<std::int64_t>(std::stoll(std::string(s.substr(i, j - i)))));
            i = j;
        } else if (std::isalpha(c)) {
            size_t j = i;
            while (j < s.size() && std::isalpha(static_cast<unsigned char>(s[j])))
                ++j;
            out.emplace_back(std::string(s.substr(i, j - i)));
            i = j;
        } else {
            ++i;
        }
    }
    return out;
}

} // namespace detail

// Guess the scheme from the string's shape. Used when loading catalog files,
// which carry bare version strings.
inline Scheme classify_scheme(std::string_view raw) {
    std::string trimmed = trim(raw);
    std::string_view s = detail::strip_version_prefix(trimmed);
    auto toks = detail::tokenize_version(s);
    size_t alpha = 0;
    for (const auto& t : toks)
        if (std::holds_alternative<std::string>(t)) ++alpha;
    if (alpha == 0) return Scheme::dotted;
    if (!s.empty() && std::isalpha(static_cast<unsigned char>(s[0])))
        return Scheme::release_tag;
    if (alpha == 1 && std::holds_alternative<std::string>(toks.back()) &&
        std::get<std::string>(toks.back()).size() <= 2)
        return Scheme::suffixed;
    return Scheme::dotted_rev;
}

inline VersionId parse_version(std::string_view raw, Scheme scheme) {
    std::string trimmed = trim(raw);
    std::string_view body = detail::strip_version_prefix(trimmed);
    auto segments = detail::tokenize_version(body);
    bool has_digit = false;
    for (const auto& t : segments)
        if (std::holds_alternative<std::int64_t>(t)) has_digit = true;
    if (!has_digit)
        throw VersionParseError("no digits in version string: '" + trimmed + "'");
    return VersionId{trimmed, std::move(segments), scheme};
}

inline VersionId parse_version(std::string_view raw) {
    return parse_version(raw, classify_scheme(raw));
}

// Lexicographic over segments: numbers by value, alpha runs case-insensitive,
// a missing segment before any present one, alpha against numeric refuses.
// Different schemes are never compared.
inline Ordering compare_versions(const VersionId& a, const VersionId& b) {
    if (a.scheme != b.scheme) return Ordering::Incomparable;
    const size_t n = std::max(a.segments.size(), b.segments.size());
    for (size_t i = 0; i < n; ++i) {
        if (i >= a.segments.size()) return Ordering::Less;
        if (i >= b.segments.size()) return Ordering::Greater;
        const auto& x = a.segments[i];
        const auto& y = b.segments[i];
        const bool xn = std::holds_alternative<std::int64_t>(x);
        const bool yn = std::holds_alternative<std::int64_t>(y);
        if (xn != yn) return Ordering::Incomparable;
        if (xn) {
            auto xv = std::get<std::int64_t>(x), yv = std::get<std::int64_t>(y);
            if (xv < yv) return Ordering::Less;
            if (xv > yv) return Ordering::Greater;
        } else {
            std::string xs = to_lower(std::get<std::string>(x));
            std::string ys = to_lower(std::get<std::string>(y));
            if (xs < ys) return Ordering::Less;
            if (xs > ys) return Ordering::Greater;
        }
    }
    return Ordering::Equal;
}

} // namespace sdwan

#endif // SDWAN_VERSION_HPP
