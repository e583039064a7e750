// core.hpp -- shared enums, the product reference type, error hierarchy and
// small string helpers used across the library.

#ifndef SDWAN_CORE_HPP
#define SDWAN_CORE_HPP

#include <algorithm>
#include <cctype>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace sdwan {

// ---------------------------------------------------------------------------
// Enumerations
// ---------------------------------------------------------------------------

// A channel names where an artifact can be observed: a search-engine filter,
// a protocol banner, or a fetched asset.
enum class Channel {
    http_title,
    favicon_hash,
    body_sha256,
    tls_cert_field,
    ssh_issue,
    snmp_sysdescr,
    websocket_payload,
    uri_pattern,
    html_pattern,
    json_field,
    http_header,
};

inline constexpr Channel kAllChannels[] = {
    Channel::http_title,     Channel::favicon_hash,  Channel::body_sha256,
    Channel::tls_cert_field, Channel::ssh_issue,     Channel::snmp_sysdescr,
    Channel::websocket_payload, Channel::uri_pattern, Channel::html_pattern,
    Channel::json_field,     Channel::http_header,
};

enum class MatchKind { exact, substring, mask, regex, hash_equal };

enum class Confidence { Certain, Firm, Tentative };

enum class ProductClass {
    orchestrator, edge, analytics, portal, controller, firewall, appliance, switch_
};

enum class LeakKind { direct, indirect, package, ui_component };

enum class Engine { shodan, censys };

enum class CandidateSource { shodan, censys, replay };

// Certain is the strongest tier; smaller rank = stronger.
inline int tier_rank(Confidence c) { return static_cast<int>(c); }

// true when a is at least as confident as b.
inline bool at_least(Confidence a, Confidence b) {
    return tier_rank(a) <= tier_rank(b);
}

// ---------------------------------------------------------------------------
// Enum <-> string (the spellings used in corpus files and reports)
// ---------------------------------------------------------------------------

inline std::string to_string(Channel c) {
    switch (c) {
    case Channel::http_title: return "http_title";
    case Channel::favicon_hash: return "favicon_hash";
    case Channel::body_sha256: return "body_sha256";
    case Channel::tls_cert_field: return "tls_cert_field";
    case Channel::ssh_issue: return "ssh_issue";
    case Channel::snmp_sysdescr: return "snmp_sysdescr";
    case Channel::websocket_payload: return "websocket_payload";
    case Channel::uri_pattern: return "uri_pattern";
    case Channel::html_pattern: return "html_pattern";
    case Channel::json_field: return "json_field";
    case Channel::http_header: return "http_header";
    }
    return "?";
}

inline std::string to_string(MatchKind k) {
    switch (k) {
    case MatchKind::exact: return "exact";
    case MatchKind::substring: return "substring";
    case MatchKind::mask: return "mask";
    case MatchKind::regex: return "regex";
    case MatchKind::hash_equal: return "hash_equal";
    }
    return "?";
}

inline std::string to_string(Confidence c) {
    switch (c) {
    case Confidence::Certain: return "Certain";
    case Confidence::Firm: return "Firm";
    case Confidence::Tentative: return "Tentative";
    }
    return "?";
}

inline std::string to_string(ProductClass c) {
    switch (c) {
    case ProductClass::orchestrator: return "orchestrator";
    case ProductClass::edge: return "edge";
    case ProductClass::analytics: return "analytics";
    case ProductClass::portal: return "portal";
    case ProductClass::controller: return "controller";
    case ProductClass::firewall: return "firewall";
    case ProductClass::appliance: return "appliance";
    case ProductClass::switch_: return "switch";
    }
    return "?";
}

inline std::string to_string(LeakKind k) {
    switch (k) {
    case LeakKind::direct: return "direct";
    case LeakKind::indirect: return "indirect";
    case LeakKind::package: return "package";
    case LeakKind::ui_component: return "ui_component";
    }
    return "?";
}

inline std::string to_string(Engine e) {
    return e == Engine::shodan ? "shodan" : "censys";
}

inline std::string to_string(CandidateSource s) {
    switch (s) {
    case CandidateSource::shodan: return "shodan";
    case CandidateSource::censys: return "censys";
    case CandidateSource::replay: return "replay";
    }
    return "?";
}

template <typename E>
std::optional<E> enum_from_string(std::string_view) = delete;

template <>
inline std::optional<Channel> enum_from_string<Channel>(std::string_view s) {
    for (Channel c : kAllChannels)
        if (to_string(c) == s) return c;
    return std::nullopt;
}

template <>
inline std::optional<MatchKind> enum_from_string<MatchKind>(std::string_view s) {
    for (MatchKind k : {MatchKind::exact, MatchKind::substring, MatchKind::mask,
                        MatchKind::regex, MatchKind::hash_equal})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

template <>
inline std::optional<Confidence> enum_from_string<Confidence>(std::string_view s) {
    // Tiers are accepted case-insensitively: CLI flags use lowercase.
    std::string low(s);
    std::transform(low.begin(), low.end(), low.begin(),
                   [](unsigned char ch) { return std::tolower(ch); });
    if (low == "certain") return Confidence::Certain;
    if (low == "firm") return Confidence::Firm;
    if (low == "tentative") return Confidence::Tentative;
    return std::nullopt;
}

template <>
inline std::optional<ProductClass> enum_from_string<ProductClass>(std::string_view s) {
    for (ProductClass c : {ProductClass::orchestrator, ProductClass::edge,
                           ProductClass::analytics, ProductClass::portal,
                           ProductClass::controller, ProductClass::firewall,
                           ProductClass::appliance, ProductClass::switch_})
        if (to_string(c) == s) return c;
    return std::nullopt;
}

template <>
inline std::optional<LeakKind> enum_from_string<LeakKind>(std::string_view s) {
    for (LeakKind k : {LeakKind::direct, LeakKind::indirect, LeakKind::package,
                       LeakKind::ui_component})
        if (to_string(k) == s) return k;
    return std::nullopt;
}

template <>
inline std::optional<Engine> enum_from_string<Engine>(std::string_view s) {
    if (s == "shodan") return Engine::shodan;
    if (s == "censys") return Engine::censys;
    return std::nullopt;
}

// ---------------------------------------------------------------------------
// ProductRef
// ---------------------------------------------------------------------------

struct ProductRef {
    std::string vendor;
    std::string product;
    ProductClass product_class = ProductClass::appliance;

    friend bool operator==(const ProductRef& a, const ProductRef& b) {
        return a.vendor == b.vendor && a.product == b.product &&
               a.product_class == b.product_class;
    }
    // Identity is the (vendor, product) pair; class must agree set-wide.
    bool same_pair(const ProductRef& o) const {
        return vendor == o.vendor && product == o.product;
    }
    std::string display() const { return vendor + " " + product; }
};

// ---------------------------------------------------------------------------
// Errors
// ---------------------------------------------------------------------------

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// corpus / fixture files
struct ParseError : Error { using Error::Error; };
struct ValidationError : Error { using Error::Error; };

// query synthesis
struct UnrenderableChannel : Error { using Error::Error; };
struct UnsupportedCombination : Error { using Error::Error; };

// harvest
struct QueryParseError : Error { using Error::Error; };
struct AuthError : Error { using Error::Error; };
struct QuotaError : Error { using Error::Error; };
struct TransportError : Error { using Error::Error; };

// probing
struct ScopeViolation : Error { using Error::Error; };
struct ConnectTimeout : Error { using Error::Error; };
struct TlsError : Error { using Error::Error; };
struct ProtocolError : Error { using Error::Error; };
struct HandshakeRejected : Error { using Error::Error; };
struct DecodeError : Error { using Error::Error; };

// assessment
struct VersionParseError : Error { using Error::Error; };
struct MissingMapping : Error { using Error::Error; };

// ---------------------------------------------------------------------------
// Small string helpers
// ---------------------------------------------------------------------------

inline std::string to_lower(std::string_view s) {
    std::string out(s);
    std::transform(out.begin(), out.end(), out.begin(),
                   [](unsigned char c) { return std::tolower(c); });
    return out;
}

inline std::string trim(std::string_view s) {
    size_t b = 0, e = s.size();
    while (b < e && std::isspace(static_cast<unsigned char>(s[b]))) ++b;
    while (e > b && std::isspace(static_cast<unsigned char>(s[e - 1]))) --e;
    return std::string(s.substr(b, e - b));
}

inline bool contains_ci(std::string_view haystack, std::string_view needle) {
    if (needle.empty()) return true;
    std::string h = to_lower(haystack), n = to_lower(needle);
    return h.find(n) != std::string::npos;
}

inline bool is_lower_hex(std::string_view s, size_t len) {
    if (s.size() != len) return false;
    return std::all_of(s.begin(), s.end(), [](char c) {
        return (c >= '0' && c <= '9') || (c >= 'a' && c <= 'f');
    });
}

inline std::vector<std::string> split_lines(std::string_view text) {
    std::vector<std::string> out;
    size_t pos = 0;
    while (pos <= text.size()) {
        size_t nl = text.find('\n', pos);
        if (nl == std::string_view::npos) {
            out.emplace_back(text.substr(pos));
            break;
        }
        std::string line(text.substr(pos, nl - pos));
        if (!line.empty() && line.back() == '\r') line.pop_back();
        out.push_back(std::move(line));
        pos = nl + 1;
    }
    return out;
}

} // namespace sdwan

#endif // SDWAN_CORE_HPP
