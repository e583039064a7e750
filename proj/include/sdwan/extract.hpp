// extract.hpp -- matches signatures against captured observations and pulls
// version leaks out of them with the corpus extractors.

#ifndef SDWAN_EXTRACT_HPP
#define SDWAN_EXTRACT_HPP

#include <algorithm>
#include <optional>
#include <regex>
#include <set>
#include <string>
#include <vector>

#include "sdwan/core.hpp"
#include "sdwan/filter.hpp"
#include "sdwan/hash.hpp"
#include "sdwan/probe.hpp"
#include "sdwan/signature.hpp"
#include "sdwan/version.hpp"

namespace sdwan {

struct LeakRecord {
    HostPort host;
    ProductRef product;
    std::string signature_id;
    std::string extractor_id;
    LeakKind kind = LeakKind::direct;
    Scheme scheme = Scheme::dotted;
    std::string raw;

    bool operator==(const LeakRecord&) const = default;
};

namespace detail {

// The value a matcher is checked against, if the observation carries one.
inline std::optional<std::string> matcher_subject(const Matcher& m,
                                                  const Observation& obs) {
    if (m.channel == obs.channel) {
        if (m.channel == Channel::tls_cert_field && !m.field_selector.empty()) {
            auto it = obs.meta.find(m.field_selector);
            if (it == obs.meta.end()) return std::nullopt;
            return it->second;
        }
        return obs.payload;
    }
    switch (m.channel) {
    case Channel::http_title: {
        if (obs.channel != Channel::html_pattern) return std::nullopt;
        auto it = obs.meta.find("title");
        if (it != obs.meta.end()) return it->second;
        return extract_title(obs.payload);
    }
    case Channel::favicon_hash: {
        auto it = obs.meta.find("favicon_hash");
        if (it == obs.meta.end()) return std::nullopt;
        return it->second;
    }
    case Channel::body_sha256:
        if (obs.channel != Channel::html_pattern) return std::nullopt;
        return sha256_hex(as_bytes(obs.payload));
    default:
        return std::nullopt;
    }
}

inline bool value_matches(const Matcher& m, const std::string& subject) {
    switch (m.kind) {
    case MatchKind::exact:
        return to_lower(subject) == to_lower(m.value);
    case MatchKind::substring:
        return contains_ci(subject, m.value);
    case MatchKind::mask:
        return wildcard_contains(subject, m.value);
    case MatchKind::regex: {
        std::regex re(m.value, std::regex::icase);
        return std::regex_search(subject, re);
    }
    case MatchKind::hash_equal:
        if (m.channel == Channel::favicon_hash) {
            try {
                return std::stol(subject) == std::stol(m.value);
            } catch (const std::exception&) {
                return false;
            }
        }
        return to_lower(subject) == to_lower(m.value);
    }
    return false;
}

} // namespace detail

// A signature matches an observation when at least one of its matchers can be
// evaluated against it, every evaluable matcher passes, and no evaluable
// exclusion passes.
inline bool signature_matches(const Signature& sig, const Observation& obs) {
    size_t relevant = 0;
    for (const Matcher& m : sig.matchers) {
        auto subject = detail::matcher_subject(m, obs);
        if (!subject) continue;
        ++relevant;
        if (!detail::value_matches(m, *subject)) return false;
    }
    if (relevant == 0) return false;
    for (const Matcher& m : sig.exclusions) {
        auto subject = detail::matcher_subject(m, obs);
        if (subject && detail::value_matches(m, *subject)) return false;
    }
    return true;
}

// Matching signatures, strongest confidence tier first, then by id.
inline std::vector<const Signature*> match_signatures(const SignatureSet& set,
                                                      const Observation& obs) {
    std::vector<const Signature*> out;
    for (const Signature& sig : set.signatures)
        if (signature_matches(sig, obs)) out.push_back(&sig);
    std::sort(out.begin(), out.end(),
              [](const Signature* a, const Signature* b) {
                  int ra = tier_rank(a->confidence), rb = tier_rank(b->confidence);
                  if (ra != rb) return ra < rb;
                  return a->id < b->id;
              });
    return out;
}

// Runs one extractor against one observation.
inline std::optional<LeakRecord> run_extractor(const LeakExtractor& ex,
                                               const Signature& sig,
                                               const Observation& obs) {
    if (ex.channel != obs.channel) return std::nullopt;
    std::regex re(ex.pattern);
    std::smatch m;
    if (!std::regex_search(obs.payload, m, re) || m.size() < 2) return std::nullopt;
    LeakRecord leak;
    leak.host = obs.host;
    leak.product = sig.product;
    leak.signature_id = sig.id;
    leak.extractor_id = ex.id;
    leak.kind = ex.leak_kind;
    leak.scheme = ex.scheme;
    leak.raw = m[1].str();
    return leak;
}

// Full sweep: every observation against every signature, extractors applied
// on matches, duplicates (same host, extractor, raw text) collapsed.
inline std::vector<LeakRecord> extract_all(const SignatureSet& set,
                                           const std::vector<Observation>& observations) {
    std::vector<LeakRecord> out;
    std::set<std::tuple<std::string, int, std::string, std::string>> seen;
    for (const Observation& obs : observations) {
        for (const Signature* sig : match_signatures(set, obs)) {
            for (const std::string& exid : sig->extractors) {
                const LeakExtractor* ex = set.find_extractor(exid);
                if (!ex) continue;
                auto leak = run_extractor(*ex, *sig, obs);
                if (!leak) continue;
                auto key = std::make_tuple(leak->host.ip, leak->host.port,
                                           leak->extractor_id, leak->raw);
                if (!seen.insert(key).second) continue;
                out.push_back(std::move(*leak));
            }
        }
    }
    std::sort(out.begin(), out.end(), [](const LeakRecord& a, const LeakRecord& b) {
        return std::tie(a.host.ip, a.host.port, a.extractor_id, a.raw) <
               std::tie(b.host.ip, b.host.port, b.extractor_id, b.raw);
    });
    return out;
}

} // namespace sdwan

#endif // SDWAN_EXTRACT_HPP
