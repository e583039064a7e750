// query.hpp -- renders signatures into Shodan- and Censys-dialect query
// strings. Rendering is pure; unsupported channel/engine pairs raise instead
// of producing lossy approximations.

#ifndef SDWAN_QUERY_HPP
#define SDWAN_QUERY_HPP

#include <string>
#include <vector>

#include "sdwan/core.hpp"
#include "sdwan/hash.hpp"
#include "sdwan/signature.hpp"

namespace sdwan {

struct RenderedQuery {
    Engine engine = Engine::shodan;
    std::string text;
    std::string source_signature;
    Confidence confidence = Confidence::Tentative;
};

namespace detail {

inline std::string quoted(const std::string& v) { return "\"" + v + "\""; }

// Renders one positive term. Throws for channels that no search engine
// indexes (active-only) or that this engine lacks.
inline std::string render_term(const Matcher& m, Engine engine,
                               const std::string& sig_id) {
    switch (m.channel) {
    case Channel::http_title:
        return engine == Engine::shodan ? "title:" + quoted(m.value)
                                        : "80.http.get.title: " + quoted(m.value);
    case Channel::favicon_hash:
        if (engine == Engine::censys)
            throw UnsupportedCombination(sig_id + ": censys has no favicon hash filter");
        return "http.favicon.hash:" + m.value;
    case Channel::body_sha256:
        if (engine == Engine::shodan)
            throw UnsupportedCombination(sig_id + ": shodan has no body sha256 filter");
        return "80.http.get.body_sha256: " + m.value;
    case Channel::tls_cert_field:
        if (engine == Engine::shodan) {
            if (m.field_selector == "organization" && m.kind == MatchKind::exact)
                return "ssl:" + quoted("O=" + m.value);
            return "ssl:" + quoted(m.value);
        }
        if (m.field_selector == "issuer_cn")
            return "443.https.tls.certificate.parsed.issuer.common_name: " +
                   quoted(m.value);
        if (m.field_selector == "fingerprint_sha256")
            return "443.https.tls.certificate.parsed.fingerprint_sha256: " +
                   quoted(m.value);
        if (m.field_selector == "organization")
            return "443.https.tls.certificate.parsed.subject.organization: " +
                   quoted(m.value);
        throw UnsupportedCombination(sig_id + ": no censys filter for cert field '" +
                                     m.field_selector + "'");
    case Channel::snmp_sysdescr:
        // Shodan indexes SNMP banners; a bare quoted term searches them.
        if (engine == Engine::censys)
            throw UnsupportedCombination(sig_id + ": censys does not index SNMP");
        return quoted(m.value);
    case Channel::ssh_issue:
        throw UnrenderableChannel(sig_id + ": ssh_issue has no search-engine filter");
    case Channel::websocket_payload:
        throw UnrenderableChannel(sig_id + ": websocket_payload has no search-engine filter");
    case Channel::uri_pattern:
        throw UnrenderableChannel(sig_id + ": uri_pattern has no search-engine filter");
    case Channel::html_pattern:
        throw UnrenderableChannel(sig_id + ": html_pattern has no search-engine filter");
    case Channel::json_field:
        throw UnrenderableChannel(sig_id + ": json_field has no search-engine filter");
    case Channel::http_header:
        throw UnrenderableChannel(sig_id + ": header hash rendering is deferred");
    }
    throw UnrenderableChannel(sig_id + ": unknown channel");
}

} // namespace detail

inline RenderedQuery render_query(const Signature& sig, Engine engine) {
    std::string text;
    for (const auto& m : sig.matchers) {
        if (!text.empty()) text += ' ';
        text += detail::render_term(m, engine, sig.id);
    }
    for (const auto& m : sig.exclusions) {
        if (!text.empty()) text += ' ';
        if (engine == Engine::shodan)
            text += '-' + detail::render_term(m, engine, sig.id);
        else
            text += "NOT " + detail::render_term(m, engine, sig.id);
    }
    return RenderedQuery{engine, text, sig.id, sig.confidence};
}

struct SkippedSignature {
    std::string signature_id;
    std::string reason;
};

struct RenderResult {
    std::vector<RenderedQuery> queries;
    std::vector<SkippedSignature> skipped;
};

inline RenderResult render_all(const SignatureSet& set, Engine engine,
                               Confidence min_confidence) {
    RenderResult out;
    for (const auto& sig : set.signatures) {
        if (!at_least(sig.confidence, min_confidence)) continue;
        try {
            out.queries.push_back(render_query(sig, engine));
        } catch (const UnrenderableChannel& e) {
            out.skipped.push_back({sig.id, e.what()});
        } catch (const UnsupportedCombination& e) {
            out.skipped.push_back({sig.id, e.what()});
        }
    }
    return out;
}

// Convenience wrappers matching the tool-facing vocabulary.
inline std::int32_t favicon_hash_value(std::span<const std::uint8_t> icon) {
    return favicon_hash(icon);
}

inline std::string body_sha256(std::span<const std::uint8_t> body) {
    return sha256_hex(body);
}

} // namespace sdwan

#endif // SDWAN_QUERY_HPP
