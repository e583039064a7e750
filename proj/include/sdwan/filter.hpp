// filter.hpp -- local evaluator for rendered queries: parses both engine
// dialects back into terms, matches them against BannerRecords, and powers
// replay mode and candidate deduplication.

#ifndef SDWAN_FILTER_HPP
#define SDWAN_FILTER_HPP

#include <algorithm>
#include <map>
#include <string>
#include <vector>

#include "sdwan/banner.hpp"
#include "sdwan/core.hpp"
#include "sdwan/query.hpp"

namespace sdwan {

// Case-insensitive substring match where '*' in the pattern matches any run
// of characters (including an empty one).
inline bool wildcard_contains(std::string_view text, std::string_view pattern) {
    std::string t = to_lower(text);
    std::string p = to_lower(pattern);
    std::vector<std::string> parts;
    size_t pos = 0;
    while (true) {
        size_t star = p.find('*', pos);
        if (star == std::string::npos) {
            parts.push_back(p.substr(pos));
            break;
        }
        parts.push_back(p.substr(pos, star - pos));
        pos = star + 1;
    }
    if (parts.size() == 1) return t.find(parts[0]) != std::string::npos;
    size_t at = 0;
    for (size_t i = 0; i < parts.size(); ++i) {
        if (parts[i].empty()) continue;
        size_t found = t.find(parts[i], at);
        if (found == std::string::npos) return false;
        // The first fragment may float anywhere; later ones must follow.
        at = found + parts[i].size();
    }
    return true;
}

enum class TermField {
    title,
    favicon,
    body_sha256,
    ssl_org_exact,
    ssl_keyword,
    issuer_cn,
    fingerprint,
    organization,
    port,
    org,
    free_text,
};

struct QueryTerm {
    TermField field = TermField::free_text;
    std::string value;
    bool negated = false;
};

struct ParsedQuery {
    Engine engine = Engine::shodan;
    std::vector<QueryTerm> terms;
};

namespace detail {

// Splits the query text on spaces, keeping quoted runs intact and gluing a
// trailing-colon token to its value (the Censys `field: value` style).
inline std::vector<std::string> query_tokens(const std::string& text,
                                             const std::string& ctx) {
    std::vector<std::string> toks;
    std::string cur;
    bool quoted = false;
    for (char c : text) {
        if (c == '"') {
            quoted = !quoted;
            cur += c;
        } else if (c == ' ' && !quoted) {
            if (!cur.empty()) toks.push_back(cur);
            cur.clear();
        } else {
            cur += c;
        }
    }
    if (quoted) throw QueryParseError(ctx + ": unbalanced quote");
    if (!cur.empty()) toks.push_back(cur);

    std::vector<std::string> out;
    for (size_t i = 0; i < toks.size(); ++i) {
        if (!toks[i].empty() && toks[i].back() == ':' && i + 1 < toks.size())
            out.push_back(toks[i] + toks[i + 1]), ++i;
        else
            out.push_back(toks[i]);
    }
    return out;
}

inline std::string unquote(std::string_view v) {
    if (v.size() >= 2 && v.front() == '"' && v.back() == '"')
        return std::string(v.substr(1, v.size() - 2));
    return std::string(v);
}

inline QueryTerm parse_term(std::string tok, Engine engine, bool negated,
                            const std::string& ctx) {
    QueryTerm t;
    t.negated = negated;
    auto starts = [&](std::string_view prefix) {
        return tok.rfind(prefix, 0) == 0;
    };
    auto rest = [&](std::string_view prefix) {
        return unquote(tok.substr(prefix.size()));
    };

    if (engine == Engine::shodan) {
        if (starts("title:")) {
            t.field = TermField::title;
            t.value = rest("title:");
        } else if (starts("http.favicon.hash:")) {
            t.field = TermField::favicon;
            t.value = rest("http.favicon.hash:");
        } else if (starts("ssl:")) {
            std::string v = rest("ssl:");
            if (v.rfind("O=", 0) == 0) {
                t.field = TermField::ssl_org_exact;
                t.value = v.substr(2);
            } else {
                t.field = TermField::ssl_keyword;
                t.value = v;
            }
        } else if (starts("port:")) {
            t.field = TermField::port;
            t.value = rest("port:");
        } else if (starts("org:")) {
            t.field = TermField::org;
            t.value = rest("org:");
        } else if (!tok.empty() && tok.front() == '"') {
            t.field = TermField::free_text;
            t.value = unquote(tok);
        } else {
            throw QueryParseError(ctx + ": unrecognized shodan term '" + tok + "'");
        }
        return t;
    }

    if (starts("80.http.get.title:")) {
        t.field = TermField::title;
        t.value = rest("80.http.get.title:");
    } else if (starts("80.http.get.body_sha256:")) {
        t.field = TermField::body_sha256;
        t.value = rest("80.http.get.body_sha256:");
    } else if (starts("443.https.tls.certificate.parsed.issuer.common_name:")) {
        t.field = TermField::issuer_cn;
        t.value = rest("443.https.tls.certificate.parsed.issuer.common_name:");
    } else if (starts("443.https.tls.certificate.parsed.fingerprint_sha256:")) {
        t.field = TermField::fingerprint;
        t.value = rest("443.https.tls.certificate.parsed.fingerprint_sha256:");
    } else if (starts("443.https.tls.certificate.parsed.subject.organization:")) {
        t.field = TermField::organization;
        t.value = rest("443.https.tls.certificate.parsed.subject.organization:");
    } else if (!tok.empty() && tok.front() == '"') {
        t.field = TermField::free_text;
        t.value = unquote(tok);
    } else {
        throw QueryParseError(ctx + ": unrecognized censys term '" + tok + "'");
    }
    return t;
}

} // namespace detail

inline ParsedQuery parse_query(const RenderedQuery& q) {
    const std::string ctx = "query '" + q.text + "'";
    ParsedQuery out;
    out.engine = q.engine;
    auto toks = detail::query_tokens(q.text, ctx);
    bool negate_next = false;
    for (auto& tok : toks) {
        if (q.engine == Engine::censys && tok == "NOT") {
            negate_next = true;
            continue;
        }
        if (q.engine == Engine::censys && tok == "AND") continue;
        bool neg = negate_next;
        negate_next = false;
        std::string body = tok;
        if (q.engine == Engine::shodan && body.size() > 1 && body[0] == '-' &&
            body[1] != '"') {
            neg = true;
            body = body.substr(1);
        }
        out.terms.push_back(detail::parse_term(body, q.engine, neg, ctx));
    }
    if (out.terms.empty()) throw QueryParseError(ctx + ": no terms");
    return out;
}

namespace detail {

inline bool term_matches(const QueryTerm& t, const BannerRecord& r) {
    switch (t.field) {
    case TermField::title:
        return r.title && wildcard_contains(*r.title, t.value);
    case TermField::favicon:
        try {
            return r.favicon_hash &&
                   *r.favicon_hash == static_cast<std::int32_t>(std::stol(t.value));
        } catch (...) {
            return false;
        }
    case TermField::body_sha256:
        return r.body_sha256 && to_lower(*r.body_sha256) == to_lower(t.value);
    case TermField::ssl_org_exact:
        return r.tls_org && to_lower(*r.tls_org) == to_lower(t.value);
    case TermField::ssl_keyword:
        return (r.tls_org && contains_ci(*r.tls_org, t.value)) ||
               (r.tls_issuer_cn && contains_ci(*r.tls_issuer_cn, t.value));
    case TermField::issuer_cn:
        return r.tls_issuer_cn && contains_ci(*r.tls_issuer_cn, t.value);
    case TermField::fingerprint:
        return r.tls_fingerprint_sha256 &&
               to_lower(*r.tls_fingerprint_sha256) == to_lower(t.value);
    case TermField::organization:
        return r.tls_org && contains_ci(*r.tls_org, t.value);
    case TermField::port:
        return std::to_string(r.port) == t.value;
    case TermField::org:
        return r.org && contains_ci(*r.org, t.value);
    case TermField::free_text:
        return (r.ssh_banner && contains_ci(*r.ssh_banner, t.value)) ||
               (r.title && contains_ci(*r.title, t.value));
    }
    return false;
}

} // namespace detail

inline bool evaluate_filter(const BannerRecord& rec, const RenderedQuery& q) {
    ParsedQuery pq = parse_query(q);
    for (const auto& t : pq.terms) {
        bool m = detail::term_matches(t, rec);
        if (t.negated ? m : !m) return false;
    }
    return true;
}

// ---------------------------------------------------------------------------
// Replay search
// ---------------------------------------------------------------------------

struct FixtureIndex {
    std::vector<BannerRecord> records;
};

inline FixtureIndex load_fixture_index(const std::string& path) {
    return FixtureIndex{load_banner_records(path)};
}

inline Candidate make_candidate(const BannerRecord& r, const RenderedQuery& q,
                                CandidateSource source) {
    Candidate c;
    c.ip = r.ip;
    c.port = r.port;
    c.matched_signature = q.source_signature;
    c.matched_engine = q.engine;
    c.confidence = q.confidence;
    c.source = source;
    c.region = r.region;
    c.org = r.org;
    return c;
}

inline std::vector<Candidate> replay_search(const FixtureIndex& index,
                                            const RenderedQuery& q,
                                            size_t limit) {
    std::vector<const BannerRecord*> hits;
    for (const auto& r : index.records)
        if (evaluate_filter(r, q)) hits.push_back(&r);
    std::sort(hits.begin(), hits.end(),
              [](const BannerRecord* a, const BannerRecord* b) {
                  return a->ip != b->ip ? a->ip < b->ip : a->port < b->port;
              });
    if (hits.size() > limit) hits.resize(limit);
    std::vector<Candidate> out;
    out.reserve(hits.size());
    for (const auto* r : hits)
        out.push_back(make_candidate(*r, q, CandidateSource::replay));
    return out;
}

// ---------------------------------------------------------------------------
// Dedup
// ---------------------------------------------------------------------------

// One candidate per IP: highest confidence wins; ties break by source order
// shodan < censys < replay, then by first-seen position.
inline std::vector<Candidate> dedup(const std::vector<Candidate>& cands) {
    std::map<std::string, std::pair<Candidate, size_t>> best;
    for (size_t i = 0; i < cands.size(); ++i) {
        const Candidate& c = cands[i];
        auto it = best.find(c.ip);
        if (it == best.end()) {
            best.emplace(c.ip, std::make_pair(c, i));
            continue;
        }
        const Candidate& cur = it->second.first;
        bool better = false;
        if (tier_rank(c.confidence) != tier_rank(cur.confidence))
            better = tier_rank(c.confidence) < tier_rank(cur.confidence);
        else if (c.source != cur.source)
            better = static_cast<int>(c.source) < static_cast<int>(cur.source);
        if (better) it->second = std::make_pair(c, i);
    }
    std::vector<Candidate> out;
    out.reserve(best.size());
    for (auto& [ip, entry] : best) out.push_back(entry.first);
    return out;
}

} // namespace sdwan

#endif // SDWAN_FILTER_HPP
