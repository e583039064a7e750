// assess.hpp -- outdatedness assessment against a latest-version catalog,
// vulnerability rule matching, and weakness flagging for live exposures.

#ifndef SDWAN_ASSESS_HPP
#define SDWAN_ASSESS_HPP

#include <algorithm>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/core.hpp"
#include "sdwan/extract.hpp"
#include "sdwan/probe.hpp"
#include "sdwan/version.hpp"

namespace sdwan {

enum class VersionStatus { current, outdated, unknown };

inline std::string to_string(VersionStatus s) {
    switch (s) {
    case VersionStatus::current: return "current";
    case VersionStatus::outdated: return "outdated";
    case VersionStatus::unknown: return "unknown";
    }
    return "unknown";
}

// A known-latest mapping for an indirectly leaked component: the extractor
// that produces the component version, and the component version shipped in
// the product's newest release.
struct IndirectMapping {
    std::string extractor_id;
    std::string latest;

    bool operator==(const IndirectMapping&) const = default;
};

struct CatalogEntry {
    std::string vendor;
    std::string product;
    std::string latest;
    std::string aws; // newest image observed in the cloud marketplace, if any
    std::vector<IndirectMapping> indirect;

    bool operator==(const CatalogEntry&) const = default;
};

struct Catalog {
    std::vector<CatalogEntry> entries;

    const CatalogEntry* find(const ProductRef& product) const {
        for (const auto& e : entries)
            if (to_lower(e.vendor) == to_lower(product.vendor) &&
                to_lower(e.product) == to_lower(product.product))
                return &e;
        return nullptr;
    }
};

inline Catalog parse_catalog(const std::string& text, const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("entries") || !doc["entries"].is_array())
        throw ParseError(source + ": expected an object with an entries array");
    Catalog cat;
    for (const auto& je : doc["entries"]) {
        CatalogEntry e;
        e.vendor = je.at("vendor").get<std::string>();
        e.product = je.at("product").get<std::string>();
        e.latest = je.at("latest").get<std::string>();
        if (je.contains("aws") && je["aws"].is_string())
            e.aws = je["aws"].get<std::string>();
        if (je.contains("indirect"))
            for (const auto& jm : je["indirect"])
                e.indirect.push_back({jm.at("extractor_id").get<std::string>(),
                                      jm.at("latest").get<std::string>()});
        if (e.vendor.empty() || e.product.empty() || e.latest.empty())
            throw ParseError(source + ": entry with empty vendor/product/latest");
        cat.entries.push_back(std::move(e));
    }
    return cat;
}

inline Catalog load_catalog(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_catalog(ss.str(), path);
}

// Direct comparison of an observed version against the product's latest.
inline VersionStatus assess_outdated(const VersionId& observed,
                                     const VersionId& latest) {
    switch (compare_versions(observed, latest)) {
    case Ordering::Less: return VersionStatus::outdated;
    case Ordering::Equal:
    case Ordering::Greater: return VersionStatus::current;
    case Ordering::Incomparable: return VersionStatus::unknown;
    }
    return VersionStatus::unknown;
}

// Indirect leaks (bundled component versions) are conclusive only when the
// component is older than the one shipped in the latest release; a matching
// component pins the host to the current release.
inline VersionStatus infer_from_indirect(const LeakRecord& leak,
                                         const CatalogEntry& entry) {
    const IndirectMapping* mapping = nullptr;
    for (const auto& m : entry.indirect)
        if (m.extractor_id == leak.extractor_id) mapping = &m;
    if (!mapping)
        throw MissingMapping(entry.vendor + " " + entry.product +
                             ": no indirect mapping for extractor " +
                             leak.extractor_id);
    VersionId observed = parse_version(leak.raw, leak.scheme);
    VersionId latest = parse_version(mapping->latest, leak.scheme);
    switch (compare_versions(observed, latest)) {
    case Ordering::Less: return VersionStatus::outdated;
    case Ordering::Equal: return VersionStatus::current;
    default: return VersionStatus::unknown;
    }
}

// Catalog-driven assessment of one leak. Absent catalog entries and
// unparseable versions yield unknown rather than an error.
inline VersionStatus assess_leak(const Catalog& catalog, const LeakRecord& leak) {
    const CatalogEntry* entry = catalog.find(leak.product);
    if (!entry) return VersionStatus::unknown;
    try {
        if (leak.kind == LeakKind::indirect) return infer_from_indirect(leak, *entry);
        VersionId observed = parse_version(leak.raw, leak.scheme);
        VersionId latest = parse_version(entry->latest, leak.scheme);
        return assess_outdated(observed, latest);
    } catch (const MissingMapping&) {
        return VersionStatus::unknown;
    } catch (const VersionParseError&) {
        return VersionStatus::unknown;
    }
}

// ---------------------------------------------------------------------------
// Vulnerability rules
// ---------------------------------------------------------------------------

struct VulnRule {
    std::string id;
    std::string vendor;
    std::string product;
    std::string predicate;
    std::string cwe;  // optional
    std::string note; // optional

    bool operator==(const VulnRule&) const = default;
};

namespace detail {

enum class PredKind { exact, wildcard, lt, le, gt, ge };

struct PredTerm {
    PredKind kind;
    std::string version;
};

inline std::vector<PredTerm> parse_predicate(const std::string& text) {
    std::vector<PredTerm> terms;
    size_t start = 0;
    while (start <= text.size()) {
        size_t bar = text.find('|', start);
        std::string piece = trim(bar == std::string::npos
                                     ? text.substr(start)
                                     : text.substr(start, bar - start));
        if (piece.empty())
            throw ParseError("vuln predicate: empty alternative in \"" + text + "\"");
        PredTerm t;
        if (piece.rfind("<=", 0) == 0) {
            t.kind = PredKind::le;
            t.version = trim(piece.substr(2));
        } else if (piece.rfind(">=", 0) == 0) {
            t.kind = PredKind::ge;
            t.version = trim(piece.substr(2));
        } else if (piece[0] == '<') {
            t.kind = PredKind::lt;
            t.version = trim(piece.substr(1));
        } else if (piece[0] == '>') {
            t.kind = PredKind::gt;
            t.version = trim(piece.substr(1));
        } else {
            auto toks = tokenize_version(strip_version_prefix(piece));
            bool wildcard = !toks.empty() &&
                            std::holds_alternative<std::string>(toks.back()) &&
                            to_lower(std::get<std::string>(toks.back())) == "x";
            if (wildcard) {
                t.kind = PredKind::wildcard;
                size_t xpos = piece.find_last_of("xX");
                t.version = trim(piece.substr(0, xpos));
                while (!t.version.empty() &&
                       (t.version.back() == '.' || t.version.back() == '-' ||
                        t.version.back() == '_'))
                    t.version.pop_back();
            } else {
                t.kind = PredKind::exact;
                t.version = piece;
            }
        }
        if (t.version.empty())
            throw ParseError("vuln predicate: term without version in \"" + text + "\"");
        if (bar == std::string::npos) {
            terms.push_back(std::move(t));
            break;
        }
        terms.push_back(std::move(t));
        start = bar + 1;
    }
    return terms;
}

inline bool tokens_equal(const VersionToken& a, const VersionToken& b) {
    if (a.index() != b.index()) return false;
    if (std::holds_alternative<std::int64_t>(a))
        return std::get<std::int64_t>(a) == std::get<std::int64_t>(b);
    return to_lower(std::get<std::string>(a)) == to_lower(std::get<std::string>(b));
}

inline bool pred_term_matches(const PredTerm& term, const VersionId& observed) {
    if (term.kind == PredKind::wildcard) {
        auto prefix = tokenize_version(strip_version_prefix(term.version));
        if (prefix.size() > observed.segments.size()) return false;
        for (size_t i = 0; i < prefix.size(); ++i)
            if (!tokens_equal(prefix[i], observed.segments[i])) return false;
        return true;
    }
    VersionId bound;
    try {
        bound = parse_version(term.version, observed.scheme);
    } catch (const VersionParseError&) {
        return false;
    }
    Ordering r = compare_versions(observed, bound);
    switch (term.kind) {
    case PredKind::exact: return r == Ordering::Equal;
    case PredKind::lt: return r == Ordering::Less;
    case PredKind::le: return r == Ordering::Less || r == Ordering::Equal;
    case PredKind::gt: return r == Ordering::Greater;
    case PredKind::ge: return r == Ordering::Greater || r == Ordering::Equal;
    default: return false;
    }
}

} // namespace detail

inline bool vuln_rule_matches(const VulnRule& rule, const ProductRef& product,
                              const VersionId& observed) {
    if (to_lower(rule.vendor) != to_lower(product.vendor)) return false;
    if (to_lower(rule.product) != to_lower(product.product)) return false;
    for (const auto& term : detail::parse_predicate(rule.predicate))
        if (detail::pred_term_matches(term, observed)) return true;
    return false;
}

struct VulnMatch {
    std::string rule_id;
    std::string cwe;
    std::string note;

    bool operator==(const VulnMatch&) const = default;
};

inline std::vector<VulnMatch> match_vuln_rules(const std::vector<VulnRule>& rules,
                                               const ProductRef& product,
                                               const std::string& raw,
                                               Scheme scheme) {
    std::vector<VulnMatch> out;
    VersionId observed;
    try {
        observed = parse_version(raw, scheme);
    } catch (const VersionParseError&) {
        return out;
    }
    for (const auto& rule : rules)
        if (vuln_rule_matches(rule, product, observed))
            out.push_back({rule.id, rule.cwe, rule.note});
    std::sort(out.begin(), out.end(),
              [](const VulnMatch& a, const VulnMatch& b) { return a.rule_id < b.rule_id; });
    return out;
}

inline std::vector<VulnRule> parse_vuln_rules(const std::string& text,
                                              const std::string& source) {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source + ": " + e.what());
    }
    if (!doc.is_object() || !doc.contains("rules") || !doc["rules"].is_array())
        throw ParseError(source + ": expected an object with a rules array");
    std::vector<VulnRule> rules;
    for (const auto& jr : doc["rules"]) {
        VulnRule r;
        r.id = jr.at("id").get<std::string>();
        r.vendor = jr.at("vendor").get<std::string>();
        r.product = jr.at("product").get<std::string>();
        r.predicate = jr.at("predicate").get<std::string>();
        if (jr.contains("cwe") && jr["cwe"].is_string())
            r.cwe = jr["cwe"].get<std::string>();
        if (jr.contains("note") && jr["note"].is_string())
            r.note = jr["note"].get<std::string>();
        detail::parse_predicate(r.predicate); // reject malformed rules up front
        rules.push_back(std::move(r));
    }
    return rules;
}

inline std::vector<VulnRule> load_vuln_rules(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::stringstream ss;
    ss << in.rdbuf();
    return parse_vuln_rules(ss.str(), path);
}

// ---------------------------------------------------------------------------
// Weakness flags
// ---------------------------------------------------------------------------

// CWE-749: a management surface was reachable and answered a live probe.
// CWE-798: the host answered live SNMP with a default community string.
// Replayed observations never raise flags; only first-hand contact counts.
inline std::vector<std::string> flag_weaknesses(const std::vector<Observation>& host_obs) {
    std::set<std::string> flags;
    for (const Observation& obs : host_obs) {
        auto it = obs.meta.find("origin");
        bool live = it == obs.meta.end() || it->second != "replay";
        if (!live) continue;
        flags.insert("CWE-749");
        if (obs.channel == Channel::snmp_sysdescr) {
            auto c = obs.meta.find("community");
            if (c != obs.meta.end() &&
                (c->second == "public" || c->second == "private"))
                flags.insert("CWE-798");
        }
    }
    return {flags.begin(), flags.end()};
}

} // namespace sdwan

#endif // SDWAN_ASSESS_HPP
