// signature.hpp -- the declarative fingerprint corpus: matchers, signatures,
// leak extractors, loading/validation and channel indexing.

#ifndef SDWAN_SIGNATURE_HPP
#define SDWAN_SIGNATURE_HPP

#include <fstream>
#include <map>
#include <regex>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/core.hpp"
#include "sdwan/version.hpp"

namespace sdwan {

struct Matcher {
    Channel channel = Channel::http_title;
    MatchKind kind = MatchKind::exact;
    std::string value;
    std::string field_selector; // cert field or header name, empty otherwise

    friend bool operator==(const Matcher& a, const Matcher& b) {
        return a.channel == b.channel && a.kind == b.kind && a.value == b.value &&
               a.field_selector == b.field_selector;
    }
};

struct LeakExtractor {
    std::string id;
    Channel channel = Channel::html_pattern;
    std::string pattern; // regex with exactly one capture group
    LeakKind leak_kind = LeakKind::direct;
    Scheme scheme = Scheme::dotted;

    friend bool operator==(const LeakExtractor& a, const LeakExtractor& b) {
        return a.id == b.id && a.channel == b.channel && a.pattern == b.pattern &&
               a.leak_kind == b.leak_kind && a.scheme == b.scheme;
    }
};

struct Signature {
    std::string id;
    ProductRef product;
    std::vector<Matcher> matchers;   // conjunction
    std::vector<Matcher> exclusions; // any match vetoes
    Confidence confidence = Confidence::Tentative;
    std::vector<std::string> extractors; // LeakExtractor ids
    std::string ws_path;                 // websocket upgrade path, optional

    friend bool operator==(const Signature& a, const Signature& b) {
        return a.id == b.id && a.product == b.product && a.matchers == b.matchers &&
               a.exclusions == b.exclusions && a.confidence == b.confidence &&
               a.extractors == b.extractors && a.ws_path == b.ws_path;
    }
};

struct SignatureSet {
    std::string version;
    std::vector<Signature> signatures;
    std::vector<LeakExtractor> extractors;

    const Signature* find(std::string_view id) const {
        for (const auto& s : signatures)
            if (s.id == id) return &s;
        return nullptr;
    }
    const LeakExtractor* find_extractor(std::string_view id) const {
        for (const auto& e : extractors)
            if (e.id == id) return &e;
        return nullptr;
    }
    std::vector<ProductRef> products() const {
        std::vector<ProductRef> out;
        for (const auto& s : signatures) {
            bool seen = false;
            for (const auto& p : out)
                if (p.same_pair(s.product)) { seen = true; break; }
            if (!seen) out.push_back(s.product);
        }
        return out;
    }

    friend bool operator==(const SignatureSet& a, const SignatureSet& b) {
        return a.version == b.version && a.signatures == b.signatures &&
               a.extractors == b.extractors;
    }
};

struct ValidationFinding {
    std::string signature_id; // or extractor id
    std::string rule;
};

struct ValidationReport {
    std::vector<ValidationFinding> findings;
    bool ok() const { return findings.empty(); }
};

namespace detail {

// Counts capturing groups: '(' not followed by '?' and not escaped.
inline int capture_group_count(std::string_view pattern) {
    int n = 0;
    for (size_t i = 0; i < pattern.size(); ++i) {
        if (pattern[i] == '\\') { ++i; continue; }
        if (pattern[i] == '(' && (i + 1 >= pattern.size() || pattern[i + 1] != '?'))
            ++n;
    }
    return n;
}

inline bool regex_compiles(const std::string& pattern) {
    try {
        std::regex re(pattern);
        return true;
    } catch (const std::regex_error&) {
        return false;
    }
}

} // namespace detail

inline ValidationReport validate(const SignatureSet& set) {
    ValidationReport rep;
    auto flag = [&](const std::string& id, const std::string& rule) {
        rep.findings.push_back({id, rule});
    };

    if (set.signatures.empty()) flag("", "signature list is empty");

    std::map<std::string, int> sig_ids;
    std::map<std::pair<std::string, std::string>, ProductClass> classes;
    for (const auto& sig : set.signatures) {
        if (++sig_ids[sig.id] == 2) flag(sig.id, "duplicate signature id");
        if (sig.matchers.empty()) flag(sig.id, "matchers is empty");

        auto key = std::make_pair(sig.product.vendor, sig.product.product);
        auto it = classes.find(key);
        if (it == classes.end())
            classes.emplace(key, sig.product.product_class);
        else if (it->second != sig.product.product_class)
            flag(sig.id, "product class conflicts with another signature for the same (vendor, product)");

        for (const auto& m : sig.matchers)
            for (const auto& x : sig.exclusions)
                if (m == x) flag(sig.id, "matcher appears in both matchers and exclusions");

        auto check_matcher = [&](const Matcher& m) {
            if (m.kind == MatchKind::hash_equal && m.channel != Channel::favicon_hash &&
                m.channel != Channel::body_sha256)
                flag(sig.id, "kind=hash_equal only valid for favicon_hash/body_sha256");
            if (m.kind == MatchKind::mask && m.value.find('*') == std::string::npos)
                flag(sig.id, "kind=mask value lacks an asterisk");
            if (m.kind == MatchKind::regex && !detail::regex_compiles(m.value))
                flag(sig.id, "regex value does not compile");
        };
        for (const auto& m : sig.matchers) check_matcher(m);
        for (const auto& m : sig.exclusions) check_matcher(m);

        for (const auto& ex_id : sig.extractors)
            if (!set.find_extractor(ex_id))
                flag(sig.id, "unresolved extractor id '" + ex_id + "'");
    }

    std::map<std::string, int> ex_ids;
    for (const auto& ex : set.extractors) {
        if (++ex_ids[ex.id] == 2) flag(ex.id, "duplicate extractor id");
        if (detail::capture_group_count(ex.pattern) != 1)
            flag(ex.id, "pattern must have exactly one capture group");
        if (!detail::regex_compiles(ex.pattern))
            flag(ex.id, "pattern does not compile");
    }
    return rep;
}

namespace detail {

inline Matcher matcher_from_json(const nlohmann::json& j, const std::string& ctx) {
    Matcher m;
    if (!j.contains("channel") || !j.contains("kind") || !j.contains("value"))
        throw ParseError(ctx + ": matcher needs channel, kind, value");
    auto ch = enum_from_string<Channel>(j.at("channel").get<std::string>());
    if (!ch) throw ParseError(ctx + ": unknown channel '" +
                              j.at("channel").get<std::string>() + "'");
    auto k = enum_from_string<MatchKind>(j.at("kind").get<std::string>());
    if (!k) throw ParseError(ctx + ": unknown kind '" +
                             j.at("kind").get<std::string>() + "'");
    m.channel = *ch;
    m.kind = *k;
    m.value = j.at("value").get<std::string>();
    if (j.contains("field")) m.field_selector = j.at("field").get<std::string>();
    return m;
}

inline nlohmann::ordered_json matcher_to_json(const Matcher& m) {
    nlohmann::ordered_json j;
    j["channel"] = to_string(m.channel);
    j["kind"] = to_string(m.kind);
    j["value"] = m.value;
    if (!m.field_selector.empty()) j["field"] = m.field_selector;
    return j;
}

} // namespace detail

inline SignatureSet parse_signature_set(const std::string& text,
                                        const std::string& source = "<memory>") {
    nlohmann::json doc;
    try {
        doc = nlohmann::json::parse(text);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(source + ": " + e.what());
    }

    SignatureSet set;
    try {
        if (!doc.contains("schema_version"))
            throw ParseError(source + ": missing schema_version");
        set.version = doc.at("schema_version").get<std::string>();

        for (const auto& js : doc.value("signatures", nlohmann::json::array())) {
            Signature sig;
            if (!js.contains("id"))
                throw ParseError(source + ": signature without id");
            sig.id = js.at("id").get<std::string>();
            const std::string ctx = source + ": signature '" + sig.id + "'";
            sig.product.vendor = js.at("vendor").get<std::string>();
            sig.product.product = js.at("product").get<std::string>();
            auto cls = enum_from_string<ProductClass>(js.at("class").get<std::string>());
            if (!cls) throw ParseError(ctx + ": unknown class");
            sig.product.product_class = *cls;
            auto conf = enum_from_string<Confidence>(js.at("confidence").get<std::string>());
            if (!conf) throw ParseError(ctx + ": unknown confidence");
            sig.confidence = *conf;
            for (const auto& jm : js.value("match", nlohmann::json::array()))
                sig.matchers.push_back(detail::matcher_from_json(jm, ctx));
            for (const auto& jm : js.value("exclude", nlohmann::json::array()))
                sig.exclusions.push_back(detail::matcher_from_json(jm, ctx));
            for (const auto& je : js.value("extractors", nlohmann::json::array()))
                sig.extractors.push_back(je.get<std::string>());
            if (js.contains("ws_path")) sig.ws_path = js.at("ws_path").get<std::string>();
            set.signatures.push_back(std::move(sig));
        }

        for (const auto& je : doc.value("extractors", nlohmann::json::array())) {
            LeakExtractor ex;
            ex.id = je.at("id").get<std::string>();
            const std::string ctx = source + ": extractor '" + ex.id + "'";
            auto ch = enum_from_string<Channel>(je.at("channel").get<std::string>());
            if (!ch) throw ParseError(ctx + ": unknown channel");
            ex.channel = *ch;
            ex.pattern = je.at("pattern").get<std::string>();
            auto lk = enum_from_string<LeakKind>(je.at("leak_kind").get<std::string>());
            if (!lk) throw ParseError(ctx + ": unknown leak_kind");
            ex.leak_kind = *lk;
            auto sc = scheme_from_string(je.at("scheme").get<std::string>());
            if (!sc) throw ParseError(ctx + ": unknown scheme");
            ex.scheme = *sc;
            set.extractors.push_back(std::move(ex));
        }
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(source + ": " + e.what());
    }

    ValidationReport rep = validate(set);
    if (!rep.ok()) {
        std::string msg = source + ":";
        for (const auto& f : rep.findings)
            msg += " [" + f.signature_id + "] " + f.rule + ";";
        throw ValidationError(msg);
    }
    return set;
}

inline SignatureSet load_signatures(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError(path + ": cannot open file");
    std::string text((std::istreambuf_iterator<char>(in)), {});
    return parse_signature_set(text, path);
}

inline std::string serialize_signature_set(const SignatureSet& set) {
    nlohmann::ordered_json doc;
    doc["schema_version"] = set.version;
    doc["signatures"] = nlohmann::ordered_json::array();
    for (const auto& sig : set.signatures) {
        nlohmann::ordered_json js;
        js["id"] = sig.id;
        js["vendor"] = sig.product.vendor;
        js["product"] = sig.product.product;
        js["class"] = to_string(sig.product.product_class);
        js["confidence"] = to_string(sig.confidence);
        js["match"] = nlohmann::ordered_json::array();
        for (const auto& m : sig.matchers) js["match"].push_back(detail::matcher_to_json(m));
        if (!sig.exclusions.empty()) {
            js["exclude"] = nlohmann::ordered_json::array();
            for (const auto& m : sig.exclusions)
                js["exclude"].push_back(detail::matcher_to_json(m));
        }
        if (!sig.extractors.empty()) js["extractors"] = sig.extractors;
        if (!sig.ws_path.empty()) js["ws_path"] = sig.ws_path;
        doc["signatures"].push_back(std::move(js));
    }
    doc["extractors"] = nlohmann::ordered_json::array();
    for (const auto& ex : set.extractors) {
        nlohmann::ordered_json je;
        je["id"] = ex.id;
        je["channel"] = to_string(ex.channel);
        je["pattern"] = ex.pattern;
        je["leak_kind"] = to_string(ex.leak_kind);
        je["scheme"] = to_string(ex.scheme);
        doc["extractors"].push_back(std::move(je));
    }
    return doc.dump(2) + "\n";
}

inline std::vector<Signature> signatures_for_channel(const SignatureSet& set,
                                                     Channel channel) {
    std::vector<Signature> out;
    for (const auto& sig : set.signatures)
        for (const auto& m : sig.matchers)
            if (m.channel == channel) {
                out.push_back(sig);
                break;
            }
    std::sort(out.begin(), out.end(),
              [](const Signature& a, const Signature& b) { return a.id < b.id; });
    return out;
}

} // namespace sdwan

#endif // SDWAN_SIGNATURE_HPP
