#include <catch2/catch_amalgamated.hpp>

#include <set>

#include "sdwan/signature.hpp"

using namespace sdwan;

namespace {

const std::string kCorpus = std::string(SDWAN_DATA_DIR) + "/signatures.json";

Signature minimal_sig(const std::string& id) {
    Signature s;
    s.id = id;
    s.product = {"Vendor", "Product", ProductClass::appliance};
    s.confidence = Confidence::Firm;
    s.matchers.push_back({Channel::http_title, MatchKind::exact, "Login", ""});
    return s;
}

} // namespace

TEST_CASE("bundled corpus loads and validates") {
    SignatureSet set = load_signatures(kCorpus);
    CHECK(set.version == "1");
    CHECK(set.signatures.size() == 43);
    CHECK(set.extractors.size() == 16);
    CHECK(set.products().size() == 24);
    CHECK(validate(set).ok());

    std::set<ProductClass> classes;
    for (const auto& s : set.signatures) classes.insert(s.product.product_class);
    CHECK(classes.size() == 8); // every product class is exercised

    SECTION("every channel appears somewhere") {
        std::set<Channel> channels;
        for (const auto& s : set.signatures) {
            for (const auto& m : s.matchers) channels.insert(m.channel);
            for (const auto& m : s.exclusions) channels.insert(m.channel);
        }
        for (const auto& e : set.extractors) channels.insert(e.channel);
        CHECK(channels.count(Channel::http_title) == 1);
        CHECK(channels.count(Channel::favicon_hash) == 1);
        CHECK(channels.count(Channel::body_sha256) == 1);
        CHECK(channels.count(Channel::tls_cert_field) == 1);
        CHECK(channels.count(Channel::ssh_issue) == 1);
        CHECK(channels.count(Channel::snmp_sysdescr) == 1);
        CHECK(channels.count(Channel::html_pattern) == 1);
        CHECK(channels.count(Channel::uri_pattern) == 1);
        CHECK(channels.count(Channel::json_field) == 1);
        CHECK(channels.count(Channel::websocket_payload) == 1);
    }

    SECTION("find by id and extractor resolution") {
        const Signature* sig = set.find("vmanage-title-viptela");
        REQUIRE(sig != nullptr);
        CHECK(sig->product.vendor == "Cisco");
        CHECK(sig->confidence == Confidence::Certain);
        CHECK(set.find("nope") == nullptr);

        for (const auto& s : set.signatures)
            for (const auto& ex : s.extractors)
                CHECK(set.find_extractor(ex) != nullptr);
    }

    SECTION("websocket signature carries its path") {
        const Signature* ws = set.find("gluware-ws");
        REQUIRE(ws != nullptr);
        CHECK(ws->ws_path == "/socket");
    }
}

TEST_CASE("corpus round-trips through serialize/parse byte-identically") {
    SignatureSet set = load_signatures(kCorpus);
    std::string once = serialize_signature_set(set);
    SignatureSet again = parse_signature_set(once, "round-trip");
    std::string twice = serialize_signature_set(again);
    CHECK(once == twice);
    CHECK(again.signatures.size() == set.signatures.size());
    CHECK(again.extractors.size() == set.extractors.size());
}

TEST_CASE("validation flags structural defects") {
    SECTION("empty set") {
        SignatureSet set;
        auto rep = validate(set);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.findings[0].rule == "signature list is empty");
    }

    SECTION("duplicate signature ids") {
        SignatureSet set;
        set.signatures.push_back(minimal_sig("dup"));
        set.signatures.push_back(minimal_sig("dup"));
        auto rep = validate(set);
        REQUIRE(rep.findings.size() == 1);
        CHECK(rep.findings[0].signature_id == "dup");
        CHECK(rep.findings[0].rule == "duplicate signature id");
    }

    SECTION("empty matcher list") {
        SignatureSet set;
        Signature s = minimal_sig("hollow");
        s.matchers.clear();
        set.signatures.push_back(s);
        auto rep = validate(set);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.findings[0].rule == "matchers is empty");
    }

    SECTION("product class conflict across signatures") {
        SignatureSet set;
        Signature a = minimal_sig("a");
        Signature b = minimal_sig("b");
        b.product.product_class = ProductClass::orchestrator;
        set.signatures.push_back(a);
        set.signatures.push_back(b);
        auto rep = validate(set);
        REQUIRE(rep.findings.size() == 1);
        CHECK(rep.findings[0].signature_id == "b");
    }

    SECTION("matcher repeated as exclusion") {
        SignatureSet set;
        Signature s = minimal_sig("twice");
        s.exclusions.push_back(s.matchers[0]);
        set.signatures.push_back(s);
        auto rep = validate(set);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.findings[0].rule ==
              "matcher appears in both matchers and exclusions");
    }

    SECTION("hash_equal restricted to hash channels") {
        SignatureSet set;
        Signature s = minimal_sig("badhash");
        s.matchers[0] = {Channel::http_title, MatchKind::hash_equal, "123", ""};
        set.signatures.push_back(s);
        CHECK_FALSE(validate(set).ok());

        s.matchers[0] = {Channel::favicon_hash, MatchKind::hash_equal, "123", ""};
        SignatureSet ok;
        ok.signatures.push_back(s);
        CHECK(validate(ok).ok());
    }

    SECTION("mask requires an asterisk") {
        SignatureSet set;
        Signature s = minimal_sig("nomask");
        s.matchers[0].kind = MatchKind::mask;
        s.matchers[0].value = "plain";
        set.signatures.push_back(s);
        auto rep = validate(set);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.findings[0].rule == "kind=mask value lacks an asterisk");
    }

    SECTION("regex must compile") {
        SignatureSet set;
        Signature s = minimal_sig("badre");
        s.matchers[0].kind = MatchKind::regex;
        s.matchers[0].value = "([unclosed";
        set.signatures.push_back(s);
        CHECK_FALSE(validate(set).ok());
    }

    SECTION("unresolved extractor id") {
        SignatureSet set;
        Signature s = minimal_sig("wants-ex");
        s.extractors.push_back("ex-missing");
        set.signatures.push_back(s);
        auto rep = validate(set);
        REQUIRE_FALSE(rep.ok());
        CHECK(rep.findings[0].rule == "unresolved extractor id 'ex-missing'");
    }

    SECTION("extractor capture group arity") {
        SignatureSet set;
        set.signatures.push_back(minimal_sig("s"));
        LeakExtractor none{"ex-none", Channel::html_pattern, "version [0-9]+",
                           LeakKind::direct, Scheme::dotted};
        LeakExtractor two{"ex-two", Channel::html_pattern, "(a)(b)",
                          LeakKind::direct, Scheme::dotted};
        LeakExtractor good{"ex-good", Channel::html_pattern, "v([0-9.]+)",
                           LeakKind::direct, Scheme::dotted};
        LeakExtractor non_capturing{"ex-nc", Channel::html_pattern,
                                    "(?:rel)-([0-9.]+)", LeakKind::direct,
                                    Scheme::dotted};
        set.extractors = {none, two, good, non_capturing};
        auto rep = validate(set);
        REQUIRE(rep.findings.size() == 2);
        CHECK(rep.findings[0].signature_id == "ex-none");
        CHECK(rep.findings[1].signature_id == "ex-two");
    }

    SECTION("duplicate extractor ids") {
        SignatureSet set;
        set.signatures.push_back(minimal_sig("s"));
        LeakExtractor ex{"ex-dup", Channel::html_pattern, "v([0-9.]+)",
                         LeakKind::direct, Scheme::dotted};
        set.extractors = {ex, ex};
        auto rep = validate(set);
        REQUIRE(rep.findings.size() == 1);
        CHECK(rep.findings[0].rule == "duplicate extractor id");
    }
}

TEST_CASE("parse errors carry context") {
    CHECK_THROWS_AS(parse_signature_set("not json", "bad.json"), ParseError);
    CHECK_THROWS_AS(parse_signature_set("{}", "bad.json"), ParseError); // no schema_version
    CHECK_THROWS_AS(
        parse_signature_set(R"({"schema_version":"1","signatures":[{"id":"x","vendor":"V","product":"P","class":"not-a-class","confidence":"Firm","match":[]}]})",
                            "bad.json"),
        ParseError);
    CHECK_THROWS_AS(
        parse_signature_set(R"({"schema_version":"1","signatures":[]})", "bad.json"),
        ValidationError); // structurally parseable, semantically empty
    CHECK_THROWS_AS(load_signatures("/does/not/exist.json"), ParseError);

    try {
        parse_signature_set("{", "ctx.json");
        FAIL("expected ParseError");
    } catch (const ParseError& e) {
        CHECK(std::string(e.what()).find("ctx.json") != std::string::npos);
    }
}

TEST_CASE("matcher precedence of exclusions is preserved on reload") {
    SignatureSet set = load_signatures(kCorpus);
    const Signature* fatpipe = set.find("fatpipe-warp-title");
    REQUIRE(fatpipe != nullptr);
    REQUIRE(fatpipe->exclusions.size() == 2);
    CHECK(fatpipe->exclusions[0].value == "VPN");
    CHECK(fatpipe->exclusions[1].value == "MPVPN");

    std::string text = serialize_signature_set(set);
    SignatureSet again = parse_signature_set(text);
    const Signature* fp2 = again.find("fatpipe-warp-title");
    REQUIRE(fp2 != nullptr);
    CHECK(fp2->exclusions.size() == 2);
    CHECK(fp2->exclusions[0].value == "VPN");
}
