#include <catch2/catch_amalgamated.hpp>

#include <map>

#include "sdwan/extract.hpp"
#include "sdwan/pipeline.hpp"
#include "sdwan/signature.hpp"

using namespace sdwan;

namespace {

const std::string kCorpus = std::string(SDWAN_DATA_DIR) + "/signatures.json";
const std::string kGallery =
    std::string(SDWAN_DATA_DIR) + "/fixtures/version_leaks.jsonl";

struct ExpectedLeak {
    std::string ip;
    std::string extractor;
    std::string raw;
    LeakKind kind;
    Scheme scheme;
};

// One pinned row per version-leak technique in the corpus. The raw strings
// were transcribed by hand from the capture fixtures; any drift in the
// extractor regexes shows up as a diff here.
const std::vector<ExpectedLeak> kExpected = {
    {"192.0.2.1", "ex-viptela-issue", "17.2.4", LeakKind::direct, Scheme::dotted},
    {"192.0.2.2", "ex-vco-ui-css", "3.0.0.1509625568730", LeakKind::ui_component,
     Scheme::dotted},
    {"192.0.2.3", "ex-teloip-host", "v5.02", LeakKind::direct, Scheme::dotted},
    {"192.0.2.4", "ex-fatpipe-h5", "9.1.2r142", LeakKind::direct,
     Scheme::dotted_rev},
    {"192.0.2.5", "ex-versa-analytics-path", "v1.0.0", LeakKind::indirect,
     Scheme::dotted},
    {"192.0.2.6", "ex-versa-flexvnf-pkg", "16.1R2", LeakKind::package,
     Scheme::dotted_rev},
    {"192.0.2.7", "ex-viprinet-sysdescr", "2.1.4", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.8", "ex-steelhead-appname", "0.15.8", LeakKind::indirect,
     Scheme::dotted},
    {"192.0.2.9", "ex-citrix-rdx-css", "9.3.1.35", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.10", "ex-speak-orch-uri", "8.3.6.35923", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.11", "ex-speak-ec-uri", "8.1.4.11_66255", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.12", "ex-talari-css-tag", "R7_3_QA_P1_D1_06152018",
     LeakKind::indirect, Scheme::release_tag},
    {"192.0.2.13", "ex-sonus-edge-css", "6.1.2-471", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.14", "ex-sonus-ema-header", "6.2", LeakKind::direct,
     Scheme::dotted},
    {"192.0.2.15", "ex-arista-sysdescr", "4.15.6M", LeakKind::direct,
     Scheme::suffixed},
    {"192.0.2.16", "ex-gluware-ws-banner", "3.3.98", LeakKind::direct,
     Scheme::dotted},
};

Observation html_obs(const std::string& ip, const std::string& payload) {
    Observation o;
    o.host = {ip, 443};
    o.channel = Channel::html_pattern;
    o.payload = payload;
    return o;
}

} // namespace

TEST_CASE("capture fixture yields exactly one pinned leak per technique") {
    SignatureSet set = load_signatures(kCorpus);
    std::vector<Observation> obs = load_observations(kGallery);
    REQUIRE(obs.size() == 16);

    std::vector<LeakRecord> leaks = extract_all(set, obs);
    REQUIRE(leaks.size() == 16);

    std::map<std::string, const LeakRecord*> by_ip;
    for (const auto& l : leaks) {
        INFO("duplicate leak for " << l.host.ip);
        CHECK(by_ip.emplace(l.host.ip, &l).second);
    }

    for (const auto& want : kExpected) {
        INFO(want.ip << " should leak '" << want.raw << "' via " << want.extractor);
        auto it = by_ip.find(want.ip);
        REQUIRE(it != by_ip.end());
        const LeakRecord& got = *it->second;
        CHECK(got.extractor_id == want.extractor);
        CHECK(got.raw == want.raw);
        CHECK(got.kind == want.kind);
        CHECK(got.scheme == want.scheme);
    }

    SECTION("every raw string is witnessed verbatim in its source payload") {
        for (const auto& l : leaks) {
            bool witnessed = false;
            for (const auto& o : obs)
                if (o.host.ip == l.host.ip &&
                    o.payload.find(l.raw) != std::string::npos)
                    witnessed = true;
            INFO(l.host.ip << " '" << l.raw << "'");
            CHECK(witnessed);
        }
    }

    SECTION("product attribution follows the matching signature") {
        const LeakRecord& viptela = *by_ip.at("192.0.2.1");
        CHECK(viptela.product.vendor == "Cisco");
        CHECK(viptela.product.product == "vEdge");
        CHECK(viptela.signature_id == "viptela-ssh-issue");

        const LeakRecord& arista = *by_ip.at("192.0.2.15");
        CHECK(arista.product.vendor == "Arista");
        CHECK(arista.signature_id == "arista-veos-snmp");
    }

    SECTION("extraction is deterministic") {
        std::vector<LeakRecord> again = extract_all(set, obs);
        REQUIRE(again.size() == leaks.size());
        for (size_t i = 0; i < leaks.size(); ++i) {
            CHECK(again[i].host.ip == leaks[i].host.ip);
            CHECK(again[i].extractor_id == leaks[i].extractor_id);
            CHECK(again[i].raw == leaks[i].raw);
        }
    }

    SECTION("replaying the same observation twice adds nothing") {
        std::vector<Observation> doubled = obs;
        doubled.insert(doubled.end(), obs.begin(), obs.end());
        CHECK(extract_all(set, doubled).size() == 16);
    }

    SECTION("observations replayed from disk are tagged as such") {
        for (const auto& o : obs) {
            REQUIRE(o.meta.count("origin") == 1);
            CHECK(o.meta.at("origin") == "replay");
        }
    }
}

TEST_CASE("signature matching semantics on observations") {
    SignatureSet set = load_signatures(kCorpus);

    SECTION("exclusions veto an otherwise matching observation") {
        Signature sig;
        sig.id = "veto-test";
        sig.product = {"V", "P", ProductClass::appliance};
        sig.confidence = Confidence::Firm;
        sig.matchers.push_back(
            {Channel::html_pattern, MatchKind::substring, "FatPipe", ""});
        sig.exclusions.push_back(
            {Channel::html_pattern, MatchKind::substring, "MPVPN", ""});

        CHECK(signature_matches(sig, html_obs("10.0.0.1", "FatPipe WARP console")));
        CHECK_FALSE(signature_matches(
            sig, html_obs("10.0.0.1", "FatPipe MPVPN console")));
    }

    SECTION("a signature with no evaluable matcher does not match") {
        const Signature* ssh = set.find("viptela-ssh-issue");
        REQUIRE(ssh != nullptr);
        CHECK_FALSE(signature_matches(*ssh, html_obs("10.0.0.2", "viptela")));
    }

    SECTION("title matchers read the rendered page title") {
        const Signature* sig = set.find("vmanage-title-viptela");
        REQUIRE(sig != nullptr);
        Observation o = html_obs(
            "10.0.0.3", "<html><head><title>Viptela vManage</title></head></html>");
        CHECK(signature_matches(*sig, o));

        Observation meta_title = html_obs("10.0.0.3", "no markup");
        meta_title.meta["title"] = "Viptela vManage";
        CHECK(signature_matches(*sig, meta_title));

        Observation wrong = html_obs("10.0.0.3",
                                     "<title>Viptela vManage setup guide</title>");
        CHECK_FALSE(signature_matches(*sig, wrong)); // exact, not substring
    }

    SECTION("match_signatures orders by confidence then id") {
        Observation o = html_obs("10.0.0.4",
                                 "<title>VeloCloud Orchestrator</title>"
                                 "<link href=\"/css/vco-ui.3.0.0.1.common.css\">");
        auto matched = match_signatures(set, o);
        REQUIRE(matched.size() >= 2); // title sig (Certain) + html sig (Firm)
        CHECK(matched[0]->id == "velocloud-orch-title");
        CHECK(matched[1]->id == "velocloud-ui-html");
    }

    SECTION("conflicting raws from separate observations both survive") {
        std::vector<Observation> two = {
            html_obs("10.0.0.5", "<link href=\"/css/vco-ui.3.0.0.111.common.css\">"),
            html_obs("10.0.0.5", "<link href=\"/css/vco-ui.3.0.0.222.common.css\">"),
        };
        auto leaks = extract_all(set, two);
        REQUIRE(leaks.size() == 2);
        CHECK(leaks[0].raw == "3.0.0.111");
        CHECK(leaks[1].raw == "3.0.0.222");
    }
}

TEST_CASE("run_extractor honors channel and capture group") {
    SignatureSet set = load_signatures(kCorpus);
    const Signature* sig = set.find("velocloud-ui-html");
    REQUIRE(sig != nullptr);
    const LeakExtractor* ex = set.find_extractor("ex-vco-ui-css");
    REQUIRE(ex != nullptr);

    Observation o = html_obs("10.0.0.6",
                             "<link href=\"/css/vco-ui.3.1.2.common.css\">");
    auto leak = run_extractor(*ex, *sig, o);
    REQUIRE(leak.has_value());
    CHECK(leak->raw == "3.1.2");
    CHECK(leak->kind == LeakKind::ui_component);

    Observation wrong_channel = o;
    wrong_channel.channel = Channel::json_field;
    CHECK_FALSE(run_extractor(*ex, *sig, wrong_channel).has_value());

    Observation no_match = html_obs("10.0.0.6", "<link href=\"/css/app.css\">");
    CHECK_FALSE(run_extractor(*ex, *sig, no_match).has_value());
}
