#include <catch2/catch_amalgamated.hpp>

#include <chrono>
#include <fstream>

#include "sdwan/probe.hpp"
#include "sdwan/scope.hpp"
#include "support/fixture_servers.hpp"

using namespace sdwan;

namespace {

ScanScope loopback_scope() {
    ScanScope s;
    s.allowlist = {parse_cidr("127.0.0.0/8")};
    return s;
}

ScanScope other_scope() {
    ScanScope s;
    s.allowlist = {parse_cidr("10.99.0.0/16")};
    return s;
}

ProbeConfig fast_cfg() {
    ProbeConfig cfg;
    cfg.connect_timeout_ms = 2000;
    cfg.read_timeout_ms = 2000;
    cfg.ws_window_ms = 1500;
    return cfg;
}

std::string read_file(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    REQUIRE(in.good());
    return std::string(std::istreambuf_iterator<char>(in), {});
}

const Observation* find_obs(const std::vector<Observation>& obs, Channel ch,
                            const std::string& meta_key,
                            const std::string& meta_val) {
    for (const auto& o : obs) {
        if (o.channel != ch) continue;
        auto it = o.meta.find(meta_key);
        if (it != o.meta.end() && it->second == meta_val) return &o;
    }
    return nullptr;
}

} // namespace

TEST_CASE("http probe captures the rendered page") {
    fixture::HttpFixture http;
    std::atomic<int> posts{0};
    http.server().Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html><head><title>Viptela vManage</title></head>"
                        "<body>console</body></html>",
                        "text/html");
    });
    http.server().Post(".*", [&](const httplib::Request&, httplib::Response& res) {
        ++posts;
        res.status = 500;
    });
    http.start();

    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    auto obs = probe_http({"127.0.0.1", http.port()}, false, scope, limiter,
                          fast_cfg());

    REQUIRE_FALSE(obs.empty());
    const Observation& root = obs[0];
    CHECK(root.channel == Channel::html_pattern);
    CHECK(root.host.ip == "127.0.0.1");
    CHECK(root.host.port == http.port());
    CHECK(root.payload.find("console") != std::string::npos);
    CHECK(root.meta.at("status") == "200");
    CHECK(root.meta.at("final_uri") == "/");
    CHECK(root.meta.at("redirect_hops") == "0");
    CHECK(root.meta.at("title") == "Viptela vManage");
    CHECK(root.meta.at("origin") == "live");
    CHECK_FALSE(root.captured_at.empty());
    CHECK(root.meta.count("favicon_hash") == 0); // favicon 404s
    CHECK(posts == 0);                           // read-only: GET only
}

TEST_CASE("http probe hashes a served favicon") {
    const std::string icon =
        read_file(std::string(SDWAN_DATA_DIR) + "/fixtures/favicon.ico");
    fixture::HttpFixture http;
    http.server().Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.set_content("<html><title>x</title></html>", "text/html");
    });
    http.server().Get("/favicon.ico",
                      [&](const httplib::Request&, httplib::Response& res) {
                          res.set_content(icon, "image/x-icon");
                      });
    http.start();

    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    auto obs = probe_http({"127.0.0.1", http.port()}, false, scope, limiter,
                          fast_cfg());
    REQUIRE_FALSE(obs.empty());
    // Pinned against the bundled icon; value must match the search-engine
    // convention (signed mmh3 over wrapped base64).
    CHECK(obs[0].meta.at("favicon_hash") == "226832974");
}

TEST_CASE("http probe follows same-origin redirects and records the hop") {
    fixture::HttpFixture http;
    http.server().Get("/", [](const httplib::Request&, httplib::Response& res) {
        res.status = 302;
        res.set_header("Location", "/dana-na/auth/url_default/welcome.cgi");
    });
    http.server().Get("/dana-na/auth/url_default/welcome.cgi",
                      [](const httplib::Request&, httplib::Response& res) {
                          res.set_content("<html><title>Portal</title></html>",
                                          "text/html");
                      });
    http.start();

    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    auto obs = probe_http({"127.0.0.1", http.port()}, false, scope, limiter,
                          fast_cfg());

    REQUIRE(obs.size() >= 2);
    CHECK(obs[0].meta.at("status") == "200");
    CHECK(obs[0].meta.at("redirect_hops") == "1");
    CHECK(obs[0].meta.at("final_uri") == "/dana-na/auth/url_default/welcome.cgi");

    const Observation* redirect =
        find_obs(obs, Channel::uri_pattern, "source", "redirect");
    REQUIRE(redirect != nullptr);
    CHECK(redirect->payload == "/dana-na/auth/url_default/welcome.cgi");
}

TEST_CASE("http probe fetches same-origin assets within the budget") {
    fixture::HttpFixture http;
    std::string page = "<html><title>app</title><body>";
    for (int i = 0; i < 12; ++i)
        page += "<script src=\"/static/app-" + std::to_string(i) +
                ".js\"></script>";
    page += "<link href=\"/css/main.css\" rel=\"stylesheet\">";
    page += "<script src=\"http://198.51.100.9/evil.js\"></script>"; // cross-origin
    page += "</body></html>";

    std::atomic<int> asset_hits{0};
    http.server().Get("/", [&](const httplib::Request&, httplib::Response& res) {
        res.set_content(page, "text/html");
    });
    http.server().Get(R"(/static/app-\d+\.js)",
                      [&](const httplib::Request&, httplib::Response& res) {
                          ++asset_hits;
                          res.set_content("var version='3.0.0.1';", "application/javascript");
                      });
    http.start();

    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    ProbeConfig cfg = fast_cfg();
    auto obs = probe_http({"127.0.0.1", http.port()}, false, scope, limiter, cfg);

    size_t refs = 0, fetched_js = 0;
    for (const auto& o : obs) {
        if (o.channel == Channel::uri_pattern &&
            o.meta.count("source") && o.meta.at("source") == "asset_ref")
            ++refs;
        if (o.channel == Channel::json_field && o.meta.count("source") &&
            o.meta.at("source") == "asset")
            ++fetched_js;
    }
    CHECK(refs == cfg.asset_budget); // 13 same-origin refs, capped at 8
    CHECK(fetched_js == cfg.asset_budget);
    CHECK(asset_hits == static_cast<int>(cfg.asset_budget));

    for (const auto& o : obs) { // the cross-origin script is never fetched
        auto src = o.meta.find("source");
        if (src == o.meta.end()) continue;
        CHECK(o.payload.find("evil") == std::string::npos);
        if (o.meta.count("uri")) CHECK(o.meta.at("uri").find("evil") == std::string::npos);
    }

    SECTION("stylesheets land on the html channel") {
        fixture::HttpFixture css_http;
        css_http.server().Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("<html><link href=\"/m.css\"></html>", "text/html");
        });
        css_http.server().Get("/m.css", [](const httplib::Request&, httplib::Response& res) {
            res.set_content(".rdx{color:red}", "text/css");
        });
        css_http.start();
        auto css_obs = probe_http({"127.0.0.1", css_http.port()}, false, scope,
                                  limiter, cfg);
        const Observation* sheet = find_obs(css_obs, Channel::html_pattern,
                                            "source", "asset");
        REQUIRE(sheet != nullptr);
        CHECK(sheet->payload == ".rdx{color:red}");
        CHECK(sheet->meta.at("uri") == "/m.css");
    }
}

TEST_CASE("http probe error mapping") {
    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    ProbeConfig cfg = fast_cfg();

    SECTION("connection refused") {
        CHECK_THROWS_AS(probe_http({"127.0.0.1", 9}, false, scope, limiter, cfg),
                        ConnectTimeout);
    }

    SECTION("plain server behind tls flag") {
        fixture::HttpFixture http;
        http.server().Get("/", [](const httplib::Request&, httplib::Response& res) {
            res.set_content("x", "text/plain");
        });
        http.start();
        CHECK_THROWS_AS(
            probe_http({"127.0.0.1", http.port()}, true, scope, limiter, cfg),
            TlsError);
    }
}

TEST_CASE("scope guard blocks probes before any packet leaves") {
    fixture::HttpFixture http;
    std::atomic<int> hits{0};
    http.server().Get(".*", [&](const httplib::Request&, httplib::Response& res) {
        ++hits;
        res.set_content("x", "text/plain");
    });
    http.start();

    ScanScope scope = other_scope();
    RateLimiter limiter(1000);

    CHECK_THROWS_AS(
        probe_http({"127.0.0.1", http.port()}, false, scope, limiter, fast_cfg()),
        ScopeViolation);
    CHECK_THROWS_AS(
        probe_ssh_issue({"127.0.0.1", http.port()}, scope, limiter, fast_cfg()),
        ScopeViolation);
    CHECK_THROWS_AS(probe_snmp("127.0.0.1", "public", scope, limiter, fast_cfg(),
                               http.port()),
                    ScopeViolation);
    CHECK_THROWS_AS(probe_websocket({"127.0.0.1", http.port()}, "/ws", scope,
                                    limiter, fast_cfg()),
                    ScopeViolation);
    CHECK_THROWS_AS(
        probe_tls({"127.0.0.1", http.port()}, scope, limiter, fast_cfg()),
        ScopeViolation);
    CHECK(hits == 0);

    ScanScope empty; // empty allowlist refuses everything
    CHECK_THROWS_AS(
        probe_http({"127.0.0.1", http.port()}, false, empty, limiter, fast_cfg()),
        ScopeViolation);
    CHECK(hits == 0);
}

TEST_CASE("ssh probe reads the issue banner without transmitting") {
    SECTION("banner before the identification line") {
        fixture::SshFixture ssh("viptela 17.2.4\r\nUnauthorized access prohibited\r\n");
        ScanScope scope = loopback_scope();
        RateLimiter limiter(1000);
        Observation obs =
            probe_ssh_issue({"127.0.0.1", ssh.port()}, scope, limiter, fast_cfg());
        CHECK(obs.channel == Channel::ssh_issue);
        CHECK(obs.payload.find("viptela 17.2.4") != std::string::npos);
        CHECK(obs.payload.find("SSH-") == std::string::npos);
        CHECK(obs.meta.at("ident") == "SSH-2.0-OpenSSH_7.4");
        CHECK(obs.meta.at("origin") == "live");
        std::this_thread::sleep_for(std::chrono::milliseconds(250));
        CHECK(ssh.client_bytes().empty()); // nothing sent: read-only probe
    }

    SECTION("bare identification line yields an empty banner") {
        fixture::SshFixture ssh("");
        ScanScope scope = loopback_scope();
        RateLimiter limiter(1000);
        Observation obs =
            probe_ssh_issue({"127.0.0.1", ssh.port()}, scope, limiter, fast_cfg());
        CHECK(obs.payload.empty());
        CHECK(obs.meta.at("ident") == "SSH-2.0-OpenSSH_7.4");
    }

    SECTION("non-ssh service raises a protocol error") {
        fixture::SshFixture notssh("220 FTP ready\r\n", "530 no\r\n");
        ScanScope scope = loopback_scope();
        RateLimiter limiter(1000);
        ProbeConfig cfg = fast_cfg();
        cfg.read_timeout_ms = 500;
        CHECK_THROWS_AS(
            probe_ssh_issue({"127.0.0.1", notssh.port()}, scope, limiter, cfg),
            ProtocolError);
    }
}

TEST_CASE("snmp probe speaks one read-only get") {
    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    ProbeConfig cfg = fast_cfg();
    cfg.read_timeout_ms = 800;

    SECTION("sysdescr round trip") {
        fixture::SnmpFixture::Options opts;
        opts.sysdescr = "Arista Networks EOS version 4.20.5F running on an "
                        "Arista Networks vEOS";
        fixture::SnmpFixture agent(opts);
        Observation obs = probe_snmp("127.0.0.1", "public", scope, limiter, cfg,
                                     agent.port());
        CHECK(obs.channel == Channel::snmp_sysdescr);
        CHECK(obs.payload == opts.sysdescr);
        CHECK(obs.meta.at("oid") == "1.3.6.1.2.1.1.1.0");
        CHECK(obs.meta.at("community") == "public");
        CHECK(obs.host.port == agent.port());
        CHECK(agent.last_community() == "public");
    }

    SECTION("community string is whatever the caller provides") {
        fixture::SnmpFixture agent({});
        probe_snmp("127.0.0.1", "private", scope, limiter, cfg, agent.port());
        CHECK(agent.last_community() == "private");
    }

    SECTION("silent agent times out") {
        fixture::SnmpFixture::Options opts;
        opts.silent = true;
        fixture::SnmpFixture agent(opts);
        CHECK_THROWS_AS(
            probe_snmp("127.0.0.1", "public", scope, limiter, cfg, agent.port()),
            ConnectTimeout);
    }

    SECTION("snmp error-status is a decode error") {
        fixture::SnmpFixture::Options opts;
        opts.error_status = 2; // noSuchName
        fixture::SnmpFixture agent(opts);
        CHECK_THROWS_AS(
            probe_snmp("127.0.0.1", "public", scope, limiter, cfg, agent.port()),
            DecodeError);
    }

    SECTION("non-string varbind value is a decode error") {
        fixture::SnmpFixture::Options opts;
        opts.wrong_value_type = true;
        fixture::SnmpFixture agent(opts);
        CHECK_THROWS_AS(
            probe_snmp("127.0.0.1", "public", scope, limiter, cfg, agent.port()),
            DecodeError);
    }

    SECTION("empty community is rejected locally") {
        CHECK_THROWS_AS(probe_snmp("127.0.0.1", "", scope, limiter, cfg, 161),
                        std::invalid_argument);
    }
}

TEST_CASE("websocket probe upgrades and captures pushed frames") {
    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);
    ProbeConfig cfg = fast_cfg();

    SECTION("text frames are concatenated until close") {
        fixture::WsFixture::Options opts;
        opts.frames = {"{\"app\":\"gluware\",", "\"version\":\"3.3.98\"}"};
        opts.expect_path = "/socket";
        fixture::WsFixture ws(opts);
        Observation obs = probe_websocket({"127.0.0.1", ws.port()}, "/socket",
                                          scope, limiter, cfg);
        CHECK(obs.channel == Channel::websocket_payload);
        CHECK(obs.payload == "{\"app\":\"gluware\",\"version\":\"3.3.98\"}");
        CHECK(obs.meta.at("path") == "/socket");
        CHECK(obs.meta.at("status") == "101");
        std::string head = ws.request_head();
        CHECK(head.find("GET /socket HTTP/1.1") == 0);
        CHECK(head.find("Sec-WebSocket-Key: ") != std::string::npos);
        CHECK(head.find("Upgrade: websocket") != std::string::npos);
    }

    SECTION("extended 16-bit frame length") {
        fixture::WsFixture::Options opts;
        opts.frames = {std::string(300, 'a')};
        fixture::WsFixture ws(opts);
        Observation obs =
            probe_websocket({"127.0.0.1", ws.port()}, "/", scope, limiter, cfg);
        CHECK(obs.payload == std::string(300, 'a'));
    }

    SECTION("non-101 response raises HandshakeRejected") {
        fixture::WsFixture::Options opts;
        opts.reject = true;
        fixture::WsFixture ws(opts);
        try {
            probe_websocket({"127.0.0.1", ws.port()}, "/socket", scope, limiter,
                            cfg);
            FAIL("expected HandshakeRejected");
        } catch (const HandshakeRejected& e) {
            CHECK(std::string(e.what()).find("403") != std::string::npos);
        }
    }
}

TEST_CASE("tls probe reads certificate identity fields") {
    fixture::TlsFixture tls("vmanage-440f62eb-4e91", "Viptela Inc");
    ScanScope scope = loopback_scope();
    RateLimiter limiter(1000);

    Observation obs =
        probe_tls({"127.0.0.1", tls.port()}, scope, limiter, fast_cfg());
    CHECK(obs.channel == Channel::tls_cert_field);
    CHECK(obs.meta.at("subject_cn") == "vmanage-440f62eb-4e91");
    CHECK(obs.meta.at("organization") == "Viptela Inc");
    CHECK(obs.meta.at("issuer_cn") == "vmanage-440f62eb-4e91"); // self-signed
    CHECK(obs.meta.at("fingerprint_sha256") == tls.fingerprint_sha256());
    CHECK(obs.payload.find("Viptela Inc") != std::string::npos);

    SECTION("plain tcp listener is a tls error") {
        fixture::SshFixture plain("");
        CHECK_THROWS_AS(
            probe_tls({"127.0.0.1", plain.port()}, scope, limiter, fast_cfg()),
            TlsError);
    }
}

TEST_CASE("rate limiter keeps every sliding second under the cap") {
    RateLimiter limiter(10.0);
    std::vector<std::chrono::steady_clock::time_point> stamps;
    for (int i = 0; i < 21; ++i) {
        limiter.acquire();
        stamps.push_back(std::chrono::steady_clock::now());
    }
    // Grant i+10 must sit at least ~1s after grant i, otherwise some window
    // held 11 grants.
    for (size_t i = 0; i + 10 < stamps.size(); ++i) {
        auto gap = std::chrono::duration_cast<std::chrono::milliseconds>(
            stamps[i + 10] - stamps[i]);
        CHECK(gap.count() >= 950);
    }
}
