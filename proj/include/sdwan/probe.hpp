// probe.hpp -- active fingerprinting: HTTP(S) page and asset capture, SSH
// pre-identification banner read, SNMPv2c sysDescr GET, WebSocket handshake
// capture, and TLS certificate field capture. All probes are read-only: they
// send only the bytes each protocol requires to elicit a banner and never
// transmit credentials.

#ifndef SDWAN_PROBE_HPP
#define SDWAN_PROBE_HPP

#include <arpa/inet.h>
#include <fcntl.h>
#include <netinet/in.h>
#include <poll.h>
#include <sys/socket.h>
#include <unistd.h>

#include <openssl/err.h>
#include <openssl/rand.h>
#include <openssl/ssl.h>
#include <openssl/x509.h>

#include <chrono>
#include <cstring>
#include <ctime>
#include <map>
#include <optional>
#include <regex>
#include <string>
#include <vector>

#include "sdwan/core.hpp"
#include "sdwan/hash.hpp"
#include "sdwan/http.hpp"
#include "sdwan/scope.hpp"

namespace sdwan {

inline constexpr const char* kUserAgent = "sdwan-census/1.0 (read-only survey)";

struct HostPort {
    std::string ip;
    int port = 0;
    std::string display() const { return ip + ":" + std::to_string(port); }
};

struct Observation {
    HostPort host;
    Channel channel = Channel::html_pattern;
    std::string payload;
    std::map<std::string, std::string> meta;
    std::string captured_at;
};

struct ProbeConfig {
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 10000;
    int host_budget_ms = 60000;
    int ws_window_ms = 3000;
    size_t asset_budget = 8;
    int redirect_cap = 5;
    size_t payload_cap = 1 << 20;
};

namespace detail {

inline std::string now_iso8601() {
    auto t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
    std::tm tm{};
    gmtime_r(&t, &tm);
    char buf[32];
    std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
    return buf;
}

inline Observation make_observation(const HostPort& host, Channel channel,
                                    std::string payload,
                                    std::map<std::string, std::string> meta) {
    Observation o;
    o.host = host;
    o.channel = channel;
    o.payload = std::move(payload);
    o.meta = std::move(meta);
    o.meta.emplace("origin", "live");
    o.captured_at = now_iso8601();
    return o;
}

class Fd {
public:
    explicit Fd(int fd = -1) : fd_(fd) {}
    ~Fd() { reset(); }
    Fd(const Fd&) = delete;
    Fd& operator=(const Fd&) = delete;
    int get() const { return fd_; }
    void reset(int fd = -1) {
        if (fd_ >= 0) ::close(fd_);
        fd_ = fd;
    }
    int release() {
        int f = fd_;
        fd_ = -1;
        return f;
    }

private:
    int fd_;
};

inline int connect_with_timeout(const std::string& ip, int port, int timeout_ms) {
    addrinfo hints{};
    hints.ai_family = AF_UNSPEC;
    hints.ai_socktype = SOCK_STREAM;
    hints.ai_flags = AI_NUMERICHOST;
    addrinfo* res = nullptr;
    if (getaddrinfo(ip.c_str(), std::to_string(port).c_str(), &hints, &res) != 0)
        throw ConnectTimeout(ip + ": address not parseable");
    Fd fd(::socket(res->ai_family, res->ai_socktype, 0));
    if (fd.get() < 0) {
        freeaddrinfo(res);
        throw ConnectTimeout(ip + ": socket() failed");
    }
    int flags = fcntl(fd.get(), F_GETFL, 0);
    fcntl(fd.get(), F_SETFL, flags | O_NONBLOCK);
    int rc = ::connect(fd.get(), res->ai_addr, res->ai_addrlen);
    freeaddrinfo(res);
    if (rc != 0 && errno != EINPROGRESS)
        throw ConnectTimeout(ip + ":" + std::to_string(port) + ": connect refused");
    if (rc != 0) {
        pollfd pfd{fd.get(), POLLOUT, 0};
        int pr = ::poll(&pfd, 1, timeout_ms);
        if (pr <= 0)
            throw ConnectTimeout(ip + ":" + std::to_string(port) + ": connect timeout");
        int err = 0;
        socklen_t len = sizeof err;
        getsockopt(fd.get(), SOL_SOCKET, SO_ERROR, &err, &len);
        if (err != 0)
            throw ConnectTimeout(ip + ":" + std::to_string(port) + ": " +
                                 std::strerror(err));
    }
    fcntl(fd.get(), F_SETFL, flags);
    return fd.release();
}

// Reads until timeout, cap, or the predicate says the buffer is complete.
template <typename DonePred>
void read_until(int fd, std::string& buf, int timeout_ms, size_t cap,
                DonePred done) {
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(timeout_ms);
    char chunk[4096];
    while (buf.size() < cap && !done(buf)) {
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        pollfd pfd{fd, POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (pr <= 0) break;
        ssize_t n = ::recv(fd, chunk, sizeof chunk, 0);
        if (n <= 0) break;
        buf.append(chunk, static_cast<size_t>(n));
    }
}

inline void send_all(int fd, std::string_view data) {
    size_t off = 0;
    while (off < data.size()) {
        ssize_t n = ::send(fd, data.data() + off, data.size() - off, MSG_NOSIGNAL);
        if (n <= 0) throw TransportError("send failed");
        off += static_cast<size_t>(n);
    }
}

inline std::optional<std::string> extract_title(const std::string& html) {
    static const std::regex re("<title[^>]*>([\\s\\S]*?)</title>",
                               std::regex::icase);
    std::smatch m;
    if (std::regex_search(html, m, re)) return trim(m[1].str());
    return std::nullopt;
}

// Pulls script src= and link href= references from a page.
inline std::vector<std::string> extract_asset_refs(const std::string& html) {
    std::vector<std::string> out;
    static const std::regex script_re("<script[^>]*\\bsrc=[\"']([^\"']+)[\"']",
                                      std::regex::icase);
    static const std::regex link_re("<link[^>]*\\bhref=[\"']([^\"']+)[\"']",
                                    std::regex::icase);
    for (auto it = std::sregex_iterator(html.begin(), html.end(), script_re);
         it != std::sregex_iterator(); ++it)
        out.push_back((*it)[1].str());
    for (auto it = std::sregex_iterator(html.begin(), html.end(), link_re);
         it != std::sregex_iterator(); ++it)
        out.push_back((*it)[1].str());
    return out;
}

struct UrlParts {
    std::string scheme;
    std::string host;
    int port = 0;
    std::string path_query = "/";
};

inline std::optional<UrlParts> parse_url(const std::string& url) {
    static const std::regex re("^(https?)://\\[?([^/\\]]+?)\\]?(?::([0-9]+))?(/.*)?$");
    std::smatch m;
    if (!std::regex_match(url, m, re)) return std::nullopt;
    UrlParts p;
    p.scheme = m[1].str();
    p.host = m[2].str();
    p.port = m[3].matched ? std::stoi(m[3].str()) : (p.scheme == "https" ? 443 : 80);
    p.path_query = m[4].matched && !m[4].str().empty() ? m[4].str() : "/";
    return p;
}

inline bool looks_like_json_asset(const std::string& path,
                                  const std::string& content_type) {
    std::string p = to_lower(path);
    size_t q = p.find('?');
    if (q != std::string::npos) p = p.substr(0, q);
    if (p.ends_with(".js") || p.ends_with(".json") || p.ends_with(".mjs"))
        return true;
    return contains_ci(content_type, "javascript") || contains_ci(content_type, "json");
}

} // namespace detail

// ---------------------------------------------------------------------------
// HTTP(S)
// ---------------------------------------------------------------------------

inline std::vector<Observation> probe_http(const HostPort& host, bool tls,
                                           const ScanScope& scope,
                                           RateLimiter& limiter,
                                           const ProbeConfig& cfg = {}) {
    scope.require(host.ip);
    std::vector<Observation> out;

    const std::string origin = (tls ? "https://" : "http://") + host.ip + ":" +
                               std::to_string(host.port);
    auto make_client = [&](const std::string& base) {
        auto cli = std::make_unique<httplib::Client>(base);
        cli->set_connection_timeout(cfg.connect_timeout_ms / 1000,
                                    (cfg.connect_timeout_ms % 1000) * 1000);
        cli->set_read_timeout(cfg.read_timeout_ms / 1000,
                              (cfg.read_timeout_ms % 1000) * 1000);
        cli->enable_server_certificate_verification(false);
        cli->set_default_headers({{"User-Agent", kUserAgent}});
        return cli;
    };

    auto fetch = [&](const std::string& path) -> httplib::Result {
        limiter.acquire();
        auto cli = make_client(origin);
        return cli->Get(path);
    };

    // Root page, following redirects by hand so hop count and the final URI
    // stay visible.
    std::string path = "/";
    httplib::Result res = fetch(path);
    int hops = 0;
    while (res && res->status >= 300 && res->status < 400 &&
           res->has_header("Location") && hops < cfg.redirect_cap) {
        std::string loc = res->get_header_value("Location");
        if (loc.empty()) break;
        if (loc[0] == '/') {
            path = loc;
        } else {
            auto parts = detail::parse_url(loc);
            if (!parts || parts->host != host.ip || parts->port != host.port)
                break; // cross-origin redirect: record what we have
            path = parts->path_query;
        }
        ++hops;
        res = fetch(path);
    }
    if (!res) {
        auto err = res.error();
        if (err == httplib::Error::SSLConnection ||
            err == httplib::Error::SSLLoadingCerts ||
            err == httplib::Error::SSLServerVerification)
            throw TlsError(host.display() + ": " + httplib::to_string(err));
        throw ConnectTimeout(host.display() + ": " + httplib::to_string(err));
    }

    std::string body = res->body.substr(0, cfg.payload_cap);
    std::map<std::string, std::string> meta{
        {"final_uri", path},
        {"status", std::to_string(res->status)},
        {"redirect_hops", std::to_string(hops)},
    };
    if (res->has_header("Content-Type"))
        meta["content_type"] = res->get_header_value("Content-Type");
    if (auto title = detail::extract_title(body)) meta["title"] = *title;

    // Favicon hash rides along in the root observation's meta.
    {
        limiter.acquire();
        auto cli = make_client(origin);
        if (auto fav = cli->Get("/favicon.ico"); fav && fav->status == 200)
            meta["favicon_hash"] = std::to_string(favicon_hash(as_bytes(fav->body)));
    }

    out.push_back(detail::make_observation(host, Channel::html_pattern, body, meta));

    if (hops > 0 && path != "/")
        out.push_back(detail::make_observation(
            host, Channel::uri_pattern, path,
            {{"status", std::to_string(res->status)}, {"source", "redirect"}}));

    // Same-origin scripts and stylesheets, up to the fetch budget.
    size_t fetched = 0;
    for (const std::string& ref : detail::extract_asset_refs(body)) {
        if (fetched >= cfg.asset_budget) break;
        std::string asset_path;
        if (!ref.empty() && ref[0] == '/') {
            asset_path = ref;
        } else if (ref.rfind("http", 0) == 0) {
            auto parts = detail::parse_url(ref);
            if (!parts || parts->host != host.ip || parts->port != host.port)
                continue;
            asset_path = parts->path_query;
        } else if (!ref.empty() && ref.find(':') == std::string::npos) {
            asset_path = "/" + ref;
        } else {
            continue;
        }
        ++fetched;
        out.push_back(detail::make_observation(
            host, Channel::uri_pattern, asset_path, {{"source", "asset_ref"}}));
        httplib::Result ares = fetch(asset_path);
        if (!ares || ares->status != 200) continue;
        std::string ctype = ares->has_header("Content-Type")
                                ? ares->get_header_value("Content-Type")
                                : "";
        Channel ch = detail::looks_like_json_asset(asset_path, ctype)
                         ? Channel::json_field
                         : Channel::html_pattern;
        out.push_back(detail::make_observation(
            host, ch, ares->body.substr(0, cfg.payload_cap),
            {{"uri", asset_path}, {"content_type", ctype}, {"source", "asset"}}));
    }
    return out;
}

// ---------------------------------------------------------------------------
// SSH pre-identification banner
// ---------------------------------------------------------------------------

// Captures the warning text an SSH server may print before its
// identification line. Nothing is sent: no identification exchange, no key
// exchange, no credentials.
inline Observation probe_ssh_issue(const HostPort& host, const ScanScope& scope,
                                   RateLimiter& limiter,
                                   const ProbeConfig& cfg = {}) {
    scope.require(host.ip);
    limiter.acquire();
    detail::Fd fd(detail::connect_with_timeout(host.ip, host.port,
                                               cfg.connect_timeout_ms));
    std::string buf;
    detail::read_until(fd.get(), buf, cfg.read_timeout_ms, cfg.payload_cap,
                       [](const std::string& b) {
                           return b.find("SSH-") != std::string::npos &&
                                  b.find('\n', b.find("SSH-")) != std::string::npos;
                       });
    size_t ident = buf.find("SSH-");
    if (ident == std::string::npos)
        throw ProtocolError(host.display() + ": no SSH identification received");

    std::string pre = buf.substr(0, ident);
    std::string issue;
    for (const auto& line : split_lines(pre)) {
        if (!issue.empty()) issue += '\n';
        issue += line;
    }
    issue = trim(issue);
    size_t ident_end = buf.find('\n', ident);
    std::string ident_line =
        trim(buf.substr(ident, ident_end == std::string::npos
                                   ? std::string::npos
                                   : ident_end - ident));
    return detail::make_observation(host, Channel::ssh_issue, issue,
                                    {{"ident", ident_line}});
}

// ---------------------------------------------------------------------------
// SNMPv2c sysDescr
// ---------------------------------------------------------------------------

namespace detail {

inline void ber_len(std::string& out, size_t len) {
    if (len < 128) {
        out += static_cast<char>(len);
    } else {
        std::string bytes;
        while (len > 0) {
            bytes.insert(bytes.begin(), static_cast<char>(len & 0xff));
            len >>= 8;
        }
        out += static_cast<char>(0x80 | bytes.size());
        out += bytes;
    }
}

inline std::string ber_tlv(unsigned char tag, const std::string& body) {
    std::string out;
    out += static_cast<char>(tag);
    ber_len(out, body.size());
    out += body;
    return out;
}

inline std::string ber_int(long v) {
    std::string body;
    bool neg = v < 0;
    unsigned long u = static_cast<unsigned long>(v);
    do {
        body.insert(body.begin(), static_cast<char>(u & 0xff));
        u >>= 8;
    } while (u != 0 && u != ~0ul);
    if (!neg && (body[0] & 0x80)) body.insert(body.begin(), '\0');
    return ber_tlv(0x02, body);
}

// sysDescr.0
inline std::string ber_sysdescr_oid() {
    const unsigned char raw[] = {0x2b, 0x06, 0x01, 0x02, 0x01, 0x01, 0x01, 0x00};
    return ber_tlv(0x06, std::string(reinterpret_cast<const char*>(raw), sizeof raw));
}

struct BerReader {
    const unsigned char* p;
    const unsigned char* end;

    explicit BerReader(std::string_view buf)
        : p(reinterpret_cast<const unsigned char*>(buf.data())),
          end(p + buf.size()) {}

    bool done() const { return p >= end; }

    // Reads one TLV header; returns tag and positions the value bounds.
    unsigned char header(const unsigned char*& val, size_t& len) {
        if (end - p < 2) throw DecodeError("snmp: truncated BER header");
        unsigned char tag = *p++;
        size_t l = *p++;
        if (l & 0x80) {
            size_t n = l & 0x7f;
            if (n == 0 || n > 4 || static_cast<size_t>(end - p) < n)
                throw DecodeError("snmp: bad BER length");
            l = 0;
            for (size_t i = 0; i < n; ++i) l = (l << 8) | *p++;
        }
        if (static_cast<size_t>(end - p) < l)
            throw DecodeError("snmp: BER value overruns buffer");
        val = p;
        len = l;
        p += l;
        return tag;
    }
};

} // namespace detail

inline Observation probe_snmp(const std::string& ip, const std::string& community,
                              const ScanScope& scope, RateLimiter& limiter,
                              const ProbeConfig& cfg = {}, int port = 161) {
    if (community.empty())
        throw std::invalid_argument("snmp community must be nonempty");
    scope.require(ip);
    limiter.acquire();

    static int req_counter = 1000;
    std::string varbind =
        detail::ber_tlv(0x30, detail::ber_sysdescr_oid() + detail::ber_tlv(0x05, ""));
    std::string pdu_body = detail::ber_int(++req_counter) + detail::ber_int(0) +
                           detail::ber_int(0) + detail::ber_tlv(0x30, varbind);
    std::string msg = detail::ber_tlv(
        0x30, detail::ber_int(1) + detail::ber_tlv(0x04, community) +
                  detail::ber_tlv(0xa0, pdu_body));

    detail::Fd fd(::socket(AF_INET, SOCK_DGRAM, 0));
    if (fd.get() < 0) throw TransportError("snmp: socket() failed");
    sockaddr_in addr{};
    addr.sin_family = AF_INET;
    addr.sin_port = htons(static_cast<uint16_t>(port));
    if (inet_pton(AF_INET, ip.c_str(), &addr.sin_addr) != 1)
        throw ConnectTimeout(ip + ": address not parseable");
    if (::sendto(fd.get(), msg.data(), msg.size(), 0,
                 reinterpret_cast<sockaddr*>(&addr), sizeof addr) < 0)
        throw TransportError("snmp: sendto failed");

    pollfd pfd{fd.get(), POLLIN, 0};
    int pr = ::poll(&pfd, 1, cfg.read_timeout_ms);
    if (pr <= 0) throw ConnectTimeout(ip + ": snmp timeout (no response)");
    char buf[65536];
    ssize_t n = ::recv(fd.get(), buf, sizeof buf, 0);
    if (n <= 0) throw ConnectTimeout(ip + ": snmp receive failed");

    // message SEQ { version, community, response PDU { reqid, status, index,
    // varbinds SEQ { varbind SEQ { oid, value } } } }
    detail::BerReader top(std::string_view(buf, static_cast<size_t>(n)));
    const unsigned char* val;
    size_t len;
    if (top.header(val, len) != 0x30) throw DecodeError("snmp: not a message SEQUENCE");
    detail::BerReader m(std::string_view(reinterpret_cast<const char*>(val), len));
    if (m.header(val, len) != 0x02) throw DecodeError("snmp: missing version");
    if (m.header(val, len) != 0x04) throw DecodeError("snmp: missing community");
    std::string replied_community(reinterpret_cast<const char*>(val), len);
    unsigned char pdu_tag = m.header(val, len);
    if (pdu_tag != 0xa2) throw DecodeError("snmp: not a GetResponse PDU");
    detail::BerReader pdu(std::string_view(reinterpret_cast<const char*>(val), len));
    if (pdu.header(val, len) != 0x02) throw DecodeError("snmp: missing request id");
    if (pdu.header(val, len) != 0x02) throw DecodeError("snmp: missing error status");
    long status = 0;
    for (size_t i = 0; i < len; ++i) status = (status << 8) | val[i];
    if (pdu.header(val, len) != 0x02) throw DecodeError("snmp: missing error index");
    if (status != 0)
        throw DecodeError("snmp: agent reported error status " +
                          std::to_string(status));
    if (pdu.header(val, len) != 0x30) throw DecodeError("snmp: missing varbind list");
    detail::BerReader vbl(std::string_view(reinterpret_cast<const char*>(val), len));
    if (vbl.header(val, len) != 0x30) throw DecodeError("snmp: missing varbind");
    detail::BerReader vb(std::string_view(reinterpret_cast<const char*>(val), len));
    if (vb.header(val, len) != 0x06) throw DecodeError("snmp: missing OID");
    unsigned char value_tag = vb.header(val, len);
    if (value_tag != 0x04)
        throw DecodeError("snmp: varbind value is not an OCTET STRING");
    std::string sysdescr(reinterpret_cast<const char*>(val), len);

    return detail::make_observation(
        HostPort{ip, port}, Channel::snmp_sysdescr, sysdescr,
        {{"oid", "1.3.6.1.2.1.1.1.0"}, {"community", replied_community}});
}

// ---------------------------------------------------------------------------
// WebSocket
// ---------------------------------------------------------------------------

inline Observation probe_websocket(const HostPort& host, const std::string& path,
                                   const ScanScope& scope, RateLimiter& limiter,
                                   const ProbeConfig& cfg = {}) {
    scope.require(host.ip);
    limiter.acquire();
    detail::Fd fd(detail::connect_with_timeout(host.ip, host.port,
                                               cfg.connect_timeout_ms));

    unsigned char nonce[16];
    if (RAND_bytes(nonce, sizeof nonce) != 1)
        throw TransportError("websocket: RAND_bytes failed");
    std::string key = base64_encode({nonce, sizeof nonce});

    std::string req = "GET " + path + " HTTP/1.1\r\n" +
                      "Host: " + host.display() + "\r\n" +
                      "User-Agent: " + kUserAgent + "\r\n" +
                      "Upgrade: websocket\r\n"
                      "Connection: Upgrade\r\n"
                      "Sec-WebSocket-Key: " + key + "\r\n" +
                      "Sec-WebSocket-Version: 13\r\n\r\n";
    detail::send_all(fd.get(), req);

    std::string head;
    detail::read_until(fd.get(), head, cfg.read_timeout_ms, 64 * 1024,
                       [](const std::string& b) {
                           return b.find("\r\n\r\n") != std::string::npos;
                       });
    size_t hee = head.find("\r\n\r\n");
    if (hee == std::string::npos)
        throw HandshakeRejected(host.display() + ": no HTTP response to upgrade");
    std::string status_line = head.substr(0, head.find("\r\n"));
    if (status_line.find(" 101") == std::string::npos)
        throw HandshakeRejected(host.display() + ": " + status_line);

    // Frame capture for a bounded window.
    std::string stream = head.substr(hee + 4);
    auto deadline = std::chrono::steady_clock::now() +
                    std::chrono::milliseconds(cfg.ws_window_ms);
    std::string payload;
    bool closed = false;
    while (!closed && std::chrono::steady_clock::now() < deadline &&
           payload.size() < cfg.payload_cap) {
        // Decode complete frames available in the buffer.
        for (;;) {
            if (stream.size() < 2) break;
            unsigned char b0 = static_cast<unsigned char>(stream[0]);
            unsigned char b1 = static_cast<unsigned char>(stream[1]);
            unsigned char opcode = b0 & 0x0f;
            bool masked = b1 & 0x80;
            size_t plen = b1 & 0x7f;
            size_t off = 2;
            if (plen == 126) {
                if (stream.size() < 4) break;
                plen = (static_cast<unsigned char>(stream[2]) << 8) |
                       static_cast<unsigned char>(stream[3]);
                off = 4;
            } else if (plen == 127) {
                if (stream.size() < 10) break;
                plen = 0;
                for (int i = 0; i < 8; ++i)
                    plen = (plen << 8) | static_cast<unsigned char>(stream[2 + i]);
                off = 10;
            }
            size_t mask_off = off;
            if (masked) off += 4;
            if (stream.size() < off + plen) break;
            std::string frame = stream.substr(off, plen);
            if (masked)
                for (size_t i = 0; i < frame.size(); ++i)
                    frame[i] = static_cast<char>(
                        frame[i] ^ stream[mask_off + (i % 4)]);
            stream.erase(0, off + plen);
            if (opcode == 0x8) {
                closed = true;
                break;
            }
            if (opcode == 0x1 || opcode == 0x2 || opcode == 0x0)
                payload += frame;
        }
        if (closed) break;
        auto left = std::chrono::duration_cast<std::chrono::milliseconds>(
            deadline - std::chrono::steady_clock::now());
        if (left.count() <= 0) break;
        pollfd pfd{fd.get(), POLLIN, 0};
        int pr = ::poll(&pfd, 1, static_cast<int>(left.count()));
        if (pr <= 0) break;
        char chunk[4096];
        ssize_t n = ::recv(fd.get(), chunk, sizeof chunk, 0);
        if (n <= 0) break;
        stream.append(chunk, static_cast<size_t>(n));
    }

    return detail::make_observation(host, Channel::websocket_payload, payload,
                                    {{"path", path}, {"status", "101"}});
}

// ---------------------------------------------------------------------------
// TLS certificate fields
// ---------------------------------------------------------------------------

inline Observation probe_tls(const HostPort& host, const ScanScope& scope,
                             RateLimiter& limiter, const ProbeConfig& cfg = {}) {
    scope.require(host.ip);
    limiter.acquire();
    detail::Fd fd(detail::connect_with_timeout(host.ip, host.port,
                                               cfg.connect_timeout_ms));

    struct CtxGuard {
        SSL_CTX* ctx = nullptr;
        SSL* ssl = nullptr;
        ~CtxGuard() {
            if (ssl) SSL_free(ssl);
            if (ctx) SSL_CTX_free(ctx);
        }
    } g;
    g.ctx = SSL_CTX_new(TLS_client_method());
    if (!g.ctx) throw TlsError("SSL_CTX_new failed");
    // Appliances near-universally present self-signed certificates; the
    // whole point is to read them, so verification stays off.
    SSL_CTX_set_verify(g.ctx, SSL_VERIFY_NONE, nullptr);
    g.ssl = SSL_new(g.ctx);
    if (!g.ssl) throw TlsError("SSL_new failed");
    SSL_set_fd(g.ssl, fd.get());
    if (SSL_connect(g.ssl) != 1)
        throw TlsError(host.display() + ": TLS handshake failed");

    X509* cert = SSL_get_peer_certificate(g.ssl);
    if (!cert) throw TlsError(host.display() + ": no peer certificate");
    struct CertGuard {
        X509* c;
        ~CertGuard() { X509_free(c); }
    } cg{cert};

    auto name_entry = [](X509_NAME* name, int nid) -> std::string {
        char buf[256];
        int n = X509_NAME_get_text_by_NID(name, nid, buf, sizeof buf);
        return n > 0 ? std::string(buf, static_cast<size_t>(n)) : std::string();
    };
    std::string subject_cn = name_entry(X509_get_subject_name(cert), NID_commonName);
    std::string subject_org =
        name_entry(X509_get_subject_name(cert), NID_organizationName);
    std::string issuer_cn = name_entry(X509_get_issuer_name(cert), NID_commonName);

    unsigned char digest[EVP_MAX_MD_SIZE];
    unsigned int dlen = 0;
    if (X509_digest(cert, EVP_sha256(), digest, &dlen) != 1)
        throw TlsError("certificate digest failed");
    static const char hex[] = "0123456789abcdef";
    std::string fp;
    for (unsigned int i = 0; i < dlen; ++i) {
        fp += hex[digest[i] >> 4];
        fp += hex[digest[i] & 0xf];
    }

    char* subject_line = X509_NAME_oneline(X509_get_subject_name(cert), nullptr, 0);
    std::string payload = subject_line ? subject_line : "";
    if (subject_line) OPENSSL_free(subject_line);

    SSL_shutdown(g.ssl);
    return detail::make_observation(host, Channel::tls_cert_field, payload,
                                    {{"subject_cn", subject_cn},
                                     {"organization", subject_org},
                                     {"issuer_cn", issuer_cn},
                                     {"fingerprint_sha256", fp}});
}

} // namespace sdwan

#endif // SDWAN_PROBE_HPP
