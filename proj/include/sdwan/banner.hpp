// banner.hpp -- search-engine result records and the JSONL fixture format
// used for replay mode.

#ifndef SDWAN_BANNER_HPP
#define SDWAN_BANNER_HPP

#include <cstdint>
#include <fstream>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/core.hpp"

namespace sdwan {

struct BannerRecord {
    std::string ip;
    int port = 0;
    std::string transport = "tcp"; // tcp | udp
    std::optional<std::string> title;
    std::map<std::string, std::string> headers;
    std::optional<std::string> body_sha256;
    std::optional<std::int32_t> favicon_hash;
    std::optional<std::string> tls_issuer_cn;
    std::optional<std::string> tls_org;
    std::optional<std::string> tls_fingerprint_sha256;
    std::optional<std::string> ssh_banner;
    std::optional<std::string> org;
    std::optional<std::string> region;
    std::string captured_at;
};

struct Candidate {
    std::string ip;
    int port = 0;
    std::string matched_signature;
    Engine matched_engine = Engine::shodan;
    Confidence confidence = Confidence::Tentative;
    CandidateSource source = CandidateSource::replay;
    std::optional<std::string> region;
    std::optional<std::string> org;
};

namespace detail {

inline void validate_record(const BannerRecord& r, const std::string& ctx) {
    if (r.port < 1 || r.port > 65535)
        throw ParseError(ctx + ": port out of range");
    if (r.transport != "tcp" && r.transport != "udp")
        throw ParseError(ctx + ": transport must be tcp or udp");
    if (r.body_sha256 && !is_lower_hex(*r.body_sha256, 64))
        throw ParseError(ctx + ": body_sha256 is not lowercase 64-char hex");
    if (r.tls_fingerprint_sha256 && !is_lower_hex(*r.tls_fingerprint_sha256, 64))
        throw ParseError(ctx + ": tls_fingerprint_sha256 is not lowercase 64-char hex");
}

inline std::optional<std::string> opt_str(const nlohmann::json& j,
                                          const char* key) {
    if (!j.contains(key) || j.at(key).is_null()) return std::nullopt;
    return j.at(key).get<std::string>();
}

} // namespace detail

inline BannerRecord parse_banner_record(const std::string& line,
                                        const std::string& ctx) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    BannerRecord r;
    try {
        r.ip = j.at("ip").get<std::string>();
        r.port = j.at("port").get<int>();
        if (j.contains("transport")) r.transport = j.at("transport").get<std::string>();
        r.title = detail::opt_str(j, "title");
        if (j.contains("headers"))
            for (auto& [k, v] : j.at("headers").items())
                r.headers[k] = v.get<std::string>();
        r.body_sha256 = detail::opt_str(j, "body_sha256");
        if (j.contains("favicon_hash") && !j.at("favicon_hash").is_null())
            r.favicon_hash = j.at("favicon_hash").get<std::int32_t>();
        r.tls_issuer_cn = detail::opt_str(j, "tls_issuer_cn");
        r.tls_org = detail::opt_str(j, "tls_org");
        r.tls_fingerprint_sha256 = detail::opt_str(j, "tls_fingerprint_sha256");
        r.ssh_banner = detail::opt_str(j, "ssh_banner");
        r.org = detail::opt_str(j, "org");
        r.region = detail::opt_str(j, "region");
        if (j.contains("captured_at")) r.captured_at = j.at("captured_at").get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(ctx + ": " + e.what());
    }
    detail::validate_record(r, ctx);
    return r;
}

inline std::vector<BannerRecord> load_banner_records(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in.good()) throw ParseError(path + ": cannot open file");
    std::vector<BannerRecord> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        out.push_back(parse_banner_record(t, path + ":" + std::to_string(lineno)));
    }
    return out;
}

} // namespace sdwan

#endif // SDWAN_BANNER_HPP
