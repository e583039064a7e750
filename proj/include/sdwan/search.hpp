// search.hpp -- live Shodan and Censys clients with pagination and bounded
// exponential backoff. Base URLs are overridable so tests can point the
// clients at loopback fixture servers.

#ifndef SDWAN_SEARCH_HPP
#define SDWAN_SEARCH_HPP

#include <chrono>
#include <functional>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/banner.hpp"
#include "sdwan/filter.hpp"
#include "sdwan/http.hpp"

namespace sdwan {

using Sleeper = std::function<void(std::chrono::milliseconds)>;

inline void default_sleeper(std::chrono::milliseconds d) {
    std::this_thread::sleep_for(d);
}

namespace detail {

constexpr int kPageSize = 100;
constexpr int kMaxTries = 5;

// Runs one HTTP call with retry on 429: waits 1s, 2s, 4s, 8s between tries.
inline httplib::Result
with_backoff(const std::function<httplib::Result()>& call, const Sleeper& sleep,
             const std::string& ctx) {
    std::chrono::milliseconds delay{1000};
    for (int attempt = 1;; ++attempt) {
        httplib::Result res = call();
        if (!res)
            throw TransportError(ctx + ": " + httplib::to_string(res.error()));
        if (res->status == 401 || res->status == 403)
            throw AuthError(ctx + ": HTTP " + std::to_string(res->status));
        if (res->status == 429) {
            if (attempt >= kMaxTries)
                throw QuotaError(ctx + ": rate limited after " +
                                 std::to_string(attempt) + " tries");
            sleep(delay);
            delay *= 2;
            continue;
        }
        if (res->status != 200)
            throw TransportError(ctx + ": HTTP " + std::to_string(res->status));
        return res;
    }
}

} // namespace detail

class ShodanClient {
public:
    ShodanClient(std::string base_url, std::string api_key,
                 Sleeper sleep = default_sleeper)
        : base_(std::move(base_url)), key_(std::move(api_key)),
          sleep_(std::move(sleep)) {}

    std::vector<Candidate> search(const RenderedQuery& q, size_t limit) {
        if (limit < 1) throw std::invalid_argument("search limit must be >= 1");
        if (key_.empty()) throw AuthError("shodan: no API key configured");
        std::vector<Candidate> out;
        httplib::Client cli(base_);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(30);
        for (int page = 1; out.size() < limit; ++page) {
            httplib::Params params{{"key", key_},
                                   {"query", q.text},
                                   {"page", std::to_string(page)}};
            auto res = detail::with_backoff(
                [&] {
                    return cli.Get("/shodan/host/search", params,
                                   httplib::Headers{});
                },
                sleep_, "shodan search");
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw TransportError(std::string("shodan: bad response body: ") +
                                     e.what());
            }
            auto matches = body.value("matches", nlohmann::json::array());
            for (const auto& m : matches) {
                Candidate c;
                c.ip = m.value("ip_str", "");
                c.port = m.value("port", 0);
                c.matched_signature = q.source_signature;
                c.matched_engine = Engine::shodan;
                c.confidence = q.confidence;
                c.source = CandidateSource::shodan;
                if (m.contains("location") && m["location"].contains("country_code") &&
                    !m["location"]["country_code"].is_null())
                    c.region = m["location"]["country_code"].get<std::string>();
                if (m.contains("org") && !m["org"].is_null())
                    c.org = m["org"].get<std::string>();
                out.push_back(std::move(c));
                if (out.size() >= limit) break;
            }
            if (matches.size() < static_cast<size_t>(detail::kPageSize)) break;
        }
        return out;
    }

private:
    std::string base_;
    std::string key_;
    Sleeper sleep_;
};

class CensysClient {
public:
    CensysClient(std::string base_url, std::string api_id, std::string api_secret,
                 Sleeper sleep = default_sleeper)
        : base_(std::move(base_url)), id_(std::move(api_id)),
          secret_(std::move(api_secret)), sleep_(std::move(sleep)) {}

    std::vector<Candidate> search(const RenderedQuery& q, size_t limit) {
        if (limit < 1) throw std::invalid_argument("search limit must be >= 1");
        if (id_.empty() || secret_.empty())
            throw AuthError("censys: API id/secret not configured");
        std::vector<Candidate> out;
        httplib::Client cli(base_);
        cli.set_basic_auth(id_, secret_);
        cli.set_connection_timeout(10);
        cli.set_read_timeout(30);
        int pages = 1;
        for (int page = 1; page <= pages && out.size() < limit; ++page) {
            nlohmann::json req{{"query", q.text}, {"page", page}};
            auto res = detail::with_backoff(
                [&] {
                    return cli.Post("/api/v1/search/ipv4", req.dump(),
                                    "application/json");
                },
                sleep_, "censys search");
            nlohmann::json body;
            try {
                body = nlohmann::json::parse(res->body);
            } catch (const nlohmann::json::parse_error& e) {
                throw TransportError(std::string("censys: bad response body: ") +
                                     e.what());
            }
            if (body.contains("metadata"))
                pages = body["metadata"].value("pages", 1);
            for (const auto& m : body.value("results", nlohmann::json::array())) {
                Candidate c;
                c.ip = m.value("ip", "");
                c.port = 0;
                if (m.contains("protocols") && m["protocols"].is_array() &&
                    !m["protocols"].empty()) {
                    std::string proto = m["protocols"][0].get<std::string>();
                    try {
                        c.port = std::stoi(proto.substr(0, proto.find('/')));
                    } catch (...) {
                    }
                }
                c.matched_signature = q.source_signature;
                c.matched_engine = Engine::censys;
                c.confidence = q.confidence;
                c.source = CandidateSource::censys;
                if (m.contains("location.country_code"))
                    c.region = m["location.country_code"].get<std::string>();
                out.push_back(std::move(c));
                if (out.size() >= limit) break;
            }
        }
        return out;
    }

private:
    std::string base_;
    std::string id_;
    std::string secret_;
    Sleeper sleep_;
};

} // namespace sdwan

#endif // SDWAN_SEARCH_HPP
