// scope.hpp -- the authorized-scope guard: CIDR allowlists, the scope file
// format, and the global probe rate limiter.

#ifndef SDWAN_SCOPE_HPP
#define SDWAN_SCOPE_HPP

#include <arpa/inet.h>

#include <chrono>
#include <condition_variable>
#include <cstdint>
#include <deque>
#include <fstream>
#include <mutex>
#include <string>
#include <thread>
#include <vector>

#include "sdwan/core.hpp"

namespace sdwan {

struct CidrBlock {
    bool v6 = false;
    std::uint32_t addr4 = 0;
    unsigned char addr6[16] = {};
    int prefix = 0;
};

inline CidrBlock parse_cidr(const std::string& text) {
    std::string body = trim(text);
    int prefix = -1;
    size_t slash = body.find('/');
    std::string host = body;
    if (slash != std::string::npos) {
        host = body.substr(0, slash);
        try {
            prefix = std::stoi(body.substr(slash + 1));
        } catch (...) {
            throw ParseError("bad CIDR prefix in '" + text + "'");
        }
    }
    CidrBlock b;
    in_addr a4{};
    in6_addr a6{};
    if (inet_pton(AF_INET, host.c_str(), &a4) == 1) {
        b.v6 = false;
        b.addr4 = ntohl(a4.s_addr);
        b.prefix = prefix < 0 ? 32 : prefix;
        if (b.prefix < 0 || b.prefix > 32)
            throw ParseError("bad IPv4 prefix in '" + text + "'");
    } else if (inet_pton(AF_INET6, host.c_str(), &a6) == 1) {
        b.v6 = true;
        std::copy(std::begin(a6.s6_addr), std::end(a6.s6_addr), b.addr6);
        b.prefix = prefix < 0 ? 128 : prefix;
        if (b.prefix < 0 || b.prefix > 128)
            throw ParseError("bad IPv6 prefix in '" + text + "'");
    } else {
        throw ParseError("bad CIDR '" + text + "'");
    }
    return b;
}

inline bool cidr_contains(const CidrBlock& b, const std::string& ip) {
    in_addr a4{};
    in6_addr a6{};
    if (!b.v6 && inet_pton(AF_INET, ip.c_str(), &a4) == 1) {
        if (b.prefix == 0) return true;
        std::uint32_t host = ntohl(a4.s_addr);
        std::uint32_t mask = b.prefix == 32 ? 0xffffffffu
                                            : ~((1u << (32 - b.prefix)) - 1);
        return (host & mask) == (b.addr4 & mask);
    }
    if (b.v6 && inet_pton(AF_INET6, ip.c_str(), &a6) == 1) {
        int bits = b.prefix;
        for (int i = 0; i < 16 && bits > 0; ++i, bits -= 8) {
            unsigned char mask =
                bits >= 8 ? 0xff : static_cast<unsigned char>(0xff << (8 - bits));
            if ((a6.s6_addr[i] & mask) != (b.addr6[i] & mask)) return false;
        }
        return true;
    }
    return false;
}

struct ScanScope {
    std::vector<CidrBlock> allowlist;
    size_t max_hosts = 0; // 0 = unlimited
    double rate_limit = 10.0; // probes per second

    bool allows(const std::string& ip) const {
        for (const auto& b : allowlist)
            if (cidr_contains(b, ip)) return true;
        return false;
    }
    void require(const std::string& ip) const {
        if (allowlist.empty())
            throw ScopeViolation("scope allowlist is empty; refusing to probe " + ip);
        if (!allows(ip))
            throw ScopeViolation(ip + " is outside the scope allowlist");
    }
};

inline std::vector<CidrBlock> load_scope_file(const std::string& path) {
    std::ifstream in(path);
    if (!in.good()) throw ParseError(path + ": cannot open scope file");
    std::vector<CidrBlock> out;
    std::string line;
    while (std::getline(in, line)) {
        std::string t = trim(line);
        size_t hash = t.find('#');
        if (hash != std::string::npos) t = trim(t.substr(0, hash));
        if (t.empty()) continue;
        out.push_back(parse_cidr(t));
    }
    return out;
}

// Sliding-window limiter: at most `limit` acquisitions inside any 1 s
// window, enforced by remembering recent grant times.
class RateLimiter {
public:
    explicit RateLimiter(double per_second)
        : limit_(per_second < 1.0 ? 1 : static_cast<size_t>(per_second)) {}

    void acquire() {
        using clock = std::chrono::steady_clock;
        std::unique_lock lock(mu_);
        for (;;) {
            auto now = clock::now();
            while (!grants_.empty() &&
                   now - grants_.front() >= std::chrono::seconds(1))
                grants_.pop_front();
            if (grants_.size() < limit_) {
                grants_.push_back(now);
                return;
            }
            auto wake = grants_.front() + std::chrono::seconds(1);
            cv_.wait_until(lock, wake);
        }
    }

private:
    size_t limit_;
    std::mutex mu_;
    std::condition_variable cv_;
    std::deque<std::chrono::steady_clock::time_point> grants_;
};

} // namespace sdwan

#endif // SDWAN_SCOPE_HPP
