// pipeline.hpp -- end-to-end assembly: candidates from search or replay,
// observations from probes or a replay capture file, then per-host findings
// with version status, vulnerability matches, and weakness flags.

#ifndef SDWAN_PIPELINE_HPP
#define SDWAN_PIPELINE_HPP

#include <algorithm>
#include <atomic>
#include <fstream>
#include <limits>
#include <map>
#include <mutex>
#include <optional>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/assess.hpp"
#include "sdwan/banner.hpp"
#include "sdwan/extract.hpp"
#include "sdwan/filter.hpp"
#include "sdwan/probe.hpp"
#include "sdwan/query.hpp"
#include "sdwan/scope.hpp"
#include "sdwan/signature.hpp"

namespace sdwan {

// ---------------------------------------------------------------------------
// Observation JSONL
// ---------------------------------------------------------------------------

inline Observation parse_observation_line(const std::string& line,
                                          const std::string& context) {
    nlohmann::json j;
    try {
        j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
    Observation o;
    try {
        o.host.ip = j.at("ip").get<std::string>();
        o.host.port = j.at("port").get<int>();
        std::string channel_name = j.at("channel").get<std::string>();
        auto ch = enum_from_string<Channel>(channel_name);
        if (!ch) throw ParseError(context + ": unknown channel '" + channel_name + "'");
        o.channel = *ch;
        o.payload = j.at("payload").get<std::string>();
        if (j.contains("meta"))
            for (const auto& [k, v] : j["meta"].items())
                o.meta[k] = v.is_string() ? v.get<std::string>() : v.dump();
        if (j.contains("captured_at"))
            o.captured_at = j["captured_at"].get<std::string>();
    } catch (const nlohmann::json::exception& e) {
        throw ParseError(context + ": " + e.what());
    }
    if (o.host.ip.empty()) throw ParseError(context + ": empty ip");
    if (o.host.port < 1 || o.host.port > 65535)
        throw ParseError(context + ": port out of range");
    return o;
}

// Loads a capture file; observations without an explicit origin are tagged
// with origin_tag so downstream weakness flagging can tell replayed data
// from first-hand contact.
inline std::vector<Observation> load_observations(const std::string& path,
                                                  const std::string& origin_tag = "replay") {
    std::ifstream in(path);
    if (!in) throw ParseError(path + ": cannot open");
    std::vector<Observation> out;
    std::string line;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::string t = trim(line);
        if (t.empty() || t[0] == '#') continue;
        Observation o = parse_observation_line(t, path + ":" + std::to_string(lineno));
        o.meta.emplace("origin", origin_tag);
        out.push_back(std::move(o));
    }
    return out;
}

inline nlohmann::ordered_json observation_to_json(const Observation& o) {
    nlohmann::ordered_json j;
    j["ip"] = o.host.ip;
    j["port"] = o.host.port;
    j["channel"] = to_string(o.channel);
    j["payload"] = o.payload;
    if (!o.meta.empty()) j["meta"] = o.meta;
    if (!o.captured_at.empty()) j["captured_at"] = o.captured_at;
    return j;
}

// ---------------------------------------------------------------------------
// Findings
// ---------------------------------------------------------------------------

struct Finding {
    std::string ip;
    int port = 0;
    ProductRef product;
    Confidence confidence = Confidence::Tentative;
    CandidateSource source = CandidateSource::replay;
    std::string region = "unknown";
    std::string org;
    std::vector<std::string> signature_ids;
    std::string version_raw; // empty when no usable leak
    std::optional<Scheme> version_scheme;
    std::optional<LeakKind> version_kind;
    VersionStatus status = VersionStatus::unknown;
    std::vector<VulnMatch> vulns;
    std::vector<std::string> weaknesses;
    std::vector<std::string> notes;
};

namespace detail {

inline int kind_priority(LeakKind k) {
    switch (k) {
    case LeakKind::direct: return 0;
    case LeakKind::package: return 1;
    case LeakKind::ui_component: return 2;
    case LeakKind::indirect: return 3;
    }
    return 3;
}

// Picks the version leak a finding should carry. Direct-style leaks beat
// indirect ones; conflicting direct raws are reported, not merged.
inline std::optional<LeakRecord> pick_version_leak(std::vector<LeakRecord> leaks,
                                                   std::vector<std::string>& notes) {
    if (leaks.empty()) return std::nullopt;
    std::sort(leaks.begin(), leaks.end(),
              [](const LeakRecord& a, const LeakRecord& b) {
                  int pa = kind_priority(a.kind), pb = kind_priority(b.kind);
                  if (pa != pb) return pa < pb;
                  return a.raw < b.raw;
              });
    int best = kind_priority(leaks.front().kind);
    std::vector<std::string> raws;
    std::optional<LeakRecord> chosen;
    for (const auto& l : leaks) {
        if (kind_priority(l.kind) != best) continue;
        if (std::find(raws.begin(), raws.end(), l.raw) == raws.end())
            raws.push_back(l.raw);
        if (!chosen) chosen = l;
    }
    if (raws.size() > 1) {
        std::string joined;
        for (const auto& r : raws) {
            if (!joined.empty()) joined += ", ";
            joined += r;
        }
        notes.push_back("conflicting version leaks: " + joined);
        return std::nullopt;
    }
    return chosen;
}

} // namespace detail

// One finding per deduplicated candidate, enriched with everything the
// host's observations support.
inline std::vector<Finding> build_findings(const SignatureSet& set,
                                           const Catalog& catalog,
                                           const std::vector<VulnRule>& rules,
                                           const std::vector<Candidate>& candidates,
                                           const std::vector<Observation>& observations) {
    std::map<std::string, std::vector<Observation>> obs_by_ip;
    for (const Observation& o : observations) obs_by_ip[o.host.ip].push_back(o);

    std::vector<LeakRecord> all_leaks = extract_all(set, observations);

    std::vector<Finding> findings;
    for (const Candidate& cand : candidates) {
        const Signature* seed = set.find(cand.matched_signature);
        if (!seed) throw ValidationError("candidate references unknown signature " +
                                         cand.matched_signature);
        Finding f;
        f.ip = cand.ip;
        f.port = cand.port;
        f.product = seed->product;
        f.confidence = cand.confidence;
        f.source = cand.source;
        f.region = cand.region && !cand.region->empty() ? *cand.region : "unknown";
        f.org = cand.org.value_or("");
        f.signature_ids.push_back(seed->id);

        auto it = obs_by_ip.find(cand.ip);
        const std::vector<Observation> no_obs;
        const std::vector<Observation>& host_obs =
            it == obs_by_ip.end() ? no_obs : it->second;

        for (const Observation& obs : host_obs) {
            for (const Signature* sig : match_signatures(set, obs)) {
                if (sig->product.same_pair(f.product)) {
                    if (tier_rank(sig->confidence) < tier_rank(f.confidence))
                        f.confidence = sig->confidence;
                    if (std::find(f.signature_ids.begin(), f.signature_ids.end(),
                                  sig->id) == f.signature_ids.end())
                        f.signature_ids.push_back(sig->id);
                } else {
                    std::string note = "also matched " + sig->id + " (" +
                                       sig->product.display() + ")";
                    if (std::find(f.notes.begin(), f.notes.end(), note) ==
                        f.notes.end())
                        f.notes.push_back(note);
                }
            }
        }
        std::sort(f.signature_ids.begin(), f.signature_ids.end());

        std::vector<LeakRecord> product_leaks;
        for (const LeakRecord& l : all_leaks)
            if (l.host.ip == cand.ip && l.product.same_pair(f.product))
                product_leaks.push_back(l);
        if (auto chosen = detail::pick_version_leak(std::move(product_leaks), f.notes)) {
            f.version_raw = chosen->raw;
            f.version_scheme = chosen->scheme;
            f.version_kind = chosen->kind;
            f.status = assess_leak(catalog, *chosen);
            f.vulns = match_vuln_rules(rules, f.product, chosen->raw, chosen->scheme);
        }
        f.weaknesses = flag_weaknesses(host_obs);
        findings.push_back(std::move(f));
    }
    std::sort(findings.begin(), findings.end(),
              [](const Finding& a, const Finding& b) { return a.ip < b.ip; });
    return findings;
}

inline nlohmann::ordered_json finding_to_json(const Finding& f) {
    nlohmann::ordered_json j;
    j["ip"] = f.ip;
    j["port"] = f.port;
    j["vendor"] = f.product.vendor;
    j["product"] = f.product.product;
    j["product_class"] = to_string(f.product.product_class);
    j["confidence"] = to_string(f.confidence);
    j["source"] = to_string(f.source);
    j["region"] = f.region;
    if (!f.org.empty()) j["org"] = f.org;
    j["signatures"] = f.signature_ids;
    if (!f.version_raw.empty()) {
        j["version"] = {{"raw", f.version_raw},
                        {"scheme", to_string(*f.version_scheme)},
                        {"kind", to_string(*f.version_kind)}};
    }
    j["status"] = to_string(f.status);
    if (!f.vulns.empty()) {
        nlohmann::ordered_json arr = nlohmann::ordered_json::array();
        for (const auto& v : f.vulns) {
            nlohmann::ordered_json jv;
            jv["rule_id"] = v.rule_id;
            if (!v.cwe.empty()) jv["cwe"] = v.cwe;
            if (!v.note.empty()) jv["note"] = v.note;
            arr.push_back(jv);
        }
        j["vulns"] = arr;
    }
    j["weaknesses"] = f.weaknesses;
    if (!f.notes.empty()) j["notes"] = f.notes;
    return j;
}

inline nlohmann::ordered_json leak_to_json(const LeakRecord& l) {
    nlohmann::ordered_json j;
    j["ip"] = l.host.ip;
    j["port"] = l.host.port;
    j["vendor"] = l.product.vendor;
    j["product"] = l.product.product;
    j["signature"] = l.signature_id;
    j["extractor"] = l.extractor_id;
    j["kind"] = to_string(l.kind);
    j["scheme"] = to_string(l.scheme);
    j["raw"] = l.raw;
    return j;
}

// ---------------------------------------------------------------------------
// Replay pipeline
// ---------------------------------------------------------------------------

struct PipelineResult {
    std::vector<RenderedQuery> queries;
    std::vector<Candidate> candidates; // deduplicated
    std::vector<Observation> observations;
    std::vector<LeakRecord> leaks;
    std::vector<Finding> findings;
};

inline PipelineResult run_replay_pipeline(const SignatureSet& set,
                                          const Catalog& catalog,
                                          const std::vector<VulnRule>& rules,
                                          const std::string& banner_path,
                                          const std::string& observations_path,
                                          Confidence min_confidence = Confidence::Tentative) {
    PipelineResult r;
    FixtureIndex index = load_fixture_index(banner_path);

    for (Engine engine : {Engine::shodan, Engine::censys}) {
        RenderResult rendered = render_all(set, engine, min_confidence);
        for (const RenderedQuery& q : rendered.queries) {
            r.queries.push_back(q);
            for (const Candidate& c :
                 replay_search(index, q, std::numeric_limits<size_t>::max()))
                r.candidates.push_back(c);
        }
    }
    r.candidates = dedup(r.candidates);

    if (!observations_path.empty())
        r.observations = load_observations(observations_path, "replay");

    r.leaks = extract_all(set, r.observations);
    r.findings = build_findings(set, catalog, rules, r.candidates, r.observations);
    return r;
}

// ---------------------------------------------------------------------------
// Live probe orchestration
// ---------------------------------------------------------------------------

// Probes every candidate with the protocol its port implies. Scope
// violations abort the sweep; any other per-host failure is recorded and
// skipped so one dead host cannot sink a run.
inline std::vector<Observation> probe_candidates(const std::vector<Candidate>& candidates,
                                                 const SignatureSet& set,
                                                 const ScanScope& scope,
                                                 RateLimiter& limiter,
                                                 const ProbeConfig& cfg,
                                                 int workers,
                                                 std::vector<std::string>& errors) {
    if (workers < 1) workers = 1;
    std::vector<Observation> out;
    std::mutex mu;
    std::atomic<size_t> next{0};
    std::exception_ptr scope_failure;

    auto probe_one = [&](const Candidate& cand) {
        std::vector<Observation> got;
        HostPort host{cand.ip, cand.port};
        if (cand.port == 22) {
            got.push_back(probe_ssh_issue(host, scope, limiter, cfg));
        } else if (cand.port == 161) {
            got.push_back(probe_snmp(cand.ip, "public", scope, limiter, cfg, cand.port));
        } else {
            bool tls = cand.port == 443 || cand.port == 8443 || cand.port == 4433;
            auto http_obs = probe_http(host, tls, scope, limiter, cfg);
            got.insert(got.end(), http_obs.begin(), http_obs.end());
            if (tls) {
                try {
                    got.push_back(probe_tls(host, scope, limiter, cfg));
                } catch (const TlsError&) {
                    // certificate capture is best-effort on top of HTTP
                }
            }
            const Signature* sig = set.find(cand.matched_signature);
            if (sig && !sig->ws_path.empty()) {
                try {
                    got.push_back(probe_websocket(host, sig->ws_path, scope,
                                                  limiter, cfg));
                } catch (const HandshakeRejected&) {
                }
            }
        }
        std::lock_guard<std::mutex> lk(mu);
        for (auto& o : got) out.push_back(std::move(o));
    };

    auto worker = [&] {
        for (;;) {
            size_t i = next.fetch_add(1);
            if (i >= candidates.size()) return;
            {
                std::lock_guard<std::mutex> lk(mu);
                if (scope_failure) return;
            }
            try {
                probe_one(candidates[i]);
            } catch (const ScopeViolation&) {
                std::lock_guard<std::mutex> lk(mu);
                if (!scope_failure) scope_failure = std::current_exception();
            } catch (const Error& e) {
                std::lock_guard<std::mutex> lk(mu);
                errors.push_back(candidates[i].ip + ":" +
                                 std::to_string(candidates[i].port) + ": " +
                                 e.what());
            }
        }
    };

    std::vector<std::thread> pool;
    for (int i = 0; i < workers; ++i) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
    if (scope_failure) std::rethrow_exception(scope_failure);

    std::sort(out.begin(), out.end(), [](const Observation& a, const Observation& b) {
        return std::tie(a.host.ip, a.host.port, a.channel, a.payload) <
               std::tie(b.host.ip, b.host.port, b.channel, b.payload);
    });
    return out;
}

} // namespace sdwan

#endif // SDWAN_PIPELINE_HPP
