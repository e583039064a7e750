// sdwan-census: survey toolkit for SD-WAN management exposure.
//
// Subcommands:
//   gen-queries   render search-engine queries from the signature corpus
//   pipeline      run discovery -> probe/replay -> extract -> assess -> report
//   ssh-sweep     read-only SSH pre-identification banner sweep
//   validate      lint a signature corpus
//
// Exit codes: 0 success, 2 usage/configuration errors (including scope
// refusals), 3 partial probe failures (run completed, some hosts failed).

#include <CLI11.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "sdwan/assess.hpp"
#include "sdwan/banner.hpp"
#include "sdwan/core.hpp"
#include "sdwan/extract.hpp"
#include "sdwan/filter.hpp"
#include "sdwan/pipeline.hpp"
#include "sdwan/probe.hpp"
#include "sdwan/query.hpp"
#include "sdwan/report.hpp"
#include "sdwan/scope.hpp"
#include "sdwan/search.hpp"
#include "sdwan/signature.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitError = 2;
constexpr int kExitPartial = 3;

std::string env_or(const char* name, const std::string& fallback) {
    const char* v = std::getenv(name);
    return v && *v ? std::string(v) : fallback;
}

sdwan::Confidence parse_confidence_flag(const std::string& s) {
    auto c = sdwan::enum_from_string<sdwan::Confidence>(s);
    if (!c) throw sdwan::ParseError("unknown confidence tier '" + s + "'");
    return *c;
}

std::vector<sdwan::Engine> parse_engine_flag(const std::string& s) {
    if (s == "both") return {sdwan::Engine::shodan, sdwan::Engine::censys};
    auto e = sdwan::enum_from_string<sdwan::Engine>(s);
    if (!e) throw sdwan::ParseError("unknown engine '" + s + "'");
    return {*e};
}

void write_file(const std::filesystem::path& path, const std::string& content) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw sdwan::ParseError(path.string() + ": cannot open for writing");
    out << content;
}

int cmd_gen_queries(const std::string& corpus, const std::string& engine_flag,
                    const std::string& min_conf_flag) {
    sdwan::SignatureSet set = sdwan::load_signatures(corpus);
    sdwan::Confidence min_conf = parse_confidence_flag(min_conf_flag);
    for (sdwan::Engine engine : parse_engine_flag(engine_flag)) {
        sdwan::RenderResult r = sdwan::render_all(set, engine, min_conf);
        for (const auto& q : r.queries)
            std::cout << sdwan::to_string(q.confidence) << '\t' << q.text << '\n';
        for (const auto& s : r.skipped)
            std::cerr << "# skipped " << s.reason << '\n';
    }
    return kExitOk;
}

int cmd_validate(const std::string& corpus) {
    sdwan::SignatureSet set = sdwan::load_signatures(corpus);
    std::cout << "ok: " << set.signatures.size() << " signatures, "
              << set.extractors.size() << " extractors, "
              << set.products().size() << " products\n";
    return kExitOk;
}

struct PipelineArgs {
    std::string corpus;
    std::string catalog_path;
    std::string rules_path;
    std::string source;
    std::string observations;
    std::string scope_path;
    std::string out_dir;
    std::string min_confidence = "tentative";
    int workers = 16;
    double rate_limit = 5.0;
    int limit = 1000;
};

void write_outputs(const std::filesystem::path& out_dir,
                   const sdwan::PipelineResult& result) {
    std::filesystem::create_directories(out_dir);
    std::string findings_text;
    for (const auto& f : result.findings)
        findings_text += sdwan::finding_to_json(f).dump() + "\n";
    write_file(out_dir / "findings.jsonl", findings_text);

    std::string leaks_text;
    for (const auto& l : result.leaks)
        leaks_text += sdwan::leak_to_json(l).dump() + "\n";
    write_file(out_dir / "leaks.jsonl", leaks_text);

    sdwan::CensusStats stats = sdwan::compute_stats(result.findings);
    write_file(out_dir / "stats.csv", sdwan::render_csv(stats));
    write_file(out_dir / "summary.txt", sdwan::render_text(stats));
}

int cmd_pipeline(const PipelineArgs& args) {
    sdwan::SignatureSet set = sdwan::load_signatures(args.corpus);
    sdwan::Catalog catalog;
    if (!args.catalog_path.empty()) catalog = sdwan::load_catalog(args.catalog_path);
    std::vector<sdwan::VulnRule> rules;
    if (!args.rules_path.empty()) rules = sdwan::load_vuln_rules(args.rules_path);
    sdwan::Confidence min_conf = parse_confidence_flag(args.min_confidence);

    if (args.source.rfind("replay:", 0) == 0) {
        std::string banner_path = args.source.substr(7);
        if (banner_path.empty())
            throw sdwan::ParseError("--source replay: requires a fixture path");
        std::string obs_path = args.observations;
        if (obs_path.empty()) {
            // Sibling capture file: fixtures.jsonl -> fixtures.obs.jsonl
            std::string sibling = banner_path;
            const std::string suffix = ".jsonl";
            if (sibling.size() > suffix.size() &&
                sibling.compare(sibling.size() - suffix.size(), suffix.size(),
                                suffix) == 0)
                sibling = sibling.substr(0, sibling.size() - suffix.size()) +
                          ".obs.jsonl";
            if (std::filesystem::exists(sibling)) obs_path = sibling;
        }
        sdwan::PipelineResult result = sdwan::run_replay_pipeline(
            set, catalog, rules, banner_path, obs_path, min_conf);
        write_outputs(args.out_dir, result);
        std::cout << "findings: " << result.findings.size() << "\n";
        return kExitOk;
    }

    if (args.source != "shodan" && args.source != "censys")
        throw sdwan::ParseError("--source must be shodan, censys, or replay:PATH");
    if (args.scope_path.empty()) {
        std::cerr << "error: live sources require --scope\n";
        return kExitError;
    }

    sdwan::ScanScope scope;
    scope.allowlist = sdwan::load_scope_file(args.scope_path);
    if (scope.allowlist.empty()) {
        std::cerr << "error: scope allowlist is empty, refusing to probe\n";
        return kExitError;
    }
    scope.rate_limit = args.rate_limit;
    sdwan::RateLimiter limiter(args.rate_limit);

    sdwan::Engine engine = *sdwan::enum_from_string<sdwan::Engine>(args.source);
    sdwan::RenderResult rendered = sdwan::render_all(set, engine, min_conf);

    std::vector<sdwan::Candidate> candidates;
    if (engine == sdwan::Engine::shodan) {
        sdwan::ShodanClient client(env_or("SDWAN_SHODAN_BASE", "https://api.shodan.io"),
                                   env_or("SHODAN_API_KEY", ""));
        for (const auto& q : rendered.queries)
            for (auto& c : client.search(q, args.limit)) candidates.push_back(c);
    } else {
        sdwan::CensysClient client(env_or("SDWAN_CENSYS_BASE", "https://censys.io"),
                                   env_or("CENSYS_API_ID", ""),
                                   env_or("CENSYS_API_SECRET", ""));
        for (const auto& q : rendered.queries)
            for (auto& c : client.search(q, args.limit)) candidates.push_back(c);
    }
    candidates = sdwan::dedup(candidates);

    sdwan::ProbeConfig cfg;
    std::vector<std::string> probe_errors;
    sdwan::PipelineResult result;
    result.queries = rendered.queries;
    result.candidates = candidates;
    result.observations = sdwan::probe_candidates(candidates, set, scope, limiter,
                                                  cfg, args.workers, probe_errors);
    for (const auto& e : probe_errors) std::cerr << "probe: " << e << '\n';
    result.leaks = sdwan::extract_all(set, result.observations);
    result.findings = sdwan::build_findings(set, catalog, rules, candidates,
                                            result.observations);
    write_outputs(args.out_dir, result);
    std::cout << "findings: " << result.findings.size() << "\n";
    return probe_errors.empty() ? kExitOk : kExitPartial;
}

struct SweepArgs {
    std::string targets_path;
    std::string keyword;
    std::string scope_path;
    double rate_limit = 5.0;
    int connect_timeout_ms = 5000;
    int read_timeout_ms = 10000;
};

int cmd_ssh_sweep(const SweepArgs& args) {
    sdwan::ScanScope scope;
    scope.allowlist = sdwan::load_scope_file(args.scope_path);
    if (scope.allowlist.empty()) {
        std::cerr << "error: scope allowlist is empty, refusing to probe\n";
        return kExitError;
    }
    sdwan::RateLimiter limiter(args.rate_limit);
    sdwan::ProbeConfig cfg;
    cfg.connect_timeout_ms = args.connect_timeout_ms;
    cfg.read_timeout_ms = args.read_timeout_ms;

    std::ifstream in(args.targets_path);
    if (!in) throw sdwan::ParseError(args.targets_path + ": cannot open");
    std::string line;
    int matched = 0;
    while (std::getline(in, line)) {
        std::string t = sdwan::trim(line);
        if (t.empty() || t[0] == '#') continue;
        size_t colon = t.rfind(':');
        std::string ip = colon == std::string::npos ? t : t.substr(0, colon);
        int port = colon == std::string::npos ? 22 : std::stoi(t.substr(colon + 1));
        try {
            sdwan::Observation obs =
                sdwan::probe_ssh_issue({ip, port}, scope, limiter, cfg);
            if (sdwan::contains_ci(obs.payload, args.keyword)) {
                std::cout << ip << ":" << port << "\n";
                ++matched;
            }
        } catch (const sdwan::ScopeViolation&) {
            throw;
        } catch (const sdwan::Error& e) {
            std::cerr << "sweep: " << ip << ":" << port << ": " << e.what() << '\n';
        }
    }
    std::cerr << "matched " << matched << " host(s)\n";
    return kExitOk;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"SD-WAN management exposure survey toolkit"};
    app.require_subcommand(1);
    app.set_config("--config", "", "read defaults from an INI file");

    // gen-queries
    auto* gen = app.add_subcommand("gen-queries", "render search queries");
    std::string gen_corpus = "data/signatures.json";
    std::string gen_engine = "both";
    std::string gen_min_conf = "tentative";
    gen->add_option("--corpus", gen_corpus, "signature corpus")->envname("SDWAN_CORPUS");
    gen->add_option("--engine", gen_engine, "shodan | censys | both");
    gen->add_option("--min-confidence", gen_min_conf, "certain | firm | tentative");

    // pipeline
    auto* pipe = app.add_subcommand("pipeline", "run the full census pipeline");
    PipelineArgs pargs;
    pargs.corpus = "data/signatures.json";
    pipe->add_option("--corpus", pargs.corpus, "signature corpus")->envname("SDWAN_CORPUS");
    pipe->add_option("--catalog", pargs.catalog_path, "latest-version catalog");
    pipe->add_option("--rules", pargs.rules_path, "vulnerability rules");
    pipe->add_option("--source", pargs.source,
                     "shodan | censys | replay:FIXTURE.jsonl")->required();
    pipe->add_option("--observations", pargs.observations,
                     "replayed capture file (defaults to the fixture's sibling .obs.jsonl)");
    pipe->add_option("--scope", pargs.scope_path, "CIDR allowlist file (required for live sources)");
    pipe->add_option("--out", pargs.out_dir, "output directory")->required();
    pipe->add_option("--min-confidence", pargs.min_confidence, "certain | firm | tentative");
    pipe->add_option("--workers", pargs.workers, "probe worker threads");
    pipe->add_option("--rate-limit", pargs.rate_limit, "probes per second");
    pipe->add_option("--limit", pargs.limit, "max results per query");

    // ssh-sweep
    auto* sweep = app.add_subcommand("ssh-sweep", "read-only SSH banner sweep");
    SweepArgs sargs;
    sweep->add_option("--targets", sargs.targets_path, "file of ip:port lines")->required();
    sweep->add_option("--keyword", sargs.keyword, "substring to match in the issue banner")->required();
    sweep->add_option("--scope", sargs.scope_path, "CIDR allowlist file")->required();
    sweep->add_option("--rate-limit", sargs.rate_limit, "connects per second");
    sweep->add_option("--connect-timeout-ms", sargs.connect_timeout_ms, "TCP connect timeout");
    sweep->add_option("--read-timeout-ms", sargs.read_timeout_ms, "banner read timeout");

    // validate
    auto* val = app.add_subcommand("validate", "lint a signature corpus");
    std::string val_corpus = "data/signatures.json";
    val->add_option("--corpus", val_corpus, "signature corpus")->envname("SDWAN_CORPUS");

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitError;
    }

    try {
        if (gen->parsed()) return cmd_gen_queries(gen_corpus, gen_engine, gen_min_conf);
        if (pipe->parsed()) return cmd_pipeline(pargs);
        if (sweep->parsed()) return cmd_ssh_sweep(sargs);
        if (val->parsed()) return cmd_validate(val_corpus);
    } catch (const sdwan::ScopeViolation& e) {
        std::cerr << "scope: " << e.what() << '\n';
        return kExitError;
    } catch (const sdwan::Error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return kExitError;
    }
    return kExitOk;
}
