// report.hpp -- aggregate statistics over findings plus the three output
// renderings: CSV breakdown, structured JSON, and a human-readable summary.

#ifndef SDWAN_REPORT_HPP
#define SDWAN_REPORT_HPP

#include <cstdio>
#include <map>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "sdwan/pipeline.hpp"

namespace sdwan {

struct OutdatedRow {
    size_t outdated = 0;
    size_t statused = 0; // findings whose status resolved to current or outdated

    bool operator==(const OutdatedRow&) const = default;
};

struct VersionRow {
    size_t count = 0;
    VersionStatus status = VersionStatus::unknown;
    bool vulnerable = false;
};

struct CensusStats {
    size_t total_hosts = 0;
    size_t hosts_with_vulns = 0;
    std::map<std::string, size_t> by_vendor;
    std::map<std::string, size_t> by_product;
    std::map<std::string, size_t> by_version; // "<vendor> <product> <raw>"
    std::map<std::string, size_t> by_region;
    std::map<std::string, OutdatedRow> outdated_by_product;
    std::map<std::string, std::map<std::string, VersionRow>> versions_by_product;
};

// Truncated (not rounded) two-decimal fraction, computed in integers.
inline std::string format_fraction(size_t num, size_t den) {
    if (den == 0) return "0.00";
    size_t t = num * 100 / den;
    char buf[32];
    std::snprintf(buf, sizeof buf, "%zu.%02zu", t / 100, t % 100);
    return buf;
}

inline CensusStats compute_stats(const std::vector<Finding>& findings) {
    CensusStats s;
    s.total_hosts = findings.size();
    for (const Finding& f : findings) {
        std::string product_key = f.product.display();
        ++s.by_vendor[f.product.vendor];
        ++s.by_product[product_key];
        ++s.by_region[f.region];
        if (!f.vulns.empty()) ++s.hosts_with_vulns;
        if (!f.version_raw.empty()) {
            ++s.by_version[product_key + " " + f.version_raw];
            VersionRow& row = s.versions_by_product[product_key][f.version_raw];
            ++row.count;
            row.status = f.status;
            if (!f.vulns.empty()) row.vulnerable = true;
        }
        if (f.status != VersionStatus::unknown) {
            OutdatedRow& o = s.outdated_by_product[product_key];
            ++o.statused;
            if (f.status == VersionStatus::outdated) ++o.outdated;
        }
    }
    return s;
}

namespace detail {

inline std::string csv_escape(const std::string& v) {
    if (v.find_first_of(",\"\n") == std::string::npos) return v;
    std::string out = "\"";
    for (char c : v) {
        if (c == '"') out += '"';
        out += c;
    }
    out += '"';
    return out;
}

} // namespace detail

// Sections in order: vendor, product, version, region, outdated, total.
// Every row is scope,key,count,fraction; keys sort alphabetically within a
// section. The outdated fraction is outdated / version-assessed hosts for
// that product; every other fraction is count / total hosts.
inline std::string render_csv(const CensusStats& s) {
    std::string out = "scope,key,count,fraction\n";
    auto section = [&](const char* scope, const std::map<std::string, size_t>& rows) {
        for (const auto& [key, count] : rows)
            out += std::string(scope) + "," + detail::csv_escape(key) + "," +
                   std::to_string(count) + "," +
                   format_fraction(count, s.total_hosts) + "\n";
    };
    section("vendor", s.by_vendor);
    section("product", s.by_product);
    section("version", s.by_version);
    section("region", s.by_region);
    for (const auto& [key, row] : s.outdated_by_product)
        out += "outdated," + detail::csv_escape(key) + "," +
               std::to_string(row.outdated) + "," +
               format_fraction(row.outdated, row.statused) + "\n";
    out += "total,hosts," + std::to_string(s.total_hosts) + "," +
           format_fraction(s.total_hosts, s.total_hosts) + "\n";
    return out;
}

inline nlohmann::ordered_json stats_to_json(const CensusStats& s) {
    nlohmann::ordered_json j;
    j["total_hosts"] = s.total_hosts;
    j["hosts_with_vulns"] = s.hosts_with_vulns;
    j["by_vendor"] = s.by_vendor;
    j["by_product"] = s.by_product;
    j["by_version"] = s.by_version;
    j["by_region"] = s.by_region;
    nlohmann::ordered_json outdated = nlohmann::ordered_json::object();
    for (const auto& [key, row] : s.outdated_by_product)
        outdated[key] = {{"outdated", row.outdated},
                         {"statused", row.statused},
                         {"fraction", format_fraction(row.outdated, row.statused)}};
    j["outdated"] = outdated;
    return j;
}

inline std::string render_text(const CensusStats& s) {
    auto plural = [](size_t n) { return n == 1 ? "host" : "hosts"; };
    std::string out = "census summary\n";
    out += "hosts: " + std::to_string(s.total_hosts) + "\n";
    out += "vulnerable hosts: " + std::to_string(s.hosts_with_vulns) + "\n";
    if (s.total_hosts == 0) {
        out += "\n0 hosts\n";
        return out;
    }
    for (const auto& [product, count] : s.by_product) {
        out += "\n" + product + ": " + std::to_string(count) + " " + plural(count) + "\n";
        auto vit = s.versions_by_product.find(product);
        if (vit != s.versions_by_product.end()) {
            for (const auto& [raw, row] : vit->second) {
                out += "  " + raw + ": " + std::to_string(row.count);
                out += " (" + to_string(row.status);
                if (row.vulnerable) out += ", vulnerable";
                out += ")\n";
            }
        }
        auto oit = s.outdated_by_product.find(product);
        if (oit != s.outdated_by_product.end() && oit->second.statused > 0)
            out += "  outdated: " + std::to_string(oit->second.outdated) + "/" +
                   std::to_string(oit->second.statused) + " (" +
                   format_fraction(oit->second.outdated, oit->second.statused) +
                   ")\n";
    }
    return out;
}

} // namespace sdwan

#endif // SDWAN_REPORT_HPP
