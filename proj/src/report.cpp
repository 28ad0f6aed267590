#include "cfq/report.hpp"

#include <cstdio>
#include <fstream>
#include <stdexcept>

#include <json.hpp>

namespace cfq::report {

namespace {

std::string hex64(std::uint64_t v) {
    char buf[19];
    std::snprintf(buf, sizeof buf, "0x%016llx", static_cast<unsigned long long>(v));
    return buf;
}

}  // namespace

int RunReport::passed() const {
    int n = 0;
    for (const CheckRecord& rec : records) n += rec.pass ? 1 : 0;
    return n;
}

int RunReport::failed() const { return static_cast<int>(records.size()) - passed(); }

std::string to_text(const RunReport& r) {
    std::string out = "suite " + r.suite + " (version " + r.version + ", config " +
                      hex64(r.config_hash) + ")\n";
    char line[256];
    for (const CheckRecord& rec : r.records) {
        std::snprintf(line, sizeof line, "  %-4s %-38s %-28s dev %.3e  tol %.1e  %7.1f ms\n",
                      rec.pass ? "PASS" : "FAIL", rec.name.c_str(), rec.routes.c_str(),
                      rec.max_deviation, rec.tolerance, rec.wall_ms);
        out += line;
    }
    std::snprintf(line, sizeof line, "  %d passed, %d failed\n", r.passed(), r.failed());
    out += line;
    return out;
}

std::string to_json(const RunReport& r) {
    nlohmann::ordered_json j;
    j["suite"] = r.suite;
    j["version"] = r.version;
    j["config_hash"] = hex64(r.config_hash);
    j["summary"] = {{"passed", r.passed()}, {"failed", r.failed()}};
    j["checks"] = nlohmann::ordered_json::array();
    for (const CheckRecord& rec : r.records) {
        nlohmann::ordered_json c;
        c["name"] = rec.name;
        c["routes"] = rec.routes;
        c["max_deviation"] = rec.max_deviation;
        c["tolerance"] = rec.tolerance;
        c["pass"] = rec.pass;
        c["wall_ms"] = rec.wall_ms;
        j["checks"].push_back(std::move(c));
    }
    return j.dump(2) + "\n";
}

void write_json_file(const RunReport& r, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error(path + ": cannot open for writing");
    out << to_json(r);
}

}  // namespace cfq::report
