#pragma once

// Verification run reports: one record per check, rendered as text for the
// terminal and as stable-ordered JSON for machine consumption.  Two runs on
// the same input produce identical JSON except for the wall-time fields.

#include <cstdint>
#include <string>
#include <vector>

namespace cfq::report {

struct CheckRecord {
    std::string name;
    std::string routes;
    double max_deviation = 0.0;
    double tolerance = 0.0;
    bool pass = false;
    double wall_ms = 0.0;
};

struct RunReport {
    std::string suite;
    std::string version;
    std::uint64_t config_hash = 0;
    std::vector<CheckRecord> records;

    int passed() const;
    int failed() const;
    bool all_pass() const { return failed() == 0; }
};

std::string to_text(const RunReport& r);
std::string to_json(const RunReport& r);
void write_json_file(const RunReport& r, const std::string& path);

}  // namespace cfq::report
