#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace sdd {

struct RunReport {
    std::string command;
    std::string config_hash;
    double elapsed_seconds = 0.0;
    std::vector<std::string> artifacts;
    std::map<std::string, double> metrics;
};

// report.json in out_dir, written atomically.
std::filesystem::path write_report(const RunReport& report,
                                   const std::filesystem::path& out_dir);

std::string report_to_json(const RunReport& report);

}  // namespace sdd
