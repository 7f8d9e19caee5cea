#include "sdd/report.hpp"

#include "sdd/serialize.hpp"

namespace sdd {

namespace {

std::string json_escape(const std::string& s) {
    std::string out;
    out.reserve(s.size() + 2);
    for (char c : s) {
        switch (c) {
            case '"': out += "\\\""; break;
            case '\\': out += "\\\\"; break;
            case '\n': out += "\\n"; break;
            case '\t': out += "\\t"; break;
            default: out += c;
        }
    }
    return out;
}

}  // namespace

std::string report_to_json(const RunReport& report) {
    std::string out = "{\"command\":\"" + json_escape(report.command) + "\"";
    out += ",\"config_hash\":\"" + json_escape(report.config_hash) + "\"";
    out += ",\"elapsed_seconds\":" + format_g17(report.elapsed_seconds);
    out += ",\"artifacts\":[";
    for (std::size_t i = 0; i < report.artifacts.size(); ++i) {
        if (i) out += ",";
        out += "\"" + json_escape(report.artifacts[i]) + "\"";
    }
    out += "],\"metrics\":{";
    bool first = true;
    for (const auto& [key, value] : report.metrics) {
        if (!first) out += ",";
        first = false;
        out += "\"" + json_escape(key) + "\":" + format_g17(value);
    }
    out += "}}";
    return out;
}

std::filesystem::path write_report(const RunReport& report,
                                   const std::filesystem::path& out_dir) {
    const std::filesystem::path path = out_dir / "report.json";
    write_text_atomic(path, report_to_json(report) + "\n");
    return path;
}

}  // namespace sdd
