#include "sdd/csv.hpp"

#include <sstream>

#include "sdd/errors.hpp"
#include "sdd/serialize.hpp"

namespace sdd {

namespace {

std::vector<std::string> split_line(const std::string& line) {
    std::vector<std::string> fields;
    std::string cur;
    for (char c : line) {
        if (c == ',') {
            fields.push_back(cur);
            cur.clear();
        } else if (c != '\r') {
            cur += c;
        }
    }
    fields.push_back(cur);
    return fields;
}

}  // namespace

std::string profile_to_csv(const HQSProfile& profile) {
    std::string out = "t,H,N,H_norm,N_norm,hqs\n";
    for (int t = 1; t <= profile.horizon(); ++t) {
        const std::size_t i = static_cast<std::size_t>(t - 1);
        out += std::to_string(t);
        out += "," + format_g17(profile.H[i]);
        out += "," + format_g17(profile.N[i]);
        out += "," + format_g17(profile.H_norm[i]);
        out += "," + format_g17(profile.N_norm[i]);
        out += "," + format_g17(profile.hqs[i]);
        out += "\n";
    }
    return out;
}

HQSProfile profile_from_csv(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line)) throw IoError("profile csv: empty file");
    if (split_line(line) != std::vector<std::string>{"t", "H", "N", "H_norm", "N_norm", "hqs"}) {
        throw IoError("profile csv: unexpected header '" + line + "'");
    }

    HQSProfile profile;
    int expected_t = 1;
    while (std::getline(in, line)) {
        if (line.empty()) continue;
        const auto fields = split_line(line);
        if (fields.size() != 6) throw IoError("profile csv: malformed row '" + line + "'");
        if (std::stoi(fields[0]) != expected_t) {
            throw IoError("profile csv: rows must cover t = 1..T in order");
        }
        profile.H.push_back(std::stod(fields[1]));
        profile.N.push_back(std::stod(fields[2]));
        profile.H_norm.push_back(std::stod(fields[3]));
        profile.N_norm.push_back(std::stod(fields[4]));
        profile.hqs.push_back(std::stod(fields[5]));
        ++expected_t;
    }
    if (profile.hqs.empty()) throw IoError("profile csv: no rows");
    return profile;
}

std::string history_to_csv(const std::vector<IterationMetrics>& history) {
    std::string out = "iter,t,sds_norm,reg_norm,mean_displacement\n";
    for (const IterationMetrics& m : history) {
        out += std::to_string(m.iteration);
        out += "," + std::to_string(m.t);
        out += "," + format_g17(m.sds_norm);
        out += "," + format_g17(m.reg_norm);
        out += "," + format_g17(m.mean_displacement);
        out += "\n";
    }
    return out;
}

std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& points) {
    std::string out = "alpha,alignment,fidelity_rmse,frechet\n";
    for (const TradeoffPoint& p : points) {
        out += format_g17(p.alpha);
        out += "," + format_g17(p.alignment);
        out += "," + format_g17(p.fidelity_rmse);
        out += "," + format_g17(p.frechet);
        out += "\n";
    }
    return out;
}

std::string ablation_to_csv(const AblationReport& report) {
    std::string out = "strategy,seed,alignment,fidelity_rmse,frechet,iterations\n";
    for (const AblationRow& row : report.rows) {
        out += row.strategy;
        out += "," + std::to_string(row.seed);
        out += "," + format_g17(row.alignment);
        out += "," + format_g17(row.fidelity_rmse);
        out += "," + format_g17(row.frechet);
        out += "," + std::to_string(row.iterations);
        out += "\n";
    }
    return out;
}

}  // namespace sdd
