#pragma once

#include <string>

#include "sdd/config.hpp"
#include "sdd/report.hpp"

namespace sdd {

enum class Command { train_denoiser, score_hqs, distill, tradeoff, ablation, cost };

Command command_from_name(const std::string& name);
std::string command_name(Command cmd);

// Executes one pipeline command against the config, writes its artifacts and
// report.json into cfg.out_dir, and returns the report.
RunReport run_command(Command cmd, const RunConfig& cfg);

}  // namespace sdd
