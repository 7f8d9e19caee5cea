#pragma once

#include <string>
#include <vector>

#include "sdd/distill.hpp"
#include "sdd/eval.hpp"
#include "sdd/hqs.hpp"

namespace sdd {

// CSV uses '.' decimals, ',' separators, '\n' line endings, a mandatory
// header row, and 17-significant-digit floats.

std::string profile_to_csv(const HQSProfile& profile);
HQSProfile profile_from_csv(const std::string& text);

std::string history_to_csv(const std::vector<IterationMetrics>& history);
std::string tradeoff_to_csv(const std::vector<TradeoffPoint>& points);
std::string ablation_to_csv(const AblationReport& report);

}  // namespace sdd
