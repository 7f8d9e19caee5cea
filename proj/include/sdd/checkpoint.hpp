#pragma once

#include <filesystem>

#include "sdd/denoiser.hpp"
#include "sdd/distill.hpp"
#include "sdd/serialize.hpp"

namespace sdd {

struct DenoiserCheckpoint {
    NoiseSchedule schedule;
    Denoiser denoiser;
};

// "sdd-denoiser-v1"
std::string denoiser_to_json(const Denoiser& d, const NoiseSchedule& s);
DenoiserCheckpoint denoiser_from_json(const nlohmann::json& doc);
DenoiserCheckpoint load_denoiser(const std::filesystem::path& path);

// "sdd-manip-v1"
std::string manipulator_to_json(const Manipulator& m);
Manipulator manipulator_from_json(const nlohmann::json& doc);
Manipulator load_manipulator(const std::filesystem::path& path);

}  // namespace sdd
