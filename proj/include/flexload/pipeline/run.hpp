#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "flexload/pipeline/config.hpp"

namespace flexload::pipeline {

inline const std::vector<std::string> kSubcommands = {"synth", "usage", "train", "disagg", "control", "bode"};

// Runs one subcommand with outputs under cfg.out; returns the files written.
// Every random stream derives from cfg.seed and the subcommand name.
std::vector<std::filesystem::path> run_subcommand(const std::string& name, const RunConfig& cfg);

}  // namespace flexload::pipeline
