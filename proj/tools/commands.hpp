#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "settings.hpp"

namespace rlop::cli {

// Relative directories are placed under $RLOP_OUTPUT_ROOT when it is set.
std::filesystem::path resolve_output(const std::filesystem::path& dir);

// {subcommand, config, seeds, config_hash, output_dir}; no timestamps.
nlohmann::json make_manifest(const std::string& subcommand, const Settings& settings,
                             const std::filesystem::path& out_dir);
void write_manifest(const std::string& subcommand, const Settings& settings,
                    const std::filesystem::path& out_dir);

// Each command writes manifest.json first, then its artifacts into out_dir.
void cmd_train(const Settings& settings, const std::filesystem::path& out_dir);
void cmd_sweep(const Settings& settings, const std::filesystem::path& out_dir);
void cmd_hedge_compare(const Settings& settings, const std::filesystem::path& out_dir);
void cmd_mixed_train(const Settings& settings, const std::filesystem::path& out_dir);
void cmd_bs_quote(const Settings& settings, std::ostream& out);

// Re-runs the command recorded in a manifest, into `out_dir` when non-empty
// and into the recorded directory otherwise.
void cmd_replay(const std::filesystem::path& manifest, const std::filesystem::path& out_dir);

void run_command(const std::string& subcommand, const Settings& settings,
                 const std::filesystem::path& out_dir);

}  // namespace rlop::cli
