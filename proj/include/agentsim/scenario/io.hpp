#ifndef AGENTSIM__SCENARIO__IO_HPP_
#define AGENTSIM__SCENARIO__IO_HPP_

#include "agentsim/scenario/types.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace agentsim
{
/// Parses and validates a scenario document; throws ValidationError.
Scenario load_scenario(std::string_view bytes, std::size_t agent_cap = kDefaultAgentCap);
/// Canonical serialization: sorted keys, round-trip precision, 1-space indent.
std::string save_scenario(const Scenario & scenario);

Scenario read_scenario_file(const std::filesystem::path & path, std::size_t agent_cap = kDefaultAgentCap);
void write_scenario_file(const std::filesystem::path & path, const Scenario & scenario);

/// Every *.json file of a directory except manifest.json and effective_config.json, sorted by file name.
std::vector<std::filesystem::path> list_scenario_files(const std::filesystem::path & dir);
std::vector<Scenario> read_scenario_dir(const std::filesystem::path & dir, std::size_t agent_cap = kDefaultAgentCap);

std::string save_rollout_set(const RolloutSet & set);
/// Extents and categories are taken from the scenario; velocities are finite differences.
RolloutSet load_rollout_set(std::string_view bytes, const Scenario & scenario);
/// One row per (rollout, agent, step).
std::string rollout_set_to_csv(const RolloutSet & set);

std::string read_text_file(const std::filesystem::path & path);
/// Writes through a temporary file and renames, so readers never see partial output.
void write_text_file(const std::filesystem::path & path, std::string_view text);
}  // namespace agentsim

#endif  // AGENTSIM__SCENARIO__IO_HPP_
