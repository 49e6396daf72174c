#ifndef AGENTSIM__CLI__DISPATCH_HPP_
#define AGENTSIM__CLI__DISPATCH_HPP_

#include "agentsim/decoder/intention_points.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <vector>

namespace agentsim
{
inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitValidation = 2;
inline constexpr int kExitRuntime = 3;

/// Environment variable naming the default data directory.
inline constexpr const char * kDataDirEnv = "AGENTSIM_DATA_DIR";

/// Runs one verb (args exclude the program name). Errors go to `err` as one JSON line.
int cli_dispatch(const std::vector<std::string> & args, std::ostream & out, std::ostream & err);

/// Intention-point table file written by fit-intents.
std::string save_intention_tables(const std::map<AgentCategory, IntentionPointSet> & tables);
std::map<AgentCategory, IntentionPointSet> load_intention_tables(std::string_view bytes);

/// Plot rows (timestep, agent, x, y, heading, opacity_rank) for a scenario and optional rollouts.
std::string plot_csv(const Scenario & scenario, const RolloutSet * rollouts);
}  // namespace agentsim

#endif  // AGENTSIM__CLI__DISPATCH_HPP_
