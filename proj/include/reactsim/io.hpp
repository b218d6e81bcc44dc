#ifndef REACTSIM_IO_HPP
#define REACTSIM_IO_HPP

#include <filesystem>
#include <string>
#include <string_view>

#include <nlohmann/json.hpp>

#include "reactsim/metrics.hpp"
#include "reactsim/mlp.hpp"
#include "reactsim/semantic_map.hpp"
#include "reactsim/types.hpp"

// File formats. Structural problems (bad JSON, missing or unknown keys, wrong types) raise IoError;
// well-formed documents describing invalid objects raise DomainError.
namespace reactsim::io {

using Json = nlohmann::ordered_json;

inline constexpr int kEpisodeLogVersion = 1;

std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
Json parse_json(std::string_view text, std::string_view origin);

// Throws IoError naming `path.key` for any key outside `allowed`.
void reject_unknown_keys(const Json& object, std::initializer_list<std::string_view> allowed, std::string_view path);

Json map_to_json(const SemanticMap& map);
SemanticMap map_from_json(const Json& doc, std::string default_id = "map");
SemanticMap load_map(const std::filesystem::path& path);
void save_map(const std::filesystem::path& path, const SemanticMap& map);

// Line-delimited: a header {dt, map_id, ego_id, version, termination}, then one
// {t, agents: [{id, x, y, yaw, length, width, v, kind, active}]} record per state.
std::string episode_to_jsonl(const Episode& episode);
Episode episode_from_jsonl(std::string_view text, std::string_view origin = "episode log");
Episode load_episode(const std::filesystem::path& path);
void save_episode(const std::filesystem::path& path, const Episode& episode);
// Every *.jsonl file in `dir`, in lexicographic filename order.
std::vector<Episode> load_episode_dir(const std::filesystem::path& dir);

Json mlp_to_json(const Mlp& model);
Mlp mlp_from_json(const Json& doc);
Mlp load_mlp(const std::filesystem::path& path);
void save_mlp(const std::filesystem::path& path, const Mlp& model);

Json state_to_json(const SimState& state);
SimState state_from_json(const Json& doc, std::string_view path = "state");

Json to_json(const RealismReport& r);
Json to_json(const ReactivityReport& r);
Json to_json(const PlannerReport& r);
std::string to_csv(const RealismReport& r);
std::string to_csv(const ReactivityReport& r);
std::string to_csv(const PlannerReport& r);
std::string summary_table(const RealismReport& r);
std::string summary_table(const ReactivityReport& r);
std::string summary_table(const PlannerReport& r);

// Shortest round-tripping decimal for finite values.
std::string format_double(double value);

}  // namespace reactsim::io

#endif  // REACTSIM_IO_HPP
