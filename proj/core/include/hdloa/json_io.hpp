#pragma once

// JSON encodings of the domain types. These are the on-disk record formats
// (one JSON object per line) used by the loaders, the CLI and the reports.

#include "hdloa/core.hpp"

#include <nlohmann/json.hpp>

#include <filesystem>
#include <string>
#include <vector>

namespace hdloa {

using Json = nlohmann::ordered_json;

Json to_json(const EAEInstance& inst);
Json to_json(const ClassificationInstance& inst, TaskKind task);
Json to_json(const Heuristic& h);
Json to_json(const EAEScores& s);

// Throw DataError naming the offending field.
EAEInstance eae_instance_from_json(const Json& j);
ClassificationInstance classification_instance_from_json(const Json& j);
Heuristic heuristic_from_json(const Json& j);

// Line-delimited heuristic records, in file order.
std::vector<Heuristic> load_heuristics(const std::filesystem::path& path);
void save_heuristics(const std::filesystem::path& path, const std::vector<Heuristic>& items);

// Fixed-point rendering used in every score report ("0.3369").
std::string format_fraction(double value, int decimals = 4);

}  // namespace hdloa
