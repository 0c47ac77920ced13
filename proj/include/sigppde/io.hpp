#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "sigppde/goursat.hpp"
#include "sigppde/paths.hpp"
#include "sigppde/recovery.hpp"

namespace sigppde::io {

// CSV with header "s,ch0,ch1,..." and one row per grid node, 17 significant digits.
void write_path_csv(std::ostream& os, const Path& p);
// The grid is rebuilt from the first and last s values; throws std::invalid_argument on
// malformed input or non-uniform spacing.
Path read_path_csv(std::istream& is);

// {"grid": {"t0", "t1", "n_steps"}, "channels", "values": [[...] per node]}
nlohmann::json path_to_json(const Path& p);
Path path_from_json(const nlohmann::json& j);

// Loads a path from .csv or .json by extension.
Path load_path(const std::filesystem::path& file);
void save_path(const std::filesystem::path& file, const Path& p);

// Surface rows "i,j,k1,k2,k3,k4" on the refined grid.
std::string surfaces_csv(const GoursatSolution& sol);

void write_text(const std::filesystem::path& file, const std::string& text);
std::string read_text(const std::filesystem::path& file);

// Writes model.json plus one CSV per collocation path into dir.
void save_model(const std::filesystem::path& dir, const RecoveryModel& model);
// Restores a model for prediction. Source and terminal data are not stored.
RecoveryModel load_model(const std::filesystem::path& dir);

}  // namespace sigppde::io
