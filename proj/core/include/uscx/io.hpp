#pragma once

#include <filesystem>
#include <string>

#include <nlohmann/json_fwd.hpp>

#include "uscx/grid.hpp"

namespace uscx {

/**
 * GridField CSV layout: optional leading '#' comment lines, then the header
 * row "s1,value" (1D) or "s1,s2,value" (2D), then one row per node in
 * row-major order (axis 0 outer).  Coordinates and finite values print with
 * 17 significant digits so parsing reproduces them bit for bit; infinite
 * values use the tokens "+inf" and "-inf".
 */
std::string field_to_csv(const GridField& field);
GridField field_from_csv(const std::string& text);

void write_field_csv(const std::filesystem::path& path, const GridField& field,
                     const std::string& comment = "");
GridField read_field_csv(const std::filesystem::path& path);

/** Domain JSON: {"dim": 1|2, "bounds": [[lo,hi],...], "resolution": [n,...]}. */
nlohmann::json domain_to_json(const Domain& d);
Domain domain_from_json(const nlohmann::json& j);

/** CompactProbe JSON: {"parts": [{"box": [[a,b],...], "level": x}, ...]}. */
nlohmann::json probe_to_json(const CompactProbe& probe, int dim);
CompactProbe probe_from_json(const nlohmann::json& j);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace uscx
