#pragma once

#include <iosfwd>
#include <string>

#include "fcb/generate.hpp"
#include "fcb/matrix.hpp"
#include "fcb/model.hpp"
#include "json.hpp"

namespace fcb {

using Json = nlohmann::json;

/// Instance file format, version "v1". See README for the schema.
Json instance_to_json(const Instance& instance);
/// Throws Error(Parse) for malformed documents and Error(Validation) for
/// documents that do not describe a valid instance.
Instance instance_from_json(const Json& doc);

Instance load_instance(const std::string& path);
void save_instance(const std::string& path, const Instance& instance);

/// FNV-1a hash (hex) of the canonical instance JSON.
std::string instance_digest(const Instance& instance);

void write_matrix_csv(std::ostream& out, const Matrix& m);
Matrix read_matrix_csv(std::istream& in);

/// Generator settings; absent keys keep their defaults. Bands are [lo, hi]
/// pairs.
SyntheticConfig synthetic_config_from_json(const Json& doc);
Json to_json(const SyntheticConfig& config);

std::string read_text_file(const std::string& path);
void write_text_file(const std::string& path, const std::string& text);

}  // namespace fcb
