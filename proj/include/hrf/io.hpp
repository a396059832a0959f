#pragma once

#include <string>
#include <vector>

#include <json.hpp>

namespace hrf {

using Json = nlohmann::ordered_json;

/// %.17g in the C locale; non-finite values print as nan/inf.
std::string format_double(double x);

/// Lowercase hex SHA-256 digest.
std::string sha256_hex(const std::string& data);

/// Creates the directory (and parents). Throws IoError naming the path.
void ensure_directory(const std::string& path);

void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);

/// Header row then one row per record, every value formatted by format_double.
void write_csv(const std::string& path, const std::vector<std::string>& header,
               const std::vector<std::vector<double>>& rows);

/// Two-space indented JSON with a trailing newline. Non-finite numbers are
/// written as null.
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

/// Number for JSON output: null when not finite.
Json json_number(double x);
Json json_array(const std::vector<double>& v);

}  // namespace hrf
