#pragma once

#include <string>

#include <json.hpp>

#include "mather/config.hpp"
#include "mather/diffeo.hpp"
#include "mather/mather.hpp"
#include "mather/modulus.hpp"
#include "mather/norms.hpp"

namespace mather {

using json = nlohmann::json;

/// {"class", "grid": {"a","b","n"}, "k", "jets": [[d0..dk], ...]}.
json to_json(const Diffeo1& f);
/// Accepts the explicit form and the preset shorthand {"preset", "params"}.
Diffeo1 diffeo_from_json(const json& j);

json to_json(const ConcaveModulus& alpha);
ConcaveModulus modulus_from_json(const json& j);

/// "holder:0.5", "omegaz:0.5,0.3" or "file:<path>" (a modulus JSON file).
ConcaveModulus parse_alpha(const std::string& spec);

json to_json(const Tolerances& t);
/// Missing keys keep their defaults.
Tolerances tolerances_from_json(const json& j);

json to_json(const MatherConfig& c);
MatherConfig config_from_json(const json& j);

json to_json(const NormReport& r);
json to_json(const SlackReport& r);

json read_json_file(const std::string& path);
/// Writes through a temporary file and a rename.
void write_file_atomic(const std::string& path, const std::string& content);

}  // namespace mather
