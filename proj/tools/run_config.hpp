#pragma once

#include <cstdint>
#include <string>

#include "mather/config.hpp"
#include "mather/perfect.hpp"
#include "mather/serialize.hpp"

namespace mather::cli {

/// Everything a CLI run depends on. Echoed into every output file.
struct RunConfig {
    int k = 2;
    std::string alpha = "holder:0.5";
    int A = 1;
    int grid_n = 257;
    Tolerances tol = default_tolerances();
    double tol_fixed = 1e-6;  // fixed-point stopping residual
    int max_iter = 200;
    VerifyTolerances verify;
    std::uint64_t seed = 7;
    std::string out = "mather_out";
};

json to_json(const RunConfig& c);
/// Overlays the keys present in j onto c.
void apply_json(RunConfig& c, const json& j);
/// Throws InvalidArgument when a tolerance is not positive or k, A, grid_n are out of range.
void validate(const RunConfig& c);

/// Header line carried by every CSV output.
std::string csv_echo(const RunConfig& c);

}  // namespace mather::cli
