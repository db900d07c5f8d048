#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "mather/serialize.hpp"

namespace mather::suite {

/// One inequality evaluated on one trial; slack = bound - value.
struct SlackRow {
    std::string check;
    int trial = 0;
    std::string quantity;
    double value = 0.0;
    double bound = 0.0;
    double slack = 0.0;
};

struct CheckResult {
    int criterion = 0;  // 0 for invariant checks outside the numbered list
    std::string name;
    bool passed = false;
    std::string summary;
    double seconds = 0.0;  // wall time; kept out of the JSON report
    json metrics;
    std::vector<SlackRow> slacks;
};

struct SuiteOptions {
    std::uint64_t seed = 7;
    double time_scale = 1.0;  // multiplies runtime budgets
};

/// Names accepted by run_suite: "all", "acceptance", "curve", or one check name.
std::vector<std::string> suite_names();
/// Check names in criterion order.
std::vector<std::string> check_names();

CheckResult run_check(const std::string& name, const SuiteOptions& opt);
/// "all" runs every invariant check (criterion 6 is a measurement and runs
/// under "curve" or "acceptance"). Throws InvalidArgument on an unknown name.
std::vector<CheckResult> run_suite(const std::string& name, const SuiteOptions& opt);

json to_json(const CheckResult& r);
std::string slacks_csv(const std::vector<CheckResult>& results);

// ---- norm reduction curve ----

struct CurveOptions {
    double eps = 2e-5;
    double r = 1.5;
    int octaves = 8;
    int nodes_per_unit = 256;  // core grid of the A member has 3 A nodes_per_unit + 1 nodes
};

struct CurvePoint {
    int A = 1;
    double norm_g = 0.0;    // ||g_A - Id||_{2,alpha}
    double norm_h = 0.0;    // ||h - Id||_{2,alpha}, h the A = 1 member
    double norm_gamma = 0.0;
    double norm_psi = 0.0;
    double ratio = 0.0;     // norm_psi / norm_h
};

/// g_A = A h(x / A) from the scaled_family preset, reduced with k = 2 and the
/// given modulus. Refusals by the ball check are skipped (check_ball = false).
std::vector<CurvePoint> norm_reduction_curve(const std::vector<int>& As, const ConcaveModulus& alpha,
                                             const CurveOptions& opt = {});

}  // namespace mather::suite
