// Acceptance run: one PASS/FAIL line per numbered criterion.
//
//   acceptance [--seed N] [--known-failure I]...
//
// Exit status is 0 when every criterion passes except those listed with
// --known-failure, which are still reported as FAIL.

#include <CLI11.hpp>

#include <cstdio>
#include <set>

#include "suite.hpp"

int main(int argc, char** argv) {
    CLI::App app{"acceptance criteria"};
    std::uint64_t seed = 7;
    std::vector<int> known;
    app.add_option("--seed", seed);
    app.add_option("--known-failure", known, "criterion expected to fail");
    CLI11_PARSE(app, argc, argv);
    const std::set<int> expected(known.begin(), known.end());

    mather::suite::SuiteOptions opt;
    opt.seed = seed;
    int unexpected = 0;
    for (const auto& name : mather::suite::check_names()) {
        if (name == "lemmas") continue;
        const auto r = mather::suite::run_check(name, opt);
        std::printf("criterion %2d %s  %-10s %s  (%.2f s)\n", r.criterion, r.passed ? "PASS" : "FAIL", r.name.c_str(),
                    r.summary.c_str(), r.seconds);
        std::fflush(stdout);
        if (!r.passed && !expected.count(r.criterion)) ++unexpected;
        if (r.passed && expected.count(r.criterion))
            std::printf("   note: criterion %d listed as a known failure but passed\n", r.criterion);
    }
    if (!expected.empty()) {
        std::printf("known failures:");
        for (int c : expected) std::printf(" %d", c);
        std::printf("\n");
    }
    std::printf("%s\n", unexpected == 0 ? "acceptance: no unexpected failures" : "acceptance: unexpected failures");
    return unexpected == 0 ? 0 : 1;
}
