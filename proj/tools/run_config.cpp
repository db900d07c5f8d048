#include "run_config.hpp"

#include "mather/error.hpp"
#include "mather/parallel.hpp"

namespace mather::cli {

json to_json(const RunConfig& c) {
    return {{"k", c.k},
            {"alpha", c.alpha},
            {"A", c.A},
            {"grid_n", c.grid_n},
            {"tolerances", mather::to_json(c.tol)},
            {"tol_fixed", c.tol_fixed},
            {"max_iter", c.max_iter},
            {"verify", {{"conjugacy", c.verify.conjugacy},
                        {"blend", c.verify.blend},
                        {"fixed", c.verify.fixed},
                        {"flow", c.verify.flow},
                        {"replay_factor", c.verify.replay_factor}}},
            {"seed", c.seed},
            {"out", c.out},
            {"workers", worker_count()}};
}

void apply_json(RunConfig& c, const json& j) {
    if (!j.is_object()) throw InvalidArgument("config file must hold a JSON object");
    try {
        c.k = j.value("k", c.k);
        c.alpha = j.value("alpha", c.alpha);
        c.A = j.value("A", c.A);
        c.grid_n = j.value("grid_n", c.grid_n);
        if (j.contains("tolerances")) c.tol = tolerances_from_json(j["tolerances"]);
        c.tol_fixed = j.value("tol_fixed", c.tol_fixed);
        c.max_iter = j.value("max_iter", c.max_iter);
        if (j.contains("verify")) {
            const json& v = j["verify"];
            c.verify.conjugacy = v.value("conjugacy", c.verify.conjugacy);
            c.verify.blend = v.value("blend", c.verify.blend);
            c.verify.fixed = v.value("fixed", c.verify.fixed);
            c.verify.flow = v.value("flow", c.verify.flow);
            c.verify.replay_factor = v.value("replay_factor", c.verify.replay_factor);
        }
        c.seed = j.value("seed", c.seed);
        c.out = j.value("out", c.out);
    } catch (const json::exception& e) {
        throw InvalidArgument(std::string("config file: ") + e.what());
    }
}

void validate(const RunConfig& c) {
    if (c.k < 1 || c.k > 12) throw InvalidArgument("--k must be in [1, 12]");
    if (c.A < 1) throw InvalidArgument("--A must be >= 1");
    if (c.grid_n < 2) throw InvalidArgument("--grid-n must be >= 2");
    if (c.max_iter < 1) throw InvalidArgument("--max-iter must be >= 1");
    const Tolerances& t = c.tol;
    for (double v : {t.interp_residual, t.root, t.invariant, t.surgery, t.ode_abs, t.ode_rel, t.tol_b, t.overlap,
                     t.lemma_allowance, c.tol_fixed, c.verify.conjugacy, c.verify.blend, c.verify.fixed,
                     c.verify.flow, c.verify.replay_factor})
        if (!(v > 0.0)) throw InvalidArgument("all tolerances must be positive");
    if (t.node_cap < 2 || t.eval_density < 1 || t.holder_scales < 1 || t.word_cap < 1)
        throw InvalidArgument("node cap, eval density, scales and word cap must be positive");
}

std::string csv_echo(const RunConfig& c) { return "# run_config " + to_json(c).dump() + "\n"; }

}  // namespace mather::cli
