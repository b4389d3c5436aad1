#include <cstdio>
#include <cstdlib>
#include <iostream>
#include <map>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "ssqmc/runner.hpp"
#include "ssqmc/verify.hpp"

namespace {

using ssqmc::runner::RunConfig;

struct CommonOpts {
    std::string config_path;
    std::string preset;
    std::vector<std::string> sets;
    std::string model;
    // sentinel defaults: negative / empty means "not given"
    double dt = -1.0, t_max = -1.0;
    long long seed = -1;
    int n_traj = -1, sample_every = -1, threads = -1;
    std::string out;
};

void add_common_options(CLI::App* cmd, CommonOpts& o, bool with_run_flags) {
    cmd->add_option("--config", o.config_path, "flat key: value config file");
    cmd->add_option("--preset", o.preset, "named preset scenario (see `presets`)");
    cmd->add_option("--set", o.sets, "extra key=value setting (repeatable, applied after --config)")
        ->take_all();
    cmd->add_option("--model", o.model, "model id");
    cmd->add_option("--seed", o.seed, "master seed");
    if (with_run_flags) {
        cmd->add_option("--out", o.out, "output CSV path (default: stdout)");
        cmd->add_option("--n-traj", o.n_traj, "number of trajectories");
        cmd->add_option("--dt", o.dt, "time step");
        cmd->add_option("--t-max", o.t_max, "final time");
        cmd->add_option("--sample-every", o.sample_every, "record every k-th step (0 = auto)");
        cmd->add_option("--threads", o.threads, "worker threads (0 = hardware)");
    }
}

RunConfig build_config(const CommonOpts& o) {
    RunConfig cfg;
    if (!o.preset.empty()) ssqmc::runner::apply_preset(cfg, o.preset);
    if (!o.config_path.empty()) cfg = ssqmc::runner::parse_config_file(o.config_path, cfg);
    for (const auto& kv : o.sets) {
        const auto eq = kv.find('=');
        if (eq == std::string::npos)
            throw std::runtime_error("--set expects key=value, got '" + kv + "'");
        ssqmc::runner::apply_setting(cfg, kv.substr(0, eq), kv.substr(eq + 1));
    }
    if (!o.model.empty()) cfg.model = o.model;
    if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
    if (o.n_traj >= 0) cfg.n_traj = o.n_traj;
    if (o.dt > 0) cfg.dt = o.dt;
    if (o.t_max > 0) cfg.t_max = o.t_max;
    if (o.sample_every >= 0) cfg.sample_every = o.sample_every;
    if (o.threads >= 0) cfg.threads = o.threads;
    if (!o.out.empty()) cfg.output_path = o.out;
    if (const char* env = std::getenv("SSQMC_THREADS")) {
        // speed knob only: results are identical for any thread count
        cfg.threads = std::atoi(env);
    }
    return cfg;
}

int cmd_run(const CommonOpts& o) {
    const RunConfig cfg = build_config(o);
    const auto result = ssqmc::runner::run(cfg);
    if (cfg.output_path.empty()) {
        ssqmc::runner::write_csv(std::cout, result);
    } else {
        ssqmc::runner::write_csv_file(cfg.output_path, result);
    }
    std::fprintf(stderr,
                 "run: model=%s rows=%zu kept=%lld divergent=%lld flagged=%lld wall=%.2fs%s%s\n",
                 cfg.model.c_str(), result.stats.time_grid.size(),
                 static_cast<long long>(result.stats.n_kept()),
                 static_cast<long long>(result.stats.n_divergent),
                 static_cast<long long>(result.stats.n_flagged), result.wall_seconds,
                 cfg.output_path.empty() ? "" : " out=",
                 cfg.output_path.c_str());
    return 0;
}

bool is_single_mode(const std::string& model) {
    return model == "free_expansion" || model == "kerr" || model == "genkerr";
}

int default_order(const std::string& model) { return model == "genkerr" ? 3 : 2; }

void print_report(const ssqmc::verify::MatchReport& report) {
    std::printf("%-18s %5s %26s %26s %12s  %s\n", "moment", "order", "measured", "expected",
                "rel_err", "status");
    for (const auto& c : report.checks) {
        char measured[64], expected[64];
        std::snprintf(measured, sizeof(measured), "%.9g%+.9gi", c.measured.real(),
                      c.measured.imag());
        std::snprintf(expected, sizeof(expected), "%.9g%+.9gi", c.expected.real(),
                      c.expected.imag());
        std::printf("%-18s %5d %26s %26s %12.3e  %s\n", c.name.c_str(), c.order, measured,
                    expected, c.rel_err, c.pass ? "PASS" : "FAIL");
    }
    std::printf("checked %zu moments, %zu failed, worst rel err %.3e\n", report.checks.size(),
                report.n_failed(), report.worst_rel_err());
}

struct VerifyOpts {
    int order = 0; // 0 = model default
    int states = 20;
    long long vseed = 99;
    double tolerance = -1.0; // <0 = family default
    double dt_probe = 1e-5;
    int nodes = 4;
    int mutate_term = -1;
    double mutate_scale = 1.01;
    double radius = 1.5;
};

template <class Model>
ssqmc::verify::MatchReport run_single_verify(const Model& model, const VerifyOpts& v,
                                             const ssqmc::verify::VerifyOptions& opt) {
    return ssqmc::verify::verify_random_states(model, v.states,
                                               static_cast<std::uint64_t>(v.vseed), opt, v.radius);
}

template <class Model>
ssqmc::verify::MatchReport run_many_verify(const Model& model, const VerifyOpts& v,
                                           const ssqmc::verify::VerifyOptions& opt) {
    return ssqmc::verify::verify_many_body_random_states(model, v.states,
                                                         static_cast<std::uint64_t>(v.vseed), opt);
}

int cmd_verify(const CommonOpts& o, const VerifyOpts& v) {
    RunConfig cfg = build_config(o);
    ssqmc::runner::validate(cfg);
    const std::string& model = cfg.model;

    ssqmc::verify::VerifyOptions opt;
    opt.max_order = v.order > 0 ? v.order : default_order(model);
    opt.tolerance = v.tolerance > 0 ? v.tolerance : (is_single_mode(model) ? 1e-8 : 1e-6);
    opt.dt_probe = v.dt_probe;
    opt.gauss_nodes = v.nodes;

    int n_draws = 0;
    if (model == "free_expansion" || model == "kerr") n_draws = 2;
    else if (model == "genkerr") n_draws = 4;
    else if (model == "two_mode" || model == "boson_generic") n_draws = 4;
    else n_draws = 2; // fermion_toy: one interaction term, two streams
    if (v.mutate_term >= 0) {
        if (v.mutate_term >= n_draws)
            throw std::runtime_error("--mutate-term out of range for this model");
        opt.target_scale.assign(static_cast<std::size_t>(n_draws), 1.0);
        opt.target_scale[static_cast<std::size_t>(v.mutate_term)] = v.mutate_scale;
    }

    ssqmc::verify::MatchReport report;
    if (model == "free_expansion")
        report = run_single_verify(ssqmc::runner::make_free_expansion(cfg), v, opt);
    else if (model == "kerr")
        report = run_single_verify(ssqmc::runner::make_kerr(cfg), v, opt);
    else if (model == "genkerr")
        report = run_single_verify(ssqmc::runner::make_genkerr(cfg), v, opt);
    else if (model == "two_mode")
        report = run_many_verify(ssqmc::runner::make_two_mode(cfg), v, opt);
    else if (model == "boson_generic")
        report = run_many_verify(ssqmc::runner::make_boson_generic(cfg), v, opt);
    else if (model == "fermion_toy")
        report = run_many_verify(ssqmc::runner::make_fermion_toy(cfg), v, opt);
    else
        throw std::runtime_error("verify: unsupported model '" + model + "'");

    print_report(report);
    return report.all_pass() ? 0 : 1;
}

int cmd_presets() {
    for (const auto& name : ssqmc::runner::preset_names()) {
        std::printf("%s:", name.c_str());
        for (const auto& [k, v] : ssqmc::runner::preset_settings(name))
            std::printf(" %s=%s", k.c_str(), v.c_str());
        std::printf("\n");
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"ensemble engine for noise-engineered stochastic state-pair dynamics"};
    app.require_subcommand(1);

    CommonOpts run_opts;
    CLI::App* run_cmd = app.add_subcommand("run", "integrate an ensemble and emit CSV");
    add_common_options(run_cmd, run_opts, true);

    CommonOpts verify_common;
    VerifyOpts verify_opts;
    CLI::App* verify_cmd =
        app.add_subcommand("verify", "check expected moment increments against exact rates");
    add_common_options(verify_cmd, verify_common, false);
    verify_cmd->add_option("--order", verify_opts.order, "highest moment order (default per model)");
    verify_cmd->add_option("--states", verify_opts.states, "number of random probe states");
    verify_cmd->add_option("--verify-seed", verify_opts.vseed, "seed for the probe states");
    verify_cmd->add_option("--tolerance", verify_opts.tolerance, "relative tolerance");
    verify_cmd->add_option("--dt-probe", verify_opts.dt_probe, "probe time step");
    verify_cmd->add_option("--nodes", verify_opts.nodes, "quadrature nodes per gaussian stream");
    verify_cmd->add_option("--mutate-term", verify_opts.mutate_term,
                           "scale one noise target (index) to demonstrate detection");
    verify_cmd->add_option("--mutate-scale", verify_opts.mutate_scale, "mutation factor");
    verify_cmd->add_option("--radius", verify_opts.radius, "amplitude bound for probe states");

    CLI::App* presets_cmd = app.add_subcommand("presets", "list preset scenarios");

    CLI11_PARSE(app, argc, argv);

    try {
        if (run_cmd->parsed()) return cmd_run(run_opts);
        if (verify_cmd->parsed()) return cmd_verify(verify_common, verify_opts);
        if (presets_cmd->parsed()) return cmd_presets();
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
