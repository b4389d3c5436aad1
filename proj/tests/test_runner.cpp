#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <sstream>
#include <string>
#include <vector>

#include "ssqmc/runner.hpp"

using namespace ssqmc::runner;
using ssqmc::cplx;

namespace {

std::vector<std::string> split_lines(const std::string& s) {
    std::vector<std::string> lines;
    std::stringstream ss(s);
    std::string line;
    while (std::getline(ss, line)) lines.push_back(line);
    return lines;
}

bool contains(const std::string& hay, const std::string& needle) {
    return hay.find(needle) != std::string::npos;
}

} // namespace

TEST_CASE("settings accept their documented aliases") {
    RunConfig cfg;
    apply_setting(cfg, "N", "23");
    apply_setting(cfg, "K", "0.3");
    apply_setting(cfg, "Omega", "2.5");
    apply_setting(cfg, "master_seed", "77");
    apply_setting(cfg, "out", "result.csv");
    REQUIRE(cfg.n_particles == 23);
    REQUIRE(cfg.kerr_k == 0.3);
    REQUIRE(cfg.omega == 2.5);
    REQUIRE(cfg.seed == 77);
    REQUIRE(cfg.output_path == "result.csv");

    REQUIRE_THROWS_WITH(apply_setting(cfg, "bogus", "1"),
                        Catch::Matchers::ContainsSubstring("unknown key"));
    REQUIRE_THROWS_WITH(apply_setting(cfg, "dt", "fast"),
                        Catch::Matchers::ContainsSubstring("dt"));
}

TEST_CASE("config text parses keys, comments and both separators") {
    RunConfig cfg;
    parse_config_text(cfg,
                      "# benchmark setup\n"
                      "model: kerr\n"
                      "omega = 1\n"
                      "kerr_k: 0.1   # quartic strength\n"
                      "n_traj: 100\n"
                      "dt: 1e-4\n"
                      "t_max: 1\n"
                      "seed: 42\n"
                      "observables: a, n\n");
    REQUIRE(cfg.model == "kerr");
    REQUIRE(cfg.omega == 1.0);
    REQUIRE(cfg.kerr_k == 0.1);
    REQUIRE(cfg.n_traj == 100);
    REQUIRE(cfg.dt == 1e-4);
    REQUIRE(cfg.t_max == 1.0);
    REQUIRE(cfg.seed == 42);
    REQUIRE(cfg.observables == std::vector<std::string>{"a", "n"});
    validate(cfg);

    RunConfig bad;
    REQUIRE_THROWS_WITH(parse_config_text(bad, "model: kerr\njust words\n"),
                        Catch::Matchers::ContainsSubstring("line 2"));
}

TEST_CASE("validation names the offending key") {
    RunConfig cfg;
    cfg.model = "kerr";
    cfg.dt = -1.0;
    REQUIRE_THROWS_WITH(validate(cfg), Catch::Matchers::ContainsSubstring("'dt'"));
    cfg.dt = 1e-3;
    cfg.model = "quartic";
    REQUIRE_THROWS_WITH(validate(cfg), Catch::Matchers::ContainsSubstring("model"));
    cfg.model = "boson_generic";
    cfg.n_levels = 3;
    REQUIRE_THROWS_WITH(validate(cfg), Catch::Matchers::ContainsSubstring("n_levels"));
}

TEST_CASE("the fig1 preset pins the two-condensate benchmark") {
    RunConfig cfg;
    apply_preset(cfg, "fig1");
    REQUIRE(cfg.model == "two_mode");
    REQUIRE(cfg.n_particles == 17);
    REQUIRE(cfg.kerr_k == 0.1);
    REQUIRE(cfg.omega == 1.0);
    REQUIRE(cfg.dt == 1e-3);
    REQUIRE(cfg.t_max == 6.0);
    REQUIRE(cfg.n_traj == 10000);
    REQUIRE(cfg.renormalize);
    validate(cfg);

    for (const auto& name : preset_names()) {
        RunConfig c;
        apply_preset(c, name);
        validate(c); // every preset must be runnable as-is
    }
    REQUIRE_THROWS_AS(preset_settings("nope"), std::runtime_error);
}

TEST_CASE("time grid policy: about 200 rows, stride tiles the run") {
    RunConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_max = 6.0;
    cfg.sample_every = 0;
    int stride = 0;
    ssqmc::EnsembleOptions opt = ensemble_options(cfg, stride);
    REQUIRE(opt.n_steps == 6000);
    REQUIRE(opt.sample_stride == 30);
    REQUIRE(stride == 30);

    cfg.t_max = 10e-3; // 10 steps
    cfg.sample_every = 7;
    opt = ensemble_options(cfg, stride);
    REQUIRE(opt.sample_stride == 7);
    REQUIRE(opt.n_steps == 7); // floored to a multiple of the stride

    cfg.sample_every = 50; // longer than the run: single interval
    opt = ensemble_options(cfg, stride);
    REQUIRE(opt.sample_stride == 10);
    REQUIRE(opt.n_steps == 10);
}

TEST_CASE("runs are reproducible and thread-count independent byte for byte") {
    RunConfig cfg;
    cfg.model = "free_expansion";
    cfg.alpha0_re = cfg.alpha0_im = cfg.beta0_re = cfg.beta0_im = 0.0;
    cfg.n_traj = 120;
    cfg.dt = 1e-3;
    cfg.t_max = 0.05;
    cfg.seed = 4242;

    cfg.threads = 1;
    const std::string first = csv_string(run(cfg));
    const std::string again = csv_string(run(cfg));
    REQUIRE(first == again);
    for (const int t : {2, 4}) {
        cfg.threads = t;
        REQUIRE(csv_string(run(cfg)) == first);
    }
}

TEST_CASE("csv layout: metadata preamble, then labelled columns") {
    RunConfig cfg;
    cfg.model = "free_expansion";
    cfg.alpha0_re = cfg.alpha0_im = cfg.beta0_re = cfg.beta0_im = 0.0;
    cfg.n_traj = 60;
    cfg.dt = 1e-3;
    cfg.t_max = 0.1;
    cfg.sample_every = 20;
    cfg.threads = 1;
    const RunResult result = run(cfg);
    const auto lines = split_lines(csv_string(result));

    REQUIRE(lines[0] == "# ssqmc 1.0.0");
    std::size_t header_at = 0;
    bool saw_model = false, saw_requested = false, saw_divergent = false;
    for (std::size_t i = 1; i < lines.size(); ++i) {
        if (lines[i].rfind("# model: free_expansion", 0) == 0) saw_model = true;
        if (lines[i].rfind("# n_requested: 60", 0) == 0) saw_requested = true;
        if (lines[i].rfind("# n_divergent: 0", 0) == 0) saw_divergent = true;
        if (lines[i][0] != '#') {
            header_at = i;
            break;
        }
    }
    REQUIRE(saw_model);
    REQUIRE(saw_requested);
    REQUIRE(saw_divergent);
    REQUIRE(lines[header_at] ==
            "t,X_mean_re,X_mean_im,X_stderr,X_exact_re,X_exact_im"
            ",P_mean_re,P_mean_im,P_stderr,P_exact_re,P_exact_im"
            ",x2_mean_re,x2_mean_im,x2_stderr,x2_exact_re,x2_exact_im");
    // 0.1/1e-3 = 100 steps at stride 20: six sampled times including t = 0
    REQUIRE(lines.size() - header_at - 1 == 6);
    REQUIRE(lines[header_at + 1].rfind("0,", 0) == 0);

    // wall time and thread count must never leak into the file
    REQUIRE_FALSE(contains(csv_string(result), "threads"));
    REQUIRE_FALSE(contains(csv_string(result), "wall"));
}

TEST_CASE("observable selection filters columns and checks names") {
    RunConfig cfg;
    cfg.model = "free_expansion";
    cfg.n_traj = 30;
    cfg.dt = 1e-3;
    cfg.t_max = 0.02;
    cfg.threads = 1;
    cfg.observables = {"x2"};
    const auto lines = split_lines(csv_string(run(cfg)));
    for (const auto& line : lines) {
        if (line[0] == '#') continue;
        REQUIRE(line.substr(0, 2) != "t,X");
        REQUIRE(contains(line, "x2") == (line[0] == 't'));
        break;
    }

    cfg.observables = {"momentum"};
    REQUIRE_THROWS_WITH(run(cfg), Catch::Matchers::ContainsSubstring("momentum"));
}

TEST_CASE("reference curves carry the closed-form benchmarks") {
    SECTION("free expansion spread") {
        RunConfig cfg;
        cfg.model = "free_expansion";
        cfg.alpha0_re = cfg.alpha0_im = cfg.beta0_re = cfg.beta0_im = 0.0;
        cfg.n_traj = 10;
        cfg.dt = 1e-3;
        cfg.t_max = 2.0;
        cfg.threads = 1;
        const RunResult result = run(cfg);
        for (std::size_t ti = 0; ti < result.stats.time_grid.size(); ++ti) {
            const double t = result.stats.time_grid[ti];
            const cplx x2 = result.exact[ti][2];
            REQUIRE(std::abs(x2 - cplx{0.5 + 0.5 * t * t, 0.0}) < 1e-12);
            REQUIRE(std::abs(result.exact[ti][0]) < 1e-12); // X stays put
            REQUIRE(std::abs(result.exact[ti][1]) < 1e-12); // P stays put
        }
    }

    SECTION("two-mode transfer starts empty") {
        RunConfig cfg;
        apply_preset(cfg, "fig1");
        cfg.n_traj = 5;
        cfg.t_max = 0.1;
        cfg.threads = 1;
        const RunResult result = run(cfg);
        REQUIRE(std::abs(result.exact[0][0]) < 1e-12);                 // p1(0) = 0
        REQUIRE(std::abs(result.exact[0][1] - cplx{1.0, 0.0}) < 1e-12); // trace
        const std::size_t last = result.stats.time_grid.size() - 1;
        REQUIRE(std::abs(result.exact[last][0]) > 1e-4); // transfer has begun
        REQUIRE(std::abs(result.exact[last][1] - cplx{1.0, 0.0}) < 1e-12);
    }

    SECTION("kerr oracle matches the analytic coherent-state law") {
        RunConfig cfg;
        apply_preset(cfg, "kerr");
        cfg.n_traj = 5;
        cfg.t_max = 0.5;
        cfg.threads = 1;
        const RunResult result = run(cfg);
        const cplx i{0.0, 1.0};
        const cplx ba = cfg.beta0() * cfg.alpha0();
        for (std::size_t ti = 0; ti < result.stats.time_grid.size(); ++ti) {
            const double t = result.stats.time_grid[ti];
            const cplx want = cfg.alpha0() * std::exp(-i * cfg.omega * t) *
                              std::exp(ba * (std::exp(-i * cfg.kerr_k * t) - 1.0));
            REQUIRE(std::abs(result.exact[ti][0] - want) < 1e-9);
        }
    }
}

TEST_CASE("single-mode runs agree with their oracle at loose monte-carlo level") {
    // tiny smoke check that the mean actually tracks the exact curve
    RunConfig cfg;
    apply_preset(cfg, "kerr");
    cfg.n_traj = 400;
    cfg.t_max = 0.2;
    cfg.dt = 1e-3;
    cfg.threads = 0; // any thread count, results identical anyway
    const RunResult result = run(cfg);
    const std::size_t last = result.stats.time_grid.size() - 1;
    const auto& cell = result.stats.cell(last, 0);
    const cplx exact = result.exact[last][0];
    const double err = std::abs(cell.mean - exact);
    REQUIRE(err < 6.0 * std::max(cell.stderr_combined(), 1e-3));
}
