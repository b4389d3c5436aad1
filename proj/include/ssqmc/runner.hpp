#pragma once

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "ssqmc/ensemble.hpp"
#include "ssqmc/exact_basis.hpp"
#include "ssqmc/fock.hpp"
#include "ssqmc/models/cnumber.hpp"
#include "ssqmc/models/manybody.hpp"
#include "ssqmc/stats.hpp"

namespace ssqmc::runner {

inline constexpr const char* kVersion = "1.0.0";


struct RunConfig {
    std::string model = "two_mode";
    std::uint64_t seed = 1234;
    int n_traj = 10000;
    double dt = 1e-3;
    double t_max = 6.0;
    int sample_every = 0; // 0 = choose automatically (about 200 rows)
    int threads = 0;      // 0 = all hardware threads
    double hbar = 1.0;
    double divergence_cap = 1e12;
    double flag_tol = 1e-3;
    bool renormalize = false;
    std::string output_path;
    std::vector<std::string> observables; // empty = all model observables

    // single-mode parameters
    double omega = 1.0;
    double kerr_k = 0.1;
    double k1 = 0.1, k2 = 0.05;
    double eta = 1.0, mass = 1.0;
    double alpha0_re = 1.0, alpha0_im = 0.0;
    double beta0_re = 1.0, beta0_im = 0.0;

    // many-body parameters
    int n_particles = 17;
    int n_levels = 4;
    std::uint64_t model_seed = 7;
    double product_cap = 1e6;
    int exact_n_max = 30; // Fock truncation for single-mode oracle curves

    cplx alpha0() const { return {alpha0_re, alpha0_im}; }
    cplx beta0() const { return {beta0_re, beta0_im}; }
};

inline const std::vector<std::string>& known_models() {
    static const std::vector<std::string> ids{"free_expansion", "kerr",      "genkerr",
                                              "boson_generic",  "two_mode", "fermion_toy"};
    return ids;
}

namespace detail {

inline double parse_real(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const double v = std::stod(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: invalid numeric value for '" + key + "': " + value);
    }
}

inline long long parse_int(const std::string& key, const std::string& value) {
    try {
        std::size_t pos = 0;
        const long long v = std::stoll(value, &pos);
        if (pos != value.size()) throw std::invalid_argument(value);
        return v;
    } catch (const std::exception&) {
        throw std::runtime_error("config: invalid integer value for '" + key + "': " + value);
    }
}

inline bool parse_flag(const std::string& key, const std::string& value) {
    if (value == "1" || value == "true" || value == "on" || value == "yes") return true;
    if (value == "0" || value == "false" || value == "off" || value == "no") return false;
    throw std::runtime_error("config: invalid flag value for '" + key + "': " + value);
}

inline std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

} // namespace detail

// applies one key:value setting; preset vocabulary N/K/Omega is accepted
inline void apply_setting(RunConfig& cfg, const std::string& raw_key, const std::string& value) {
    std::string key = raw_key;
    if (key == "N") key = "n_particles";
    else if (key == "K") key = "kerr_k";
    else if (key == "Omega") key = "omega";
    else if (key == "master_seed") key = "seed";
    else if (key == "out" || key == "output") key = "output_path";

    using detail::parse_flag;
    using detail::parse_int;
    using detail::parse_real;
    if (key == "model") {
        cfg.model = value;
    } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "model_seed") {
        cfg.model_seed = static_cast<std::uint64_t>(parse_int(key, value));
    } else if (key == "n_traj") {
        cfg.n_traj = static_cast<int>(parse_int(key, value));
    } else if (key == "dt") {
        cfg.dt = parse_real(key, value);
    } else if (key == "t_max") {
        cfg.t_max = parse_real(key, value);
    } else if (key == "sample_every") {
        cfg.sample_every = static_cast<int>(parse_int(key, value));
    } else if (key == "threads") {
        cfg.threads = static_cast<int>(parse_int(key, value));
    } else if (key == "hbar") {
        cfg.hbar = parse_real(key, value);
    } else if (key == "divergence_cap") {
        cfg.divergence_cap = parse_real(key, value);
    } else if (key == "flag_tol") {
        cfg.flag_tol = parse_real(key, value);
    } else if (key == "renormalize") {
        cfg.renormalize = parse_flag(key, value);
    } else if (key == "output_path") {
        cfg.output_path = value;
    } else if (key == "observables") {
        cfg.observables.clear();
        std::stringstream ss(value);
        std::string item;
        while (std::getline(ss, item, ',')) {
            item = detail::trim(item);
            if (!item.empty()) cfg.observables.push_back(item);
        }
    } else if (key == "omega") {
        cfg.omega = parse_real(key, value);
    } else if (key == "kerr_k") {
        cfg.kerr_k = parse_real(key, value);
    } else if (key == "k1") {
        cfg.k1 = parse_real(key, value);
    } else if (key == "k2") {
        cfg.k2 = parse_real(key, value);
    } else if (key == "eta") {
        cfg.eta = parse_real(key, value);
    } else if (key == "mass") {
        cfg.mass = parse_real(key, value);
    } else if (key == "alpha0_re") {
        cfg.alpha0_re = parse_real(key, value);
    } else if (key == "alpha0_im") {
        cfg.alpha0_im = parse_real(key, value);
    } else if (key == "beta0_re") {
        cfg.beta0_re = parse_real(key, value);
    } else if (key == "beta0_im") {
        cfg.beta0_im = parse_real(key, value);
    } else if (key == "n_particles") {
        cfg.n_particles = static_cast<int>(parse_int(key, value));
    } else if (key == "n_levels") {
        cfg.n_levels = static_cast<int>(parse_int(key, value));
    } else if (key == "product_cap") {
        cfg.product_cap = parse_real(key, value);
    } else if (key == "exact_n_max") {
        cfg.exact_n_max = static_cast<int>(parse_int(key, value));
    } else {
        throw std::runtime_error("config: unknown key '" + raw_key + "'");
    }
}

// flat `key: value` (or `key = value`) document, one setting per line,
// `#` comments and blank lines ignored
inline void parse_config_text(RunConfig& cfg, const std::string& text) {
    std::stringstream ss(text);
    std::string line;
    int line_no = 0;
    while (std::getline(ss, line)) {
        ++line_no;
        const auto hash = line.find('#');
        if (hash != std::string::npos) line = line.substr(0, hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        auto sep = line.find(':');
        if (sep == std::string::npos) sep = line.find('=');
        if (sep == std::string::npos)
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     " is not 'key: value': " + line);
        const std::string key = detail::trim(line.substr(0, sep));
        const std::string value = detail::trim(line.substr(sep + 1));
        if (key.empty() || value.empty())
            throw std::runtime_error("config: line " + std::to_string(line_no) +
                                     " is missing a key or value");
        apply_setting(cfg, key, value);
    }
}

inline RunConfig parse_config_file(const std::string& path, RunConfig base = {}) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("config: cannot open file '" + path + "'");
    std::stringstream buf;
    buf << in.rdbuf();
    parse_config_text(base, buf.str());
    return base;
}

inline void validate(const RunConfig& cfg) {
    const auto& ids = known_models();
    if (std::find(ids.begin(), ids.end(), cfg.model) == ids.end())
        throw std::runtime_error("config: unknown value for 'model': " + cfg.model);
    if (!(cfg.dt > 0)) throw std::runtime_error("config: 'dt' must be > 0");
    if (!(cfg.t_max > 0)) throw std::runtime_error("config: 't_max' must be > 0");
    if (cfg.n_traj < 1) throw std::runtime_error("config: 'n_traj' must be >= 1");
    if (cfg.sample_every < 0) throw std::runtime_error("config: 'sample_every' must be >= 1");
    if (cfg.hbar <= 0) throw std::runtime_error("config: 'hbar' must be > 0");
    if (cfg.n_particles < 1) throw std::runtime_error("config: 'n_particles' must be >= 1");
    if (cfg.model == "fermion_toy" && cfg.n_levels < cfg.n_particles)
        throw std::runtime_error("config: 'n_levels' must be >= n_particles");
    if (cfg.model == "boson_generic" && cfg.n_levels != 2)
        throw std::runtime_error("config: 'n_levels' must be 2 for boson_generic (exact oracle)");
    if (cfg.model == "fermion_toy" && cfg.n_levels > 14)
        throw std::runtime_error("config: 'n_levels' above 14 overflows the exact oracle");
    if (cfg.exact_n_max < 1) throw std::runtime_error("config: 'exact_n_max' must be >= 1");
}

// preset scenarios; `fig1` is the two-condensate benchmark
// fig1 and fermion_toy turn renormalization on: the exact flow conserves the
// overlap, so the per-step rescale only removes Euler drift, which otherwise
// biases the t <= 2.5 window of the benchmark beyond its statistical error
inline std::vector<std::pair<std::string, std::string>> preset_settings(const std::string& name) {
    using kv = std::vector<std::pair<std::string, std::string>>;
    if (name == "fig1")
        return kv{{"model", "two_mode"}, {"N", "17"},      {"K", "0.1"},       {"Omega", "1"},
                  {"dt", "1e-3"},        {"t_max", "6"},   {"n_traj", "10000"},
                  {"renormalize", "on"}};
    if (name == "free_expansion")
        return kv{{"model", "free_expansion"}, {"eta", "1"},         {"mass", "1"},
                  {"alpha0_re", "0"},          {"alpha0_im", "0"},   {"beta0_re", "0"},
                  {"beta0_im", "0"},           {"dt", "1e-3"},       {"t_max", "2"},
                  {"n_traj", "10000"}};
    if (name == "kerr")
        return kv{{"model", "kerr"},   {"omega", "1"},  {"kerr_k", "0.1"}, {"alpha0_re", "1"},
                  {"alpha0_im", "0"},  {"beta0_re", "1"}, {"beta0_im", "0"}, {"dt", "1e-4"},
                  {"t_max", "1"},      {"n_traj", "10000"}};
    if (name == "genkerr")
        return kv{{"model", "genkerr"}, {"omega", "1"},      {"k1", "0.1"},     {"k2", "0.05"},
                  {"alpha0_re", "0.5"}, {"alpha0_im", "0"},  {"beta0_re", "0.5"},
                  {"beta0_im", "0"},    {"dt", "1e-4"},      {"t_max", "1"},    {"n_traj", "2000"}};
    if (name == "fermion_toy")
        return kv{{"model", "fermion_toy"}, {"n_levels", "4"}, {"n_particles", "2"},
                  {"model_seed", "7"},      {"dt", "1e-4"},    {"t_max", "0.5"},
                  {"n_traj", "10000"},      {"renormalize", "on"}};
    if (name == "boson_generic")
        return kv{{"model", "boson_generic"}, {"n_levels", "2"}, {"n_particles", "10"},
                  {"model_seed", "7"},        {"dt", "1e-4"},    {"t_max", "1"},
                  {"n_traj", "2000"}};
    throw std::runtime_error("unknown preset '" + name + "'");
}

inline const std::vector<std::string>& preset_names() {
    static const std::vector<std::string> names{"fig1",    "free_expansion", "kerr",
                                                "genkerr", "fermion_toy",    "boson_generic"};
    return names;
}

inline void apply_preset(RunConfig& cfg, const std::string& name) {
    for (const auto& [k, v] : preset_settings(name)) apply_setting(cfg, k, v);
}

// ---------------------------------------------------------------------------
// model construction from a validated config
// ---------------------------------------------------------------------------

inline models::FreeExpansionModel make_free_expansion(const RunConfig& cfg) {
    models::FreeExpansionModel m;
    m.eta = cfg.eta;
    m.mass = cfg.mass;
    m.hbar = cfg.hbar;
    m.alpha0 = cfg.alpha0();
    m.beta_star0 = cfg.beta0();
    return m;
}

inline models::KerrModel make_kerr(const RunConfig& cfg) {
    models::KerrModel m;
    m.omega = cfg.omega;
    m.kerr_k = cfg.kerr_k;
    m.hbar = cfg.hbar;
    m.alpha0 = cfg.alpha0();
    m.beta_star0 = cfg.beta0();
    return m;
}

inline models::GenKerrModel make_genkerr(const RunConfig& cfg) {
    models::GenKerrModel m;
    m.omega = cfg.omega;
    m.k1 = cfg.k1;
    m.k2 = cfg.k2;
    m.hbar = cfg.hbar;
    m.alpha0 = cfg.alpha0();
    m.beta_star0 = cfg.beta0();
    return m;
}

inline models::TwoModeModel make_two_mode(const RunConfig& cfg) {
    models::TwoModeModel m;
    m.n_particles = cfg.n_particles;
    m.omega_rabi = cfg.omega;
    m.kerr_k = cfg.kerr_k;
    m.hbar = cfg.hbar;
    m.renormalize = cfg.renormalize;
    m.product_cap = cfg.product_cap;
    return m;
}

inline models::Matrix random_hermitian(int m, RngStream& rng, double scale = 1.0) {
    models::Matrix h(m, m);
    for (int i = 0; i < m; ++i) {
        h(i, i) = cplx{rng.normal() * scale, 0.0};
        for (int j = i + 1; j < m; ++j) {
            h(i, j) = 0.5 * scale * cplx{rng.normal(), rng.normal()};
            h(j, i) = std::conj(h(i, j));
        }
    }
    return h;
}

inline models::BosonGenericModel make_boson_generic(const RunConfig& cfg) {
    models::BosonGenericModel m;
    RngStream rng(cfg.model_seed, 0);
    m.inter.kinetic = random_hermitian(cfg.n_levels, rng);
    m.inter.ops = {random_hermitian(cfg.n_levels, rng, 0.5),
                   random_hermitian(cfg.n_levels, rng, 0.5)};
    m.inter.signs = {1.0, 1.0};
    m.inter.hbar = cfg.hbar;
    m.n_particles = cfg.n_particles;
    m.phi0 = models::Vector::Zero(cfg.n_levels);
    m.phi0[0] = 1.0;
    m.renormalize = cfg.renormalize;
    return m;
}

inline models::FermionModel make_fermion_toy(const RunConfig& cfg) {
    models::FermionModel m;
    RngStream rng(cfg.model_seed, 0);
    m.inter.kinetic = random_hermitian(cfg.n_levels, rng);
    m.inter.ops = {random_hermitian(cfg.n_levels, rng, 0.5)};
    m.inter.signs = {1.0};
    m.inter.hbar = cfg.hbar;
    m.n_particles = cfg.n_particles;
    m.a0 = models::Matrix::Identity(cfg.n_levels, cfg.n_particles); // lowest levels filled
    m.renormalize = cfg.renormalize;
    return m;
}

// ---------------------------------------------------------------------------
// exact curves from the independent oracles
// ---------------------------------------------------------------------------

using ExactCurves = std::vector<std::vector<cplx>>; // [time][observable]

inline ExactCurves exact_free_expansion(const models::FreeExpansionModel& m,
                                        const std::vector<double>& times) {
    const auto xp0 = models::xp_observables(m.alpha0, m.beta_star0, m.eta, m.hbar);
    ExactCurves out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const double t = times[i];
        const cplx xt = xp0.x + xp0.p * (t / m.mass);
        const cplx x2 = 1.0 / (2.0 * m.eta) + xt * xt +
                        m.hbar * m.hbar * m.eta * t * t / (2.0 * m.mass * m.mass);
        out[i] = {xt, xp0.p, x2};
    }
    return out;
}

template <class SingleModeModel>
ExactCurves exact_single_mode(const SingleModeModel& m, const std::vector<double>& times,
                              int n_max) {
    const fock::FockTruncation trunc{n_max};
    const fock::Matrix h = m.hamiltonian(trunc);
    const fock::Matrix d0 = fock::bargmann_density(m.alpha0, m.beta_star0, trunc);
    const fock::Matrix a = fock::annihilation(trunc);
    const fock::Matrix ad = fock::creation(trunc);
    const fock::Matrix n_op = fock::number_op(trunc);
    fock::SpectralPropagator prop(h, m.hbar);
    ExactCurves out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const fock::Matrix dt_mat = prop.evolve_density(d0, times[i]);
        out[i] = {fock::expectation(a, dt_mat), fock::expectation(ad, dt_mat),
                  fock::expectation(n_op, dt_mat)};
    }
    return out;
}

inline ExactCurves exact_two_mode(const models::TwoModeModel& m,
                                  const std::vector<double>& times) {
    const fock::Matrix h = fock::two_mode_hamiltonian(m.n_particles, m.omega_rabi, m.kerr_k, m.hbar);
    fock::Vector psi0 = fock::Vector::Zero(m.n_particles + 1);
    psi0[0] = 1.0; // all particles in mode 2
    fock::SpectralPropagator prop(h, m.hbar);
    ExactCurves out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const fock::Vector psi = prop.evolve(psi0, times[i]);
        cplx p1{0.0, 0.0};
        for (int n = 0; n <= m.n_particles; ++n) p1 += static_cast<double>(n) * std::norm(psi[n]);
        out[i] = {p1, cplx{1.0, 0.0}};
    }
    return out;
}

inline ExactCurves exact_boson_generic(const models::BosonGenericModel& m,
                                       const std::vector<double>& times) {
    if (m.inter.dim() != 2)
        throw std::runtime_error("boson_generic oracle requires exactly 2 modes");
    exact::TwoModeBosons basis(m.n_particles);
    std::vector<Eigen::Matrix2cd> ops2;
    for (const auto& o : m.inter.ops) ops2.emplace_back(o);
    const fock::Matrix h = basis.hamiltonian(Eigen::Matrix2cd(m.inter.kinetic), ops2, m.inter.signs);
    const fock::Vector psi0 = basis.condensate(Eigen::Vector2cd(m.phi0));
    fock::SpectralPropagator prop(h, m.inter.hbar);
    ExactCurves out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const fock::Vector psi = prop.evolve(psi0, times[i]);
        out[i].resize(1 + 4);
        out[i][0] = cplx{1.0, 0.0}; // trace of the normalized pair
        for (int p = 0; p < 2; ++p)
            for (int q = 0; q < 2; ++q) {
                // rho1(p,q) = <c_q^dag c_p>
                const cplx val = psi.dot(basis.generator(q, p) * psi) / psi.squaredNorm();
                out[i][static_cast<std::size_t>(1 + p * 2 + q)] = val;
            }
    }
    return out;
}

inline ExactCurves exact_fermion_toy(const models::FermionModel& m,
                                     const std::vector<double>& times) {
    exact::FermionFock basis(m.inter.dim());
    const fock::Matrix h = basis.hamiltonian(m.inter.kinetic, m.inter.ops, m.inter.signs);
    const fock::Vector psi0 = basis.slater(m.a0);
    fock::SpectralPropagator prop(h, m.inter.hbar);
    const int dim = m.inter.dim();
    ExactCurves out(times.size());
    for (std::size_t i = 0; i < times.size(); ++i) {
        const fock::Vector psi = prop.evolve(psi0, times[i]);
        const fock::Matrix rho = basis.one_body_density(psi);
        out[i].resize(static_cast<std::size_t>(dim) * static_cast<std::size_t>(dim));
        for (int p = 0; p < dim; ++p)
            for (int q = 0; q < dim; ++q)
                out[i][static_cast<std::size_t>(p * dim + q)] = rho(p, q);
    }
    return out;
}

// ---------------------------------------------------------------------------
// orchestration
// ---------------------------------------------------------------------------

struct RunResult {
    RunConfig config;
    EnsembleStats stats;
    ExactCurves exact;
    int effective_sample_every = 1;
    double wall_seconds = 0.0; // reported to the console, never written to CSV
};

inline EnsembleOptions ensemble_options(const RunConfig& cfg, int& sample_every_out) {
    EnsembleOptions opt;
    opt.n_traj = cfg.n_traj;
    opt.dt = cfg.dt;
    long long n_steps = std::llround(cfg.t_max / cfg.dt);
    if (n_steps < 1) n_steps = 1;
    int stride = cfg.sample_every;
    if (stride <= 0) stride = static_cast<int>(std::max<long long>(1, n_steps / 200));
    if (stride > n_steps) stride = static_cast<int>(n_steps);
    n_steps = (n_steps / stride) * stride; // sampling grid must tile the run
    opt.n_steps = n_steps;
    opt.sample_stride = stride;
    opt.master_seed = cfg.seed;
    opt.threads = cfg.threads;
    opt.divergence_cap = cfg.divergence_cap;
    opt.flag_tol = cfg.flag_tol;
    sample_every_out = stride;
    return opt;
}

// column indices of the requested observables; empty request selects all
inline std::vector<std::size_t> selected_columns(const std::vector<std::string>& names,
                                                 const std::vector<std::string>& wanted) {
    std::vector<std::size_t> cols;
    if (wanted.empty()) {
        for (std::size_t k = 0; k < names.size(); ++k) cols.push_back(k);
        return cols;
    }
    for (const auto& name : wanted) {
        const auto it = std::find(names.begin(), names.end(), name);
        if (it == names.end())
            throw std::runtime_error("config: unknown observable '" + name + "'");
        cols.push_back(static_cast<std::size_t>(it - names.begin()));
    }
    return cols;
}

inline RunResult run(const RunConfig& cfg) {
    validate(cfg);
    RunResult result;
    result.config = cfg;
    const auto t0 = std::chrono::steady_clock::now();
    EnsembleOptions opt = ensemble_options(cfg, result.effective_sample_every);
    // reject observable typos before spending time on the ensemble
    const auto check_obs = [&cfg](const auto& m) {
        selected_columns(m.observable_names(), cfg.observables);
    };

    if (cfg.model == "free_expansion") {
        const auto m = make_free_expansion(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_free_expansion(m, result.stats.time_grid);
    } else if (cfg.model == "kerr") {
        const auto m = make_kerr(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_single_mode(m, result.stats.time_grid, cfg.exact_n_max);
    } else if (cfg.model == "genkerr") {
        const auto m = make_genkerr(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_single_mode(m, result.stats.time_grid, cfg.exact_n_max);
    } else if (cfg.model == "two_mode") {
        const auto m = make_two_mode(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_two_mode(m, result.stats.time_grid);
    } else if (cfg.model == "boson_generic") {
        const auto m = make_boson_generic(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_boson_generic(m, result.stats.time_grid);
    } else if (cfg.model == "fermion_toy") {
        const auto m = make_fermion_toy(cfg);
        check_obs(m);
        result.stats = run_ensemble(m, opt);
        result.exact = exact_fermion_toy(m, result.stats.time_grid);
    } else {
        throw std::runtime_error("config: unknown value for 'model': " + cfg.model);
    }
    result.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    return result;
}

// ---------------------------------------------------------------------------
// CSV output: '#' metadata preamble, then one row per sampled time with
// {mean_re, mean_im, stderr, exact_re, exact_im} per observable. Strictly
// deterministic for a given config (thread count and wall time never enter).
// ---------------------------------------------------------------------------

namespace detail {

inline std::string fmt_g17(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.17g", v);
    return buf;
}

inline std::map<std::string, std::string> config_echo(const RunConfig& cfg, int sample_every) {
    std::map<std::string, std::string> kv;
    kv["model"] = cfg.model;
    kv["seed"] = std::to_string(cfg.seed);
    kv["n_traj"] = std::to_string(cfg.n_traj);
    kv["dt"] = fmt_g17(cfg.dt);
    kv["t_max"] = fmt_g17(cfg.t_max);
    kv["sample_every"] = std::to_string(sample_every);
    kv["hbar"] = fmt_g17(cfg.hbar);
    kv["divergence_cap"] = fmt_g17(cfg.divergence_cap);
    kv["flag_tol"] = fmt_g17(cfg.flag_tol);
    kv["renormalize"] = cfg.renormalize ? "on" : "off";
    if (cfg.model == "free_expansion") {
        kv["eta"] = fmt_g17(cfg.eta);
        kv["mass"] = fmt_g17(cfg.mass);
    }
    if (cfg.model == "kerr" || cfg.model == "genkerr") kv["omega"] = fmt_g17(cfg.omega);
    if (cfg.model == "kerr" || cfg.model == "two_mode") kv["kerr_k"] = fmt_g17(cfg.kerr_k);
    if (cfg.model == "genkerr") {
        kv["k1"] = fmt_g17(cfg.k1);
        kv["k2"] = fmt_g17(cfg.k2);
    }
    if (cfg.model == "free_expansion" || cfg.model == "kerr" || cfg.model == "genkerr") {
        kv["alpha0_re"] = fmt_g17(cfg.alpha0_re);
        kv["alpha0_im"] = fmt_g17(cfg.alpha0_im);
        kv["beta0_re"] = fmt_g17(cfg.beta0_re);
        kv["beta0_im"] = fmt_g17(cfg.beta0_im);
        kv["exact_n_max"] = std::to_string(cfg.exact_n_max);
    }
    if (cfg.model == "two_mode") {
        kv["omega"] = fmt_g17(cfg.omega);
        kv["n_particles"] = std::to_string(cfg.n_particles);
        kv["product_cap"] = fmt_g17(cfg.product_cap);
    }
    if (cfg.model == "boson_generic" || cfg.model == "fermion_toy") {
        kv["n_particles"] = std::to_string(cfg.n_particles);
        kv["n_levels"] = std::to_string(cfg.n_levels);
        kv["model_seed"] = std::to_string(cfg.model_seed);
    }
    return kv;
}

} // namespace detail

inline void write_csv(std::ostream& out, const RunResult& result) {
    const auto& stats = result.stats;
    out << "# ssqmc " << kVersion << "\n";
    for (const auto& [k, v] : detail::config_echo(result.config, result.effective_sample_every))
        out << "# " << k << ": " << v << "\n";
    out << "# n_requested: " << stats.n_requested << "\n";
    out << "# n_divergent: " << stats.n_divergent << "\n";
    out << "# n_flagged: " << stats.n_flagged << "\n";

    const auto cols = selected_columns(stats.observable_names, result.config.observables);
    out << "t";
    for (const auto c : cols) {
        const auto& name = stats.observable_names[c];
        out << "," << name << "_mean_re"
            << "," << name << "_mean_im"
            << "," << name << "_stderr"
            << "," << name << "_exact_re"
            << "," << name << "_exact_im";
    }
    out << "\n";

    for (std::size_t ti = 0; ti < stats.time_grid.size(); ++ti) {
        out << detail::fmt_g17(stats.time_grid[ti]);
        for (const auto c : cols) {
            const auto& cell = stats.cell(ti, c);
            const cplx exact = result.exact[ti][c];
            out << "," << detail::fmt_g17(cell.mean.real())
                << "," << detail::fmt_g17(cell.mean.imag())
                << "," << detail::fmt_g17(cell.stderr_combined())
                << "," << detail::fmt_g17(exact.real())
                << "," << detail::fmt_g17(exact.imag());
        }
        out << "\n";
    }
}

inline std::string csv_string(const RunResult& result) {
    std::ostringstream ss;
    write_csv(ss, result);
    return ss.str();
}

inline void write_csv_file(const std::string& path, const RunResult& result) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot open output file '" + path + "'");
    write_csv(out, result);
    if (!out) throw std::runtime_error("failed writing output file '" + path + "'");
}

} // namespace ssqmc::runner
