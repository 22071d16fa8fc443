#pragma once

#include <optional>
#include <string>
#include <vector>

#include "csns/io.hpp"
#include "csns/rng.hpp"
#include "csns/scalecore.hpp"

namespace csns {

// One JSON document drives a run; flags override config keys and defaults
// fill the rest. Validation collects every violated gate so a rejected
// config reports all problems at once.
struct RunConfig {
    int n = 32;
    double period = 2.0 * kPi;
    double dealias_fraction = 2.0 / 3.0;

    SolverConfig solver;
    double p = 4.0;  // critical-space exponent for observables
    double r = 3.0;  // time exponent for blow-up observables

    unsigned long long seed = 1;
    int threads = 1;
    bool serial = true;
    std::string out_dir = "out";

    Json initial_data = Json{{"kind", "zero"}};
    Json force = Json{{"kind", "zero"}};
    Json experiment = Json::object();

    Json raw = Json::object();

    static RunConfig from_json(const Json& j) {
        RunConfig c;
        c.raw = j;
        if (j.contains("grid")) {
            const auto& g = j["grid"];
            c.n = g.value("n", c.n);
            c.period = g.value("L", c.period);
            c.dealias_fraction = g.value("dealias_fraction", c.dealias_fraction);
        }
        if (j.contains("solver")) {
            const auto& s = j["solver"];
            c.solver.dt = s.value("dt", c.solver.dt);
            c.solver.t_end = s.value("t_end", c.solver.t_end);
            c.solver.picard_tol = s.value("picard_tol", c.solver.picard_tol);
            c.solver.picard_max_iter = s.value("picard_max_iter", c.solver.picard_max_iter);
            c.solver.snapshot_stride = s.value("snapshot_stride", c.solver.snapshot_stride);
            c.solver.linf_guard = s.value("linf_guard", c.solver.linf_guard);
            const std::string st = s.value("stepper", std::string("picard_duhamel"));
            if (st == "picard_duhamel")
                c.solver.stepper = Stepper::picard_duhamel;
            else if (st == "integrating_factor_rk4")
                c.solver.stepper = Stepper::integrating_factor_rk4;
            else
                c.solver.stepper = Stepper::picard_duhamel;  // flagged in validate()
        }
        if (j.contains("exponents")) {
            c.p = j["exponents"].value("p", c.p);
            c.r = j["exponents"].value("r", c.r);
        }
        c.seed = j.value("seed", c.seed);
        c.threads = j.value("threads", c.threads);
        c.serial = j.value("serial", c.serial);
        c.out_dir = j.value("out", c.out_dir);
        if (j.contains("initial_data")) c.initial_data = j["initial_data"];
        if (j.contains("force")) c.force = j["force"];
        if (j.contains("experiment")) c.experiment = j["experiment"];
        c.solver.observable_p = c.p;
        return c;
    }

    // Every violated gate, empty when admissible.
    std::vector<std::string> violated_gates() const {
        std::vector<std::string> v;
        if (n < 16 || n % 2 != 0) v.push_back("grid.n must be even and >= 16");
        if (!(period > 0.0)) v.push_back("grid.L must be positive");
        if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
            v.push_back("grid.dealias_fraction must be in (0,1]");
        if (!(solver.dt > 0.0)) v.push_back("solver.dt must be positive");
        if (!(solver.t_end >= 0.0)) v.push_back("solver.t_end must be >= 0");
        if (!(solver.picard_tol > 0.0)) v.push_back("solver.picard_tol must be positive");
        if (solver.picard_max_iter < 1) v.push_back("solver.picard_max_iter must be >= 1");
        if (solver.snapshot_stride < 1) v.push_back("solver.snapshot_stride must be >= 1");
        if (!(p > 3.0)) v.push_back("exponents.p must satisfy p > 3");
        if (!(2.0 < r && r < 2.0 * p / (p - 3.0)))
            v.push_back("exponents.r must satisfy 2 < r < 2p/(p-3)");
        if (threads < 1) v.push_back("threads must be >= 1");
        if (raw.contains("solver") && raw["solver"].contains("stepper")) {
            const std::string st = raw["solver"]["stepper"].get<std::string>();
            if (st != "picard_duhamel" && st != "integrating_factor_rk4")
                v.push_back("solver.stepper must be picard_duhamel or integrating_factor_rk4");
        }
        if (raw.contains("initial_data")) {
            const std::string kind = raw["initial_data"].value("kind", std::string("zero"));
            if (kind == "rescaled" || raw["initial_data"].contains("lambda")) {
                const double lam = raw["initial_data"].value("lambda", 1.0);
                try {
                    (void)ScaleCore::from_lambda(lam);
                } catch (const std::invalid_argument&) {
                    v.push_back("initial_data.lambda must be an exact dyadic power 2^-m");
                }
            }
        }
        return v;
    }

    PeriodicGrid grid() const { return make_grid(n, period, dealias_fraction); }

    // the artifact location does not change the run
    Json canonical_raw() const {
        Json canon = raw;
        canon.erase("out");
        return canon;
    }

    std::string digest() const { return hash_string(canonical_raw().dump()); }
};

inline SpectralField build_initial_data(const RunConfig& cfg, const PeriodicGrid& g) {
    const std::string kind = cfg.initial_data.value("kind", std::string("zero"));
    Rng rng(cfg.seed);
    SpectralField u(g, 3);
    u.divergence_free = true;
    if (kind == "zero") {
    } else if (kind == "taylor_green") {
        u = taylor_green_field(g, cfg.initial_data.value("amplitude", 0.05));
    } else if (kind == "random_band") {
        u = random_divfree_field(g, rng, cfg.initial_data.value("kmin", 1),
                                 cfg.initial_data.value("kmax", 4),
                                 cfg.initial_data.value("slope", 0.0),
                                 cfg.initial_data.value("amplitude", 0.05));
    } else if (kind == "single_mode") {
        const int k = cfg.initial_data.value("k", 1);
        const double a = cfg.initial_data.value("amplitude", 0.05);
        u.at(1, g.index(g.idx_of(k), 0, 0)) = Complex(0.5 * a, 0.0);
        u.symmetrize_hermitian();
        u = leray_project(u);
    } else if (kind == "file") {
        u = read_field_snapshot(cfg.initial_data.at("path").get<std::string>(),
                                cfg.dealias_fraction);
    } else {
        throw std::invalid_argument("initial_data.kind unknown: " + kind);
    }
    if (cfg.initial_data.contains("lambda")) {
        const ScaleCore sc = ScaleCore::from_lambda(cfg.initial_data["lambda"].get<double>());
        u = apply_lambda(u, sc);
    }
    return u;
}

inline ForceSpec build_force(const RunConfig& cfg, const PeriodicGrid& g) {
    const std::string kind = cfg.force.value("kind", std::string("zero"));
    if (kind == "zero") return zero_force(g);
    if (kind == "random_potential") {
        Rng rng(cfg.seed ^ 0x9e3779b97f4a7c15ull);
        SpectralField pot =
            random_divfree_field(g, rng, cfg.force.value("kmin", 1),
                                 cfg.force.value("kmax", 3), 0.0, 1.0);
        const double target = cfg.force.value("l3_size", 1e-3);
        const double cur = lp_norm(pot, 3.0);
        if (cur > 0.0) pot *= target / cur;
        return make_force_from_potential(pot);
    }
    if (kind == "file") {
        SpectralField pot = read_field_snapshot(cfg.force.at("path").get<std::string>(),
                                                cfg.dealias_fraction);
        return make_force_from_potential(pot);
    }
    throw std::invalid_argument("force.kind unknown: " + kind);
}

// Run manifest: config digest, tool version, wall time, stage status, and a
// content-hash inventory of every produced file.
struct RunManifest {
    std::string config_digest;
    std::string tool_version = "csns 1.0.0";
    double wall_time_s = 0.0;
    std::vector<std::pair<std::string, std::string>> stages;  // name, status
    std::vector<std::pair<std::string, std::string>> files;   // path, fnv64

    void add_stage(const std::string& name, const std::string& status) {
        stages.push_back({name, status});
    }
    void add_file(const fs::path& root, const fs::path& p) {
        files.push_back({fs::relative(p, root).string(), hash_file(p)});
    }

    Json to_json() const {
        Json j;
        j["config_digest"] = config_digest;
        j["tool_version"] = tool_version;
        j["wall_time_s"] = wall_time_s;
        j["stages"] = Json::array();
        for (const auto& [n, s] : stages) j["stages"].push_back({{"name", n}, {"status", s}});
        j["files"] = Json::array();
        for (const auto& [p, h] : files) j["files"].push_back({{"path", p}, {"fnv64", h}});
        return j;
    }
};

}  // namespace csns
