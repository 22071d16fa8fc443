// csns command-line driver: batch experiments against one JSON config, with
// reproducible artifacts (run manifest with content hashes) per run.
//
// Exit codes: 0 ok, 2 config rejected, 3 compute failure, 4 invariant gate
// failure. Errors go to stderr as one JSON object; progress lines also go to
// stderr, artifacts and the summary to files/stdout.

#include <chrono>
#include <cstdlib>
#include <fstream>
#include <iostream>

#include <CLI11.hpp>

#include "csns/estimates.hpp"
#include "csns/experiments.hpp"
#include "csns/io.hpp"
#include "csns/runconfig.hpp"

namespace {

using namespace csns;

struct GateFailure : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct CliOptions {
    std::string config_path;
    std::string out_dir;
    std::optional<unsigned long long> seed;
    std::optional<int> threads;
    bool serial = false;
};

RunConfig load_config(const CliOptions& opt) {
    Json j = Json::object();
    if (!opt.config_path.empty()) {
        std::ifstream in(opt.config_path);
        if (!in) throw std::invalid_argument("cannot open config: " + opt.config_path);
        j = Json::parse(in);
    }
    // precedence: flags > config > defaults; env CSNS_OUT overrides --out
    if (!opt.out_dir.empty()) j["out"] = opt.out_dir;
    if (const char* env = std::getenv("CSNS_OUT")) j["out"] = std::string(env);
    if (opt.seed) j["seed"] = *opt.seed;
    if (opt.threads) j["threads"] = *opt.threads;
    if (opt.serial) {
        j["serial"] = true;
        j["threads"] = 1;
    }
    RunConfig cfg = RunConfig::from_json(j);
    const auto gates = cfg.violated_gates();
    if (!gates.empty()) {
        Json err;
        err["error"] = {{"code", "config"}, {"message", "config rejected"}};
        err["violated_gates"] = gates;
        std::cerr << err.dump() << "\n";
        std::exit(2);
    }
    return cfg;
}

void progress(const std::string& msg) { std::cerr << "[csns] " << msg << "\n"; }

Json flag_to_json(LifespanFlag f) {
    switch (f) {
        case LifespanFlag::completed: return "completed";
        case LifespanFlag::norm_blowup: return "norm_blowup";
        default: return "iteration_failure";
    }
}

void finalize_manifest(const RunConfig& cfg, RunManifest& man,
                       std::chrono::steady_clock::time_point t0) {
    man.config_digest = cfg.digest();
    man.wall_time_s =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const fs::path root(cfg.out_dir);
    std::vector<fs::path> produced;
    for (const auto& e : fs::recursive_directory_iterator(root))
        if (e.is_regular_file() && e.path().filename() != "run_manifest.json")
            produced.push_back(e.path());
    std::sort(produced.begin(), produced.end());
    for (const auto& p : produced) man.add_file(root, p);
    write_json(root / "run_manifest.json", man.to_json());
}

int cmd_simulate(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    progress("building initial data and force");
    const SpectralField u0 = build_initial_data(cfg, g);
    const ForceSpec f = build_force(cfg, g);
    progress("advancing mild solution");
    MildSolution sol = f.is_zero() ? solve_ns(u0, cfg.solver) : solve_nsf(u0, f, cfg.solver);
    man.add_stage("solve", sol.flag == LifespanFlag::completed ? "completed" : "stopped");
    const fs::path root(cfg.out_dir);
    Json norms;
    for (const auto& [k, v] : sol.recorded_norms) norms[k] = v;
    norms["final_time"] = sol.final_time;
    norms["lifespan_flag"] = flag_to_json(sol.flag);
    write_trajectory(root / "trajectory", sol.trajectory, cfg.canonical_raw(), norms);
    write_diagnostics_csv(root / "diagnostics.csv", sol.diagnostics);
    const BesovSpec spec = BesovSpec::critical(cfg.p, default_window(g));
    write_besov_report(root / "besov_final.csv", root / "besov_final.json",
                       sol.trajectory.field(sol.trajectory.size() - 1), spec);
    Json summary;
    summary["final_time"] = sol.final_time;
    summary["lifespan_flag"] = flag_to_json(sol.flag);
    summary["norms"] = norms;
    write_json(root / "summary.json", summary);
    finalize_manifest(cfg, man, t0);
    std::cout << summary.dump(2) << "\n";
    return sol.flag == LifespanFlag::completed ? 0 : 3;
}

int cmd_steady(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const ForceSpec f = build_force(cfg, g);
    const double tol = cfg.experiment.value("tol", 1e-11);
    progress("running steady-state fixed point");
    const SpectralField U = solve_steady_state(f, tol);
    man.add_stage("steady_state", "completed");
    const fs::path root(cfg.out_dir);
    write_field_snapshot(root / "steady_state.csns", U);
    Json summary;
    summary["l3_norm"] = lp_norm(U, 3.0);
    summary["force_l3"] = f.l3_size;
    summary["certificate_l3_le_2force"] = lp_norm(U, 3.0) <= 2.0 * f.l3_size;
    summary["residual_l2"] = steady_state_residual(U, f);
    write_json(root / "summary.json", summary);
    finalize_manifest(cfg, man, t0);
    std::cout << summary.dump(2) << "\n";
    if (!summary["certificate_l3_le_2force"].get<bool>())
        throw GateFailure("steady-state certificate violated");
    return 0;
}

int cmd_perturb(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const SpectralField w0 = build_initial_data(cfg, g);
    const ForceSpec f = build_force(cfg, g);
    // drift: solve the base flow named in experiment.drift, default none
    std::optional<MildSolution> drift_run;
    std::optional<Trajectory> drift;
    if (cfg.experiment.contains("drift")) {
        RunConfig dcfg = cfg;
        dcfg.initial_data = cfg.experiment["drift"];
        const SpectralField g0 = build_initial_data(dcfg, g);
        progress("solving drift flow");
        drift_run = solve_ns(g0, cfg.solver);
        drift = drift_run->trajectory;
    }
    SpectralField U(g, 3);
    if (cfg.experiment.value("use_steady_drift", false))
        U = solve_steady_state(f, 1e-11);
    std::optional<Trajectory> fext;
    if (!f.is_zero()) {
        const SpectralField pf = leray_project(f.force());
        std::vector<double> ts = {0.0, cfg.solver.t_end};
        std::vector<SpectralField> fs_ = {pf, pf};
        fext = Trajectory(ts, fs_);
    }
    progress("solving perturbation system");
    MildSolution sol = solve_perturbation(w0, drift ? &*drift : nullptr, &U,
                                          fext ? &*fext : nullptr, cfg.solver);
    man.add_stage("perturbation", sol.flag == LifespanFlag::completed ? "completed" : "stopped");
    const fs::path root(cfg.out_dir);
    Json norms;
    for (const auto& [k, v] : sol.recorded_norms) norms[k] = v;
    write_trajectory(root / "trajectory", sol.trajectory, cfg.canonical_raw(), norms);
    write_diagnostics_csv(root / "diagnostics.csv", sol.diagnostics);
    Json summary;
    summary["lifespan_flag"] = flag_to_json(sol.flag);
    summary["norms"] = norms;
    write_json(root / "summary.json", summary);
    finalize_manifest(cfg, man, t0);
    std::cout << summary.dump(2) << "\n";
    return sol.flag == LifespanFlag::completed ? 0 : 3;
}

int cmd_verify(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const fs::path root(cfg.out_dir);
    CorpusConfig cc;
    cc.seed = cfg.seed;
    cc.size = cfg.experiment.value("corpus_size", 30);
    if (cc.size < 2) {
        Json err;
        err["error"] = {{"code", "config"}, {"message", "verify: corpus too small"}};
        std::cerr << err.dump() << "\n";
        return 2;
    }
    const double p = cfg.p;
    std::vector<std::string> suites =
        cfg.experiment.value("suites", std::vector<std::string>{
            "heat_block_decay", "product_law_1", "product_law_2",
            "product_law_3", "product_law_4", "duhamel_smoothing"});
    std::vector<int> resolutions =
        cfg.experiment.value("resolutions", std::vector<int>{16, 32});
    bool all_pass = true;
    Json all;
    std::string csv = "inequality_id,params,constant,stability_ratio\n";
    for (const std::string& s : suites) {
        progress("verifying " + s);
        auto run_at = [&](const PeriodicGrid& g) -> EstimateReport {
            if (s == "heat_block_decay")
                return verify_heat_block_decay(make_field_corpus(g, cc), p,
                                               {0.0, 1e-3, 1e-2, 0.1, 1.0});
            const auto corpus = make_trajectory_corpus(g, cc);
            if (s == "product_law_1") return verify_product_law_1(corpus, p, p + 1.0, 3.0, 0.1);
            if (s == "product_law_2") return verify_product_law_2(corpus, p, 4.0, 0.1);
            if (s == "product_law_3") return verify_product_law_3(corpus, 8.0, 8.0, 4.0);
            if (s == "product_law_4") return verify_product_law_4(corpus, p);
            if (s == "duhamel_smoothing")
                return verify_duhamel_smoothing(corpus, 2.0, 4.0, p, sp_exponent(p));
            throw std::invalid_argument("unknown verify suite: " + s);
        };
        EstimateReport rep = stability_sweep(resolutions, cfg.period, run_at);
        const bool finite = std::isfinite(rep.measured_constant);
        const bool stable = rep.stability_ratio < 2.0;
        all_pass = all_pass && finite && stable;
        Json jr;
        jr["inequality_id"] = rep.inequality_id;
        jr["params"] = rep.exponent_params;
        jr["measured_constant"] = rep.measured_constant;
        jr["corpus_size"] = rep.corpus_size;
        jr["resolutions"] = rep.resolutions;
        jr["stability_ratio"] = rep.stability_ratio;
        jr["pass"] = finite && stable;
        all[s] = jr;
        std::string params;
        for (const auto& [k, v] : rep.exponent_params)
            params += k + "=" + format_double(v) + ";";
        csv += rep.inequality_id + "," + params + "," + format_double(rep.measured_constant) +
               "," + format_double(rep.stability_ratio) + "\n";
    }
    all["seed"] = cfg.seed;
    write_json(root / "estimate_reports.json", all);
    write_text_file(root / "estimates.csv", csv);
    man.add_stage("verify", all_pass ? "pass" : "gate_failure");
    finalize_manifest(cfg, man, t0);
    std::cout << all.dump(2) << "\n";
    if (!all_pass) throw GateFailure("estimate gates failed");
    return 0;
}

int cmd_profiles(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const fs::path root(cfg.out_dir);
    // planted two-profile family: identity frame plus a concentrating one
    const int n_seq = cfg.experiment.value("n_seq", 4);
    const double amp = cfg.experiment.value("amplitude", 0.05);
    ProfileSet planted;
    planted.profiles.push_back(helical_field(g, {1, 1, 0}, amp));
    planted.profiles.push_back(helical_field(g, {0, 1, -1}, 0.8 * amp, 0.3));
    planted.cores.resize(2);
    Rng rng(cfg.seed);
    for (int n = 0; n < n_seq; ++n) {
        planted.cores[0].push_back(ScaleCore{});
        planted.cores[1].push_back(
            ScaleCore{std::min(n, 2), {g.period * 0.5, g.period * 0.25, 0.0}});
    }
    std::vector<SpectralField> seq;
    for (int n = 0; n < n_seq; ++n) seq.push_back(synthesize(planted, n));
    progress("running greedy extraction");
    auto [rec, report] = extract_profiles(seq, cfg.experiment.value("J_max", 4),
                                          cfg.experiment.value("stop_tol", 1e-8),
                                          {}, &planted);
    Json j;
    j["rounds"] = report.remainder_besov_per_round;
    j["stalled"] = report.stalled;
    j["recovered"] = Json::array();
    bool pass = !report.recovered.empty();
    for (const auto& r : report.recovered) {
        j["recovered"].push_back({{"planted_index", r.planted_index},
                                  {"gauge_exponent", r.gauge_exponent},
                                  {"scales_match_exactly", r.scales_match_exactly},
                                  {"max_core_error_cells", r.max_core_error_cells},
                                  {"profile_l3_relative_error", r.profile_l3_relative_error}});
        pass = pass && r.scales_match_exactly && r.max_core_error_cells <= 1.0;
    }
    std::string csv = "n,pythagorean_defect\n";
    for (std::size_t n = 0; n < report.pythagorean_defects.size(); ++n)
        csv += std::to_string(n) + "," + format_double(report.pythagorean_defects[n]) + "\n";
    write_text_file(root / "defects.csv", csv);
    write_json(root / "decomposition_report.json", j);
    man.add_stage("profiles", pass ? "pass" : "gate_failure");
    finalize_manifest(cfg, man, t0);
    std::cout << j.dump(2) << "\n";
    if (!pass) throw GateFailure("profile recovery gates failed");
    return 0;
}

int cmd_lambda_scan(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const fs::path root(cfg.out_dir);
    const SpectralField u0 = build_initial_data(cfg, g);
    const ForceSpec f = build_force(cfg, g);
    const int m_max = cfg.experiment.value("m_max", 3);
    const double K = cfg.experiment.value("K", 2.0);
    progress("running dyadic lambda scan");
    LambdaScanResult res = lambda_scan(u0, f, m_max, cfg.p, cfg.solver, K,
                                       cfg.experiment.value("run_nsf_at_gate", true));
    Json j;
    j["fitted_source_decay_exponent"] = res.fitted_source_decay_exponent;
    j["ladder_truncated"] = res.ladder_truncated;
    j["first_gate_rung"] = res.first_gate_rung;
    j["rungs"] = Json::array();
    std::string csv =
        "m,lambda,source_norm,source_f_norm,u_lambda_norm,gate_small,gate_exp_form,"
        "split_N,gate_met,r_norm\n";
    for (const auto& r : res.rungs) {
        j["rungs"].push_back({{"m", r.m},
                              {"lambda", r.lambda},
                              {"source_norm", r.source_norm},
                              {"source_f_norm", r.source_f_norm},
                              {"u_lambda_norm", r.u_lambda_norm},
                              {"gate_small", r.gate_small},
                              {"gate_exp_form", r.gate_exp_form},
                              {"split_N", r.split_N},
                              {"gate_met", r.gate_met},
                              {"r_norm_mixed_p_inf", r.r_norm_mixed_p_inf},
                              {"nsf_ran", r.nsf_ran},
                              {"nsf_flag", flag_to_json(r.nsf_flag)},
                              {"nsf_sup_l3", r.nsf_sup_l3}});
        csv += std::to_string(r.m) + "," + format_double(r.lambda) + "," +
               format_double(r.source_norm) + "," + format_double(r.source_f_norm) + "," +
               format_double(r.u_lambda_norm) + "," + format_double(r.gate_small) + "," +
               format_double(r.gate_exp_form) + "," + std::to_string(r.split_N) + "," +
               (r.gate_met ? "1" : "0") + "," + format_double(r.r_norm_mixed_p_inf) + "\n";
    }
    write_json(root / "lambda_scan.json", j);
    write_text_file(root / "lambda_scan.csv", csv);
    man.add_stage("lambda_scan", "completed");
    finalize_manifest(cfg, man, t0);
    std::cout << j.dump(2) << "\n";
    return 0;
}

int cmd_decompose_solutions(const RunConfig& cfg) {
    const auto t0 = std::chrono::steady_clock::now();
    const PeriodicGrid g = cfg.grid();
    RunManifest man;
    fs::create_directories(cfg.out_dir);
    const fs::path root(cfg.out_dir);
    const ForceSpec f = build_force(cfg, g);
    const double amp = cfg.experiment.value("amplitude", 0.04);
    const int n_seq = cfg.experiment.value("n_seq", 3);
    ProfileSet planted;
    planted.profiles.push_back(helical_field(g, {1, 0, 1}, amp));
    planted.profiles.push_back(helical_field(g, {0, 1, 1}, 0.7 * amp, 0.4));
    planted.cores.resize(2);
    for (int n = 0; n < n_seq; ++n) {
        planted.cores[0].push_back(ScaleCore{});
        planted.cores[1].push_back(ScaleCore{n, {0.5 * g.period, 0.25 * g.period, 0.0}});
    }
    progress("running decomposition-of-solutions experiment");
    DecompositionOfSolutionsReport rep = decomposition_of_solutions(
        planted, f, 0, cfg.p, cfg.solver, cfg.experiment.value("K", 2.0),
        cfg.experiment.value("orthogonality_threshold", 3.0));
    Json j;
    j["tau_n"] = rep.tau_n;
    j["reorder_stable"] = rep.reorder_stable;
    j["failures"] = rep.failures;
    j["entries"] = Json::array();
    std::string csv = "J,n,tau_n,w_norm,r_norm,G_norm,F_norm,r_bound,split_N\n";
    for (const auto& e : rep.entries) {
        j["entries"].push_back({{"J", e.J},
                                {"n", e.n},
                                {"tau_n", e.tau_n},
                                {"w_norm_mixed_1_inf", e.w_norm_mixed_1_inf},
                                {"r_norm_mixed_p_inf", e.r_norm_mixed_p_inf},
                                {"G_drift_norm", e.G_drift_norm},
                                {"F_source_norm", e.F_source_norm},
                                {"r_bound", e.r_bound},
                                {"split_N", e.split_N}});
        csv += std::to_string(e.J) + "," + std::to_string(e.n) + "," +
               format_double(e.tau_n) + "," + format_double(e.w_norm_mixed_1_inf) + "," +
               format_double(e.r_norm_mixed_p_inf) + "," + format_double(e.G_drift_norm) +
               "," + format_double(e.F_source_norm) + "," + format_double(e.r_bound) + "," +
               std::to_string(e.split_N) + "\n";
    }
    write_json(root / "decomposition_of_solutions.json", j);
    write_text_file(root / "decomposition_of_solutions.csv", csv);
    man.add_stage("decompose_solutions", rep.failures.empty() ? "completed" : "partial");
    finalize_manifest(cfg, man, t0);
    std::cout << j.dump(2) << "\n";
    return rep.failures.empty() ? 0 : 3;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"critical-space Navier-Stokes laboratory"};
    app.require_subcommand(1);
    CliOptions opt;
    app.add_option("--config", opt.config_path, "JSON config path");
    app.add_option("--out", opt.out_dir, "output directory");
    app.add_option("--seed", opt.seed, "RNG seed override");
    app.add_option("--threads", opt.threads, "parallelism degree");
    app.add_flag("--serial", opt.serial, "force serial deterministic mode");

    auto* simulate = app.add_subcommand("simulate", "advance a mild solution");
    auto* steady = app.add_subcommand("steady", "solve the steady state");
    auto* perturb = app.add_subcommand("perturb", "solve the perturbation system");
    auto* verify = app.add_subcommand("verify", "measure inequality constants");
    auto* profiles = app.add_subcommand("profiles", "profile synthesis/extraction round trip");
    auto* lambda = app.add_subcommand("lambda-scan", "dyadic rescaling scan");
    auto* decomp = app.add_subcommand("decompose-solutions",
                                      "profile decomposition of solutions");

    CLI11_PARSE(app, argc, argv);

    try {
        const RunConfig cfg = load_config(opt);
        if (simulate->parsed()) return cmd_simulate(cfg);
        if (steady->parsed()) return cmd_steady(cfg);
        if (perturb->parsed()) return cmd_perturb(cfg);
        if (verify->parsed()) return cmd_verify(cfg);
        if (profiles->parsed()) return cmd_profiles(cfg);
        if (lambda->parsed()) return cmd_lambda_scan(cfg);
        if (decomp->parsed()) return cmd_decompose_solutions(cfg);
        return 2;
    } catch (const GateFailure& e) {
        Json err;
        err["error"] = {{"code", "invariant_gate"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 4;
    } catch (const std::invalid_argument& e) {
        Json err;
        err["error"] = {{"code", "config"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 2;
    } catch (const std::exception& e) {
        Json err;
        err["error"] = {{"code", "compute"}, {"message", e.what()}};
        std::cerr << err.dump() << "\n";
        return 3;
    }
}
