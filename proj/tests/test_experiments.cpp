#include <catch2/catch_amalgamated.hpp>

#include "csns/experiments.hpp"
#include "oracles.hpp"

using namespace csns;

TEST_CASE("norm scaling identity") {
    const PeriodicGrid g = make_grid(64, 2.0 * kPi);
    const SpectralField u = helical_field(g, {1, 1, 0}, 0.4, 0.2);
    CHECK(norm_scaling_identity_check(u, 0) == 0.0);
    for (int m = 1; m <= 4; ++m) CHECK(norm_scaling_identity_check(u, m) <= 1e-10);
    // non-dyadic rescale requests are rejected at the ScaleCore gate
    CHECK_THROWS_AS(ScaleCore::from_lambda(0.3), std::invalid_argument);
    // grid exhaustion refuses
    CHECK_THROWS_AS(norm_scaling_identity_check(u, 6), std::invalid_argument);
}

TEST_CASE("lambda scan collapses for zero force") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    const SpectralField u0 = helical_field(g, {1, 0, 1}, 0.05);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.3;
    cfg.snapshot_stride = 5;
    const LambdaScanResult res = lambda_scan(u0, zero_force(g), 2, 4.0, cfg, 2.0, false);
    REQUIRE(res.rungs.size() == 3);
    for (const auto& r : res.rungs) {
        CHECK(r.source_norm == 0.0);
        CHECK(r.source_f_norm == 0.0);
        CHECK(r.r_norm_mixed_p_inf == 0.0);
        CHECK(r.gate_met);
    }
    CHECK(res.fitted_source_decay_exponent == 0.0);
}

TEST_CASE("lambda scan on a generic admissible pair") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(41);
    const SpectralField u0 = helical_field(g, {1, 0, 0}, 0.04, 0.1);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 1e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.5;
    cfg.snapshot_stride = 5;
    const LambdaScanResult res = lambda_scan(u0, f, 2, 4.0, cfg, 2.0, false);
    REQUIRE(res.rungs.size() == 3);
    CHECK(!res.ladder_truncated);
    for (const auto& r : res.rungs) {
        CHECK(std::isfinite(r.source_norm));
        CHECK(r.source_norm > 0.0);
        CHECK(r.u_lambda_flag == LifespanFlag::completed);
        CHECK(r.r_lambda_flag == LifespanFlag::completed);
    }
    // source norms decrease along the ladder
    for (std::size_t i = 1; i < res.rungs.size(); ++i)
        CHECK(res.rungs[i].source_norm < res.rungs[i - 1].source_norm);
    CHECK(res.fitted_source_decay_exponent > 0.0);
}

TEST_CASE("lambda scan truncates a grid-exhausted ladder") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    const SpectralField u0 = helical_field(g, {2, 0, 1}, 0.05);
    SolverConfig cfg;
    cfg.dt = 2e-2;
    cfg.t_end = 0.1;
    const LambdaScanResult res = lambda_scan(u0, zero_force(g), 4, 4.0, cfg, 2.0, false);
    CHECK(res.ladder_truncated);
    CHECK(res.rungs.size() < 5);
}

TEST_CASE("blow-up observables") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(43);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 2e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);
    const SpectralField U = solve_steady_state(f, 1e-13);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.snapshot_stride = 10;

    SECTION("stationary run is flat") {
        const MildSolution run = solve_nsf(U, f, cfg, &U);
        const BlowupObservables obs = blowup_observables(run, f, 4.0, 3.0, &U);
        for (double v : obs.running_diff_norm) CHECK(v <= 1e-8);
        const double l0 = obs.l3_series.front();
        for (double v : obs.l3_series) CHECK(std::abs(v - l0) <= 1e-8);
        CHECK(!obs.guard_stop);
    }

    SECTION("small-data run: observables bounded, tail converging") {
        const SpectralField u0 = taylor_green_field(g, 0.05);
        SolverConfig longcfg = cfg;
        longcfg.t_end = 4.0;
        const MildSolution run = solve_nsf(u0, f, longcfg, &U);
        const BlowupObservables obs = blowup_observables(run, f, 4.0, 3.0, &U);
        CHECK(obs.final_l3 < 1.0);
        CHECK(std::isfinite(obs.final_diff_norm));
        CHECK(obs.cauchy_tail <= 0.05 * std::max(obs.final_diff_norm, 1e-30));
        CHECK(!obs.guard_stop);
    }

    SECTION("guard stop is flagged") {
        SolverConfig guarded = cfg;
        guarded.linf_guard = 1e-4;  // absurdly low so any run trips it
        const SpectralField u0 = taylor_green_field(g, 0.05);
        const MildSolution run = solve_nsf(u0, f, guarded, &U);
        REQUIRE(run.flag == LifespanFlag::norm_blowup);
        const BlowupObservables obs = blowup_observables(run, f, 4.0, 3.0, &U);
        CHECK(obs.guard_stop);
    }

    SECTION("exponent range enforced") {
        const MildSolution run = solve_nsf(U, f, cfg, &U);
        CHECK_THROWS_AS(blowup_observables(run, f, 4.0, 9.0, &U), std::invalid_argument);
        CHECK_THROWS_AS(blowup_observables(run, f, 2.5, 3.0, &U), std::invalid_argument);
    }
}

TEST_CASE("decomposition of solutions: single identity profile collapses") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(47);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 1e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);

    ProfileSet planted;
    planted.profiles.push_back(helical_field(g, {1, 1, 0}, 0.03));
    planted.cores.push_back({ScaleCore{}, ScaleCore{}});
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.5;
    cfg.snapshot_stride = 5;
    const DecompositionOfSolutionsReport rep =
        decomposition_of_solutions(planted, f, 0, 4.0, cfg, 2.0, 0.0);
    REQUIRE(rep.failures.empty());
    REQUIRE(!rep.entries.empty());
    // u_n = U^1 exactly, so the J = 1 remainder vanishes to solver tolerance
    for (const auto& e : rep.entries) {
        CHECK(e.J == 1);
        CHECK(e.r_norm_mixed_p_inf <= 1e-6);
    }
    for (double tau : rep.tau_n) CHECK(tau == Catch::Approx(cfg.t_end));
}

TEST_CASE("decomposition of solutions: two-profile structure") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(53);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 1e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);

    ProfileSet planted;
    planted.profiles.push_back(helical_field(g, {1, 1, 0}, 0.02));
    planted.profiles.push_back(helical_field(g, {1, 0, 1}, 0.015, 0.3));
    planted.cores.resize(2);
    for (int n = 0; n < 2; ++n) {
        planted.cores[0].push_back(ScaleCore{});
        planted.cores[1].push_back(ScaleCore{n + 1, {0, 0, 0}});
    }
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.5;
    cfg.snapshot_stride = 5;
    const DecompositionOfSolutionsReport rep =
        decomposition_of_solutions(planted, f, 0, 4.0, cfg, 2.0, 0.0);
    REQUIRE(rep.failures.empty());
    // tau_n shrinks with the concentrated profile's lambda^2
    REQUIRE(rep.tau_n.size() == 2);
    CHECK(rep.tau_n[0] == Catch::Approx(std::ldexp(cfg.t_end, -2)));
    CHECK(rep.tau_n[1] == Catch::Approx(std::ldexp(cfg.t_end, -4)));
    // the concentrated profile reorders first (smallest lambda^2 T)
    for (const auto& ord : rep.reorder) CHECK(ord.front() == 1);
    CHECK(rep.reorder_stable);
    // J = 2 absorbs more than J = 1: the residual shrinks with J for fixed n
    double r1 = -1, r2 = -1;
    for (const auto& e : rep.entries) {
        if (e.n == 0 && e.J == 1) r1 = e.r_norm_mixed_p_inf;
        if (e.n == 0 && e.J == 2) r2 = e.r_norm_mixed_p_inf;
    }
    REQUIRE(r1 >= 0.0);
    REQUIRE(r2 >= 0.0);
    CHECK(r2 < r1);
    // tau_n equals the brute-force minimum over exact ldexp scalings
    for (std::size_t n = 0; n < 2; ++n) {
        double mn = kInf;
        for (std::size_t j = 0; j < 2; ++j)
            mn = std::min(mn, std::ldexp(rep.lifespan_proxy[j],
                                         -2 * planted.cores[j][n].m));
        CHECK(rep.tau_n[n] == mn);
    }
}

TEST_CASE("j0 must carry the identity frame") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    ProfileSet planted;
    planted.profiles.push_back(helical_field(g, {1, 1, 0}, 0.02));
    planted.cores.push_back({ScaleCore{1, {0, 0, 0}}});
    SolverConfig cfg;
    CHECK_THROWS_AS(
        decomposition_of_solutions(planted, zero_force(g), 0, 4.0, cfg, 2.0, 0.0),
        std::invalid_argument);
}
