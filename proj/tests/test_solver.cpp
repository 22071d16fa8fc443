#include <catch2/catch_amalgamated.hpp>

#include "csns/rng.hpp"
#include "csns/solver.hpp"
#include "csns/split.hpp"

using namespace csns;

namespace {
double max_coeff_diff(const SpectralField& a, const SpectralField& b) {
    double m = 0.0;
    for (int c = 0; c < a.ncomp(); ++c)
        for (std::size_t i = 0; i < a.npoints(); ++i)
            m = std::max(m, std::abs(a.at(c, i) - b.at(c, i)));
    return m;
}
}  // namespace

TEST_CASE("solve_ns basics") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 0.2;
    cfg.snapshot_stride = 5;

    SECTION("zero data gives the zero trajectory") {
        SpectralField z(g, 3);
        z.divergence_free = true;
        const MildSolution sol = solve_ns(z, cfg);
        CHECK(sol.flag == LifespanFlag::completed);
        for (std::size_t i = 0; i < sol.trajectory.size(); ++i)
            CHECK(sol.trajectory.field(i).max_abs_coeff() == 0.0);
    }

    SECTION("single helical mode evolves as the exact heat flow") {
        // a single divergence-free mode has vanishing advection
        const SpectralField u0 = helical_field(g, {1, 1, 0}, 0.2);
        const MildSolution sol = solve_ns(u0, cfg);
        const SpectralField expect = heat_semigroup(u0, sol.final_time);
        CHECK(l2_distance(sol.trajectory.field(sol.trajectory.size() - 1), expect) <=
              1e-9 * l2_norm(expect));
    }

    SECTION("two-mode data: heat-flow deviation is first order in amplitude") {
        auto deviation = [&](double amp) {
            SpectralField u0 = helical_field(g, {1, 1, 0}, amp);
            u0 += helical_field(g, {0, 2, 1}, 0.8 * amp, 0.3);
            const MildSolution sol = solve_ns(u0, cfg);
            const SpectralField lin = heat_semigroup(u0, sol.final_time);
            return l2_distance(sol.trajectory.field(sol.trajectory.size() - 1), lin) /
                   l2_norm(lin);
        };
        const double d1 = deviation(0.2);
        const double d2 = deviation(0.1);
        CHECK(d1 > 0.0);
        // quadratic correction relative to linear flow halves with amplitude
        CHECK(d2 / d1 == Catch::Approx(0.5).margin(0.15));
    }

    SECTION("Taylor-Green data: energy decreases monotonically") {
        const SpectralField u0 = taylor_green_field(g, 0.5);
        const MildSolution sol = solve_ns(u0, cfg);
        REQUIRE(sol.flag == LifespanFlag::completed);
        for (std::size_t i = 1; i < sol.trajectory.size(); ++i)
            CHECK(l2_norm(sol.trajectory.field(i)) <
                  l2_norm(sol.trajectory.field(i - 1)));
    }

    SECTION("energy identity holds to stepper order") {
        // d/dt ||u||_2^2 + 2 ||grad u||_2^2 = 0, checked with centered
        // differences on consecutive snapshots
        SolverConfig fine = cfg;
        fine.dt = 2e-3;
        fine.t_end = 0.04;
        fine.snapshot_stride = 1;
        SpectralField u0 = taylor_green_field(g, 0.4);
        u0 += helical_field(g, {0, 1, 2}, 0.2);
        const MildSolution sol = solve_ns(u0, fine);
        const Trajectory& tr = sol.trajectory;
        for (std::size_t i = 1; i + 1 < tr.size(); ++i) {
            const double e_prev = std::pow(l2_norm(tr.field(i - 1)), 2);
            const double e_next = std::pow(l2_norm(tr.field(i + 1)), 2);
            const double dEdt = (e_next - e_prev) / (tr.times()[i + 1] - tr.times()[i - 1]);
            SpectralField gu = tr.field(i);
            double grad2 = 0.0;
            const PeriodicGrid& gg = gu.grid();
            for_each_mode(gg, [&](std::size_t idx, int k0, int k1, int k2) {
                const double xx = gg.xi_norm2(k0, k1, k2);
                for (int c = 0; c < 3; ++c) grad2 += xx * std::norm(gu.at(c, idx));
            });
            grad2 *= gg.period * gg.period * gg.period;
            CHECK(std::abs(dEdt + 2.0 * grad2) <= 2e-4 * std::max(1.0, 2.0 * grad2));
        }
    }

    SECTION("non-divergence-free data rejected") {
        SpectralField bad(g, 3);
        bad.at(0, g.index(g.idx_of(1), 0, 0)) = Complex(0.5, 0.0);
        bad.symmetrize_hermitian();
        CHECK_THROWS_AS(solve_ns(bad, cfg), std::invalid_argument);
    }
}

TEST_CASE("stepper cross-validation: picard vs integrating-factor RK4") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    SpectralField u0 = taylor_green_field(g, 0.3);
    u0 += helical_field(g, {0, 1, 2}, 0.15, 0.5);
    SolverConfig a;
    a.dt = 1e-3;
    a.t_end = 0.1;
    a.snapshot_stride = 100;
    a.stepper = Stepper::picard_duhamel;
    SolverConfig b = a;
    b.stepper = Stepper::integrating_factor_rk4;
    const MildSolution sa = solve_ns(u0, a);
    const MildSolution sb = solve_ns(u0, b);
    const SpectralField& fa = sa.trajectory.field(sa.trajectory.size() - 1);
    const SpectralField& fb = sb.trajectory.field(sb.trajectory.size() - 1);
    CHECK(l2_distance(fa, fb) / l2_norm(fb) <= 1e-6);
}

TEST_CASE("steady state solver") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);

    SECTION("zero force fixes the origin") {
        const SpectralField U = solve_steady_state(zero_force(g), 1e-12);
        CHECK(U.max_abs_coeff() == 0.0);
    }

    SECTION("small force: first iterate error is quadratic in the force size") {
        Rng rng(9);
        SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
        auto run = [&](double eps) {
            SpectralField p2 = pot;
            p2 *= eps / lp_norm(pot, 3.0);
            const ForceSpec f = make_force_from_potential(p2);
            const SpectralField U = solve_steady_state(f, 1e-14);
            // first iterate is -lap^{-1} P f
            SpectralField first = leray_project(f.force());
            first = inverse_laplacian(first);
            first *= -1.0;
            SpectralField diff = U;
            diff -= first;
            return lp_norm(diff, 3.0);
        };
        const double e1 = run(2e-3);
        const double e2 = run(1e-3);
        CHECK(e1 / e2 == Catch::Approx(4.0).margin(0.8));  // quadratic in force size
    }

    SECTION("certificate ||U||_3 <= 2 ||lap^{-1} f||_3 over a force sweep") {
        Rng rng(10);
        for (int rep = 0; rep < 4; ++rep) {
            SpectralField pot = random_divfree_field(g, rng, 1, 3, 0.0, 1.0);
            pot *= (5e-4 + rep * 4e-4) / lp_norm(pot, 3.0);
            const ForceSpec f = make_force_from_potential(pot);
            const SpectralField U = solve_steady_state(f, 1e-13);
            CHECK(lp_norm(U, 3.0) <= 2.0 * f.l3_size);
            CHECK(steady_state_residual(U, f) <= 10.0 * 1e-13);
        }
    }

    SECTION("oversized force triggers contraction failure") {
        Rng rng(11);
        SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
        pot *= 50.0 / lp_norm(pot, 3.0);
        const ForceSpec f = make_force_from_potential(pot);
        CHECK_THROWS_AS(solve_steady_state(f, 1e-10), std::runtime_error);
    }
}

TEST_CASE("solve_nsf") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(13);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 2e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);
    SolverConfig cfg;
    cfg.dt = 1e-2;
    cfg.t_end = 1.0;
    cfg.snapshot_stride = 10;

    SECTION("steady-state start stays put") {
        const SpectralField U = solve_steady_state(f, 1e-13);
        const MildSolution sol = solve_nsf(U, f, cfg, &U);
        REQUIRE(sol.flag == LifespanFlag::completed);
        double drift = 0.0;
        for (std::size_t i = 0; i < sol.trajectory.size(); ++i)
            drift = std::max(drift, l2_distance(sol.trajectory.field(i), U));
        CHECK(drift <= 1e-8);
    }

    SECTION("zero force reduces to solve_ns bitwise") {
        const SpectralField u0 = taylor_green_field(g, 0.2);
        SolverConfig c2 = cfg;
        c2.t_end = 0.1;
        const MildSolution a = solve_ns(u0, c2);
        const MildSolution b = solve_nsf(u0, zero_force(g), c2);
        for (std::size_t i = 0; i < a.trajectory.size(); ++i)
            CHECK(max_coeff_diff(a.trajectory.field(i), b.trajectory.field(i)) == 0.0);
    }

    SECTION("zero start converges toward the steady state") {
        SpectralField z(g, 3);
        z.divergence_free = true;
        const SpectralField U = solve_steady_state(f, 1e-13);
        SolverConfig longer = cfg;
        longer.t_end = 3.0;
        const MildSolution sol = solve_nsf(z, f, longer, &U);
        REQUIRE(sol.flag == LifespanFlag::completed);
        std::vector<double> dist;
        for (std::size_t i = 0; i < sol.trajectory.size(); ++i)
            dist.push_back(lp_norm(
                Trajectory::offset(sol.trajectory, U, -1.0).field(i), 3.0));
        for (std::size_t i = 1; i < dist.size(); ++i) CHECK(dist[i] <= dist[i - 1] + 1e-14);
        CHECK(dist.back() < 0.05 * dist.front());
        CHECK(sol.recorded_norms.count("uf_minus_Uf_mixed_p_inf") == 1);
    }
}

TEST_CASE("duhamel operator B") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(15);
    const SpectralField a = random_divfree_field(g, rng, 1, 3, 0.0, 0.4);
    const SpectralField b = random_divfree_field(g, rng, 1, 3, 0.0, 0.4);
    const Trajectory ta = heat_flow_trajectory(a, 0.5, 51);
    const Trajectory tb = heat_flow_trajectory(b, 0.5, 51);

    SECTION("B(0, v) = 0") {
        SpectralField z(g, 3);
        std::vector<SpectralField> zs(51, z);
        const Trajectory tz(ta.times(), zs);
        CHECK(duhamel_B(tz, tb, 0.5).max_abs_coeff() == 0.0);
    }

    SECTION("bitwise symmetric") {
        const SpectralField ab = duhamel_B(ta, tb, 0.5);
        const SpectralField ba = duhamel_B(tb, ta, 0.5);
        CHECK(max_coeff_diff(ab, ba) == 0.0);
    }

    SECTION("constant-in-time single-mode pair: closed-form exponential integral") {
        // For constant G, B(t) = -(1 - e^{-|xi|^2 t})/|xi|^2 G per mode
        const SpectralField ma = helical_field(g, {1, 0, 0}, 0.5);
        const SpectralField mb = helical_field(g, {0, 1, 0}, 0.5, 0.4);
        std::vector<double> ts(41);
        std::vector<SpectralField> fa(41, ma), fb(41, mb);
        for (int i = 0; i < 41; ++i) ts[i] = 0.5 * i / 40.0;
        const Trajectory ca(ts, fa), cb(ts, fb);
        const SpectralField got = duhamel_B(ca, cb, 0.5);
        SpectralField G = nonlinear_Q(ma, mb);
        G *= -0.5;
        SpectralField expect(g, 3);
        for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
            const double xx = g.xi_norm2(k0, k1, k2);
            const double w = xx == 0.0 ? 0.5 : (1.0 - std::exp(-xx * 0.5)) / xx;
            for (int c = 0; c < 3; ++c) expect.at(c, i) = w * G.at(c, i);
        });
        CHECK(max_coeff_diff(got, expect) <= 1e-12 * std::max(expect.max_abs_coeff(), 1e-30));
    }

    SECTION("mesh not covering [0,t] rejected") {
        CHECK_THROWS_AS(duhamel_B(ta, tb, 0.7), std::invalid_argument);
    }
}

TEST_CASE("mild solution via Picard agrees with the Duhamel integral form") {
    // u(t) - e^{t lap} u0 should equal B(u,u)(t) computed independently
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    SpectralField u0 = taylor_green_field(g, 0.3);
    u0 += helical_field(g, {0, 1, 2}, 0.1);
    SolverConfig cfg;
    cfg.dt = 1e-3;
    cfg.t_end = 0.05;
    cfg.snapshot_stride = 1;
    const MildSolution sol = solve_ns(u0, cfg);
    const double T = sol.final_time;
    const SpectralField duh = duhamel_B(sol.trajectory, sol.trajectory, T);
    SpectralField lhs = sol.trajectory.field(sol.trajectory.size() - 1);
    lhs -= heat_semigroup(u0, T);
    CHECK(l2_distance(lhs, duh) <= 1e-8 * std::max(l2_norm(duh), 1e-12));
}

TEST_CASE("solve_perturbation") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    SolverConfig cfg;
    cfg.dt = 5e-3;
    cfg.t_end = 0.2;
    cfg.snapshot_stride = 4;

    SECTION("zero data, zero source: zero trajectory") {
        SpectralField z(g, 3);
        z.divergence_free = true;
        const MildSolution sol = solve_perturbation(z, nullptr, nullptr, nullptr, cfg);
        for (std::size_t i = 0; i < sol.trajectory.size(); ++i)
            CHECK(sol.trajectory.field(i).max_abs_coeff() == 0.0);
    }

    SECTION("g = 0, U = 0, fext = 0 reduces to solve_ns bitwise") {
        const SpectralField w0 = taylor_green_field(g, 0.25);
        const MildSolution a = solve_ns(w0, cfg);
        SpectralField z(g, 3);
        const MildSolution b = solve_perturbation(w0, nullptr, &z, nullptr, cfg);
        for (std::size_t i = 0; i < a.trajectory.size(); ++i)
            CHECK(max_coeff_diff(a.trajectory.field(i), b.trajectory.field(i)) == 0.0);
    }

    SECTION("small data stays small and records its mixed norms") {
        Rng rng(23);
        const SpectralField w0 = random_divfree_field(g, rng, 1, 3, 0.0, 1e-3);
        const SpectralField gdrift = random_divfree_field(g, rng, 1, 3, 0.0, 0.05);
        const Trajectory gt = heat_flow_trajectory(gdrift, cfg.t_end, 11);
        const SpectralField U = 0.01 * helical_field(g, {1, 0, 1}, 1.0);
        const MildSolution sol = solve_perturbation(w0, &gt, &U, nullptr, cfg);
        REQUIRE(sol.flag == LifespanFlag::completed);
        CHECK(sol.recorded_norms.at("w_mixed_p_p") > 0.0);
        CHECK(sol.recorded_norms.at("w_mixed_p_inf") > 0.0);
        CHECK(sol.diagnostics.back().l3 < 1.0);
    }
}

TEST_CASE("perturbation subtraction satisfies its own equation") {
    // r := u_f - u - U_f from the remainder system: residual of
    //   dr/dt - lap r + (1/2)Q(r,r) + Q(r, u + U_f) + Q(u, U_f) = 0
    // evaluated with centered time differences is second order small.
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(29);
    SpectralField pot = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
    pot *= 2e-3 / lp_norm(pot, 3.0);
    const ForceSpec f = make_force_from_potential(pot);
    const SpectralField U = solve_steady_state(f, 1e-13);
    SpectralField u0 = taylor_green_field(g, 0.15);
    SolverConfig cfg;
    cfg.dt = 1e-4;
    cfg.t_end = 0.02;
    cfg.snapshot_stride = 1;
    cfg.picard_tol = 1e-12;
    SpectralField uf0 = u0 + U;
    const MildSolution uf = solve_nsf(uf0, f, cfg, &U);
    const MildSolution u = solve_ns(u0, cfg);
    REQUIRE(uf.flag == LifespanFlag::completed);
    REQUIRE(u.flag == LifespanFlag::completed);

    const Trajectory& tu = u.trajectory;
    const Trajectory& tf = uf.trajectory;
    double worst = 0.0;
    for (std::size_t i = 16; i + 2 < tu.size(); i += 32) {
        auto r_at = [&](std::size_t k) {
            SpectralField r = tf.field(k);
            r -= tu.field(k);
            r -= U;
            return r;
        };
        const double h = tu.times()[i + 1] - tu.times()[i];
        SpectralField drdt = r_at(i + 1);
        drdt -= r_at(i - 1);
        drdt *= 1.0 / (2.0 * h);
        const SpectralField r = r_at(i);
        SpectralField res = drdt;
        res -= laplacian(r);
        SpectralField qrr = nonlinear_Q(r, r);
        qrr *= 0.5;
        res += qrr;
        SpectralField drift = tu.field(i) + U;
        res += nonlinear_Q(r, drift);
        res += nonlinear_Q(tu.field(i), U);
        // scale: the largest term in the balance
        const double scale = std::max({l2_norm(drdt), l2_norm(laplacian(r)),
                                       l2_norm(nonlinear_Q(tu.field(i), U))});
        worst = std::max(worst, l2_norm(res) / std::max(scale, 1e-30));
    }
    CHECK(worst <= 1e-6);
}

TEST_CASE("split_intervals") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    const DyadicWindow w = default_window(g);

    SECTION("zero drift: breakpoints {0, T}") {
        SpectralField z(g, 3);
        const Trajectory tr({0.0, 0.5, 1.0}, {z, z, z});
        const SplitSchedule sch = split_intervals(tr, 4.0, 0.1, &w);
        REQUIRE(sch.point_count() == 2);
        CHECK(sch.breakpoints.front() == 0.0);
        CHECK(sch.breakpoints.back() == 1.0);
    }

    SECTION("constant-rate density: piece count tracks the greedy oracle") {
        // single-block constant-in-time drift: the CL^p norm over [a,b]
        // grows like (b-a)^{1/p} * level, so pieces have equal length
        // (theta/level)^p and N-1 = ceil(T / piece)
        const SpectralField u = helical_field(g, {2, 0, 0}, 1.0);
        const int nt = 257;
        std::vector<double> ts(nt);
        std::vector<SpectralField> fs(nt, u);
        for (int i = 0; i < nt; ++i) ts[i] = static_cast<double>(i) / (nt - 1);
        const Trajectory tr(ts, std::move(fs));
        const double p = 4.0;
        const BesovSpec spec{sp_exponent(p) + 2.0 / p, p, p, w};
        const double level = besov_norm(u, spec);  // block value per unit time^{1/p}
        const double theta = 0.6 * level;          // forces several pieces
        const SplitSchedule sch = split_intervals(tr, p, theta, &w);
        const double piece = std::pow(theta / level, p);
        const int expectN = static_cast<int>(std::ceil(1.0 / piece)) + 1;
        CHECK(std::abs(sch.point_count() - expectN) <= 1);
        for (double nrm : sch.measured_piece_norms) CHECK(nrm <= theta * (1.0 + 1e-9));
        // interior pieces saturate
        for (std::size_t i = 0; i + 1 < sch.measured_piece_norms.size(); ++i)
            CHECK(sch.measured_piece_norms[i] >= theta * (1.0 - 1e-6));
    }

    SECTION("concatenation: whole norm equals the l^p glue of the pieces") {
        // low-frequency data so the norm mass spreads over many mesh cells
        Rng rng(31);
        const SpectralField u = random_divfree_field(g, rng, 1, 2, 0.0, 1.0);
        const Trajectory tr = modulated_trajectory(u, rng, 1.0, 65);
        const double p = 4.0;
        const BesovSpec spec{sp_exponent(p) + 2.0 / p, p, p, w};
        const double whole = chemin_lerner_norm(tr, p, spec);
        const SplitSchedule sch = split_intervals(tr, p, 0.55 * whole, &w);
        double acc = 0.0;
        for (double nrm : sch.measured_piece_norms) acc += std::pow(nrm, p);
        CHECK(whole == Catch::Approx(std::pow(acc, 1.0 / p)).epsilon(1e-8));
    }

    SECTION("threshold finer than one sample errors") {
        const SpectralField u = helical_field(g, {2, 0, 0}, 1.0);
        const Trajectory tr({0.0, 0.5, 1.0}, {u, u, u});
        CHECK_THROWS_AS(split_intervals(tr, 4.0, 1e-6, &w), std::runtime_error);
    }
}

TEST_CASE("drift smallness certificate") {
    const PeriodicGrid g = make_grid(16, 2.0 * kPi);
    Rng rng(37);
    std::vector<Trajectory> probes;
    for (int i = 0; i < 3; ++i)
        probes.push_back(heat_flow_trajectory(
            random_divfree_field(g, rng, 1, 4, 0.0, 1.0), 0.5, 9));

    SECTION("U = 0 gives 0") {
        SpectralField z(g, 3);
        CHECK(drift_smallness_check(z, probes, 4.0) == 0.0);
    }

    SECTION("ratio is linear in the amplitude of U") {
        const SpectralField U = helical_field(g, {1, 0, 1}, 0.02);
        const double r1 = drift_smallness_check(U, probes, 4.0);
        const double r2 = drift_smallness_check(2.0 * U, probes, 4.0);
        CHECK(std::abs(r2 / r1 - 2.0) <= 1e-10);
    }

    SECTION("zero probe rejected") {
        SpectralField z(g, 3);
        std::vector<Trajectory> zp = {Trajectory({0.0, 1.0}, {z, z})};
        const SpectralField U = helical_field(g, {1, 0, 1}, 0.02);
        CHECK_THROWS_AS(drift_smallness_check(U, zp, 4.0), std::invalid_argument);
    }
}
