#pragma once

#include <cmath>
#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csns/force.hpp"
#include "csns/trajectory.hpp"

namespace csns {

enum class Stepper { picard_duhamel, integrating_factor_rk4 };
enum class LifespanFlag { completed, norm_blowup, iteration_failure };

struct SolverConfig {
    double dt = 1e-2;
    double t_end = 1.0;
    double picard_tol = 1e-10;
    int picard_max_iter = 50;
    Stepper stepper = Stepper::picard_duhamel;
    int snapshot_stride = 1;
    double linf_guard = 1e3;     // norm_blowup guard on ||u||_inf
    double observable_p = 4.0;   // p for the recorded critical-space observables
    bool besov_diagnostics = true;

    void validate() const {
        if (!(dt > 0.0)) throw std::invalid_argument("SolverConfig: dt must be > 0");
        if (!(t_end >= 0.0)) throw std::invalid_argument("SolverConfig: t_end must be >= 0");
        if (!(picard_tol > 0.0)) throw std::invalid_argument("SolverConfig: picard_tol must be > 0");
        if (picard_max_iter < 1) throw std::invalid_argument("SolverConfig: picard_max_iter >= 1");
        if (snapshot_stride < 1) throw std::invalid_argument("SolverConfig: snapshot_stride >= 1");
    }
};

struct StepDiagnostics {
    double t = 0.0;
    double l3 = 0.0;
    double linf = 0.0;
    double besov_sp = 0.0;
    double residual = 0.0;
    int iterations = 0;
};

struct MildSolution {
    Trajectory trajectory;
    LifespanFlag flag = LifespanFlag::completed;
    double final_time = 0.0;
    std::vector<StepDiagnostics> diagnostics;
    std::map<std::string, double> recorded_norms;
};

namespace detail {

// Per-mode factors for one exponential-trapezoid step of size h:
//   u_{n+1} = e^{-z} u_n + h [ phi2s(z) G(t_n) + (phi1 - phi2s)(z) G(t_{n+1}) ],
// z = |xi|^2 h. phi1 = (1-e^{-z})/z, phi2s = (1-(1+z)e^{-z})/z^2. The G terms
// come from linear interpolation of the integrand inside the Duhamel
// integral; the integral against the heat kernel is then exact, so constant
// sources (the time-independent force) are integrated exactly and steady
// states are exact fixed points of the discrete step.
struct HeatStepTables {
    std::vector<double> decay, phi1, phi2s;
};

inline HeatStepTables make_heat_tables(const PeriodicGrid& g, double h) {
    HeatStepTables t;
    t.decay.resize(g.npoints());
    t.phi1.resize(g.npoints());
    t.phi2s.resize(g.npoints());
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double z = g.xi_norm2(k0, k1, k2) * h;
        const double e = std::exp(-z);
        t.decay[i] = e;
        if (z < 1e-5) {
            t.phi1[i] = 1.0 - z / 2.0 + z * z / 6.0 - z * z * z / 24.0;
            t.phi2s[i] = 0.5 - z / 3.0 + z * z / 8.0 - z * z * z / 30.0;
        } else {
            t.phi1[i] = (1.0 - e) / z;
            t.phi2s[i] = (1.0 - (1.0 + z) * e) / (z * z);
        }
    });
    return t;
}

inline std::vector<double> halfstep_decay(const PeriodicGrid& g, double h) {
    std::vector<double> d(g.npoints());
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        d[i] = std::exp(-g.xi_norm2(k0, k1, k2) * h * 0.5);
    });
    return d;
}

inline void apply_table(SpectralField& u, const std::vector<double>& tab) {
    for (int c = 0; c < u.ncomp(); ++c)
        for (std::size_t i = 0; i < tab.size(); ++i) u.at(c, i) *= tab[i];
}

inline SpectralField with_table(const SpectralField& u, const std::vector<double>& tab) {
    SpectralField v = u;
    apply_table(v, tab);
    return v;
}

// r = a + s1*T1.w1 + s2*T2.w2 per mode (tables broadcast across components)
inline SpectralField combine(const SpectralField& a,
                             const std::vector<double>& t1, double s1,
                             const SpectralField& w1,
                             const std::vector<double>& t2, double s2,
                             const SpectralField& w2) {
    SpectralField r = a;
    for (int c = 0; c < r.ncomp(); ++c)
        for (std::size_t i = 0; i < t1.size(); ++i)
            r.at(c, i) += s1 * t1[i] * w1.at(c, i) + s2 * t2[i] * w2.at(c, i);
    return r;
}

inline std::pair<double, double> l3_and_linf(const SpectralField& u) {
    const auto phys = to_physical(u);
    double acc = 0.0, mx = 0.0;
    for (std::size_t i = 0; i < u.npoints(); ++i) {
        double m2 = 0.0;
        for (const auto& comp : phys) m2 += comp[i] * comp[i];
        const double m = std::sqrt(m2);
        acc += m * m * m;
        mx = std::max(mx, m);
    }
    const double h = u.grid().period / u.grid().n;
    return {std::cbrt(acc * h * h * h), mx};
}

}  // namespace detail

// Right-hand side of the mild formulation: du/dt = Laplace(u) + G(t, u).
using MildRhs = std::function<SpectralField(double, const SpectralField&)>;

// Advance the mild solution of u' = Laplace u + G(t,u) from u0 to t_end.
// picard_duhamel: per-step fixed-point iteration of the exponential-trapezoid
// Duhamel quadrature. integrating_factor_rk4: classical RK4 on the
// integrating-factor transform, exact heat factors at the stage times.
inline MildSolution run_mild_solver(const SpectralField& u0, const MildRhs& G,
                                    const SolverConfig& cfg) {
    cfg.validate();
    const PeriodicGrid& g = u0.grid();
    const DyadicWindow win = default_window(g);
    const double p = cfg.observable_p;
    const BesovSpec diag_spec = BesovSpec::critical(p, win);

    MildSolution sol;
    SpectralField u = u0;
    u.enforce_zero_mean();

    int nsteps = cfg.t_end > 0.0
        ? static_cast<int>(std::ceil(cfg.t_end / cfg.dt - 1e-12)) : 0;

    std::vector<double> snap_times;
    std::vector<SpectralField> snaps;
    auto take_snapshot = [&](double t, const SpectralField& f) {
        snap_times.push_back(t);
        snaps.push_back(f);
    };
    auto diag_row = [&](double t, const SpectralField& f, double res, int iters) {
        StepDiagnostics d;
        d.t = t;
        auto [l3, linf] = detail::l3_and_linf(f);
        d.l3 = l3;
        d.linf = linf;
        d.besov_sp = cfg.besov_diagnostics ? besov_norm(f, diag_spec) : 0.0;
        d.residual = res;
        d.iterations = iters;
        return d;
    };

    take_snapshot(0.0, u);
    sol.diagnostics.push_back(diag_row(0.0, u, 0.0, 0));
    sol.flag = LifespanFlag::completed;

    std::map<double, detail::HeatStepTables> table_cache;
    std::map<double, std::vector<double>> half_cache;
    auto tables_for = [&](double h) -> const detail::HeatStepTables& {
        auto it = table_cache.find(h);
        if (it == table_cache.end())
            it = table_cache.emplace(h, detail::make_heat_tables(g, h)).first;
        return it->second;
    };
    auto half_for = [&](double h) -> const std::vector<double>& {
        auto it = half_cache.find(h);
        if (it == half_cache.end())
            it = half_cache.emplace(h, detail::halfstep_decay(g, h)).first;
        return it->second;
    };

    double t = 0.0;
    for (int step = 0; step < nsteps; ++step) {
        double h = cfg.dt;
        if (step == nsteps - 1) h = cfg.t_end - t;  // land exactly on t_end
        double res = 0.0;
        int iters = 0;

        if (cfg.stepper == Stepper::picard_duhamel) {
            const auto& tab = tables_for(h);
            const SpectralField G0 = G(t, u);
            // base and predictor
            SpectralField base = detail::with_table(u, tab.decay);
            for (int c = 0; c < base.ncomp(); ++c)
                for (std::size_t i = 0; i < tab.phi2s.size(); ++i)
                    base.at(c, i) += h * tab.phi2s[i] * G0.at(c, i);
            SpectralField unew = base;
            for (int c = 0; c < unew.ncomp(); ++c)
                for (std::size_t i = 0; i < tab.phi1.size(); ++i)
                    unew.at(c, i) += h * (tab.phi1[i] - tab.phi2s[i]) * G0.at(c, i);
            bool converged = false;
            for (iters = 1; iters <= cfg.picard_max_iter; ++iters) {
                const SpectralField G1 = G(t + h, unew);
                SpectralField next = base;
                for (int c = 0; c < next.ncomp(); ++c)
                    for (std::size_t i = 0; i < tab.phi1.size(); ++i)
                        next.at(c, i) += h * (tab.phi1[i] - tab.phi2s[i]) * G1.at(c, i);
                const double scale = std::max(l2_norm(next), 1e-300);
                res = l2_distance(next, unew) / scale;
                unew = next;
                if (res <= cfg.picard_tol) {
                    converged = true;
                    break;
                }
            }
            if (!converged) {
                sol.flag = LifespanFlag::iteration_failure;
                sol.diagnostics.push_back(diag_row(t + h, unew, res, iters));
                take_snapshot(t + h, unew);
                t += h;
                break;
            }
            u = unew;
        } else {
            const auto& E = half_for(h);
            const auto& tabh = tables_for(h);
            const auto& E2 = tabh.decay;
            const SpectralField a = G(t, u);
            SpectralField ua = u;
            for (int c = 0; c < ua.ncomp(); ++c)
                for (std::size_t i = 0; i < E.size(); ++i)
                    ua.at(c, i) = E[i] * (u.at(c, i) + 0.5 * h * a.at(c, i));
            const SpectralField b = G(t + 0.5 * h, ua);
            SpectralField ub = detail::with_table(u, E);
            for (int c = 0; c < ub.ncomp(); ++c)
                for (std::size_t i = 0; i < E.size(); ++i)
                    ub.at(c, i) += 0.5 * h * b.at(c, i);
            const SpectralField cst = G(t + 0.5 * h, ub);
            SpectralField uc = detail::with_table(u, E2);
            for (int c = 0; c < uc.ncomp(); ++c)
                for (std::size_t i = 0; i < E.size(); ++i)
                    uc.at(c, i) += h * E[i] * cst.at(c, i);
            const SpectralField d = G(t + h, uc);
            SpectralField unew = detail::with_table(u, E2);
            for (int c = 0; c < unew.ncomp(); ++c)
                for (std::size_t i = 0; i < E.size(); ++i)
                    unew.at(c, i) += (h / 6.0) * (E2[i] * a.at(c, i) +
                                                  2.0 * E[i] * b.at(c, i) +
                                                  2.0 * E[i] * cst.at(c, i) +
                                                  d.at(c, i));
            u = unew;
            iters = 4;
        }

        t += h;
        const auto row = diag_row(t, u, res, iters);
        sol.diagnostics.push_back(row);
        const bool last = (step == nsteps - 1);
        const bool snap = (step + 1) % cfg.snapshot_stride == 0 || last;
        if (snap) take_snapshot(t, u);

        if (row.linf > cfg.linf_guard) {
            sol.flag = LifespanFlag::norm_blowup;
            if (!snap) take_snapshot(t, u);  // keep the stopped state
            break;
        }
    }

    sol.final_time = t;
    sol.trajectory = Trajectory(std::move(snap_times), std::move(snaps));
    return sol;
}

inline void require_admissible_data(const SpectralField& u0, const char* who) {
    if (u0.ncomp() != 3) throw std::invalid_argument(std::string(who) + ": needs 3 components");
    if (u0.mean_mode_abs() > 0.0)
        throw std::invalid_argument(std::string(who) + ": initial data must have zero mean");
    if (u0.divergence_defect() > 1e-10)
        throw std::invalid_argument(std::string(who) + ": initial data not divergence free");
}

// Unforced Navier-Stokes: u' = Laplace u - (1/2) Q(u,u).
inline MildSolution solve_ns(const SpectralField& u0, const SolverConfig& cfg) {
    require_admissible_data(u0, "solve_ns");
    MildRhs G = [](double, const SpectralField& u) {
        SpectralField q = nonlinear_Q(u, u);
        q *= -0.5;
        return q;
    };
    return run_mild_solver(u0, G, cfg);
}

// Picard iteration for the steady state: U <- lap^{-1}(P div(U (x) U)) - lap^{-1} P f,
// from U=0, until the L3 increment drops below tol. Fails (throws) when the
// increments are non-decreasing for 5 consecutive iterations, the signature
// of a force outside the contraction regime.
inline SpectralField solve_steady_state(const ForceSpec& f, double tol,
                                        int max_iter = 200) {
    const PeriodicGrid& g = f.potential.grid();
    const SpectralField pf = leray_project(f.force());
    SpectralField U(g, 3);
    U.divergence_free = true;
    if (f.is_zero()) return U;
    double prev_inc = kInf;
    int non_decreasing = 0;
    for (int k = 0; k < max_iter; ++k) {
        SpectralField rhs = nonlinear_Q(U, U);
        rhs *= 0.5;
        rhs -= pf;
        SpectralField Unext = leray_project(inverse_laplacian(rhs));
        SpectralField diff = Unext;
        diff -= U;
        const double inc = lp_norm(diff, 3.0);
        U = Unext;
        if (inc <= tol) return U;
        if (inc >= prev_inc) {
            if (++non_decreasing >= 5)
                throw std::runtime_error(
                    "solve_steady_state: contraction failure, force too large "
                    "(increment " + std::to_string(inc) + ")");
        } else {
            non_decreasing = 0;
        }
        prev_inc = inc;
    }
    throw std::runtime_error("solve_steady_state: no convergence within iteration budget");
}

// ||-Laplace U + P div(U (x) U) - P f||_2
inline double steady_state_residual(const SpectralField& U, const ForceSpec& f) {
    SpectralField r = laplacian(U);
    r *= -1.0;
    SpectralField q = nonlinear_Q(U, U);
    q *= 0.5;
    r += q;
    r -= leray_project(f.force());
    return l2_norm(r);
}

// Largest ||lap^{-1} f||_{L3} for which the steady Picard iteration still
// contracts, found by bisection on contraction failure over amplitude
// rescalings of the given force shape.
inline double find_steady_admissibility_threshold(const ForceSpec& shape, double tol,
                                                  int bisection_steps = 24) {
    if (shape.is_zero()) throw std::invalid_argument("threshold: zero force shape");
    auto converges = [&](double amp) {
        ForceSpec f = shape;
        f.potential *= amp;
        f.l3_size = shape.l3_size * amp;
        try {
            (void)solve_steady_state(f, tol);
            return true;
        } catch (const std::runtime_error&) {
            return false;
        }
    };
    double lo = 1.0, hi = 1.0;
    while (converges(hi)) hi *= 2.0;      // find a failing amplitude
    while (!converges(lo)) lo *= 0.5;     // and a converging one
    for (int i = 0; i < bisection_steps; ++i) {
        const double mid = 0.5 * (lo + hi);
        (converges(mid) ? lo : hi) = mid;
    }
    return shape.l3_size * lo;
}

// Forced Navier-Stokes: u' = Laplace u - (1/2)Q(u,u) + P f, with the
// constant force integrated exactly per mode by the stepper's phi1 factor.
// Records the blow-up-criterion observables: running sup of ||u(t)||_{L3}
// and ||u - U_f||_{L^{p:inf}_p(T)} against the steady state.
inline MildSolution solve_nsf(const SpectralField& u0, const ForceSpec& f,
                              const SolverConfig& cfg,
                              const SpectralField* steady = nullptr) {
    require_admissible_data(u0, "solve_nsf");
    const SpectralField pf = leray_project(f.force());
    MildRhs G = [&pf](double, const SpectralField& u) {
        SpectralField q = nonlinear_Q(u, u);
        q *= -0.5;
        q += pf;
        return q;
    };
    MildSolution sol = run_mild_solver(u0, G, cfg);

    double sup_l3 = 0.0;
    for (const auto& d : sol.diagnostics) sup_l3 = std::max(sup_l3, d.l3);
    sol.recorded_norms["sup_l3"] = sup_l3;

    std::optional<SpectralField> uf;
    if (steady) {
        uf = *steady;
    } else if (f.is_zero()) {
        uf = SpectralField(u0.grid(), 3);
    } else {
        try {
            uf = solve_steady_state(f, 1e-11);
        } catch (const std::runtime_error&) {
            sol.recorded_norms["steady_state_unavailable"] = 1.0;
        }
    }
    if (uf && sol.trajectory.size() >= 2) {
        const Trajectory diff = Trajectory::offset(sol.trajectory, *uf, -1.0);
        const double p = cfg.observable_p;
        sol.recorded_norms["uf_minus_Uf_mixed_p_inf"] =
            mixed_space_norm(diff, p, kInf, p, default_window(u0.grid()));
    }
    return sol;
}

// Mild solver for the perturbation system
//   w' - Laplace w + (1/2)Q(w,w) + Q(w,g(t)) + Q(w,U) = fext(t),
// with time-dependent drift g and source fext interpolated onto stage times.
inline MildSolution solve_perturbation(const SpectralField& w0, const Trajectory* drift,
                                       const SpectralField* U, const Trajectory* fext,
                                       const SolverConfig& cfg) {
    require_admissible_data(w0, "solve_perturbation");
    const bool has_U = U && U->max_abs_coeff() > 0.0;
    MildRhs G = [&, has_U](double t, const SpectralField& w) {
        SpectralField q = nonlinear_Q(w, w);
        q *= -0.5;
        if (drift) {
            SpectralField qd = nonlinear_Q(w, drift->interpolate(t));
            q -= qd;
        }
        if (has_U) {
            SpectralField qu = nonlinear_Q(w, *U);
            q -= qu;
        }
        if (fext) q += fext->interpolate(t);
        return q;
    };
    MildSolution sol = run_mild_solver(w0, G, cfg);
    const double p = cfg.observable_p;
    if (sol.trajectory.size() >= 2) {
        const DyadicWindow win = default_window(w0.grid());
        sol.recorded_norms["w_mixed_p_p"] =
            mixed_space_norm(sol.trajectory, p, p, p, win);
        sol.recorded_norms["w_mixed_p_inf"] =
            mixed_space_norm(sol.trajectory, p, kInf, p, win);
    }
    return sol;
}

// B(u,v)(t) = -int_0^t e^{(t-s)Laplace} P div( (u(x)v + v(x)u)/2 ) ds,
// marched per mesh subinterval with the same exponential-trapezoid weights
// as the stepper. Bilinear and bitwise symmetric (Q is).
inline SpectralField duhamel_B(const Trajectory& u, const Trajectory& v, double t) {
    Trajectory::require_same_mesh(u, v);
    if (t < u.t_begin() - 1e-12 || t > u.t_end() + 1e-12)
        throw std::invalid_argument("duhamel_B: mesh does not cover [0,t]");
    const PeriodicGrid& g = u.grid().n ? u.grid() : v.grid();
    SpectralField A(g, 3);
    A.divergence_free = true;
    if (t <= u.t_begin()) return A;

    std::map<double, detail::HeatStepTables> cache;
    auto tables_for = [&](double h) -> const detail::HeatStepTables& {
        auto it = cache.find(h);
        if (it == cache.end())
            it = cache.emplace(h, detail::make_heat_tables(g, h)).first;
        return it->second;
    };
    auto G_at = [&](std::size_t i) {
        SpectralField q = nonlinear_Q(u.field(i), v.field(i));
        q *= -0.5;
        return q;
    };

    SpectralField Gprev = G_at(0);
    double tprev = u.times()[0];
    for (std::size_t i = 1; i < u.size() && tprev < t - 1e-15; ++i) {
        const double tnext = std::min(u.times()[i], t);
        const double h = tnext - tprev;
        if (h <= 0.0) continue;
        SpectralField Gnext(g, 3);
        if (tnext == u.times()[i]) {
            Gnext = G_at(i);
        } else {
            SpectralField q = nonlinear_Q(u.interpolate(tnext), v.interpolate(tnext));
            q *= -0.5;
            Gnext = q;
        }
        const auto& tab = tables_for(h);
        detail::apply_table(A, tab.decay);
        for (int c = 0; c < 3; ++c)
            for (std::size_t m = 0; m < tab.phi1.size(); ++m)
                A.at(c, m) += h * (tab.phi2s[m] * Gprev.at(c, m) +
                                   (tab.phi1[m] - tab.phi2s[m]) * Gnext.at(c, m));
        Gprev = Gnext;
        tprev = tnext;
    }
    return A;
}

}  // namespace csns
