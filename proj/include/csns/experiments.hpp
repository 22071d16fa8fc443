#pragma once

#include <algorithm>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include "csns/estimates.hpp"
#include "csns/profiles.hpp"

namespace csns {

// Deviation of ||u_{0,lambda}||_{L3} from its exact torus covariance
// 2^m ||u0||_{L3} (lambda = 2^{-m}); the box does not rescale, so the
// critical norms transform by this exact factor instead of staying fixed,
// and the check must sit at roundoff once the factor is divided out.
inline double norm_scaling_identity_check(const SpectralField& u0, int m) {
    const double base = lp_norm(u0, 3.0);
    if (base == 0.0) return 0.0;
    const SpectralField v = scale_l3_invariant_rescale(u0, m);
    return std::abs(std::ldexp(lp_norm(v, 3.0), -m) / base - 1.0);
}

struct LambdaRung {
    int m = 0;
    double lambda = 1.0;
    double source_norm = 0.0;       // ||Q(u_l, U_f)||_{CL^p B^{sp+2/p-2}}
    double source_f_norm = 0.0;     // same source in the F norm (gate side)
    double u_lambda_norm = 0.0;     // ||u_l||_{CL^p B^{sp+2/p}}
    double gate_small = 0.0;        // 1/(8 K N (4K)^N) from the actual split
    double gate_exp_form = 0.0;     // eps0 exp(-C ||u_l||), logged alongside
    int split_N = 0;
    bool gate_met = false;
    LifespanFlag u_lambda_flag = LifespanFlag::completed;
    LifespanFlag r_lambda_flag = LifespanFlag::completed;
    double r_norm_mixed_p_inf = 0.0;
    bool nsf_ran = false;
    LifespanFlag nsf_flag = LifespanFlag::completed;
    double nsf_sup_l3 = 0.0;
};

struct LambdaScanResult {
    std::vector<LambdaRung> rungs;
    double fitted_source_decay_exponent = 0.0;  // log2 slope of source_norm vs m
    bool ladder_truncated = false;              // grid exhausted before m_max
    int first_gate_rung = -1;
};

// Dyadic ladder u_{0,lambda} = lambda^{-1} u0(./lambda), lambda = 2^{-m}:
// solve the unforced flow of the rescaled data, measure the cross-source
// Q(u_lambda, U_f), check the smallness gate, and run the remainder system
//   r' - lap r + (1/2)Q(r,r) + Q(r, u_lambda + U_f) = -Q(u_lambda, U_f), r(0)=0.
// K is the measured a-priori constant feeding the gate.
inline LambdaScanResult lambda_scan(const SpectralField& u0, const ForceSpec& f,
                                    int m_max, double p, const SolverConfig& cfg,
                                    double K, bool run_nsf_at_gate = true) {
    LambdaScanResult out;
    const PeriodicGrid& g = u0.grid();
    const DyadicWindow win = default_window(g);
    const double sp = sp_exponent(p);
    const BesovSpec src_spec{sp + 2.0 / p - 2.0, p, p, win};
    const BesovSpec drift_spec{sp + 2.0 / p, p, p, win};

    const SpectralField U_f =
        f.is_zero() ? SpectralField(g, 3) : solve_steady_state(f, 1e-11);
    const double theta = 1.0 / (4.0 * K);
    const double eps0 = 1.0 / (16.0 * K * std::pow(4.0 * K, 2.0));
    const double exp_rate = std::log(4.0 * K) / theta;

    // One base solve; each rung's flow is its exact rescaling (the dilation
    // maps solutions to solutions bit-for-bit, stepper included), which also
    // refines the time mesh by 4^{-m} so the compressed transients stay
    // resolved. A fixed-step re-solve per rung would alias them.
    const MildSolution base = solve_ns(u0, cfg);

    for (int m = 0; m <= m_max; ++m) {
        LambdaRung rung;
        rung.m = m;
        rung.lambda = std::ldexp(1.0, -m);
        try {
            (void)scale_l3_invariant_rescale(u0, m);
        } catch (const std::invalid_argument&) {
            out.ladder_truncated = true;
            break;
        }
        rung.u_lambda_flag = base.flag;
        Trajectory ut = apply_lambda(base.trajectory, ScaleCore{m, {0, 0, 0}},
                                     /*allow_truncation=*/true);
        if (m > 0) {
            // diffusion-dominated tail: extend the compressed window back to
            // the full horizon with the exact heat flow of the last state
            // (the nonlinearity there is quadratically negligible)
            std::vector<double> times(ut.times());
            std::vector<SpectralField> fields;
            for (std::size_t i = 0; i < ut.size(); ++i) fields.push_back(ut.field(i));
            const double Tm = ut.t_end();
            const SpectralField last = ut.field(ut.size() - 1);
            for (double t = 2.0 * Tm; t < cfg.t_end * (1.0 - 1e-12); t *= 2.0) {
                times.push_back(t);
                fields.push_back(heat_semigroup(last, t - Tm));
            }
            times.push_back(cfg.t_end);
            fields.push_back(heat_semigroup(last, cfg.t_end - Tm));
            ut = Trajectory(std::move(times), std::move(fields));
        }

        std::vector<SpectralField> src;
        src.reserve(ut.size());
        for (std::size_t i = 0; i < ut.size(); ++i)
            src.push_back(nonlinear_Q(ut.field(i), U_f));
        Trajectory src_traj(ut.times(), std::move(src));
        rung.source_norm = chemin_lerner_norm(src_traj, p, src_spec);
        rung.source_f_norm = forcing_space_norm(src_traj, p, win);
        rung.u_lambda_norm = chemin_lerner_norm(ut, p, drift_spec);

        // the smallness gate needs a theta-split of the drift; when the mesh
        // cannot resolve one (diffusive drifts are front-loaded in time) the
        // gate is reported uncertified rather than failing the scan
        const Trajectory drift = Trajectory::offset(ut, U_f, +1.0);
        try {
            const SplitSchedule sch = split_intervals(drift, p, theta, &win);
            rung.split_N = sch.point_count();
            rung.gate_small =
                1.0 / (8.0 * K * rung.split_N * std::pow(4.0 * K, rung.split_N));
        } catch (const std::runtime_error&) {
            rung.split_N = 0;
            rung.gate_small = 0.0;
        }
        rung.gate_exp_form = eps0 * std::exp(-exp_rate * rung.u_lambda_norm);
        rung.gate_met = rung.source_f_norm <= rung.gate_small ||
                        rung.source_f_norm == 0.0;

        // remainder system: drift g = u_lambda (time dependent) + U_f (static),
        // solved on the rung's compressed window with a matched step so the
        // fast source transient is resolved
        Trajectory neg_src = src_traj;
        {
            std::vector<SpectralField> ns;
            ns.reserve(src_traj.size());
            for (std::size_t i = 0; i < src_traj.size(); ++i) {
                SpectralField v = src_traj.field(i);
                v *= -1.0;
                ns.push_back(std::move(v));
            }
            neg_src = Trajectory(src_traj.times(), std::move(ns));
        }
        SpectralField w0(g, 3);
        w0.divergence_free = true;
        SolverConfig pcfg = cfg;
        pcfg.observable_p = p;
        pcfg.dt = std::ldexp(cfg.dt, -2 * m);
        pcfg.t_end = std::ldexp(cfg.t_end, -2 * m);
        MildSolution r = solve_perturbation(w0, &ut, &U_f, &neg_src, pcfg);
        rung.r_lambda_flag = r.flag;
        if (auto it = r.recorded_norms.find("w_mixed_p_inf"); it != r.recorded_norms.end())
            rung.r_norm_mixed_p_inf = it->second;

        if (run_nsf_at_gate && rung.gate_met && out.first_gate_rung < 0) {
            out.first_gate_rung = m;
            MildSolution uf = solve_nsf(scale_l3_invariant_rescale(u0, m), f, cfg, &U_f);
            rung.nsf_ran = true;
            rung.nsf_flag = uf.flag;
            rung.nsf_sup_l3 = uf.recorded_norms.count("sup_l3")
                                  ? uf.recorded_norms.at("sup_l3") : 0.0;
        }
        out.rungs.push_back(std::move(rung));
    }
    std::vector<double> src_vals;
    for (const auto& r : out.rungs) src_vals.push_back(r.source_norm);
    out.fitted_source_decay_exponent = fitted_decay_exponent(src_vals);
    return out;
}

// Observables of the blow-up criterion: the running sup of ||u(t)||_{L3}
// and the running ||u - U_f||_{CL^r([0,t], B^{sp+2/r}_{p,p})}; flags report
// monotone growth and the Cauchy tail, never a blow-up claim.
struct BlowupObservables {
    std::vector<double> times;
    std::vector<double> l3_series;
    std::vector<double> running_diff_norm;
    bool l3_monotone_growth = false;
    bool diff_monotone_growth = false;
    double cauchy_tail = 0.0;  // |N(T) - N(T/2)| of the running diff norm
    bool guard_stop = false;
    double final_l3 = 0.0;
    double final_diff_norm = 0.0;
};

inline BlowupObservables blowup_observables(const MildSolution& run, const ForceSpec& f,
                                            double p, double r,
                                            const SpectralField* steady = nullptr) {
    if (!(p > 3.0) || !(2.0 < r && r < 2.0 * p / (p - 3.0)))
        throw std::invalid_argument("blowup_observables: need p > 3 and 2 < r < 2p/(p-3)");
    if (run.trajectory.size() < 2)
        throw std::invalid_argument("blowup_observables: need >= 2 snapshots");
    const PeriodicGrid& g = run.trajectory.grid();
    SpectralField U_f =
        steady ? *steady
               : (f.is_zero() ? SpectralField(g, 3) : solve_steady_state(f, 1e-11));
    const DyadicWindow win = default_window(g);
    const BesovSpec spec{sp_exponent(p) + 2.0 / r, p, p, win};
    const Trajectory diff = Trajectory::offset(run.trajectory, U_f, -1.0);

    BlowupObservables obs;
    obs.times = run.trajectory.times();
    for (std::size_t i = 0; i < run.trajectory.size(); ++i)
        obs.l3_series.push_back(lp_norm(run.trajectory.field(i), 3.0));
    for (std::size_t i = 0; i < diff.size(); ++i)
        obs.running_diff_norm.push_back(
            i == 0 ? 0.0
                   : chemin_lerner_norm(diff, r, spec, diff.t_begin(), diff.times()[i]));

    auto monotone_up = [](const std::vector<double>& v) {
        if (v.size() < 3) return false;
        for (std::size_t i = v.size() / 2; i + 1 < v.size(); ++i)
            if (v[i + 1] < v[i]) return false;
        return v.back() > v[v.size() / 2];
    };
    obs.l3_monotone_growth = monotone_up(obs.l3_series);
    obs.diff_monotone_growth = monotone_up(obs.running_diff_norm);
    const double half = chemin_lerner_norm(diff, r, spec, diff.t_begin(),
                                           0.5 * (diff.t_begin() + diff.t_end()));
    obs.final_diff_norm = obs.running_diff_norm.back();
    obs.cauchy_tail = std::abs(obs.final_diff_norm - half);
    obs.guard_stop = run.flag == LifespanFlag::norm_blowup;
    obs.final_l3 = obs.l3_series.back();
    return obs;
}

// Everything the profile-decomposition-of-solutions experiment reports for
// one (J, n) pair, all norms over [0, tau_n] in the lab frame (the critical
// norms are exact isometries of the rescaled frame).
struct DecompositionEntry {
    int J = 0;
    int n = 0;
    double tau_n = 0.0;
    double w_norm_mixed_1_inf = 0.0;
    double r_norm_mixed_p_inf = 0.0;
    double G_drift_norm = 0.0;
    double F_source_norm = 0.0;
    double r_bound = 0.0;   // N (4K)^N ||F||_F with the measured K
    int split_N = 0;
};

struct DecompositionOfSolutionsReport {
    std::vector<DecompositionEntry> entries;
    std::vector<double> tau_n;                 // per n
    std::vector<std::vector<int>> reorder;     // per n, profile order by l^2 T*
    std::vector<double> lifespan_proxy;        // per profile
    bool reorder_stable = true;
    std::vector<std::string> failures;
};

// Planted two-scale experiment around the solution decomposition
//   u_n = sum_j Lambda_{j,n} U^j + w^J_n + r^J_n,
// with U^{j0} the forced profile flow and U^j the unforced ones, the
// remainder heat flow w^J_n = e^{tL} psi^J_n, and the drift/source terms of
// the rescaled remainder system. Per-profile flows are re-solved on meshes
// matched to each u_n so sample times align exactly after rescaling.
inline DecompositionOfSolutionsReport decomposition_of_solutions(
    const ProfileSet& planted, const ForceSpec& f, std::size_t j0, double p,
    const SolverConfig& cfg, double K, double orthogonality_threshold = 4.0) {
    const PeriodicGrid& g = planted.profiles.front().grid();
    planted.validate(orthogonality_threshold, g.period);
    if (j0 >= planted.profile_count())
        throw std::invalid_argument("decomposition_of_solutions: j0 out of range");
    for (const auto& sc : planted.cores[j0])
        if (!sc.is_identity())
            throw std::invalid_argument(
                "decomposition_of_solutions: profile j0 must carry the identity frame");

    DecompositionOfSolutionsReport rep;
    const DyadicWindow win = default_window(g);
    const double sp = sp_exponent(p);
    const BesovSpec drift_spec{sp + 2.0 / p, p, p, win};
    const std::size_t Jtot = planted.profile_count();
    const std::size_t n_seq = planted.sequence_length();

    const SpectralField U_f =
        f.is_zero() ? SpectralField(g, 3) : solve_steady_state(f, 1e-11);

    // lifespan proxies on the base mesh
    rep.lifespan_proxy.resize(Jtot);
    for (std::size_t j = 0; j < Jtot; ++j) {
        MildSolution s = (j == j0) ? solve_nsf(planted.profiles[j], f, cfg, &U_f)
                                   : solve_ns(planted.profiles[j], cfg);
        rep.lifespan_proxy[j] = s.final_time;
        if (s.flag == LifespanFlag::iteration_failure)
            rep.failures.push_back("profile " + std::to_string(j) + " iteration failure");
    }

    // tau_n = min_j lambda_{j,n}^2 T*_j (exact power-of-two scalings) and the
    // reordering permutation per n
    for (std::size_t n = 0; n < n_seq; ++n) {
        std::vector<double> scaled(Jtot);
        for (std::size_t j = 0; j < Jtot; ++j)
            scaled[j] = std::ldexp(rep.lifespan_proxy[j], -2 * planted.cores[j][n].m);
        rep.tau_n.push_back(*std::min_element(scaled.begin(), scaled.end()));
        std::vector<int> order(Jtot);
        std::iota(order.begin(), order.end(), 0);
        std::stable_sort(order.begin(), order.end(),
                         [&](int a, int b) { return scaled[a] < scaled[b]; });
        rep.reorder.push_back(order);
        if (n > 0 && rep.reorder[n] != rep.reorder[0]) rep.reorder_stable = false;
    }

    for (std::size_t n = 0; n < n_seq; ++n) {
        int m_max = 0;
        for (std::size_t j = 0; j < Jtot; ++j)
            m_max = std::max(m_max, planted.cores[j][n].m);
        const double tau = rep.tau_n[n];

        SolverConfig ncfg = cfg;
        ncfg.dt = std::ldexp(cfg.dt, -2 * m_max);
        ncfg.t_end = tau;
        ncfg.observable_p = p;

        SpectralField u0n;
        try {
            u0n = synthesize(planted, n);
        } catch (const std::invalid_argument& e) {
            rep.failures.push_back(std::string("synthesize n=") + std::to_string(n) +
                                   ": " + e.what());
            continue;
        }
        MildSolution un = solve_nsf(u0n, f, ncfg, &U_f);
        if (un.flag != LifespanFlag::completed) {
            rep.failures.push_back("u_n solve incomplete at n=" + std::to_string(n));
            continue;
        }

        // per-profile flows on meshes matched to u_n, then rescaled
        std::vector<Trajectory> lam_Uj;
        bool ok = true;
        for (std::size_t j = 0; j < Jtot; ++j) {
            const int mj = planted.cores[j][n].m;
            SolverConfig jcfg = cfg;
            jcfg.dt = std::ldexp(ncfg.dt, 2 * mj);
            jcfg.t_end = std::ldexp(tau, 2 * mj);
            jcfg.observable_p = p;
            MildSolution sj = (j == j0) ? solve_nsf(planted.profiles[j], f, jcfg, &U_f)
                                        : solve_ns(planted.profiles[j], jcfg);
            if (sj.flag != LifespanFlag::completed) {
                rep.failures.push_back("profile flow " + std::to_string(j) +
                                       " incomplete at n=" + std::to_string(n));
                ok = false;
                break;
            }
            lam_Uj.push_back(apply_lambda(sj.trajectory, planted.cores[j][n]));
        }
        if (!ok) continue;

        // V^{j0} = U^{j0} - U_f in its own frame (identity frame expected)
        const Trajectory V_j0 = Trajectory::offset(lam_Uj[j0], U_f, -1.0);

        // J-truncation follows the reordered profile list; the tail
        // psi^J_n = sum over dropped profiles of Lambda phi_j + psi_n
        const std::vector<int>& ord = rep.reorder[n];
        for (std::size_t J = 1; J <= Jtot; ++J) {
            DecompositionEntry e;
            e.J = static_cast<int>(J);
            e.n = static_cast<int>(n);
            e.tau_n = tau;

            std::vector<int> kept(ord.begin(), ord.begin() + J);
            bool j0_kept = false;
            for (int j : kept) j0_kept = j0_kept || (static_cast<std::size_t>(j) == j0);

            SpectralField psi(g, 3);
            for (std::size_t jj = J; jj < Jtot; ++jj)
                psi += apply_lambda(planted.profiles[ord[jj]], planted.cores[ord[jj]][n]);
            if (!planted.remainders.empty()) psi += planted.remainders[n];

            const auto& times = un.trajectory.times();
            std::vector<SpectralField> wf, rf, Gf, Ff;
            wf.reserve(times.size());
            for (std::size_t i = 0; i < times.size(); ++i) {
                SpectralField w = heat_semigroup(psi, times[i]);
                SpectralField r = un.trajectory.field(i);
                for (int j : kept) r -= lam_Uj[j].interpolate(times[i]);
                r -= w;

                SpectralField G(g, 3);
                for (int j : kept) {
                    if (static_cast<std::size_t>(j) == j0) continue;
                    G += lam_Uj[j].interpolate(times[i]);
                }
                G += w;
                if (j0_kept) G += V_j0.interpolate(times[i]);

                SpectralField F = nonlinear_Q(w, w);
                F *= -0.5;
                for (std::size_t a = 0; a < kept.size(); ++a) {
                    const SpectralField Uj = lam_Uj[kept[a]].interpolate(times[i]);
                    for (std::size_t b = a + 1; b < kept.size(); ++b) {
                        SpectralField cross =
                            nonlinear_Q(Uj, lam_Uj[kept[b]].interpolate(times[i]));
                        cross *= -1.0;  // -1/2 over ordered pairs = -1 per unordered pair
                        F += cross;
                    }
                    SpectralField qw = nonlinear_Q(Uj, w);
                    F -= qw;
                }
                wf.push_back(std::move(w));
                rf.push_back(std::move(r));
                Gf.push_back(std::move(G));
                Ff.push_back(std::move(F));
            }
            const Trajectory wt(times, std::move(wf));
            const Trajectory rt(times, std::move(rf));
            const Trajectory Gt(times, std::move(Gf));
            const Trajectory Ft(times, std::move(Ff));
            e.w_norm_mixed_1_inf = mixed_space_norm(wt, 1.0, kInf, p, win);
            e.r_norm_mixed_p_inf = mixed_space_norm(rt, p, kInf, p, win);
            e.G_drift_norm = chemin_lerner_norm(Gt, p, drift_spec);
            e.F_source_norm = forcing_space_norm(Ft, p, win);
            const SplitSchedule sch = split_intervals(Gt, p, 1.0 / (4.0 * K), &win);
            e.split_N = sch.point_count();
            e.r_bound = e.split_N * std::pow(4.0 * K, e.split_N) * e.F_source_norm;
            rep.entries.push_back(std::move(e));
        }
    }
    return rep;
}

}  // namespace csns
