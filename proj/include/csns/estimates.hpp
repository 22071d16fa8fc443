#pragma once

#include <functional>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "csns/exponents.hpp"
#include "csns/profiles.hpp"
#include "csns/rng.hpp"
#include "csns/solver.hpp"

namespace csns {

// Measured-constant report for one inequality over one corpus.
struct EstimateReport {
    std::string inequality_id;
    std::map<std::string, double> exponent_params;
    double measured_constant = 0.0;  // max over corpus of LHS/RHS
    int corpus_size = 0;
    std::vector<int> resolutions;
    double stability_ratio = 1.0;  // max/min of the constant across resolutions
    std::vector<double> per_item_ratio;
};

// Trajectory-pair corpus: heat flows plus modulated flows of random
// band-limited fields and two-shell adversarial fields. Deterministic given
// the seed; regenerated per grid so resolution sweeps stay comparable.
struct CorpusConfig {
    int size = 30;
    unsigned long long seed = 20240901ull;
    double t_end = 1.0;
    int nt = 7;
    double amplitude = 1.0;
};

inline std::vector<Trajectory> make_trajectory_corpus(const PeriodicGrid& g,
                                                      const CorpusConfig& cc) {
    Rng rng(cc.seed);
    const int kmax = std::min(g.kmax_keep(), 8);
    std::vector<Trajectory> out;
    out.reserve(cc.size);
    for (int i = 0; i < cc.size; ++i) {
        SpectralField u;
        switch (i % 3) {
            case 0:
                u = random_divfree_field(g, rng, 1, kmax, -1.0, cc.amplitude);
                break;
            case 1:
                u = random_divfree_field(g, rng, 1, kmax, 0.5, cc.amplitude);
                break;
            default:
                u = two_shell_field(g, rng, 2, std::max(4, kmax - 1), cc.amplitude,
                                    0.3 * cc.amplitude);
        }
        out.push_back(i % 2 == 0 ? heat_flow_trajectory(u, cc.t_end, cc.nt)
                                 : modulated_trajectory(u, rng, cc.t_end, cc.nt));
    }
    return out;
}

inline std::vector<SpectralField> make_field_corpus(const PeriodicGrid& g,
                                                    const CorpusConfig& cc) {
    Rng rng(cc.seed);
    const int kmax = std::min(g.kmax_keep(), 8);
    std::vector<SpectralField> out;
    out.reserve(cc.size);
    for (int i = 0; i < cc.size; ++i) {
        if (i % 3 == 2)
            out.push_back(two_shell_field(g, rng, 2, std::max(4, kmax - 1), cc.amplitude,
                                          0.3 * cc.amplitude));
        else
            out.push_back(random_divfree_field(g, rng, 1, kmax, i % 3 == 0 ? -1.0 : 0.5,
                                               cc.amplitude));
    }
    return out;
}

namespace detail {

inline double ratio_max(std::vector<double>& ratios) {
    double m = 0.0;
    for (double r : ratios) m = std::max(m, r);
    return m;
}

// Product trajectory (v tensor w) on v's mesh.
inline Trajectory product_trajectory(const Trajectory& v, const Trajectory& w) {
    Trajectory::require_same_mesh(v, w);
    std::vector<SpectralField> prods;
    prods.reserve(v.size());
    for (std::size_t i = 0; i < v.size(); ++i)
        prods.push_back(tensor_product(v.field(i), w.field(i)));
    return Trajectory(v.times(), std::move(prods));
}

}  // namespace detail

// ||vw||_{CL^r B^{sp+2/r-1}_{p,p}} <= C ||v||_{CL^inf B^{sq+eps}_{q,q}} ||w||_{CL^r B^{sp+2/r-eps}_{p,p}}
inline EstimateReport verify_product_law_1(const std::vector<Trajectory>& corpus,
                                           double p, double q, double r, double eps) {
    if (!(p > 3.0 && q > 3.0 && r > 2.0))
        throw std::invalid_argument("product_law_1: needs p,q > 3 and r > 2");
    if (!(sp_exponent(q) + sp_exponent(p) + 2.0 / r > 0.0))
        throw std::invalid_argument("product_law_1: needs sq + sp + 2/r > 0");
    if (!(std::abs(eps) < 1.0 && 1.0 - 2.0 / r + eps > 0.0))
        throw std::invalid_argument("product_law_1: needs |eps| < 1 and 1 - 2/r + eps > 0");
    EstimateReport rep;
    rep.inequality_id = "product_law_1";
    rep.exponent_params = {{"p", p}, {"q", q}, {"r", r}, {"eps", eps}};
    const DyadicWindow win = default_window(corpus.front().grid());
    const BesovSpec lhs_spec{sp_exponent(p) + 2.0 / r - 1.0, p, p, win};
    const BesovSpec v_spec{sp_exponent(q) + eps, q, q, win};
    const BesovSpec w_spec{sp_exponent(p) + 2.0 / r - eps, p, p, win};
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        const Trajectory& v = corpus[i];
        const Trajectory& w = corpus[i + 1];
        const Trajectory vw = detail::product_trajectory(v, w);
        const double lhs = chemin_lerner_norm(vw, r, lhs_spec);
        const double rhs = chemin_lerner_norm(v, kInf, v_spec) *
                           chemin_lerner_norm(w, r, w_spec);
        if (rhs > 0.0) rep.per_item_ratio.push_back(lhs / rhs);
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// ||vw||_{CL^{r/2} B^{sp+4/r-1}_{p,p}} <= C ||v||_{CL^r B^{sp+2/r+eps}} ||w||_{CL^r B^{sp+2/r-eps}}
inline EstimateReport verify_product_law_2(const std::vector<Trajectory>& corpus,
                                           double p, double r, double eps) {
    if (!(p > 3.0 && 2.0 < r && r < 2.0 * p / (p - 3.0)))
        throw std::invalid_argument("product_law_2: needs p > 3 and 2 < r < 2p/(p-3)");
    if (!(1.0 - 2.0 / r - std::abs(eps) > 0.0))
        throw std::invalid_argument("product_law_2: needs 1 - 2/r - |eps| > 0");
    EstimateReport rep;
    rep.inequality_id = "product_law_2";
    rep.exponent_params = {{"p", p}, {"r", r}, {"eps", eps}};
    const DyadicWindow win = default_window(corpus.front().grid());
    const BesovSpec lhs_spec{sp_exponent(p) + 4.0 / r - 1.0, p, p, win};
    const BesovSpec v_spec{sp_exponent(p) + 2.0 / r + eps, p, p, win};
    const BesovSpec w_spec{sp_exponent(p) + 2.0 / r - eps, p, p, win};
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        const Trajectory vw = detail::product_trajectory(corpus[i], corpus[i + 1]);
        const double lhs = chemin_lerner_norm(vw, r / 2.0, lhs_spec);
        const double rhs = chemin_lerner_norm(corpus[i], r, v_spec) *
                           chemin_lerner_norm(corpus[i + 1], r, w_spec);
        if (rhs > 0.0) rep.per_item_ratio.push_back(lhs / rhs);
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// ||vw||_{CL^{r/2} B^{sp+4/r-1}_{p,p}} <= C ||v||_{L^{r:inf}_{p1}} ||w||_{L^{r:inf}_{p2}},
// 1/p = 1/p1 + 1/p2.
inline EstimateReport verify_product_law_3(const std::vector<Trajectory>& corpus,
                                           double p1, double p2, double r) {
    const double p = 1.0 / (1.0 / p1 + 1.0 / p2);
    if (!(p1 > 3.0 && p2 > 3.0))
        throw std::invalid_argument("product_law_3: needs p1,p2 in (3,inf)");
    if (!(2.0 < r && r < 2.0 * p / (p - 3.0)))
        throw std::invalid_argument("product_law_3: needs 2 < r < 2p/(p-3)");
    EstimateReport rep;
    rep.inequality_id = "product_law_3";
    rep.exponent_params = {{"p1", p1}, {"p2", p2}, {"p", p}, {"r", r}};
    const DyadicWindow win = default_window(corpus.front().grid());
    const BesovSpec lhs_spec{sp_exponent(p) + 4.0 / r - 1.0, p, p, win};
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        const Trajectory& v = corpus[i];
        const Trajectory& w = corpus[i + 1];
        const Trajectory vw = detail::product_trajectory(v, w);
        const double lhs = chemin_lerner_norm(vw, r / 2.0, lhs_spec);
        const double rhs = mixed_space_norm(v, r, kInf, p1, win) *
                           mixed_space_norm(w, r, kInf, p2, win);
        if (rhs > 0.0) rep.per_item_ratio.push_back(lhs / rhs);
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// ||vw||_{CL^{r0} B^{s_pbar+2/r0-1}_{pbar,pbar}} <= C(p) ||w||_{L^inf L^3} ||v||_{CL^{r0} B^{sp+2/r0}_{p,p}}
// with r0 = 2p/(p-1) and 1/pbar = 1/3 + 1/(6p). The proof's exponent
// identities are checked exactly in rational arithmetic elsewhere.
inline EstimateReport verify_product_law_4(const std::vector<Trajectory>& corpus,
                                           double p) {
    if (!(p > 3.0)) throw std::invalid_argument("product_law_4: needs p > 3");
    const double r0 = 2.0 * p / (p - 1.0);
    const double pbar = 1.0 / (1.0 / 3.0 + 1.0 / (6.0 * p));
    EstimateReport rep;
    rep.inequality_id = "product_law_4";
    rep.exponent_params = {{"p", p}, {"r0", r0}, {"pbar", pbar}};
    const DyadicWindow win = default_window(corpus.front().grid());
    const BesovSpec lhs_spec{sp_exponent(pbar) + 2.0 / r0 - 1.0, pbar, pbar, win};
    const BesovSpec v_spec{sp_exponent(p) + 2.0 / r0, p, p, win};
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        const Trajectory& v = corpus[i];
        const Trajectory& w = corpus[i + 1];
        const Trajectory vw = detail::product_trajectory(v, w);
        const double lhs = chemin_lerner_norm(vw, r0, lhs_spec);
        double w_linf_l3 = 0.0;
        for (std::size_t s = 0; s < w.size(); ++s)
            w_linf_l3 = std::max(w_linf_l3, lp_norm(w.field(s), 3.0));
        const double rhs = w_linf_l3 * chemin_lerner_norm(v, r0, v_spec);
        if (rhs > 0.0) rep.per_item_ratio.push_back(lhs / rhs);
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// ||Delta_j e^{tL} f||_{L^p} / (e^{-t 4^j} ||Delta_j f||_{L^p}); the decay
// rate uses c = 1, justified by the block support |xi| > 2^j. The max ratio
// over (field, j, t) is the measured c0; at p = 2 it cannot exceed 1.
inline EstimateReport verify_heat_block_decay(const std::vector<SpectralField>& corpus,
                                              double p, const std::vector<double>& t_grid) {
    EstimateReport rep;
    rep.inequality_id = "heat_block_decay";
    rep.exponent_params = {{"p", p}};
    const DyadicWindow win = default_window(corpus.front().grid());
    for (const auto& f : corpus) {
        for (int j = win.j_min; j <= win.j_max; ++j) {
            const SpectralField bf = dyadic_block(f, j, win);
            const double base = lp_norm(bf, p);
            if (base == 0.0) continue;
            for (double t : t_grid) {
                if (t < 0.0) throw std::invalid_argument("heat_block_decay: t >= 0");
                const double num = lp_norm(heat_semigroup(bf, t), p);
                const double den = std::exp(-t * std::pow(4.0, j)) * base;
                rep.per_item_ratio.push_back(num / den);
            }
        }
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// ||B(u,v)||_{CL^{rt} B^{s+2+2(1/rt-1/r)}_{p,p}} <= C ||u (x) v||_{CL^r B^{s+1}_{p,p}}
inline EstimateReport verify_duhamel_smoothing(const std::vector<Trajectory>& corpus,
                                               double r, double rt, double p, double s) {
    if (rt < r) throw std::invalid_argument("duhamel_smoothing: needs rt >= r");
    EstimateReport rep;
    rep.inequality_id = "duhamel_smoothing";
    rep.exponent_params = {{"r", r}, {"rt", rt}, {"p", p}, {"s", s}};
    const DyadicWindow win = default_window(corpus.front().grid());
    const BesovSpec lhs_spec{s + 2.0 + 2.0 * (1.0 / rt - 1.0 / r), p, p, win};
    const BesovSpec rhs_spec{s + 1.0, p, p, win};
    for (std::size_t i = 0; i + 1 < corpus.size(); i += 2) {
        const Trajectory& u = corpus[i];
        const Trajectory& v = corpus[i + 1];
        std::vector<SpectralField> bvals;
        bvals.reserve(u.size());
        for (std::size_t k = 0; k < u.size(); ++k)
            bvals.push_back(duhamel_B(u, v, u.times()[k]));
        const Trajectory btraj(u.times(), std::move(bvals));
        const double lhs = chemin_lerner_norm(btraj, rt, lhs_spec);
        const double rhs = chemin_lerner_norm(detail::product_trajectory(u, v), r, rhs_spec);
        if (rhs > 0.0) rep.per_item_ratio.push_back(lhs / rhs);
    }
    rep.corpus_size = static_cast<int>(rep.per_item_ratio.size());
    rep.measured_constant = detail::ratio_max(rep.per_item_ratio);
    return rep;
}

// One perturbation run together with everything the a-priori estimate needs.
struct PerturbationProbe {
    MildSolution run;
    SpectralField w0;
    Trajectory g;        // drift
    SpectralField U;     // static drift
    Trajectory fext;     // source
    double c1 = 0.0;     // measured ||Q(.,U)|| operator bound
};

// Smallest K for which
//   ||w||_{L^{p:inf}_p([a,b])} <= K( ||w(a)||_{B^{sp}_{p,p}} + ||f||_{F([a,b])}
//        + ||w||^2_{CL^p B^{sp+2/p}([a,b])} + (c1 + ||g||)(||w||_{CL^p}) )
// holds across the corpus and all sampled subintervals. Trivial (all-zero)
// rows are excluded by the zero filter.
inline double measure_K(const std::vector<PerturbationProbe>& probes, double p,
                        int interval_subdivisions = 3) {
    if (probes.empty()) throw std::invalid_argument("measure_K: empty corpus");
    double K = 0.0;
    for (const auto& pr : probes) {
        const Trajectory& w = pr.run.trajectory;
        const DyadicWindow win = default_window(w.grid());
        const double sp = sp_exponent(p);
        const BesovSpec crit{sp, p, p, win};
        const BesovSpec drift_spec{sp + 2.0 / p, p, p, win};
        const double T0 = w.t_begin(), T1 = w.t_end();
        std::vector<std::pair<double, double>> intervals;
        for (int a = 0; a <= interval_subdivisions; ++a)
            for (int b = a + 1; b <= interval_subdivisions; ++b)
                intervals.push_back({T0 + (T1 - T0) * a / interval_subdivisions,
                                     T0 + (T1 - T0) * b / interval_subdivisions});
        for (auto [alpha, beta] : intervals) {
            const double lhs = mixed_space_norm(w, p, kInf, p, win, alpha, beta);
            const double w_alpha = besov_norm(w.interpolate(alpha), crit);
            const double f_term = forcing_space_norm(pr.fext, p, win, alpha, beta);
            const double w_cl = chemin_lerner_norm(w, p, drift_spec, alpha, beta);
            const double g_cl = chemin_lerner_norm(pr.g, p, drift_spec, alpha, beta);
            const double rhs0 = w_alpha + f_term + w_cl * w_cl + (pr.c1 + g_cl) * w_cl;
            if (rhs0 < 1e-14 || lhs < 1e-300) continue;  // zero filter
            K = std::max(K, lhs / rhs0);
        }
    }
    return K;
}

struct PerturbationBoundReport {
    double K = 0.0;
    int N = 0;                    // breakpoint count of the drift split
    double gate_small = 0.0;      // 1/(8 K N (4K)^N)
    double gate_exp_form = 0.0;   // eps0 exp(-C ||g||), logged alongside
    bool gate_met = false;
    double data_size = 0.0;       // ||w0|| + ||f||_F
    double bound = 0.0;           // N (4K)^N (||w0|| + ||f||_F)
    double measured = 0.0;        // ||w||_{L^p_p(T)}
    double slack = 0.0;
    double drift_norm = 0.0;
    std::vector<double> piece_norms;
};

inline PerturbationBoundReport verify_perturbation_bound(const PerturbationProbe& pr,
                                                         double p, double K) {
    if (pr.run.flag != LifespanFlag::completed)
        throw std::invalid_argument("verify_perturbation_bound: run not completed");
    PerturbationBoundReport rep;
    rep.K = K;
    const DyadicWindow win = default_window(pr.run.trajectory.grid());
    const double theta = 1.0 / (4.0 * K);
    const SplitSchedule sch = split_intervals(pr.g, p, theta, &win);
    rep.N = sch.point_count();
    rep.piece_norms = sch.measured_piece_norms;
    const double fourKN = std::pow(4.0 * K, rep.N);
    rep.gate_small = 1.0 / (8.0 * K * rep.N * fourKN);
    const BesovSpec crit = BesovSpec::critical(p, win);
    const BesovSpec drift_spec{sp_exponent(p) + 2.0 / p, p, p, win};
    rep.drift_norm = chemin_lerner_norm(pr.g, p, drift_spec);
    // informational exponential form: eps0 = the two-piece baseline gate,
    // rate = ln(4K)/theta (piece count grows like ||g||/theta)
    const double eps0 = 1.0 / (16.0 * K * std::pow(4.0 * K, 2.0));
    rep.gate_exp_form = eps0 * std::exp(-(std::log(4.0 * K) / theta) * rep.drift_norm);
    rep.data_size = besov_norm(pr.w0, crit) + forcing_space_norm(pr.fext, p, win);
    rep.gate_met = rep.data_size <= rep.gate_small;
    rep.bound = rep.N * fourKN * rep.data_size;
    rep.measured = mixed_space_norm(pr.run.trajectory, p, p, p, win);
    rep.slack = rep.bound - rep.measured;
    return rep;
}

// Run an estimate over several resolutions and fold the per-resolution
// constants into one report with the max/min stability ratio.
inline EstimateReport stability_sweep(
    const std::vector<int>& resolutions, double period,
    const std::function<EstimateReport(const PeriodicGrid&)>& run_at) {
    std::vector<EstimateReport> reps;
    for (int n : resolutions) reps.push_back(run_at(make_grid(n, period)));
    EstimateReport out = reps.back();
    double lo = kInf, hi = 0.0;
    for (const auto& r : reps) {
        lo = std::min(lo, r.measured_constant);
        hi = std::max(hi, r.measured_constant);
    }
    out.resolutions = resolutions;
    out.stability_ratio = lo > 0.0 ? hi / lo : kInf;
    out.measured_constant = hi;
    return out;
}

}  // namespace csns
