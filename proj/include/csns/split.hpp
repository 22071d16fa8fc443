#pragma once

#include <vector>

#include "csns/solver.hpp"

namespace csns {

// Greedy interval splitting of [0,T]: each piece carries a Chemin-Lerner
// drift norm at most theta, interior breakpoints found by bisection to
// within one time sample.
struct SplitSchedule {
    std::vector<double> breakpoints;          // T_1 = 0 < ... < T_N = T
    double threshold = 0.0;                   // theta
    std::vector<double> measured_piece_norms; // per piece, all <= theta
    bool final_piece_partial = false;         // last piece did not saturate theta

    int piece_count() const { return static_cast<int>(breakpoints.size()) - 1; }
    int point_count() const { return static_cast<int>(breakpoints.size()); }
};

inline SplitSchedule split_intervals(const Trajectory& g, double p, double theta,
                                     const DyadicWindow* window = nullptr) {
    if (!(theta > 0.0)) throw std::invalid_argument("split_intervals: theta must be > 0");
    const DyadicWindow win = window ? *window : default_window(g.grid());
    const BesovSpec spec{sp_exponent(p) + 2.0 / p, p, p, win};
    auto piece_norm = [&](double lo, double hi) {
        return chemin_lerner_norm(g, p, spec, lo, hi);
    };

    SplitSchedule sch;
    sch.threshold = theta;
    const auto& times = g.times();
    const double T = times.back();
    double cur = times.front();
    sch.breakpoints.push_back(cur);

    std::size_t i = 1;
    while (i < times.size()) {
        if (piece_norm(cur, times[i]) <= theta) {
            ++i;
            continue;
        }
        double lo = std::max(cur, times[i - 1]);
        double hi = times[i];
        if (piece_norm(cur, lo) > theta)
            throw std::runtime_error(
                "split_intervals: single-sample piece exceeds threshold; "
                "time resolution insufficient");
        for (int b = 0; b < 40; ++b) {
            const double mid = 0.5 * (lo + hi);
            (piece_norm(cur, mid) <= theta ? lo : hi) = mid;
        }
        sch.measured_piece_norms.push_back(piece_norm(cur, lo));
        sch.breakpoints.push_back(lo);
        cur = lo;
        // the remaining sub-sample stretch must itself fit under theta,
        // otherwise one mesh cell carries more than one piece
        if (piece_norm(cur, times[i]) > theta)
            throw std::runtime_error(
                "split_intervals: single-sample piece exceeds threshold; "
                "time resolution insufficient");
        ++i;
    }
    sch.measured_piece_norms.push_back(piece_norm(cur, T));
    sch.breakpoints.push_back(T);
    sch.final_piece_partial = sch.measured_piece_norms.back() < theta;
    return sch;
}

// Empirical operator-smallness certificate for a time-independent drift U:
// max over probe trajectories h of
//   ||Q(h,U)||_{CL^p B^{sp+2/p-2}} / ||h||_{CL^p B^{sp+2/p}}.
inline double drift_smallness_check(const SpectralField& U,
                                    const std::vector<Trajectory>& probes, double p) {
    if (probes.empty()) throw std::invalid_argument("drift_smallness_check: no probes");
    const DyadicWindow win = default_window(U.grid());
    const double sp = sp_exponent(p);
    const BesovSpec num_spec{sp + 2.0 / p - 2.0, p, p, win};
    const BesovSpec den_spec{sp + 2.0 / p, p, p, win};
    double worst = 0.0;
    for (const auto& h : probes) {
        const double den = chemin_lerner_norm(h, p, den_spec);
        if (den == 0.0) throw std::invalid_argument("drift_smallness_check: zero-norm probe");
        std::vector<SpectralField> qs;
        qs.reserve(h.size());
        for (std::size_t i = 0; i < h.size(); ++i)
            qs.push_back(nonlinear_Q(h.field(i), U));
        const Trajectory qtraj(h.times(), std::move(qs));
        worst = std::max(worst, chemin_lerner_norm(qtraj, p, num_spec) / den);
    }
    return worst;
}

}  // namespace csns
