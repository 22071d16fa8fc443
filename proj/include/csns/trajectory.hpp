#pragma once

#include <algorithm>
#include <cmath>
#include <map>
#include <stdexcept>
#include <tuple>
#include <vector>

#include "csns/norms.hpp"

namespace csns {

// Per-(j, time) table of ||Delta_j u(t_i)||_{L^p}.
struct BlockLpTable {
    DyadicWindow window;
    std::vector<std::vector<double>> val;  // [j - j_min][time index]
};

// Time-indexed sequence of spectral fields on one grid, with a write-once
// cache of per-block L^p norms keyed by (p, window). Sample times are
// strictly increasing; time quadrature throughout is the trapezoid rule on
// the native sample times.
class Trajectory {
public:
    Trajectory() = default;

    Trajectory(std::vector<double> times, std::vector<SpectralField> fields)
        : times_(std::move(times)), fields_(std::move(fields)) {
        if (times_.size() != fields_.size())
            throw std::invalid_argument("Trajectory: times/fields size mismatch");
        if (times_.empty()) throw std::invalid_argument("Trajectory: empty");
        for (std::size_t i = 1; i < times_.size(); ++i)
            if (!(times_[i] > times_[i - 1]))
                throw std::invalid_argument("Trajectory: times must be strictly increasing");
        for (const auto& f : fields_)
            if (!f.grid().same_as(fields_[0].grid()) || f.ncomp() != fields_[0].ncomp())
                throw std::invalid_argument("Trajectory: fields must share one grid");
    }

    std::size_t size() const { return times_.size(); }
    const std::vector<double>& times() const { return times_; }
    double t_begin() const { return times_.front(); }
    double t_end() const { return times_.back(); }
    const SpectralField& field(std::size_t i) const { return fields_[i]; }
    const PeriodicGrid& grid() const { return fields_.front().grid(); }
    int ncomp() const { return fields_.front().ncomp(); }

    // Linear interpolation of coefficients at time t (clamped to the span).
    SpectralField interpolate(double t) const {
        if (t <= times_.front()) return fields_.front();
        if (t >= times_.back()) return fields_.back();
        const auto it = std::upper_bound(times_.begin(), times_.end(), t);
        const std::size_t hi = static_cast<std::size_t>(it - times_.begin());
        const std::size_t lo = hi - 1;
        const double w = (t - times_[lo]) / (times_[hi] - times_[lo]);
        SpectralField out = fields_[lo];
        out *= (1.0 - w);
        SpectralField b = fields_[hi];
        b *= w;
        out += b;
        return out;
    }

    const BlockLpTable& block_lp(double p, const DyadicWindow& w) const {
        const Key key{p, w.j_min, w.j_max};
        auto it = cache_.find(key);
        if (it != cache_.end()) return it->second;
        BlockLpTable tab;
        tab.window = w;
        tab.val.assign(w.count(), std::vector<double>(times_.size(), 0.0));
        for (int j = w.j_min; j <= w.j_max; ++j)
            for (std::size_t i = 0; i < times_.size(); ++i)
                tab.val[j - w.j_min][i] = lp_norm(dyadic_block(fields_[i], j, w), p);
        return cache_.emplace(key, std::move(tab)).first->second;
    }

    // Recomputation check for the cache invariant.
    double block_cache_defect(double p, const DyadicWindow& w) const {
        const BlockLpTable& tab = block_lp(p, w);
        double worst = 0.0;
        for (int j = w.j_min; j <= w.j_max; ++j)
            for (std::size_t i = 0; i < times_.size(); ++i) {
                const double fresh = lp_norm(dyadic_block(fields_[i], j, w), p);
                const double cached = tab.val[j - w.j_min][i];
                const double den = std::max(std::abs(fresh), 1e-300);
                worst = std::max(worst, std::abs(fresh - cached) / den);
            }
        return worst;
    }

    // Pointwise combination helpers (same mesh required).
    static Trajectory sum(const Trajectory& a, const Trajectory& b) {
        require_same_mesh(a, b);
        std::vector<SpectralField> f;
        f.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) f.push_back(a.field(i) + b.field(i));
        return Trajectory(a.times(), std::move(f));
    }
    static Trajectory difference(const Trajectory& a, const Trajectory& b) {
        require_same_mesh(a, b);
        std::vector<SpectralField> f;
        f.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) f.push_back(a.field(i) - b.field(i));
        return Trajectory(a.times(), std::move(f));
    }
    static Trajectory offset(const Trajectory& a, const SpectralField& u, double sign) {
        std::vector<SpectralField> f;
        f.reserve(a.size());
        for (std::size_t i = 0; i < a.size(); ++i) {
            SpectralField v = u;
            v *= sign;
            f.push_back(a.field(i) + v);
        }
        return Trajectory(a.times(), std::move(f));
    }

    static void require_same_mesh(const Trajectory& a, const Trajectory& b) {
        if (a.size() != b.size())
            throw std::invalid_argument("Trajectory: mesh size mismatch");
        for (std::size_t i = 0; i < a.size(); ++i)
            if (std::abs(a.times()[i] - b.times()[i]) >
                1e-12 * std::max(1.0, std::abs(a.times()[i])))
                throw std::invalid_argument("Trajectory: sample times differ");
    }

private:
    using Key = std::tuple<double, int, int>;
    std::vector<double> times_;
    std::vector<SpectralField> fields_;
    mutable std::map<Key, BlockLpTable> cache_;
};

namespace detail {

// Trapezoid of y(t)^rho over [lo,hi]. Interval endpoints falling inside a
// mesh cell interpolate y^rho linearly, so the quadrature is exactly
// additive under subdivision (the property the interval splitter leans on).
// rho = inf gives the sup over the clipped window.
inline double time_norm(const std::vector<double>& t, const std::vector<double>& y,
                        double rho, double lo, double hi) {
    if (hi < lo) throw std::invalid_argument("time_norm: empty interval");
    auto interp = [&](double s, auto&& f) {
        if (s <= t.front()) return f(y.front());
        if (s >= t.back()) return f(y.back());
        const auto it = std::upper_bound(t.begin(), t.end(), s);
        const std::size_t hi_i = static_cast<std::size_t>(it - t.begin());
        const std::size_t lo_i = hi_i - 1;
        const double w = (s - t[lo_i]) / (t[hi_i] - t[lo_i]);
        return (1.0 - w) * f(y[lo_i]) + w * f(y[hi_i]);
    };
    if (rho == kInf) {
        auto id = [](double v) { return v; };
        double m = std::max(interp(lo, id), interp(hi, id));
        for (std::size_t i = 0; i < t.size(); ++i)
            if (t[i] > lo && t[i] < hi) m = std::max(m, y[i]);
        return m;
    }
    if (hi == lo) return 0.0;
    auto powr = [rho](double v) { return std::pow(v, rho); };
    double acc = 0.0;
    double prev_t = lo, prev_v = interp(lo, powr);
    for (std::size_t i = 0; i < t.size(); ++i) {
        if (t[i] <= lo || t[i] >= hi) continue;
        const double v = powr(y[i]);
        acc += 0.5 * (prev_v + v) * (t[i] - prev_t);
        prev_t = t[i];
        prev_v = v;
    }
    acc += 0.5 * (prev_v + interp(hi, powr)) * (hi - prev_t);
    return std::pow(acc, 1.0 / rho);
}

}  // namespace detail

// Chemin-Lerner norm: ell^q over j of 2^{js} || ||Delta_j u(t)||_{L^p} ||_{L^rho_t}.
// The time norm sits inside the block sum, which is what distinguishes these
// spaces from Lebesgue-in-time Besov norms.
inline double chemin_lerner_norm(const Trajectory& tr, double rho, const BesovSpec& spec,
                                 double t_lo, double t_hi) {
    if (rho < 1.0) throw std::invalid_argument("chemin_lerner_norm: rho must be >= 1");
    if (rho != kInf && tr.size() < 2)
        throw std::invalid_argument("chemin_lerner_norm: need >= 2 samples for finite rho");
    const BlockLpTable& tab = tr.block_lp(spec.p, spec.window);
    std::vector<double> terms;
    terms.reserve(spec.window.count());
    for (int j = spec.window.j_min; j <= spec.window.j_max; ++j) {
        const double tn = detail::time_norm(tr.times(), tab.val[j - spec.window.j_min],
                                            rho, t_lo, t_hi);
        terms.push_back(std::pow(2.0, j * spec.s) * tn);
    }
    return ell_q_accumulate(terms, spec.q);
}

inline double chemin_lerner_norm(const Trajectory& tr, double rho, const BesovSpec& spec) {
    return chemin_lerner_norm(tr, rho, spec, tr.t_begin(), tr.t_end());
}

// Lebesgue-in-time Besov norm || ||u(t)||_{B^s_{p,q}} ||_{L^rho_t}, used to
// check the ordering against the Chemin-Lerner variant.
inline double lebesgue_besov_norm(const Trajectory& tr, double rho, const BesovSpec& spec) {
    std::vector<double> slice(tr.size());
    const BlockLpTable& tab = tr.block_lp(spec.p, spec.window);
    for (std::size_t i = 0; i < tr.size(); ++i) {
        std::vector<double> terms;
        terms.reserve(spec.window.count());
        for (int j = spec.window.j_min; j <= spec.window.j_max; ++j)
            terms.push_back(std::pow(2.0, j * spec.s) * tab.val[j - spec.window.j_min][i]);
        slice[i] = ell_q_accumulate(terms, spec.q);
    }
    return detail::time_norm(tr.times(), slice, rho, tr.t_begin(), tr.t_end());
}

// ||u||_{L^{a:b}_p} = max of the Chemin-Lerner norms at (a, s_p + 2/a) and
// (b, s_p + 2/b), both with integrability and summation p.
inline double mixed_space_norm(const Trajectory& tr, double a, double b, double p,
                               const DyadicWindow& w, double t_lo, double t_hi) {
    if (a > b) throw std::invalid_argument("mixed_space_norm: requires a <= b");
    const double sp = sp_exponent(p);
    const BesovSpec sa{sp + 2.0 / a, p, p, w};
    const BesovSpec sb{sp + 2.0 / b, p, p, w};
    return std::max(chemin_lerner_norm(tr, a, sa, t_lo, t_hi),
                    chemin_lerner_norm(tr, b, sb, t_lo, t_hi));
}

inline double mixed_space_norm(const Trajectory& tr, double a, double b, double p,
                               const DyadicWindow& w) {
    return mixed_space_norm(tr, a, b, p, w, tr.t_begin(), tr.t_end());
}

// Norm of the source space CL^p B^{sp+2/p-2} + CL^{p/2} B^{sp+4/p-2}. The sum
// norm is an inf over decompositions; we evaluate the per-block greedy split
// (each dyadic block assigned wholly to the cheaper slot), which is a valid
// decomposition and therefore an upper bound, never worse than the min of
// the two single-space norms.
inline double forcing_space_norm(const Trajectory& tr, double p, const DyadicWindow& w,
                                 double t_lo, double t_hi) {
    const double sp = sp_exponent(p);
    const double sA = sp + 2.0 / p - 2.0, rhoA = p;
    const double sB = sp + 4.0 / p - 2.0, rhoB = p / 2.0;
    const BlockLpTable& tab = tr.block_lp(p, w);
    double accA = 0.0, accB = 0.0;
    for (int j = w.j_min; j <= w.j_max; ++j) {
        const auto& y = tab.val[j - w.j_min];
        const double cA = std::pow(2.0, j * sA) *
                          detail::time_norm(tr.times(), y, rhoA, t_lo, t_hi);
        const double cB = std::pow(2.0, j * sB) *
                          detail::time_norm(tr.times(), y, rhoB, t_lo, t_hi);
        if (cA <= cB)
            accA += std::pow(cA, p);
        else
            accB += std::pow(cB, p);
    }
    return std::pow(accA, 1.0 / p) + std::pow(accB, 1.0 / p);
}

inline double forcing_space_norm(const Trajectory& tr, double p, const DyadicWindow& w) {
    return forcing_space_norm(tr, p, w, tr.t_begin(), tr.t_end());
}

}  // namespace csns
