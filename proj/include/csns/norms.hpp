#pragma once

#include <cmath>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "csns/dyadic.hpp"
#include "csns/field.hpp"

namespace csns {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// s_p = -1 + 3/p, the critical Besov regularity for integrability p.
inline double sp_exponent(double p) { return -1.0 + 3.0 / p; }

// Grid-quadrature L^p norm of the physical field, taking the pointwise
// Euclidean magnitude across components. Rectangle rule, exact for
// trigonometric polynomials at p=2.
inline double lp_norm(const SpectralField& u, double p) {
    if (p < 1.0) throw std::invalid_argument("lp_norm: p must be >= 1");
    const auto phys = to_physical(u);
    const std::size_t npts = u.npoints();
    double acc = 0.0;
    if (p == kInf) {
        for (std::size_t i = 0; i < npts; ++i) {
            double m2 = 0.0;
            for (const auto& comp : phys) m2 += comp[i] * comp[i];
            acc = std::max(acc, m2);
        }
        return std::sqrt(acc);
    }
    for (std::size_t i = 0; i < npts; ++i) {
        double m2 = 0.0;
        for (const auto& comp : phys) m2 += comp[i] * comp[i];
        acc += std::pow(m2, 0.5 * p);
    }
    const double h = u.grid().period / u.grid().n;
    return std::pow(acc * h * h * h, 1.0 / p);
}

struct BesovSpec {
    double s = 0.0;
    double p = 2.0;
    double q = 2.0;
    DyadicWindow window;

    static BesovSpec critical(double p, const DyadicWindow& w) {
        return BesovSpec{sp_exponent(p), p, p, w};
    }
    BesovSpec with_s(double snew) const { return BesovSpec{snew, p, q, window}; }
};

// Throws if u has nonzero modes outside the window's covered band, listing
// the first few offenders.
inline void check_window_coverage(const SpectralField& u, const DyadicWindow& w) {
    const PeriodicGrid& g = u.grid();
    const double lo = w.coverage_lo(), hi = w.coverage_hi();
    const double tiny = 1e-16 * std::max(u.max_abs_coeff(), 1e-300);
    std::ostringstream os;
    int bad = 0;
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double a = std::sqrt(g.xi_norm2(k0, k1, k2));
        if (a == 0.0) return;
        if (a >= lo && a <= hi) return;
        for (int c = 0; c < u.ncomp(); ++c) {
            if (std::abs(u.at(c, i)) > tiny) {
                if (bad < 8)
                    os << " k=(" << k0 << "," << k1 << "," << k2 << ") |xi|=" << a;
                ++bad;
                break;
            }
        }
    });
    if (bad > 0)
        throw std::invalid_argument("besov_norm: window [" + std::to_string(w.j_min) +
                                    "," + std::to_string(w.j_max) + "] does not cover " +
                                    std::to_string(bad) + " modes:" + os.str());
}

inline double ell_q_accumulate(const std::vector<double>& terms, double q) {
    if (q == kInf) {
        double m = 0.0;
        for (double t : terms) m = std::max(m, t);
        return m;
    }
    double acc = 0.0;
    for (double t : terms) acc += std::pow(t, q);
    return std::pow(acc, 1.0 / q);
}

// ell^q over j of 2^{js} ||Delta_j u||_{L^p}, via the cached block pipeline.
inline double besov_norm(const SpectralField& u, const BesovSpec& spec) {
    check_window_coverage(u, spec.window);
    std::vector<double> terms;
    terms.reserve(spec.window.count());
    for (int j = spec.window.j_min; j <= spec.window.j_max; ++j) {
        const double bj = lp_norm(dyadic_block(u, j, spec.window), spec.p);
        terms.push_back(std::pow(2.0, j * spec.s) * bj);
    }
    return ell_q_accumulate(terms, spec.q);
}

struct BesovRow {
    int j;
    double weight;    // 2^{js}
    double block_lp;  // ||Delta_j u||_{L^p}
    double contribution;
};

inline std::vector<BesovRow> besov_breakdown(const SpectralField& u,
                                             const BesovSpec& spec) {
    std::vector<BesovRow> rows;
    for (int j = spec.window.j_min; j <= spec.window.j_max; ++j) {
        const double w = std::pow(2.0, j * spec.s);
        const double b = lp_norm(dyadic_block(u, j, spec.window), spec.p);
        rows.push_back({j, w, b, w * b});
    }
    return rows;
}

}  // namespace csns
