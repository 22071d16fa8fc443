#pragma once

#include <cmath>
#include <map>
#include <mutex>
#include <tuple>
#include <vector>

#include "csns/field.hpp"
#include "csns/operators.hpp"

namespace csns {

// Radial cutoff phi_hat: 1 on |xi| <= 1, 0 on |xi| >= 2, and a C^3
// smoothstep polynomial in log2|xi| in between. The paper-style operators are
//   S_j  : multiply by phi_hat(2^{-j} xi)
//   Delta_j = S_{j+1} - S_j : supported in 2^j < |xi| < 2^{j+2}.
// Telescoping gives sum_{j=a..b} Delta_j(xi) = 1 exactly for
// 2^{a+1} <= |xi| <= 2^{b+1}; default windows are picked so that every
// resolved nonzero mode lies in that covered band.
inline double smoothstep3(double x) {
    if (x <= 0.0) return 0.0;
    if (x >= 1.0) return 1.0;
    const double x2 = x * x;
    return x2 * x2 * (35.0 - 84.0 * x + 70.0 * x2 - 20.0 * x2 * x);
}

inline double cutoff_profile(double a) {
    if (a <= 1.0) return 1.0;
    if (a >= 2.0) return 0.0;
    return smoothstep3(1.0 - std::log2(a));
}

inline double lowpass_multiplier(int j, double absxi) {
    if (absxi == 0.0) return 1.0;
    return cutoff_profile(std::ldexp(absxi, -j));
}

inline double block_multiplier(int j, double absxi) {
    if (absxi == 0.0) return 0.0;
    return lowpass_multiplier(j + 1, absxi) - lowpass_multiplier(j, absxi);
}

struct DyadicWindow {
    int j_min = 0;
    int j_max = 0;
    bool contains(int j) const { return j >= j_min && j <= j_max; }
    int count() const { return j_max - j_min + 1; }
    // Band of |xi| on which the window's partition of unity is exact.
    double coverage_lo() const { return std::ldexp(1.0, j_min + 1); }
    double coverage_hi() const { return std::ldexp(1.0, j_max + 1); }
};

// j_max = ceil(log2(xi_max)) over the grid corner, j_min = floor(log2(2pi/L)) - 1.
inline DyadicWindow default_window(const PeriodicGrid& g) {
    const double xi_min = g.xi0();
    const double xi_max = g.xi0() * (g.n / 2) * std::sqrt(3.0);
    DyadicWindow w;
    w.j_min = static_cast<int>(std::floor(std::log2(xi_min))) - 1;
    w.j_max = static_cast<int>(std::ceil(std::log2(xi_max)));
    return w;
}

// Cached per-(grid,j) block multiplier tables; this is the production
// pipeline that the independent test oracle deliberately avoids.
inline const std::vector<double>& block_mask(const PeriodicGrid& g, int j) {
    using Key = std::tuple<int, double, int>;
    static std::mutex mu;
    static std::map<Key, std::vector<double>> cache;
    const Key key{g.n, g.period, j};
    std::lock_guard<std::mutex> lock(mu);
    auto it = cache.find(key);
    if (it == cache.end()) {
        std::vector<double> mask(g.npoints());
        for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
            mask[i] = block_multiplier(j, std::sqrt(g.xi_norm2(k0, k1, k2)));
        });
        it = cache.emplace(key, std::move(mask)).first;
    }
    return it->second;
}

// Delta_j u. Out-of-window j returns the zero field and raises the optional
// warning flag instead of erroring.
inline SpectralField dyadic_block(const SpectralField& u, int j,
                                  const DyadicWindow& window,
                                  bool* out_of_window = nullptr) {
    if (out_of_window) *out_of_window = !window.contains(j);
    SpectralField v(u.grid(), u.ncomp());
    v.divergence_free = u.divergence_free;
    if (!window.contains(j)) return v;
    const auto& mask = block_mask(u.grid(), j);
    for (int c = 0; c < u.ncomp(); ++c)
        for (std::size_t i = 0; i < mask.size(); ++i)
            v.at(c, i) = mask[i] * u.at(c, i);
    return v;
}

inline SpectralField low_pass(const SpectralField& u, int j) {
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double f = lowpass_multiplier(j, std::sqrt(g.xi_norm2(k0, k1, k2)));
        for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) *= f;
    });
    return v;
}

// max over nonzero grid modes of |sum_j Delta_j(xi) - 1|.
inline double partition_of_unity_defect(const PeriodicGrid& g, const DyadicWindow& w) {
    double worst = 0.0;
    for_each_mode(g, [&](std::size_t, int k0, int k1, int k2) {
        const double a = std::sqrt(g.xi_norm2(k0, k1, k2));
        if (a == 0.0) return;
        double s = 0.0;
        for (int j = w.j_min; j <= w.j_max; ++j) s += block_multiplier(j, a);
        worst = std::max(worst, std::abs(s - 1.0));
    });
    return worst;
}

}  // namespace csns
