#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>

namespace csns {

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// Periodic grid on [0,L)^3 with n points per axis. Frequency indices run over
// k in {-n/2+1,...,n/2}^3 (storage order is the usual DFT layout), and the
// physical wavenumber of index k is xi = 2*pi*k/L. The dealias mask keeps
// |k_i| <= dealias_fraction*n/2 on every axis; all quadratic products are
// masked so that aliased images (which land outside the mask for the default
// 2/3 rule) never pollute retained modes.
struct PeriodicGrid {
    int n = 0;
    double period = 2.0 * kPi;
    double dealias_fraction = 2.0 / 3.0;

    std::size_t npoints() const { return static_cast<std::size_t>(n) * n * n; }

    double xi0() const { return 2.0 * kPi / period; }

    // Largest |k_i| kept by the dealias mask.
    int kmax_keep() const {
        const double lim = dealias_fraction * n / 2.0;
        return static_cast<int>(std::floor(lim + 1e-9));
    }

    int freq_of(int idx) const { return idx <= n / 2 ? idx : idx - n; }
    int idx_of(int k) const { return k >= 0 ? k : k + n; }

    std::size_t index(int i0, int i1, int i2) const {
        return (static_cast<std::size_t>(i0) * n + i1) * n + i2;
    }

    bool in_dealias_mask(int k0, int k1, int k2) const {
        const int m = kmax_keep();
        return std::abs(k0) <= m && std::abs(k1) <= m && std::abs(k2) <= m;
    }

    double xi_norm2(int k0, int k1, int k2) const {
        const double x = xi0();
        return x * x * (static_cast<double>(k0) * k0 +
                        static_cast<double>(k1) * k1 +
                        static_cast<double>(k2) * k2);
    }

    bool same_as(const PeriodicGrid& o) const {
        return n == o.n && period == o.period &&
               dealias_fraction == o.dealias_fraction;
    }
};

// n must be even and >= 16 (dyadic dilation additionally requires
// power-of-two index ratios, which it checks itself).
inline PeriodicGrid make_grid(int n, double period,
                              double dealias_fraction = 2.0 / 3.0) {
    if (n < 16 || n % 2 != 0)
        throw std::invalid_argument("make_grid: n must be even and >= 16, got " +
                                    std::to_string(n));
    if (!(period > 0.0))
        throw std::invalid_argument("make_grid: period must be positive");
    if (!(dealias_fraction > 0.0) || dealias_fraction > 1.0)
        throw std::invalid_argument("make_grid: dealias_fraction must be in (0,1]");
    PeriodicGrid g;
    g.n = n;
    g.period = period;
    g.dealias_fraction = dealias_fraction;
    return g;
}

inline bool is_power_of_two(int v) { return v > 0 && (v & (v - 1)) == 0; }

}  // namespace csns
