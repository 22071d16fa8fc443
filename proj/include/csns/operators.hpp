#pragma once

#include <array>
#include <cmath>
#include <complex>
#include <sstream>
#include <stdexcept>

#include "csns/field.hpp"

namespace csns {

// Loop over all modes, calling f(linear_index, k0, k1, k2).
template <typename F>
inline void for_each_mode(const PeriodicGrid& g, F&& f) {
    for (int i0 = 0; i0 < g.n; ++i0) {
        const int k0 = g.freq_of(i0);
        for (int i1 = 0; i1 < g.n; ++i1) {
            const int k1 = g.freq_of(i1);
            std::size_t base = (static_cast<std::size_t>(i0) * g.n + i1) *
                               static_cast<std::size_t>(g.n);
            for (int i2 = 0; i2 < g.n; ++i2) {
                const int k2 = g.freq_of(i2);
                f(base + i2, k0, k1, k2);
            }
        }
    }
}

inline SpectralField dealias(const SpectralField& u) {
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    const int m = g.kmax_keep();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        if (std::abs(k0) > m || std::abs(k1) > m || std::abs(k2) > m)
            for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) = Complex(0);
    });
    return v;
}

// P u_hat(k) = (I - k k^T/|k|^2) u_hat(k); the k=0 mode is zero by invariant.
// Idempotent and divergence-certifying.
inline SpectralField leray_project(const SpectralField& u) {
    if (u.ncomp() != 3) throw std::invalid_argument("leray_project: needs 3 components");
    SpectralField v = u;
    v.enforce_zero_mean();
    const PeriodicGrid& g = u.grid();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double kk = static_cast<double>(k0) * k0 +
                          static_cast<double>(k1) * k1 +
                          static_cast<double>(k2) * k2;
        if (kk == 0.0) return;
        const Complex kd = (static_cast<double>(k0) * v.at(0, i) +
                            static_cast<double>(k1) * v.at(1, i) +
                            static_cast<double>(k2) * v.at(2, i)) / kk;
        v.at(0, i) -= static_cast<double>(k0) * kd;
        v.at(1, i) -= static_cast<double>(k1) * kd;
        v.at(2, i) -= static_cast<double>(k2) * kd;
    });
    v.divergence_free = true;
    return v;
}

inline SpectralField heat_semigroup(const SpectralField& u, double t) {
    if (t < 0.0) throw std::invalid_argument("heat_semigroup: t must be >= 0");
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double f = std::exp(-g.xi_norm2(k0, k1, k2) * t);
        for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) *= f;
    });
    return v;
}

inline SpectralField inverse_laplacian(const SpectralField& u) {
    if (u.mean_mode_abs() > 0.0)
        throw std::invalid_argument("inverse_laplacian: nonzero mean mode");
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double xx = g.xi_norm2(k0, k1, k2);
        if (xx == 0.0) return;
        for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) /= -xx;
    });
    return v;
}

inline SpectralField laplacian(const SpectralField& u) {
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double xx = g.xi_norm2(k0, k1, k2);
        for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) *= -xx;
    });
    return v;
}

// Physical samples of d(u_c)/dx_d.
inline std::vector<double> derivative_physical(const SpectralField& u, int c, int d) {
    const PeriodicGrid& g = u.grid();
    std::vector<Complex> buf(g.npoints());
    const double x0 = g.xi0();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const int kd = d == 0 ? k0 : (d == 1 ? k1 : k2);
        buf[i] = Complex(0.0, x0 * kd) * u.at(c, i);
    });
    FftPlan::get(g.n).backward(buf.data());
    std::vector<double> out(buf.size());
    for (std::size_t i = 0; i < buf.size(); ++i) out[i] = buf[i].real();
    return out;
}

// Q(a,b) = P((a.grad)b + (b.grad)a), evaluated pseudo-spectrally: transform,
// pointwise products, transform back, dealias, project. The two advective
// terms are summed pairwise so Q(a,b) and Q(b,a) are bitwise equal.
inline SpectralField nonlinear_Q(const SpectralField& a, const SpectralField& b) {
    if (!a.grid().same_as(b.grid()))
        throw std::invalid_argument("nonlinear_Q: grid mismatch");
    if (a.ncomp() != 3 || b.ncomp() != 3)
        throw std::invalid_argument("nonlinear_Q: needs 3-component fields");
    const PeriodicGrid& g = a.grid();
    const bool same = &a == &b;

    const auto aph = to_physical(a);
    const auto bph = same ? aph : to_physical(b);

    std::vector<std::vector<double>> out(3,
        std::vector<double>(g.npoints(), 0.0));
    for (int c = 0; c < 3; ++c) {
        for (int d = 0; d < 3; ++d) {
            const auto gb = derivative_physical(b, c, d);
            const auto ga = same ? gb : derivative_physical(a, c, d);
            auto& oc = out[c];
            const auto& ad = aph[d];
            const auto& bd = bph[d];
            for (std::size_t i = 0; i < oc.size(); ++i)
                oc[i] += ad[i] * gb[i] + bd[i] * ga[i];
        }
    }
    SpectralField q = from_physical(g, out);
    q = dealias(q);
    q.enforce_zero_mean();
    return leray_project(q);
}

// Pointwise tensor product (u tensor v)_{cd} = u_c v_d as a 9-component
// field, dealiased. Component order is row-major (c*3+d).
inline SpectralField tensor_product(const SpectralField& u, const SpectralField& v) {
    if (!u.grid().same_as(v.grid()))
        throw std::invalid_argument("tensor_product: grid mismatch");
    if (u.ncomp() != 3 || v.ncomp() != 3)
        throw std::invalid_argument("tensor_product: needs 3-component fields");
    const PeriodicGrid& g = u.grid();
    const auto up = to_physical(u);
    const auto vp = to_physical(v);
    std::vector<std::vector<double>> prod(9, std::vector<double>(g.npoints()));
    for (int c = 0; c < 3; ++c)
        for (int d = 0; d < 3; ++d) {
            auto& t = prod[c * 3 + d];
            for (std::size_t i = 0; i < t.size(); ++i) t[i] = up[c][i] * vp[d][i];
        }
    SpectralField w = from_physical(g, prod);
    return dealias(w);
}

// Translation u(. - x0): multiply each coefficient by e^{-i xi_k . x0}.
inline SpectralField translate(const SpectralField& u, const std::array<double, 3>& x0) {
    SpectralField v = u;
    const PeriodicGrid& g = u.grid();
    const double w = g.xi0();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double th = w * (k0 * x0[0] + k1 * x0[1] + k2 * x0[2]);
        const Complex ph = std::polar(1.0, -th);
        for (int c = 0; c < v.ncomp(); ++c) v.at(c, i) *= ph;
    });
    return v;
}

// Exact dyadic dilation with the L3-invariant normalization
//   v(x) = 2^m u(2^m (x - x0))   (= lambda^{-1} u((x-x0)/lambda), lambda = 2^{-m}).
// For m >= 0 the index map is k -> 2^m k with coefficient factor 2^m and
// phase e^{-i xi_out . x0}; the spectral support must fit inside the dealias
// mask after the shift, otherwise the call refuses (never truncates).
// For m < 0 (expansion) only indices divisible by 2^{-m} are representable;
// nonzero mass elsewhere refuses unless allow_truncation is set (used by the
// profile-extraction loop as its discrete weak-limit surrogate).
inline SpectralField dyadic_dilate(const SpectralField& u, int m,
                                   const std::array<double, 3>& x0,
                                   bool allow_truncation = false) {
    const PeriodicGrid& g = u.grid();
    SpectralField v(g, u.ncomp());
    v.divergence_free = u.divergence_free;
    const double w = g.xi0();
    if (m >= 0) {
        const int s = 1 << m;
        const int kmax = g.kmax_keep();
        if (!allow_truncation) {
            // support check first, so we refuse without partial output
            for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
                bool nz = false;
                for (int c = 0; c < u.ncomp(); ++c) nz = nz || (u.at(c, i) != Complex(0));
                if (!nz) return;
                if (std::abs(k0) * s > kmax || std::abs(k1) * s > kmax ||
                    std::abs(k2) * s > kmax) {
                    std::ostringstream os;
                    os << "dyadic_dilate: support violation at k=(" << k0 << "," << k1
                       << "," << k2 << ") with m=" << m;
                    throw std::invalid_argument(os.str());
                }
            });
        }
        const double amp = std::ldexp(1.0, m);
        for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
            bool nz = false;
            for (int c = 0; c < u.ncomp(); ++c) nz = nz || (u.at(c, i) != Complex(0));
            if (!nz) return;
            if (std::abs(k0) * s > kmax || std::abs(k1) * s > kmax ||
                std::abs(k2) * s > kmax)
                return;  // reachable only with allow_truncation
            const int K0 = k0 * s, K1 = k1 * s, K2 = k2 * s;
            const std::size_t j = g.index(g.idx_of(K0), g.idx_of(K1), g.idx_of(K2));
            const double th = w * (K0 * x0[0] + K1 * x0[1] + K2 * x0[2]);
            const Complex ph = (th == 0.0) ? Complex(1.0, 0.0) : std::polar(1.0, -th);
            for (int c = 0; c < u.ncomp(); ++c) v.at(c, j) = amp * u.at(c, i) * ph;
        });
    } else {
        const int s = 1 << (-m);
        if (!allow_truncation) {
            for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
                bool nz = false;
                for (int c = 0; c < u.ncomp(); ++c) nz = nz || (u.at(c, i) != Complex(0));
                if (!nz) return;
                if (k0 % s != 0 || k1 % s != 0 || k2 % s != 0) {
                    std::ostringstream os;
                    os << "dyadic_dilate: mode k=(" << k0 << "," << k1 << "," << k2
                       << ") not on the 2^" << -m << " lattice";
                    throw std::invalid_argument(os.str());
                }
            });
        }
        const double amp = std::ldexp(1.0, m);
        for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
            if (k0 % s != 0 || k1 % s != 0 || k2 % s != 0) return;
            const int K0 = k0 / s, K1 = k1 / s, K2 = k2 / s;
            const std::size_t j = g.index(g.idx_of(K0), g.idx_of(K1), g.idx_of(K2));
            const double th = w * (K0 * x0[0] + K1 * x0[1] + K2 * x0[2]);
            const Complex ph = (th == 0.0) ? Complex(1.0, 0.0) : std::polar(1.0, -th);
            for (int c = 0; c < u.ncomp(); ++c) v.at(c, j) = amp * u.at(c, i) * ph;
        });
    }
    v.enforce_zero_mean();
    return v;
}

// lambda^{-1} u(x/lambda) with lambda = 2^{-m}, plus exact phase translation.
inline SpectralField scale_l3_invariant_rescale(const SpectralField& u, int m,
                                                const std::array<double, 3>& x0 = {0, 0, 0}) {
    if (m < 0)
        throw std::invalid_argument("scale_l3_invariant_rescale: m must be >= 0");
    return dyadic_dilate(u, m, x0);
}

}  // namespace csns
