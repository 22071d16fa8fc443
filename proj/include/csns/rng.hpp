#pragma once

#include <random>

#include "csns/operators.hpp"
#include "csns/trajectory.hpp"

namespace csns {

using Rng = std::mt19937_64;

// Random divergence-free band-limited field: independent complex Gaussian
// coefficients on kmin <= |k| <= kmax with per-mode amplitude |k|^slope,
// Hermitian-symmetrized, zero-mean, dealiased and Leray-projected.
inline SpectralField random_divfree_field(const PeriodicGrid& g, Rng& rng, int kmin,
                                          int kmax, double slope = 0.0,
                                          double amplitude = 1.0) {
    if (kmax > g.kmax_keep())
        throw std::invalid_argument("random_divfree_field: kmax beyond dealias mask");
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectralField u(g, 3);
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double kk = std::sqrt(static_cast<double>(k0) * k0 +
                                    static_cast<double>(k1) * k1 +
                                    static_cast<double>(k2) * k2);
        // draw in a fixed order regardless of acceptance, for seed stability
        double re[3], im[3];
        for (int c = 0; c < 3; ++c) {
            re[c] = gauss(rng);
            im[c] = gauss(rng);
        }
        if (kk < kmin || kk > kmax) return;
        const double amp = amplitude * std::pow(kk, slope);
        for (int c = 0; c < 3; ++c) u.at(c, i) = amp * Complex(re[c], im[c]);
    });
    u.symmetrize_hermitian();
    u.enforce_zero_mean();
    u = dealias(u);
    return leray_project(u);
}

// Two active dyadic shells (the adversarial family for paraproduct ratios).
inline SpectralField two_shell_field(const PeriodicGrid& g, Rng& rng, int k_shell_1,
                                     int k_shell_2, double amp1, double amp2) {
    std::normal_distribution<double> gauss(0.0, 1.0);
    SpectralField u(g, 3);
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        const double kk = std::sqrt(static_cast<double>(k0) * k0 +
                                    static_cast<double>(k1) * k1 +
                                    static_cast<double>(k2) * k2);
        double re[3], im[3];
        for (int c = 0; c < 3; ++c) {
            re[c] = gauss(rng);
            im[c] = gauss(rng);
        }
        double amp = 0.0;
        if (std::abs(kk - k_shell_1) <= 0.5) amp = amp1;
        if (std::abs(kk - k_shell_2) <= 0.5) amp = amp2;
        if (amp == 0.0 || kk > g.kmax_keep()) return;
        for (int c = 0; c < 3; ++c) u.at(c, i) = amp * Complex(re[c], im[c]);
    });
    u.symmetrize_hermitian();
    u.enforce_zero_mean();
    u = dealias(u);
    return leray_project(u);
}

// Taylor-Green data u = A (sin x cos y cos z, -cos x sin y cos z, 0),
// divergence free by construction (mode-exact on the grid).
inline SpectralField taylor_green_field(const PeriodicGrid& g, double amplitude) {
    SpectralField u(g, 3);
    const Complex I(0.0, 1.0);
    for (int s0 : {-1, 1})
        for (int s1 : {-1, 1})
            for (int s2 : {-1, 1}) {
                const std::size_t i = g.index(g.idx_of(s0), g.idx_of(s1), g.idx_of(s2));
                u.at(0, i) = amplitude * (-I) * (s0 / 8.0);
                u.at(1, i) = amplitude * I * (s1 / 8.0);
            }
    u.enforce_zero_mean();
    u.divergence_free = true;
    return u;
}

namespace detail {
// orthonormal (e1, e2) perpendicular to k
inline std::pair<std::array<double, 3>, std::array<double, 3>> transverse_frame(
    const std::array<int, 3>& k) {
    std::array<double, 3> kv = {static_cast<double>(k[0]), static_cast<double>(k[1]),
                                static_cast<double>(k[2])};
    const double kn = std::sqrt(kv[0] * kv[0] + kv[1] * kv[1] + kv[2] * kv[2]);
    std::array<double, 3> ref = {1.0, 0.0, 0.0};
    if (k[1] == 0 && k[2] == 0) ref = {0.0, 1.0, 0.0};
    std::array<double, 3> e1 = {kv[1] * ref[2] - kv[2] * ref[1],
                                kv[2] * ref[0] - kv[0] * ref[2],
                                kv[0] * ref[1] - kv[1] * ref[0]};
    const double e1n = std::sqrt(e1[0] * e1[0] + e1[1] * e1[1] + e1[2] * e1[2]);
    for (auto& v : e1) v /= e1n;
    std::array<double, 3> e2 = {(kv[1] * e1[2] - kv[2] * e1[1]) / kn,
                                (kv[2] * e1[0] - kv[0] * e1[2]) / kn,
                                (kv[0] * e1[1] - kv[1] * e1[0]) / kn};
    return {e1, e2};
}
}  // namespace detail

// Helical (circularly polarized) single mode
//   u(x) = a (cos(k.x + phase) e1 - sin(k.x + phase) e2),  e1,e2 _|_ k:
// divergence free with |u(x)| = a pointwise, so every L^p grid quadrature is
// exact on every grid. The workhorse of the scaling-covariance tests.
inline SpectralField helical_field(const PeriodicGrid& g, const std::array<int, 3>& k,
                                   double amplitude, double phase = 0.0) {
    if (k[0] == 0 && k[1] == 0 && k[2] == 0)
        throw std::invalid_argument("helical_field: k must be nonzero");
    const auto [e1, e2] = detail::transverse_frame(k);
    SpectralField u(g, 3);
    const std::size_t i = g.index(g.idx_of(k[0]), g.idx_of(k[1]), g.idx_of(k[2]));
    const std::size_t j = g.index(g.idx_of(-k[0]), g.idx_of(-k[1]), g.idx_of(-k[2]));
    const Complex ph = std::polar(0.5 * amplitude, phase);
    for (int c = 0; c < 3; ++c) {
        const Complex v = ph * Complex(e1[c], e2[c]);
        u.at(c, i) = v;
        u.at(c, j) = std::conj(v);
    }
    u.divergence_free = true;
    return u;
}

// Helical-carrier wave packet: Gaussian envelope of k-width sigma_k riding a
// circularly polarized carrier at k_c, so |u(x)| equals the envelope exactly
// (no carrier ripple) and peaks at the center. Mean-free by construction
// since the spectrum sits away from k = 0. Exactly divergence free only at
// the carrier wavevector; project=true Leray-projects (adding mild tails),
// project=false keeps the sharply localized bump.
inline SpectralField gaussian_packet(const PeriodicGrid& g,
                                     const std::array<double, 3>& center,
                                     double sigma_k, const std::array<int, 3>& carrier,
                                     double amplitude, bool project = true) {
    const auto [e1, e2] = detail::transverse_frame(carrier);
    SpectralField u(g, 3);
    const double w0 = g.xi0();
    const int kmax = g.kmax_keep();
    for_each_mode(g, [&](std::size_t i, int k0, int k1, int k2) {
        if (std::abs(k0) > kmax || std::abs(k1) > kmax || std::abs(k2) > kmax) return;
        const double d0 = k0 - carrier[0], d1 = k1 - carrier[1], d2 = k2 - carrier[2];
        const double dd = d0 * d0 + d1 * d1 + d2 * d2;
        if (dd > 36.0 * sigma_k * sigma_k) return;
        const double wgt = 0.5 * amplitude * std::exp(-dd / (2.0 * sigma_k * sigma_k));
        const double th = w0 * (k0 * center[0] + k1 * center[1] + k2 * center[2]);
        const Complex ph = std::polar(wgt, -th);
        const std::size_t j = g.index(g.idx_of(-k0), g.idx_of(-k1), g.idx_of(-k2));
        for (int c = 0; c < 3; ++c) {
            const Complex v = ph * Complex(e1[c], e2[c]);
            u.at(c, i) += v;
            u.at(c, j) += std::conj(v);
        }
    });
    u.enforce_zero_mean();
    return project ? leray_project(u) : u;
}

// Exact heat flow of u0 sampled on an equispaced mesh; cheap trajectories
// for norm corpora (no solver run involved).
inline Trajectory heat_flow_trajectory(const SpectralField& u0, double t_end, int nt) {
    if (nt < 2) throw std::invalid_argument("heat_flow_trajectory: need >= 2 samples");
    std::vector<double> times(nt);
    std::vector<SpectralField> fields;
    fields.reserve(nt);
    for (int i = 0; i < nt; ++i) {
        times[i] = t_end * i / (nt - 1);
        fields.push_back(heat_semigroup(u0, times[i]));
    }
    return Trajectory(std::move(times), std::move(fields));
}

// Heat flow with a smooth random amplitude modulation, breaking the pure
// exponential time profile.
inline Trajectory modulated_trajectory(const SpectralField& u0, Rng& rng, double t_end,
                                       int nt) {
    std::uniform_real_distribution<double> unif(0.0, 2.0 * kPi);
    const double phase = unif(rng);
    const double freq = 1.0 + unif(rng) / (2.0 * kPi) * 3.0;
    std::vector<double> times(nt);
    std::vector<SpectralField> fields;
    fields.reserve(nt);
    for (int i = 0; i < nt; ++i) {
        times[i] = t_end * i / (nt - 1);
        SpectralField s = heat_semigroup(u0, times[i]);
        s *= 0.75 + 0.5 * std::sin(freq * times[i] + phase);
        fields.push_back(std::move(s));
    }
    return Trajectory(std::move(times), std::move(fields));
}

}  // namespace csns
