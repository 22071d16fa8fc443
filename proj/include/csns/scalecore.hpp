#pragma once

#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "csns/operators.hpp"
#include "csns/trajectory.hpp"

namespace csns {

// One (lambda, x) element of a scale/core sequence. Scales are restricted to
// exact dyadic powers lambda = 2^{-m} so that rescaling is lossless on the
// torus; cores are reduced mod the box period when applied.
struct ScaleCore {
    int m = 0;                          // lambda = 2^{-m}
    std::array<double, 3> x = {0, 0, 0};

    double lambda() const { return std::ldexp(1.0, -m); }

    bool is_identity() const {
        return m == 0 && x[0] == 0.0 && x[1] == 0.0 && x[2] == 0.0;
    }

    static ScaleCore from_lambda(double lam, const std::array<double, 3>& x0 = {0, 0, 0}) {
        if (!(lam > 0.0)) throw std::invalid_argument("ScaleCore: lambda must be positive");
        const double m = -std::log2(lam);
        const double mr = std::round(m);
        if (std::abs(m - mr) > 1e-12 || std::ldexp(1.0, -static_cast<int>(mr)) != lam)
            throw std::invalid_argument(
                "ScaleCore: lambda must be an exact dyadic power 2^{-m}");
        return ScaleCore{static_cast<int>(mr), x0};
    }
};

using ScaleCoreSeq = std::vector<ScaleCore>;

inline std::array<double, 3> reduce_mod_period(const std::array<double, 3>& x, double L) {
    std::array<double, 3> r;
    for (int d = 0; d < 3; ++d) {
        r[d] = std::fmod(x[d], L);
        if (r[d] < 0.0) r[d] += L;
    }
    return r;
}

inline double min_image_distance(const std::array<double, 3>& a,
                                 const std::array<double, 3>& b, double L) {
    double s = 0.0;
    for (int d = 0; d < 3; ++d) {
        double dd = std::fmod(a[d] - b[d], L);
        if (dd < -L / 2) dd += L;
        if (dd > L / 2) dd -= L;
        s += dd * dd;
    }
    return std::sqrt(s);
}

// lambda1/lambda2 + lambda2/lambda1 + |x1-x2|/lambda1 at sequence index n;
// divergence of this value along n is the orthogonality of the two sequences.
inline double orthogonality_value(const ScaleCoreSeq& a, const ScaleCoreSeq& b,
                                  std::size_t n, double period) {
    if (n >= a.size() || n >= b.size())
        throw std::invalid_argument("orthogonality_value: index out of range");
    const double ratio = std::ldexp(1.0, b[n].m - a[n].m);  // lambda1/lambda2
    const double dist = min_image_distance(a[n].x, b[n].x, period);
    return ratio + 1.0 / ratio + dist / a[n].lambda();
}

// Lambda_sc u(x) = lambda^{-1} u((x - x_sc)/lambda): exact dyadic dilation
// plus phase translation. m may be negative (expansion), in which case the
// input must live on the matching frequency lattice.
inline SpectralField apply_lambda(const SpectralField& u, const ScaleCore& sc,
                                  bool allow_truncation = false) {
    const auto xr = reduce_mod_period(sc.x, u.grid().period);
    return dyadic_dilate(u, sc.m, xr, allow_truncation);
}

// Lambda^{-1}_sc f(y) = lambda f(lambda y + x_sc). Refuses inputs whose
// support is not representable after the expansion.
inline SpectralField apply_lambda_inverse(const SpectralField& u, const ScaleCore& sc,
                                          bool allow_truncation = false) {
    const auto xr = reduce_mod_period(sc.x, u.grid().period);
    const double s = std::ldexp(1.0, sc.m);  // lambda^{-1}
    const std::array<double, 3> x0 = {-xr[0] * s, -xr[1] * s, -xr[2] * s};
    return dyadic_dilate(u, -sc.m, x0, allow_truncation);
}

// Trajectory version: time relabels as t -> lambda^2 t and each slice is
// rescaled in space; the sample mesh transforms exactly, no resampling.
inline Trajectory apply_lambda(const Trajectory& tr, const ScaleCore& sc,
                               bool allow_truncation = false) {
    const double l2 = std::ldexp(1.0, -2 * sc.m);
    std::vector<double> times(tr.size());
    std::vector<SpectralField> fields;
    fields.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        times[i] = tr.times()[i] * l2;
        fields.push_back(apply_lambda(tr.field(i), sc, allow_truncation));
    }
    return Trajectory(std::move(times), std::move(fields));
}

inline Trajectory apply_lambda_inverse(const Trajectory& tr, const ScaleCore& sc,
                                       bool allow_truncation = false) {
    const double l2 = std::ldexp(1.0, 2 * sc.m);
    std::vector<double> times(tr.size());
    std::vector<SpectralField> fields;
    fields.reserve(tr.size());
    for (std::size_t i = 0; i < tr.size(); ++i) {
        times[i] = tr.times()[i] * l2;
        fields.push_back(apply_lambda_inverse(tr.field(i), sc, allow_truncation));
    }
    return Trajectory(std::move(times), std::move(fields));
}

}  // namespace csns
