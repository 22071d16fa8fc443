#pragma once

#include "csns/norms.hpp"
#include "csns/operators.hpp"

namespace csns {

// A time-independent force stored through its potential g = laplacian^{-1} f,
// with the cached smallness handle ||laplacian^{-1} f||_{L^3}. f itself is
// recovered exactly in Fourier space as laplacian(g).
struct ForceSpec {
    SpectralField potential;  // g
    double l3_size = 0.0;

    bool is_zero() const { return l3_size == 0.0 && potential.max_abs_coeff() == 0.0; }

    SpectralField force() const { return laplacian(potential); }

    double recompute_l3() const { return lp_norm(potential, 3.0); }
};

inline ForceSpec make_force_from_potential(const SpectralField& g) {
    if (g.mean_mode_abs() > 0.0)
        throw std::invalid_argument("make_force_from_potential: potential must have zero mean");
    ForceSpec f;
    f.potential = leray_project(g);
    f.l3_size = lp_norm(f.potential, 3.0);
    return f;
}

inline ForceSpec make_force_from_field(const SpectralField& f_field) {
    ForceSpec f;
    f.potential = leray_project(inverse_laplacian(f_field));
    f.l3_size = lp_norm(f.potential, 3.0);
    return f;
}

inline ForceSpec zero_force(const PeriodicGrid& g) {
    ForceSpec f;
    f.potential = SpectralField(g, 3);
    f.potential.divergence_free = true;
    f.l3_size = 0.0;
    return f;
}

}  // namespace csns
