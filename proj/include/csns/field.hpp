#pragma once

#include <algorithm>
#include <complex>
#include <stdexcept>
#include <vector>

#include "csns/fft.hpp"
#include "csns/grid.hpp"

namespace csns {

using Complex = std::complex<double>;

// A vector field stored by its Fourier coefficients on a PeriodicGrid.
// Velocity fields have 3 components; pointwise tensor products produce
// 9-component fields which reuse the same norm machinery. Invariants
// maintained by construction: Hermitian symmetry (the physical field is
// real) and zero k=0 mode (constants are quotiented out). Fields are value
// types; every operation returns a new field.
class SpectralField {
public:
    SpectralField() = default;

    explicit SpectralField(const PeriodicGrid& g, int ncomp = 3)
        : grid_(g), comps_(ncomp, std::vector<Complex>(g.npoints())) {}

    const PeriodicGrid& grid() const { return grid_; }
    int ncomp() const { return static_cast<int>(comps_.size()); }
    std::size_t npoints() const { return grid_.npoints(); }

    std::vector<Complex>& comp(int c) { return comps_[c]; }
    const std::vector<Complex>& comp(int c) const { return comps_[c]; }

    Complex& at(int c, std::size_t i) { return comps_[c][i]; }
    const Complex& at(int c, std::size_t i) const { return comps_[c][i]; }

    bool divergence_free = false;

    SpectralField& operator+=(const SpectralField& o) {
        check_compatible(o);
        for (int c = 0; c < ncomp(); ++c)
            for (std::size_t i = 0; i < comps_[c].size(); ++i)
                comps_[c][i] += o.comps_[c][i];
        divergence_free = divergence_free && o.divergence_free;
        return *this;
    }

    SpectralField& operator-=(const SpectralField& o) {
        check_compatible(o);
        for (int c = 0; c < ncomp(); ++c)
            for (std::size_t i = 0; i < comps_[c].size(); ++i)
                comps_[c][i] -= o.comps_[c][i];
        divergence_free = divergence_free && o.divergence_free;
        return *this;
    }

    SpectralField& operator*=(double a) {
        for (auto& comp : comps_)
            for (auto& v : comp) v *= a;
        return *this;
    }

    friend SpectralField operator+(SpectralField a, const SpectralField& b) {
        a += b;
        return a;
    }
    friend SpectralField operator-(SpectralField a, const SpectralField& b) {
        a -= b;
        return a;
    }
    friend SpectralField operator*(double s, SpectralField a) {
        a *= s;
        return a;
    }

    void set_zero() {
        for (auto& comp : comps_) std::fill(comp.begin(), comp.end(), Complex(0));
    }

    void enforce_zero_mean() {
        for (auto& comp : comps_) comp[0] = Complex(0);
    }

    double mean_mode_abs() const {
        double m = 0.0;
        for (const auto& comp : comps_) m = std::max(m, std::abs(comp[0]));
        return m;
    }

    double max_abs_coeff() const {
        double m = 0.0;
        for (const auto& comp : comps_)
            for (const auto& v : comp) m = std::max(m, std::abs(v));
        return m;
    }

    // max_k |u_hat(k) - conj(u_hat(-k))|
    double hermitian_defect() const {
        const int n = grid_.n;
        double d = 0.0;
        for (int c = 0; c < ncomp(); ++c)
            for (int i0 = 0; i0 < n; ++i0)
                for (int i1 = 0; i1 < n; ++i1)
                    for (int i2 = 0; i2 < n; ++i2) {
                        const std::size_t a = grid_.index(i0, i1, i2);
                        const std::size_t b = grid_.index((n - i0) % n, (n - i1) % n,
                                                          (n - i2) % n);
                        d = std::max(d, std::abs(comps_[c][a] - std::conj(comps_[c][b])));
                    }
        return d;
    }

    void symmetrize_hermitian() {
        const int n = grid_.n;
        for (int c = 0; c < ncomp(); ++c)
            for (int i0 = 0; i0 < n; ++i0)
                for (int i1 = 0; i1 < n; ++i1)
                    for (int i2 = 0; i2 < n; ++i2) {
                        const std::size_t a = grid_.index(i0, i1, i2);
                        const std::size_t b = grid_.index((n - i0) % n, (n - i1) % n,
                                                          (n - i2) % n);
                        if (a > b) continue;
                        const Complex va = comps_[c][a];
                        const Complex vb = comps_[c][b];
                        const Complex h = 0.5 * (va + std::conj(vb));
                        comps_[c][a] = h;
                        comps_[c][b] = std::conj(h);
                        if (a == b) comps_[c][a] = Complex(h.real(), 0.0);
                    }
    }

    // max_k |k.u_hat(k)| / max_k |k||u_hat(k)|, the certificate quantity.
    double divergence_defect() const {
        if (ncomp() != 3) throw std::logic_error("divergence_defect: needs 3 components");
        const int n = grid_.n;
        double num = 0.0, den = 0.0;
        for (int i0 = 0; i0 < n; ++i0)
            for (int i1 = 0; i1 < n; ++i1)
                for (int i2 = 0; i2 < n; ++i2) {
                    const int k0 = grid_.freq_of(i0), k1 = grid_.freq_of(i1),
                              k2 = grid_.freq_of(i2);
                    const std::size_t i = grid_.index(i0, i1, i2);
                    const Complex dv = static_cast<double>(k0) * comps_[0][i] +
                                       static_cast<double>(k1) * comps_[1][i] +
                                       static_cast<double>(k2) * comps_[2][i];
                    const double kk = std::sqrt(static_cast<double>(k0) * k0 +
                                                static_cast<double>(k1) * k1 +
                                                static_cast<double>(k2) * k2);
                    const double uu = std::sqrt(std::norm(comps_[0][i]) +
                                                std::norm(comps_[1][i]) +
                                                std::norm(comps_[2][i]));
                    num = std::max(num, std::abs(dv));
                    den = std::max(den, kk * uu);
                }
        return den > 0.0 ? num / den : 0.0;
    }

private:
    void check_compatible(const SpectralField& o) const {
        if (!grid_.same_as(o.grid_) || ncomp() != o.ncomp())
            throw std::invalid_argument("field arithmetic: grid or component mismatch");
    }

    PeriodicGrid grid_;
    std::vector<std::vector<Complex>> comps_;
};

// Physical-space samples (real part after inverse transform; the imaginary
// part of a Hermitian field is roundoff and dropped).
inline std::vector<std::vector<double>> to_physical(const SpectralField& u) {
    const FftPlan& plan = FftPlan::get(u.grid().n);
    std::vector<std::vector<double>> out(u.ncomp());
    std::vector<Complex> buf(u.npoints());
    for (int c = 0; c < u.ncomp(); ++c) {
        buf = u.comp(c);
        plan.backward(buf.data());
        out[c].resize(buf.size());
        for (std::size_t i = 0; i < buf.size(); ++i) out[c][i] = buf[i].real();
    }
    return out;
}

inline SpectralField from_physical(const PeriodicGrid& g,
                                   const std::vector<std::vector<double>>& phys) {
    const FftPlan& plan = FftPlan::get(g.n);
    SpectralField u(g, static_cast<int>(phys.size()));
    std::vector<Complex> buf(g.npoints());
    for (std::size_t c = 0; c < phys.size(); ++c) {
        if (phys[c].size() != g.npoints())
            throw std::invalid_argument("from_physical: size mismatch");
        for (std::size_t i = 0; i < buf.size(); ++i) buf[i] = Complex(phys[c][i], 0.0);
        plan.forward(buf.data());
        u.comp(static_cast<int>(c)) = buf;
    }
    return u;
}

// L2 norm by Parseval: ||u||_2^2 = L^3 sum_k |u_hat(k)|^2.
inline double l2_norm(const SpectralField& u) {
    double s = 0.0;
    for (int c = 0; c < u.ncomp(); ++c)
        for (const auto& v : u.comp(c)) s += std::norm(v);
    const double L = u.grid().period;
    return std::sqrt(s * L * L * L);
}

inline double l2_distance(const SpectralField& a, const SpectralField& b) {
    SpectralField d = a;
    d -= b;
    return l2_norm(d);
}

}  // namespace csns
