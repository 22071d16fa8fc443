#pragma once

#include <complex>
#include <map>
#include <memory>
#include <mutex>
#include <vector>

#include <fftw3.h>

#include "csns/grid.hpp"

namespace csns {

// Cached per-size FFTW plans for in-place 3D complex transforms.
// Plans are created with FFTW_ESTIMATE (deterministic plan selection) and
// FFTW_UNALIGNED so they can be executed on any buffer. The planner is
// guarded by a mutex; execution is thread-safe.
//
// Convention: u(x) = sum_k u_hat(k) e^{i xi_k . x}, so
//   forward  = physical -> coefficients (DFT scaled by 1/n^3)
//   backward = coefficients -> physical (plain inverse DFT, unscaled)
class FftPlan {
public:
    static const FftPlan& get(int n) {
        static std::mutex mu;
        static std::map<int, std::unique_ptr<FftPlan>> cache;
        std::lock_guard<std::mutex> lock(mu);
        auto it = cache.find(n);
        if (it == cache.end())
            it = cache.emplace(n, std::unique_ptr<FftPlan>(new FftPlan(n))).first;
        return *it->second;
    }

    void forward(std::complex<double>* a) const {
        fftw_execute_dft(fwd_, reinterpret_cast<fftw_complex*>(a),
                         reinterpret_cast<fftw_complex*>(a));
        const double s = 1.0 / static_cast<double>(npts_);
        for (std::size_t i = 0; i < npts_; ++i) a[i] *= s;
    }

    void backward(std::complex<double>* a) const {
        fftw_execute_dft(bwd_, reinterpret_cast<fftw_complex*>(a),
                         reinterpret_cast<fftw_complex*>(a));
    }

    FftPlan(const FftPlan&) = delete;
    FftPlan& operator=(const FftPlan&) = delete;

    ~FftPlan() {
        fftw_destroy_plan(fwd_);
        fftw_destroy_plan(bwd_);
        fftw_free(buf_);
    }

private:
    explicit FftPlan(int n) : npts_(static_cast<std::size_t>(n) * n * n) {
        buf_ = fftw_alloc_complex(npts_);
        // FFTW's FORWARD sign is e^{-i k x}, matching our analysis transform.
        fwd_ = fftw_plan_dft_3d(n, n, n, buf_, buf_, FFTW_FORWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
        bwd_ = fftw_plan_dft_3d(n, n, n, buf_, buf_, FFTW_BACKWARD,
                                FFTW_ESTIMATE | FFTW_UNALIGNED);
    }

    std::size_t npts_;
    fftw_complex* buf_;
    fftw_plan fwd_;
    fftw_plan bwd_;
};

}  // namespace csns
