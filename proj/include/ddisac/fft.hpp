#pragma once

// Thin FFTW3 wrapper. Plans are cached per thread and per (size, direction);
// planning itself is serialized because the FFTW planner is not reentrant.

#include <fftw3.h>

#include <algorithm>
#include <complex>
#include <cstddef>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <utility>

namespace ddisac {

using cplx = std::complex<double>;

namespace fft {

namespace detail {

inline std::mutex& planner_mutex() {
    static std::mutex m;
    return m;
}

class Plan {
public:
    Plan(std::size_t n, int sign) : n_(n) {
        std::lock_guard lock(planner_mutex());
        buffer_ = static_cast<fftw_complex*>(fftw_malloc(sizeof(fftw_complex) * n));
        plan_ = fftw_plan_dft_1d(static_cast<int>(n), buffer_, buffer_, sign, FFTW_ESTIMATE);
    }
    Plan(const Plan&) = delete;
    Plan& operator=(const Plan&) = delete;
    ~Plan() {
        std::lock_guard lock(planner_mutex());
        fftw_destroy_plan(plan_);
        fftw_free(buffer_);
    }

    void execute(std::span<cplx> data) {
        auto* buf = reinterpret_cast<cplx*>(buffer_);
        std::copy(data.begin(), data.end(), buf);
        fftw_execute(plan_);
        std::copy(buf, buf + n_, data.begin());
    }

private:
    std::size_t n_;
    fftw_complex* buffer_ = nullptr;
    fftw_plan plan_ = nullptr;
};

inline Plan& plan_for(std::size_t n, int sign) {
    thread_local std::map<std::pair<std::size_t, int>, std::unique_ptr<Plan>> cache;
    auto key = std::make_pair(n, sign);
    auto it = cache.find(key);
    if (it == cache.end()) {
        it = cache.emplace(key, std::make_unique<Plan>(n, sign)).first;
    }
    return *it->second;
}

}  // namespace detail

/// In-place unnormalized forward DFT: X[k] = sum_n x[n] exp(-j 2 pi n k / n).
inline void forward(std::span<cplx> data) {
    if (data.size() <= 1) return;
    detail::plan_for(data.size(), FFTW_FORWARD).execute(data);
}

/// In-place unnormalized inverse DFT: x[n] = sum_k X[k] exp(+j 2 pi n k / n).
inline void inverse(std::span<cplx> data) {
    if (data.size() <= 1) return;
    detail::plan_for(data.size(), FFTW_BACKWARD).execute(data);
}

inline std::size_t next_pow2(std::size_t n) {
    std::size_t p = 1;
    while (p < n) p <<= 1;
    return p;
}

}  // namespace fft
}  // namespace ddisac
