#pragma once

// Thin FFTW wrapper. Plans are created once per (size, direction) under a
// mutex; execution uses the new-array interface and is thread-safe.

#include <fftw3.h>

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

namespace wh {

using cplx = std::complex<double>;

namespace detail {

class PlanCache {
 public:
  static PlanCache& instance() {
    static PlanCache cache;
    return cache;
  }

  fftw_plan get(int n, int sign) {
    std::lock_guard<std::mutex> lock(mu_);
    auto key = std::make_pair(n, sign);
    auto it = plans_.find(key);
    if (it != plans_.end()) return it->second;
    std::vector<cplx> in(static_cast<std::size_t>(n)), out(static_cast<std::size_t>(n));
    fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(in.data()),
                                   reinterpret_cast<fftw_complex*>(out.data()), sign,
                                   FFTW_ESTIMATE | FFTW_UNALIGNED);
    if (!p) throw std::runtime_error("fftw: plan creation failed");
    plans_.emplace(key, p);
    return p;
  }

  PlanCache(const PlanCache&) = delete;
  PlanCache& operator=(const PlanCache&) = delete;

 private:
  PlanCache() = default;
  ~PlanCache() {
    for (auto& kv : plans_) fftw_destroy_plan(kv.second);
  }

  std::mutex mu_;
  std::map<std::pair<int, int>, fftw_plan> plans_;
};

}  // namespace detail

/// Unnormalized forward DFT: X[k] = sum_n x[n] e^{-j 2 pi k n / n_total}.
inline void fft_forward(const std::vector<cplx>& in, std::vector<cplx>& out) {
  const int n = static_cast<int>(in.size());
  out.resize(in.size());
  if (n == 0) return;
  fftw_plan p = detail::PlanCache::instance().get(n, FFTW_FORWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

/// Unnormalized inverse DFT: x[n] = sum_k X[k] e^{+j 2 pi k n / n_total}.
inline void fft_inverse(const std::vector<cplx>& in, std::vector<cplx>& out) {
  const int n = static_cast<int>(in.size());
  out.resize(in.size());
  if (n == 0) return;
  fftw_plan p = detail::PlanCache::instance().get(n, FFTW_BACKWARD);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(const_cast<cplx*>(in.data())),
                   reinterpret_cast<fftw_complex*>(out.data()));
}

}  // namespace wh
