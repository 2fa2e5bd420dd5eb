#pragma once

#include <cmath>
#include <complex>
#include <random>
#include <vector>

#include "wh/paraunitary.hpp"
#include "wh/weyl_heisenberg.hpp"

namespace testutil {

inline wh::ParaunitaryParams random_params(int L, int J, int degree, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> a(-3.14159, 3.14159);
  auto p = wh::ParaunitaryParams::zeros(L, J, degree);
  for (double& x : p.base_angles) x = a(rng);
  for (auto& s : p.stage_angles)
    for (double& x : s) x = a(rng);
  return p;
}

/// P random L x J paraunitary blocks with amplitude 1/sqrt(N).
inline std::vector<wh::PolyMatrix> random_blocks(const wh::GridParams& g, int degree, std::mt19937_64& rng) {
  std::vector<wh::PolyMatrix> b;
  for (int r = 0; r < g.P; ++r)
    b.push_back(wh::rect_paraunitary(random_params(g.L, g.J, degree, rng)).scaled(1.0 / std::sqrt(double(g.N))));
  return b;
}

inline wh::Waveform random_orthonormal(const wh::GridParams& g, int degree, std::mt19937_64& rng) {
  return wh::synthesize_from_blocks(random_blocks(g, degree, rng), g);
}

/// max |<phi_{k,i}, phi_{l,j}> - delta| over k, l < N and |i - j| <= reach,
/// with phi_{k,i}[n] = v[n - iK] e^{j 2 pi k (n - iK)/N}, summed sample by sample.
inline double brute_gram_defect(const wh::Waveform& v) {
  const int N = v.grid().N, K = v.grid().K;
  const int reach = v.length() / K + 1;
  const double two_pi = 2.0 * 3.14159265358979323846;
  double worst = 0.0;
  for (int di = -reach; di <= reach; ++di)
    for (int k = 0; k < N; ++k)
      for (int l = 0; l < N; ++l) {
        std::complex<double> acc = 0.0;
        for (int n = v.first(); n <= v.last(); ++n) {
          const double a = v.at(n), b = v.at(n - di * K);
          if (a == 0.0 || b == 0.0) continue;
          acc += a * b * std::polar(1.0, two_pi * (double(l) * (n - di * K) - double(k) * n) / N);
        }
        const double target = (di == 0 && k == l) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(acc - target));
      }
  return worst;
}

}  // namespace testutil

namespace testutil {

/// max over k, l < N and |i - j| <= reach of
/// | sum_n w[n - jK] e^{-j 2 pi k (n - jK)/N} v[n - iK] e^{j 2 pi l (n - iK)/N} - delta delta |.
inline double brute_biorth_defect(const wh::Waveform& v, const wh::Waveform& w, int reach, int tone_reach = -1) {
  const int N = v.grid().N, K = v.grid().K;
  const double two_pi = 2.0 * 3.14159265358979323846;
  double worst = 0.0;
  for (int di = -reach; di <= reach; ++di)
    for (int k = 0; k < N; ++k)
      for (int l = 0; l < N; ++l) {
        if (tone_reach >= 0) {
          const int d = std::abs(k - l);
          if (std::min(d, N - d) > tone_reach) continue;
        }
        std::complex<double> acc = 0.0;
        const int lo = std::max(w.first(), v.first() + di * K), hi = std::min(w.last(), v.last() + di * K);
        for (int n = lo; n <= hi; ++n) {
          const double a = w.at(n), b = v.at(n - di * K);
          if (a == 0.0 || b == 0.0) continue;
          acc += a * b * std::polar(1.0, two_pi * (double(l) * (n - di * K) - double(k) * n) / N);
        }
        const double target = (di == 0 && k == l) ? 1.0 : 0.0;
        worst = std::max(worst, std::abs(acc - target));
      }
  return worst;
}

}  // namespace testutil

#include <numbers>

#include "wh/transmux.hpp"

namespace testutil {

struct McEstimate {
  double mean = 0.0;
  double standard_error = 0.0;
};

/// Monte-Carlo mean of |interference|^2 at tone k of frame 0: QPSK symbols on
/// every other lattice point, r_0 = 1 and independent complex Gaussian taps
/// r_l with variance powers[l], received signal
///   e^{j 2 pi ef n / N} sum_l r_l s[n - d_l + et]
/// demultiplexed with w by direct summation.
inline McEstimate mc_interference(const wh::Waveform& v, const wh::Waveform& w, const wh::ChannelStats& stats,
                                  int eps_t, double eps_f, int draws, std::mt19937_64& rng, int k = 1) {
  using cd = std::complex<double>;
  const int N = v.grid().N, K = v.grid().K;
  const double two_pi = 2.0 * std::numbers::pi;
  const int Q = (v.length() + w.length() + stats.max_delay() + std::abs(eps_t)) / K + 2;
  const std::size_t D = stats.delays.size();
  // response of tone k at frame 0 to a unit symbol at (i, kp) through path l
  std::vector<cd> resp;
  for (int i = -Q; i <= Q; ++i)
    for (int kp = 0; kp < N; ++kp)
      for (std::size_t l = 0; l < D; ++l) {
        cd acc = 0;
        for (int n = w.first(); n <= w.last(); ++n) {
          const int m = n - stats.delays[l] + eps_t - i * K;
          const double vv = v.at(m);
          if (vv == 0.0) continue;
          acc += w.at(n) * vv * std::polar(1.0, two_pi * (double(kp) * m - double(k) * n + eps_f * n) / N);
        }
        resp.push_back(acc);
      }
  std::uniform_int_distribution<int> qpsk(0, 3);
  std::vector<std::normal_distribution<double>> tap;
  for (std::size_t l = 0; l < D; ++l) tap.emplace_back(0.0, std::sqrt(stats.powers[l] / 2.0));
  std::vector<cd> r(D);
  double sum = 0.0, sum2 = 0.0;
  for (int t = 0; t < draws; ++t) {
    r[0] = 1.0;
    for (std::size_t l = 1; l < D; ++l) {
      const double re = tap[l](rng);
      const double im = tap[l](rng);
      r[l] = {re, im};
    }
    cd b = 0;
    std::size_t idx = 0;
    for (int i = -Q; i <= Q; ++i)
      for (int kp = 0; kp < N; ++kp) {
        const cd a = std::polar(1.0, std::numbers::pi / 2 * qpsk(rng) + std::numbers::pi / 4);
        for (std::size_t l = 0; l < D; ++l, ++idx)
          if (!(i == 0 && kp == k)) b += a * r[l] * resp[idx];
      }
    const double e = std::norm(b);
    sum += e;
    sum2 += e * e;
  }
  McEstimate out;
  out.mean = sum / draws;
  out.standard_error = std::sqrt(std::max(0.0, sum2 / draws - out.mean * out.mean) / draws);
  return out;
}

}  // namespace testutil
