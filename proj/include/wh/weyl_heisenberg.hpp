#pragma once

// Polyphase structure of Weyl-Heisenberg sets
//   phi_{k,i}[n] = v[n - iK] exp(j 2 pi k (n - iK) / N)
// and the equivalent orthonormality tests.
//
// With M = lcm(N, K), the M-component polyphase representation
//   V_j(z) = sum_n v[j + nM] z^-n
// lands in a K x N matrix V(z) whose nonzero entries split into P = gcd(N, K)
// independent L x J blocks. The set is orthonormal exactly when each block is
// paraunitary, so arbitrary paraunitary blocks interleave into orthonormal
// waveforms.

#include <cmath>
#include <map>
#include <random>
#include <span>
#include <stdexcept>
#include <vector>

#include "wh/grid.hpp"
#include "wh/laurent.hpp"
#include "wh/waveform.hpp"

namespace wh {

/// Components V_0 .. V_{M-1}, with exponents taken from absolute tap indices.
inline std::vector<LaurentPoly> polyphase_decompose(const Waveform& v) {
  const int M = v.grid().M;
  std::vector<LaurentPoly> out(static_cast<std::size_t>(M));
  if (v.length() == 0) return out;
  for (int j = 0; j < M; ++j) {
    // smallest m with j + mM >= first, largest with j + mM <= last
    const int m_lo = static_cast<int>(std::ceil(static_cast<double>(v.first() - j) / M));
    const int m_hi = static_cast<int>(std::floor(static_cast<double>(v.last() - j) / M));
    if (m_hi < m_lo) continue;
    std::vector<double> c(static_cast<std::size_t>(m_hi - m_lo + 1));
    for (int m = m_lo; m <= m_hi; ++m) c[static_cast<std::size_t>(m - m_lo)] = v.at(j + m * M);
    out[static_cast<std::size_t>(j)] = LaurentPoly(std::move(c), m_lo);
  }
  return out;
}

/// Inverse of polyphase_decompose: v[j + nM] = coefficient of z^-n in V_j.
/// Returns the samples starting at `first` (empty when all components vanish).
struct Samples {
  std::vector<double> values;
  int first = 0;
};

inline Samples interleave_components(std::span<const LaurentPoly> comps, int M) {
  bool any = false;
  int lo = 0, hi = 0;
  for (int j = 0; j < static_cast<int>(comps.size()); ++j) {
    const auto& c = comps[static_cast<std::size_t>(j)];
    if (c.is_zero()) continue;
    const int a = j + c.min_deg() * M;
    const int b = j + c.max_deg() * M;
    if (!any) {
      lo = a;
      hi = b;
      any = true;
    } else {
      lo = std::min(lo, a);
      hi = std::max(hi, b);
    }
  }
  Samples s;
  if (!any) return s;
  s.first = lo;
  s.values.assign(static_cast<std::size_t>(hi - lo + 1), 0.0);
  for (int j = 0; j < static_cast<int>(comps.size()); ++j) {
    const auto& c = comps[static_cast<std::size_t>(j)];
    for (int d = c.min_deg(); d <= c.max_deg(); ++d)
      s.values[static_cast<std::size_t>(j + d * M - lo)] = c.coeff(d);
  }
  return s;
}

/// The K x N matrix V(z) with M(z) = V(z) F_N.
inline PolyMatrix build_V(const Waveform& v) {
  const GridParams& g = v.grid();
  const auto comps = polyphase_decompose(v);
  PolyMatrix m(g.K, g.N);
  for (int r = 0; r < g.P; ++r)
    for (int i = 0; i < g.L; ++i)
      for (int j = 0; j < g.J; ++j) {
        const int p = index_maps(g, i, j).p;
        m(i * g.P + r, j * g.P + r) = comps[static_cast<std::size_t>(p * g.K + i * g.P + r)].upsampled(g.J).shifted(p);
      }
  return m;
}

/// The P blocks V_r^o(z), each L x J:  [V_r^o]_{i,j} = z^{n(i,j)} V_{p(i,j)K + iP + r}(z).
inline std::vector<PolyMatrix> extract_blocks(const Waveform& v) {
  const GridParams& g = v.grid();
  const auto comps = polyphase_decompose(v);
  std::vector<PolyMatrix> blocks(static_cast<std::size_t>(g.P), PolyMatrix(g.L, g.J));
  for (int i = 0; i < g.L; ++i)
    for (int j = 0; j < g.J; ++j) {
      const IndexMap im = index_maps(g, i, j);
      for (int r = 0; r < g.P; ++r)
        blocks[static_cast<std::size_t>(r)](i, j) =
            comps[static_cast<std::size_t>(im.p * g.K + i * g.P + r)].shifted(-im.n);
    }
  return blocks;
}

namespace detail {

inline std::vector<LaurentPoly> components_from_blocks(std::span<const PolyMatrix> blocks, const GridParams& g) {
  if (static_cast<int>(blocks.size()) != g.P)
    throw std::invalid_argument("expected " + std::to_string(g.P) + " blocks, got " + std::to_string(blocks.size()));
  std::vector<LaurentPoly> comps(static_cast<std::size_t>(g.M));
  for (int r = 0; r < g.P; ++r) {
    const PolyMatrix& b = blocks[static_cast<std::size_t>(r)];
    if (b.rows() != g.L || b.cols() != g.J)
      throw std::invalid_argument("block " + std::to_string(r) + " must be " + std::to_string(g.L) + "x" +
                                  std::to_string(g.J));
    for (int i = 0; i < g.L; ++i)
      for (int j = 0; j < g.J; ++j) {
        const IndexMap im = index_maps(g, i, j);
        comps[static_cast<std::size_t>(im.p * g.K + i * g.P + r)] = b(i, j).shifted(im.n);
      }
  }
  return comps;
}

}  // namespace detail

/// Interleaves blocks at the absolute positions their exponents imply.
/// Used where two waveforms must share one time reference (v and its
/// demultiplexing partner).
inline Waveform interleave_blocks(std::span<const PolyMatrix> blocks, const GridParams& g) {
  const auto comps = detail::components_from_blocks(blocks, g);
  Samples s = interleave_components(comps, g.M);
  if (s.values.empty()) throw std::invalid_argument("interleave_blocks: all blocks are zero");
  return Waveform(std::move(s.values), s.first, g);
}

/// Inverse of extract_blocks. The result is moved by a whole number of
/// M-sample periods (a common delay on every block entry) so that its first
/// tap lands in [0, M).
inline Waveform synthesize_from_blocks(std::span<const PolyMatrix> blocks, const GridParams& g) {
  Waveform w = interleave_blocks(blocks, g);
  const int periods = static_cast<int>(std::floor(static_cast<double>(w.first()) / g.M));
  return w.delayed(-periods * g.M);
}

/// max over n in [0, N) and lags j of | sum_i v[n+iN] v[n+iN+jK] - delta[j]/N |.
inline double orthonormality_defect(const Waveform& v) {
  const GridParams& g = v.grid();
  const int N = g.N, K = g.K;
  double defect = 0.0;
  const int span = v.length();
  const int max_lag = span / K + 1;
  for (int n = 0; n < N; ++n) {
    // i range where n + iN hits the support
    const int i_lo = static_cast<int>(std::floor(static_cast<double>(v.first() - n) / N));
    const int i_hi = static_cast<int>(std::ceil(static_cast<double>(v.last() - n) / N));
    for (int j = -max_lag; j <= max_lag; ++j) {
      double acc = 0.0;
      for (int i = i_lo; i <= i_hi; ++i) acc += v.at(n + i * N) * v.at(n + i * N + j * K);
      const double target = j == 0 ? 1.0 / N : 0.0;
      defect = std::max(defect, std::abs(acc - target));
    }
  }
  return defect;
}

/// Single-frame orthonormal windows (K <= 2N) from K - N angles.
inline Waveform short_window(const GridParams& g, std::span<const double> angles) {
  if (g.K > 2 * g.N)
    throw std::invalid_argument("short_window: requires K <= 2N (K=" + std::to_string(g.K) +
                                ", N=" + std::to_string(g.N) + ")");
  if (static_cast<int>(angles.size()) != g.guard)
    throw std::invalid_argument("short_window: expected " + std::to_string(g.guard) + " angles");
  const double a = 1.0 / std::sqrt(static_cast<double>(g.N));
  std::vector<double> t(static_cast<std::size_t>(g.K));
  for (int n = 0; n < g.K; ++n) {
    double x;
    if (n < g.guard)
      x = std::cos(angles[static_cast<std::size_t>(n)]);
    else if (n < g.N)
      x = 1.0;
    else
      x = std::sin(angles[static_cast<std::size_t>(n - g.N)]);
    t[static_cast<std::size_t>(n)] = a * x;
  }
  return Waveform(std::move(t), 0, g);
}

inline Waveform rectangular_window(const GridParams& g, int length, double amplitude, int offset = 0) {
  return Waveform(std::vector<double>(static_cast<std::size_t>(length), amplitude), offset, g);
}

/// Frame operator of  xi_{k,i}[n] = v[n - iN] exp(j 2 pi k (n - iN) / K),  k in Z_K.
/// Summing over k folds the analysis modulo K:
///   (S x)[n] = K sum_i v[n - iN] sum_{m = n mod K} v[m - iN] x[m].
/// `x` starts at absolute index x_first; the result covers [out_first, out_first + size).
struct FrameOutput {
  std::vector<double> values;
  int first = 0;
};

inline FrameOutput dual_frame_operator(const Waveform& v, std::span<const double> x, int x_first) {
  const GridParams& g = v.grid();
  const int N = g.N, K = g.K;
  const int x_last = x_first + static_cast<int>(x.size()) - 1;
  FrameOutput out;
  out.first = x_first - v.length() - K;
  const int out_last = x_last + v.length() + K;
  out.values.assign(static_cast<std::size_t>(out_last - out.first + 1), 0.0);
  // translates i with v[m - iN] overlapping x
  const int i_lo = static_cast<int>(std::floor(static_cast<double>(x_first - v.last()) / N)) - 1;
  const int i_hi = static_cast<int>(std::ceil(static_cast<double>(x_last - v.first()) / N)) + 1;
  std::vector<double> fold(static_cast<std::size_t>(K));
  for (int i = i_lo; i <= i_hi; ++i) {
    std::fill(fold.begin(), fold.end(), 0.0);
    bool any = false;
    for (int m = x_first; m <= x_last; ++m) {
      const double vv = v.at(m - i * N);
      if (vv == 0.0) continue;
      fold[static_cast<std::size_t>(detail::mod(m - i * N, K))] += vv * x[static_cast<std::size_t>(m - x_first)];
      any = true;
    }
    if (!any) continue;
    for (int t = 0; t < v.length(); ++t) {
      const int n = v.first() + t + i * N;
      if (n < out.first || n > out_last) continue;
      out.values[static_cast<std::size_t>(n - out.first)] +=
          K * v.taps()[static_cast<std::size_t>(t)] * fold[static_cast<std::size_t>(detail::mod(v.first() + t, K))];
    }
  }
  return out;
}

/// Probes the dual-lattice frame operator with random signals and returns the
/// largest deviation of S x from (K/N) x, the frame bound an orthonormal
/// primal set forces.
inline double tight_frame_defect(const Waveform& v, int trials, unsigned long long rng_seed) {
  if (trials < 2) throw std::invalid_argument("tight_frame_defect: trials must be >= 2");
  const GridParams& g = v.grid();
  const double bound = static_cast<double>(g.K) / g.N;
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss;
  std::uniform_int_distribution<int> start(-g.M, g.M);
  const int len = std::max(4 * g.K, 64);
  double defect = 0.0;
  std::vector<double> x(static_cast<std::size_t>(len));
  for (int t = 0; t < trials; ++t) {
    for (double& s : x) s = gauss(rng);
    const int x_first = start(rng);
    const FrameOutput sx = dual_frame_operator(v, x, x_first);
    for (int k = 0; k < static_cast<int>(sx.values.size()); ++k) {
      const int n = sx.first + k;
      const int xi = n - x_first;
      const double xn = (xi >= 0 && xi < len) ? x[static_cast<std::size_t>(xi)] : 0.0;
      defect = std::max(defect, std::abs(sx.values[static_cast<std::size_t>(k)] - bound * xn));
    }
  }
  return defect;
}

/// <S x, x> / <x, x> for one random probe.
inline double frame_bound_estimate(const Waveform& v, unsigned long long rng_seed) {
  std::mt19937_64 rng(rng_seed);
  std::normal_distribution<double> gauss;
  std::vector<double> x(static_cast<std::size_t>(std::max(4 * v.grid().K, 64)));
  for (double& s : x) s = gauss(rng);
  const FrameOutput sx = dual_frame_operator(v, x, 0);
  double num = 0.0, den = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    num += sx.values[static_cast<std::size_t>(static_cast<int>(k) - sx.first)] * x[k];
    den += x[k] * x[k];
  }
  return num / den;
}

}  // namespace wh
