#pragma once

// OFDM multiplexer / demultiplexer, the crossambiguity function and the
// expected squared interference under multipath, frequency offset and
// timing mismatch.
//
// Conventions: the multiplexer uses phi_k[n] = v[n] e^{j 2 pi k n / N}, the
// demultiplexer projects onto psi_k[n - iK] with psi_k[n] = w[n] e^{j 2 pi k n / N}:
//   s[n]    = sum_i sum_k a_k[i] v[n - iK] e^{j 2 pi k (n - iK) / N}
//   b_k[i]  = sum_n w[n - iK] e^{-j 2 pi k (n - iK) / N} s[n]
// so the orthogonal demultiplexing prototype of an orthonormal v is v itself.

#include <cmath>
#include <complex>
#include <numbers>
#include <ostream>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "wh/fft.hpp"
#include "wh/grid.hpp"
#include "wh/waveform.hpp"

namespace wh {

/// a_k[i], row-major (num_frames x N).
class SymbolFrames {
 public:
  SymbolFrames() = default;
  SymbolFrames(int num_frames, int N)
      : frames_(num_frames), N_(N), data_(static_cast<std::size_t>(num_frames) * static_cast<std::size_t>(N)) {
    if (num_frames < 0 || N < 1) throw std::invalid_argument("SymbolFrames: bad shape");
  }

  int num_frames() const { return frames_; }
  int N() const { return N_; }

  cplx& operator()(int i, int k) { return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(N_) + static_cast<std::size_t>(k)]; }
  cplx operator()(int i, int k) const {
    return data_[static_cast<std::size_t>(i) * static_cast<std::size_t>(N_) + static_cast<std::size_t>(k)];
  }

  std::span<const cplx> frame(int i) const {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N_), static_cast<std::size_t>(N_)};
  }
  std::span<cplx> frame(int i) {
    return {data_.data() + static_cast<std::size_t>(i) * static_cast<std::size_t>(N_), static_cast<std::size_t>(N_)};
  }

  const std::vector<cplx>& data() const { return data_; }

 private:
  int frames_ = 0;
  int N_ = 1;
  std::vector<cplx> data_;
};

/// Complex baseband samples starting at absolute index `first`.
struct Signal {
  std::vector<cplx> samples;
  int first = 0;

  int last() const { return first + static_cast<int>(samples.size()) - 1; }
  cplx at(int n) const {
    const int k = n - first;
    if (k < 0 || k >= static_cast<int>(samples.size())) return {};
    return samples[static_cast<std::size_t>(k)];
  }
  double energy() const {
    double e = 0.0;
    for (const auto& s : samples) e += std::norm(s);
    return e;
  }
  /// Same samples embedded in [lo, hi] (zero filled).
  Signal widened(int lo, int hi) const {
    Signal out;
    out.first = std::min(lo, first);
    const int end = std::max(hi, last());
    out.samples.assign(static_cast<std::size_t>(end - out.first + 1), cplx{});
    for (std::size_t k = 0; k < samples.size(); ++k) out.samples[static_cast<std::size_t>(first - out.first) + k] = samples[k];
    return out;
  }
};

namespace detail {

inline int pmod(int a, int m) {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

inline void check_frames(const SymbolFrames& a, const Waveform& v) {
  if (a.N() != v.grid().N)
    throw std::invalid_argument("multiplex: frame width " + std::to_string(a.N()) + " != N=" + std::to_string(v.grid().N));
}

inline Signal empty_signal(const SymbolFrames& a, const Waveform& v) {
  Signal s;
  if (a.num_frames() == 0) return s;
  s.first = v.first();
  s.samples.assign(static_cast<std::size_t>((a.num_frames() - 1) * v.grid().K + v.length()), cplx{});
  return s;
}

}  // namespace detail

/// Direct evaluation of the multiplexer sum.
inline Signal multiplex(const SymbolFrames& a, const Waveform& v) {
  detail::check_frames(a, v);
  const GridParams& g = v.grid();
  Signal s = detail::empty_signal(a, v);
  const double w0 = 2.0 * std::numbers::pi / g.N;
  for (int i = 0; i < a.num_frames(); ++i)
    for (int t = 0; t < v.length(); ++t) {
      const int m = v.first() + t;  // n - iK
      const double vt = v.taps()[static_cast<std::size_t>(t)];
      if (vt == 0.0) continue;
      cplx acc{};
      for (int k = 0; k < g.N; ++k) {
        const cplx ak = a(i, k);
        if (ak == cplx{}) continue;
        acc += ak * std::polar(1.0, w0 * static_cast<double>(detail::pmod(k * m, g.N)));
      }
      s.samples[static_cast<std::size_t>(i * g.K + t)] += vt * acc;
    }
  return s;
}

/// Same output as multiplex: a per-frame N-point inverse DFT followed by
/// polyphase weighting with the periodically extended window.
inline Signal fft_multiplex(const SymbolFrames& a, const Waveform& v) {
  detail::check_frames(a, v);
  const GridParams& g = v.grid();
  Signal s = detail::empty_signal(a, v);
  std::vector<cplx> in(static_cast<std::size_t>(g.N)), x;
  for (int i = 0; i < a.num_frames(); ++i) {
    auto f = a.frame(i);
    std::copy(f.begin(), f.end(), in.begin());
    fft_inverse(in, x);
    for (int t = 0; t < v.length(); ++t)
      s.samples[static_cast<std::size_t>(i * g.K + t)] +=
          v.taps()[static_cast<std::size_t>(t)] * x[static_cast<std::size_t>(detail::pmod(v.first() + t, g.N))];
  }
  return s;
}

/// b_k[i] for frames i = 0 .. num_frames-1 (samples outside s read as zero).
inline SymbolFrames demultiplex(const Signal& s, const Waveform& w, int num_frames) {
  const GridParams& g = w.grid();
  SymbolFrames b(num_frames, g.N);
  std::vector<cplx> fold(static_cast<std::size_t>(g.N)), out;
  for (int i = 0; i < num_frames; ++i) {
    std::fill(fold.begin(), fold.end(), cplx{});
    for (int t = 0; t < w.length(); ++t) {
      const int m = w.first() + t;  // n - iK
      fold[static_cast<std::size_t>(detail::pmod(m, g.N))] += w.taps()[static_cast<std::size_t>(t)] * s.at(i * g.K + m);
    }
    fft_forward(fold, out);
    std::copy(out.begin(), out.end(), b.frame(i).begin());
  }
  return b;
}

/// A_{v,w}(x, y) = sum_n v[n - x] w[n] e^{j 2 pi y n / N}
/// (w is the demultiplexing prototype; this equals the filter-form
/// definition with w_filter[-n] = w[n]).
inline cplx crossambiguity(const Waveform& v, const Waveform& w, int x, double y) {
  const int N = v.grid().N;
  const int lo = std::max(v.first() + x, w.first());
  const int hi = std::min(v.last() + x, w.last());
  cplx acc{};
  const double w0 = 2.0 * std::numbers::pi * y / N;
  for (int n = lo; n <= hi; ++n) {
    const double p = v.at(n - x) * w.at(n);
    if (p == 0.0) continue;
    acc += p * std::polar(1.0, w0 * n);
  }
  return acc;
}

/// A(x, p + y_frac) for p = 0 .. N-1 in one pass (fold mod N, then DFT).
inline std::vector<cplx> crossambiguity_tones(const Waveform& v, const Waveform& w, int x, double y_frac) {
  const int N = v.grid().N;
  std::vector<cplx> fold(static_cast<std::size_t>(N)), out;
  const int lo = std::max(v.first() + x, w.first());
  const int hi = std::min(v.last() + x, w.last());
  const double w0 = 2.0 * std::numbers::pi * y_frac / N;
  for (int n = lo; n <= hi; ++n) {
    const double p = v.at(n - x) * w.at(n);
    if (p == 0.0) continue;
    fold[static_cast<std::size_t>(detail::pmod(n, N))] += p * std::polar(1.0, w0 * n);
  }
  // sum_n f[n mod N] e^{+j 2 pi p n / N}
  fft_inverse(fold, out);
  return out;
}

/// max over lattice points (x, y) = (qK, p) of |A(qK, p) - delta[q] delta[p]|.
/// Zero exactly when the demultiplexer w recovers every symbol sent with v.
inline double biorthogonality_defect(const Waveform& v, const Waveform& w) {
  const int K = v.grid().K;
  const int q_lo = static_cast<int>(std::floor(static_cast<double>(w.first() - v.last()) / K));
  const int q_hi = static_cast<int>(std::ceil(static_cast<double>(w.last() - v.first()) / K));
  double worst = 0.0;
  for (int q = q_lo; q <= q_hi; ++q) {
    const auto tones = crossambiguity_tones(v, w, q * K, 0.0);
    for (std::size_t p = 0; p < tones.size(); ++p)
      worst = std::max(worst, std::abs(tones[p] - ((q == 0 && p == 0) ? cplx(1.0) : cplx{})));
  }
  return worst;
}

struct AmbiguityGrid {
  int x_min = 0;
  int x_max = -1;
  int x_step = 1;
  std::vector<double> y_values;
  std::vector<cplx> values;  ///< row-major: x outer, y inner

  int x_count() const { return x_max < x_min ? 0 : (x_max - x_min) / x_step + 1; }
  cplx operator()(int x, std::size_t yi) const {
    return values[static_cast<std::size_t>((x - x_min) / x_step) * y_values.size() + yi];
  }
};

/// A(x, y) for x = x_min, x_min + x_step, ... <= x_max and every y in ys.
inline AmbiguityGrid ambiguity_grid(const Waveform& v, const Waveform& w, int x_min, int x_max,
                                    std::vector<double> ys, int x_step = 1) {
  if (x_step < 1) throw std::invalid_argument("ambiguity_grid: x_step must be >= 1");
  AmbiguityGrid g;
  g.x_min = x_min;
  g.x_max = x_max;
  g.x_step = x_step;
  g.y_values = std::move(ys);
  for (int k = 0; k < g.x_count(); ++k)
    for (double y : g.y_values) g.values.push_back(crossambiguity(v, w, x_min + k * x_step, y));
  return g;
}

/// CSV with header x,y,re,im,abs; rows ordered by x, then y.
inline void write_ambiguity_csv(std::ostream& os, const AmbiguityGrid& g) {
  os << "x,y,re,im,abs\n";
  const auto old = os.precision(17);
  for (int k = 0; k < g.x_count(); ++k) {
    const int x = g.x_min + k * g.x_step;
    for (std::size_t yi = 0; yi < g.y_values.size(); ++yi) {
      const cplx a = g(x, yi);
      os << x << ',' << g.y_values[yi] << ',' << a.real() << ',' << a.imag() << ',' << std::abs(a) << '\n';
    }
  }
  os.precision(old);
}

/// Multipath statistics; entry 0 is the direct path at delay 0.
struct ChannelStats {
  std::vector<int> delays{0};
  std::vector<double> powers{1.0};  ///< linear average powers

  static ChannelStats from_db(const std::vector<double>& db, std::vector<int> delays = {}) {
    ChannelStats s;
    if (db.empty()) throw std::invalid_argument("ChannelStats: empty profile");
    if (delays.empty())
      for (int l = 0; l < static_cast<int>(db.size()); ++l) delays.push_back(l);
    s.delays = std::move(delays);
    s.powers.clear();
    for (double d : db) s.powers.push_back(std::pow(10.0, d / 10.0));
    s.validate();
    return s;
  }

  void validate() const {
    if (delays.size() != powers.size() || delays.empty()) throw std::invalid_argument("ChannelStats: size mismatch");
    if (delays[0] != 0) throw std::invalid_argument("ChannelStats: first delay must be 0");
    for (std::size_t l = 1; l < delays.size(); ++l)
      if (delays[l] <= delays[l - 1]) throw std::invalid_argument("ChannelStats: delays must increase");
    for (double p : powers)
      if (!(p >= 0.0)) throw std::invalid_argument("ChannelStats: powers must be >= 0");
  }

  int max_delay() const { return delays.back(); }
};

/// Lattice window for the interference sum: |q| <= q_max, p over one period of N tones.
struct PQWindow {
  int q_max = 0;
};

inline PQWindow auto_pq_window(const Waveform& v, const Waveform& w, const ChannelStats& stats, int eps_t) {
  const int K = v.grid().K;
  const int reach = v.length() + w.length() + stats.max_delay() + std::abs(eps_t);
  return {(reach + K - 1) / K + 1};
}

/// Expected |interference|^2 for unit-variance independent symbols and
/// independent zero-mean taps r_l (l >= 1) with E|r_l|^2 = sigma_l^2, r_0 = 1:
///   sum_{(p,q) != (0,0)} |A(qK - et, p + ef)|^2 + sum_{l>=1} sigma_l^2 |A(qK + d_l - et, p + ef)|^2
/// with p running over one period of N tones (A is N-periodic in y).
inline double expected_interference(const Waveform& v, const Waveform& w, const ChannelStats& stats, int eps_t,
                                    double eps_f, PQWindow window) {
  stats.validate();
  const int K = v.grid().K;
  double total = 0.0;
  for (int q = -window.q_max; q <= window.q_max; ++q) {
    for (std::size_t l = 0; l < stats.delays.size(); ++l) {
      const double weight = l == 0 ? 1.0 : stats.powers[l];
      if (weight == 0.0) continue;
      const auto tones = crossambiguity_tones(v, w, q * K + stats.delays[l] - eps_t, eps_f);
      for (std::size_t p = 0; p < tones.size(); ++p) {
        if (q == 0 && p == 0) continue;
        total += weight * std::norm(tones[p]);
      }
    }
  }
  return total;
}

inline double expected_interference(const Waveform& v, const Waveform& w, const ChannelStats& stats, int eps_t,
                                    double eps_f) {
  return expected_interference(v, w, stats, eps_t, eps_f, auto_pq_window(v, w, stats, eps_t));
}

enum class Rolloff { raised_cosine, linear };

/// Demultiplexing prototype that is 1/sqrt(N) on [0, N + d_s) with rolloff
/// tails of a = (K - N - d_s)/2 samples on either side; total length K.
inline Waveform tapered_rect_window(const GridParams& g, int d_s, Rolloff rolloff = Rolloff::raised_cosine) {
  if (d_s < 0 || d_s > g.guard) throw std::invalid_argument("tapered_rect_window: d_s must be in [0, K-N]");
  if ((g.guard - d_s) % 2 != 0) throw std::invalid_argument("tapered_rect_window: (K - N - d_s)/2 must be integral");
  const int a = (g.guard - d_s) / 2;
  const double amp = 1.0 / std::sqrt(static_cast<double>(g.N));
  std::vector<double> t(static_cast<std::size_t>(g.K));
  auto ramp = [&](int m) {  // m = 1 .. a, rising
    const double x = static_cast<double>(m) / (a + 1);
    return rolloff == Rolloff::raised_cosine ? 0.5 * (1.0 - std::cos(std::numbers::pi * x)) : x;
  };
  for (int m = 1; m <= a; ++m) {
    t[static_cast<std::size_t>(m - 1)] = amp * ramp(m);
    t[static_cast<std::size_t>(g.K - m)] = amp * ramp(m);
  }
  for (int n = 0; n < g.N + d_s; ++n) t[static_cast<std::size_t>(a + n)] = amp;
  return Waveform(std::move(t), -a, g);
}

}  // namespace wh
