#pragma once

// Link simulation: Rayleigh multipath, timing and carrier offsets, narrowband
// interference, AWGN, a K=7 rate-1/2 convolutional code with soft Viterbi
// decoding, BPSK, one-tap equalization and BER counting.
//
// Energy convention: with unit-energy symbols on all N tones the average
// transmit energy per sample is E_s = N |v|^2 / K, and
//   Eb = E_s K / (N R) = |v|^2 / R,   N0 = 2 sigma^2,
// where sigma is the per-component standard deviation of the complex AWGN.
// The interferer level is given as Eb/E_I with E_I = P_I K / (N R), i.e.
// P_I = E_s 10^{-(Eb/E_I)/10}.

#include <array>
#include <bit>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "wh/fft.hpp"
#include "wh/grid.hpp"
#include "wh/parallel.hpp"
#include "wh/transmux.hpp"
#include "wh/waveform.hpp"

namespace wh {

using Rng = std::mt19937_64;

struct ChannelRealization {
  std::vector<int> delays{0};
  std::vector<cplx> taps{1.0};

  static ChannelRealization identity() { return {}; }
};

/// 33 taps at delays 0..32: 0, -1, ..., -24 dB, then -1, ..., -8 dB.
inline ChannelStats profile_33_tap() {
  std::vector<double> db;
  for (int d = 0; d <= 24; ++d) db.push_back(-d);
  for (int d = 1; d <= 8; ++d) db.push_back(-d);
  return ChannelStats::from_db(db);
}

/// Taps at delays 0, 1, 2 with 0, -3, -6 dB.
inline ChannelStats profile_3_tap() { return ChannelStats::from_db({0.0, -3.0, -6.0}); }

enum class DrawMode {
  rayleigh,    ///< every tap drawn, r_0 included
  pin_direct,  ///< r_0 = 1, taps l >= 1 drawn
  normalized,  ///< every tap drawn, then divided by the drawn r_0
};

inline cplx complex_gaussian(Rng& rng, double variance) {
  std::normal_distribution<double> n(0.0, std::sqrt(variance / 2.0));
  const double re = n(rng);
  const double im = n(rng);
  return {re, im};
}

inline ChannelRealization draw_channel(const ChannelStats& stats, Rng& rng, DrawMode mode = DrawMode::rayleigh) {
  stats.validate();
  ChannelRealization c;
  c.delays = stats.delays;
  c.taps.resize(stats.powers.size());
  for (std::size_t l = 0; l < stats.powers.size(); ++l) c.taps[l] = complex_gaussian(rng, stats.powers[l]);
  if (mode == DrawMode::pin_direct) c.taps[0] = 1.0;
  if (mode == DrawMode::normalized) {
    const cplx r0 = c.taps[0];
    for (auto& t : c.taps) t /= r0;
  }
  return c;
}

enum class InterfererMode { gaussian, tone };

/// Narrowband interferer with linear per-sample power.
struct InterfererSpec {
  double center_tone = 0.0;
  double power = 0.0;
  InterfererMode mode = InterfererMode::gaussian;
};

namespace detail {

/// Brick-wall one-subcarrier Gaussian noise, synthesized per aligned block of
/// 16N samples; out[n] for n in [lo, hi].
inline std::vector<cplx> narrowband_gaussian(int N, double center_tone, double power, int lo, int hi, Rng& rng) {
  constexpr int over = 16;
  const int B = over * N;
  const long long start_bin = std::llround(over * center_tone - over / 2.0);
  const int b_lo = lo >= 0 ? lo / B : -((-lo + B - 1) / B);
  const int b_hi = hi >= 0 ? hi / B : -((-hi + B - 1) / B);
  std::vector<cplx> out(static_cast<std::size_t>(hi - lo + 1));
  std::vector<cplx> spec(static_cast<std::size_t>(B)), x;
  const double amp = std::sqrt(power / over);
  for (int b = b_lo; b <= b_hi; ++b) {
    std::fill(spec.begin(), spec.end(), cplx{});
    for (int m = 0; m < over; ++m) {
      const long long bin = ((start_bin + m) % B + B) % B;
      spec[static_cast<std::size_t>(bin)] = complex_gaussian(rng, 1.0);
    }
    fft_inverse(spec, x);
    for (int t = 0; t < B; ++t) {
      const int n = b * B + t;
      if (n < lo || n > hi) continue;
      out[static_cast<std::size_t>(n - lo)] = amp * x[static_cast<std::size_t>(t)];
    }
  }
  return out;
}

}  // namespace detail

/// Interferer samples on [lo, hi].
inline std::vector<cplx> interferer_samples(const InterfererSpec& spec, int N, int lo, int hi, Rng& rng) {
  if (hi < lo) return {};
  if (spec.mode == InterfererMode::gaussian) return detail::narrowband_gaussian(N, spec.center_tone, spec.power, lo, hi, rng);
  std::uniform_real_distribution<double> u(0.0, 2.0 * std::numbers::pi);
  const double phase = u(rng);
  std::vector<cplx> out(static_cast<std::size_t>(hi - lo + 1));
  for (int n = lo; n <= hi; ++n)
    out[static_cast<std::size_t>(n - lo)] =
        std::polar(std::sqrt(spec.power), 2.0 * std::numbers::pi * spec.center_tone * n / N + phase);
  return out;
}

struct ImpairOptions {
  int eps_t = 0;
  double eps_f = 0.0;
  double noise_sigma = 0.0;  ///< per real component
  std::optional<InterfererSpec> interferer;
  /// Samples over which noise and interference are generated; the output is
  /// widened to cover it. Defaults to the span of the impaired signal.
  std::optional<std::pair<int, int>> span;
};

/// Multipath, then out[n] = in[n + eps_t], then e^{j 2 pi eps_f n / N},
/// then interferer, then AWGN.
inline Signal impair(const Signal& s, const ChannelRealization& c, int N, const ImpairOptions& o, Rng& rng) {
  Signal out;
  if (s.samples.empty() && !o.span) return out;
  const int max_d = c.delays.empty() ? 0 : c.delays.back();
  out.first = s.first;
  out.samples.assign(s.samples.size() + static_cast<std::size_t>(max_d), cplx{});
  for (std::size_t l = 0; l < c.taps.size(); ++l)
    for (std::size_t k = 0; k < s.samples.size(); ++k)
      out.samples[k + static_cast<std::size_t>(c.delays[l])] += c.taps[l] * s.samples[k];
  out.first -= o.eps_t;
  if (o.eps_f != 0.0)
    for (std::size_t k = 0; k < out.samples.size(); ++k)
      out.samples[k] *= std::polar(1.0, 2.0 * std::numbers::pi * o.eps_f * (out.first + static_cast<int>(k)) / N);
  if (o.span) out = out.samples.empty() ? Signal{std::vector<cplx>(static_cast<std::size_t>(o.span->second - o.span->first + 1)), o.span->first}
                                        : out.widened(o.span->first, o.span->second);
  if (o.interferer && o.interferer->power > 0.0) {
    const auto x = interferer_samples(*o.interferer, N, out.first, out.last(), rng);
    for (std::size_t k = 0; k < x.size(); ++k) out.samples[k] += x[k];
  }
  if (o.noise_sigma > 0.0) {
    std::normal_distribution<double> n(0.0, o.noise_sigma);
    for (auto& v : out.samples) {
      const double re = n(rng);
      const double im = n(rng);
      v += cplx(re, im);
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// K = 7, rate 1/2, generators 133 / 171 (octal), zero-terminated.

inline constexpr int kConstraint = 7;
inline constexpr int kMemory = kConstraint - 1;
inline constexpr unsigned kG0 = 0133;
inline constexpr unsigned kG1 = 0171;

namespace detail {
/// Register holds the current bit at position 6 and the previous six below it.
inline std::pair<int, int> code_outputs(unsigned reg) {
  return {std::popcount(reg & kG0) & 1, std::popcount(reg & kG1) & 1};
}
}  // namespace detail

inline std::vector<std::uint8_t> conv_encode(const std::vector<std::uint8_t>& bits) {
  std::vector<std::uint8_t> out;
  out.reserve(2 * (bits.size() + kMemory));
  unsigned state = 0;
  auto push = [&](unsigned b) {
    const unsigned reg = (b << kMemory) | state;
    const auto [c0, c1] = detail::code_outputs(reg);
    out.push_back(static_cast<std::uint8_t>(c0));
    out.push_back(static_cast<std::uint8_t>(c1));
    state = reg >> 1;
  };
  for (auto b : bits) push(b & 1u);
  for (int t = 0; t < kMemory; ++t) push(0);
  return out;
}

/// Soft-input maximum-likelihood decoding; llr > 0 favours bit 0.
/// Input length must be even and at least 2*6; returns the information bits.
inline std::vector<std::uint8_t> viterbi_decode(const std::vector<double>& llrs) {
  if (llrs.size() % 2 != 0 || llrs.size() < 2 * kMemory)
    throw std::invalid_argument("viterbi_decode: need an even number >= 12 of soft values");
  constexpr int S = 1 << kMemory;
  const std::size_t steps = llrs.size() / 2;
  const double neg = -std::numeric_limits<double>::infinity();
  std::array<double, S> metric, next;
  metric.fill(neg);
  metric[0] = 0.0;
  std::vector<std::uint64_t> decision(steps, 0);  // bit s: which predecessor survived into state s
  // branch table: from state s with input b -> reg, outputs
  std::array<std::array<int, 2>, 2 * S> outs{};
  for (unsigned reg = 0; reg < 2u * S; ++reg) {
    const auto [c0, c1] = detail::code_outputs(reg);
    outs[reg] = {c0, c1};
  }
  for (std::size_t t = 0; t < steps; ++t) {
    const double l0 = llrs[2 * t], l1 = llrs[2 * t + 1];
    next.fill(neg);
    const bool tail = t + kMemory >= steps;
    for (unsigned ns = 0; ns < static_cast<unsigned>(S); ++ns) {
      // ns = reg >> 1, so reg = (ns << 1) | low with the input at bit 6 of reg = bit 5 of ns
      if (tail && (ns >> (kMemory - 1)) != 0) continue;
      for (unsigned low = 0; low < 2; ++low) {
        const unsigned reg = (ns << 1) | low;
        const unsigned ps = reg & (S - 1);
        if (metric[ps] == neg) continue;
        const auto& o = outs[reg];
        const double m = metric[ps] + (o[0] ? -l0 : l0) + (o[1] ? -l1 : l1);
        if (m > next[ns]) {
          next[ns] = m;
          if (low) decision[t] |= (1ULL << ns);
          else decision[t] &= ~(1ULL << ns);
        }
      }
    }
    metric = next;
  }
  std::vector<std::uint8_t> bits(steps);
  unsigned s = 0;
  for (std::size_t t = steps; t-- > 0;) {
    bits[t] = static_cast<std::uint8_t>(s >> (kMemory - 1));
    const unsigned low = (decision[t] >> s) & 1ULL;
    s = ((s << 1) | low) & (S - 1);
  }
  bits.resize(steps - kMemory);
  return bits;
}

// ---------------------------------------------------------------------------
// Reference schemes.

struct Scheme {
  std::string name;
  Waveform tx;
  Waveform rx;
};

/// Cyclic prefix: K-tap transmit window on [0, K), receiver drops the prefix.
inline Scheme cp_scheme(const GridParams& g) {
  const double a = 1.0 / std::sqrt(static_cast<double>(g.N));
  return {"cp", Waveform(std::vector<double>(static_cast<std::size_t>(g.K), a), 0, g),
          Waveform(std::vector<double>(static_cast<std::size_t>(g.N), a), g.guard, g)};
}

/// Zero padding: N-tap transmit window, overlap-add over K samples at the receiver.
inline Scheme zp_scheme(const GridParams& g) {
  const double a = 1.0 / std::sqrt(static_cast<double>(g.N));
  return {"zp", Waveform(std::vector<double>(static_cast<std::size_t>(g.N), a), 0, g),
          Waveform(std::vector<double>(static_cast<std::size_t>(g.K), a), 0, g)};
}

// ---------------------------------------------------------------------------

struct LinkConfig {
  GridParams grid;
  Waveform tx_waveform;
  Waveform rx_waveform;
  double ebn0_db = std::numeric_limits<double>::infinity();  ///< +inf: noiseless
  double eps_f = 0.0;
  int eps_t = 0;
  ChannelStats channel;
  DrawMode draw_mode = DrawMode::rayleigh;
  /// center tone and Eb/E_I in dB
  std::optional<std::pair<double, double>> interferer;
  InterfererMode interferer_mode = InterfererMode::gaussian;
  int frames_per_trial = 2;
  int trials = 1;
  std::uint64_t master_seed = 1;
  int workers = 1;
  /// Remove the deterministic carrier-offset phase advance between the
  /// training frame and each data frame.
  bool phase_tracking = true;

  void validate() const {
    if (!(std::abs(eps_f) < 1.0)) throw std::invalid_argument("LinkConfig: |eps_f| must be < 1");
    if (std::isnan(ebn0_db) || ebn0_db == -std::numeric_limits<double>::infinity())
      throw std::invalid_argument("LinkConfig: ebn0_db must be a number");
    if (frames_per_trial < 2) throw std::invalid_argument("LinkConfig: frames_per_trial must be >= 2");
    if (trials < 1) throw std::invalid_argument("LinkConfig: trials must be >= 1");
    if (!(tx_waveform.grid() == grid) || !(rx_waveform.grid() == grid))
      throw std::invalid_argument("LinkConfig: waveform grid mismatch");
    if (info_bits_per_trial() < 1) throw std::invalid_argument("LinkConfig: too few frames for one code block");
    channel.validate();
  }

  int data_frames() const { return frames_per_trial - 1; }
  int coded_bits_per_trial() const { return 2 * info_bits_per_trial() + 2 * kMemory; }
  int info_bits_per_trial() const { return (grid.N * data_frames()) / 2 - kMemory; }
};

struct BerPoint {
  double x_db = 0.0;
  double ber = 0.0;
  long long bits_measured = 0;
  long long errors = 0;
};

/// 95% Wilson score interval.
inline std::pair<double, double> confidence_interval(const BerPoint& p) {
  const double n = static_cast<double>(p.bits_measured);
  if (n <= 0) return {0.0, 1.0};
  const double z = 1.959963984540054;
  const double ph = static_cast<double>(p.errors) / n;
  const double den = 1.0 + z * z / n;
  const double c = (ph + z * z / (2 * n)) / den;
  const double h = z * std::sqrt(ph * (1 - ph) / n + z * z / (4 * n * n)) / den;
  return {std::max(0.0, c - h), std::min(1.0, c + h)};
}

/// Average transmit energy per sample for unit-energy symbols on all tones.
inline double sample_energy(const Waveform& tx) { return tx.grid().N * tx.energy() / tx.grid().K; }

inline double bit_energy(const Waveform& tx, double rate = 0.5) {
  const GridParams& g = tx.grid();
  return sample_energy(tx) * g.K / (g.N * rate);
}

inline double noise_sigma_for(const Waveform& tx, double ebn0_db, double rate = 0.5) {
  if (ebn0_db == std::numeric_limits<double>::infinity()) return 0.0;
  const double n0 = bit_energy(tx, rate) / std::pow(10.0, ebn0_db / 10.0);
  return std::sqrt(n0 / 2.0);
}

inline double interferer_power_for(const Waveform& tx, double ebi_db) {
  return sample_energy(tx) * std::pow(10.0, -ebi_db / 10.0);
}

namespace detail {

/// Receiver sample span for frames 0 .. F-1.
inline std::pair<int, int> rx_span(const LinkConfig& cfg, int frames) {
  return {cfg.rx_waveform.first(), (frames - 1) * cfg.grid.K + cfg.rx_waveform.last()};
}

}  // namespace detail

/// One all-ones frame sent alone through the channel with offsets but no noise
/// or interference; H_k = received / sent.
inline std::vector<cplx> train_equalizer(const LinkConfig& cfg, const ChannelRealization& c) {
  SymbolFrames a(1, cfg.grid.N);
  for (int k = 0; k < cfg.grid.N; ++k) a(0, k) = 1.0;
  Rng unused(0);
  ImpairOptions o;
  o.eps_t = cfg.eps_t;
  o.eps_f = cfg.eps_f;
  const Signal r = impair(fft_multiplex(a, cfg.tx_waveform), c, cfg.grid.N, o, unused);
  const SymbolFrames b = demultiplex(r, cfg.rx_waveform, 1);
  std::vector<cplx> H(static_cast<std::size_t>(cfg.grid.N));
  for (int k = 0; k < cfg.grid.N; ++k) H[static_cast<std::size_t>(k)] = b(0, k);
  return H;
}

struct TrialResult {
  long long bits = 0;
  long long errors = 0;
  double max_symbol_error = 0.0;  ///< max |equalized - sent| over data symbols
};

/// One independent channel draw: training, then frames_per_trial - 1 coded data frames.
inline TrialResult run_trial(const LinkConfig& cfg, double noise_sigma, std::optional<InterfererSpec> intf, Rng& rng) {
  const GridParams& g = cfg.grid;
  const ChannelRealization ch = draw_channel(cfg.channel, rng, cfg.draw_mode);
  const std::vector<cplx> H = train_equalizer(cfg, ch);

  const int info_n = cfg.info_bits_per_trial();
  std::vector<std::uint8_t> info(static_cast<std::size_t>(info_n));
  for (auto& b : info) b = static_cast<std::uint8_t>(rng() >> 63);
  const std::vector<std::uint8_t> coded = conv_encode(info);

  const int F = cfg.data_frames();
  SymbolFrames a(F, g.N);
  for (int i = 0; i < F; ++i)
    for (int k = 0; k < g.N; ++k) {
      const std::size_t idx = static_cast<std::size_t>(i * g.N + k);
      // unused trailing positions carry a fixed +1
      a(i, k) = idx < coded.size() ? (coded[idx] ? -1.0 : 1.0) : 1.0;
    }
  ImpairOptions o;
  o.eps_t = cfg.eps_t;
  o.eps_f = cfg.eps_f;
  o.noise_sigma = noise_sigma;
  o.interferer = intf;
  o.span = detail::rx_span(cfg, F);
  const Signal r = impair(fft_multiplex(a, cfg.tx_waveform), ch, g.N, o, rng);
  const SymbolFrames b = demultiplex(r, cfg.rx_waveform, F);

  TrialResult res;
  std::vector<double> llr(coded.size());
  for (int i = 0; i < F; ++i) {
    const cplx derot = cfg.phase_tracking ? std::polar(1.0, -2.0 * std::numbers::pi * cfg.eps_f * i * g.K / g.N) : cplx(1.0);
    for (int k = 0; k < g.N; ++k) {
      const cplx h = H[static_cast<std::size_t>(k)];
      const cplx y = h == cplx{} ? cplx{} : b(i, k) * derot / h;
      res.max_symbol_error = std::max(res.max_symbol_error, std::abs(y - a(i, k)));
      const std::size_t idx = static_cast<std::size_t>(i * g.N + k);
      if (idx < llr.size()) llr[idx] = y.real() * std::norm(h);
    }
  }
  const std::vector<std::uint8_t> dec = viterbi_decode(llr);
  res.bits = info_n;
  for (int n = 0; n < info_n; ++n) res.errors += dec[static_cast<std::size_t>(n)] != info[static_cast<std::size_t>(n)];
  return res;
}

enum class Sweep { ebn0, ebi };

/// One BerPoint per entry of xs. For Sweep::ebn0, xs are Eb/N0 values and the
/// interferer (if any) uses cfg.interferer's Eb/E_I; for Sweep::ebi, xs are
/// Eb/E_I values and noise follows cfg.ebn0_db. Trial t of point p seeds its
/// generator from (master_seed, p, t).
inline std::vector<BerPoint> run_ber(const LinkConfig& cfg, Sweep sweep, const std::vector<double>& xs) {
  cfg.validate();
  if (sweep == Sweep::ebi && !cfg.interferer) throw std::invalid_argument("run_ber: E_b/E_I sweep needs an interferer");
  std::vector<BerPoint> out;
  for (std::size_t p = 0; p < xs.size(); ++p) {
    const double ebn0 = sweep == Sweep::ebn0 ? xs[p] : cfg.ebn0_db;
    const double sigma = noise_sigma_for(cfg.tx_waveform, ebn0);
    std::optional<InterfererSpec> intf;
    if (cfg.interferer) {
      const double ebi = sweep == Sweep::ebi ? xs[p] : cfg.interferer->second;
      intf = InterfererSpec{cfg.interferer->first, interferer_power_for(cfg.tx_waveform, ebi), cfg.interferer_mode};
    }
    std::vector<TrialResult> results(static_cast<std::size_t>(cfg.trials));
    detail::run_indexed(cfg.trials, cfg.workers, [&](int t) {
      Rng rng(detail::derive_seed(cfg.master_seed, p, static_cast<std::uint64_t>(t)));
      results[static_cast<std::size_t>(t)] = run_trial(cfg, sigma, intf, rng);
    });
    BerPoint bp;
    bp.x_db = xs[p];
    for (const auto& r : results) {
      bp.bits_measured += r.bits;
      bp.errors += r.errors;
    }
    bp.ber = static_cast<double>(bp.errors) / static_cast<double>(bp.bits_measured);
    out.push_back(bp);
  }
  return out;
}

/// Largest pre-decoder symbol error over `trials` draws with all noise and
/// interference off (offsets and channel as configured).
inline double max_symbol_error(const LinkConfig& cfg) {
  cfg.validate();
  double worst = 0.0;
  for (int t = 0; t < cfg.trials; ++t) {
    Rng rng(detail::derive_seed(cfg.master_seed, 0, static_cast<std::uint64_t>(t)));
    worst = std::max(worst, run_trial(cfg, 0.0, std::nullopt, rng).max_symbol_error);
  }
  return worst;
}

}  // namespace wh
