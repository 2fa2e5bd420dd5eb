#pragma once

// Waveform design: minimize  lambda * (spectral leakage out of |w| <= pi/N)
//                          + (1 - lambda) * (energy outside the best time window)
// over paraunitary block parameters. Every iterate is orthonormal by
// construction, so the search is unconstrained.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numbers>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>
#include <random>

#include "wh/fft.hpp"
#include "wh/grid.hpp"
#include "wh/optimizer.hpp"
#include "wh/parallel.hpp"
#include "wh/paraunitary.hpp"
#include "wh/transmux.hpp"
#include "wh/waveform.hpp"
#include "wh/weyl_heisenberg.hpp"

namespace wh {

struct DesignObjective {
  double lambda = 0.5;     ///< weight on frequency leakage
  double band_edge = 0.0;  ///< 0 selects pi/N
  int mainlobe_len = 0;    ///< 0 selects K
  int fft_size = 0;        ///< 0 selects 16 x (waveform length rounded up to a power of two)

  static DesignObjective defaults(const GridParams& g) {
    DesignObjective o;
    o.band_edge = std::numbers::pi / g.N;
    o.mainlobe_len = g.K;
    return o;
  }

  void validate() const {
    if (!(lambda >= 0.0 && lambda <= 1.0)) throw std::invalid_argument("DesignObjective: lambda must be in [0, 1]");
    if (mainlobe_len < 0) throw std::invalid_argument("DesignObjective: mainlobe_len must be >= 1");
    if (fft_size < 0) throw std::invalid_argument("DesignObjective: fft_size must be positive");
  }
};

namespace detail {

inline int next_pow2(int n) {
  int p = 1;
  while (p < n) p <<= 1;
  return p;
}

inline double band_edge(const DesignObjective& o, const GridParams& g) {
  return o.band_edge > 0.0 ? o.band_edge : std::numbers::pi / g.N;
}

inline int mainlobe(const DesignObjective& o, const GridParams& g) { return o.mainlobe_len > 0 ? o.mainlobe_len : g.K; }

/// Energy fraction outside the best window; windows may run past the support.
inline double time_leakage_padded(std::span<const double> taps, int window) {
  double total = 0.0;
  for (double t : taps) total += t * t;
  if (total == 0.0) return 0.0;
  const int n = static_cast<int>(taps.size());
  if (window >= n) return 0.0;
  double cur = 0.0;
  for (int k = 0; k < window; ++k) cur += taps[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(k)];
  double best = cur;
  for (int k = window; k < n; ++k) {
    cur += taps[static_cast<std::size_t>(k)] * taps[static_cast<std::size_t>(k)] -
           taps[static_cast<std::size_t>(k - window)] * taps[static_cast<std::size_t>(k - window)];
    best = std::max(best, cur);
  }
  return std::clamp(1.0 - best / total, 0.0, 1.0);
}

}  // namespace detail

/// 1 - (band energy over |w| <= band_edge) / (total energy). The band energy is
/// the trapezoid rule on an fft_size-point sampling of |V(e^jw)|^2, with the
/// band edge reached by linear interpolation.
inline double freq_leakage(const Waveform& v, const DesignObjective& obj) {
  const GridParams& g = v.grid();
  const int F = obj.fft_size > 0 ? obj.fft_size : 16 * detail::next_pow2(v.length());
  if (F < v.length()) throw std::invalid_argument("freq_leakage: fft_size shorter than waveform");
  std::vector<cplx> in(static_cast<std::size_t>(F)), out;
  for (int k = 0; k < v.length(); ++k) in[static_cast<std::size_t>(k)] = v.taps()[static_cast<std::size_t>(k)];
  fft_forward(in, out);
  const double total = v.energy();
  const double edge = detail::band_edge(obj, g);
  const double dw = 2.0 * std::numbers::pi / F;
  auto mag2 = [&](int k) { return std::norm(out[static_cast<std::size_t>(((k % F) + F) % F)]); };
  // |V|^2 is even for real taps: integrate [0, edge] and double
  const int kmax = static_cast<int>(std::floor(edge / dw));
  double integral = 0.0;
  for (int k = 0; k < kmax; ++k) integral += 0.5 * (mag2(k) + mag2(k + 1)) * dw;
  const double rem = edge - kmax * dw;
  if (rem > 0.0) {
    const double a = mag2(kmax), b = mag2(kmax + 1);
    const double at_edge = a + (b - a) * rem / dw;
    integral += 0.5 * (a + at_edge) * rem;
  }
  const double band = 2.0 * integral / (2.0 * std::numbers::pi);
  return std::clamp(1.0 - band / total, 0.0, 1.0);
}

inline double time_leakage(const Waveform& v, const DesignObjective& obj) {
  const int w = detail::mainlobe(obj, v.grid());
  if (w > v.length())
    throw std::invalid_argument("time_leakage: mainlobe_len " + std::to_string(w) + " exceeds waveform length " +
                                std::to_string(v.length()));
  return detail::time_leakage_padded(v.taps(), w);
}

struct ObjectiveParts {
  double value = 0.0;
  double freq = 0.0;
  double time = 0.0;
};

inline ObjectiveParts evaluate_objective(const Waveform& v, const DesignObjective& obj) {
  ObjectiveParts p;
  p.freq = freq_leakage(v, obj);
  p.time = detail::time_leakage_padded(v.taps(), detail::mainlobe(obj, v.grid()));
  p.value = obj.lambda * p.freq + (1.0 - obj.lambda) * p.time;
  return p;
}

struct DesignReport {
  Waveform waveform;
  double objective_value = 0.0;
  double freq_leakage = 0.0;
  double time_leakage = 0.0;
  int iterations = 0;
  double defect = 0.0;
  std::vector<ParaunitaryParams> params;  ///< empty for biorthogonal designs
  std::vector<double> history;
  int restart = 0;
};

/// Orthonormal waveform from unit-scale paraunitary blocks (one parameter set
/// per block): blocks are scaled by 1/sqrt(N) and interleaved.
inline Waveform waveform_from_params(const GridParams& g, std::span<const ParaunitaryParams> params) {
  if (static_cast<int>(params.size()) != g.P)
    throw std::invalid_argument("waveform_from_params: need " + std::to_string(g.P) + " parameter sets");
  const double amp = 1.0 / std::sqrt(static_cast<double>(g.N));
  std::vector<PolyMatrix> blocks;
  blocks.reserve(params.size());
  for (const auto& p : params) {
    if (p.L != g.L || p.J != g.J) throw std::invalid_argument("waveform_from_params: block shape mismatch");
    PolyMatrix b = rect_paraunitary(p).scaled(amp);
    // sin/cos of multiples of pi/2 leave ~1e-17 residues; treat them as zeros
    for (int i = 0; i < b.rows(); ++i)
      for (int j = 0; j < b.cols(); ++j) {
        std::vector<double> c = b(i, j).coeffs();
        for (double& x : c)
          if (std::abs(x) < 8.0 * std::numeric_limits<double>::epsilon() * amp) x = 0.0;
        b(i, j) = LaurentPoly(std::move(c), b(i, j).min_deg());
      }
    blocks.push_back(std::move(b));
  }
  return synthesize_from_blocks(blocks, g);
}

/// Parameters reproducing v when every block of v is a constant matrix (up to
/// one common delay) after moving v by some s in [0, M). Returns nothing if
/// no such placement exists.
inline std::optional<std::vector<ParaunitaryParams>> constant_block_params(const Waveform& v, int degree = 0) {
  const GridParams& g = v.grid();
  const double amp = std::sqrt(static_cast<double>(g.N));
  for (int s = 0; s < g.M; ++s) {
    const auto blocks = extract_blocks(v.delayed(s));
    bool ok = true;
    int common = 0;
    bool have = false;
    for (const auto& b : blocks) {
      const auto [lo, hi] = b.degree_range();
      if (hi < lo) continue;
      if (lo != hi || (have && lo != common)) {
        ok = false;
        break;
      }
      common = lo;
      have = true;
    }
    if (!ok || !have) continue;
    std::vector<ParaunitaryParams> out;
    for (const auto& b : blocks) {
      Dense c = dense_coefficient(b, common);
      for (double& x : c.a) x *= amp;
      ParaunitaryParams p = params_from_constant_columns(c);
      ParaunitaryParams q = ParaunitaryParams::zeros(g.L, g.J, degree);
      q.base_angles = p.base_angles;
      if (g.L > g.J && degree > 0) {
        // stages along a direction orthogonal to the used columns act as identity
        const Dense r = rotation_from_angles(g.L, p.base_angles);
        std::vector<double> u(static_cast<std::size_t>(g.L));
        for (int i = 0; i < g.L; ++i) u[static_cast<std::size_t>(i)] = r(i, g.L - 1);
        for (auto& st : q.stage_angles) st = unit_vector_angles(u);
      }
      out.push_back(std::move(q));
    }
    return out;
  }
  return std::nullopt;
}

/// Default starting point: the N-tap rectangular window when it has a
/// constant-block placement, otherwise all-zero angles.
inline std::vector<ParaunitaryParams> default_init(const GridParams& g, int degree) {
  if (auto p = constant_block_params(rectangular_window(g, g.N, 1.0 / std::sqrt(static_cast<double>(g.N))), degree))
    return *p;
  return std::vector<ParaunitaryParams>(static_cast<std::size_t>(g.P), ParaunitaryParams::zeros(g.L, g.J, degree));
}

struct OptimizeOptions {
  int budget = 200;
  int restarts = 8;
  std::uint64_t master_seed = 1;
  int workers = 1;
  double perturbation = 0.25;  ///< std-dev (radians) of restart perturbations
};

namespace detail {

inline std::vector<double> flatten_all(std::span<const ParaunitaryParams> ps) {
  std::vector<double> x;
  for (const auto& p : ps) {
    auto f = p.flatten();
    x.insert(x.end(), f.begin(), f.end());
  }
  return x;
}

inline void assign_all(std::vector<ParaunitaryParams>& ps, std::span<const double> x) {
  std::size_t k = 0;
  for (auto& p : ps) {
    const auto n = static_cast<std::size_t>(p.parameter_count());
    p.assign(x.subspan(k, n));
    k += n;
  }
}

}  // namespace detail

/// Multi-start minimization over block parameters. Restart 0 starts from
/// `init`; restart r > 0 from `init` plus seeded Gaussian perturbations. The
/// winner is the lowest objective, ties going to the lower restart index.
inline DesignReport optimize(const GridParams& g, std::vector<ParaunitaryParams> init, const DesignObjective& obj,
                             const OptimizeOptions& opt) {
  obj.validate();
  if (opt.budget < 1) throw std::invalid_argument("optimize: budget must be >= 1");
  if (static_cast<int>(init.size()) != g.P) throw std::invalid_argument("optimize: init needs one set per block");
  for (const auto& p : init) {
    p.validate();
    if (p.L != g.L || p.J != g.J) throw std::invalid_argument("optimize: init block shape mismatch");
  }
  const int restarts = std::max(1, opt.restarts);
  std::vector<DesignReport> results(static_cast<std::size_t>(restarts));
  detail::run_indexed(restarts, opt.workers, [&](int r) {
    std::vector<ParaunitaryParams> params = init;
    std::vector<double> x0 = detail::flatten_all(params);
    if (r > 0) {
      std::mt19937_64 rng(detail::derive_seed(opt.master_seed, static_cast<std::uint64_t>(r)));
      std::normal_distribution<double> gauss(0.0, opt.perturbation);
      for (double& a : x0) a += gauss(rng);
    }
    auto f = [&g, &obj, params](std::span<const double> x) mutable {
      detail::assign_all(params, x);
      return evaluate_objective(waveform_from_params(g, params), obj).value;
    };
    MinimizeOptions mo;
    mo.budget = opt.budget;
    const MinimizeResult m = minimize(f, x0, mo);
    DesignReport rep;
    detail::assign_all(params, m.x);
    rep.waveform = waveform_from_params(g, params);
    const ObjectiveParts parts = evaluate_objective(rep.waveform, obj);
    rep.objective_value = parts.value;
    rep.freq_leakage = parts.freq;
    rep.time_leakage = parts.time;
    rep.iterations = m.iterations;
    rep.defect = orthonormality_defect(rep.waveform);
    rep.params = std::move(params);
    rep.history = m.history;
    rep.restart = r;
    results[static_cast<std::size_t>(r)] = std::move(rep);
  });
  std::size_t best = 0;
  for (std::size_t r = 1; r < results.size(); ++r)
    if (results[r].objective_value < results[best].objective_value) best = r;
  return results[best];
}

/// One-frame windows (K <= 2N) optimized over their K - N angles.
inline DesignReport optimize_short_window(const GridParams& g, std::vector<double> angles, const DesignObjective& obj,
                                          int budget) {
  auto f = [&](std::span<const double> x) { return evaluate_objective(short_window(g, x), obj).value; };
  MinimizeOptions mo;
  mo.budget = budget;
  const MinimizeResult m = minimize(f, std::move(angles), mo);
  DesignReport rep;
  rep.waveform = short_window(g, m.x);
  const ObjectiveParts parts = evaluate_objective(rep.waveform, obj);
  rep.objective_value = parts.value;
  rep.freq_leakage = parts.freq;
  rep.time_leakage = parts.time;
  rep.iterations = m.iterations;
  rep.defect = orthonormality_defect(rep.waveform);
  rep.history = m.history;
  return rep;
}

/// Optimizes the demultiplexing prototype of an orthonormal v over the
/// coefficients of the A blocks. Each entry of A keeps the exponent range
/// [min_exp, max_exp]; the starting coefficients come from `init`.
/// Biorthogonality holds for every iterate.
inline DesignReport design_biorthogonal(const Waveform& v, const BiorthParams& init, int min_exp, int max_exp,
                                        const DesignObjective& obj, int budget) {
  obj.validate();
  const GridParams& g = v.grid();
  const double defect = orthonormality_defect(v);
  if (!(defect < 1e-9))
    throw std::invalid_argument("design_biorthogonal: v is not orthonormal (defect " + std::to_string(defect) + ")");
  if (static_cast<int>(init.A_blocks.size()) != g.P)
    throw std::invalid_argument("design_biorthogonal: need one A block per polyphase block");
  if (max_exp < min_exp) throw std::invalid_argument("design_biorthogonal: empty exponent range");
  const int rowsA = g.L - g.J;
  const int width = max_exp - min_exp + 1;
  const auto blocks = extract_blocks(v);
  std::vector<PolyMatrix> vs;
  for (const auto& b : blocks) vs.push_back(complete_to_square(b, 1.0 / g.N));

  std::vector<double> x0;
  for (const auto& A : init.A_blocks) {
    if (A.rows() != rowsA || A.cols() != g.J) throw std::invalid_argument("design_biorthogonal: A shape mismatch");
    for (int i = 0; i < rowsA; ++i)
      for (int j = 0; j < g.J; ++j) {
        const auto& e = A(i, j);
        if (!e.is_zero() && (e.min_deg() < min_exp || e.max_deg() > max_exp))
          throw std::invalid_argument("design_biorthogonal: init A outside exponent range");
        for (int d = min_exp; d <= max_exp; ++d) x0.push_back(e.coeff(d));
      }
  }
  auto build = [&](std::span<const double> x) {
    std::vector<PolyMatrix> us;
    std::size_t k = 0;
    for (int r = 0; r < g.P; ++r) {
      PolyMatrix A(rowsA, g.J);
      for (int i = 0; i < rowsA; ++i)
        for (int j = 0; j < g.J; ++j) {
          A(i, j) = LaurentPoly(std::vector<double>(x.begin() + static_cast<std::ptrdiff_t>(k),
                                                    x.begin() + static_cast<std::ptrdiff_t>(k) + width),
                                min_exp);
          k += static_cast<std::size_t>(width);
        }
      us.push_back(left_inverse_family(vs[static_cast<std::size_t>(r)], A));
    }
    return synthesize_biorthogonal(us, g);
  };
  auto f = [&](std::span<const double> x) { return evaluate_objective(build(x), obj).value; };
  MinimizeOptions mo;
  mo.budget = budget;
  const MinimizeResult m = minimize(f, x0, mo);
  DesignReport rep;
  rep.waveform = build(m.x);
  const ObjectiveParts parts = evaluate_objective(rep.waveform, obj);
  rep.objective_value = parts.value;
  rep.freq_leakage = parts.freq;
  rep.time_leakage = parts.time;
  rep.iterations = m.iterations;
  rep.defect = biorthogonality_defect(v, rep.waveform);
  rep.history = m.history;
  return rep;
}

/// n_z (2 N L_v / K - N - 1) zero constraints on w, rounded down.
inline long long zero_constraint_count(long long N, long long K, long long Lv, long long nz) {
  if (N < 1 || K < 1 || Lv < 1 || nz < 0) throw std::invalid_argument("zero_constraint_count: bad arguments");
  const long long num = nz * (2 * N * Lv - (N + 1) * K);
  // floor division for possibly negative numerators
  return num >= 0 ? num / K : -((-num + K - 1) / K);
}

}  // namespace wh
