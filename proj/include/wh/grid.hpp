#pragma once

#include <numeric>
#include <stdexcept>
#include <string>

namespace wh {

/// Arithmetic skeleton of an N-channel lattice with a K-sample frame interval.
struct GridParams {
  int N = 1;      ///< channels per frame
  int K = 1;      ///< frame interval in samples
  int P = 1;      ///< gcd(N, K)
  int J = 1;      ///< N / P
  int L = 1;      ///< K / P
  int M = 1;      ///< lcm(N, K) = J*K = L*N
  int guard = 0;  ///< K - N

  double efficiency() const { return static_cast<double>(N) / static_cast<double>(K); }

  friend bool operator==(const GridParams&, const GridParams&) = default;
};

inline GridParams grid_params(int N, int K) {
  if (N < 1) throw std::invalid_argument("grid_params: N must be >= 1");
  if (K < N)
    throw std::invalid_argument("grid_params: frame interval K=" + std::to_string(K) +
                                " is shorter than N=" + std::to_string(N));
  GridParams g;
  g.N = N;
  g.K = K;
  g.P = std::gcd(N, K);
  g.J = N / g.P;
  g.L = K / g.P;
  g.M = g.J * K;
  g.guard = K - N;
  return g;
}

/// p(i, j) in [0, J) solving  j = p L + i (mod J), and the advance
/// n(i, j) = [p(i,0) + p(0,j) - p(i,j)] / J  which is always 0 or 1.
struct IndexMap {
  int p = 0;
  int n = 0;
};

namespace detail {

inline int mod(int a, int m) {
  const int r = a % m;
  return r < 0 ? r + m : r;
}

inline int solve_p(const GridParams& g, int i, int j) {
  for (int p = 0; p < g.J; ++p)
    if (mod(p * g.L + i - j, g.J) == 0) return p;
  // gcd(J, L) == 1 guarantees a solution.
  throw std::logic_error("solve_p: congruence has no solution");
}

}  // namespace detail

inline IndexMap index_maps(const GridParams& g, int i, int j) {
  if (i < 0 || i >= g.L || j < 0 || j >= g.J) throw std::out_of_range("index_maps: (i, j) outside L x J");
  IndexMap m;
  m.p = detail::solve_p(g, i, j);
  const int s = detail::solve_p(g, i, 0) + detail::solve_p(g, 0, j) - m.p;
  if (s % g.J != 0) throw std::logic_error("index_maps: advance is not a multiple of J");
  m.n = s / g.J;
  return m;
}

/// Polyphase component feeding block r at (i, j):  p(i,j) K + i P + r.
inline int component_index(const GridParams& g, int r, int i, int j) {
  return index_maps(g, i, j).p * g.K + i * g.P + r;
}

}  // namespace wh
