#include <gtest/gtest.h>

#include <complex>
#include <map>
#include <numeric>
#include <random>
#include <sstream>

#include "test_util.hpp"
#include "wh/waveform.hpp"
#include "wh/weyl_heisenberg.hpp"

using namespace wh;
using cd = std::complex<double>;

namespace {

Waveform counting_waveform(const GridParams& g, int len, int offset = 0) {
  std::vector<double> t(static_cast<std::size_t>(len));
  std::iota(t.begin(), t.end(), 1.0);
  return Waveform(t, offset, g);
}

Waveform random_waveform(const GridParams& g, int len, std::mt19937_64& rng, int offset = 0) {
  std::normal_distribution<double> n;
  std::vector<double> t(static_cast<std::size_t>(len));
  for (auto& x : t) x = n(rng);
  t.front() = 1.0;
  t.back() = -1.0;
  return Waveform(t, offset, g);
}

}  // namespace

// ---- grid ------------------------------------------------------------------

TEST(Grid, Examples) {
  const auto a = grid_params(4, 6);
  EXPECT_EQ(a.P, 2);
  EXPECT_EQ(a.J, 2);
  EXPECT_EQ(a.L, 3);
  EXPECT_EQ(a.M, 12);
  const auto b = grid_params(128, 160);
  EXPECT_EQ(b.P, 32);
  EXPECT_EQ(b.J, 4);
  EXPECT_EQ(b.L, 5);
  EXPECT_EQ(b.M, 640);
  EXPECT_EQ(b.guard, 32);
  const auto c = grid_params(8, 8);
  EXPECT_EQ(c.P, 8);
  EXPECT_EQ(c.J, 1);
  EXPECT_EQ(c.L, 1);
  EXPECT_EQ(c.M, 8);
  EXPECT_THROW(grid_params(6, 4), std::invalid_argument);
  EXPECT_THROW(grid_params(0, 4), std::invalid_argument);
}

TEST(Grid, InvariantsOnManyGrids) {
  for (int N = 1; N <= 40; ++N)
    for (int K = N; K <= 60; ++K) {
      const auto g = grid_params(N, K);
      EXPECT_EQ(g.P * g.J, N);
      EXPECT_EQ(g.P * g.L, K);
      EXPECT_EQ(g.M, g.J * K);
      EXPECT_EQ(g.M, g.L * N);
      EXPECT_EQ(std::gcd(g.J, g.L), 1);
    }
}

TEST(IndexMaps, Examples) {
  const auto g = grid_params(128, 160);
  EXPECT_EQ(index_maps(g, 0, 1).p, 1);
  EXPECT_EQ(index_maps(g, 0, 1).n, 0);
  EXPECT_EQ(index_maps(g, 1, 1).p, 0);
  EXPECT_EQ(index_maps(g, 1, 1).n, 1);
  for (auto gg : {grid_params(4, 6), g, grid_params(36, 40), grid_params(5, 5)}) {
    EXPECT_EQ(index_maps(gg, 0, 0).p, 0);
    EXPECT_EQ(index_maps(gg, 0, 0).n, 0);
  }
  EXPECT_THROW(index_maps(g, 5, 0), std::out_of_range);
  EXPECT_THROW(index_maps(g, 0, -1), std::out_of_range);
}

TEST(IndexMaps, UniqueSolutionAndBinaryAdvance) {
  for (auto g : {grid_params(4, 6), grid_params(128, 160), grid_params(36, 40), grid_params(6, 10), grid_params(7, 12)})
    for (int i = 0; i < g.L; ++i)
      for (int j = 0; j < g.J; ++j) {
        int count = 0, sol = -1;
        for (int p = 0; p < g.J; ++p)
          if (((p * g.L + i - j) % g.J + g.J) % g.J == 0) {
            ++count;
            sol = p;
          }
        ASSERT_EQ(count, 1);
        const auto m = index_maps(g, i, j);
        EXPECT_EQ(m.p, sol);
        EXPECT_TRUE(m.n == 0 || m.n == 1);
      }
}

// ---- polyphase ---------------------------------------------------------------

TEST(Polyphase, Examples) {
  const auto g = grid_params(4, 6);
  const auto imp = polyphase_decompose(Waveform({1.0}, 0, g));
  EXPECT_EQ(imp[0], LaurentPoly::constant(1.0));
  for (int j = 1; j < 12; ++j) EXPECT_TRUE(imp[static_cast<std::size_t>(j)].is_zero());

  const auto rect = polyphase_decompose(rectangular_window(g, 4, 0.5));
  for (int j = 0; j < 4; ++j) EXPECT_EQ(rect[static_cast<std::size_t>(j)], LaurentPoly::constant(0.5));
  for (int j = 4; j < 12; ++j) EXPECT_TRUE(rect[static_cast<std::size_t>(j)].is_zero());

  std::mt19937_64 rng(1);
  const auto v = random_waveform(g, 24, rng);
  const auto comps = polyphase_decompose(v);
  for (const auto& c : comps) EXPECT_EQ(c.size(), 2u);
}

TEST(Polyphase, InterleaveRoundTripAtNegativeOffsets) {
  std::mt19937_64 rng(2);
  const auto g = grid_params(6, 10);
  for (int off : {-47, -1, 0, 13}) {
    const auto v = random_waveform(g, 77, rng, off);
    const auto comps = polyphase_decompose(v);
    const auto s = interleave_components(comps, g.M);
    EXPECT_EQ(s.first, v.first());
    EXPECT_EQ(s.values, v.taps());
  }
}

// ---- build_V -----------------------------------------------------------------

TEST(BuildV, MatchesGrid4x6Pattern) {
  const auto g = grid_params(4, 6);
  const auto v = counting_waveform(g, 36);
  const auto comps = polyphase_decompose(v);
  const auto V = build_V(v);
  ASSERT_EQ(V.rows(), 6);
  ASSERT_EQ(V.cols(), 4);
  // (row, col) -> (component, delay)
  const std::map<std::pair<int, int>, std::pair<int, int>> expected = {
      {{0, 0}, {0, 0}}, {{0, 2}, {6, 1}},  {{1, 1}, {1, 0}},  {{1, 3}, {7, 1}},  {{2, 0}, {8, 1}},  {{2, 2}, {2, 0}},
      {{3, 1}, {9, 1}}, {{3, 3}, {3, 0}},  {{4, 0}, {4, 0}},  {{4, 2}, {10, 1}}, {{5, 1}, {5, 0}},  {{5, 3}, {11, 1}}};
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 4; ++c) {
      auto it = expected.find({r, c});
      if (it == expected.end()) {
        EXPECT_TRUE(V(r, c).is_zero()) << r << "," << c;
      } else {
        const auto [comp, delay] = it->second;
        EXPECT_EQ(V(r, c), comps[static_cast<std::size_t>(comp)].upsampled(2).shifted(delay)) << r << "," << c;
      }
    }
}

TEST(BuildV, DiagonalWhenKEqualsN) {
  const auto g = grid_params(5, 5);
  std::mt19937_64 rng(3);
  const auto v = random_waveform(g, 23, rng);
  const auto comps = polyphase_decompose(v);
  const auto V = build_V(v);
  for (int r = 0; r < 5; ++r)
    for (int c = 0; c < 5; ++c) {
      if (r == c) EXPECT_EQ(V(r, c), comps[static_cast<std::size_t>(r)]);
      else EXPECT_TRUE(V(r, c).is_zero());
    }
}

TEST(BuildV, ImpulseHasSingleEntry) {
  const auto V = build_V(Waveform({1.0}, 0, grid_params(4, 6)));
  for (int r = 0; r < 6; ++r)
    for (int c = 0; c < 4; ++c) EXPECT_EQ(V(r, c).is_zero(), !(r == 0 && c == 0));
  EXPECT_EQ(V(0, 0), LaurentPoly::constant(1.0));
}

TEST(BuildV, SparsityStructure) {
  std::mt19937_64 rng(4);
  for (auto g : {grid_params(4, 6), grid_params(6, 10), grid_params(12, 16)}) {
    const auto V = build_V(random_waveform(g, 5 * g.M + 3, rng, -7));
    for (int r = 0; r < g.K; ++r) {
      int nz = 0;
      for (int c = 0; c < g.N; ++c)
        if (!V(r, c).is_zero()) {
          ++nz;
          EXPECT_EQ(c % g.P, r % g.P);
        }
      EXPECT_LE(nz, g.J);
    }
    for (int c = 0; c < g.N; ++c) {
      int nz = 0;
      for (int r = 0; r < g.K; ++r) nz += !V(r, c).is_zero();
      EXPECT_LE(nz, g.L);
    }
  }
}

// M(z) = V(z) F_N, with [M(z)]_{l,k} = sum_n v[l + nK] e^{j 2 pi k (l + nK)/N} z^-n computed directly.
TEST(BuildV, MultiplexerFactorization) {
  std::mt19937_64 rng(5);
  for (auto g : {grid_params(4, 6), grid_params(6, 10)}) {
    const auto v = random_waveform(g, 3 * g.M + 5, rng, -4);
    const auto V = build_V(v);
    const double w = 2.0 * 3.14159265358979323846 / g.N;
    for (int l = 0; l < g.K; ++l)
      for (int k = 0; k < g.N; ++k) {
        std::map<int, cd> direct, product;
        for (int n = -20; n <= 20; ++n) {
          const int t = l + n * g.K;
          if (v.at(t) != 0.0) direct[n] += v.at(t) * std::polar(1.0, w * k * t);
        }
        for (int m = 0; m < g.N; ++m) {
          const auto& e = V(l, m);
          for (int d = e.min_deg(); d <= e.max_deg() && !e.is_zero(); ++d)
            product[d] += e.coeff(d) * std::polar(1.0, w * ((m * k) % g.N));
        }
        for (int n = -25; n <= 25; ++n) {
          const cd a = direct.count(n) ? direct[n] : cd{};
          const cd b = product.count(n) ? product[n] : cd{};
          EXPECT_LT(std::abs(a - b), 1e-12);
        }
      }
  }
}

// ---- blocks --------------------------------------------------------------------

TEST(ExtractBlocks, Grid4x6Layout) {
  const auto g = grid_params(4, 6);
  const auto v = counting_waveform(g, 36);
  const auto comps = polyphase_decompose(v);
  const auto b = extract_blocks(v);
  ASSERT_EQ(b.size(), 2u);
  const int idx[3][2] = {{0, 6}, {8, 2}, {4, 10}};
  const int adv[3][2] = {{0, 0}, {0, 1}, {0, 0}};
  for (int r = 0; r < 2; ++r)
    for (int i = 0; i < 3; ++i)
      for (int j = 0; j < 2; ++j)
        EXPECT_EQ(b[static_cast<std::size_t>(r)](i, j), comps[static_cast<std::size_t>(idx[i][j] + r)].shifted(-adv[i][j]));
}

TEST(ExtractBlocks, Grid128x160Layout) {
  const auto g = grid_params(128, 160);
  const auto v = counting_waveform(g, 2 * g.M);
  const auto comps = polyphase_decompose(v);
  const auto b = extract_blocks(v);
  ASSERT_EQ(b.size(), 32u);
  const int mult[5][4] = {{0, 5, 10, 15}, {16, 1, 6, 11}, {12, 17, 2, 7}, {8, 13, 18, 3}, {4, 9, 14, 19}};
  const int adv[5][4] = {{0, 0, 0, 0}, {0, 1, 1, 1}, {0, 0, 1, 1}, {0, 0, 0, 1}, {0, 0, 0, 0}};
  for (int r = 0; r < 32; ++r)
    for (int i = 0; i < 5; ++i)
      for (int j = 0; j < 4; ++j) {
        const auto& e = b[static_cast<std::size_t>(r)](i, j);
        EXPECT_EQ(e, comps[static_cast<std::size_t>(mult[i][j] * 32 + r)].shifted(-adv[i][j]));
        EXPECT_EQ(component_index(g, r, i, j), mult[i][j] * 32 + r);
      }
}

TEST(ExtractBlocks, RectangularWindowBlocks) {
  const auto g = grid_params(128, 160);
  const double a = 1.0 / std::sqrt(128.0);
  PolyMatrix expected(5, 4);
  for (int j = 0; j < 4; ++j) expected(j + 1, j) = LaurentPoly::constant(a);
  // the [0; I] form belongs to the placement on [512, 640); the window on [0, 128)
  // gives the same blocks up to the diagonal advances
  for (const auto& b : extract_blocks(rectangular_window(g, 128, a, 512))) EXPECT_EQ(b, expected);
  // and back
  std::vector<PolyMatrix> blocks(32, expected);
  const auto w = synthesize_from_blocks(blocks, g);
  EXPECT_EQ(w.length(), 128);
  EXPECT_EQ(w.nonzero_count(), 128);
  for (double t : w.taps()) EXPECT_EQ(t, a);
  EXPECT_EQ(w.first(), 512);
}

TEST(Synthesize, DegreeZeroSupportLaw) {
  const auto g = grid_params(128, 160);
  std::mt19937_64 rng(6);
  for (int t = 0; t < 5; ++t) {
    const auto w = testutil::random_orthonormal(g, 0, rng);
    EXPECT_EQ(w.nonzero_count(), 640);
    EXPECT_EQ(w.length(), 1024);
    EXPECT_LT(orthonormality_defect(w), 1e-12);
  }
}

TEST(Synthesize, RoundTripDegreeOne) {
  std::mt19937_64 rng(7);
  for (auto g : {grid_params(4, 6), grid_params(36, 40), grid_params(6, 10)}) {
    const auto blocks = testutil::random_blocks(g, 1, rng);
    const auto w = synthesize_from_blocks(blocks, g);
    const auto back = extract_blocks(w);
    // one global delay (whole periods) relates the two
    const int shift = back[0](0, 0).min_deg() - blocks[0](0, 0).min_deg();
    for (std::size_t r = 0; r < blocks.size(); ++r) EXPECT_EQ(back[r], blocks[r].shifted(shift));
    EXPECT_EQ(synthesize_from_blocks(back, g), w);
  }
}

TEST(Synthesize, ShapeErrors) {
  const auto g = grid_params(4, 6);
  std::vector<PolyMatrix> bad(2, PolyMatrix(2, 3));
  EXPECT_THROW(synthesize_from_blocks(bad, g), std::invalid_argument);
  std::vector<PolyMatrix> few(1, PolyMatrix(3, 2));
  EXPECT_THROW(synthesize_from_blocks(few, g), std::invalid_argument);
}

// ---- orthonormality -------------------------------------------------------------

TEST(Orthonormality, Examples) {
  const auto g = grid_params(4, 6);
  EXPECT_LT(orthonormality_defect(rectangular_window(g, 4, 0.5)), 1e-15);
  EXPECT_NEAR(orthonormality_defect(rectangular_window(g, 4, 1.0)), 3.0 / 4.0, 1e-15);
  const auto g2 = grid_params(128, 160);
  EXPECT_NEAR(orthonormality_defect(rectangular_window(g2, 128, 2.0 / std::sqrt(128.0))), 3.0 / 128.0, 1e-14);
}

TEST(Orthonormality, AgreesWithBruteForceGram) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> n;
  const auto g = grid_params(4, 6);
  for (int t = 0; t < 10; ++t) {
    const auto v = testutil::random_orthonormal(g, t % 3, rng);
    EXPECT_LT(orthonormality_defect(v), 1e-12);
    EXPECT_LT(testutil::brute_gram_defect(v), 1e-11);
    auto taps = v.taps();
    taps[static_cast<std::size_t>(t) % taps.size()] += 0.05;
    const Waveform bad(taps, v.offset(), g);
    EXPECT_GT(orthonormality_defect(bad), 1e-3);
    EXPECT_GT(testutil::brute_gram_defect(bad), 1e-3);
  }
}

TEST(ShortWindow, Examples) {
  const auto g = grid_params(4, 6);
  const auto rect = short_window(g, std::vector<double>{0.0, 0.0});
  EXPECT_EQ(rect, rectangular_window(g, 4, 0.5));
  const double h = std::acos(-1.0) / 2;
  const auto shifted = short_window(g, std::vector<double>{h, h});
  // cos(pi/2) rounds to ~6e-17, so the leading taps are tiny rather than trimmed
  for (int n = 0; n < 2; ++n) EXPECT_NEAR(shifted.at(n), 0.0, 1e-16);
  for (int n = 2; n < 6; ++n) EXPECT_NEAR(shifted.at(n), 0.5, 1e-15);
  const double q = std::acos(-1.0) / 4;
  const auto mid = short_window(g, std::vector<double>{q, q});
  const double c = 0.5 * std::sqrt(2.0) / 2;
  const std::vector<double> want{c, c, 0.5, 0.5, c, c};
  for (int k = 0; k < 6; ++k) EXPECT_NEAR(mid.taps()[static_cast<std::size_t>(k)], want[static_cast<std::size_t>(k)], 1e-15);
  EXPECT_THROW(short_window(grid_params(4, 9), std::vector<double>(5, 0.0)), std::invalid_argument);
  EXPECT_THROW(short_window(g, std::vector<double>(3, 0.0)), std::invalid_argument);
}

TEST(ShortWindow, AlwaysOrthonormal) {
  std::mt19937_64 rng(9);
  std::uniform_real_distribution<double> a(-3, 3);
  for (auto g : {grid_params(4, 6), grid_params(128, 160), grid_params(36, 40)})
    for (int t = 0; t < 10; ++t) {
      std::vector<double> ang(static_cast<std::size_t>(g.guard));
      for (auto& x : ang) x = a(rng);
      EXPECT_LT(orthonormality_defect(short_window(g, ang)), 1e-15);
    }
}

TEST(OrthonormalBlocks, EquivalenceBothDirections) {
  std::mt19937_64 rng(10);
  std::normal_distribution<double> n;
  for (auto g : {grid_params(4, 6), grid_params(36, 40), grid_params(6, 10)})
    for (int t = 0; t < 10; ++t) {
      const auto v = testutil::random_orthonormal(g, t % 3, rng);
      double worst = 0.0;
      for (const auto& b : extract_blocks(v)) worst = std::max(worst, paraunitarity_defect(b, 1.0 / g.N));
      EXPECT_LT(orthonormality_defect(v), 1e-10);
      EXPECT_LT(worst, 1e-10);
      auto taps = v.taps();
      for (auto& x : taps)
        if (x != 0.0) x += 1e-3 * n(rng);
      const Waveform p(taps, v.offset(), g);
      worst = 0.0;
      for (const auto& b : extract_blocks(p)) worst = std::max(worst, paraunitarity_defect(b, 1.0 / g.N));
      EXPECT_GT(orthonormality_defect(p), 1e-6);
      EXPECT_GT(worst, 1e-6);
      // both measure the same coefficients of the same Gram sums
      EXPECT_NEAR(orthonormality_defect(p), worst, 1e-12);
    }
}

// ---- tight frame ------------------------------------------------------------------

namespace {

/// S x = sum_{i, k} <x, xi_{k,i}> xi_{k,i},  xi_{k,i}[n] = v[n - iN] e^{j 2 pi k (n - iN)/K}.
std::vector<double> brute_frame_operator(const Waveform& v, const std::vector<double>& x, int x_first, int out_first,
                                         int out_len) {
  const int N = v.grid().N, K = v.grid().K;
  const double w = 2.0 * 3.14159265358979323846 / K;
  std::vector<cd> out(static_cast<std::size_t>(out_len));
  const int x_last = x_first + static_cast<int>(x.size()) - 1;
  for (int i = (x_first - v.last()) / N - 2; i <= (x_last - v.first()) / N + 2; ++i)
    for (int k = 0; k < K; ++k) {
      cd c{};
      for (int m = x_first; m <= x_last; ++m)
        c += x[static_cast<std::size_t>(m - x_first)] * v.at(m - i * N) * std::polar(1.0, -w * k * (m - i * N));
      for (int t = 0; t < out_len; ++t) {
        const int n = out_first + t;
        out[static_cast<std::size_t>(t)] += c * v.at(n - i * N) * std::polar(1.0, w * k * (n - i * N));
      }
    }
  std::vector<double> re;
  for (auto& z : out) {
    EXPECT_LT(std::abs(z.imag()), 1e-9);
    re.push_back(z.real());
  }
  return re;
}

}  // namespace

TEST(TightFrame, FrameOperatorMatchesBruteForce) {
  std::mt19937_64 rng(11);
  std::normal_distribution<double> n;
  const auto g = grid_params(4, 6);
  for (int t = 0; t < 4; ++t) {
    const auto v = t == 0 ? rectangular_window(g, 5, 0.3, -2) : random_waveform(g, 7 + 5 * t, rng, t - 3);
    std::vector<double> x(17);
    for (auto& s : x) s = n(rng);
    const int xf = -5 + t;
    const auto fast = dual_frame_operator(v, x, xf);
    const auto slow = brute_frame_operator(v, x, xf, fast.first, static_cast<int>(fast.values.size()));
    for (std::size_t k = 0; k < slow.size(); ++k) EXPECT_NEAR(fast.values[k], slow[k], 1e-10);
  }
}

TEST(TightFrame, RectangularImpulseResponse) {
  // S applied to an impulse, brute force, gives the frame constant directly
  const auto g = grid_params(4, 6);
  const auto v = rectangular_window(g, 4, 0.5);
  const auto s = brute_frame_operator(v, {1.0}, 0, -10, 21);
  for (int k = 0; k < 21; ++k) EXPECT_NEAR(s[static_cast<std::size_t>(k)], k == 10 ? 6.0 / 4.0 : 0.0, 1e-12);
  EXPECT_NEAR(frame_bound_estimate(v, 3), 6.0 / 4.0, 1e-12);
}

TEST(TightFrame, DualityExamples) {
  std::mt19937_64 rng(12);
  for (auto g : {grid_params(4, 6), grid_params(36, 40)})
    for (int t = 0; t < 5; ++t) {
      const auto v = testutil::random_orthonormal(g, t % 3, rng);
      ASSERT_LT(orthonormality_defect(v), 1e-12);
      EXPECT_LT(tight_frame_defect(v, 3, 100 + t), 1e-9);
    }
  const auto g = grid_params(4, 6);
  EXPECT_GT(tight_frame_defect(rectangular_window(g, 4, 1.0), 2, 1), 0.01);
  EXPECT_THROW(tight_frame_defect(rectangular_window(g, 4, 0.5), 1, 1), std::invalid_argument);
}

// ---- file format --------------------------------------------------------------------

TEST(WaveformFile, BitExactRoundTrip) {
  std::mt19937_64 rng(13);
  const auto g = grid_params(36, 40);
  const auto v = testutil::random_orthonormal(g, 2, rng).delayed(-3);
  std::stringstream ss;
  write_waveform(ss, v);
  const std::string head = "# wfm v1 N=36 K=40 offset=" + std::to_string(v.offset()) + " len=" + std::to_string(v.length()) + "\n";
  EXPECT_EQ(ss.str().rfind(head, 0), 0u);
  const auto back = read_waveform(ss);
  EXPECT_EQ(back, v);
  EXPECT_EQ(back.taps(), v.taps());
}

TEST(WaveformFile, RejectsBadInput) {
  auto parse = [](const std::string& s) {
    std::istringstream is(s);
    return read_waveform(is);
  };
  EXPECT_THROW(parse("# wfm v2 N=4 K=6 offset=0 len=1\n1\n"), WaveformFormatError);
  EXPECT_THROW(parse("# wfm v1 N=4 K=6 offset=0 len=2\n1\n"), WaveformFormatError);
  EXPECT_THROW(parse("# wfm v1 N=4 K=6 offset=0 len=1\nabc\n"), WaveformFormatError);
  EXPECT_THROW(parse("# wfm v1 N=6 K=4 offset=0 len=1\n1\n"), WaveformFormatError);
  EXPECT_THROW(parse("# wfm v1 N=4 K=6 offset=0 len=2\n1\n0\n"), WaveformFormatError);
  EXPECT_THROW(parse(""), WaveformFormatError);
  EXPECT_NO_THROW(parse("# wfm v1 N=4 K=6 offset=-2 len=2\n1\n0.5\n"));
}

TEST(WaveformType, Invariants) {
  const auto g = grid_params(4, 6);
  const Waveform w({0.0, 0.0, 1.0, 2.0, 0.0}, 3, g);
  EXPECT_EQ(w.first(), 5);
  EXPECT_EQ(w.length(), 2);
  EXPECT_THROW(Waveform({0.0, 0.0}, 0, g), std::invalid_argument);
  EXPECT_THROW(Waveform({std::nan("")}, 0, g), std::invalid_argument);
}
