#pragma once

// Real paraunitary polynomial matrices from free rotation parameters,
// completion of rectangular ones to square, and the left-inverse family
// used to build biorthogonal demultiplexing waveforms.

#include <cmath>
#include <span>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "wh/grid.hpp"
#include "wh/laurent.hpp"
#include "wh/waveform.hpp"
#include "wh/weyl_heisenberg.hpp"

namespace wh {

/// Dense real matrix, row-major. Just enough for the constant factors here.
struct Dense {
  int rows = 0;
  int cols = 0;
  std::vector<double> a;

  Dense() = default;
  Dense(int r, int c) : rows(r), cols(c), a(static_cast<std::size_t>(r) * static_cast<std::size_t>(c), 0.0) {}

  static Dense identity(int n) {
    Dense m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  double& operator()(int r, int c) { return a[static_cast<std::size_t>(r * cols + c)]; }
  double operator()(int r, int c) const { return a[static_cast<std::size_t>(r * cols + c)]; }

  friend Dense operator*(const Dense& x, const Dense& y) {
    if (x.cols != y.rows) throw std::invalid_argument("Dense *: dimension mismatch");
    Dense r(x.rows, y.cols);
    for (int i = 0; i < x.rows; ++i)
      for (int k = 0; k < x.cols; ++k) {
        const double xik = x(i, k);
        if (xik == 0.0) continue;
        for (int j = 0; j < y.cols; ++j) r(i, j) += xik * y(k, j);
      }
    return r;
  }

  PolyMatrix as_poly(int delay = 0) const {
    PolyMatrix m(rows, cols);
    for (int i = 0; i < rows; ++i)
      for (int j = 0; j < cols; ++j) m(i, j) = LaurentPoly::monomial((*this)(i, j), delay);
    return m;
  }
};

inline Dense dense_coefficient(const PolyMatrix& m, int d) {
  Dense r(m.rows(), m.cols());
  r.a = m.coefficient(d);
  return r;
}

inline double determinant(Dense m) {
  if (m.rows != m.cols) throw std::invalid_argument("determinant: not square");
  const int n = m.rows;
  double det = 1.0;
  for (int c = 0; c < n; ++c) {
    int piv = c;
    for (int r = c + 1; r < n; ++r)
      if (std::abs(m(r, c)) > std::abs(m(piv, c))) piv = r;
    if (m(piv, c) == 0.0) return 0.0;
    if (piv != c) {
      for (int j = 0; j < n; ++j) std::swap(m(piv, j), m(c, j));
      det = -det;
    }
    det *= m(c, c);
    for (int r = c + 1; r < n; ++r) {
      const double f = m(r, c) / m(c, c);
      for (int j = c; j < n; ++j) m(r, j) -= f * m(c, j);
    }
  }
  return det;
}

/// Givens rotation in the (a, b) plane: rows a, b of the identity become
/// [cos -sin; sin cos].
inline Dense givens(int n, int a, int b, double theta) {
  Dense g = Dense::identity(n);
  const double c = std::cos(theta), s = std::sin(theta);
  g(a, a) = c;
  g(a, b) = -s;
  g(b, a) = s;
  g(b, b) = c;
  return g;
}

/// R = prod over planes (c, r), c < r in lexicographic order, of givens(c, r, angle).
inline Dense rotation_from_angles(int n, std::span<const double> angles) {
  if (static_cast<int>(angles.size()) != n * (n - 1) / 2)
    throw std::invalid_argument("rotation_from_angles: expected " + std::to_string(n * (n - 1) / 2) + " angles");
  Dense r = Dense::identity(n);
  std::size_t k = 0;
  for (int c = 0; c + 1 < n; ++c)
    for (int row = c + 1; row < n; ++row) {
      // right-multiply by givens(c, row, angle): only columns c and row change
      const double cs = std::cos(angles[k]), sn = std::sin(angles[k]);
      ++k;
      for (int i = 0; i < n; ++i) {
        const double x = r(i, c), y = r(i, row);
        r(i, c) = cs * x + sn * y;
        r(i, row) = -sn * x + cs * y;
      }
    }
  return r;
}

/// Inverse of rotation_from_angles for a rotation (det +1).
inline std::vector<double> angles_from_rotation(Dense r) {
  const int n = r.rows;
  std::vector<double> angles;
  angles.reserve(static_cast<std::size_t>(n * (n - 1) / 2));
  for (int c = 0; c + 1 < n; ++c)
    for (int row = c + 1; row < n; ++row) {
      const double theta = std::atan2(r(row, c), r(c, c));
      angles.push_back(theta);
      // r <- givens(c, row, theta)^T r
      const double cs = std::cos(theta), sn = std::sin(theta);
      for (int j = 0; j < n; ++j) {
        const double x = r(c, j), y = r(row, j);
        r(c, j) = cs * x + sn * y;
        r(row, j) = -sn * x + cs * y;
      }
    }
  return angles;
}

/// Unit vector from L-1 spherical angles.
inline std::vector<double> unit_vector(int n, std::span<const double> angles) {
  if (static_cast<int>(angles.size()) != n - 1)
    throw std::invalid_argument("unit_vector: expected " + std::to_string(n - 1) + " angles");
  std::vector<double> u(static_cast<std::size_t>(n));
  double s = 1.0;
  for (int k = 0; k + 1 < n; ++k) {
    u[static_cast<std::size_t>(k)] = s * std::cos(angles[static_cast<std::size_t>(k)]);
    s *= std::sin(angles[static_cast<std::size_t>(k)]);
  }
  u[static_cast<std::size_t>(n - 1)] = s;
  return u;
}

/// Spherical angles of a unit vector (inverse of unit_vector).
inline std::vector<double> unit_vector_angles(const std::vector<double>& u) {
  const int n = static_cast<int>(u.size());
  std::vector<double> a(static_cast<std::size_t>(std::max(0, n - 1)));
  for (int k = 0; k + 1 < n; ++k) {
    double tail = 0.0;
    for (int m = k + 1; m < n; ++m) tail += u[static_cast<std::size_t>(m)] * u[static_cast<std::size_t>(m)];
    tail = std::sqrt(tail);
    // the last angle keeps the sign of the last component
    if (k + 2 == n && u[static_cast<std::size_t>(n - 1)] < 0.0) tail = -tail;
    a[static_cast<std::size_t>(k)] = std::atan2(tail, u[static_cast<std::size_t>(k)]);
  }
  return a;
}

/// Free parameters of an L x L paraunitary matrix of degree D (first J columns used).
struct ParaunitaryParams {
  int L = 1;
  int J = 1;
  int degree = 0;
  std::vector<double> base_angles;                 ///< L(L-1)/2
  std::vector<std::vector<double>> stage_angles;   ///< D rows of L-1

  static ParaunitaryParams zeros(int L, int J, int degree) {
    ParaunitaryParams p;
    p.L = L;
    p.J = J;
    p.degree = degree;
    p.base_angles.assign(static_cast<std::size_t>(L * (L - 1) / 2), 0.0);
    p.stage_angles.assign(static_cast<std::size_t>(degree), std::vector<double>(static_cast<std::size_t>(L - 1), 0.0));
    return p;
  }

  int parameter_count() const { return L * (L - 1) / 2 + degree * (L - 1); }

  void validate() const {
    if (L < 1 || J < 1 || degree < 0) throw std::invalid_argument("ParaunitaryParams: bad L, J or degree");
    if (static_cast<int>(base_angles.size()) != L * (L - 1) / 2)
      throw std::invalid_argument("ParaunitaryParams: base_angles must have L(L-1)/2 entries");
    if (static_cast<int>(stage_angles.size()) != degree)
      throw std::invalid_argument("ParaunitaryParams: stage_angles must have `degree` rows");
    for (const auto& s : stage_angles)
      if (static_cast<int>(s.size()) != L - 1)
        throw std::invalid_argument("ParaunitaryParams: each stage needs L-1 angles");
    for (double a : base_angles)
      if (!std::isfinite(a)) throw std::invalid_argument("ParaunitaryParams: non-finite angle");
    for (const auto& s : stage_angles)
      for (double a : s)
        if (!std::isfinite(a)) throw std::invalid_argument("ParaunitaryParams: non-finite angle");
  }

  /// Flat view: base angles, then stages in order.
  std::vector<double> flatten() const {
    std::vector<double> x = base_angles;
    for (const auto& s : stage_angles) x.insert(x.end(), s.begin(), s.end());
    return x;
  }

  void assign(std::span<const double> x) {
    if (static_cast<int>(x.size()) != parameter_count())
      throw std::invalid_argument("ParaunitaryParams::assign: wrong parameter count");
    std::size_t k = 0;
    for (double& a : base_angles) a = x[k++];
    for (auto& s : stage_angles)
      for (double& a : s) a = x[k++];
  }
};

/// I - u u^T + z^-1 u u^T
inline PolyMatrix degree_one_factor(const std::vector<double>& u) {
  const int n = static_cast<int>(u.size());
  PolyMatrix f(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < n; ++j) {
      const double p = u[static_cast<std::size_t>(i)] * u[static_cast<std::size_t>(j)];
      f(i, j) = LaurentPoly({(i == j ? 1.0 : 0.0) - p, p}, 0);
    }
  return f;
}

/// Q(z) = [prod_d (I - u_d u_d^T + z^-1 u_d u_d^T)] R
inline PolyMatrix build_square_paraunitary(const ParaunitaryParams& p) {
  p.validate();
  PolyMatrix q = rotation_from_angles(p.L, p.base_angles).as_poly();
  for (int d = p.degree - 1; d >= 0; --d)
    q = mat_mul(degree_one_factor(unit_vector(p.L, p.stage_angles[static_cast<std::size_t>(d)])), q);
  return q;
}

inline PolyMatrix rect_paraunitary(const ParaunitaryParams& p) {
  if (p.J > p.L) throw std::invalid_argument("rect_paraunitary: J > L");
  return build_square_paraunitary(p).columns(0, p.J);
}

/// Gram-Schmidt completion of orthonormal columns against e_0, e_1, ...
/// Basis vectors whose residual norm drops below 1e-8 are skipped.
inline Dense complete_orthonormal_columns(const Dense& c) {
  const int L = c.rows, J = c.cols;
  Dense out(L, L);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < J; ++j) out(i, j) = c(i, j);
  int filled = J;
  for (int e = 0; e < L && filled < L; ++e) {
    std::vector<double> v(static_cast<std::size_t>(L), 0.0);
    v[static_cast<std::size_t>(e)] = 1.0;
    for (int pass = 0; pass < 2; ++pass)
      for (int k = 0; k < filled; ++k) {
        double dot = 0.0;
        for (int i = 0; i < L; ++i) dot += out(i, k) * v[static_cast<std::size_t>(i)];
        for (int i = 0; i < L; ++i) v[static_cast<std::size_t>(i)] -= dot * out(i, k);
      }
    double nrm = 0.0;
    for (double x : v) nrm += x * x;
    nrm = std::sqrt(nrm);
    if (nrm < 1e-8) continue;
    for (int i = 0; i < L; ++i) out(i, filled) = v[static_cast<std::size_t>(i)] / nrm;
    ++filled;
  }
  if (filled != L) throw std::runtime_error("complete_orthonormal_columns: input columns are not independent");
  return out;
}

/// Givens parameters whose first J columns reproduce the constant
/// orthonormal columns `c` (L x J).
inline ParaunitaryParams params_from_constant_columns(const Dense& c) {
  Dense full = complete_orthonormal_columns(c);
  if (determinant(full) < 0.0) {
    if (c.cols == c.rows)
      throw std::invalid_argument("params_from_constant_columns: square input with det -1 is not a rotation");
    for (int i = 0; i < full.rows; ++i) full(i, full.cols - 1) = -full(i, full.cols - 1);
  }
  ParaunitaryParams p = ParaunitaryParams::zeros(c.rows, c.cols, 0);
  p.base_angles = angles_from_rotation(full);
  return p;
}

class NotParaunitaryError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Square completion [V | V^c] of an L x J matrix with V~ V = scale I.
///
/// Degree-one factors are peeled off (u taken from the top coefficient's
/// column space, which is orthogonal to the bottom coefficient's), the
/// remaining constant columns are completed by Gram-Schmidt and the factors
/// reapplied. The first J columns of the result are exactly V.
inline PolyMatrix complete_to_square(const PolyMatrix& V, double scale = 1.0, double tol = 1e-9) {
  const int L = V.rows(), J = V.cols();
  if (J > L) throw std::invalid_argument("complete_to_square: more columns than rows");
  const double defect = paraunitarity_defect(V, scale);
  if (!(defect < tol))
    throw NotParaunitaryError("complete_to_square: input is not paraunitary (defect " + std::to_string(defect) + ")");
  if (J == L) return V;
  const double amp = std::sqrt(scale);
  const auto [lo, hi] = V.degree_range();
  // causal, unit scale, coefficients C_0 .. C_D
  std::vector<Dense> coef;
  for (int d = lo; d <= hi; ++d) {
    Dense c = dense_coefficient(V, d);
    for (double& x : c.a) x /= amp;
    coef.push_back(std::move(c));
  }
  auto max_abs = [](const Dense& m) {
    double r = 0.0;
    for (double x : m.a) r = std::max(r, std::abs(x));
    return r;
  };
  auto trim = [&] {
    while (coef.size() > 1 && max_abs(coef.back()) < tol) coef.pop_back();
    while (coef.size() > 1 && max_abs(coef.front()) < tol) coef.erase(coef.begin());
  };
  trim();
  std::vector<std::vector<double>> factors;
  const int max_steps = L * J * (hi - lo + 2) + 8;
  while (coef.size() > 1) {
    if (static_cast<int>(factors.size()) > max_steps)
      throw std::runtime_error("complete_to_square: factor extraction did not converge");
    const Dense& top = coef.back();
    int best = 0;
    double best_norm = -1.0;
    for (int j = 0; j < J; ++j) {
      double nn = 0.0;
      for (int i = 0; i < L; ++i) nn += top(i, j) * top(i, j);
      if (nn > best_norm) {
        best_norm = nn;
        best = j;
      }
    }
    const double nrm = std::sqrt(best_norm);
    std::vector<double> u(static_cast<std::size_t>(L));
    for (int i = 0; i < L; ++i) u[static_cast<std::size_t>(i)] = top(i, best) / nrm;
    // C'_k = (I - u u^T) C_k + u u^T C_{k+1}
    const std::size_t D = coef.size() - 1;
    std::vector<Dense> next(D + 1, Dense(L, J));
    for (std::size_t k = 0; k <= D; ++k)
      for (int j = 0; j < J; ++j) {
        double pk = 0.0, pk1 = 0.0;
        for (int i = 0; i < L; ++i) {
          pk += u[static_cast<std::size_t>(i)] * coef[k](i, j);
          if (k < D) pk1 += u[static_cast<std::size_t>(i)] * coef[k + 1](i, j);
        }
        for (int i = 0; i < L; ++i)
          next[k](i, j) = coef[k](i, j) - u[static_cast<std::size_t>(i)] * pk + u[static_cast<std::size_t>(i)] * pk1;
      }
    coef = std::move(next);
    factors.push_back(std::move(u));
    trim();
  }
  const Dense full = complete_orthonormal_columns(coef.front());
  Dense extra(L, L - J);
  for (int i = 0; i < L; ++i)
    for (int j = 0; j < L - J; ++j) extra(i, j) = full(i, J + j) * amp;
  PolyMatrix vc = extra.as_poly();
  for (auto it = factors.rbegin(); it != factors.rend(); ++it) vc = mat_mul(degree_one_factor(*it), vc);
  vc = vc.shifted(lo);
  PolyMatrix out(L, L);
  for (int i = 0; i < L; ++i) {
    for (int j = 0; j < J; ++j) out(i, j) = V(i, j);
    for (int j = 0; j < L - J; ++j) out(i, J + j) = vc(i, j);
  }
  return out;
}

/// U^o = V^s [I; A]. With V^s paraunitary, (U^o(z^-1))^T V^s[:, :J] = scale I
/// for every (L-J) x J polynomial matrix A.
inline PolyMatrix left_inverse_family(const PolyMatrix& Vs, const PolyMatrix& A) {
  const int L = Vs.rows();
  if (Vs.cols() != L) throw std::invalid_argument("left_inverse_family: V^s must be square");
  const int J = L - A.rows();
  if (A.rows() >= L || A.cols() != J)
    throw std::invalid_argument("left_inverse_family: A must be (L-J) x J");
  PolyMatrix stacked(L, J);
  for (int j = 0; j < J; ++j) stacked(j, j) = LaurentPoly::constant(1.0);
  for (int i = 0; i < A.rows(); ++i)
    for (int j = 0; j < J; ++j) stacked(J + i, j) = A(i, j);
  return mat_mul(Vs, stacked);
}

/// Free (L-J) x J polynomial matrices A_r, one per block.
struct BiorthParams {
  std::vector<PolyMatrix> A_blocks;

  static BiorthParams zeros(const GridParams& g) {
    BiorthParams b;
    b.A_blocks.assign(static_cast<std::size_t>(g.P), PolyMatrix(g.L - g.J, g.J));
    return b;
  }
};

/// Demultiplexing prototype w (psi_k[n] = w[n] e^{j 2 pi k n / N}) interleaved
/// from U^o blocks at the same absolute positions as the multiplexing
/// waveform they were derived from.
inline Waveform synthesize_biorthogonal(std::span<const PolyMatrix> blocks_U, const GridParams& g) {
  return interleave_blocks(blocks_U, g);
}

/// Completes each block of an orthonormal v and applies A; returns the
/// biorthogonal demultiplexing prototype.
inline Waveform biorthogonal_partner(const Waveform& v, const BiorthParams& A) {
  const GridParams& g = v.grid();
  if (static_cast<int>(A.A_blocks.size()) != g.P)
    throw std::invalid_argument("biorthogonal_partner: need one A block per polyphase block");
  const auto blocks = extract_blocks(v);
  const double scale = 1.0 / g.N;
  std::vector<PolyMatrix> u;
  u.reserve(blocks.size());
  for (std::size_t r = 0; r < blocks.size(); ++r) {
    if (g.L == g.J) {
      u.push_back(blocks[r]);
      continue;
    }
    const PolyMatrix vs = complete_to_square(blocks[r], scale);
    u.push_back(left_inverse_family(vs, A.A_blocks[r]));
  }
  return synthesize_biorthogonal(u, g);
}

/// key=value text block:
///   degree=<D>
///   base_angles=a,b,...
///   stage_angles=a,b,...;c,d,...
inline std::string serialize_params(const ParaunitaryParams& p) {
  std::ostringstream os;
  os.precision(17);
  os << "L=" << p.L << "\nJ=" << p.J << "\ndegree=" << p.degree << "\nbase_angles=";
  for (std::size_t k = 0; k < p.base_angles.size(); ++k) os << (k ? "," : "") << p.base_angles[k];
  os << "\nstage_angles=";
  for (std::size_t d = 0; d < p.stage_angles.size(); ++d) {
    if (d) os << ";";
    for (std::size_t k = 0; k < p.stage_angles[d].size(); ++k) os << (k ? "," : "") << p.stage_angles[d][k];
  }
  os << "\n";
  return os.str();
}

inline ParaunitaryParams parse_params(const std::string& text) {
  ParaunitaryParams p;
  p.L = p.J = -1;
  p.degree = -1;
  auto parse_list = [](const std::string& s) {
    std::vector<double> out;
    std::stringstream ss(s);
    std::string item;
    while (std::getline(ss, item, ','))
      if (!item.empty()) out.push_back(std::stod(item));
    return out;
  };
  std::istringstream is(text);
  std::string line;
  std::string stages;
  while (std::getline(is, line)) {
    const auto eq = line.find('=');
    if (eq == std::string::npos) continue;
    const std::string key = line.substr(0, eq), val = line.substr(eq + 1);
    if (key == "L") p.L = std::stoi(val);
    else if (key == "J") p.J = std::stoi(val);
    else if (key == "degree") p.degree = std::stoi(val);
    else if (key == "base_angles") p.base_angles = parse_list(val);
    else if (key == "stage_angles") stages = val;
  }
  if (p.L < 1 || p.J < 1 || p.degree < 0) throw std::invalid_argument("parse_params: missing L, J or degree");
  std::stringstream ss(stages);
  std::string stage;
  while (std::getline(ss, stage, ';')) p.stage_angles.push_back(parse_list(stage));
  if (p.degree > 0 && p.L == 1) p.stage_angles.assign(static_cast<std::size_t>(p.degree), {});
  p.validate();
  return p;
}

}  // namespace wh
