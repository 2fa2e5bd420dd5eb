#pragma once

// Laurent polynomials in z^-1 with real coefficients, and matrices of them.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

namespace wh {

/// A Laurent polynomial  p(z) = sum_k coeffs[k] * z^-(min_deg + k).
///
/// A negative min_deg therefore denotes advance terms z^{+|min_deg|}.
/// Only exact zeros are trimmed, so numerically tiny coefficients survive
/// and defect measurements stay honest.
class LaurentPoly {
 public:
  LaurentPoly() = default;

  LaurentPoly(std::vector<double> coeffs, int min_deg)
      : coeffs_(std::move(coeffs)), min_deg_(min_deg) {
    trim();
  }

  static LaurentPoly constant(double c) { return LaurentPoly({c}, 0); }

  /// c * z^-d
  static LaurentPoly monomial(double c, int d) { return LaurentPoly({c}, d); }

  static LaurentPoly delay(int d) { return monomial(1.0, d); }

  bool is_zero() const { return coeffs_.empty(); }

  const std::vector<double>& coeffs() const { return coeffs_; }
  int min_deg() const { return min_deg_; }
  int max_deg() const { return min_deg_ + static_cast<int>(coeffs_.size()) - 1; }
  std::size_t size() const { return coeffs_.size(); }

  /// Coefficient of z^-d (zero outside the stored range).
  double coeff(int d) const {
    const int k = d - min_deg_;
    if (k < 0 || k >= static_cast<int>(coeffs_.size())) return 0.0;
    return coeffs_[static_cast<std::size_t>(k)];
  }

  /// Multiply by z^-d.
  LaurentPoly shifted(int d) const {
    LaurentPoly r = *this;
    if (!r.is_zero()) r.min_deg_ += d;
    return r;
  }

  /// Substitute z -> z^factor, i.e. spread coefficients `factor` apart.
  LaurentPoly upsampled(int factor) const {
    if (factor < 1) throw std::invalid_argument("upsampled: factor must be >= 1");
    if (is_zero()) return {};
    std::vector<double> c((coeffs_.size() - 1) * static_cast<std::size_t>(factor) + 1, 0.0);
    for (std::size_t k = 0; k < coeffs_.size(); ++k) c[k * static_cast<std::size_t>(factor)] = coeffs_[k];
    return LaurentPoly(std::move(c), min_deg_ * factor);
  }

  /// p(z^-1); coefficients are real so no conjugation is needed.
  LaurentPoly reflected() const {
    if (is_zero()) return {};
    std::vector<double> c(coeffs_.rbegin(), coeffs_.rend());
    return LaurentPoly(std::move(c), -max_deg());
  }

  LaurentPoly scaled(double s) const {
    std::vector<double> c = coeffs_;
    for (double& x : c) x *= s;
    return LaurentPoly(std::move(c), min_deg_);
  }

  double max_abs_coeff() const {
    double m = 0.0;
    for (double x : coeffs_) m = std::max(m, std::abs(x));
    return m;
  }

  friend LaurentPoly operator+(const LaurentPoly& a, const LaurentPoly& b) {
    if (a.is_zero()) return b;
    if (b.is_zero()) return a;
    const int lo = std::min(a.min_deg_, b.min_deg_);
    const int hi = std::max(a.max_deg(), b.max_deg());
    std::vector<double> c(static_cast<std::size_t>(hi - lo + 1), 0.0);
    for (std::size_t k = 0; k < a.coeffs_.size(); ++k)
      c[static_cast<std::size_t>(a.min_deg_ - lo) + k] += a.coeffs_[k];
    for (std::size_t k = 0; k < b.coeffs_.size(); ++k)
      c[static_cast<std::size_t>(b.min_deg_ - lo) + k] += b.coeffs_[k];
    return LaurentPoly(std::move(c), lo);
  }

  friend LaurentPoly operator-(const LaurentPoly& a) { return a.scaled(-1.0); }
  friend LaurentPoly operator-(const LaurentPoly& a, const LaurentPoly& b) { return a + (-b); }

  friend LaurentPoly operator*(const LaurentPoly& a, const LaurentPoly& b) {
    if (a.is_zero() || b.is_zero()) return {};
    std::vector<double> c(a.coeffs_.size() + b.coeffs_.size() - 1, 0.0);
    for (std::size_t i = 0; i < a.coeffs_.size(); ++i)
      for (std::size_t j = 0; j < b.coeffs_.size(); ++j) c[i + j] += a.coeffs_[i] * b.coeffs_[j];
    return LaurentPoly(std::move(c), a.min_deg_ + b.min_deg_);
  }

  LaurentPoly& operator+=(const LaurentPoly& o) { return *this = *this + o; }

  friend bool operator==(const LaurentPoly& a, const LaurentPoly& b) {
    return a.min_deg_ == b.min_deg_ && a.coeffs_ == b.coeffs_;
  }

  std::string to_string() const {
    if (is_zero()) return "0";
    std::string s;
    for (std::size_t k = 0; k < coeffs_.size(); ++k) {
      if (coeffs_[k] == 0.0) continue;
      if (!s.empty()) s += " + ";
      s += std::to_string(coeffs_[k]);
      const int d = min_deg_ + static_cast<int>(k);
      if (d != 0) s += "z^" + std::to_string(-d);
    }
    return s;
  }

 private:
  void trim() {
    std::size_t lead = 0;
    while (lead < coeffs_.size() && coeffs_[lead] == 0.0) ++lead;
    if (lead == coeffs_.size()) {
      coeffs_.clear();
      min_deg_ = 0;
      return;
    }
    std::size_t tail = coeffs_.size();
    while (coeffs_[tail - 1] == 0.0) --tail;
    coeffs_ = std::vector<double>(coeffs_.begin() + static_cast<std::ptrdiff_t>(lead),
                                  coeffs_.begin() + static_cast<std::ptrdiff_t>(tail));
    min_deg_ += static_cast<int>(lead);
  }

  std::vector<double> coeffs_;
  int min_deg_ = 0;
};

/// Dense row-major matrix of Laurent polynomials.
class PolyMatrix {
 public:
  PolyMatrix() = default;
  PolyMatrix(int rows, int cols)
      : rows_(rows), cols_(cols), entries_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols)) {
    if (rows < 0 || cols < 0) throw std::invalid_argument("PolyMatrix: negative dimension");
  }

  static PolyMatrix identity(int n) {
    PolyMatrix m(n, n);
    for (int i = 0; i < n; ++i) m(i, i) = LaurentPoly::constant(1.0);
    return m;
  }

  /// Constant matrix from row-major values.
  static PolyMatrix constant(int rows, int cols, const std::vector<double>& values) {
    if (values.size() != static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols))
      throw std::invalid_argument("PolyMatrix::constant: size mismatch");
    PolyMatrix m(rows, cols);
    for (std::size_t k = 0; k < values.size(); ++k) m.entries_[k] = LaurentPoly::constant(values[k]);
    return m;
  }

  int rows() const { return rows_; }
  int cols() const { return cols_; }

  LaurentPoly& operator()(int r, int c) { return entries_[index(r, c)]; }
  const LaurentPoly& operator()(int r, int c) const { return entries_[index(r, c)]; }

  const std::vector<LaurentPoly>& entries() const { return entries_; }

  /// Smallest and largest z^-1 exponent over all nonzero entries.
  /// Returns {0, -1} for the zero matrix.
  std::pair<int, int> degree_range() const {
    int lo = 0, hi = -1;
    bool any = false;
    for (const auto& e : entries_) {
      if (e.is_zero()) continue;
      if (!any) {
        lo = e.min_deg();
        hi = e.max_deg();
        any = true;
      } else {
        lo = std::min(lo, e.min_deg());
        hi = std::max(hi, e.max_deg());
      }
    }
    return {lo, hi};
  }

  /// Constant matrix of the z^-d coefficients, row-major.
  std::vector<double> coefficient(int d) const {
    std::vector<double> out(entries_.size());
    for (std::size_t k = 0; k < entries_.size(); ++k) out[k] = entries_[k].coeff(d);
    return out;
  }

  PolyMatrix shifted(int d) const {
    PolyMatrix r = *this;
    for (auto& e : r.entries_) e = e.shifted(d);
    return r;
  }

  PolyMatrix scaled(double s) const {
    PolyMatrix r = *this;
    for (auto& e : r.entries_) e = e.scaled(s);
    return r;
  }

  /// Columns [c0, c0 + n).
  PolyMatrix columns(int c0, int n) const {
    if (c0 < 0 || n < 0 || c0 + n > cols_) throw std::out_of_range("PolyMatrix::columns");
    PolyMatrix r(rows_, n);
    for (int i = 0; i < rows_; ++i)
      for (int j = 0; j < n; ++j) r(i, j) = (*this)(i, c0 + j);
    return r;
  }

  friend bool operator==(const PolyMatrix& a, const PolyMatrix& b) {
    return a.rows_ == b.rows_ && a.cols_ == b.cols_ && a.entries_ == b.entries_;
  }

  friend PolyMatrix operator+(const PolyMatrix& a, const PolyMatrix& b) {
    if (a.rows_ != b.rows_ || a.cols_ != b.cols_) throw std::invalid_argument("PolyMatrix +: dimension mismatch");
    PolyMatrix r(a.rows_, a.cols_);
    for (std::size_t k = 0; k < a.entries_.size(); ++k) r.entries_[k] = a.entries_[k] + b.entries_[k];
    return r;
  }

 private:
  std::size_t index(int r, int c) const {
    if (r < 0 || r >= rows_ || c < 0 || c >= cols_) throw std::out_of_range("PolyMatrix index");
    return static_cast<std::size_t>(r) * static_cast<std::size_t>(cols_) + static_cast<std::size_t>(c);
  }

  int rows_ = 0;
  int cols_ = 0;
  std::vector<LaurentPoly> entries_;
};

enum class PolyOp { add, mul };

inline LaurentPoly poly_arith(const LaurentPoly& a, const LaurentPoly& b, PolyOp op) {
  return op == PolyOp::add ? a + b : a * b;
}

/// Transpose, conjugate (identity on reals) and substitute z -> z^-1.
inline PolyMatrix paraconjugate(const PolyMatrix& m) {
  PolyMatrix r(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(j, i) = m(i, j).reflected();
  return r;
}

inline PolyMatrix transpose(const PolyMatrix& m) {
  PolyMatrix r(m.cols(), m.rows());
  for (int i = 0; i < m.rows(); ++i)
    for (int j = 0; j < m.cols(); ++j) r(j, i) = m(i, j);
  return r;
}

inline PolyMatrix mat_mul(const PolyMatrix& a, const PolyMatrix& b) {
  if (a.cols() != b.rows())
    throw std::invalid_argument("mat_mul: dimension mismatch (" + std::to_string(a.rows()) + "x" +
                                std::to_string(a.cols()) + " times " + std::to_string(b.rows()) + "x" +
                                std::to_string(b.cols()) + ")");
  PolyMatrix r(a.rows(), b.cols());
  for (int i = 0; i < a.rows(); ++i)
    for (int j = 0; j < b.cols(); ++j) {
      LaurentPoly acc;
      for (int k = 0; k < a.cols(); ++k) {
        const auto& x = a(i, k);
        const auto& y = b(k, j);
        if (x.is_zero() || y.is_zero()) continue;
        acc += x * y;
      }
      r(i, j) = std::move(acc);
    }
  return r;
}

/// Max |coefficient| of  m~(z) m(z) - scale * I.
inline double paraunitarity_defect(const PolyMatrix& m, double scale) {
  if (!(scale > 0.0)) throw std::invalid_argument("paraunitarity_defect: scale must be positive");
  const PolyMatrix g = mat_mul(paraconjugate(m), m);
  double defect = 0.0;
  for (int i = 0; i < g.rows(); ++i)
    for (int j = 0; j < g.cols(); ++j) {
      const auto& e = g(i, j);
      for (int d = e.min_deg(); d <= e.max_deg(); ++d) {
        const double target = (i == j && d == 0) ? scale : 0.0;
        defect = std::max(defect, std::abs(e.coeff(d) - target));
      }
      if (i == j && e.coeff(0) == 0.0) defect = std::max(defect, scale);
    }
  return defect;
}

}  // namespace wh
