#pragma once
//
// Dense complex matrices and a self-contained Hermitian eigensolver.
//
// Every operator in this project is a small dense matrix: local Hamiltonian
// terms on at most three qubits, marginal operators on at most six qubits,
// adjacency matrices of expander candidates.  A single flat row-major complex
// matrix type plus a cyclic Jacobi eigensolver covers all of it without an
// external linear-algebra dependency.  A Hermitian H = A + iB is diagonalized
// through its real-symmetric embedding [[A, -B], [B, A]], whose spectrum is
// that of H with every eigenvalue doubled.

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numeric>
#include <stdexcept>
#include <string>
#include <vector>

namespace quasiq {

using cdouble = std::complex<double>;

class CMatrix {
 public:
  CMatrix() = default;
  CMatrix(std::size_t rows, std::size_t cols)
      : rows_(rows), cols_(cols), a_(rows * cols, cdouble(0.0, 0.0)) {}

  static CMatrix identity(std::size_t n) {
    CMatrix m(n, n);
    for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  cdouble& operator()(std::size_t i, std::size_t j) { return a_[i * cols_ + j]; }
  const cdouble& operator()(std::size_t i, std::size_t j) const {
    return a_[i * cols_ + j];
  }

  CMatrix& operator+=(const CMatrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] += o.a_[i];
    return *this;
  }
  CMatrix& operator-=(const CMatrix& o) {
    check_same_shape(o);
    for (std::size_t i = 0; i < a_.size(); ++i) a_[i] -= o.a_[i];
    return *this;
  }
  CMatrix& operator*=(cdouble s) {
    for (auto& x : a_) x *= s;
    return *this;
  }

  friend CMatrix operator+(CMatrix a, const CMatrix& b) { return a += b; }
  friend CMatrix operator-(CMatrix a, const CMatrix& b) { return a -= b; }
  friend CMatrix operator*(cdouble s, CMatrix a) { return a *= s; }
  friend CMatrix operator*(CMatrix a, cdouble s) { return a *= s; }

  friend CMatrix operator*(const CMatrix& a, const CMatrix& b) {
    if (a.cols_ != b.rows_) throw std::invalid_argument("matmul shape mismatch");
    CMatrix c(a.rows_, b.cols_);
    for (std::size_t i = 0; i < a.rows_; ++i)
      for (std::size_t k = 0; k < a.cols_; ++k) {
        const cdouble aik = a(i, k);
        if (aik == cdouble(0.0, 0.0)) continue;
        for (std::size_t j = 0; j < b.cols_; ++j) c(i, j) += aik * b(k, j);
      }
    return c;
  }

  CMatrix adjoint() const {
    CMatrix c(cols_, rows_);
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = 0; j < cols_; ++j) c(j, i) = std::conj((*this)(i, j));
    return c;
  }

  cdouble trace() const {
    if (!square()) throw std::invalid_argument("trace of non-square matrix");
    cdouble t = 0.0;
    for (std::size_t i = 0; i < rows_; ++i) t += (*this)(i, i);
    return t;
  }

  double frobenius_norm() const {
    double s = 0.0;
    for (const auto& x : a_) s += std::norm(x);
    return std::sqrt(s);
  }

  double max_abs() const {
    double m = 0.0;
    for (const auto& x : a_) m = std::max(m, std::abs(x));
    return m;
  }

  bool is_hermitian(double tol = 1e-9) const {
    if (!square()) return false;
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t j = i; j < cols_; ++j)
        if (std::abs((*this)(i, j) - std::conj((*this)(j, i))) > tol) return false;
    return true;
  }

  /// y = M x for a complex vector x.
  std::vector<cdouble> apply(const std::vector<cdouble>& x) const {
    if (x.size() != cols_) throw std::invalid_argument("apply shape mismatch");
    std::vector<cdouble> y(rows_, cdouble(0.0, 0.0));
    for (std::size_t i = 0; i < rows_; ++i) {
      cdouble s = 0.0;
      const cdouble* row = &a_[i * cols_];
      for (std::size_t j = 0; j < cols_; ++j) s += row[j] * x[j];
      y[i] = s;
    }
    return y;
  }

 private:
  void check_same_shape(const CMatrix& o) const {
    if (rows_ != o.rows_ || cols_ != o.cols_)
      throw std::invalid_argument("matrix shape mismatch");
  }

  std::size_t rows_ = 0, cols_ = 0;
  std::vector<cdouble> a_;
};

/// Kronecker product; the left factor owns the most significant index block,
/// so site 0 of a register is always the leftmost tensor factor.
inline CMatrix kron(const CMatrix& a, const CMatrix& b) {
  CMatrix c(a.rows() * b.rows(), a.cols() * b.cols());
  for (std::size_t ia = 0; ia < a.rows(); ++ia)
    for (std::size_t ja = 0; ja < a.cols(); ++ja) {
      const cdouble f = a(ia, ja);
      if (f == cdouble(0.0, 0.0)) continue;
      for (std::size_t ib = 0; ib < b.rows(); ++ib)
        for (std::size_t jb = 0; jb < b.cols(); ++jb)
          c(ia * b.rows() + ib, ja * b.cols() + jb) = f * b(ib, jb);
    }
  return c;
}

/// Re Tr(A B); the value is exactly real when A and B are both Hermitian.
inline double real_trace_product(const CMatrix& a, const CMatrix& b) {
  if (a.cols() != b.rows() || a.rows() != b.cols())
    throw std::invalid_argument("trace product shape mismatch");
  double t = 0.0;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j)
      t += a(i, j).real() * b(j, i).real() - a(i, j).imag() * b(j, i).imag();
  return t;
}

namespace detail {

/// Cyclic Jacobi on a real symmetric matrix (flat row-major, size n*n).
/// Rotates until the off-diagonal Frobenius norm drops below
/// `offdiag_tol * max(1, ||S||_F)`.  Returns eigenvalues ascending and fills
/// `vecs` (column i of the returned basis is the eigenvector of value i).
inline std::vector<double> jacobi_symmetric(std::vector<double> s, std::size_t n,
                                            std::vector<double>* vecs,
                                            double offdiag_tol = 1e-13) {
  if (n == 0) return {};
  std::vector<double> v(n * n, 0.0);
  for (std::size_t i = 0; i < n; ++i) v[i * n + i] = 1.0;

  const double scale = [&] {
    double f = 0.0;
    for (double x : s) f += x * x;
    return std::max(1.0, std::sqrt(f));
  }();

  const int kMaxSweeps = 100;
  bool converged = false;
  for (int sweep = 0; sweep < kMaxSweeps && !converged; ++sweep) {
    double off2 = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off2 += 2.0 * s[p * n + q] * s[p * n + q];
    if (std::sqrt(off2) <= offdiag_tol * scale) {
      converged = true;
      break;
    }
    // Threshold strategy: early sweeps skip entries that are tiny relative to
    // the current off-diagonal mass, later sweeps rotate everything.
    const double thresh = (sweep < 4) ? 0.2 * off2 / double(n * n) : 0.0;

    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = s[p * n + q];
        if (apq == 0.0 || apq * apq <= thresh) continue;
        const double app = s[p * n + p];
        const double aqq = s[q * n + q];
        const double theta = (aqq - app) / (2.0 * apq);
        double t;
        if (std::abs(theta) > 1e12) {
          t = 1.0 / (2.0 * theta);
        } else {
          t = 1.0 / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
          if (theta < 0.0) t = -t;
        }
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        const double tau = sn / (1.0 + c);

        s[p * n + p] = app - t * apq;
        s[q * n + q] = aqq + t * apq;
        s[p * n + q] = 0.0;
        s[q * n + p] = 0.0;
        for (std::size_t k = 0; k < n; ++k) {
          if (k == p || k == q) continue;
          const double akp = s[k * n + p];
          const double akq = s[k * n + q];
          s[k * n + p] = akp - sn * (akq + tau * akp);
          s[p * n + k] = s[k * n + p];
          s[k * n + q] = akq + sn * (akp - tau * akq);
          s[q * n + k] = s[k * n + q];
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double vkp = v[k * n + p];
          const double vkq = v[k * n + q];
          v[k * n + p] = vkp - sn * (vkq + tau * vkp);
          v[k * n + q] = vkq + sn * (vkp - tau * vkq);
        }
      }
    }
  }
  if (!converged) {
    // One final tolerance check; the sweeps above nearly always converge in
    // well under twenty passes for the matrix sizes used here.
    double off2 = 0.0;
    for (std::size_t p = 0; p < n; ++p)
      for (std::size_t q = p + 1; q < n; ++q) off2 += 2.0 * s[p * n + q] * s[p * n + q];
    if (std::sqrt(off2) > 1e-10 * scale)
      throw std::runtime_error("jacobi_symmetric: no convergence");
  }

  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> diag(n);
  for (std::size_t i = 0; i < n; ++i) diag[i] = s[i * n + i];
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return diag[a] < diag[b]; });

  std::vector<double> values(n);
  for (std::size_t i = 0; i < n; ++i) values[i] = diag[order[i]];
  if (vecs) {
    vecs->assign(n * n, 0.0);
    for (std::size_t col = 0; col < n; ++col)
      for (std::size_t row = 0; row < n; ++row)
        (*vecs)[row * n + col] = v[row * n + order[col]];
  }
  return values;
}

}  // namespace detail

/// Eigenvalues (ascending) of a real symmetric matrix given flat row-major.
inline std::vector<double> symmetric_eigenvalues(const std::vector<double>& flat,
                                                 std::size_t n) {
  if (flat.size() != n * n) throw std::invalid_argument("bad flat matrix size");
  return detail::jacobi_symmetric(flat, n, nullptr);
}

struct EigenSystem {
  std::vector<double> values;                 // ascending
  std::vector<std::vector<cdouble>> vectors;  // vectors[i] pairs with values[i]
};

namespace detail {

inline std::vector<double> embed_real(const CMatrix& h) {
  const std::size_t m = h.rows();
  std::vector<double> e(4 * m * m, 0.0);
  const std::size_t n = 2 * m;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) {
      const double re = h(i, j).real();
      const double im = h(i, j).imag();
      e[i * n + j] = re;
      e[(m + i) * n + (m + j)] = re;
      e[i * n + (m + j)] = -im;
      e[(m + i) * n + j] = im;
    }
  return e;
}

}  // namespace detail

/// Full eigensystem of a Hermitian matrix.  Eigenvalues ascend; eigenvectors
/// are unit-norm and orthonormal (degenerate clusters are re-orthonormalized
/// with Gram-Schmidt).  Intended for dimensions up to a few hundred.
inline EigenSystem eigh(const CMatrix& h, double hermiticity_tol = 1e-8) {
  if (!h.square()) throw std::invalid_argument("eigh: non-square matrix");
  const std::size_t m = h.rows();
  if (m == 0) return {};
  if (!h.is_hermitian(hermiticity_tol * std::max(1.0, h.max_abs())))
    throw std::invalid_argument("eigh: matrix is not Hermitian");

  const std::size_t n = 2 * m;
  std::vector<double> vecs;
  std::vector<double> w = detail::jacobi_symmetric(detail::embed_real(h), n, &vecs);

  EigenSystem out;
  out.values.resize(m);
  for (std::size_t t = 0; t < m; ++t) out.values[t] = 0.5 * (w[2 * t] + w[2 * t + 1]);

  // Candidate complex eigenvectors: embedded column (u; v) -> u + iv.  Within
  // a near-degenerate cluster the raw candidates need not be independent, so
  // pick a complex orthonormal basis greedily (largest residual first).
  const double vscale = std::max(1.0, std::abs(std::max(std::abs(out.values.front()),
                                                        std::abs(out.values.back()))));
  const double cluster_tol = 1e-8 * vscale;

  auto column_complex = [&](std::size_t col) {
    std::vector<cdouble> z(m);
    for (std::size_t r = 0; r < m; ++r)
      z[r] = cdouble(vecs[r * n + col], vecs[(m + r) * n + col]);
    return z;
  };

  out.vectors.resize(m);
  std::size_t c0 = 0;
  while (c0 < m) {
    std::size_t c1 = c0 + 1;
    while (c1 < m && out.values[c1] - out.values[c1 - 1] <= cluster_tol) ++c1;
    const std::size_t k = c1 - c0;

    std::vector<std::vector<cdouble>> cands;
    cands.reserve(2 * k);
    for (std::size_t t = c0; t < c1; ++t) {
      cands.push_back(column_complex(2 * t));
      cands.push_back(column_complex(2 * t + 1));
    }
    std::vector<std::vector<cdouble>> basis;
    std::vector<bool> used(cands.size(), false);
    while (basis.size() < k) {
      // Orthogonalize every unused candidate against the current basis and
      // take the one with the largest remaining norm.
      double best_norm = -1.0;
      std::size_t best = 0;
      std::vector<cdouble> best_vec;
      for (std::size_t ci = 0; ci < cands.size(); ++ci) {
        if (used[ci]) continue;
        std::vector<cdouble> z = cands[ci];
        for (const auto& b : basis) {
          cdouble ip = 0.0;
          for (std::size_t r = 0; r < m; ++r) ip += std::conj(b[r]) * z[r];
          for (std::size_t r = 0; r < m; ++r) z[r] -= ip * b[r];
        }
        double nz = 0.0;
        for (const auto& x : z) nz += std::norm(x);
        nz = std::sqrt(nz);
        if (nz > best_norm) {
          best_norm = nz;
          best = ci;
          best_vec = std::move(z);
        }
      }
      if (best_norm < 1e-6)
        throw std::runtime_error("eigh: failed to extract eigenbasis");
      used[best] = true;
      for (auto& x : best_vec) x /= best_norm;
      basis.push_back(std::move(best_vec));
    }
    for (std::size_t t = 0; t < k; ++t) out.vectors[c0 + t] = std::move(basis[t]);
    c0 = c1;
  }
  return out;
}

/// Eigenvalues only, ascending.
inline std::vector<double> eigenvalues(const CMatrix& h) {
  if (!h.square()) throw std::invalid_argument("eigenvalues: non-square matrix");
  const std::size_t m = h.rows();
  if (m == 0) return {};
  if (!h.is_hermitian(1e-8 * std::max(1.0, h.max_abs())))
    throw std::invalid_argument("eigenvalues: matrix is not Hermitian");
  std::vector<double> w =
      detail::jacobi_symmetric(detail::embed_real(h), 2 * m, nullptr);
  std::vector<double> out(m);
  for (std::size_t t = 0; t < m; ++t) out[t] = 0.5 * (w[2 * t] + w[2 * t + 1]);
  return out;
}

/// Smallest eigenvalue.  Uses Jacobi below dimension 257 and a shifted power
/// iteration (deterministic start vector) above, where full sweeps would be
/// too slow; the large-dimension path only serves dense ground-energy queries.
inline double min_eigenvalue(const CMatrix& h) {
  if (!h.square()) throw std::invalid_argument("min_eigenvalue: non-square");
  const std::size_t m = h.rows();
  if (m == 0) throw std::invalid_argument("min_eigenvalue: empty matrix");
  if (m <= 256) return eigenvalues(h).front();

  // Gershgorin bound, then power iteration on (c I - H) whose top eigenvalue
  // is c - lambda_min.
  double c = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    double r = h(i, i).real();
    for (std::size_t j = 0; j < m; ++j)
      if (j != i) r += std::abs(h(i, j));
    c = std::max(c, std::abs(r));
  }
  c = c + 1.0;
  std::vector<cdouble> x(m);
  // Fixed quasi-random start so results are reproducible.
  std::uint64_t s = 0x9e3779b97f4a7c15ull;
  for (std::size_t i = 0; i < m; ++i) {
    s ^= s << 13;
    s ^= s >> 7;
    s ^= s << 17;
    x[i] = cdouble(double(s % 1000) / 1000.0 + 0.001, double((s >> 10) % 1000) / 1000.0);
  }
  double lambda = 0.0;
  double prev = 1e300;
  for (int it = 0; it < 20000; ++it) {
    std::vector<cdouble> y = h.apply(x);
    for (std::size_t i = 0; i < m; ++i) y[i] = c * x[i] - y[i];
    double ny = 0.0;
    for (const auto& t : y) ny += std::norm(t);
    ny = std::sqrt(ny);
    if (ny == 0.0) throw std::runtime_error("min_eigenvalue: zero iterate");
    for (auto& t : y) t /= ny;
    x.swap(y);
    if (it % 8 == 7) {
      std::vector<cdouble> hx = h.apply(x);
      cdouble q = 0.0;
      for (std::size_t i = 0; i < m; ++i) q += std::conj(x[i]) * hx[i];
      lambda = q.real();
      double resid = 0.0;
      for (std::size_t i = 0; i < m; ++i) resid += std::norm(hx[i] - lambda * x[i]);
      resid = std::sqrt(resid);
      if (resid <= 1e-10 * std::max(1.0, std::abs(lambda)) ||
          std::abs(lambda - prev) <= 1e-13 * std::max(1.0, std::abs(lambda)))
        return lambda;
      prev = lambda;
    }
  }
  return lambda;
}

inline bool is_psd(const CMatrix& h, double tol = 1e-9) {
  return min_eigenvalue(h) >= -tol;
}

/// Operator (spectral) norm: max |eigenvalue| for Hermitian input.
inline double operator_norm(const CMatrix& h) {
  const auto w = eigenvalues(h);
  if (w.empty()) return 0.0;
  return std::max(std::abs(w.front()), std::abs(w.back()));
}

}  // namespace quasiq
