#include "arcl/numcore/linalg.hpp"

#include <algorithm>
#include <cmath>

#include "arcl/numcore/error.hpp"

namespace arcl::linalg {

namespace {

void require_matrix(const Tensor& t, const char* what) {
  if (t.rank() != 2) throw ShapeError(std::string(what) + ": expected matrix, got " + shape_to_string(t.shape()));
}

}  // namespace

Tensor matmul(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul");
  require_matrix(b, "matmul");
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) throw ShapeError("matmul: inner dimensions differ");
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a.at(i, l) * b.at(l, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

Tensor matmul_tn(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_tn");
  require_matrix(b, "matmul_tn");
  const std::size_t k = a.shape()[0], n = a.shape()[1], m = b.shape()[1];
  if (b.shape()[0] != k) throw ShapeError("matmul_tn: row counts differ");
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      double s = 0.0;
      for (std::size_t l = 0; l < k; ++l) s += a.at(l, i) * b.at(l, j);
      c.at(i, j) = s;
    }
  }
  return c;
}

Tensor matmul_nt(const Tensor& a, const Tensor& b) {
  require_matrix(a, "matmul_nt");
  require_matrix(b, "matmul_nt");
  const std::size_t n = a.shape()[0], k = a.shape()[1], m = b.shape()[0];
  if (b.shape()[1] != k) throw ShapeError("matmul_nt: column counts differ");
  Tensor c({n, m});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) c.at(i, j) = dot(a.row(i), b.row(j));
  }
  return c;
}

Tensor transpose(const Tensor& a) {
  require_matrix(a, "transpose");
  const std::size_t n = a.shape()[0], m = a.shape()[1];
  Tensor t({m, n});
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < m; ++j) t.at(j, i) = a.at(i, j);
  }
  return t;
}

Tensor identity(std::size_t n) {
  Tensor t({n, n});
  for (std::size_t i = 0; i < n; ++i) t.at(i, i) = 1.0;
  return t;
}

bool cholesky_solve(const Tensor& s, const Tensor& b, Tensor& x) {
  require_matrix(s, "cholesky_solve");
  const std::size_t n = s.shape()[0];
  if (s.shape()[1] != n || b.rows() != n) throw ShapeError("cholesky_solve: dimension mismatch");
  const std::size_t m = b.cols();

  Tensor l({n, n});
  for (std::size_t j = 0; j < n; ++j) {
    double d = s.at(j, j);
    for (std::size_t k = 0; k < j; ++k) d -= l.at(j, k) * l.at(j, k);
    if (!(d > 0.0) || !std::isfinite(d)) return false;
    l.at(j, j) = std::sqrt(d);
    for (std::size_t i = j + 1; i < n; ++i) {
      double v = s.at(i, j);
      for (std::size_t k = 0; k < j; ++k) v -= l.at(i, k) * l.at(j, k);
      l.at(i, j) = v / l.at(j, j);
    }
  }

  x = Tensor({n, m});
  for (std::size_t c = 0; c < m; ++c) {
    std::vector<double> y(n);
    for (std::size_t i = 0; i < n; ++i) {
      double v = b[i * m + c];
      for (std::size_t k = 0; k < i; ++k) v -= l.at(i, k) * y[k];
      y[i] = v / l.at(i, i);
    }
    for (std::size_t i = n; i-- > 0;) {
      double v = y[i];
      for (std::size_t k = i + 1; k < n; ++k) v -= l.at(k, i) * x.at(k, c);
      x.at(i, c) = v / l.at(i, i);
    }
  }
  return true;
}

std::vector<double> symmetric_eigenvalues(const Tensor& s) {
  require_matrix(s, "symmetric_eigenvalues");
  const std::size_t n = s.shape()[0];
  if (s.shape()[1] != n) throw ShapeError("symmetric_eigenvalues: matrix not square");
  Tensor a = s;
  for (int sweep = 0; sweep < 100; ++sweep) {
    double off = 0.0, diag = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      diag += a.at(i, i) * a.at(i, i);
      for (std::size_t j = i + 1; j < n; ++j) off += a.at(i, j) * a.at(i, j);
    }
    if (off <= 1e-30 * std::max(diag, 1e-300)) break;
    for (std::size_t p = 0; p < n; ++p) {
      for (std::size_t q = p + 1; q < n; ++q) {
        const double apq = a.at(p, q);
        if (apq == 0.0) continue;
        const double theta = (a.at(q, q) - a.at(p, p)) / (2.0 * apq);
        const double t = (theta >= 0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(theta * theta + 1.0));
        const double c = 1.0 / std::sqrt(t * t + 1.0);
        const double sn = t * c;
        for (std::size_t k = 0; k < n; ++k) {
          const double akp = a.at(k, p), akq = a.at(k, q);
          a.at(k, p) = c * akp - sn * akq;
          a.at(k, q) = sn * akp + c * akq;
        }
        for (std::size_t k = 0; k < n; ++k) {
          const double apk = a.at(p, k), aqk = a.at(q, k);
          a.at(p, k) = c * apk - sn * aqk;
          a.at(q, k) = sn * apk + c * aqk;
        }
      }
    }
  }
  std::vector<double> ev(n);
  for (std::size_t i = 0; i < n; ++i) ev[i] = a.at(i, i);
  std::sort(ev.begin(), ev.end(), std::greater<>());
  return ev;
}

std::vector<double> singular_values(const Tensor& a) {
  require_matrix(a, "singular_values");
  const bool wide = a.shape()[1] > a.shape()[0];
  const Tensor gram = wide ? matmul_nt(a, a) : matmul_tn(a, a);
  auto ev = symmetric_eigenvalues(gram);
  for (double& v : ev) v = std::sqrt(std::max(v, 0.0));
  return ev;
}

double spectral_norm(const Tensor& a) {
  if (a.rank() == 1) return norm(a.data());
  const auto sv = singular_values(a);
  return sv.empty() ? 0.0 : sv.front();
}

double frobenius_norm(const Tensor& a) { return norm(a.data()); }

}  // namespace arcl::linalg
