#pragma once

#include <cmath>
#include <utility>
#include <vector>

namespace prophet {

// Dense two-phase simplex from the KTH (KACTL) codebook.
// Usage: LpSolver(A, b, c).solve(x) maximizes c'x subject to Ax <= b, x >= 0.
// Returns -inf if infeasible, +inf if unbounded. Suitable for the tiny LPs
// in this library (tens of variables and rows).
struct LpSolver {
  using Vector = std::vector<double>;
  using Matrix = std::vector<Vector>;

  static constexpr double kEps = 1e-8;
  const double kInf = 1 / 0.;

  int m, n;
  std::vector<int> N, B;
  Matrix D;

  LpSolver(const Matrix& A, const Vector& b, const Vector& c)
      : m(static_cast<int>(b.size())),
        n(static_cast<int>(c.size())),
        N(n + 1),
        B(m),
        D(m + 2, Vector(n + 2)) {
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < n; ++j) D[i][j] = A[i][j];
    N[n] = -1;
    D[m + 1][n] = 1;
    for (int i = 0; i < m; ++i) {
      B[i] = n + i;
      D[i][n] = -1;
      D[i][n + 1] = b[i];
    }
    for (int j = 0; j < n; ++j) {
      N[j] = j;
      D[m][j] = -c[j];
    }
  }

  double solve(Vector& x) {
    int r = 0;
    for (int i = 1; i < m; ++i)
      if (D[i][n + 1] < D[r][n + 1]) r = i;
    if (D[r][n + 1] < -kEps) {
      pivot(r, n);
      if (!simplex(2) || D[m + 1][n + 1] < -kEps) return -kInf;
      for (int i = 0; i < m; ++i) {
        if (B[i] == -1) {
          int s = 0;
          for (int j = 1; j <= n; ++j)
            if (std::make_pair(D[i][j], N[j]) < std::make_pair(D[i][s], N[s]))
              s = j;
          pivot(i, s);
        }
      }
    }
    const bool ok = simplex(1);
    x = Vector(n);
    for (int i = 0; i < m; ++i)
      if (B[i] < n) x[B[i]] = D[i][n + 1];
    return ok ? D[m][n + 1] : kInf;
  }

 private:
  void pivot(int r, int s) {
    double* a = D[r].data();
    const double inv = 1. / a[s];
    for (int i = 0; i < m + 2; ++i) {
      if (i != r && std::fabs(D[i][s]) > kEps) {
        double* b = D[i].data();
        const double inv2 = b[s] * inv;
        for (int j = 0; j < n + 2; ++j) b[j] -= a[j] * inv2;
        b[s] = a[s] * inv2;
      }
    }
    for (int j = 0; j < n + 2; ++j)
      if (j != s) D[r][j] *= inv;
    for (int i = 0; i < m + 2; ++i)
      if (i != r) D[i][s] *= -inv;
    D[r][s] = inv;
    std::swap(B[r], N[s]);
  }

  bool simplex(int phase) {
    const int x = m + phase - 1;
    for (;;) {
      int s = -1;
      for (int j = 0; j < n + 1; ++j) {
        if (N[j] == -phase) continue;
        if (s == -1 ||
            std::make_pair(D[x][j], N[j]) < std::make_pair(D[x][s], N[s]))
          s = j;
      }
      if (D[x][s] >= -kEps) return true;
      int r = -1;
      for (int i = 0; i < m; ++i) {
        if (D[i][s] <= kEps) continue;
        if (r == -1 || std::make_pair(D[i][n + 1] / D[i][s], B[i]) <
                           std::make_pair(D[r][n + 1] / D[r][s], B[r]))
          r = i;
      }
      if (r == -1) return false;
      pivot(r, s);
    }
  }
};

}  // namespace prophet
