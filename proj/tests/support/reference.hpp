#pragma once

// Plain-loop reference implementations used as test oracles.

#include <cmath>
#include <vector>

#include "cfcdc/nn/tensor.hpp"

namespace reference {

using cfcdc::nn::Index;
using cfcdc::nn::Matrix;

inline double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }

// Gate order (i, f, g, o); row t of the result is the state after consuming row t.
inline Matrix lstm(const Matrix& x, const Matrix& wx, const Matrix& wh, const Matrix& b, bool reverse) {
  const Index n = x.rows();
  const Index h = wh.rows();
  Matrix out(n, h);
  std::vector<double> hs(static_cast<std::size_t>(h), 0.0), cs(static_cast<std::size_t>(h), 0.0);
  for (Index k = 0; k < n; ++k) {
    const Index t = reverse ? n - 1 - k : k;
    std::vector<double> a(static_cast<std::size_t>(4 * h), 0.0);
    for (Index j = 0; j < 4 * h; ++j) {
      double s = b(0, j);
      for (Index i = 0; i < x.cols(); ++i) s += x(t, i) * wx(i, j);
      for (Index i = 0; i < h; ++i) s += hs[static_cast<std::size_t>(i)] * wh(i, j);
      a[static_cast<std::size_t>(j)] = s;
    }
    for (Index j = 0; j < h; ++j) {
      const auto u = static_cast<std::size_t>(j);
      const double ig = sigmoid(a[u]);
      const double fg = sigmoid(a[u + static_cast<std::size_t>(h)]);
      const double gg = std::tanh(a[u + 2 * static_cast<std::size_t>(h)]);
      const double og = sigmoid(a[u + 3 * static_cast<std::size_t>(h)]);
      cs[u] = fg * cs[u] + ig * gg;
      hs[u] = og * std::tanh(cs[u]);
      out(t, j) = hs[u];
    }
  }
  return out;
}

// Weights a over rows of z: score_i = <q_i, tanh(q_i)> m_i - c (1 - m_i), q_i = z_i W + theta.
inline std::vector<double> attention(const Matrix& z, const Matrix& w, const Matrix& theta, const Matrix& mask,
                                     double c) {
  const Index n = z.rows();
  std::vector<double> s(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    double dot = 0.0;
    for (Index j = 0; j < w.cols(); ++j) {
      double q = theta(0, j);
      for (Index k = 0; k < z.cols(); ++k) q += z(i, k) * w(k, j);
      dot += q * std::tanh(q);
    }
    s[static_cast<std::size_t>(i)] = dot * mask(i, 0) - c * (1.0 - mask(i, 0));
  }
  double mx = s[0];
  for (double v : s) mx = std::max(mx, v);
  double total = 0.0;
  for (double& v : s) total += (v = std::exp(v - mx));
  for (double& v : s) v /= total;
  return s;
}

inline double awl(const std::vector<double>& l, const std::vector<double>& sigma) {
  double out = 0.0;
  for (std::size_t i = 0; i < l.size(); ++i) {
    out += l[i] / (2.0 * sigma[i] * sigma[i]) + std::log(1.0 + sigma[i] * sigma[i]);
  }
  return out;
}

}  // namespace reference
