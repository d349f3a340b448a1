#pragma once

// Independent reference implementations used only by the tests.

#include <cmath>
#include <complex>
#include <numbers>
#include <vector>

namespace oracle {

/// Textbook O(N^2) DFT magnitude spectrum: 2|X_k|/N, with |X_k|/N at DC and Nyquist.
inline std::vector<double> dft_magnitude(std::vector<double> x, bool remove_mean = true) {
  const std::size_t n = x.size();
  if (remove_mean) {
    double m = 0.0;
    for (double v : x) m += v;
    m /= static_cast<double>(n);
    for (double& v : x) v -= m;
  }
  std::vector<double> out(n / 2 + 1);
  for (std::size_t k = 0; k < out.size(); ++k) {
    std::complex<double> acc = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double a = -2.0 * std::numbers::pi * static_cast<double>(k * i % n) / static_cast<double>(n);
      acc += x[i] * std::complex<double>(std::cos(a), std::sin(a));
    }
    const bool edge = k == 0 || (n % 2 == 0 && k == n / 2);
    out[k] = std::abs(acc) / static_cast<double>(n) * (edge ? 1.0 : 2.0);
  }
  return out;
}

/// Breslow partial log-likelihood by direct enumeration of risk sets.
inline double cox_loglik(const std::vector<std::vector<double>>& x, const std::vector<double>& t,
                         const std::vector<int>& e, const std::vector<double>& beta) {
  const auto eta = [&](std::size_t i) {
    double s = 0.0;
    for (std::size_t k = 0; k < beta.size(); ++k) s += beta[k] * x[i][k];
    return s;
  };
  double ll = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (!e[i]) continue;
    double risk = 0.0;
    for (std::size_t j = 0; j < t.size(); ++j) {
      if (t[j] >= t[i]) risk += std::exp(eta(j));
    }
    ll += eta(i) - std::log(risk);
  }
  return ll;
}

}  // namespace oracle
