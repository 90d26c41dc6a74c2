#pragma once

// Reference computations written independently of the library code paths
// they check: direct sums instead of recursions, finite differences instead
// of backprop, closed-form distributions instead of sampling code.

#include <cmath>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

namespace oracle {

// Advantage as the explicit discounted sum of TD residuals, truncated at the
// first terminal step.
inline std::vector<double> gae_direct(std::span<const double> r, std::span<const double> v,
                                      std::span<const std::uint8_t> done, double gamma, double lambda) {
  const std::size_t T = r.size();
  std::vector<double> adv(T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    double sum = 0.0;
    for (std::size_t l = t; l < T; ++l) {
      const double next = done[l] ? 0.0 : v[l + 1];
      const double delta = r[l] + gamma * next - v[l];
      sum += std::pow(gamma * lambda, static_cast<double>(l - t)) * delta;
      if (done[l]) break;
    }
    adv[t] = sum;
  }
  return adv;
}

// Central finite difference of f with respect to x[i].
inline double central_diff(const std::function<double()>& f, double& xi, double h) {
  const double saved = xi;
  xi = saved + h;
  const double up = f();
  xi = saved - h;
  const double down = f();
  xi = saved;
  return (up - down) / (2.0 * h);
}

inline double normal_cdf(double x, double mean, double sd) {
  return 0.5 * std::erfc(-(x - mean) / (sd * std::sqrt(2.0)));
}

// P(image id == k) for ids 1..n under round-and-clamp of N(mean, sd).
inline std::vector<double> clamped_normal_pmf(int n, double mean, double sd) {
  std::vector<double> p(static_cast<std::size_t>(n));
  for (int k = 1; k <= n; ++k) {
    const double lo = k == 1 ? -INFINITY : k - 0.5;
    const double hi = k == n ? INFINITY : k + 0.5;
    p[static_cast<std::size_t>(k - 1)] = (std::isinf(hi) ? 1.0 : normal_cdf(hi, mean, sd)) -
                                         (std::isinf(lo) ? 0.0 : normal_cdf(lo, mean, sd));
  }
  return p;
}

// Upper-tail critical values of chi-square at alpha = 0.001.
inline double chi2_crit_001(int dof) {
  static const double table[] = {0, 10.828, 13.816, 16.266, 18.467, 20.515, 22.458, 24.322, 26.124, 27.877,
                                 29.588, 31.264, 32.909, 34.528, 36.123, 37.697, 39.252, 40.790, 42.312,
                                 43.820, 45.315};
  return table[dof];
}

// Shannon rate straight from the textbook form with dBm inputs.
inline double uplink_rate_dbm(double bandwidth_mbps, int users, double tx_dbm, double noise_dbm_hz, double d,
                              double alpha) {
  const double p_w = std::pow(10.0, (tx_dbm - 30.0) / 10.0);
  const double n0_w = std::pow(10.0, (noise_dbm_hz - 30.0) / 10.0);
  const double noise = n0_w * bandwidth_mbps * 1e6;
  const double snr = p_w * std::pow(std::max(d, 1.0), -alpha) / noise;
  return bandwidth_mbps / users * std::log2(1.0 + snr);
}

}  // namespace oracle
