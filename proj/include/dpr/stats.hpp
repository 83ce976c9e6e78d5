/*
Copyright 2026 The DPR Simulation Authors.

Licensed under the Apache License, Version 2.0 (the "License");
you may not use this file except in compliance with the License.
You may obtain a copy of the License at

    https://www.apache.org/licenses/LICENSE-2.0

Unless required by applicable law or agreed to in writing, software
distributed under the License is distributed on an "AS IS" BASIS,
WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
See the License for the specific language governing permissions and
limitations under the License.
*/

#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <numeric>
#include <vector>

#include <boost/math/distributions/normal.hpp>
#include <boost/math/distributions/students_t.hpp>

#include "dpr/errors.hpp"

namespace dpr::stats {

inline double mean(const std::vector<double>& xs) {
  if (xs.empty()) throw InputError("mean of empty sample");
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

// Sample standard deviation (n - 1 denominator); 0 for fewer than 2 values.
inline double stddev(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double mu = mean(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - mu) * (x - mu);
  return std::sqrt(ss / static_cast<double>(xs.size() - 1));
}

// Normal-approximation confidence halfwidth z_{1-(1-c)/2} * s / sqrt(n).
inline double normal_halfwidth(const std::vector<double>& xs, double confidence) {
  if (!(confidence > 0.0 && confidence < 1.0))
    throw InputError("confidence must be in (0, 1)");
  if (xs.size() < 2) return 0.0;
  const boost::math::normal standard;
  const double z = boost::math::quantile(standard, 1.0 - (1.0 - confidence) / 2.0);
  return z * stddev(xs) / std::sqrt(static_cast<double>(xs.size()));
}

struct PairedTest {
  double mean_diff = 0.0;
  double sd_diff = 0.0;
  double t = 0.0;
  double p_value = 1.0;
  std::size_t n = 0;
};

// Two-sided paired t-test on a - b. Zero variance gives p = 1 for a zero
// mean difference and p = 0 otherwise.
inline PairedTest paired_t_test(const std::vector<double>& a,
                                const std::vector<double>& b) {
  if (a.size() != b.size()) throw InputError("paired samples differ in size");
  if (a.size() < 2) throw InputError("paired test needs >= 2 pairs");
  std::vector<double> d(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) d[k] = a[k] - b[k];
  PairedTest out;
  out.n = d.size();
  out.mean_diff = mean(d);
  out.sd_diff = stddev(d);
  if (out.sd_diff == 0.0) {
    out.t = out.mean_diff == 0.0 ? 0.0
                                 : std::copysign(std::numeric_limits<double>::infinity(),
                                                 out.mean_diff);
    out.p_value = out.mean_diff == 0.0 ? 1.0 : 0.0;
    return out;
  }
  out.t = out.mean_diff / (out.sd_diff / std::sqrt(static_cast<double>(out.n)));
  const boost::math::students_t dist(static_cast<double>(out.n - 1));
  out.p_value = 2.0 * boost::math::cdf(boost::math::complement(dist, std::fabs(out.t)));
  return out;
}

// Ordinary least squares y = intercept + slope * x with t-based confidence
// intervals on both coefficients.
struct LinearFit {
  double intercept = 0.0;
  double slope = 0.0;
  double intercept_se = 0.0;
  double slope_se = 0.0;
  double level = 0.99;
  double slope_lo = 0.0;
  double slope_hi = 0.0;
  double intercept_lo = 0.0;
  double intercept_hi = 0.0;
  double residual_sd = 0.0;
  std::size_t n = 0;
  double x_mean = 0.0;
  double sxx = 0.0;

  // Halfwidth of the confidence band for the mean response at x.
  double band_halfwidth(double x) const {
    if (n < 3) return 0.0;
    const boost::math::students_t dist(static_cast<double>(n - 2));
    const double tq = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
    return tq * residual_sd *
           std::sqrt(1.0 / static_cast<double>(n) + (x - x_mean) * (x - x_mean) / sxx);
  }
};

inline LinearFit ols(const std::vector<double>& x, const std::vector<double>& y,
                     double level) {
  if (x.size() != y.size()) throw InputError("ols: size mismatch");
  if (x.size() < 2) throw InputError("ols needs >= 2 points");
  LinearFit f;
  f.level = level;
  f.n = x.size();
  f.x_mean = mean(x);
  const double y_mean = mean(y);
  double sxy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    f.sxx += (x[k] - f.x_mean) * (x[k] - f.x_mean);
    sxy += (x[k] - f.x_mean) * (y[k] - y_mean);
  }
  if (f.sxx == 0.0) throw InputError("ols: x has zero variance");
  f.slope = sxy / f.sxx;
  f.intercept = y_mean - f.slope * f.x_mean;
  if (f.n < 3) {
    f.slope_lo = f.slope_hi = f.slope;
    f.intercept_lo = f.intercept_hi = f.intercept;
    return f;
  }
  double sse = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    const double r = y[k] - (f.intercept + f.slope * x[k]);
    sse += r * r;
  }
  f.residual_sd = std::sqrt(sse / static_cast<double>(f.n - 2));
  f.slope_se = f.residual_sd / std::sqrt(f.sxx);
  f.intercept_se = f.residual_sd *
                   std::sqrt(1.0 / static_cast<double>(f.n) + f.x_mean * f.x_mean / f.sxx);
  const boost::math::students_t dist(static_cast<double>(f.n - 2));
  const double tq = boost::math::quantile(dist, 1.0 - (1.0 - level) / 2.0);
  f.slope_lo = f.slope - tq * f.slope_se;
  f.slope_hi = f.slope + tq * f.slope_se;
  f.intercept_lo = f.intercept - tq * f.intercept_se;
  f.intercept_hi = f.intercept + tq * f.intercept_se;
  return f;
}

inline double pearson(const std::vector<double>& x, const std::vector<double>& y) {
  if (x.size() != y.size() || x.size() < 2) throw InputError("pearson: bad sizes");
  const double mx = mean(x);
  const double my = mean(y);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t k = 0; k < x.size(); ++k) {
    sxy += (x[k] - mx) * (y[k] - my);
    sxx += (x[k] - mx) * (x[k] - mx);
    syy += (y[k] - my) * (y[k] - my);
  }
  return sxy / std::sqrt(sxx * syy);
}

}  // namespace dpr::stats
