#ifndef RTMIX_TEST_UTIL_HPP
#define RTMIX_TEST_UTIL_HPP

#include <Eigen/Core>
#include <algorithm>
#include <vector>

#include "rtmix/dataset.hpp"
#include "rtmix/model.hpp"

namespace rtmix::test {

// six-trial crossed dataset shared with tests/oracles/compute_reference_values.py
inline Dataset toy_dataset() {
  std::vector<Trial> trials = {
      {1, 1, +1, 350.0}, {1, 2, -1, 420.0}, {1, 3, +1, 380.0},
      {2, 1, -1, 500.0}, {2, 2, +1, 310.0}, {2, 3, -1, 450.0},
  };
  return Dataset(std::move(trials), 2, 3);
}

// innovation values used by the oracle script
inline void set_toy_innovations(const ModelSpec& spec, Eigen::VectorXd& c) {
  const double zu[] = {0.5, -0.3};
  const double zw[] = {0.2, -0.1, 0.4};
  for (int i = 0; i < spec.n_subjects(); ++i) c[spec.n_scalars() + i] = zu[i];
  for (int j = 0; j < spec.n_items(); ++j)
    c[spec.n_scalars() + spec.n_subjects() + j] = zw[j];
}

// central finite differences of log_posterior over the unconstrained vector
inline Eigen::VectorXd fd_gradient(const ModelSpec& spec,
                                   const Eigen::VectorXd& unc, const Dataset& d,
                                   double h = 1e-5) {
  Eigen::VectorXd g(unc.size());
  Eigen::VectorXd x = unc;
  for (Eigen::Index k = 0; k < unc.size(); ++k) {
    x[k] = unc[k] + h;
    const double fp = log_posterior(spec, x, d);
    x[k] = unc[k] - h;
    const double fm = log_posterior(spec, x, d);
    x[k] = unc[k];
    g[k] = (fp - fm) / (2.0 * h);
  }
  return g;
}

// |a-b| over max(1, |a|, |b|): relative where the scale is large, absolute
// near zero (finite differences are meaningless relative to a ~0 gradient)
inline double guarded_rel_err(double a, double b) {
  return std::abs(a - b) / std::max({1.0, std::abs(a), std::abs(b)});
}

// two-sample Kolmogorov-Smirnov statistic
inline double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double d = 0.0;
  std::size_t i = 0, j = 0;
  while (i < a.size() && j < b.size()) {
    if (a[i] <= b[j])
      ++i;
    else
      ++j;
    const double fa = static_cast<double>(i) / a.size();
    const double fb = static_cast<double>(j) / b.size();
    d = std::max(d, std::abs(fa - fb));
  }
  return d;
}

}  // namespace rtmix::test

#endif
