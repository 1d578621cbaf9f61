#ifndef RTMIX_MATH_HPP
#define RTMIX_MATH_HPP

#include <cmath>
#include <limits>
#include <span>
#include <stdexcept>

// Log-density kernels shared by the model families, plus the numerically
// careful mixture marginalization. Everything works in log space.

namespace rtmix {

inline constexpr double neg_inf = -std::numeric_limits<double>::infinity();
inline constexpr double log_two_pi = 1.8378770664093454835606594728112353;

// log N(log y | mu, sigma^2) - log y, the LogNormal density on the ms scale
inline double lognormal_logpdf(double y, double mu, double sigma) {
  if (!(y > 0.0)) throw std::domain_error("lognormal_logpdf: y must be > 0");
  if (!(sigma > 0.0)) throw std::domain_error("lognormal_logpdf: sigma must be > 0");
  const double ly = std::log(y);
  const double z = (ly - mu) / sigma;
  return -ly - std::log(sigma) - 0.5 * log_two_pi - 0.5 * z * z;
}

inline double normal_logpdf(double x, double mu, double sigma) {
  const double z = (x - mu) / sigma;
  return -std::log(sigma) - 0.5 * log_two_pi - 0.5 * z * z;
}

inline double std_normal_logpdf(double z) {
  return -0.5 * log_two_pi - 0.5 * z * z;
}

inline double cauchy_logpdf(double x, double scale) {
  const double r = x / scale;
  return -std::log(M_PI * scale) - std::log1p(r * r);
}

// positive half-line truncation: density doubled so values stay comparable
inline double half_cauchy_logpdf(double x, double scale) {
  return cauchy_logpdf(x, scale) + M_LN2;
}

inline double beta_logpdf(double p, double a, double b) {
  return (a - 1.0) * std::log(p) + (b - 1.0) * std::log1p(-p)
         + std::lgamma(a + b) - std::lgamma(a) - std::lgamma(b);
}

inline double log_sum_exp(double a, double b) {
  if (a == neg_inf) return b;
  if (b == neg_inf) return a;
  const double m = std::max(a, b);
  return m + std::log1p(std::exp(std::min(a, b) - m));
}

inline double log_sum_exp(std::span<const double> v) {
  double m = neg_inf;
  for (double x : v) m = std::max(m, x);
  if (m == neg_inf || !std::isfinite(m)) return m;
  double s = 0.0;
  for (double x : v) s += std::exp(x - m);
  return m + std::log(s);
}

// ln(lambda*exp(lp1) + (1-lambda)*exp(lp2)); exact at lambda in {0,1}
inline double log_mix(double lambda, double lp1, double lp2) {
  if (!(lambda >= 0.0 && lambda <= 1.0))
    throw std::domain_error("log_mix: lambda must be in [0,1]");
  if (lambda == 0.0) return lp2;
  if (lambda == 1.0) return lp1;
  return log_sum_exp(std::log(lambda) + lp1, std::log1p(-lambda) + lp2);
}

// d log_mix / d lambda at fixed component log densities
inline double log_mix_dlambda(double lambda, double lp1, double lp2) {
  const double m = log_mix(lambda, lp1, lp2);
  return std::exp(lp1 - m) - std::exp(lp2 - m);
}

inline double logit(double p) { return std::log(p) - std::log1p(-p); }

inline double softplus(double x) {
  return x > 0.0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

inline double inv_logit(double x) {
  if (x >= 0.0) {
    const double e = std::exp(-x);
    return 1.0 / (1.0 + e);
  }
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace rtmix

#endif
