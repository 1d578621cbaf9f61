#ifndef RTMIX_LOO_HPP
#define RTMIX_LOO_HPP

#include <Eigen/Core>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtmix/dataset.hpp"
#include "rtmix/model.hpp"
#include "rtmix/sampler.hpp"

namespace rtmix {

struct LooError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Generalized Pareto fit of a positive exceedance tail: the Zhang & Stephens
// (2009) profile-posterior estimate with the weakly informative shape
// adjustment used for importance-weight smoothing.
struct GpdFit {
  double k = 0.0;     // shape
  double sigma = 0.0; // scale
};

// `exceedances` need not be sorted; requires >= 5 strictly positive values.
// grid_mult controls the resolution of the theta grid (grid_mult * sqrt(n)
// points).
GpdFit gpd_fit(std::vector<double> exceedances, double grid_mult = 30.0);

double gpd_quantile(double p, double k, double sigma);

struct SmoothedWeights {
  Eigen::VectorXd log_weights;  // normalized: weights sum to 1
  double khat = 0.0;            // +inf when the tail could not be fitted
};

// Pareto-smoothed importance weights: the M = min(ceil(0.2 S), ceil(3 sqrt S))
// largest weights are replaced by expected GPD order statistics, truncated at
// the raw maximum, then normalized.
SmoothedWeights psis_smooth(const Eigen::VectorXd& log_weights);

struct LooResult {
  std::string model;          // label used in comparison tables
  double elpd = 0.0;          // sum of pointwise contributions
  double se = 0.0;            // sqrt(N * var(pointwise))
  Eigen::VectorXd pointwise;  // per-trial elpd
  Eigen::VectorXd khat;       // per-trial Pareto shape diagnostic
  int n_bad_k = 0;            // khat > 0.7
  std::vector<std::string> warnings;

  std::vector<int> bad_k_indices() const;
};

// PSIS-LOO expected log pointwise predictive density from a loglik matrix
// (rows = draws, columns = trials).
LooResult elpd_loo(const Eigen::MatrixXd& loglik, std::string model = {});
LooResult elpd_loo(const PosteriorDraws& draws, std::string model = {});

// Brute-force exact LOO: `heldout_loglik(i)` refits without observation i and
// returns the per-draw log density of the held-out value. khat is reported as
// the 0 sentinel.
LooResult exact_loo_from(
    std::size_t n,
    const std::function<Eigen::VectorXd(std::size_t)>& heldout_loglik,
    std::string model = {});

// Exact LOO for a reading-time model: N full refits. Refuses N > 200 unless
// allow_large; N == 1 is an error (cannot LOO a single observation).
LooResult exact_loo(const ModelSpec& spec, const Dataset& d,
                    const SamplerConfig& cfg, bool allow_large = false);

struct ComparisonResult {
  std::string model_a;
  std::string model_b;
  double elpd_diff = 0.0;  // b - a; positive favors model_b
  double se_diff = 0.0;
  std::string preferred;
};

// Paired pointwise comparison; both results must come from the same trials in
// the same order.
ComparisonResult compare(const LooResult& a, const LooResult& b);

// "model_a  model_b  elpd_diff  se" with two decimals, as in comparison tables
std::string format_comparison_row(const ComparisonResult& r);

}  // namespace rtmix

#endif
