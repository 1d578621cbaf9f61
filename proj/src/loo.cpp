#include "rtmix/loo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "rtmix/math.hpp"

// PSIS following Vehtari, Gelman & Gabry (2017); GPD tail estimate following
// Zhang & Stephens (2009).

namespace rtmix {

GpdFit gpd_fit(std::vector<double> x, double grid_mult) {
  if (x.size() < 5) throw LooError("gpd_fit: tail too small (need >= 5 points)");
  for (double v : x)
    if (!(v > 0.0)) throw LooError("gpd_fit: exceedances must be positive");
  std::sort(x.begin(), x.end());

  const auto n = static_cast<double>(x.size());
  const auto m_grid =
      static_cast<std::size_t>(std::ceil(grid_mult * std::sqrt(n)));
  const double prior = 3.0;
  const double xstar = x[static_cast<std::size_t>(std::floor(n / 4.0 + 0.5)) - 1];
  const double xmax = x.back();

  // profile log likelihood of theta = -k/sigma over the prior-spread grid
  std::vector<double> theta(m_grid), logl(m_grid);
  for (std::size_t j = 0; j < m_grid; ++j) {
    const double jj = static_cast<double>(j) + 1.0;
    theta[j] = 1.0 / xmax +
               (1.0 - std::sqrt(static_cast<double>(m_grid) / (jj - 0.5))) /
                   (prior * xstar);
    double k = 0.0;
    for (double v : x) k += std::log1p(-theta[j] * v);
    k /= n;
    logl[j] = (theta[j] == 0.0 || k == 0.0)
                  ? neg_inf
                  : n * (std::log(-theta[j] / k) - k - 1.0);
  }

  const double lse = log_sum_exp(std::span<const double>(logl));
  double theta_hat = 0.0;
  for (std::size_t j = 0; j < m_grid; ++j)
    theta_hat += theta[j] * std::exp(logl[j] - lse);

  double k = 0.0;
  for (double v : x) k += std::log1p(-theta_hat * v);
  k /= n;

  GpdFit fit;
  fit.sigma = -k / theta_hat;
  // weakly informative adjustment toward 0.5 (10 pseudo-observations)
  fit.k = (k * n + 0.5 * 10.0) / (n + 10.0);
  return fit;
}

double gpd_quantile(double p, double k, double sigma) {
  if (!(p >= 0.0 && p < 1.0)) throw LooError("gpd_quantile: p must be in [0,1)");
  if (std::abs(k) < 1e-12) return -sigma * std::log1p(-p);
  return sigma * std::expm1(-k * std::log1p(-p)) / k;
}

SmoothedWeights psis_smooth(const Eigen::VectorXd& lw_in) {
  const Eigen::Index s_count = lw_in.size();
  if (s_count < 25) throw LooError("psis_smooth: need at least 25 weights");
  if (!lw_in.allFinite())
    throw std::domain_error("psis_smooth: log weights must be finite");

  const double shift = lw_in.maxCoeff();
  Eigen::VectorXd lw = (lw_in.array() - shift).matrix();

  const auto s_d = static_cast<double>(s_count);
  const auto tail_len = static_cast<Eigen::Index>(
      std::min(std::ceil(0.2 * s_d), std::ceil(3.0 * std::sqrt(s_d))));

  SmoothedWeights out;
  out.khat = std::numeric_limits<double>::infinity();

  std::vector<Eigen::Index> order(static_cast<std::size_t>(s_count));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index a, Eigen::Index b) { return lw[a] < lw[b]; });

  if (tail_len >= 5) {
    const double cutoff = lw[order[static_cast<std::size_t>(s_count - tail_len - 1)]];
    // strictly above the cutoff: ties collapse the tail and skip smoothing
    std::vector<Eigen::Index> tail_ids;
    for (Eigen::Index k = s_count - tail_len; k < s_count; ++k) {
      const Eigen::Index id = order[static_cast<std::size_t>(k)];
      if (lw[id] > cutoff) tail_ids.push_back(id);
    }
    const double exp_cutoff = std::exp(cutoff);
    std::vector<double> exceed;
    exceed.reserve(tail_ids.size());
    for (Eigen::Index id : tail_ids) {
      const double e = std::exp(lw[id]) - exp_cutoff;
      if (e > 0.0) exceed.push_back(e);
    }
    if (exceed.size() >= 5 && exceed.size() == tail_ids.size()) {
      const GpdFit fit = gpd_fit(exceed);
      if (std::isfinite(fit.k) && fit.sigma > 0.0) {
        out.khat = fit.k;
        // replace tail weights with expected order statistics of the fit
        const auto m_tail = static_cast<double>(tail_ids.size());
        std::stable_sort(tail_ids.begin(), tail_ids.end(),
                         [&](Eigen::Index a, Eigen::Index b) { return lw[a] < lw[b]; });
        for (std::size_t z = 0; z < tail_ids.size(); ++z) {
          const double p = (static_cast<double>(z) + 0.5) / m_tail;
          lw[tail_ids[z]] =
              std::log(gpd_quantile(p, fit.k, fit.sigma) + exp_cutoff);
        }
      }
    }
  }

  // truncate at the raw maximum, then normalize to a probability vector
  lw = lw.cwiseMin(0.0);
  const double norm = log_sum_exp(std::span<const double>(
      lw.data(), static_cast<std::size_t>(lw.size())));
  out.log_weights = (lw.array() - norm).matrix();
  return out;
}

std::vector<int> LooResult::bad_k_indices() const {
  std::vector<int> out;
  for (Eigen::Index i = 0; i < khat.size(); ++i)
    if (khat[i] > 0.7) out.push_back(static_cast<int>(i));
  return out;
}

LooResult elpd_loo(const Eigen::MatrixXd& loglik, std::string model) {
  const Eigen::Index s_count = loglik.rows();
  const Eigen::Index n = loglik.cols();
  if (n == 0 || s_count == 0) throw LooError("elpd_loo: empty loglik matrix");

  LooResult r;
  r.model = std::move(model);
  r.pointwise.resize(n);
  r.khat.resize(n);
  if (s_count < 100)
    r.warnings.push_back("fewer than 100 draws; PSIS-LOO may be unstable");

  for (Eigen::Index i = 0; i < n; ++i) {
    const Eigen::VectorXd ratios = -loglik.col(i);
    const SmoothedWeights sw = psis_smooth(ratios);
    const Eigen::VectorXd terms = sw.log_weights + loglik.col(i);
    r.pointwise[i] = log_sum_exp(
        std::span<const double>(terms.data(), static_cast<std::size_t>(terms.size())));
    r.khat[i] = sw.khat;
  }
  r.elpd = r.pointwise.sum();
  const double mean = r.pointwise.mean();
  const double var =
      n > 1 ? (r.pointwise.array() - mean).square().sum() / (n - 1.0) : 0.0;
  r.se = std::sqrt(static_cast<double>(n) * var);
  r.n_bad_k = static_cast<int>(r.bad_k_indices().size());
  if (r.n_bad_k > 0)
    r.warnings.push_back(std::to_string(r.n_bad_k) +
                         " trial(s) with Pareto k > 0.7; smoothing unreliable");
  return r;
}

LooResult elpd_loo(const PosteriorDraws& draws, std::string model) {
  if (!draws.has_loglik())
    throw LooError("elpd_loo: draws carry no pointwise log-likelihood matrix");
  return elpd_loo(draws.flat_loglik(), std::move(model));
}

LooResult exact_loo_from(
    std::size_t n,
    const std::function<Eigen::VectorXd(std::size_t)>& heldout_loglik,
    std::string model) {
  if (n < 2) throw LooError("cannot LOO a single observation");
  LooResult r;
  r.model = std::move(model);
  r.pointwise.resize(static_cast<Eigen::Index>(n));
  r.khat = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n));  // sentinel
  for (std::size_t i = 0; i < n; ++i) {
    const Eigen::VectorXd ll = heldout_loglik(i);
    if (ll.size() == 0) throw LooError("exact_loo: empty held-out loglik");
    r.pointwise[static_cast<Eigen::Index>(i)] =
        log_sum_exp(std::span<const double>(ll.data(),
                                            static_cast<std::size_t>(ll.size()))) -
        std::log(static_cast<double>(ll.size()));
  }
  r.elpd = r.pointwise.sum();
  const double mean = r.pointwise.mean();
  const double var =
      (r.pointwise.array() - mean).square().sum() / (static_cast<double>(n) - 1.0);
  r.se = std::sqrt(static_cast<double>(n) * var);
  return r;
}

LooResult exact_loo(const ModelSpec& spec, const Dataset& d,
                    const SamplerConfig& cfg, bool allow_large) {
  const std::size_t n = d.size();
  if (n < 2) throw LooError("cannot LOO a single observation");
  if (n > 200 && !allow_large)
    throw LooError("exact_loo refuses N > 200 (would run " +
                   std::to_string(n) + " full fits); pass allow_large to override");

  auto heldout = [&](std::size_t i) {
    SamplerConfig c = cfg;
    c.seed = cfg.seed + 1 + static_cast<std::uint64_t>(i);
    const Dataset rest = d.without_trial(i);
    const PosteriorDraws fit = sample(spec, rest, c, /*with_loglik=*/false);
    const Eigen::MatrixXd vals = fit.flat_values();
    Eigen::VectorXd ll(vals.rows());
    for (Eigen::Index s = 0; s < vals.rows(); ++s)
      ll[s] = trial_loglik(spec, vals.row(s).transpose(), d.trials()[i]);
    return ll;
  };
  return exact_loo_from(n, heldout, family_name(spec.family()));
}

ComparisonResult compare(const LooResult& a, const LooResult& b) {
  if (a.pointwise.size() != b.pointwise.size())
    throw LooError("compare: pointwise lengths differ (fits are not aligned)");
  const Eigen::Index n = a.pointwise.size();
  ComparisonResult r;
  r.model_a = a.model;
  r.model_b = b.model;
  const Eigen::VectorXd diff = b.pointwise - a.pointwise;
  r.elpd_diff = diff.sum();
  const double mean = diff.mean();
  const double var =
      n > 1 ? (diff.array() - mean).square().sum() / (n - 1.0) : 0.0;
  r.se_diff = std::sqrt(static_cast<double>(n) * var);
  r.preferred = r.elpd_diff > 0.0 ? b.model : (r.elpd_diff < 0.0 ? a.model : "tie");
  return r;
}

std::string format_comparison_row(const ComparisonResult& r) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%-16s %-16s %10.2f %8.2f", r.model_a.c_str(),
                r.model_b.c_str(), r.elpd_diff, r.se_diff);
  return buf;
}

}  // namespace rtmix
