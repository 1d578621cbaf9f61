#include "rtmix/diagnostics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace rtmix {

namespace {

constexpr double nan_d = std::numeric_limits<double>::quiet_NaN();

// halve every chain, dropping the middle draw when the length is odd
std::vector<Eigen::VectorXd> split_chains(
    const std::vector<Eigen::VectorXd>& chains) {
  std::vector<Eigen::VectorXd> out;
  out.reserve(2 * chains.size());
  for (const auto& c : chains) {
    const Eigen::Index half = c.size() / 2;
    out.push_back(c.head(half));
    out.push_back(c.tail(half));
  }
  return out;
}

void check_input(const std::vector<Eigen::VectorXd>& chains) {
  if (chains.size() < 2)
    throw SamplerError("convergence diagnostics need at least 2 chains");
  for (const auto& c : chains)
    if (c.size() < 4)
      throw SamplerError("convergence diagnostics need at least 4 draws per chain");
}

double sample_var(const Eigen::VectorXd& x) {
  if (x.size() < 2) return 0.0;
  const double m = x.mean();
  return (x.array() - m).square().sum() / (x.size() - 1.0);
}

// per-sequence autocovariance, biased (1/n) normalization
Eigen::VectorXd autocovariance(const Eigen::VectorXd& x) {
  const Eigen::Index n = x.size();
  const double m = x.mean();
  Eigen::VectorXd centered = x.array() - m;
  Eigen::VectorXd acov(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    double s = 0.0;
    for (Eigen::Index k = 0; k + t < n; ++k) s += centered[k] * centered[k + t];
    acov[t] = s / n;
  }
  return acov;
}

}  // namespace

double split_rhat(const std::vector<Eigen::VectorXd>& chains) {
  check_input(chains);
  const auto seqs = split_chains(chains);
  const Eigen::Index n = seqs.front().size();

  Eigen::VectorXd means(static_cast<Eigen::Index>(seqs.size()));
  Eigen::VectorXd vars(static_cast<Eigen::Index>(seqs.size()));
  for (std::size_t k = 0; k < seqs.size(); ++k) {
    means[static_cast<Eigen::Index>(k)] = seqs[k].mean();
    vars[static_cast<Eigen::Index>(k)] = sample_var(seqs[k]);
  }
  const double w = vars.mean();
  const double b = n * sample_var(means);
  if (w == 0.0 && b == 0.0) return 1.0;  // identical constant chains
  if (w == 0.0) return std::numeric_limits<double>::infinity();
  const double var_plus = (n - 1.0) / n * w + b / n;
  return std::sqrt(var_plus / w);
}

double split_rhat(const PosteriorDraws& draws, const std::string& name) {
  return split_rhat(draws.chains_of(name));
}

double bulk_ess(const std::vector<Eigen::VectorXd>& chains) {
  check_input(chains);
  const auto seqs = split_chains(chains);
  const auto m = static_cast<Eigen::Index>(seqs.size());
  const Eigen::Index n = seqs.front().size();

  std::vector<Eigen::VectorXd> acov;
  acov.reserve(seqs.size());
  Eigen::VectorXd chain_means(m), chain_vars(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    acov.push_back(autocovariance(seqs[static_cast<std::size_t>(k)]));
    chain_means[k] = seqs[static_cast<std::size_t>(k)].mean();
    chain_vars[k] = acov.back()[0] * n / (n - 1.0);
  }
  const double mean_var = chain_vars.mean();
  double var_plus = mean_var * (n - 1.0) / n;
  if (m > 1) var_plus += sample_var(chain_means);
  if (var_plus == 0.0 || !std::isfinite(var_plus)) return nan_d;

  auto acov_mean = [&](Eigen::Index t) {
    double s = 0.0;
    for (const auto& a : acov) s += a[t];
    return s / m;
  };

  // Geyer's initial positive sequence over paired autocorrelations
  Eigen::VectorXd rho = Eigen::VectorXd::Zero(n);
  double rho_even = 1.0;
  rho[0] = rho_even;
  double rho_odd = 1.0 - (mean_var - acov_mean(1)) / var_plus;
  rho[1] = rho_odd;
  Eigen::Index s = 1;
  while (s < n - 4 && rho_even + rho_odd > 0.0) {
    rho_even = 1.0 - (mean_var - acov_mean(s + 1)) / var_plus;
    rho_odd = 1.0 - (mean_var - acov_mean(s + 2)) / var_plus;
    if (rho_even + rho_odd >= 0.0) {
      rho[s + 1] = rho_even;
      rho[s + 2] = rho_odd;
    }
    s += 2;
  }
  const Eigen::Index max_s = s;
  if (rho_even > 0.0 && max_s + 1 < n) rho[max_s + 1] = rho_even;

  // enforce monotonicity of the paired sums
  for (Eigen::Index t = 1; t + 3 <= max_s; t += 2) {
    if (rho[t + 1] + rho[t + 2] > rho[t - 1] + rho[t]) {
      rho[t + 1] = (rho[t - 1] + rho[t]) / 2.0;
      rho[t + 2] = rho[t + 1];
    }
  }

  const double total = static_cast<double>(m) * n;
  double tau = -1.0 + 2.0 * rho.head(max_s).sum();
  if (max_s + 1 < n) tau += rho[max_s + 1];
  if (!(tau > 0.0)) return total;  // anti-correlated edge, cap at total
  return std::min(total / tau, total * std::log10(total));
}

double bulk_ess(const PosteriorDraws& draws, const std::string& name) {
  return bulk_ess(draws.chains_of(name));
}

double quantile(std::vector<double> values, double p) {
  if (values.empty()) return nan_d;
  if (!(p >= 0.0 && p <= 1.0)) throw SamplerError("quantile p must be in [0,1]");
  std::sort(values.begin(), values.end());
  const double h = (static_cast<double>(values.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const auto hi = std::min(lo + 1, values.size() - 1);
  const double frac = h - static_cast<double>(lo);
  return values[lo] + frac * (values[hi] - values[lo]);
}

ParamSummary summarize_draws(const std::string& name,
                             const std::vector<Eigen::VectorXd>& chains) {
  ParamSummary ps;
  ps.name = name;
  std::vector<double> pooled;
  for (const auto& c : chains)
    pooled.insert(pooled.end(), c.data(), c.data() + c.size());
  Eigen::Map<const Eigen::VectorXd> all(pooled.data(),
                                        static_cast<Eigen::Index>(pooled.size()));
  ps.mean = all.mean();
  ps.sd = std::sqrt(sample_var(all));
  ps.q025 = quantile(pooled, 0.025);
  ps.median = quantile(pooled, 0.5);
  ps.q975 = quantile(pooled, 0.975);
  try {
    ps.rhat = split_rhat(chains);
    ps.ess = bulk_ess(chains);
  } catch (const SamplerError&) {
    ps.rhat = nan_d;
    ps.ess = nan_d;
  }
  return ps;
}

std::vector<Eigen::VectorXd> diffprob_chains(const PosteriorDraws& draws,
                                             const ModelSpec& spec) {
  if (!is_overwriting(spec.family()))
    throw ConfigError("diffprob is not applicable to family " +
                      family_name(spec.family()));
  const int ih = draws.index_of("prob_hi");
  const int il = draws.index_of("prob_lo");
  std::vector<Eigen::VectorXd> out;
  out.reserve(draws.values.size());
  for (const auto& m : draws.values) out.push_back(m.col(ih) - m.col(il));
  return out;
}

namespace {

std::vector<ParamSummary> summary_impl(const PosteriorDraws& draws,
                                       const ModelSpec* spec) {
  std::vector<ParamSummary> out;
  out.reserve(draws.names.size() + 1);
  for (const auto& name : draws.names)
    out.push_back(summarize_draws(name, draws.chains_of(name)));
  if (spec && is_overwriting(spec->family()))
    out.push_back(summarize_draws("diffprob", diffprob_chains(draws, *spec)));
  return out;
}

}  // namespace

std::vector<ParamSummary> posterior_summary(const PosteriorDraws& draws,
                                            const ModelSpec& spec) {
  return summary_impl(draws, &spec);
}

std::vector<ParamSummary> posterior_summary(const PosteriorDraws& draws) {
  return summary_impl(draws, nullptr);
}

}  // namespace rtmix
