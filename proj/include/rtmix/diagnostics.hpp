#ifndef RTMIX_DIAGNOSTICS_HPP
#define RTMIX_DIAGNOSTICS_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "rtmix/model.hpp"
#include "rtmix/sampler.hpp"

namespace rtmix {

// Split-chain potential scale reduction (Gelman-Rubin, split form). Needs at
// least 2 chains of at least 4 draws; throws SamplerError otherwise.
double split_rhat(const std::vector<Eigen::VectorXd>& chains);
double split_rhat(const PosteriorDraws& draws, const std::string& name);

// Bulk effective sample size via Geyer's initial monotone positive sequence
// over split-chain autocorrelations. NaN for degenerate (constant) input.
double bulk_ess(const std::vector<Eigen::VectorXd>& chains);
double bulk_ess(const PosteriorDraws& draws, const std::string& name);

// linear-interpolation sample quantile (R type 7)
double quantile(std::vector<double> values, double p);

struct ParamSummary {
  std::string name;
  double mean = 0.0;
  double sd = 0.0;
  double q025 = 0.0;
  double median = 0.0;
  double q975 = 0.0;
  double rhat = 0.0;  // NaN when unavailable (single chain)
  double ess = 0.0;
};

ParamSummary summarize_draws(const std::string& name,
                             const std::vector<Eigen::VectorXd>& chains);

// diffprob = prob_hi - prob_lo per draw; only defined for the overwriting
// families (throws ConfigError otherwise)
std::vector<Eigen::VectorXd> diffprob_chains(const PosteriorDraws& draws,
                                             const ModelSpec& spec);

// Per-parameter posterior mean/sd/2.5%/50%/97.5% plus R-hat and ESS, with the
// derived diffprob row appended for overwriting families.
std::vector<ParamSummary> posterior_summary(const PosteriorDraws& draws,
                                            const ModelSpec& spec);

// Summary without a model spec (debug targets): no derived quantities.
std::vector<ParamSummary> posterior_summary(const PosteriorDraws& draws);

}  // namespace rtmix

#endif
