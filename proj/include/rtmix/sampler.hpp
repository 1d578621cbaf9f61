#ifndef RTMIX_SAMPLER_HPP
#define RTMIX_SAMPLER_HPP

#include <Eigen/Core>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtmix/dataset.hpp"
#include "rtmix/model.hpp"
#include "rtmix/target.hpp"

namespace rtmix {

struct SamplerError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct SamplerConfig {
  int n_chains = 4;
  int n_warmup = 1000;
  int n_draws = 1000;          // post-warmup, per chain
  double target_accept = 0.8;  // dual-averaging target
  int max_tree_depth = 10;
  std::uint64_t seed = 1;
  double init_radius = 2.0;    // uniform init on the unconstrained scale
  bool parallel_chains = true;

  void validate() const;
};

struct ChainDiagnostics {
  int divergences = 0;         // post-warmup
  int warmup_divergences = 0;
  int max_depth_hits = 0;      // post-warmup transitions that saturated
  double step_size = 0.0;      // frozen after warmup
  double accept_mean = 0.0;    // mean acceptance statistic, post-warmup
  std::vector<int> tree_depths;
};

// Posterior sample: constrained draws per chain plus, when produced by the
// (spec, dataset) overload, the pointwise log-likelihood matrix that model
// comparison consumes. loglik[c](s, i) is trial i under draw s of chain c.
struct PosteriorDraws {
  std::vector<std::string> names;
  std::vector<Eigen::MatrixXd> values;  // per chain: n_draws x n_params
  std::vector<Eigen::MatrixXd> loglik;  // per chain: n_draws x N (may be empty)
  std::vector<ChainDiagnostics> diagnostics;
  std::uint64_t seed = 0;

  int n_chains() const { return static_cast<int>(values.size()); }
  int n_draws() const {
    return values.empty() ? 0 : static_cast<int>(values.front().rows());
  }
  int n_params() const { return static_cast<int>(names.size()); }
  bool has_loglik() const { return !loglik.empty() && loglik.front().size() > 0; }

  int index_of(const std::string& name) const;

  // all chains stacked, chain-major: row c*n_draws + s
  Eigen::MatrixXd flat_values() const;
  Eigen::MatrixXd flat_loglik() const;
  Eigen::VectorXd flat_column(const std::string& name) const;
  std::vector<Eigen::VectorXd> chains_of(const std::string& name) const;
};

// Dynamic multinomial HMC with no-U-turn termination, dual-averaging step
// size adaptation, and windowed diagonal mass-matrix estimation. Chains are
// independent (one RNG stream each) and deterministic given cfg.seed.
PosteriorDraws sample(const LogDensityTarget& target, const SamplerConfig& cfg);

// Fits one of the reading-time models and fills the loglik matrix.
PosteriorDraws sample(const ModelSpec& spec, const Dataset& data,
                      const SamplerConfig& cfg, bool with_loglik = true);

}  // namespace rtmix

#endif
