#ifndef RTMIX_SIMULATE_HPP
#define RTMIX_SIMULATE_HPP

#include <Eigen/Core>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "rtmix/dataset.hpp"
#include "rtmix/loo.hpp"
#include "rtmix/model.hpp"
#include "rtmix/sampler.hpp"

namespace rtmix {

// Named constrained parameter values used to generate data. sigma_u/sigma_w
// may be zero (degenerate random effects); mixing probabilities live in
// [0,1]; delta >= 0; gamma < 0.
struct TrueParams {
  std::map<std::string, double> values;

  double at(const std::string& name) const;
  bool has(const std::string& name) const { return values.count(name) > 0; }
  void validate(Family family) const;
};

// plausible millisecond-scale defaults (beta near 6 puts means around 400 ms)
TrueParams default_true_params(Family family);

// Fully crossed subject x item design; conditions follow the alternating
// Latin-square split (subject i reads item j in condition +1 iff i+j is even),
// so each subject sees each item in exactly one condition.
struct Design {
  int n_subjects = 40;
  int n_items = 24;
  int reps = 1;  // trials per subject x item cell

  void validate() const;
  int condition(int subject, int item) const {
    return (subject + item) % 2 == 0 ? 1 : -1;
  }
};

struct SimulatedData {
  Dataset data;
  std::vector<int> component;  // latent indicator: 1 = slow/shifted component
  Eigen::VectorXd u;           // subject intercepts actually drawn
  Eigen::VectorXd w;           // item intercepts
};

SimulatedData simulate(Family family, const TrueParams& p, const Design& design,
                       std::uint64_t seed);

struct ParamRecovery {
  std::string name;
  double truth = 0.0;
  int n_covered = 0;       // replications whose central 95% interval covers truth
  int n_used = 0;          // converged replications
  double mean_bias = 0.0;  // mean(posterior mean - truth)
  double mean_post_mean = 0.0;
};

struct RecoveryReport {
  Family family;
  int n_replications = 0;
  int n_excluded = 0;  // replications with max R-hat > 1.05
  std::vector<int> excluded;
  std::vector<ParamRecovery> params;  // scalar parameters plus diffprob
  double divergence_rate = 0.0;       // pooled post-warmup divergences / draws
};

// Simulate -> fit -> coverage, n_reps times. Replications run concurrently;
// chains within each fit run serially.
RecoveryReport recovery_study(Family family, const TrueParams& p,
                              const Design& design, int n_reps,
                              SamplerConfig cfg);

struct ModelRecoveryReport {
  Family truth;
  std::vector<LooResult> loos;               // one per family, fit order
  std::vector<ComparisonResult> comparisons; // all ordered pairs (a, b), a < b
};

// One dataset from the truth family, all four models fit and compared.
ModelRecoveryReport model_recovery(Family truth, const TrueParams& p,
                                   const Design& design, SamplerConfig cfg);

}  // namespace rtmix

#endif
