#ifndef RTMIX_MODEL_HPP
#define RTMIX_MODEL_HPP

#include <Eigen/Core>
#include <stdexcept>
#include <string>
#include <vector>

#include "rtmix/dataset.hpp"
#include "rtmix/target.hpp"

namespace rtmix {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// The four generative accounts of the reading-time data. All share crossed
// subject/item varying intercepts on the LogNormal location.
//
//   standard_hlm              LogNormal(beta_1 + beta_2*x + u_i + w_j, sigma_e)
//   homogeneous_overwriting   two-component mixture, shift delta >= 0, common
//                             sigma_e; mixing prob_lo (x=+1) / prob_hi (x=-1)
//   heterogeneous_overwriting same, slow component has its own sigmap_e
//   percolation               mixture with shift gamma < 0 in the x=+1
//                             condition only; plain LogNormal for x=-1
enum class Family {
  standard_hlm,
  homogeneous_overwriting,
  heterogeneous_overwriting,
  percolation,
};

std::string family_name(Family f);
Family family_from_name(const std::string& name);
bool is_overwriting(Family f);

struct PriorConfig {
  double coef_scale = 2.5;  // Cauchy scale, location coefficients
  double sd_scale = 2.5;    // half-Cauchy scale, standard deviations
  double mix_alpha = 1.0;   // Beta shape for mixing probabilities
  double mix_beta = 1.0;

  void validate() const;
};

// How an unconstrained coordinate maps into model space.
enum class Transform {
  identity,
  positive,       // exp
  unit_interval,  // logistic
  negative,       // -exp
};

// Family plus dimensions; owns parameter naming and layout. The parameter
// vector is [scalars..., z_u[1..I], z_w[1..J]] with the random effects stored
// as standardized innovations (u_i = sigma_u * z_u[i]).
class ModelSpec {
 public:
  ModelSpec(Family family, int n_subjects, int n_items,
            PriorConfig priors = {});

  Family family() const { return family_; }
  const PriorConfig& priors() const { return priors_; }
  int n_subjects() const { return n_subjects_; }
  int n_items() const { return n_items_; }

  int dim() const { return n_scalars_ + n_subjects_ + n_items_; }
  int n_scalars() const { return n_scalars_; }

  const std::vector<std::string>& names() const { return names_; }
  int index_of(const std::string& name) const;
  Transform transform(int k) const;

  // scalar parameter names only, in layout order
  std::vector<std::string> scalar_names() const;

 private:
  Family family_;
  PriorConfig priors_;
  int n_subjects_;
  int n_items_;
  int n_scalars_;
  std::vector<std::string> names_;
  std::vector<Transform> scalar_transforms_;
};

// Dual view of one parameter state: the unconstrained sampling coordinates,
// the constrained model-space values, and the log-determinant of the map.
struct ParameterVector {
  Eigen::VectorXd unconstrained;
  Eigen::VectorXd constrained;
  double log_jacobian = 0.0;
};

ParameterVector constrain(const ModelSpec& spec, const Eigen::VectorXd& unc);
Eigen::VectorXd unconstrain(const ModelSpec& spec, const Eigen::VectorXd& con);

// Per-trial log-likelihood, aligned with d.trials(). `constrained` is the
// model-space parameter vector.
Eigen::VectorXd pointwise_loglik(const ModelSpec& spec,
                                 const Eigen::VectorXd& constrained,
                                 const Dataset& d);

double trial_loglik(const ModelSpec& spec, const Eigen::VectorXd& constrained,
                    const Trial& t);

// Log prior density in constrained space (excludes the transform Jacobian).
double log_prior(const ModelSpec& spec, const Eigen::VectorXd& constrained);

// Joint log density over the unconstrained coordinates:
// sum(pointwise_loglik) + log_prior + log_jacobian. Returns -inf instead of
// throwing when an intermediate is non-finite.
double log_posterior(const ModelSpec& spec, const Eigen::VectorXd& unc,
                     const Dataset& d);

// Exact analytic gradient of log_posterior; returns the log density. Non-
// finite values signal divergence to the sampler.
double grad_log_posterior(const ModelSpec& spec, const Eigen::VectorXd& unc,
                          const Dataset& d, Eigen::VectorXd& grad);

// Adapter exposing a (spec, dataset) posterior to the sampler.
class PosteriorTarget final : public LogDensityTarget {
 public:
  PosteriorTarget(const ModelSpec& spec, const Dataset& data)
      : spec_(spec), data_(data) {}

  int dim() const override { return spec_.dim(); }
  double logp_grad(const Eigen::VectorXd& pos,
                   Eigen::VectorXd& grad) const override {
    return grad_log_posterior(spec_, pos, data_, grad);
  }
  std::vector<std::string> names() const override { return spec_.names(); }
  Eigen::VectorXd to_constrained(const Eigen::VectorXd& pos) const override {
    return constrain(spec_, pos).constrained;
  }

  const ModelSpec& spec() const { return spec_; }
  const Dataset& data() const { return data_; }

 private:
  const ModelSpec& spec_;
  const Dataset& data_;
};

}  // namespace rtmix

#endif
