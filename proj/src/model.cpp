#include "rtmix/model.hpp"

#include <cmath>

#include "rtmix/math.hpp"

namespace rtmix {

std::string family_name(Family f) {
  switch (f) {
    case Family::standard_hlm: return "standard";
    case Family::homogeneous_overwriting: return "hom-overwrite";
    case Family::heterogeneous_overwriting: return "het-overwrite";
    case Family::percolation: return "percolation";
  }
  throw ConfigError("unknown family");
}

Family family_from_name(const std::string& name) {
  if (name == "standard") return Family::standard_hlm;
  if (name == "hom-overwrite") return Family::homogeneous_overwriting;
  if (name == "het-overwrite") return Family::heterogeneous_overwriting;
  if (name == "percolation") return Family::percolation;
  throw ConfigError("unknown model family '" + name +
                    "' (expected standard|hom-overwrite|het-overwrite|percolation)");
}

bool is_overwriting(Family f) {
  return f == Family::homogeneous_overwriting ||
         f == Family::heterogeneous_overwriting;
}

void PriorConfig::validate() const {
  if (!(coef_scale > 0.0 && sd_scale > 0.0 && mix_alpha > 0.0 && mix_beta > 0.0))
    throw ConfigError("prior hyperparameters must be positive");
}

namespace {

// scalar slot indices per family; -1 when the family lacks the parameter
struct Layout {
  int beta1 = -1, beta2 = -1;                    // standard
  int beta = -1;                                 // mixtures
  int delta = -1, prob_hi = -1, prob_lo = -1;    // overwriting
  int gamma = -1, prob_perc = -1;                // percolation
  int sigma_e = -1, sigmap_e = -1;
  int sigma_u = -1, sigma_w = -1;
  int n = 0;
};

Layout layout_of(Family f) {
  Layout l;
  switch (f) {
    case Family::standard_hlm:
      l.beta1 = 0; l.beta2 = 1; l.sigma_e = 2; l.sigma_u = 3; l.sigma_w = 4;
      l.n = 5;
      break;
    case Family::homogeneous_overwriting:
      l.beta = 0; l.delta = 1; l.prob_hi = 2; l.prob_lo = 3;
      l.sigma_e = 4; l.sigma_u = 5; l.sigma_w = 6;
      l.n = 7;
      break;
    case Family::heterogeneous_overwriting:
      l.beta = 0; l.delta = 1; l.prob_hi = 2; l.prob_lo = 3;
      l.sigma_e = 4; l.sigmap_e = 5; l.sigma_u = 6; l.sigma_w = 7;
      l.n = 8;
      break;
    case Family::percolation:
      l.beta = 0; l.gamma = 1; l.prob_perc = 2;
      l.sigma_e = 3; l.sigma_u = 4; l.sigma_w = 5;
      l.n = 6;
      break;
  }
  return l;
}

std::vector<std::string> scalar_names_of(Family f) {
  switch (f) {
    case Family::standard_hlm:
      return {"beta_1", "beta_2", "sigma_e", "sigma_u", "sigma_w"};
    case Family::homogeneous_overwriting:
      return {"beta", "delta", "prob_hi", "prob_lo", "sigma_e", "sigma_u", "sigma_w"};
    case Family::heterogeneous_overwriting:
      return {"beta", "delta", "prob_hi", "prob_lo", "sigma_e", "sigmap_e",
              "sigma_u", "sigma_w"};
    case Family::percolation:
      return {"beta", "gamma", "prob_perc", "sigma_e", "sigma_u", "sigma_w"};
  }
  throw ConfigError("unknown family");
}

std::vector<Transform> transforms_of(Family f) {
  using T = Transform;
  switch (f) {
    case Family::standard_hlm:
      return {T::identity, T::identity, T::positive, T::positive, T::positive};
    case Family::homogeneous_overwriting:
      return {T::identity, T::positive, T::unit_interval, T::unit_interval,
              T::positive, T::positive, T::positive};
    case Family::heterogeneous_overwriting:
      return {T::identity, T::positive, T::unit_interval, T::unit_interval,
              T::positive, T::positive, T::positive, T::positive};
    case Family::percolation:
      return {T::identity, T::negative, T::unit_interval, T::positive,
              T::positive, T::positive};
  }
  throw ConfigError("unknown family");
}

}  // namespace

ModelSpec::ModelSpec(Family family, int n_subjects, int n_items,
                     PriorConfig priors)
    : family_(family),
      priors_(priors),
      n_subjects_(n_subjects),
      n_items_(n_items) {
  if (n_subjects_ < 1 || n_items_ < 1)
    throw ConfigError("ModelSpec needs n_subjects >= 1 and n_items >= 1");
  priors_.validate();
  names_ = scalar_names_of(family_);
  scalar_transforms_ = transforms_of(family_);
  n_scalars_ = static_cast<int>(names_.size());
  for (int i = 1; i <= n_subjects_; ++i)
    names_.push_back("z_u[" + std::to_string(i) + "]");
  for (int j = 1; j <= n_items_; ++j)
    names_.push_back("z_w[" + std::to_string(j) + "]");
}

int ModelSpec::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names_.size(); ++k)
    if (names_[k] == name) return static_cast<int>(k);
  throw ConfigError("unknown parameter '" + name + "' for family " +
                    family_name(family_));
}

Transform ModelSpec::transform(int k) const {
  if (k < 0 || k >= dim()) throw ConfigError("parameter index out of range");
  if (k < n_scalars_) return scalar_transforms_[static_cast<std::size_t>(k)];
  return Transform::identity;
}

std::vector<std::string> ModelSpec::scalar_names() const {
  return scalar_names_of(family_);
}

ParameterVector constrain(const ModelSpec& spec, const Eigen::VectorXd& unc) {
  if (unc.size() != spec.dim())
    throw ConfigError("parameter vector length does not match spec dimension");
  ParameterVector pv;
  pv.unconstrained = unc;
  pv.constrained = unc;
  pv.log_jacobian = 0.0;
  for (int k = 0; k < spec.n_scalars(); ++k) {
    const double v = unc[k];
    switch (spec.transform(k)) {
      case Transform::identity:
        break;
      case Transform::positive:
        pv.constrained[k] = std::exp(v);
        pv.log_jacobian += v;
        break;
      case Transform::negative:
        pv.constrained[k] = -std::exp(v);
        pv.log_jacobian += v;
        break;
      case Transform::unit_interval:
        pv.constrained[k] = inv_logit(v);
        // ln p + ln(1-p), stable when the logistic saturates
        pv.log_jacobian += -softplus(v) - softplus(-v);
        break;
    }
  }
  return pv;
}

Eigen::VectorXd unconstrain(const ModelSpec& spec, const Eigen::VectorXd& con) {
  if (con.size() != spec.dim())
    throw ConfigError("parameter vector length does not match spec dimension");
  Eigen::VectorXd unc = con;
  for (int k = 0; k < spec.n_scalars(); ++k) {
    const double c = con[k];
    switch (spec.transform(k)) {
      case Transform::identity:
        break;
      case Transform::positive:
        if (!(c > 0.0)) throw ConfigError("value must be positive: " + spec.names()[static_cast<std::size_t>(k)]);
        unc[k] = std::log(c);
        break;
      case Transform::negative:
        if (!(c < 0.0)) throw ConfigError("value must be negative: " + spec.names()[static_cast<std::size_t>(k)]);
        unc[k] = std::log(-c);
        break;
      case Transform::unit_interval:
        if (!(c > 0.0 && c < 1.0))
          throw ConfigError("value must be in (0,1): " + spec.names()[static_cast<std::size_t>(k)]);
        unc[k] = logit(c);
        break;
    }
  }
  return unc;
}

namespace {

// Accumulates the log density and, when `grad` is non-null, the gradient in
// constrained space. Chain-rule to the unconstrained coordinates happens at
// the end of eval_unconstrained.
struct Accum {
  double lp = 0.0;
  Eigen::VectorXd* grad = nullptr;  // constrained-space partials

  void add(int idx, double g) {
    if (grad) (*grad)[idx] += g;
  }
};

struct TrialTerms {
  double mu;           // common location: beta(+beta_2 x) + u_i + w_j
  double d_mu = 0.0;   // partial wrt mu, shared by all location inputs
};

// single LogNormal component, returns logpdf and d/dmu, d/dsigma
inline double ln_comp(double log_y, double mu, double sigma, double& d_mu,
                      double& d_sigma) {
  const double z = (log_y - mu) / sigma;
  d_mu = z / sigma;
  d_sigma = (z * z - 1.0) / sigma;
  return -log_y - std::log(sigma) - 0.5 * log_two_pi - 0.5 * z * z;
}

// two LogNormal components mixed with weight p on the shifted one; partials
// via the posterior component responsibilities
inline double mix_comp(double log_y, double mu, double shift, double s1,
                       double p, double s2, double& d_mu, double& d_shift,
                       double& d_s1, double& d_s2, double& d_p) {
  double d_mu1, d_sig1, d_mu2, d_sig2;
  const double lp1 = ln_comp(log_y, mu + shift, s1, d_mu1, d_sig1);
  const double lp2 = ln_comp(log_y, mu, s2, d_mu2, d_sig2);
  const double m = log_mix(p, lp1, lp2);
  const double q1 = std::exp(std::log(p) + lp1 - m);
  const double q2 = 1.0 - q1;
  d_mu = q1 * d_mu1 + q2 * d_mu2;
  d_shift = q1 * d_mu1;
  d_s1 = q1 * d_sig1;
  d_s2 = q2 * d_sig2;
  d_p = std::exp(lp1 - m) - std::exp(lp2 - m);
  return m;
}

inline double cauchy_dlogpdf(double x, double scale) {
  return -2.0 * x / (scale * scale + x * x);
}

// log likelihood of one trial plus (optionally) constrained-space partials
double trial_term(Family family, const Layout& l, const Eigen::VectorXd& c,
                  int n_scalars, int n_subjects, const Trial& t, Accum* acc) {
  const double log_y = std::log(t.rt);
  const int iu = n_scalars + (t.subject - 1);
  const int iw = n_scalars + n_subjects + (t.item - 1);
  const double su = c[l.sigma_u];
  const double sw = c[l.sigma_w];
  const double zu = c[iu];
  const double zw = c[iw];
  const double ranef = su * zu + sw * zw;

  double ll = 0.0;
  double d_mu = 0.0;

  switch (family) {
    case Family::standard_hlm: {
      const double mu = c[l.beta1] + c[l.beta2] * t.condition + ranef;
      double d_sigma;
      ll = ln_comp(log_y, mu, c[l.sigma_e], d_mu, d_sigma);
      if (acc) {
        acc->add(l.beta1, d_mu);
        acc->add(l.beta2, d_mu * t.condition);
        acc->add(l.sigma_e, d_sigma);
      }
      break;
    }
    case Family::homogeneous_overwriting:
    case Family::heterogeneous_overwriting: {
      const double mu = c[l.beta] + ranef;
      const int ip = (t.condition == 1) ? l.prob_lo : l.prob_hi;
      const double se = c[l.sigma_e];
      const double s_slow =
          (family == Family::heterogeneous_overwriting) ? c[l.sigmap_e] : se;
      double d_shift, d_s1, d_s2, d_p;
      ll = mix_comp(log_y, mu, c[l.delta], s_slow, c[ip], se, d_mu, d_shift,
                    d_s1, d_s2, d_p);
      if (acc) {
        acc->add(l.beta, d_mu);
        acc->add(l.delta, d_shift);
        acc->add(ip, d_p);
        if (family == Family::heterogeneous_overwriting) {
          acc->add(l.sigmap_e, d_s1);
          acc->add(l.sigma_e, d_s2);
        } else {
          acc->add(l.sigma_e, d_s1 + d_s2);
        }
      }
      break;
    }
    case Family::percolation: {
      const double mu = c[l.beta] + ranef;
      const double se = c[l.sigma_e];
      if (t.condition == 1) {
        double d_shift, d_s1, d_s2, d_p;
        ll = mix_comp(log_y, mu, c[l.gamma], se, c[l.prob_perc], se, d_mu,
                      d_shift, d_s1, d_s2, d_p);
        if (acc) {
          acc->add(l.beta, d_mu);
          acc->add(l.gamma, d_shift);
          acc->add(l.prob_perc, d_p);
          acc->add(l.sigma_e, d_s1 + d_s2);
        }
      } else {
        double d_sigma;
        ll = ln_comp(log_y, mu, se, d_mu, d_sigma);
        if (acc) {
          acc->add(l.beta, d_mu);
          acc->add(l.sigma_e, d_sigma);
        }
      }
      break;
    }
  }

  if (acc) {
    acc->add(l.sigma_u, d_mu * zu);
    acc->add(l.sigma_w, d_mu * zw);
    acc->add(iu, d_mu * su);
    acc->add(iw, d_mu * sw);
  }
  return ll;
}

double prior_term(const ModelSpec& spec, const Layout& l,
                  const Eigen::VectorXd& c, Accum* acc) {
  const PriorConfig& pr = spec.priors();
  double lp = 0.0;

  auto coef = [&](int idx) {
    if (idx < 0) return;
    lp += cauchy_logpdf(c[idx], pr.coef_scale);
    if (acc) acc->add(idx, cauchy_dlogpdf(c[idx], pr.coef_scale));
  };
  auto sd = [&](int idx) {
    if (idx < 0) return;
    lp += half_cauchy_logpdf(c[idx], pr.sd_scale);
    if (acc) acc->add(idx, cauchy_dlogpdf(c[idx], pr.sd_scale));
  };
  auto mix_prob = [&](int idx) {
    if (idx < 0) return;
    const double p = c[idx];
    lp += beta_logpdf(p, pr.mix_alpha, pr.mix_beta);
    if (acc)
      acc->add(idx, (pr.mix_alpha - 1.0) / p - (pr.mix_beta - 1.0) / (1.0 - p));
  };

  coef(l.beta1);
  coef(l.beta2);
  coef(l.beta);
  coef(l.delta);
  coef(l.gamma);
  mix_prob(l.prob_hi);
  mix_prob(l.prob_lo);
  mix_prob(l.prob_perc);
  sd(l.sigma_e);
  sd(l.sigmap_e);
  sd(l.sigma_u);
  sd(l.sigma_w);

  // standardized random-effect innovations
  for (int k = spec.n_scalars(); k < spec.dim(); ++k) {
    lp += std_normal_logpdf(c[k]);
    if (acc) acc->add(k, -c[k]);
  }
  return lp;
}

double eval_unconstrained(const ModelSpec& spec, const Eigen::VectorXd& unc,
                          const Dataset& d, Eigen::VectorXd* grad_out) {
  if (unc.size() != spec.dim())
    throw ConfigError("parameter vector length does not match spec dimension");
  if (d.n_subjects() != spec.n_subjects() || d.n_items() != spec.n_items())
    throw ConfigError("dataset dimensions do not match spec");

  const ParameterVector pv = constrain(spec, unc);
  if (!pv.constrained.allFinite()) {
    if (grad_out) grad_out->setZero(spec.dim());
    return neg_inf;
  }

  const Layout l = layout_of(spec.family());
  Eigen::VectorXd cgrad;
  Accum acc;
  if (grad_out) {
    cgrad.setZero(spec.dim());
    acc.grad = &cgrad;
  }
  Accum* accp = grad_out ? &acc : nullptr;

  double lp = 0.0;
  for (const Trial& t : d.trials())
    lp += trial_term(spec.family(), l, pv.constrained, spec.n_scalars(),
                     spec.n_subjects(), t, accp);
  lp += prior_term(spec, l, pv.constrained, accp);
  lp += pv.log_jacobian;

  if (!std::isfinite(lp)) {
    if (grad_out) grad_out->setZero(spec.dim());
    return neg_inf;
  }

  if (grad_out) {
    grad_out->resize(spec.dim());
    for (int k = 0; k < spec.dim(); ++k) {
      const double g = cgrad[k];
      switch (spec.transform(k)) {
        case Transform::identity:
          (*grad_out)[k] = g;
          break;
        case Transform::positive:
        case Transform::negative:
          // d constrained / d unc equals the constrained value itself;
          // +1 from the log-Jacobian
          (*grad_out)[k] = g * pv.constrained[k] + 1.0;
          break;
        case Transform::unit_interval: {
          const double p = pv.constrained[k];
          (*grad_out)[k] = g * p * (1.0 - p) + (1.0 - 2.0 * p);
          break;
        }
      }
    }
    if (!grad_out->allFinite()) {
      grad_out->setZero(spec.dim());
      return neg_inf;
    }
  }
  return lp;
}

}  // namespace

Eigen::VectorXd pointwise_loglik(const ModelSpec& spec,
                                 const Eigen::VectorXd& constrained,
                                 const Dataset& d) {
  if (constrained.size() != spec.dim())
    throw ConfigError("parameter vector length does not match spec dimension");
  if (d.n_subjects() != spec.n_subjects() || d.n_items() != spec.n_items())
    throw ConfigError("dataset dimensions do not match spec");
  const Layout l = layout_of(spec.family());
  Eigen::VectorXd out(static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k)
    out[static_cast<Eigen::Index>(k)] =
        trial_term(spec.family(), l, constrained, spec.n_scalars(),
                   spec.n_subjects(), d.trials()[k], nullptr);
  return out;
}

double trial_loglik(const ModelSpec& spec, const Eigen::VectorXd& constrained,
                    const Trial& t) {
  const Layout l = layout_of(spec.family());
  return trial_term(spec.family(), l, constrained, spec.n_scalars(),
                    spec.n_subjects(), t, nullptr);
}

double log_prior(const ModelSpec& spec, const Eigen::VectorXd& constrained) {
  if (constrained.size() != spec.dim())
    throw ConfigError("parameter vector length does not match spec dimension");
  const Layout l = layout_of(spec.family());
  return prior_term(spec, l, constrained, nullptr);
}

double log_posterior(const ModelSpec& spec, const Eigen::VectorXd& unc,
                     const Dataset& d) {
  return eval_unconstrained(spec, unc, d, nullptr);
}

double grad_log_posterior(const ModelSpec& spec, const Eigen::VectorXd& unc,
                          const Dataset& d, Eigen::VectorXd& grad) {
  return eval_unconstrained(spec, unc, d, &grad);
}

}  // namespace rtmix
