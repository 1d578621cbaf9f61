#include <doctest.h>

#include <cmath>
#include <map>

#include "rtmix/math.hpp"
#include "rtmix/model.hpp"
#include "rtmix/rng.hpp"
#include "test_util.hpp"

using namespace rtmix;
using test::toy_dataset;

namespace {

Eigen::VectorXd make_constrained(const ModelSpec& spec,
                                 const std::map<std::string, double>& vals) {
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.dim());
  for (const auto& [name, v] : vals) c[spec.index_of(name)] = v;
  test::set_toy_innovations(spec, c);
  return c;
}

// random constrained point in a well-conditioned region, then mapped back
Eigen::VectorXd random_unconstrained(const ModelSpec& spec, Rng& rng) {
  Eigen::VectorXd c(spec.dim());
  for (int k = 0; k < spec.dim(); ++k) {
    const std::string& name = spec.names()[static_cast<std::size_t>(k)];
    switch (spec.transform(k)) {
      case Transform::positive:
        c[k] = (name == "delta") ? rng.uniform(0.05, 0.8) : rng.uniform(0.2, 0.9);
        break;
      case Transform::negative:
        c[k] = -rng.uniform(0.05, 0.8);
        break;
      case Transform::unit_interval:
        c[k] = rng.uniform(0.15, 0.85);
        break;
      case Transform::identity:
        if (name == "beta" || name == "beta_1")
          c[k] = rng.uniform(5.5, 6.5);
        else if (name == "beta_2")
          c[k] = rng.uniform(-0.1, 0.1);
        else
          c[k] = rng.uniform(-1.0, 1.0);  // innovations
        break;
    }
  }
  return unconstrain(spec, c);
}

const std::map<std::string, double> het_toy = {
    {"beta", 6.0},     {"delta", 0.3},    {"prob_hi", 0.35},
    {"prob_lo", 0.15}, {"sigma_e", 0.35}, {"sigmap_e", 0.6},
    {"sigma_u", 0.2},  {"sigma_w", 0.1}};

}  // namespace

// Frozen values from tests/oracles/compute_reference_values.py.

TEST_CASE("pointwise_loglik matches the independent density evaluation") {
  const Dataset d = toy_dataset();

  SUBCASE("standard") {
    const ModelSpec spec(Family::standard_hlm, 2, 3);
    const auto c = make_constrained(spec, {{"beta_1", 6.0},
                                           {"beta_2", -0.03},
                                           {"sigma_e", 0.4},
                                           {"sigma_u", 0.2},
                                           {"sigma_w", 0.1}});
    const Eigen::VectorXd ll = pointwise_loglik(spec, c, d);
    const double expected[] = {-6.0288778957764706, -6.0627753597124586,
                               -6.0329496896839103, -6.3749083931178125,
                               -5.8226845174073025, -6.142676892484163};
    for (int i = 0; i < 6; ++i)
      CHECK(ll[i] == doctest::Approx(expected[i]).epsilon(1e-13));
  }

  SUBCASE("homogeneous overwriting") {
    const ModelSpec spec(Family::homogeneous_overwriting, 2, 3);
    const auto c = make_constrained(spec, {{"beta", 6.0},
                                           {"delta", 0.3},
                                           {"prob_hi", 0.35},
                                           {"prob_lo", 0.15},
                                           {"sigma_e", 0.35},
                                           {"sigma_u", 0.2},
                                           {"sigma_w", 0.1}});
    const Eigen::VectorXd ll = pointwise_loglik(spec, c, d);
    const double expected[] = {-6.1075464932148679, -6.064963485652195,
                               -6.0625454914157042, -6.2510127278733646,
                               -5.847571433658214,  -6.0640429076264182};
    for (int i = 0; i < 6; ++i)
      CHECK(ll[i] == doctest::Approx(expected[i]).epsilon(1e-13));
  }

  SUBCASE("heterogeneous overwriting") {
    const ModelSpec spec(Family::heterogeneous_overwriting, 2, 3);
    const auto c = make_constrained(spec, het_toy);
    const Eigen::VectorXd ll = pointwise_loglik(spec, c, d);
    const double expected[] = {-6.0856819114166575, -6.1130371629424386,
                               -6.0526222189375447, -6.4368769288471938,
                               -5.8388626078953477, -6.1974880841455252};
    for (int i = 0; i < 6; ++i)
      CHECK(ll[i] == doctest::Approx(expected[i]).epsilon(1e-13));
    CHECK(ll.sum() == doctest::Approx(-36.724568914184708).epsilon(1e-13));
  }

  SUBCASE("percolation") {
    const ModelSpec spec(Family::percolation, 2, 3);
    const auto c = make_constrained(spec, {{"beta", 6.0},
                                           {"gamma", -0.25},
                                           {"prob_perc", 0.2},
                                           {"sigma_e", 0.35},
                                           {"sigma_u", 0.2},
                                           {"sigma_w", 0.1}});
    const Eigen::VectorXd ll = pointwise_loglik(spec, c, d);
    const double expected[] = {-5.9448161506960279, -5.9194715026368517,
                               -5.9398084115604433, -6.3483175021574296,
                               -5.728866594120975,  -6.0465474104517135};
    for (int i = 0; i < 6; ++i)
      CHECK(ll[i] == doctest::Approx(expected[i]).epsilon(1e-13));
  }
}

TEST_CASE("single-trial z=0 case") {
  // x=+1, y=exp(beta_1+beta_2), no random effects, sigma_e=1
  const ModelSpec spec(Family::standard_hlm, 2, 3);
  Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.dim());
  c[spec.index_of("beta_1")] = 6.0;
  c[spec.index_of("beta_2")] = -0.03;
  c[spec.index_of("sigma_e")] = 1.0;
  c[spec.index_of("sigma_u")] = 0.2;
  c[spec.index_of("sigma_w")] = 0.1;
  const Trial t{1, 1, +1, std::exp(6.0 - 0.03)};
  CHECK(trial_loglik(spec, c, t) ==
        doctest::Approx(-(6.0 - 0.03) - 0.5 * log_two_pi).epsilon(1e-13));
}

TEST_CASE("log prior / jacobian / posterior match the oracle") {
  const Dataset d = toy_dataset();
  const ModelSpec spec(Family::heterogeneous_overwriting, 2, 3);
  const auto c = make_constrained(spec, het_toy);

  CHECK(log_prior(spec, c) ==
        doctest::Approx(-16.471938756843455).epsilon(1e-13));

  const Eigen::VectorXd unc = unconstrain(spec, c);
  const ParameterVector pv = constrain(spec, unc);
  CHECK(pv.log_jacobian == doctest::Approx(-10.216887512993539).epsilon(1e-13));

  const double lp = log_posterior(spec, unc, d);
  CHECK(lp == doctest::Approx(-63.413395184021701).epsilon(1e-12));

  // additivity: posterior = loglik + prior + jacobian
  const double parts =
      pointwise_loglik(spec, c, d).sum() + log_prior(spec, c) + pv.log_jacobian;
  CHECK(lp == doctest::Approx(parts).epsilon(1e-14));
}

TEST_CASE("transform round trip is exact to 1e-12") {
  Rng rng(99);
  for (Family f : {Family::standard_hlm, Family::homogeneous_overwriting,
                   Family::heterogeneous_overwriting, Family::percolation}) {
    const ModelSpec spec(f, 2, 3);
    for (int rep = 0; rep < 50; ++rep) {
      const Eigen::VectorXd unc = random_unconstrained(spec, rng);
      const ParameterVector pv = constrain(spec, unc);
      const Eigen::VectorXd back = unconstrain(spec, pv.constrained);
      for (int k = 0; k < spec.dim(); ++k) {
        CHECK(std::abs(back[k] - unc[k]) < 1e-12);
        // constrain(unconstrain(c)) = c as well
        const ParameterVector pv2 = constrain(spec, back);
        CHECK(std::abs(pv2.constrained[k] - pv.constrained[k]) < 1e-12);
      }
    }
  }
}

TEST_CASE("constrained draws satisfy the declared constraints") {
  Rng rng(7);
  const ModelSpec spec(Family::percolation, 2, 3);
  for (int rep = 0; rep < 20; ++rep) {
    Eigen::VectorXd unc(spec.dim());
    for (int k = 0; k < spec.dim(); ++k) unc[k] = rng.uniform(-3.0, 3.0);
    const ParameterVector pv = constrain(spec, unc);
    CHECK(pv.constrained[spec.index_of("gamma")] < 0.0);
    CHECK(pv.constrained[spec.index_of("prob_perc")] > 0.0);
    CHECK(pv.constrained[spec.index_of("prob_perc")] < 1.0);
    CHECK(pv.constrained[spec.index_of("sigma_e")] > 0.0);
  }
}

TEST_CASE("log-Jacobian matches finite differences of the transform") {
  Rng rng(3);
  for (Family f : {Family::heterogeneous_overwriting, Family::percolation}) {
    const ModelSpec spec(f, 2, 3);
    const Eigen::VectorXd unc = random_unconstrained(spec, rng);
    const ParameterVector pv = constrain(spec, unc);
    // transform is diagonal: log|J| = sum of log |d c_k / d u_k|
    const double h = 1e-6;
    double fd_logjac = 0.0;
    for (int k = 0; k < spec.dim(); ++k) {
      Eigen::VectorXd up = unc, dn = unc;
      up[k] += h;
      dn[k] -= h;
      const double deriv =
          (constrain(spec, up).constrained[k] - constrain(spec, dn).constrained[k]) /
          (2.0 * h);
      fd_logjac += std::log(std::abs(deriv));
    }
    CHECK(pv.log_jacobian == doctest::Approx(fd_logjac).epsilon(1e-6));
  }
}

TEST_CASE("analytic gradient matches central finite differences") {
  const Dataset d = toy_dataset();
  Rng rng(2024);
  for (Family f : {Family::standard_hlm, Family::homogeneous_overwriting,
                   Family::heterogeneous_overwriting, Family::percolation}) {
    const ModelSpec spec(f, 2, 3);
    for (int rep = 0; rep < 25; ++rep) {
      const Eigen::VectorXd unc = random_unconstrained(spec, rng);
      Eigen::VectorXd grad(spec.dim());
      const double lp = grad_log_posterior(spec, unc, d, grad);
      REQUIRE(std::isfinite(lp));
      const Eigen::VectorXd fd = test::fd_gradient(spec, unc, d);
      for (int k = 0; k < spec.dim(); ++k)
        CHECK(test::guarded_rel_err(grad[k], fd[k]) < 1e-6);
    }
  }
}

TEST_CASE("gradient is ~0 at a stationary point of a 1-parameter slice") {
  // hold everything but beta_1 fixed; solve d lp / d beta_1 = 0 by bisection,
  // then check the analytic gradient agrees
  const Dataset d = toy_dataset();
  const ModelSpec spec(Family::standard_hlm, 2, 3);
  Eigen::VectorXd unc = unconstrain(
      spec, make_constrained(spec, {{"beta_1", 6.0},
                                    {"beta_2", -0.03},
                                    {"sigma_e", 0.4},
                                    {"sigma_u", 0.2},
                                    {"sigma_w", 0.1}}));
  const int ib = spec.index_of("beta_1");
  Eigen::VectorXd grad(spec.dim());
  double lo = 4.0, hi = 8.0;
  for (int it = 0; it < 200; ++it) {
    unc[ib] = 0.5 * (lo + hi);
    grad_log_posterior(spec, unc, d, grad);
    (grad[ib] > 0.0 ? lo : hi) = unc[ib];
  }
  grad_log_posterior(spec, unc, d, grad);
  CHECK(std::abs(grad[ib]) < 1e-8);
}

TEST_CASE("mixture collapse: delta=0 (and equal scales) reduces to standard") {
  const Dataset d = toy_dataset();
  const ModelSpec std_spec(Family::standard_hlm, 2, 3);
  Rng rng(5150);

  for (int rep = 0; rep < 200; ++rep) {
    const double beta = rng.uniform(5.0, 7.0);
    const double se = rng.uniform(0.2, 1.0);
    const double su = rng.uniform(0.05, 0.5);
    const double sw = rng.uniform(0.05, 0.5);
    const double ph = rng.uniform(0.01, 0.99);
    const double pl = rng.uniform(0.01, 0.99);

    Eigen::VectorXd zs(5);
    for (int k = 0; k < 5; ++k) zs[k] = rng.uniform(-1.5, 1.5);
    auto fill = [&](const ModelSpec& spec, Eigen::VectorXd& c) {
      for (int i = 0; i < 2; ++i) c[spec.n_scalars() + i] = zs[i];
      for (int j = 0; j < 3; ++j) c[spec.n_scalars() + 2 + j] = zs[2 + j];
    };

    Eigen::VectorXd cs = Eigen::VectorXd::Zero(std_spec.dim());
    cs[std_spec.index_of("beta_1")] = beta;
    cs[std_spec.index_of("beta_2")] = 0.0;
    cs[std_spec.index_of("sigma_e")] = se;
    cs[std_spec.index_of("sigma_u")] = su;
    cs[std_spec.index_of("sigma_w")] = sw;
    fill(std_spec, cs);
    const Eigen::VectorXd ll_std = pointwise_loglik(std_spec, cs, d);

    for (Family f : {Family::homogeneous_overwriting,
                     Family::heterogeneous_overwriting}) {
      const ModelSpec spec(f, 2, 3);
      Eigen::VectorXd c = Eigen::VectorXd::Zero(spec.dim());
      c[spec.index_of("beta")] = beta;
      c[spec.index_of("delta")] = 0.0;
      c[spec.index_of("prob_hi")] = ph;
      c[spec.index_of("prob_lo")] = pl;
      c[spec.index_of("sigma_e")] = se;
      if (f == Family::heterogeneous_overwriting)
        c[spec.index_of("sigmap_e")] = se;
      c[spec.index_of("sigma_u")] = su;
      c[spec.index_of("sigma_w")] = sw;
      fill(spec, c);
      const Eigen::VectorXd ll_mix = pointwise_loglik(spec, c, d);
      for (int i = 0; i < ll_std.size(); ++i)
        CHECK(std::abs(ll_mix[i] - ll_std[i]) < 1e-12);
    }
  }
}

TEST_CASE("percolation collapse: prob_perc -> 0 or gamma -> 0 recovers the plain model") {
  const Dataset d = toy_dataset();
  const ModelSpec spec(Family::percolation, 2, 3);

  auto perc = [&](double gamma, double pp) {
    return make_constrained(spec, {{"beta", 6.0},
                                   {"gamma", gamma},
                                   {"prob_perc", pp},
                                   {"sigma_e", 0.35},
                                   {"sigma_u", 0.2},
                                   {"sigma_w", 0.1}});
  };
  // plain LogNormal likelihood at the same location parameters
  const Eigen::VectorXd base = perc(-0.25, 1e-14);
  Eigen::VectorXd plain(static_cast<Eigen::Index>(d.size()));
  for (std::size_t k = 0; k < d.size(); ++k) {
    const Trial& t = d.trials()[k];
    const double mu = 6.0 + 0.2 * base[spec.n_scalars() + t.subject - 1] +
                      0.1 * base[spec.n_scalars() + 2 + t.item - 1];
    plain[static_cast<Eigen::Index>(k)] = lognormal_logpdf(t.rt, mu, 0.35);
  }

  const Eigen::VectorXd ll_p0 = pointwise_loglik(spec, perc(-0.25, 1e-14), d);
  const Eigen::VectorXd ll_g0 = pointwise_loglik(spec, perc(-1e-14, 0.2), d);
  for (Eigen::Index i = 0; i < plain.size(); ++i) {
    CHECK(std::abs(ll_p0[i] - plain[i]) < 1e-9);
    CHECK(std::abs(ll_g0[i] - plain[i]) < 1e-9);
  }
}

TEST_CASE("increasing one rt changes only that pointwise entry") {
  const ModelSpec spec(Family::heterogeneous_overwriting, 2, 3);
  const auto c = make_constrained(spec, het_toy);
  const Dataset d = toy_dataset();
  const Eigen::VectorXd before = pointwise_loglik(spec, c, d);

  std::vector<Trial> bumped = d.trials();
  bumped[3].rt += 50.0;
  const Dataset d2(std::move(bumped), 2, 3);
  const Eigen::VectorXd after = pointwise_loglik(spec, c, d2);
  for (Eigen::Index i = 0; i < before.size(); ++i) {
    if (i == 3)
      CHECK(after[i] != before[i]);
    else
      CHECK(after[i] == before[i]);
  }
}

TEST_CASE("log_posterior returns -inf (never throws) on wild inputs") {
  const Dataset d = toy_dataset();
  const ModelSpec spec(Family::heterogeneous_overwriting, 2, 3);
  Eigen::VectorXd unc = Eigen::VectorXd::Zero(spec.dim());
  unc[spec.index_of("sigma_e")] = 1e4;  // exp overflows to inf
  CHECK(log_posterior(spec, unc, d) == neg_inf);

  Eigen::VectorXd grad(spec.dim());
  CHECK(grad_log_posterior(spec, unc, d, grad) == neg_inf);
  CHECK(grad.allFinite());

  unc[spec.index_of("sigma_e")] =
      std::numeric_limits<double>::quiet_NaN();
  CHECK(log_posterior(spec, unc, d) == neg_inf);
}

TEST_CASE("dimension mismatches are configuration errors") {
  const Dataset d = toy_dataset();
  const ModelSpec spec(Family::standard_hlm, 2, 3);
  Eigen::VectorXd wrong = Eigen::VectorXd::Zero(spec.dim() + 1);
  CHECK_THROWS_AS(pointwise_loglik(spec, wrong, d), ConfigError);
  CHECK_THROWS_AS(log_posterior(spec, wrong, d), ConfigError);

  const ModelSpec mismatched(Family::standard_hlm, 5, 3);
  Eigen::VectorXd ok = Eigen::VectorXd::Zero(mismatched.dim());
  CHECK_THROWS_AS(pointwise_loglik(mismatched, ok, d), ConfigError);
}

TEST_CASE("parameter naming follows the reported figure sets") {
  const ModelSpec s1(Family::standard_hlm, 2, 2);
  CHECK(s1.scalar_names() ==
        std::vector<std::string>{"beta_1", "beta_2", "sigma_e", "sigma_u",
                                 "sigma_w"});
  const ModelSpec s2(Family::heterogeneous_overwriting, 2, 2);
  CHECK(s2.scalar_names() ==
        std::vector<std::string>{"beta", "delta", "prob_hi", "prob_lo",
                                 "sigma_e", "sigmap_e", "sigma_u", "sigma_w"});
  const ModelSpec s3(Family::percolation, 2, 2);
  CHECK(s3.scalar_names() ==
        std::vector<std::string>{"beta", "gamma", "prob_perc", "sigma_e",
                                 "sigma_u", "sigma_w"});
  CHECK(s2.names()[8] == "z_u[1]");
  CHECK(s2.names().back() == "z_w[2]");
}
