#include "rtmix/simulate.hpp"

#include <atomic>
#include <cmath>
#include <thread>

#include "rtmix/diagnostics.hpp"
#include "rtmix/math.hpp"
#include "rtmix/rng.hpp"

namespace rtmix {

namespace {

// simulation draws must not share a stream with sampler chains (streams 0..C)
constexpr std::uint64_t sim_stream = 0x53494d;

void run_parallel(int n_tasks, const std::function<void(int)>& fn) {
  const unsigned hw = std::max(1u, std::thread::hardware_concurrency());
  const int n_workers = static_cast<int>(std::min<unsigned>(hw, 8));
  if (n_workers < 2 || n_tasks < 2) {
    for (int t = 0; t < n_tasks; ++t) fn(t);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(n_tasks));
  std::vector<std::thread> workers;
  for (int w = 0; w < std::min(n_workers, n_tasks); ++w)
    workers.emplace_back([&] {
      while (true) {
        const int t = next.fetch_add(1);
        if (t >= n_tasks) return;
        try {
          fn(t);
        } catch (...) {
          errors[static_cast<std::size_t>(t)] = std::current_exception();
        }
      }
    });
  for (auto& w : workers) w.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

}  // namespace

double TrueParams::at(const std::string& name) const {
  const auto it = values.find(name);
  if (it == values.end())
    throw ConfigError("true parameter '" + name + "' is missing");
  return it->second;
}

void TrueParams::validate(Family family) const {
  for (const auto& name : ModelSpec(family, 2, 2).scalar_names()) at(name);
  auto positive = [&](const std::string& n) {
    if (!(at(n) > 0.0)) throw ConfigError(n + " must be > 0");
  };
  auto nonneg = [&](const std::string& n) {
    if (!(at(n) >= 0.0)) throw ConfigError(n + " must be >= 0");
  };
  auto prob = [&](const std::string& n) {
    if (!(at(n) >= 0.0 && at(n) <= 1.0))
      throw ConfigError(n + " must be in [0,1]");
  };
  positive("sigma_e");
  nonneg("sigma_u");
  nonneg("sigma_w");
  switch (family) {
    case Family::standard_hlm:
      break;
    case Family::heterogeneous_overwriting:
      positive("sigmap_e");
      [[fallthrough]];
    case Family::homogeneous_overwriting:
      nonneg("delta");
      prob("prob_hi");
      prob("prob_lo");
      break;
    case Family::percolation:
      if (!(at("gamma") < 0.0)) throw ConfigError("gamma must be < 0");
      prob("prob_perc");
      break;
  }
}

TrueParams default_true_params(Family family) {
  TrueParams p;
  switch (family) {
    case Family::standard_hlm:
      p.values = {{"beta_1", 6.0}, {"beta_2", -0.03}, {"sigma_e", 0.4},
                  {"sigma_u", 0.2}, {"sigma_w", 0.1}};
      break;
    case Family::homogeneous_overwriting:
      p.values = {{"beta", 6.0},    {"delta", 0.3},   {"prob_hi", 0.35},
                  {"prob_lo", 0.15}, {"sigma_e", 0.35}, {"sigma_u", 0.2},
                  {"sigma_w", 0.1}};
      break;
    case Family::heterogeneous_overwriting:
      p.values = {{"beta", 6.0},     {"delta", 0.3},    {"prob_hi", 0.35},
                  {"prob_lo", 0.15}, {"sigma_e", 0.35}, {"sigmap_e", 0.6},
                  {"sigma_u", 0.2},  {"sigma_w", 0.1}};
      break;
    case Family::percolation:
      p.values = {{"beta", 6.0},    {"gamma", -0.25}, {"prob_perc", 0.2},
                  {"sigma_e", 0.35}, {"sigma_u", 0.2}, {"sigma_w", 0.1}};
      break;
  }
  return p;
}

void Design::validate() const {
  if (n_subjects < 2 || n_items < 2)
    throw ConfigError("design needs at least 2 subjects and 2 items");
  if (reps < 1) throw ConfigError("design needs reps >= 1");
}

SimulatedData simulate(Family family, const TrueParams& p, const Design& design,
                       std::uint64_t seed) {
  design.validate();
  p.validate(family);
  Rng rng(seed, sim_stream);

  const double sigma_u = p.at("sigma_u");
  const double sigma_w = p.at("sigma_w");
  Eigen::VectorXd u(design.n_subjects), w(design.n_items);
  for (int i = 0; i < design.n_subjects; ++i) u[i] = sigma_u * rng.normal();
  for (int j = 0; j < design.n_items; ++j) w[j] = sigma_w * rng.normal();

  std::vector<Trial> trials;
  std::vector<int> component;
  trials.reserve(static_cast<std::size_t>(design.n_subjects) *
                 static_cast<std::size_t>(design.n_items) *
                 static_cast<std::size_t>(design.reps));

  const double sigma_e = p.at("sigma_e");
  for (int i = 1; i <= design.n_subjects; ++i) {
    for (int j = 1; j <= design.n_items; ++j) {
      for (int r = 0; r < design.reps; ++r) {
        Trial t;
        t.subject = i;
        t.item = j;
        t.condition = design.condition(i, j);
        double mu = u[i - 1] + w[j - 1];
        double sigma = sigma_e;
        int comp = 0;
        switch (family) {
          case Family::standard_hlm:
            mu += p.at("beta_1") + p.at("beta_2") * t.condition;
            break;
          case Family::homogeneous_overwriting:
          case Family::heterogeneous_overwriting: {
            const double prob =
                t.condition == 1 ? p.at("prob_lo") : p.at("prob_hi");
            comp = rng.bernoulli(prob) ? 1 : 0;
            mu += p.at("beta") + (comp ? p.at("delta") : 0.0);
            if (comp && family == Family::heterogeneous_overwriting)
              sigma = p.at("sigmap_e");
            break;
          }
          case Family::percolation:
            mu += p.at("beta");
            if (t.condition == 1) {
              comp = rng.bernoulli(p.at("prob_perc")) ? 1 : 0;
              if (comp) mu += p.at("gamma");
            }
            break;
        }
        t.rt = std::exp(mu + sigma * rng.normal());
        trials.push_back(t);
        component.push_back(comp);
      }
    }
  }

  SimulatedData out{Dataset(std::move(trials), design.n_subjects, design.n_items),
                    std::move(component), std::move(u), std::move(w)};
  return out;
}

RecoveryReport recovery_study(Family family, const TrueParams& p,
                              const Design& design, int n_reps,
                              SamplerConfig cfg) {
  if (n_reps < 1) throw ConfigError("recovery_study needs n_reps >= 1");
  p.validate(family);
  design.validate();
  cfg.parallel_chains = false;  // replications already run concurrently

  const ModelSpec probe(family, design.n_subjects, design.n_items);
  std::vector<std::string> tracked = probe.scalar_names();
  if (is_overwriting(family)) tracked.push_back("diffprob");

  struct RepOutcome {
    bool converged = false;
    std::vector<double> mean, lo, hi;
    int divergences = 0;
    int draws = 0;
  };
  std::vector<RepOutcome> reps(static_cast<std::size_t>(n_reps));

  run_parallel(n_reps, [&](int r) {
    SamplerConfig c = cfg;
    c.seed = cfg.seed + 1 + static_cast<std::uint64_t>(r);
    const SimulatedData sim = simulate(family, p, design, c.seed);
    const ModelSpec spec(family, design.n_subjects, design.n_items);
    const PosteriorDraws draws = sample(spec, sim.data, c, /*with_loglik=*/false);
    const auto summary = posterior_summary(draws, spec);

    RepOutcome& out = reps[static_cast<std::size_t>(r)];
    out.mean.resize(tracked.size());
    out.lo.resize(tracked.size());
    out.hi.resize(tracked.size());
    double max_rhat = 0.0;
    for (std::size_t t = 0; t < tracked.size(); ++t) {
      for (const auto& ps : summary) {
        if (ps.name != tracked[t]) continue;
        out.mean[t] = ps.mean;
        out.lo[t] = ps.q025;
        out.hi[t] = ps.q975;
        if (std::isfinite(ps.rhat)) max_rhat = std::max(max_rhat, ps.rhat);
      }
    }
    out.converged = max_rhat <= 1.05;
    for (const auto& d : draws.diagnostics) out.divergences += d.divergences;
    out.draws = draws.n_chains() * draws.n_draws();
  });

  RecoveryReport report;
  report.family = family;
  report.n_replications = n_reps;
  report.params.resize(tracked.size());
  long long total_div = 0, total_draws = 0;
  for (std::size_t t = 0; t < tracked.size(); ++t) {
    ParamRecovery& pr = report.params[t];
    pr.name = tracked[t];
    pr.truth = tracked[t] == "diffprob" ? p.at("prob_hi") - p.at("prob_lo")
                                        : p.at(tracked[t]);
  }
  for (int r = 0; r < n_reps; ++r) {
    const RepOutcome& out = reps[static_cast<std::size_t>(r)];
    total_div += out.divergences;
    total_draws += out.draws;
    if (!out.converged) {
      ++report.n_excluded;
      report.excluded.push_back(r);
      continue;
    }
    for (std::size_t t = 0; t < tracked.size(); ++t) {
      ParamRecovery& pr = report.params[t];
      ++pr.n_used;
      if (pr.truth >= out.lo[t] && pr.truth <= out.hi[t]) ++pr.n_covered;
      pr.mean_bias += out.mean[t] - pr.truth;
      pr.mean_post_mean += out.mean[t];
    }
  }
  for (auto& pr : report.params) {
    if (pr.n_used > 0) {
      pr.mean_bias /= pr.n_used;
      pr.mean_post_mean /= pr.n_used;
    }
  }
  report.divergence_rate =
      total_draws > 0 ? static_cast<double>(total_div) / total_draws : 0.0;
  return report;
}

ModelRecoveryReport model_recovery(Family truth, const TrueParams& p,
                                   const Design& design, SamplerConfig cfg) {
  const SimulatedData sim = simulate(truth, p, design, cfg.seed);
  const std::vector<Family> families = {
      Family::standard_hlm, Family::homogeneous_overwriting,
      Family::heterogeneous_overwriting, Family::percolation};

  ModelRecoveryReport report;
  report.truth = truth;
  report.loos.resize(families.size());

  cfg.parallel_chains = false;
  run_parallel(static_cast<int>(families.size()), [&](int f) {
    const Family fam = families[static_cast<std::size_t>(f)];
    SamplerConfig c = cfg;
    c.seed = cfg.seed + 101 + static_cast<std::uint64_t>(f);
    const ModelSpec spec(fam, design.n_subjects, design.n_items);
    const PosteriorDraws draws = sample(spec, sim.data, c);
    report.loos[static_cast<std::size_t>(f)] = elpd_loo(draws, family_name(fam));
  });

  for (std::size_t a = 0; a < report.loos.size(); ++a)
    for (std::size_t b = a + 1; b < report.loos.size(); ++b)
      report.comparisons.push_back(compare(report.loos[a], report.loos[b]));
  return report;
}

}  // namespace rtmix
