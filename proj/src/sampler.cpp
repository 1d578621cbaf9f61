#include "rtmix/sampler.hpp"

#include <cmath>
#include <exception>
#include <thread>

#include "rtmix/math.hpp"
#include "rtmix/rng.hpp"

// Sampler internals follow Hoffman & Gelman (2014), "The No-U-Turn Sampler",
// with the multinomial trajectory sampling and windowed warmup used by
// current HMC implementations.

namespace rtmix {

void SamplerConfig::validate() const {
  if (n_chains < 1) throw SamplerError("n_chains must be >= 1");
  if (n_warmup < 150) throw SamplerError("n_warmup must be >= 150");
  if (n_draws < 1) throw SamplerError("n_draws must be >= 1");
  if (!(target_accept > 0.0 && target_accept < 1.0))
    throw SamplerError("target_accept must be in (0,1)");
  if (max_tree_depth < 1 || max_tree_depth > 15)
    throw SamplerError("max_tree_depth must be in [1,15]");
  if (!(init_radius > 0.0)) throw SamplerError("init_radius must be > 0");
}

int PosteriorDraws::index_of(const std::string& name) const {
  for (std::size_t k = 0; k < names.size(); ++k)
    if (names[k] == name) return static_cast<int>(k);
  throw SamplerError("no parameter named '" + name + "' in draws");
}

Eigen::MatrixXd PosteriorDraws::flat_values() const {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_chains()) * n_draws(),
                      n_params());
  for (int c = 0; c < n_chains(); ++c)
    out.middleRows(static_cast<Eigen::Index>(c) * n_draws(), n_draws()) =
        values[static_cast<std::size_t>(c)];
  return out;
}

Eigen::MatrixXd PosteriorDraws::flat_loglik() const {
  if (!has_loglik()) throw SamplerError("draws carry no loglik matrix");
  const Eigen::Index n = loglik.front().cols();
  Eigen::MatrixXd out(static_cast<Eigen::Index>(n_chains()) * n_draws(), n);
  for (int c = 0; c < n_chains(); ++c)
    out.middleRows(static_cast<Eigen::Index>(c) * n_draws(), n_draws()) =
        loglik[static_cast<std::size_t>(c)];
  return out;
}

Eigen::VectorXd PosteriorDraws::flat_column(const std::string& name) const {
  const int j = index_of(name);
  Eigen::VectorXd out(static_cast<Eigen::Index>(n_chains()) * n_draws());
  for (int c = 0; c < n_chains(); ++c)
    out.segment(static_cast<Eigen::Index>(c) * n_draws(), n_draws()) =
        values[static_cast<std::size_t>(c)].col(j);
  return out;
}

std::vector<Eigen::VectorXd> PosteriorDraws::chains_of(
    const std::string& name) const {
  const int j = index_of(name);
  std::vector<Eigen::VectorXd> out;
  out.reserve(values.size());
  for (const auto& m : values) out.push_back(m.col(j));
  return out;
}

namespace {

constexpr double max_energy_error = 1000.0;  // divergence threshold

struct PhasePoint {
  Eigen::VectorXd q;
  Eigen::VectorXd p;
  Eigen::VectorXd grad;
  double logp = 0.0;
};

double kinetic(const Eigen::VectorXd& p, const Eigen::VectorXd& inv_metric) {
  return 0.5 * p.dot(inv_metric.cwiseProduct(p));
}

double hamiltonian(const PhasePoint& z, const Eigen::VectorXd& inv_metric) {
  if (!std::isfinite(z.logp)) return std::numeric_limits<double>::infinity();
  return -z.logp + kinetic(z.p, inv_metric);
}

void leapfrog(const LogDensityTarget& target, PhasePoint& z, double eps,
              const Eigen::VectorXd& inv_metric) {
  z.p += 0.5 * eps * z.grad;
  z.q += eps * inv_metric.cwiseProduct(z.p);
  z.logp = target.logp_grad(z.q, z.grad);
  z.p += 0.5 * eps * z.grad;
}

// Hoffman & Gelman eq. 9: stop when the trajectory turns back on itself,
// measured with velocities under the current metric.
bool u_turn(const Eigen::VectorXd& q_minus, const Eigen::VectorXd& p_minus,
            const Eigen::VectorXd& q_plus, const Eigen::VectorXd& p_plus,
            const Eigen::VectorXd& inv_metric) {
  const Eigen::VectorXd dq = q_plus - q_minus;
  return dq.dot(inv_metric.cwiseProduct(p_minus)) < 0.0 ||
         dq.dot(inv_metric.cwiseProduct(p_plus)) < 0.0;
}

struct Tree {
  PhasePoint minus, plus;  // trajectory endpoints
  Eigen::VectorXd q_prop;  // multinomial proposal from the subtree
  double log_sum_w = neg_inf;
  double sum_accept = 0.0;
  int n_leapfrog = 0;
  bool divergent = false;
  bool turning = false;
};

class DualAverage {
 public:
  explicit DualAverage(double target) : target_(target) {}

  void restart(double eps) {
    mu_ = std::log(10.0 * eps);
    log_eps_ = std::log(eps);
    log_eps_bar_ = 0.0;
    h_bar_ = 0.0;
    m_ = 1.0;
  }

  double update(double accept) {
    h_bar_ = (1.0 - 1.0 / (m_ + t0_)) * h_bar_ + (target_ - accept) / (m_ + t0_);
    log_eps_ = mu_ - std::sqrt(m_) * h_bar_ / gamma_;
    const double w = std::pow(m_, -kappa_);
    log_eps_bar_ = w * log_eps_ + (1.0 - w) * log_eps_bar_;
    m_ += 1.0;
    return std::exp(log_eps_);
  }

  double adapted() const { return std::exp(log_eps_bar_); }

 private:
  double target_;
  double mu_ = 0.0, log_eps_ = 0.0, log_eps_bar_ = 0.0, h_bar_ = 0.0, m_ = 1.0;
  static constexpr double gamma_ = 0.05, t0_ = 10.0, kappa_ = 0.75;
};

class Welford {
 public:
  void reset(int dim) {
    n_ = 0;
    mean_ = Eigen::VectorXd::Zero(dim);
    m2_ = Eigen::VectorXd::Zero(dim);
  }
  void add(const Eigen::VectorXd& x) {
    ++n_;
    const Eigen::VectorXd d = x - mean_;
    mean_ += d / n_;
    m2_ += d.cwiseProduct(x - mean_);
  }
  int count() const { return n_; }
  Eigen::VectorXd variance() const {
    if (n_ < 2) return Eigen::VectorXd::Ones(mean_.size());
    return m2_ / (n_ - 1.0);
  }

 private:
  int n_ = 0;
  Eigen::VectorXd mean_, m2_;
};

// slow-window end points within warmup (final window absorbs the remainder)
std::vector<int> slow_window_ends(int init_buffer, int slow_end, int base) {
  std::vector<int> ends;
  int start = init_buffer;
  int size = base;
  if (slow_end - start <= 0) return ends;
  while (true) {
    if (slow_end - (start + size) < 2 * size) {
      ends.push_back(slow_end);
      break;
    }
    ends.push_back(start + size);
    start += size;
    size *= 2;
  }
  return ends;
}

class NutsChain {
 public:
  NutsChain(const LogDensityTarget& target, const SamplerConfig& cfg,
            int chain_index)
      : target_(target),
        cfg_(cfg),
        rng_(cfg.seed, static_cast<std::uint64_t>(chain_index)),
        da_(cfg.target_accept) {
    const int d = target_.dim();
    inv_metric_ = Eigen::VectorXd::Ones(d);
    z_.q.resize(d);
    z_.p.resize(d);
    z_.grad.resize(d);
    initialize();
  }

  void run(Eigen::MatrixXd& values, ChainDiagnostics& diag) {
    const int d = target_.dim();
    const int init_buffer = std::max(1, static_cast<int>(0.15 * cfg_.n_warmup));
    const int term_buffer = std::max(1, static_cast<int>(0.10 * cfg_.n_warmup));
    const int slow_end = cfg_.n_warmup - term_buffer;
    const auto window_ends = slow_window_ends(init_buffer, slow_end, 25);
    std::size_t next_window = 0;

    step_size_ = heuristic_step_size();
    da_.restart(step_size_);
    welford_.reset(d);

    for (int iter = 0; iter < cfg_.n_warmup; ++iter) {
      const auto res = transition();
      if (res.divergent) ++diag.warmup_divergences;
      step_size_ = da_.update(res.accept);

      const bool in_slow = iter >= init_buffer && iter < slow_end;
      if (in_slow) welford_.add(z_.q);
      if (next_window < window_ends.size() &&
          iter + 1 == window_ends[next_window]) {
        update_metric();
        welford_.reset(d);
        step_size_ = heuristic_step_size();
        da_.restart(step_size_);
        ++next_window;
      }
    }
    step_size_ = da_.adapted();

    values.resize(cfg_.n_draws, d);
    diag.tree_depths.resize(static_cast<std::size_t>(cfg_.n_draws));
    double accept_sum = 0.0;
    for (int s = 0; s < cfg_.n_draws; ++s) {
      const auto res = transition();
      if (res.divergent) ++diag.divergences;
      if (res.depth >= cfg_.max_tree_depth) ++diag.max_depth_hits;
      diag.tree_depths[static_cast<std::size_t>(s)] = res.depth;
      accept_sum += res.accept;
      values.row(s) = target_.to_constrained(z_.q).transpose();
    }
    diag.step_size = step_size_;
    diag.accept_mean = accept_sum / cfg_.n_draws;
  }

 private:
  struct TransitionResult {
    double accept = 0.0;
    int depth = 0;
    bool divergent = false;
  };

  void initialize() {
    const int d = target_.dim();
    for (int attempt = 0; attempt < 100; ++attempt) {
      for (int k = 0; k < d; ++k)
        z_.q[k] = rng_.uniform(-cfg_.init_radius, cfg_.init_radius);
      z_.logp = target_.logp_grad(z_.q, z_.grad);
      if (std::isfinite(z_.logp) && z_.grad.allFinite()) return;
    }
    throw SamplerError(
        "initialization failed: no finite log density in 100 attempts");
  }

  void draw_momentum(Eigen::VectorXd& p) {
    for (Eigen::Index k = 0; k < p.size(); ++k)
      p[k] = rng_.normal() / std::sqrt(inv_metric_[k]);
  }

  // double/halve until the one-step acceptance ratio crosses 1/2
  double heuristic_step_size() {
    double eps = 1.0;
    PhasePoint z0 = z_;
    draw_momentum(z0.p);
    const double h0 = hamiltonian(z0, inv_metric_);

    auto delta_h = [&](double e) {
      PhasePoint z = z0;
      leapfrog(target_, z, e, inv_metric_);
      const double h = hamiltonian(z, inv_metric_);
      return std::isfinite(h) ? h0 - h : neg_inf;
    };

    const double log_half = std::log(0.5);
    double dh = delta_h(eps);
    const int dir = dh > log_half ? 1 : -1;
    for (int i = 0; i < 100; ++i) {
      if (dir == 1 && !(dh > log_half)) break;
      if (dir == -1 && !(dh < log_half)) break;
      eps = dir == 1 ? 2.0 * eps : 0.5 * eps;
      if (eps > 1e7 || eps < 1e-16) break;
      dh = delta_h(eps);
    }
    return eps;
  }

  void update_metric() {
    if (welford_.count() < 2) return;
    const double n = welford_.count();
    const Eigen::VectorXd var = welford_.variance();
    inv_metric_ =
        ((n / (n + 5.0)) * var.array() + 1e-3 * (5.0 / (n + 5.0))).matrix();
  }

  Tree build_leaf(PhasePoint z, int dir, double h0) {
    Tree t;
    leapfrog(target_, z, dir * step_size_, inv_metric_);
    double h = hamiltonian(z, inv_metric_);
    if (std::isnan(h)) h = std::numeric_limits<double>::infinity();
    const double dh = h0 - h;  // log weight of the new point
    t.divergent = -dh > max_energy_error;
    t.log_sum_w = dh;
    t.sum_accept = std::min(1.0, std::exp(dh));
    t.n_leapfrog = 1;
    t.minus = z;
    t.plus = std::move(z);
    t.q_prop = t.plus.q;
    return t;
  }

  Tree build_tree(int depth, const PhasePoint& z_edge, int dir, double h0) {
    if (depth == 0) return build_leaf(z_edge, dir, h0);

    Tree t1 = build_tree(depth - 1, z_edge, dir, h0);
    if (t1.divergent || t1.turning) return t1;

    const PhasePoint& edge = dir == 1 ? t1.plus : t1.minus;
    Tree t2 = build_tree(depth - 1, edge, dir, h0);
    t2.sum_accept += t1.sum_accept;
    t2.n_leapfrog += t1.n_leapfrog;
    if (t2.divergent || t2.turning) return t2;

    Tree t;
    t.minus = dir == 1 ? std::move(t1.minus) : std::move(t2.minus);
    t.plus = dir == 1 ? std::move(t2.plus) : std::move(t1.plus);
    t.log_sum_w = log_sum_exp(t1.log_sum_w, t2.log_sum_w);
    t.sum_accept = t2.sum_accept;
    t.n_leapfrog = t2.n_leapfrog;
    t.q_prop = rng_.uniform() < std::exp(t2.log_sum_w - t.log_sum_w)
                   ? std::move(t2.q_prop)
                   : std::move(t1.q_prop);
    t.turning = u_turn(t.minus.q, t.minus.p, t.plus.q, t.plus.p, inv_metric_);
    return t;
  }

  TransitionResult transition() {
    draw_momentum(z_.p);
    const double h0 = hamiltonian(z_, inv_metric_);

    PhasePoint z_minus = z_;
    PhasePoint z_plus = z_;
    Eigen::VectorXd q_sample = z_.q;
    double log_sum_w = 0.0;  // current point carries weight exp(h0-h0)=1
    double sum_accept = 0.0;
    int n_leapfrog = 0;

    TransitionResult res;
    while (res.depth < cfg_.max_tree_depth) {
      const int dir = rng_.uniform() < 0.5 ? -1 : 1;
      Tree t = build_tree(res.depth, dir == 1 ? z_plus : z_minus, dir, h0);
      sum_accept += t.sum_accept;
      n_leapfrog += t.n_leapfrog;
      if (t.divergent) {
        res.divergent = true;
        break;
      }
      if (t.turning) break;

      // multinomial sampling across the doubled tree
      if (rng_.uniform() < std::exp(t.log_sum_w - log_sum_exp(log_sum_w, t.log_sum_w)))
        q_sample = t.q_prop;
      log_sum_w = log_sum_exp(log_sum_w, t.log_sum_w);
      if (dir == 1)
        z_plus = std::move(t.plus);
      else
        z_minus = std::move(t.minus);
      ++res.depth;
      if (u_turn(z_minus.q, z_minus.p, z_plus.q, z_plus.p, inv_metric_)) break;
    }

    z_.q = q_sample;
    z_.logp = target_.logp_grad(z_.q, z_.grad);
    res.accept = n_leapfrog > 0 ? sum_accept / n_leapfrog : 0.0;
    return res;
  }

  const LogDensityTarget& target_;
  const SamplerConfig& cfg_;
  Rng rng_;
  DualAverage da_;
  Welford welford_;
  Eigen::VectorXd inv_metric_;
  PhasePoint z_;
  double step_size_ = 1.0;
};

}  // namespace

PosteriorDraws sample(const LogDensityTarget& target, const SamplerConfig& cfg) {
  cfg.validate();
  PosteriorDraws out;
  out.names = target.names();
  out.seed = cfg.seed;
  out.values.resize(static_cast<std::size_t>(cfg.n_chains));
  out.diagnostics.resize(static_cast<std::size_t>(cfg.n_chains));

  auto run_one = [&](int c) {
    NutsChain chain(target, cfg, c);
    chain.run(out.values[static_cast<std::size_t>(c)],
              out.diagnostics[static_cast<std::size_t>(c)]);
  };

  if (cfg.parallel_chains && cfg.n_chains > 1 &&
      std::thread::hardware_concurrency() > 1) {
    std::vector<std::thread> workers;
    std::vector<std::exception_ptr> errors(
        static_cast<std::size_t>(cfg.n_chains));
    for (int c = 0; c < cfg.n_chains; ++c)
      workers.emplace_back([&, c] {
        try {
          run_one(c);
        } catch (...) {
          errors[static_cast<std::size_t>(c)] = std::current_exception();
        }
      });
    for (auto& w : workers) w.join();
    for (auto& e : errors)
      if (e) std::rethrow_exception(e);
  } else {
    for (int c = 0; c < cfg.n_chains; ++c) run_one(c);
  }
  return out;
}

PosteriorDraws sample(const ModelSpec& spec, const Dataset& data,
                      const SamplerConfig& cfg, bool with_loglik) {
  PosteriorTarget target(spec, data);
  PosteriorDraws draws = sample(target, cfg);
  if (with_loglik) {
    draws.loglik.resize(draws.values.size());
    for (std::size_t c = 0; c < draws.values.size(); ++c) {
      const Eigen::MatrixXd& vals = draws.values[c];
      Eigen::MatrixXd& ll = draws.loglik[c];
      ll.resize(vals.rows(), static_cast<Eigen::Index>(data.size()));
      for (Eigen::Index s = 0; s < vals.rows(); ++s)
        ll.row(s) =
            pointwise_loglik(spec, vals.row(s).transpose(), data).transpose();
    }
  }
  return draws;
}

}  // namespace rtmix
