// rtmix: fit, compare, simulate, and diagnose hierarchical LogNormal
// reading-time models from the command line.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <set>
#include <string>

#include "rtmix/dataset.hpp"
#include "rtmix/diagnostics.hpp"
#include "rtmix/io.hpp"
#include "rtmix/loo.hpp"
#include "rtmix/model.hpp"
#include "rtmix/sampler.hpp"
#include "rtmix/simulate.hpp"

namespace fs = std::filesystem;
using nlohmann::json;
using namespace rtmix;

namespace {

// exit codes: 0 ok, 1 usage or I/O failure, 2 fit-quality warning
constexpr int exit_ok = 0;
constexpr int exit_error = 1;
constexpr int exit_fit_warning = 2;

json load_json_file(const std::string& path) {
  return json::parse(read_text_file(path));
}

void write_json_file(const std::string& path, const json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

PriorConfig priors_from_json(const json& j) {
  PriorConfig p;
  if (j.contains("coef_scale")) p.coef_scale = j["coef_scale"].get<double>();
  if (j.contains("sd_scale")) p.sd_scale = j["sd_scale"].get<double>();
  if (j.contains("mix_alpha")) p.mix_alpha = j["mix_alpha"].get<double>();
  if (j.contains("mix_beta")) p.mix_beta = j["mix_beta"].get<double>();
  return p;
}

SamplerConfig sampler_from_json(const json& j) {
  SamplerConfig c;
  c.n_chains = j["chains"].get<int>();
  c.n_warmup = j["warmup"].get<int>();
  c.n_draws = j["draws"].get<int>();
  c.target_accept = j["target_accept"].get<double>();
  c.max_tree_depth = j["max_tree_depth"].get<int>();
  c.seed = j["seed"].get<std::uint64_t>();
  c.init_radius = j["init_radius"].get<double>();
  return c;
}

// flags that the user actually passed override values from --config
struct FitCli {
  std::string data, model, out, config;
  std::uint64_t seed = 0;
  int chains = 0, warmup = 0, draws = 0, max_tree_depth = 0;
  double target_accept = 0.0, init_radius = 0.0;
  double coef_scale = 0.0, sd_scale = 0.0, mix_alpha = 0.0, mix_beta = 0.0;
  bool no_plot = false;
};

json resolve_fit_config(const CLI::App& app, const FitCli& cli) {
  json cfg = {{"model", "standard"}, {"data", ""},      {"out", ""},
              {"seed", 1},           {"chains", 4},     {"warmup", 1000},
              {"draws", 1000},       {"target_accept", 0.8},
              {"max_tree_depth", 10}, {"init_radius", 2.0},
              {"plot", true},
              {"priors", {{"coef_scale", 2.5}, {"sd_scale", 2.5},
                          {"mix_alpha", 1.0}, {"mix_beta", 1.0}}}};
  if (!cli.config.empty()) cfg.merge_patch(load_json_file(cli.config));
  auto given = [&](const std::string& f) { return app.count(f) > 0; };
  if (given("--data")) cfg["data"] = cli.data;
  if (given("--model")) cfg["model"] = cli.model;
  if (given("--out")) cfg["out"] = cli.out;
  if (given("--seed")) cfg["seed"] = cli.seed;
  if (given("--chains")) cfg["chains"] = cli.chains;
  if (given("--warmup")) cfg["warmup"] = cli.warmup;
  if (given("--draws")) cfg["draws"] = cli.draws;
  if (given("--target-accept")) cfg["target_accept"] = cli.target_accept;
  if (given("--max-tree-depth")) cfg["max_tree_depth"] = cli.max_tree_depth;
  if (given("--init-radius")) cfg["init_radius"] = cli.init_radius;
  if (given("--coef-scale")) cfg["priors"]["coef_scale"] = cli.coef_scale;
  if (given("--sd-scale")) cfg["priors"]["sd_scale"] = cli.sd_scale;
  if (given("--mix-alpha")) cfg["priors"]["mix_alpha"] = cli.mix_alpha;
  if (given("--mix-beta")) cfg["priors"]["mix_beta"] = cli.mix_beta;
  if (given("--no-plot")) cfg["plot"] = false;
  return cfg;
}

std::vector<ParamSummary> figure_set(const std::vector<ParamSummary>& all,
                                     const ModelSpec& spec) {
  std::set<std::string> keep;
  for (const auto& n : spec.scalar_names()) keep.insert(n);
  keep.insert("diffprob");
  std::vector<ParamSummary> out;
  for (const auto& s : all)
    if (keep.count(s.name)) out.push_back(s);
  return out;
}

void print_summary_table(const std::vector<ParamSummary>& summaries) {
  std::printf("%-12s %10s %9s %9s %9s %9s %7s %8s\n", "parameter", "mean",
              "sd", "2.5%", "median", "97.5%", "rhat", "ess");
  for (const auto& s : summaries) {
    std::printf("%-12s %10.4f %9.4f %9.4f %9.4f %9.4f", s.name.c_str(), s.mean,
                s.sd, s.q025, s.median, s.q975);
    if (std::isfinite(s.rhat))
      std::printf(" %7.3f", s.rhat);
    else
      std::printf(" %7s", "n/a");
    if (std::isfinite(s.ess))
      std::printf(" %8.0f\n", s.ess);
    else
      std::printf(" %8s\n", "n/a");
  }
}

int cmd_fit(const CLI::App& app, const FitCli& cli) {
  const json cfg = resolve_fit_config(app, cli);
  if (cfg["data"].get<std::string>().empty() ||
      cfg["out"].get<std::string>().empty()) {
    std::cerr << "fit: --data and --out are required (directly or via --config)\n";
    return exit_error;
  }

  // validate the input before touching the output directory, so a malformed
  // CSV leaves no partial outputs behind
  Dataset data = load_csv(cfg["data"].get<std::string>());
  for (const auto& w : data.warnings()) std::cerr << "warning: " << w << '\n';

  const Family family = family_from_name(cfg["model"].get<std::string>());
  const ModelSpec spec(family, data.n_subjects(), data.n_items(),
                       priors_from_json(cfg["priors"]));
  const SamplerConfig scfg = sampler_from_json(cfg);

  const PosteriorDraws draws = sample(spec, data, scfg);
  const auto summaries = posterior_summary(draws, spec);

  const fs::path out_dir(cfg["out"].get<std::string>());
  fs::create_directories(out_dir);
  write_json_file((out_dir / "config.json").string(), cfg);
  write_draws_csv((out_dir / "draws.csv").string(), draws, cfg.dump());

  json summary = {{"model", family_name(family)},
                  {"config", cfg},
                  {"seed", scfg.seed},
                  {"n_trials", data.size()},
                  {"n_subjects", data.n_subjects()},
                  {"n_items", data.n_items()},
                  {"params", summaries_to_json(summaries)},
                  {"diagnostics", diagnostics_to_json(draws)}};
  std::vector<std::string> warnings;
  double max_rhat = 0.0;
  for (const auto& s : summaries)
    if (std::isfinite(s.rhat)) max_rhat = std::max(max_rhat, s.rhat);
  if (max_rhat > 1.05)
    warnings.push_back("convergence warning: max R-hat = " +
                       std::to_string(max_rhat));
  summary["warnings"] = warnings;
  write_json_file((out_dir / "summary.json").string(), summary);

  write_loglik_bin((out_dir / "loglik.bin").string(), draws.flat_loglik());
  if (cfg["plot"].get<bool>())
    write_text_file((out_dir / "intervals.svg").string(),
                    forest_svg(figure_set(summaries, spec)));

  print_summary_table(figure_set(summaries, spec));
  if (!warnings.empty()) {
    std::cerr << "\n=== fit quality warning ===\n";
    for (const auto& w : warnings) std::cerr << w << '\n';
    std::cerr << "outputs were still written to " << out_dir.string() << '\n';
    return exit_fit_warning;
  }
  return exit_ok;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& out) {
  std::vector<LooResult> loos;
  Eigen::Index n_trials = -1;
  for (const auto& dir : dirs) {
    const fs::path p(dir);
    const Eigen::MatrixXd ll = read_loglik_bin((p / "loglik.bin").string());
    std::string label = dir;
    const fs::path cfg_path = p / "config.json";
    if (fs::exists(cfg_path)) {
      const json cfg = load_json_file(cfg_path.string());
      if (cfg.contains("model")) label = cfg["model"].get<std::string>();
    }
    if (n_trials >= 0 && ll.cols() != n_trials) {
      std::cerr << "compare: datasets differ (" << ll.cols() << " vs "
                << n_trials << " trials)\n";
      return exit_error;
    }
    n_trials = ll.cols();
    loos.push_back(elpd_loo(ll, label));
  }

  std::ostringstream table;
  table << "model_a,model_b,elpd_diff,se_diff\n";
  std::printf("%-16s %-16s %10s %8s\n", "model_a", "model_b", "elpd_diff", "se");
  for (std::size_t a = 0; a < loos.size(); ++a) {
    for (std::size_t b = a + 1; b < loos.size(); ++b) {
      const ComparisonResult r = compare(loos[a], loos[b]);
      std::printf("%s\n", format_comparison_row(r).c_str());
      char buf[200];
      std::snprintf(buf, sizeof(buf), "%s,%s,%.6f,%.6f\n", r.model_a.c_str(),
                    r.model_b.c_str(), r.elpd_diff, r.se_diff);
      table << buf;
    }
  }
  for (std::size_t i = 0; i < loos.size(); ++i) {
    if (loos[i].n_bad_k > 0) {
      std::printf("note: %s has %d trial(s) with Pareto k > 0.7: ",
                  loos[i].model.c_str(), loos[i].n_bad_k);
      for (int idx : loos[i].bad_k_indices()) std::printf("%d ", idx);
      std::printf("\n");
    }
  }
  if (!out.empty()) write_text_file(out, table.str());
  return exit_ok;
}

struct SimCli {
  std::string model = "het-overwrite", out, config;
  std::uint64_t seed = 0;
  int subjects = 0, items = 0, reps = 0;
  std::vector<std::string> params;
};

int cmd_simulate(const CLI::App& app, const SimCli& cli) {
  json cfg = {{"model", "het-overwrite"},
              {"out", ""},
              {"seed", 1},
              {"design", {{"subjects", 40}, {"items", 24}, {"reps", 1}}},
              {"params", json::object()}};
  if (!cli.config.empty()) cfg.merge_patch(load_json_file(cli.config));
  auto given = [&](const std::string& f) { return app.count(f) > 0; };
  if (given("--model")) cfg["model"] = cli.model;
  if (given("--out")) cfg["out"] = cli.out;
  if (given("--seed")) cfg["seed"] = cli.seed;
  if (given("--subjects")) cfg["design"]["subjects"] = cli.subjects;
  if (given("--items")) cfg["design"]["items"] = cli.items;
  if (given("--reps")) cfg["design"]["reps"] = cli.reps;
  for (const auto& kv : cli.params) {
    const auto eq = kv.find('=');
    if (eq == std::string::npos) {
      std::cerr << "simulate: --param expects name=value, got '" << kv << "'\n";
      return exit_error;
    }
    cfg["params"][kv.substr(0, eq)] = std::stod(kv.substr(eq + 1));
  }
  if (cfg["out"].get<std::string>().empty()) {
    std::cerr << "simulate: --out is required\n";
    return exit_error;
  }

  const Family family = family_from_name(cfg["model"].get<std::string>());
  TrueParams p = default_true_params(family);
  for (const auto& [k, v] : cfg["params"].items())
    p.values[k] = v.get<double>();
  // echo the fully resolved parameter set
  json pj = json::object();
  for (const auto& [k, v] : p.values) pj[k] = v;
  cfg["params"] = pj;

  Design design;
  design.n_subjects = cfg["design"]["subjects"].get<int>();
  design.n_items = cfg["design"]["items"].get<int>();
  design.reps = cfg["design"]["reps"].get<int>();
  const auto seed = cfg["seed"].get<std::uint64_t>();

  const SimulatedData sim = simulate(family, p, design, seed);

  const fs::path out_dir(cfg["out"].get<std::string>());
  fs::create_directories(out_dir);
  write_json_file((out_dir / "config.json").string(), cfg);
  write_csv(sim.data, (out_dir / "data.csv").string());

  json truth = {{"model", family_name(family)},
                {"seed", seed},
                {"config", cfg},
                {"params", pj},
                {"design", cfg["design"]}};
  write_json_file((out_dir / "truth.json").string(), truth);

  std::ostringstream ind;
  ind << "trial,component\n";
  for (std::size_t k = 0; k < sim.component.size(); ++k)
    ind << (k + 1) << ',' << sim.component[k] << '\n';
  write_text_file((out_dir / "indicators.csv").string(), ind.str());

  std::printf("simulated %zu trials (%d subjects x %d items) from %s into %s\n",
              sim.data.size(), design.n_subjects, design.n_items,
              family_name(family).c_str(), out_dir.string().c_str());
  return exit_ok;
}

int cmd_diagnose(const std::string& dir) {
  const fs::path p(dir);
  if (!fs::exists(p / "summary.json") || !fs::exists(p / "draws.csv")) {
    std::cerr << "diagnose: " << dir << " lacks summary.json/draws.csv\n";
    return exit_error;
  }
  const json summary = load_json_file((p / "summary.json").string());
  const PosteriorDraws draws = read_draws_csv((p / "draws.csv").string());

  std::printf("%-12s %7s %8s\n", "parameter", "rhat", "ess");
  for (const auto& name : draws.names) {
    try {
      const double r = split_rhat(draws, name);
      const double e = bulk_ess(draws, name);
      std::printf("%-12s %7.3f ", name.c_str(), r);
      if (std::isfinite(e))
        std::printf("%8.0f\n", e);
      else
        std::printf("%8s\n", "n/a");
    } catch (const SamplerError&) {
      std::printf("%-12s %7s %8s\n", name.c_str(), "n/a", "n/a");
    }
  }

  if (summary.contains("diagnostics")) {
    const json& d = summary["diagnostics"];
    std::printf("\nchain  divergences  max_depth_hits  step_size\n");
    int c = 1;
    for (const auto& ch : d["chains"]) {
      std::printf("%5d  %11d  %14d  %9.4g\n", c++,
                  ch["divergences"].get<int>(),
                  ch["max_depth_hits"].get<int>(),
                  ch["step_size"].get<double>());
    }
  }

  if (fs::exists(p / "loglik.bin")) {
    const Eigen::MatrixXd ll = read_loglik_bin((p / "loglik.bin").string());
    const LooResult loo = elpd_loo(ll);
    int ok = 0, warn = 0, bad = 0;
    for (Eigen::Index i = 0; i < loo.khat.size(); ++i) {
      if (loo.khat[i] > 0.7)
        ++bad;
      else if (loo.khat[i] > 0.5)
        ++warn;
      else
        ++ok;
    }
    std::printf("\nPareto k: %d good (<=0.5), %d ok (0.5-0.7], %d bad (>0.7)\n",
                ok, warn, bad);
    std::printf("elpd_loo %.2f (se %.2f)\n", loo.elpd, loo.se);
  }
  return exit_ok;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"hierarchical LogNormal mixture models for reading-time data"};
  app.require_subcommand(1);

  FitCli fit_cli;
  CLI::App* fit = app.add_subcommand("fit", "fit a model to a CSV dataset");
  fit->add_option("--data", fit_cli.data, "input CSV (subject,item,condition,rt)");
  fit->add_option("--model", fit_cli.model,
                  "standard|hom-overwrite|het-overwrite|percolation");
  fit->add_option("--out", fit_cli.out, "output directory");
  fit->add_option("--config", fit_cli.config, "JSON config (flags override)");
  fit->add_option("--seed", fit_cli.seed, "RNG seed");
  fit->add_option("--chains", fit_cli.chains, "number of chains");
  fit->add_option("--warmup", fit_cli.warmup, "warmup iterations per chain");
  fit->add_option("--draws", fit_cli.draws, "post-warmup draws per chain");
  fit->add_option("--target-accept", fit_cli.target_accept, "adaptation target");
  fit->add_option("--max-tree-depth", fit_cli.max_tree_depth, "NUTS depth cap");
  fit->add_option("--init-radius", fit_cli.init_radius, "init range");
  fit->add_option("--coef-scale", fit_cli.coef_scale, "Cauchy scale, coefficients");
  fit->add_option("--sd-scale", fit_cli.sd_scale, "Cauchy scale, standard deviations");
  fit->add_option("--mix-alpha", fit_cli.mix_alpha, "Beta alpha, mixing probs");
  fit->add_option("--mix-beta", fit_cli.mix_beta, "Beta beta, mixing probs");
  fit->add_flag("--no-plot", fit_cli.no_plot, "skip intervals.svg");

  std::vector<std::string> compare_dirs;
  std::string compare_out;
  CLI::App* cmp = app.add_subcommand("compare", "PSIS-LOO comparison of fits");
  cmp->add_option("dirs", compare_dirs, "two or more fit output directories")
      ->expected(-2);
  cmp->add_option("--out", compare_out, "write the comparison table CSV here");

  SimCli sim_cli;
  CLI::App* sim = app.add_subcommand("simulate", "generate synthetic data");
  sim->add_option("--model", sim_cli.model,
                  "standard|hom-overwrite|het-overwrite|percolation");
  sim->add_option("--out", sim_cli.out, "output directory");
  sim->add_option("--config", sim_cli.config, "JSON config (flags override)");
  sim->add_option("--seed", sim_cli.seed, "RNG seed");
  sim->add_option("--subjects", sim_cli.subjects, "number of subjects");
  sim->add_option("--items", sim_cli.items, "number of items");
  sim->add_option("--reps", sim_cli.reps, "trials per subject x item cell");
  sim->add_option("--param", sim_cli.params,
                  "override a true parameter, name=value (repeatable)");

  std::string diag_dir;
  CLI::App* diag = app.add_subcommand("diagnose", "convergence and k-hat report");
  diag->add_option("dir", diag_dir, "fit output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (fit->parsed()) return cmd_fit(*fit, fit_cli);
    if (cmp->parsed()) return cmd_compare(compare_dirs, compare_out);
    if (sim->parsed()) return cmd_simulate(*sim, sim_cli);
    if (diag->parsed()) return cmd_diagnose(diag_dir);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return exit_error;
  }
  return exit_error;
}
