#include "rtmix/io.hpp"

#include <cmath>
#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <sstream>

namespace rtmix {

namespace {

constexpr char loglik_magic[4] = {'R', 'T', 'L', 'L'};
constexpr std::uint32_t loglik_version = 1;

double json_safe(double v) { return v; }

nlohmann::json number_or_null(double v) {
  if (std::isfinite(v)) return v;
  return nullptr;
}

}  // namespace

void write_loglik_bin(const std::string& path, const Eigen::MatrixXd& loglik) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  const auto s = static_cast<std::uint32_t>(loglik.rows());
  const auto n = static_cast<std::uint32_t>(loglik.cols());
  out.write(loglik_magic, 4);
  out.write(reinterpret_cast<const char*>(&loglik_version), 4);
  out.write(reinterpret_cast<const char*>(&s), 4);
  out.write(reinterpret_cast<const char*>(&n), 4);
  std::vector<double> row(n);
  for (std::uint32_t i = 0; i < s; ++i) {
    for (std::uint32_t j = 0; j < n; ++j) row[j] = loglik(i, j);
    out.write(reinterpret_cast<const char*>(row.data()),
              static_cast<std::streamsize>(sizeof(double) * n));
  }
  if (!out) throw IoError("short write to " + path);
}

Eigen::MatrixXd read_loglik_bin(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  char magic[4];
  std::uint32_t version = 0, s = 0, n = 0;
  in.read(magic, 4);
  in.read(reinterpret_cast<char*>(&version), 4);
  in.read(reinterpret_cast<char*>(&s), 4);
  in.read(reinterpret_cast<char*>(&n), 4);
  if (!in || std::memcmp(magic, loglik_magic, 4) != 0)
    throw IoError(path + " is not a loglik matrix file");
  if (version != loglik_version)
    throw IoError(path + ": unsupported loglik file version");
  Eigen::MatrixXd out(s, n);
  std::vector<double> row(n);
  for (std::uint32_t i = 0; i < s; ++i) {
    in.read(reinterpret_cast<char*>(row.data()),
            static_cast<std::streamsize>(sizeof(double) * n));
    if (!in) throw IoError(path + ": truncated loglik matrix");
    for (std::uint32_t j = 0; j < n; ++j) out(i, j) = row[j];
  }
  return out;
}

void write_draws_csv(const std::string& path, const PosteriorDraws& draws,
                     const std::string& config_comment) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  if (!config_comment.empty()) out << "# " << config_comment << '\n';
  out << "chain,iter,parameter,value\n";
  char buf[64];
  for (int c = 0; c < draws.n_chains(); ++c) {
    const Eigen::MatrixXd& vals = draws.values[static_cast<std::size_t>(c)];
    for (Eigen::Index s = 0; s < vals.rows(); ++s) {
      for (Eigen::Index p = 0; p < vals.cols(); ++p) {
        std::snprintf(buf, sizeof(buf), "%.17g", vals(s, p));
        out << (c + 1) << ',' << (s + 1) << ','
            << draws.names[static_cast<std::size_t>(p)] << ',' << buf << '\n';
      }
    }
  }
  if (!out) throw IoError("short write to " + path);
}

PosteriorDraws read_draws_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::string line;
  bool header_seen = false;
  // (chain, iter) -> name -> value; names keep first-appearance order
  std::vector<std::string> names;
  std::map<std::string, int> name_index;
  std::map<std::pair<int, int>, std::vector<double>> cells;
  int max_chain = 0, max_iter = 0;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      if (line.rfind("chain,iter,parameter,value", 0) != 0)
        throw IoError(path + ": unexpected draws header");
      header_seen = true;
      continue;
    }
    std::stringstream ss(line);
    std::string chain_s, iter_s, name, value_s;
    if (!std::getline(ss, chain_s, ',') || !std::getline(ss, iter_s, ',') ||
        !std::getline(ss, name, ',') || !std::getline(ss, value_s))
      throw IoError(path + ": malformed draws row");
    const int chain = std::stoi(chain_s);
    const int iter = std::stoi(iter_s);
    if (name_index.find(name) == name_index.end()) {
      name_index[name] = static_cast<int>(names.size());
      names.push_back(name);
    }
    auto& cell = cells[{chain, iter}];
    cell.resize(names.size(), std::numeric_limits<double>::quiet_NaN());
    cell[static_cast<std::size_t>(name_index[name])] = std::stod(value_s);
    max_chain = std::max(max_chain, chain);
    max_iter = std::max(max_iter, iter);
  }
  if (names.empty()) throw IoError(path + ": no draws found");

  PosteriorDraws draws;
  draws.names = names;
  draws.values.resize(static_cast<std::size_t>(max_chain));
  for (int c = 1; c <= max_chain; ++c) {
    Eigen::MatrixXd vals(max_iter, static_cast<Eigen::Index>(names.size()));
    for (int s = 1; s <= max_iter; ++s) {
      const auto it = cells.find({c, s});
      if (it == cells.end() || it->second.size() != names.size())
        throw IoError(path + ": incomplete draws grid");
      for (std::size_t p = 0; p < names.size(); ++p)
        vals(s - 1, static_cast<Eigen::Index>(p)) = it->second[p];
    }
    draws.values[static_cast<std::size_t>(c - 1)] = std::move(vals);
  }
  draws.diagnostics.resize(static_cast<std::size_t>(max_chain));
  return draws;
}

nlohmann::json summaries_to_json(const std::vector<ParamSummary>& summaries) {
  nlohmann::json arr = nlohmann::json::array();
  for (const auto& s : summaries) {
    arr.push_back({{"name", s.name},
                   {"mean", json_safe(s.mean)},
                   {"sd", json_safe(s.sd)},
                   {"q2.5", json_safe(s.q025)},
                   {"median", json_safe(s.median)},
                   {"q97.5", json_safe(s.q975)},
                   {"rhat", number_or_null(s.rhat)},
                   {"ess", number_or_null(s.ess)}});
  }
  return arr;
}

nlohmann::json diagnostics_to_json(const PosteriorDraws& draws) {
  nlohmann::json per_chain = nlohmann::json::array();
  for (const auto& d : draws.diagnostics) {
    int depth_max = 0;
    for (int t : d.tree_depths) depth_max = std::max(depth_max, t);
    per_chain.push_back({{"divergences", d.divergences},
                         {"warmup_divergences", d.warmup_divergences},
                         {"max_depth_hits", d.max_depth_hits},
                         {"step_size", json_safe(d.step_size)},
                         {"accept_mean", json_safe(d.accept_mean)},
                         {"max_tree_depth_seen", depth_max}});
  }
  return {{"chains", per_chain}, {"seed", draws.seed}};
}

nlohmann::json loo_to_json(const LooResult& r) {
  return {{"model", r.model},
          {"elpd_loo", json_safe(r.elpd)},
          {"se_elpd", json_safe(r.se)},
          {"n_bad_k", r.n_bad_k},
          {"bad_k_indices", r.bad_k_indices()},
          {"warnings", r.warnings}};
}

nlohmann::json comparison_to_json(const ComparisonResult& r) {
  return {{"model_a", r.model_a},
          {"model_b", r.model_b},
          {"elpd_diff", json_safe(r.elpd_diff)},
          {"se_diff", json_safe(r.se_diff)},
          {"preferred", r.preferred}};
}

nlohmann::json recovery_to_json(const RecoveryReport& r) {
  nlohmann::json params = nlohmann::json::array();
  for (const auto& p : r.params) {
    params.push_back({{"name", p.name},
                      {"truth", p.truth},
                      {"covered", p.n_covered},
                      {"used", p.n_used},
                      {"mean_bias", json_safe(p.mean_bias)},
                      {"mean_posterior_mean", json_safe(p.mean_post_mean)}});
  }
  return {{"family", family_name(r.family)},
          {"replications", r.n_replications},
          {"excluded", r.excluded},
          {"n_excluded", r.n_excluded},
          {"divergence_rate", json_safe(r.divergence_rate)},
          {"params", params}};
}

nlohmann::json model_recovery_to_json(const ModelRecoveryReport& r) {
  nlohmann::json loos = nlohmann::json::array();
  for (const auto& l : r.loos) loos.push_back(loo_to_json(l));
  nlohmann::json comps = nlohmann::json::array();
  for (const auto& c : r.comparisons) comps.push_back(comparison_to_json(c));
  return {{"truth", family_name(r.truth)},
          {"loo", loos},
          {"comparisons", comps}};
}

std::string forest_svg(const std::vector<ParamSummary>& summaries) {
  const int row_h = 28, top = 40, left = 150, width = 640, plot_w = 380;
  const int height = top + row_h * static_cast<int>(summaries.size()) + 30;

  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (const auto& s : summaries) {
    if (first) {
      lo = s.q025;
      hi = s.q975;
      first = false;
    }
    lo = std::min(lo, s.q025);
    hi = std::max(hi, s.q975);
  }
  if (!(hi > lo)) hi = lo + 1.0;
  const double pad = 0.05 * (hi - lo);
  lo -= pad;
  hi += pad;
  auto xpos = [&](double v) {
    return left + (v - lo) / (hi - lo) * plot_w;
  };

  std::ostringstream svg;
  svg << "<svg xmlns='http://www.w3.org/2000/svg' width='" << width
      << "' height='" << height << "'>\n"
      << "<style>text{font-family:sans-serif;font-size:12px}</style>\n"
      << "<text x='" << left << "' y='20'>posterior median and 95% interval</text>\n";
  if (lo < 0.0 && hi > 0.0) {
    svg << "<line x1='" << xpos(0.0) << "' y1='" << top - 10 << "' x2='"
        << xpos(0.0) << "' y2='" << height - 25
        << "' stroke='#bbbbbb' stroke-dasharray='4,3'/>\n";
  }
  int row = 0;
  char buf[96];
  for (const auto& s : summaries) {
    const int y = top + row * row_h;
    svg << "<text x='8' y='" << y + 4 << "'>" << s.name << "</text>\n";
    svg << "<line x1='" << xpos(s.q025) << "' y1='" << y << "' x2='"
        << xpos(s.q975) << "' y2='" << y << "' stroke='black' stroke-width='1.5'/>\n";
    svg << "<circle cx='" << xpos(s.median) << "' cy='" << y
        << "' r='3.5' fill='black'/>\n";
    std::snprintf(buf, sizeof(buf), "%.3g [%.3g, %.3g]", s.median, s.q025,
                  s.q975);
    svg << "<text x='" << left + plot_w + 12 << "' y='" << y + 4 << "'>" << buf
        << "</text>\n";
    ++row;
  }
  std::snprintf(buf, sizeof(buf), "%.3g", lo);
  svg << "<text x='" << left << "' y='" << height - 10 << "'>" << buf
      << "</text>\n";
  std::snprintf(buf, sizeof(buf), "%.3g", hi);
  svg << "<text x='" << left + plot_w - 20 << "' y='" << height - 10 << "'>"
      << buf << "</text>\n</svg>\n";
  return svg.str();
}

void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) throw IoError("cannot write " + path);
  out << content;
  if (!out) throw IoError("short write to " + path);
}

std::string read_text_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace rtmix
