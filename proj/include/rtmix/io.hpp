#ifndef RTMIX_IO_HPP
#define RTMIX_IO_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

#include "rtmix/diagnostics.hpp"
#include "rtmix/loo.hpp"
#include "rtmix/sampler.hpp"
#include "rtmix/simulate.hpp"

#include <json.hpp>

namespace rtmix {

struct IoError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Dense pointwise log-likelihood matrix with a 16-byte header:
//   bytes 0-3   magic "RTLL"
//   bytes 4-7   uint32 version (1)
//   bytes 8-11  uint32 S (draws, chain-major)
//   bytes 12-15 uint32 N (trials)
// followed by S*N little-endian float64 values, row-major (draw-major).
void write_loglik_bin(const std::string& path, const Eigen::MatrixXd& loglik);
Eigen::MatrixXd read_loglik_bin(const std::string& path);

// Long-format draws: `chain,iter,parameter,value`, preceded by one comment
// line embedding the resolved run configuration.
void write_draws_csv(const std::string& path, const PosteriorDraws& draws,
                     const std::string& config_comment);
PosteriorDraws read_draws_csv(const std::string& path);

nlohmann::json summaries_to_json(const std::vector<ParamSummary>& summaries);
nlohmann::json diagnostics_to_json(const PosteriorDraws& draws);
nlohmann::json loo_to_json(const LooResult& r);
nlohmann::json comparison_to_json(const ComparisonResult& r);
nlohmann::json recovery_to_json(const RecoveryReport& r);
nlohmann::json model_recovery_to_json(const ModelRecoveryReport& r);

// Forest plot of posterior medians with central 95% intervals, one row per
// parameter, in the style of interval displays for hierarchical fits.
std::string forest_svg(const std::vector<ParamSummary>& summaries);

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace rtmix

#endif
