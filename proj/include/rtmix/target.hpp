#ifndef RTMIX_TARGET_HPP
#define RTMIX_TARGET_HPP

#include <Eigen/Core>
#include <string>
#include <vector>

namespace rtmix {

// A differentiable log density over R^dim. The sampler only ever sees this
// interface, so debug targets (Gaussians, conjugate toys) plug in the same
// way as the reading-time posteriors.
class LogDensityTarget {
 public:
  virtual ~LogDensityTarget() = default;

  virtual int dim() const = 0;

  // Log density at `pos`, gradient written to `grad` (resized by caller).
  // A non-finite return value or gradient marks the point as invalid.
  virtual double logp_grad(const Eigen::VectorXd& pos,
                           Eigen::VectorXd& grad) const = 0;

  virtual std::vector<std::string> names() const {
    std::vector<std::string> n;
    n.reserve(static_cast<std::size_t>(dim()));
    for (int k = 0; k < dim(); ++k) n.push_back("x" + std::to_string(k + 1));
    return n;
  }

  // Map sampling coordinates to reported (model-space) values.
  virtual Eigen::VectorXd to_constrained(const Eigen::VectorXd& pos) const {
    return pos;
  }
};

}  // namespace rtmix

#endif
