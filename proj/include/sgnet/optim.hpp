#pragma once

#include <span>
#include <vector>

#include "sgnet/tensor.hpp"

namespace sgnet {

struct RmsPropOptions {
  double rho = 0.99;
  double eps = 1e-8;
};

// s <- rho*s + (1-rho)*g^2 ; p <- p - lr*g/(sqrt(s)+eps), elementwise.
void rmsprop_step(std::span<double> param, std::span<const double> grad,
                  std::span<double> accum, double lr,
                  const RmsPropOptions& opt = {});

/// RMSprop over a fixed parameter list. A parameter without a gradient
/// buffer is treated as having zero gradient.
class RmsProp {
 public:
  explicit RmsProp(std::vector<Tensor> params, RmsPropOptions opt = {});
  void step(double lr);
  const std::vector<std::vector<double>>& accumulators() const {
    return accum_;
  }

 private:
  std::vector<Tensor> params_;
  std::vector<std::vector<double>> accum_;
  RmsPropOptions opt_;
};

/// Piecewise-constant learning rate from `initial` to `final` with drops at
/// the listed epochs (0-based: the drop applies from that epoch on).
/// Intermediate levels are placed log-uniformly between the endpoints,
/// except that exactly three drops reuse the 2.5x / 5x / 2x pattern of the
/// 2.5e-4 -> 1e-4 -> 2e-5 -> 1e-5 reference schedule. A zero endpoint
/// switches the intermediate levels to linear spacing.
struct LrSchedule {
  double initial = 2.5e-4;
  double final = 1e-5;
  std::vector<int> drop_epochs{75, 100, 150};

  void validate() const;
  // Rate after 0, 1, ..., drops.
  std::vector<double> levels() const;
  double at(int epoch) const;
};

}  // namespace sgnet
