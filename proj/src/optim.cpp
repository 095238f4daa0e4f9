#include "sgnet/optim.hpp"

#include <algorithm>
#include <cmath>

#include "sgnet/errors.hpp"

namespace sgnet {

void rmsprop_step(std::span<double> param, std::span<const double> grad,
                  std::span<double> accum, double lr,
                  const RmsPropOptions& opt) {
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    accum[i] = opt.rho * accum[i] + (1.0 - opt.rho) * g * g;
    param[i] -= lr * g / (std::sqrt(accum[i]) + opt.eps);
  }
}

RmsProp::RmsProp(std::vector<Tensor> params, RmsPropOptions opt)
    : params_(std::move(params)), opt_(opt) {
  accum_.reserve(params_.size());
  for (const auto& p : params_) accum_.emplace_back(p.numel(), 0.0);
}

void RmsProp::step(double lr) {
  std::vector<double> zeros;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    Tensor& p = params_[i];
    std::span<const double> g = p.grad();
    if (!p.has_grad()) {
      zeros.assign(p.numel(), 0.0);
      g = zeros;
    }
    rmsprop_step(p.mutable_data(), g, accum_[i], lr, opt_);
  }
}

void LrSchedule::validate() const {
  if (!(initial >= 0.0) || !(final >= 0.0) || final > initial ||
      !std::isfinite(initial)) {
    throw ConfigError("learning rate must satisfy 0 <= lr_final <= lr_initial");
  }
  if (!std::is_sorted(drop_epochs.begin(), drop_epochs.end()) ||
      std::adjacent_find(drop_epochs.begin(), drop_epochs.end()) !=
          drop_epochs.end()) {
    throw ConfigError("lr_drop_epochs must be strictly increasing");
  }
  if (!drop_epochs.empty() && drop_epochs.front() < 1) {
    throw ConfigError("lr_drop_epochs must be >= 1");
  }
}

std::vector<double> LrSchedule::levels() const {
  const std::size_t m = drop_epochs.size();
  std::vector<double> out{initial};
  if (m == 0) return out;
  std::vector<double> frac(m);
  if (m == 3) {
    const double total = std::log(25.0);
    frac = {std::log(2.5) / total, std::log(12.5) / total, 1.0};
  } else {
    for (std::size_t j = 0; j < m; ++j) frac[j] = double(j + 1) / m;
  }
  for (std::size_t j = 0; j + 1 < m; ++j) {
    out.push_back(final > 0.0
                      ? initial * std::pow(final / initial, frac[j])
                      : initial + (final - initial) * frac[j]);
  }
  out.push_back(final);
  return out;
}

double LrSchedule::at(int epoch) const {
  const auto passed = std::upper_bound(drop_epochs.begin(), drop_epochs.end(),
                                       epoch) -
                      drop_epochs.begin();
  return levels()[passed];
}

}  // namespace sgnet
