#include "sgnet/init.hpp"

#include <cmath>

namespace sgnet {

void init_network(Network& net, Rng& rng) {
  ParamList list = net.parameters();
  for (auto& p : list.params) {
    auto d = p.tensor.mutable_data();
    switch (p.role) {
      case ParamRole::kConvWeight:
      case ParamRole::kConvBias: {
        const double b = 1.0 / std::sqrt(static_cast<double>(p.fan_in));
        for (double& v : d) v = uniform(rng, -b, b);
        break;
      }
      case ParamRole::kBnGamma:
        std::fill(d.begin(), d.end(), 1.0);
        break;
      case ParamRole::kBnBeta:
      case ParamRole::kGateAlpha:
        std::fill(d.begin(), d.end(), 0.0);
        break;
    }
    p.tensor.zero_grad();
  }
  for (auto& b : list.buffers) {
    auto d = b.tensor.mutable_data();
    const bool is_var = b.name.ends_with(".running_var");
    std::fill(d.begin(), d.end(), is_var ? 1.0 : 0.0);
  }
}

void init_network(Network& net, std::uint64_t seed) {
  Rng rng(seed);
  init_network(net, rng);
}

}  // namespace sgnet
