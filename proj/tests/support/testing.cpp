#include "testing.hpp"

#include <algorithm>
#include <cmath>

#include "sgnet/batchnorm.hpp"
#include "sgnet/blocks.hpp"
#include "sgnet/conv.hpp"
#include "sgnet/heatmap.hpp"
#include "sgnet/ops.hpp"
#include "sgnet/tape.hpp"

namespace sgnet::testing {

Tensor random_tensor(const Shape& s, Rng& rng, double lo, double hi,
                     bool requires_grad) {
  Tensor t(s, requires_grad);
  for (double& v : t.mutable_data()) v = uniform(rng, lo, hi);
  return t;
}

int random_int(Rng& rng, int lo, int hi) {
  return std::uniform_int_distribution<int>(lo, hi)(rng);
}

GradCheckResult gradcheck(
    const std::function<Tensor(const std::vector<Tensor>&)>& f,
    std::vector<Tensor> inputs, Rng& rng, double h) {
  Tape::current().clear();
  for (auto& t : inputs) {
    t.set_requires_grad(true);
    t.zero_grad();
  }
  Tensor probe;
  {
    NoGradGuard g;
    probe = f(inputs);
  }
  const Tensor w = random_tensor(probe.shape(), rng);
  auto loss_of = [&](const std::vector<Tensor>& in) { return sum(mul(f(in), w)); };

  backward(loss_of(inputs));
  std::vector<double> analytic, numeric;
  for (auto& t : inputs) {
    const std::vector<double> g = t.has_grad()
                                      ? std::vector<double>(t.grad().begin(), t.grad().end())
                                      : std::vector<double>(t.numel(), 0.0);
    analytic.insert(analytic.end(), g.begin(), g.end());
  }
  NoGradGuard guard;
  for (auto& t : inputs) {
    auto d = t.mutable_data();
    for (std::size_t i = 0; i < d.size(); ++i) {
      const double orig = d[i];
      d[i] = orig + h;
      const double up = loss_of(inputs).item();
      d[i] = orig - h;
      const double down = loss_of(inputs).item();
      d[i] = orig;
      numeric.push_back((up - down) / (2.0 * h));
    }
  }
  double diff = 0.0, na = 0.0, nn = 0.0;
  for (std::size_t i = 0; i < analytic.size(); ++i) {
    diff += (analytic[i] - numeric[i]) * (analytic[i] - numeric[i]);
    na += analytic[i] * analytic[i];
    nn += numeric[i] * numeric[i];
  }
  const double denom = std::max({std::sqrt(na), std::sqrt(nn), 1e-12});
  return {std::sqrt(diff) / denom, analytic.size()};
}

namespace {

Shape small_shape(Rng& rng, int max_c = 4) {
  return {random_int(rng, 1, 3), random_int(rng, 1, max_c), random_int(rng, 1, 5),
          random_int(rng, 1, 5)};
}

Shape even_shape(Rng& rng) {
  return {random_int(rng, 1, 2), random_int(rng, 1, 3), 2 * random_int(rng, 1, 3),
          2 * random_int(rng, 1, 3)};
}

GradCheckResult check_conv(Rng& rng, bool grouped) {
  ConvSpec spec;
  spec.groups = grouped ? random_int(rng, 2, 3) : 1;
  spec.in_channels = spec.groups * random_int(rng, 1, 2);
  spec.out_channels = spec.groups * random_int(rng, 1, 2);
  const int k = random_int(rng, 1, 3);
  const int kw = random_int(rng, 1, 3);
  spec.kernel = {k, kw};
  spec.stride = {random_int(rng, 1, 2), random_int(rng, 1, 2)};
  spec.padding = {random_int(rng, 0, k / 2 + 1) % k, random_int(rng, 0, kw - 1)};
  spec.floor_output = true;
  const Shape x{random_int(rng, 1, 2), spec.in_channels, random_int(rng, k + 1, 6),
                random_int(rng, kw + 1, 6)};
  const bool bias = random_int(rng, 0, 1) == 1;
  std::vector<Tensor> in{random_tensor(x, rng), random_tensor(spec.weight_shape(), rng)};
  if (bias) in.push_back(random_tensor({1, spec.out_channels, 1, 1}, rng));
  return gradcheck(
      [spec, bias](const std::vector<Tensor>& t) {
        return conv2d(t[0], t[1], bias ? t[2] : Tensor(), spec);
      },
      in, rng);
}

GradCheckResult check_block(Rng& rng, GateSpec gate) {
  const int width = 4 * random_int(rng, 1, 2);
  ResidualBlock block(width, gate);
  for (auto* p : {&block.branch.convs[0], &block.branch.convs[1], &block.branch.convs[2]}) {
    p->weight = random_tensor(p->weight.shape(), rng, -0.5, 0.5);
  }
  for (auto& n : block.branch.norms) {
    n.gamma = random_tensor(n.gamma.shape(), rng, 0.5, 1.5);
    n.beta = random_tensor(n.beta.shape(), rng, -0.5, 0.5);
  }
  std::vector<Tensor> in{random_tensor({2, width, random_int(rng, 2, 4), random_int(rng, 2, 4)}, rng)};
  for (auto& n : block.branch.norms) {
    in.push_back(n.gamma);
    in.push_back(n.beta);
  }
  for (auto& c : block.branch.convs) in.push_back(c.weight);
  if (block.gate.alpha.defined() && gate.mode != GateMode::kFixed) {
    block.gate.alpha = random_tensor(block.gate.alpha.shape(), rng);
    in.push_back(block.gate.alpha);
  }
  if (gate.mode == GateMode::kHardSigmoid) {
    block.gate.gate_conv.weight = random_tensor(block.gate.gate_conv.weight.shape(), rng);
    block.gate.gate_conv.bias = random_tensor(block.gate.gate_conv.bias.shape(), rng);
    in.push_back(block.gate.gate_conv.weight);
    in.push_back(block.gate.gate_conv.bias);
  }
  return gradcheck(
      [&block](const std::vector<Tensor>& t) {
        std::size_t i = 1;
        for (auto& n : block.branch.norms) {
          n.gamma = t[i++];
          n.beta = t[i++];
        }
        for (auto& c : block.branch.convs) c.weight = t[i++];
        if (block.gate.learnable() && block.gate.alpha.defined()) block.gate.alpha = t[i++];
        if (block.gate.spec().mode == GateMode::kHardSigmoid) {
          block.gate.gate_conv.weight = t[i++];
          block.gate.gate_conv.bias = t[i++];
        }
        return block.forward(t[0], Mode::kTrain);
      },
      in, rng);
}

}  // namespace

std::vector<GradCase> grad_cases() {
  std::vector<GradCase> cases;
  cases.push_back({"add", [](Rng& rng) {
    const Shape s = small_shape(rng);
    return gradcheck([](const std::vector<Tensor>& t) { return add(t[0], t[1]); },
                     {random_tensor(s, rng), random_tensor(s, rng)}, rng);
  }});
  cases.push_back({"mul", [](Rng& rng) {
    const Shape s = small_shape(rng);
    return gradcheck([](const std::vector<Tensor>& t) { return mul(t[0], t[1]); },
                     {random_tensor(s, rng), random_tensor(s, rng)}, rng);
  }});
  cases.push_back({"scale_channels", [](Rng& rng) {
    const Shape s = small_shape(rng);
    const bool scalar = random_int(rng, 0, 1) == 1;
    const Shape a{1, scalar ? 1 : s.c, 1, 1};
    return gradcheck([](const std::vector<Tensor>& t) { return scale_channels(t[0], t[1]); },
                     {random_tensor(s, rng), random_tensor(a, rng)}, rng);
  }});
  cases.push_back({"relu", [](Rng& rng) {
    Tensor x = random_tensor(small_shape(rng), rng);
    for (double& v : x.mutable_data()) {
      if (std::abs(v) < 1e-3) v += 0.01;  // keep clear of the kink
    }
    return gradcheck([](const std::vector<Tensor>& t) { return relu(t[0]); }, {x}, rng);
  }});
  cases.push_back({"sigmoid", [](Rng& rng) {
    return gradcheck([](const std::vector<Tensor>& t) { return sigmoid(t[0]); },
                     {random_tensor(small_shape(rng), rng, -4.0, 4.0)}, rng);
  }});
  cases.push_back({"maxpool2x2", [](Rng& rng) {
    return gradcheck([](const std::vector<Tensor>& t) { return maxpool2x2(t[0]); },
                     {random_tensor(even_shape(rng), rng)}, rng);
  }});
  cases.push_back({"upsample_nearest2x", [](Rng& rng) {
    return gradcheck([](const std::vector<Tensor>& t) { return upsample_nearest2x(t[0]); },
                     {random_tensor(small_shape(rng), rng)}, rng);
  }});
  cases.push_back({"concat_channels", [](Rng& rng) {
    Shape a = small_shape(rng), b = a;
    b.c = random_int(rng, 1, 4);
    return gradcheck(
        [](const std::vector<Tensor>& t) { return concat_channels({t[0], t[1]}); },
        {random_tensor(a, rng), random_tensor(b, rng)}, rng);
  }});
  cases.push_back({"slice_channels", [](Rng& rng) {
    Shape s = small_shape(rng);
    s.c = random_int(rng, 2, 5);
    const int b = random_int(rng, 0, s.c - 1);
    const int e = random_int(rng, b + 1, s.c);
    return gradcheck(
        [b, e](const std::vector<Tensor>& t) { return slice_channels(t[0], b, e); },
        {random_tensor(s, rng)}, rng);
  }});
  cases.push_back({"sum", [](Rng& rng) {
    return gradcheck([](const std::vector<Tensor>& t) { return sum(t[0]); },
                     {random_tensor(small_shape(rng), rng)}, rng);
  }});
  cases.push_back({"conv2d", [](Rng& rng) { return check_conv(rng, false); }});
  cases.push_back({"conv2d_grouped", [](Rng& rng) { return check_conv(rng, true); }});
  cases.push_back({"batchnorm2d_train", [](Rng& rng) {
    Shape s = small_shape(rng);
    s.n = random_int(rng, 2, 3);
    auto state = std::make_shared<BatchNormState>(BatchNormState::fresh(s.c));
    return gradcheck(
        [state](const std::vector<Tensor>& t) {
          return batchnorm2d(t[0], t[1], t[2], *state, Mode::kTrain);
        },
        {random_tensor(s, rng), random_tensor({1, s.c, 1, 1}, rng, 0.5, 1.5),
         random_tensor({1, s.c, 1, 1}, rng)},
        rng);
  }});
  cases.push_back({"batchnorm2d_eval", [](Rng& rng) {
    const Shape s = small_shape(rng);
    auto state = std::make_shared<BatchNormState>(BatchNormState::fresh(s.c));
    state->running_mean = random_tensor({1, s.c, 1, 1}, rng);
    state->running_var = random_tensor({1, s.c, 1, 1}, rng, 0.5, 2.0);
    return gradcheck(
        [state](const std::vector<Tensor>& t) {
          return batchnorm2d(t[0], t[1], t[2], *state, Mode::kEval);
        },
        {random_tensor(s, rng), random_tensor({1, s.c, 1, 1}, rng, 0.5, 1.5),
         random_tensor({1, s.c, 1, 1}, rng)},
        rng);
  }});
  cases.push_back({"mse_heatmap_loss", [](Rng& rng) {
    const Shape s = small_shape(rng);
    return gradcheck(
        [](const std::vector<Tensor>& t) { return mse_heatmap_loss(t[0], t[1]); },
        {random_tensor(s, rng), random_tensor(s, rng)}, rng);
  }});
  cases.push_back({"residual_block_per_channel", [](Rng& rng) {
    return check_block(rng, {GateMode::kLearnablePerChannel, 0.0});
  }});
  cases.push_back({"residual_block_scalar", [](Rng& rng) {
    return check_block(rng, {GateMode::kLearnableScalar, 0.0});
  }});
  cases.push_back({"residual_block_fixed", [](Rng& rng) {
    return check_block(rng, {GateMode::kFixed, 1.0});
  }});
  cases.push_back({"residual_block_hard_sigmoid", [](Rng& rng) {
    return check_block(rng, {GateMode::kHardSigmoid, 0.0});
  }});
  return cases;
}

std::int64_t enumerate_parameters(const Network& net) {
  std::int64_t n = 0;
  for (const auto& p : net.parameters().params) {
    n += static_cast<std::int64_t>(p.tensor.numel());
  }
  return n;
}

NetworkConfig random_network_config(Rng& rng) {
  static const char* gates[] = {"fixed:1", "fixed:0.5", "learnable_scalar",
                                "learnable_per_channel", "hard_sigmoid"};
  NetworkConfig c;
  c.num_stacks = random_int(rng, 1, 4);
  c.width = 4 * random_int(rng, 1, 40);
  c.keypoints = random_int(rng, 1, 20);
  c.aggregation = static_cast<Aggregation>(random_int(rng, 0, 2));
  c.gate = GateSpec::parse(gates[random_int(rng, 0, 4)]);
  c.input_size = 64 * random_int(rng, 1, 4);
  c.seed = rng();
  return c;
}

}  // namespace sgnet::testing
