#include "sgnet/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <ostream>

#include "sgnet/dataset.hpp"
#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"
#include "sgnet/metrics.hpp"
#include "sgnet/ops.hpp"
#include "sgnet/tape.hpp"

namespace sgnet {

void TrainConfig::validate() const {
  if (epochs < 1) throw ConfigError("epochs must be >= 1");
  if (batch_size < 1) throw ConfigError("batch_size must be >= 1");
  lr.validate();
  if (weight_decay < 0.0) throw ConfigError("weight_decay must be >= 0");
  const auto& a = augmentation;
  if (a.max_rotation_deg < 0.0 || a.max_rotation_deg > 180.0) {
    throw ConfigError("rotation_deg must be in [0, 180]");
  }
  if (!(a.min_scale > 0.0) || a.min_scale > 1.0 || a.max_scale < 1.0) {
    throw ConfigError("scale range must contain 1 and be positive");
  }
  if (a.flip_probability < 0.0 || a.flip_probability > 1.0) {
    throw ConfigError("flip_probability must be in [0, 1]");
  }
  if (a.color_jitter < 0.0 || a.color_jitter >= 1.0) {
    throw ConfigError("color_jitter must be in [0, 1)");
  }
  if (!(pckh_threshold > 0.0)) throw ConfigError("pckh_threshold must be > 0");
}

bool TrainConfig::operator==(const TrainConfig& o) const {
  const auto& a = augmentation;
  const auto& b = o.augmentation;
  return epochs == o.epochs && batch_size == o.batch_size &&
         lr.initial == o.lr.initial && lr.final == o.lr.final &&
         lr.drop_epochs == o.lr.drop_epochs &&
         weight_decay == o.weight_decay && augment == o.augment &&
         a.max_rotation_deg == b.max_rotation_deg &&
         a.min_scale == b.min_scale && a.max_scale == b.max_scale &&
         a.flip_probability == b.flip_probability &&
         a.color_jitter == b.color_jitter && a.flip_pairs == b.flip_pairs &&
         pckh_threshold == o.pckh_threshold && seed == o.seed;
}

TrainConfig read_train_config(KeyValueFile& kv) {
  TrainConfig c;
  c.epochs = kv.take_int("epochs", c.epochs);
  c.batch_size = kv.take_int("batch_size", c.batch_size);
  c.lr.initial = kv.take_double("lr_initial", c.lr.initial);
  c.lr.final = kv.take_double("lr_final", c.lr.final);
  c.lr.drop_epochs = kv.take_int_list("lr_drop_epochs", c.lr.drop_epochs);
  c.weight_decay = kv.take_double("weight_decay", c.weight_decay);
  c.augment = kv.take_int("augment", c.augment ? 1 : 0) != 0;
  auto& a = c.augmentation;
  a.max_rotation_deg = kv.take_double("rotation_deg", a.max_rotation_deg);
  a.min_scale = kv.take_double("scale_min", a.min_scale);
  a.max_scale = kv.take_double("scale_max", a.max_scale);
  a.flip_probability = kv.take_double("flip_probability", a.flip_probability);
  a.color_jitter = kv.take_double("color_jitter", a.color_jitter);
  c.pckh_threshold = kv.take_double("pckh_threshold", c.pckh_threshold);
  return c;
}

std::string format_train_config(const TrainConfig& c) {
  std::string out;
  auto line = [&](const char* k, const std::string& v) {
    out += k;
    out += " = ";
    out += v;
    out += '\n';
  };
  std::string drops;
  for (std::size_t i = 0; i < c.lr.drop_epochs.size(); ++i) {
    if (i) drops += ',';
    drops += std::to_string(c.lr.drop_epochs[i]);
  }
  line("epochs", std::to_string(c.epochs));
  line("batch_size", std::to_string(c.batch_size));
  line("lr_initial", fmt_double(c.lr.initial));
  line("lr_final", fmt_double(c.lr.final));
  line("lr_drop_epochs", drops);
  line("weight_decay", fmt_double(c.weight_decay));
  line("augment", c.augment ? "1" : "0");
  line("rotation_deg", fmt_double(c.augmentation.max_rotation_deg));
  line("scale_min", fmt_double(c.augmentation.min_scale));
  line("scale_max", fmt_double(c.augmentation.max_scale));
  line("flip_probability", fmt_double(c.augmentation.flip_probability));
  line("color_jitter", fmt_double(c.augmentation.color_jitter));
  line("pckh_threshold", fmt_double(c.pckh_threshold));
  return out;
}

void TrainLog::write_csv(std::ostream& os) const {
  os << "epoch,stack,loss,lr,val_pckh\n";
  for (const auto& e : epochs) {
    for (std::size_t s = 0; s < e.stack_loss.size(); ++s) {
      os << e.epoch << ',' << s << ',' << fmt_double(e.stack_loss[s]) << ','
         << fmt_double(e.lr) << ',' << fmt_double(e.val_pckh) << '\n';
    }
  }
}

Tensor total_loss(const std::vector<Tensor>& outputs, const Tensor& gt,
                  std::vector<double>* stack_losses) {
  if (outputs.empty()) throw UsageError("total_loss: no stack outputs");
  Tensor total;
  for (const auto& o : outputs) {
    Tensor l = mse_heatmap_loss(o, gt);
    if (stack_losses) stack_losses->push_back(l.item());
    total = total.defined() ? add(total, l) : l;
  }
  return total;
}

Tensor batch_heatmaps(const std::vector<const Sample*>& samples, int size) {
  const int K = static_cast<int>(samples.front()->keypoints.size());
  Tensor out(Shape{static_cast<int>(samples.size()), K, size, size});
  auto d = out.mutable_data();
  const std::size_t n = static_cast<std::size_t>(K) * size * size;
  for (std::size_t i = 0; i < samples.size(); ++i) {
    const Tensor h = render_gt_heatmaps(samples[i]->keypoints, size);
    std::copy(h.data().begin(), h.data().end(), d.begin() + i * n);
  }
  return out;
}

TrainLog train(Network& net, std::span<const Sample> train_set,
               std::span<const Sample> val_set, const TrainConfig& cfg,
               const TrainHooks& hooks) {
  cfg.validate();
  if (train_set.empty()) throw UsageError("train: empty training set");
  const int K = net.config().keypoints;
  const int hm = net.config().heatmap_size();
  for (const auto& s : train_set) {
    if (static_cast<int>(s.keypoints.size()) != K ||
        s.image.shape() != Shape{1, 3, net.config().input_size,
                                 net.config().input_size}) {
      throw UsageError("train: dataset does not match the network config");
    }
  }

  std::vector<Tensor> params;
  for (const auto& p : net.parameters().params) params.push_back(p.tensor);
  RmsProp opt(params);
  TrainLog log;
  const int n = static_cast<int>(train_set.size());
  std::vector<int> order(n);

  for (int epoch = 0; epoch < cfg.epochs; ++epoch) {
    const double lr = cfg.lr.at(epoch);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch),
                                           0x5348554646ULL}));
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(order[i], order[pick(shuffle_rng)]);
    }

    EpochLog entry;
    entry.epoch = epoch;
    entry.lr = lr;
    entry.stack_loss.assign(net.config().num_stacks, 0.0);
    int batches = 0;
    for (int start = 0; start < n; start += cfg.batch_size) {
      std::vector<Sample> prepared;
      for (int b = start; b < std::min(n, start + cfg.batch_size); ++b) {
        const int idx = order[b];
        if (cfg.augment) {
          Rng rng(derive_seed(cfg.seed, {static_cast<std::uint64_t>(epoch),
                                         static_cast<std::uint64_t>(idx)}));
          prepared.push_back(augment(train_set[idx], rng, cfg.augmentation, hm));
        } else {
          prepared.push_back(train_set[idx]);
        }
      }
      std::vector<const Sample*> ptrs;
      for (const auto& s : prepared) ptrs.push_back(&s);

      std::vector<double> per_stack;
      const auto outputs = net.forward(stack_images(ptrs), Mode::kTrain);
      Tensor loss = total_loss(outputs, batch_heatmaps(ptrs, hm), &per_stack);
      if (!std::isfinite(loss.item())) {
        auto& tape = Tape::current();
        const auto op = tape.first_nonfinite_op();
        tape.clear();
        throw NumericalError("non-finite loss at epoch " + std::to_string(epoch) +
                             ", batch " + std::to_string(batches) +
                             "; first non-finite op: " + op.value_or("<input>"));
      }
      net.zero_grad();
      backward(loss);
      if (cfg.weight_decay > 0.0) {
        for (auto& p : params) {
          auto g = p.grad_buffer();
          const auto w = p.data();
          for (std::size_t i = 0; i < g.size(); ++i) g[i] += cfg.weight_decay * w[i];
        }
      }
      opt.step(lr);
      for (std::size_t s = 0; s < per_stack.size(); ++s) {
        entry.stack_loss[s] += per_stack[s];
      }
      ++batches;
    }
    for (double& l : entry.stack_loss) l /= batches;
    entry.val_pckh = val_set.empty()
                         ? std::numeric_limits<double>::quiet_NaN()
                         : evaluate(net, val_set, cfg.pckh_threshold).mean;
    log.epochs.push_back(entry);
    if (hooks.on_epoch) hooks.on_epoch(entry);

    const bool last = epoch + 1 == cfg.epochs;
    const bool before_drop =
        std::find(cfg.lr.drop_epochs.begin(), cfg.lr.drop_epochs.end(),
                  epoch + 1) != cfg.lr.drop_epochs.end();
    if (hooks.on_checkpoint && (last || before_drop)) {
      hooks.on_checkpoint(epoch, net);
    }
  }
  return log;
}

}  // namespace sgnet
