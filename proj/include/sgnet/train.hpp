#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "sgnet/augment.hpp"
#include "sgnet/config.hpp"
#include "sgnet/network.hpp"
#include "sgnet/optim.hpp"

namespace sgnet {

struct TrainConfig {
  int epochs = 60;
  int batch_size = 8;
  LrSchedule lr;
  double weight_decay = 0.0;
  bool augment = true;
  AugmentConfig augmentation;
  double pckh_threshold = 0.5;
  std::uint64_t seed = 0;

  void validate() const;
  bool operator==(const TrainConfig& o) const;
};

// Keys: epochs, batch_size, lr_initial, lr_final, lr_drop_epochs,
// weight_decay, augment, rotation_deg, scale_min, scale_max,
// flip_probability, color_jitter, pckh_threshold. The seed is shared with
// the network config and is not read here.
TrainConfig read_train_config(KeyValueFile& kv);
std::string format_train_config(const TrainConfig& cfg);

struct EpochLog {
  int epoch = 0;
  std::vector<double> stack_loss;  // mean over the epoch's batches
  double lr = 0.0;
  double val_pckh = 0.0;  // NaN without a validation split
};

struct TrainLog {
  std::vector<EpochLog> epochs;
  // Columns: epoch,stack,loss,lr,val_pckh (one row per epoch and stack).
  void write_csv(std::ostream& os) const;
};

struct TrainHooks {
  std::function<void(const EpochLog&)> on_epoch;
  // Called after the epoch preceding each lr drop and after the last epoch.
  std::function<void(int epoch, const Network&)> on_checkpoint;
};

// Total loss of one batch: the heatmap loss summed over every stack head.
// `stack_losses` receives each head's value.
Tensor total_loss(const std::vector<Tensor>& outputs, const Tensor& gt,
                  std::vector<double>* stack_losses = nullptr);

// Heatmaps for a batch of samples, (N,K,H,H).
Tensor batch_heatmaps(const std::vector<const Sample*>& samples, int size);

// Throws NumericalError naming the first op that produced a non-finite
// value when the loss is not finite.
TrainLog train(Network& net, std::span<const Sample> train_set,
               std::span<const Sample> val_set, const TrainConfig& cfg,
               const TrainHooks& hooks = {});

}  // namespace sgnet
