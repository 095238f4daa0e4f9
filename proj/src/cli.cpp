#include "sgnet/cli.hpp"

#include <algorithm>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>

#include "CLI11.hpp"
#include "sgnet/analysis.hpp"
#include "sgnet/checkpoint.hpp"
#include "sgnet/costs.hpp"
#include "sgnet/dataset.hpp"
#include "sgnet/errors.hpp"
#include "sgnet/format.hpp"
#include "sgnet/init.hpp"
#include "sgnet/manifest.hpp"
#include "sgnet/metrics.hpp"
#include "sgnet/parallel.hpp"
#include "sgnet/synthetic.hpp"
#include "sgnet/train.hpp"

namespace fs = std::filesystem;

namespace sgnet {
namespace {

struct Common {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  bool overwrite = false;
};

void add_common(CLI::App* cmd, Common& c, bool config_required) {
  auto* opt = cmd->add_option("--config", c.config, "Config file (key = value)");
  if (config_required) opt->required();
  cmd->add_option("--out", c.out, "Output directory")->required();
  cmd->add_option("--seed", c.seed, "Override the config seed");
  cmd->add_flag("--overwrite", c.overwrite, "Replace an existing output directory");
}

void prepare_out(const fs::path& out, bool overwrite) {
  std::error_code ec;
  if (fs::exists(out, ec)) {
    if (!fs::is_directory(out)) throw UsageError(out.string() + " is not a directory");
    if (!fs::is_empty(out)) {
      if (!overwrite) {
        throw UsageError(out.string() + " is not empty; pass --overwrite to replace it");
      }
      for (const auto& e : fs::directory_iterator(out)) fs::remove_all(e.path());
    }
  }
  fs::create_directories(out, ec);
  if (ec) throw IoError("cannot create " + out.string() + ": " + ec.message());
}

std::ofstream open_out(const fs::path& p) {
  std::ofstream os(p, std::ios::binary);
  if (!os) throw IoError("cannot write " + p.string());
  return os;
}

RunManifest start_manifest(const std::string& command,
                           const std::vector<std::string>& args,
                           const Common& c) {
  RunManifest m;
  m.command = command;
  m.arguments = args;
  if (!c.config.empty()) m.config_paths.push_back(fs::absolute(c.config).string());
  m.out_dir = fs::absolute(c.out).string();
  m.started_at = utc_timestamp();
  m.version = version_string();
  m.threads = thread_count();
  return m;
}

void finish_manifest(RunManifest& m, const fs::path& out) {
  m.finished_at = utc_timestamp();
  m.write(out / "manifest.json");
}

SyntheticSceneSpec read_scene(KeyValueFile& kv) {
  SyntheticSceneSpec s;
  s.num_samples = kv.take_int("num_samples", s.num_samples);
  s.image_size = kv.take_int("image_size", s.image_size);
  s.keypoints = kv.take_int("keypoints", s.keypoints);
  s.noise = kv.take_double("noise", s.noise);
  s.seed = kv.take_u64("seed", s.seed);
  return s;
}

fs::path resolve(const fs::path& base, const std::string& p) {
  const fs::path path(p);
  return path.is_absolute() ? path : fs::absolute(base / path);
}

int cmd_generate(const Common& c, RunManifest& m, std::ostream& out) {
  SyntheticSceneSpec spec;
  if (!c.config.empty()) {
    auto kv = KeyValueFile::load(c.config);
    spec = read_scene(kv);
    kv.require_all_consumed();
  }
  if (c.seed) spec.seed = *c.seed;
  spec.validate();
  m.seed = spec.seed;
  std::vector<Sample> samples(spec.num_samples);
  parallel_for(spec.num_samples, [&](int i) { samples[i] = generate_sample(spec, i); });
  write_dataset(c.out, samples);
  out << "wrote " << samples.size() << " samples to " << c.out << '\n';
  return kExitOk;
}

int cmd_train(const Common& c, RunManifest& m, std::ostream& out) {
  auto kv = KeyValueFile::load(c.config);
  NetworkConfig net_cfg = read_network_config(kv);
  TrainConfig tc = read_train_config(kv);
  const fs::path base = fs::path(c.config).parent_path();
  const std::string train_path = kv.take_string("train_data", "");
  const std::string val_path = kv.take_string("val_data", "");
  kv.require_all_consumed();
  if (train_path.empty()) throw UsageError(c.config + ": train_data is required");
  if (c.seed) net_cfg.seed = *c.seed;
  tc.seed = net_cfg.seed;
  m.seed = net_cfg.seed;

  const auto train_set = read_dataset(resolve(base, train_path));
  std::vector<Sample> val_set;
  if (!val_path.empty()) val_set = read_dataset(resolve(base, val_path));
  if (train_set.empty()) throw UsageError("training set is empty");
  if (net_cfg.keypoints != static_cast<int>(train_set.front().keypoints.size())) {
    throw UsageError("config keypoints=" + std::to_string(net_cfg.keypoints) +
                     " but the dataset has " +
                     std::to_string(train_set.front().keypoints.size()));
  }
  tc.augmentation.flip_pairs = flip_pairs(net_cfg.keypoints);

  const fs::path dir(c.out);
  {
    auto os = open_out(dir / "config.cfg");
    os << format_network_config(net_cfg) << format_train_config(tc)
       << "train_data = " << resolve(base, train_path).string() << '\n';
    if (!val_path.empty()) os << "val_data = " << resolve(base, val_path).string() << '\n';
  }

  Network net(net_cfg);
  init_network(net, net_cfg.seed);
  TrainHooks hooks;
  hooks.on_epoch = [&](const EpochLog& e) {
    out << "epoch " << e.epoch << " lr " << fmt_double(e.lr);
    for (std::size_t s = 0; s < e.stack_loss.size(); ++s) {
      out << " loss" << s << ' ' << fmt_double(e.stack_loss[s]);
    }
    out << " val_pckh " << fmt_double(e.val_pckh) << std::endl;
  };
  hooks.on_checkpoint = [&](int epoch, const Network& n) {
    char name[32];
    std::snprintf(name, sizeof name, "epoch_%04d", epoch);
    save_checkpoint(dir / "checkpoints" / name, n);
  };
  TrainLog log;
  try {
    log = train(net, train_set, val_set, tc, hooks);
  } catch (const NumericalError&) {
    m.status = "numerical_failure";
    finish_manifest(m, dir);
    throw;
  }
  save_checkpoint(dir / "checkpoint", net);
  {
    auto os = open_out(dir / "train_log.csv");
    log.write_csv(os);
  }
  {
    auto os = open_out(dir / "alpha.csv");
    write_alpha_csv(os, alpha_snapshot(net));
  }
  out << "final val_pckh " << fmt_double(log.epochs.back().val_pckh) << '\n';
  return kExitOk;
}

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  double tau = kPckhThreshold;
  bool no_offset = false;
};

int cmd_eval(const Common& c, const EvalArgs& a, RunManifest& m, std::ostream& out) {
  Network net = load_checkpoint(a.checkpoint);
  m.seed = net.config().seed;
  m.config_paths.push_back(fs::absolute(fs::path(a.checkpoint) / "config.cfg").string());
  const auto samples = read_dataset(a.data);
  if (samples.empty()) throw UsageError(a.data + " holds no samples");
  DecodeOptions opt;
  opt.quarter_offset = !a.no_offset;
  const MetricReport r = evaluate(net, samples, a.tau, 16, opt);
  auto os = open_out(fs::path(c.out) / "metrics.csv");
  write_metric_csv(os, r);
  out << "pckh " << fmt_double(r.mean) << '\n';
  return kExitOk;
}

NetworkConfig load_net_config(const Common& c) {
  auto kv = KeyValueFile::load(c.config);
  NetworkConfig cfg = read_network_config(kv);
  kv.require_all_consumed();
  if (c.seed) cfg.seed = *c.seed;
  return cfg;
}

int cmd_count(const Common& c, std::optional<int> input_size, int batch,
              RunManifest& m, std::ostream& out) {
  const NetworkConfig cfg = load_net_config(c);
  m.seed = cfg.seed;
  const CostReport r = count_costs(cfg, batch, input_size);
  {
    auto os = open_out(fs::path(c.out) / "costs.csv");
    write_cost_csv(os, r);
  }
  const std::vector<CostRow> rows{{r, std::nullopt}};
  const std::string table = format_cost_table(rows);
  auto os = open_out(fs::path(c.out) / "costs.txt");
  os << table;
  out << table;
  return kExitOk;
}

int cmd_inspect_alpha(const Common& c, const std::string& checkpoint,
                      const std::string& data, int probe, RunManifest& m,
                      std::ostream& out) {
  Network net = load_checkpoint(checkpoint);
  m.seed = net.config().seed;
  m.config_paths.push_back(fs::absolute(fs::path(checkpoint) / "config.cfg").string());
  const fs::path dir(c.out);
  const auto alphas = alpha_snapshot(net);
  {
    auto os = open_out(dir / "alpha.csv");
    write_alpha_csv(os, alphas);
  }
  const auto values = all_alphas(alphas);
  if (!values.empty()) {
    const std::vector<Histogram> h{alpha_histogram(alphas)};
    auto os = open_out(dir / "alpha_histogram.csv");
    write_histogram_csv(os, h);
    out << "alphas " << values.size() << " within_0.1 "
        << fmt_double(fraction_within(values, 0.1)) << '\n';
  } else {
    out << "no alpha gates in this network\n";
  }
  if (!data.empty()) {
    const auto samples = read_dataset(data);
    if (samples.empty()) throw UsageError(data + " holds no samples");
    std::vector<const Sample*> batch;
    for (int i = 0; i < std::min<int>(probe, samples.size()); ++i) batch.push_back(&samples[i]);
    const auto stats = feature_stats(net, stack_images(batch));
    auto os = open_out(dir / "feature_stats.csv");
    write_histogram_csv(os, flatten(stats));
    for (const auto& s : stats) {
      out << s.where.id() << " skip_pre_within " << fmt_double(s.pre_within)
          << " skip_post_within " << fmt_double(s.post_within) << '\n';
    }
  }
  return kExitOk;
}

int cmd_sweep(const Common& c, const std::vector<int>& widths,
              const std::vector<int>& stacks, int input_size, RunManifest& m,
              std::ostream& out) {
  NetworkConfig base;
  base.keypoints = 16;
  if (!c.config.empty()) base = load_net_config(c);
  m.seed = base.seed;
  const auto rows = sweep_costs(base, widths, stacks, input_size);
  const std::string table = format_cost_table(rows);
  {
    auto os = open_out(fs::path(c.out) / "sweep.txt");
    os << table;
  }
  auto os = open_out(fs::path(c.out) / "sweep.csv");
  os << "params,stacks,width,flops_mac1,flops_mac2\n";
  for (const auto& r : rows) {
    os << r.report.total_params() << ',' << r.report.config.num_stacks << ','
       << r.report.config.width << ',' << r.report.flops(FlopConvention::kMacIsOne)
       << ',' << r.report.flops(FlopConvention::kMacIsTwo) << '\n';
  }
  out << table;
  return kExitOk;
}

}  // namespace

int run_cli(std::vector<std::string> args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Soft-gated skip-connection keypoint networks", "sgnet"};
  app.require_subcommand(1);
  app.set_version_flag("--version", version_string());

  Common gen, tr, ev, cnt, ins, sw;
  auto* g = app.add_subcommand("generate", "Write a synthetic stick-figure dataset");
  add_common(g, gen, false);

  auto* t = app.add_subcommand("train", "Train a network from a run config");
  add_common(t, tr, true);

  EvalArgs eval_args;
  auto* e = app.add_subcommand("eval", "PCKh of a checkpoint on a dataset");
  add_common(e, ev, false);
  e->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint directory")->required();
  e->add_option("--data", eval_args.data, "Dataset directory")->required();
  e->add_option("--tau", eval_args.tau, "PCKh threshold");
  e->add_flag("--no-offset", eval_args.no_offset, "Plain argmax decoding");

  std::optional<int> count_input;
  int count_batch = 1;
  auto* k = app.add_subcommand("count", "Parameter and FLOP accounting");
  add_common(k, cnt, true);
  k->add_option("--input-size", count_input, "Input side in pixels");
  k->add_option("--batch", count_batch, "Batch size for FLOPs");

  std::string inspect_ckpt, inspect_data;
  int probe = 16;
  auto* a = app.add_subcommand("inspect-alpha", "Export gate alphas and feature histograms");
  add_common(a, ins, false);
  a->add_option("--checkpoint", inspect_ckpt, "Checkpoint directory")->required();
  a->add_option("--data", inspect_data, "Dataset for feature statistics");
  a->add_option("--probe", probe, "Probe batch size")->check(CLI::PositiveNumber);

  std::vector<int> widths{64, 80, 96, 112, 128, 144};
  std::vector<int> stacks{2};
  int sweep_input = 256;
  auto* s = app.add_subcommand("sweep", "Cost table over a (width, stacks) grid");
  add_common(s, sw, false);
  s->add_option("--widths", widths, "Widths")->delimiter(',');
  s->add_option("--stacks", stacks, "Stack counts")->delimiter(',');
  s->add_option("--input-size", sweep_input, "Input side in pixels");

  const std::vector<std::string> original = args;
  std::reverse(args.begin(), args.end());
  try {
    app.parse(args);
  } catch (const CLI::ParseError& ex) {
    std::ostringstream so, se;
    const int code = app.exit(ex, so, se);
    out << so.str();
    err << se.str();
    return code == 0 ? kExitOk : kExitUsage;
  }

  CLI::App* cmd = app.get_subcommands().front();
  const std::string name = cmd->get_name();
  Common& c = name == "generate" ? gen
              : name == "train"  ? tr
              : name == "eval"   ? ev
              : name == "count"  ? cnt
              : name == "inspect-alpha" ? ins
                                        : sw;
  try {
    prepare_out(c.out, c.overwrite);
    RunManifest m = start_manifest(name, original, c);
    int code = kExitOk;
    if (name == "generate") code = cmd_generate(c, m, out);
    else if (name == "train") code = cmd_train(c, m, out);
    else if (name == "eval") code = cmd_eval(c, eval_args, m, out);
    else if (name == "count") code = cmd_count(c, count_input, count_batch, m, out);
    else if (name == "inspect-alpha") code = cmd_inspect_alpha(c, inspect_ckpt, inspect_data, probe, m, out);
    else code = cmd_sweep(c, widths, stacks, sweep_input, m, out);
    finish_manifest(m, c.out);
    return code;
  } catch (const NumericalError& ex) {
    err << "sgnet " << name << ": numerical failure: " << ex.what() << '\n';
    return kExitNumerical;
  } catch (const std::exception& ex) {
    err << "sgnet " << name << ": " << ex.what() << '\n';
    return kExitUsage;
  }
}

}  // namespace sgnet
