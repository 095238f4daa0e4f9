// Acceptance suite: one PASS/FAIL line per criterion.
//   acceptance [--group fast|training|all] [--artifacts DIR]
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>

#include "sgnet/analysis.hpp"
#include "sgnet/cli.hpp"
#include "sgnet/costs.hpp"
#include "sgnet/dataset.hpp"
#include "sgnet/format.hpp"
#include "sgnet/init.hpp"
#include "sgnet/manifest.hpp"
#include "sgnet/metrics.hpp"
#include "sgnet/ops.hpp"
#include "sgnet/synthetic.hpp"
#include "sgnet/tape.hpp"
#include "sgnet/train.hpp"
#include "testing.hpp"

namespace fs = std::filesystem;
using namespace sgnet;
using testing::random_int;
using testing::random_tensor;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  int id;
  std::string name;
  std::string group;
  std::function<Outcome()> run;
};

fs::path g_artifacts = "acceptance_artifacts";

std::string fixed(double v, int digits = 4) {
  std::ostringstream os;
  os.setf(std::ios::fixed);
  os.precision(digits);
  os << v;
  return os.str();
}

std::string sci(double v) {
  std::ostringstream os;
  os.setf(std::ios::scientific);
  os.precision(2);
  os << v;
  return os.str();
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

// ---------------------------------------------------------------- fast group

Outcome gradient_soundness() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(20240601);
  double worst = 0.0;
  std::string worst_name;
  int instances = 0;
  const auto cases = testing::grad_cases();
  bool ok = true;
  for (const auto& c : cases) {
    for (int trial = 0; trial < 20; ++trial) {
      const auto r = c.run(rng);
      ++instances;
      if (!(r.rel_error < 1e-4)) ok = false;
      if (r.rel_error > worst || std::isnan(r.rel_error)) {
        worst = r.rel_error;
        worst_name = c.name;
      }
    }
  }
  const double secs = seconds_since(t0);
  ok = ok && secs < 300.0;
  return {ok, std::to_string(cases.size()) + " ops x 20 random shapes = " +
                  std::to_string(instances) + " checks, max rel err " + sci(worst) +
                  " (" + worst_name + "), " + fixed(secs, 1) + " s"};
}

Outcome gate_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  Rng rng(7);
  int blocks = 0, mismatched = 0;
  for (auto agg : {Aggregation::kSum, Aggregation::kConcatConv, Aggregation::kConcatGrouped}) {
    for (const char* gate : {"learnable_per_channel", "learnable_scalar"}) {
      for (auto mode : {Mode::kTrain, Mode::kEval}) {
        NetworkConfig c;
        c.num_stacks = 2;
        c.width = 16;
        c.keypoints = 4;
        c.aggregation = agg;
        c.gate = GateSpec::parse(gate);
        Network net(c);
        init_network(net, rng());
        ForwardTrace trace;
        trace.capture_blocks = true;
        NoGradGuard g;
        net.forward(random_tensor({2, 3, 64, 64}, rng, 0.0, 1.0), mode, &trace);
        for (const auto& [where, bt] : trace.blocks) {
          ++blocks;
          const bool same = bt.out.shape() == bt.branch.shape() &&
                            std::memcmp(bt.out.data().data(), bt.branch.data().data(),
                                        bt.out.numel() * sizeof(double)) == 0;
          mismatched += !same;
        }
      }
    }
  }
  return {mismatched == 0 && blocks > 0,
          std::to_string(blocks) + " blocks over 12 configs, " + std::to_string(mismatched) +
              " not bit-identical, " + fixed(seconds_since(t0), 1) + " s"};
}

Outcome loss_oracle() {
  Rng rng(3);
  double worst = 0.0;
  for (int i = 0; i < 100; ++i) {
    const Shape s{random_int(rng, 1, 4), random_int(rng, 1, 16), random_int(rng, 1, 16),
                  random_int(rng, 1, 16)};
    const Tensor p = random_tensor(s, rng, -1.0, 2.0), g = random_tensor(s, rng, 0.0, 1.0);
    double naive = 0.0;
    for (int n = 0; n < s.n; ++n) {
      for (int k = 0; k < s.c; ++k) {
        for (int y = 0; y < s.h; ++y) {
          for (int x = 0; x < s.w; ++x) {
            const double d = p.at(n, k, y, x) - g.at(n, k, y, x);
            naive += d * d;
          }
        }
      }
    }
    naive /= static_cast<double>(s.n) * s.c;
    worst = std::max(worst, std::abs(mse_heatmap_loss(p, g).item() - naive));
  }
  return {worst <= 1e-12, "100 instances, max |loss - oracle| = " + sci(worst)};
}

Outcome cost_accounting() {
  Rng rng(4);
  int exact = 0;
  for (int i = 0; i < 10; ++i) {
    const NetworkConfig c = testing::random_network_config(rng);
    const Network net(c);
    exact += count_costs(c).total_params() == testing::enumerate_parameters(net);
  }
  NetworkConfig a;
  a.num_stacks = 2;
  a.width = 128;
  a.keypoints = 16;
  a.input_size = 256;
  NetworkConfig b = a;
  b.num_stacks = 4;
  b.width = 144;
  const auto ra = count_costs(a), rb = count_costs(b);
  const double da = (ra.total_params() - 3.4e6) / 3.4e6;
  const double db = (rb.total_params() - 8.5e6) / 8.5e6;
  const bool ok = exact == 10 && std::abs(da) <= 0.05 && std::abs(db) <= 0.05;
  return {ok, std::to_string(exact) + "/10 exact; (2,128): " + std::to_string(ra.total_params()) +
                  " (" + fixed(100 * da, 2) + "% vs 3.4M), (4,144): " +
                  std::to_string(rb.total_params()) + " (" + fixed(100 * db, 2) +
                  "% vs 8.5M); FLOPs (4,144) @256px: " +
                  fixed(rb.flops(FlopConvention::kMacIsOne) / 1e9, 2) + "G MAC=1, " +
                  fixed(rb.flops(FlopConvention::kMacIsTwo) / 1e9, 2) + "G MAC=2"};
}

Outcome pckh_oracle() {
  Rng rng(5);
  int matched = 0;
  for (int t = 0; t < 100; ++t) {
    const int n = random_int(rng, 1, 10), k = random_int(rng, 1, 16);
    const double tau = uniform(rng, 0.05, 1.0);
    std::vector<KeypointSet> p(n), g(n);
    std::vector<double> norm(n);
    for (int i = 0; i < n; ++i) {
      norm[i] = uniform(rng, 0.5, 5.0);
      for (int j = 0; j < k; ++j) {
        const Keypoint gt{uniform(rng, 0, 64), uniform(rng, 0, 64), uniform01(rng) < 0.85};
        Keypoint pr{gt.x + uniform(rng, -4, 4), gt.y + uniform(rng, -4, 4), true};
        if (t % 10 == 0 && j == 0) {
          // Exactly on the boundary: a 3-4-5 triangle scaled to tau*norm.
          norm[i] = 10.0;
          pr = {gt.x, gt.y, true};
          g[i].push_back({0.0, 0.0, true});
          p[i].push_back({3.0, 4.0, true});
          continue;
        }
        g[i].push_back(gt);
        p[i].push_back(pr);
      }
    }
    const double t_eff = (t % 10 == 0) ? 0.5 : tau;
    const auto rep = pckh(p, g, norm, t_eff);
    bool same = true;
    int vis_all = 0, cor_all = 0;
    for (int j = 0; j < k; ++j) {
      int vis = 0, cor = 0;
      for (int i = 0; i < n; ++i) {
        if (!g[i][j].visible) continue;
        ++vis;
        const double d = std::sqrt((p[i][j].x - g[i][j].x) * (p[i][j].x - g[i][j].x) +
                                   (p[i][j].y - g[i][j].y) * (p[i][j].y - g[i][j].y));
        cor += d <= t_eff * norm[i];
      }
      same &= rep.visible[j] == vis && rep.correct[j] == cor;
      vis_all += vis;
      cor_all += cor;
    }
    same &= rep.mean == (vis_all ? static_cast<double>(cor_all) / vis_all : 0.0);
    matched += same;
  }
  // The tie rule on its own.
  const std::vector<KeypointSet> g{{{0.0, 0.0, true}}}, on{{{3.0, 4.0, true}}},
      off{{{3.0, std::nextafter(4.0, 5.0), true}}};
  const bool tie = pckh(on, g, std::vector<double>{10.0}, 0.5).mean == 1.0 &&
                   pckh(off, g, std::vector<double>{10.0}, 0.5).mean == 0.0;
  return {matched == 100 && tie, std::to_string(matched) + "/100 cases exact; boundary tie " +
                                     std::string(tie ? "counted correct" : "WRONG")};
}

Outcome aggregation_checks() {
  Rng rng(9);
  int configs = 0, bad_shapes = 0;
  for (auto agg : {Aggregation::kSum, Aggregation::kConcatConv, Aggregation::kConcatGrouped}) {
    for (int width : {4, 8, 12}) {
      for (int stacks : {1, 2}) {
        for (int input : {64, 128}) {
          NetworkConfig c;
          c.num_stacks = stacks;
          c.width = width;
          c.keypoints = 1 + (width % 5);
          c.aggregation = agg;
          c.input_size = input;
          Network net(c);
          init_network(net, rng());
          ForwardTrace trace;
          NoGradGuard g;
          const auto out = net.forward(random_tensor({2, 3, input, input}, rng, 0, 1), Mode::kTrain, &trace);
          ++configs;
          bool ok = out.size() == static_cast<std::size_t>(stacks);
          for (const auto& h : out) ok &= h.shape() == Shape{2, c.keypoints, input / 4, input / 4};
          for (const auto& s : trace.stacks) {
            for (int i = 0; i < NetworkConfig::kLevels; ++i) {
              ok &= s.encoder_out[i] == s.merge_in[i] && s.encoder_out[i].c == width;
            }
          }
          bad_shapes += !ok;
        }
      }
    }
  }
  int separation_trials = 0, leaks = 0;
  for (int width : {4, 8, 16, 32}) {
    for (int trial = 0; trial < 5; ++trial) {
      FeatureMerge m(Aggregation::kConcatGrouped, width);
      m.conv.weight = random_tensor(m.conv.weight.shape(), rng);
      const Shape s{2, width, 8, 8};
      const Tensor e = random_tensor(s, rng), d = random_tensor(s, rng);
      const Tensor base = m.pre_activation(e, d);
      const Tensor enc_moved = m.pre_activation(random_tensor(s, rng), d);
      const Tensor dec_moved = m.pre_activation(e, random_tensor(s, rng));
      const int half = width / 2;
      for (int n = 0; n < 2; ++n) {
        for (int ch = 0; ch < width; ++ch) {
          for (int i = 0; i < 64; ++i) {
            const std::size_t o = offset(s, n, ch, 0, 0) + i;
            if (ch < half) leaks += base.data()[o] != dec_moved.data()[o];
            else leaks += base.data()[o] != enc_moved.data()[o];
          }
        }
      }
      ++separation_trials;
    }
  }
  return {bad_shapes == 0 && leaks == 0,
          std::to_string(configs) + " configs across sum/concat_conv/concat_grouped, " +
              std::to_string(bad_shapes) + " shape failures; grouped separation " +
              std::to_string(separation_trials) + " trials, " + std::to_string(leaks) +
              " cross-group changes"};
}

std::map<std::string, std::string> tree(const fs::path& dir) {
  std::map<std::string, std::string> out;
  for (const auto& e : fs::recursive_directory_iterator(dir)) {
    if (!e.is_regular_file() || e.path().filename() == "manifest.json") continue;
    std::ifstream is(e.path(), std::ios::binary);
    std::ostringstream ss;
    ss << is.rdbuf();
    out[fs::relative(e.path(), dir).string()] = ss.str();
  }
  return out;
}

Outcome reproducibility() {
  setenv("SGNET_THREADS", "1", 1);
  const fs::path root = g_artifacts / "reproducibility";
  fs::remove_all(root);
  fs::create_directories(root);
  std::ofstream(root / "scene.cfg") << "num_samples = 32\nseed = 11\n";
  std::ofstream(root / "val.cfg") << "num_samples = 16\nseed = 12\n";
  std::ofstream(root / "run.cfg")
      << "num_stacks = 2\nwidth = 16\nkeypoints = 4\nseed = 5\nepochs = 3\nbatch_size = 8\n"
         "lr_initial = 2.5e-4\nlr_final = 1e-5\nlr_drop_epochs = 1,2\n"
         "train_data = train\nval_data = val\n";
  std::ostringstream sink;
  auto run = [&](std::vector<std::string> args) { return run_cli(std::move(args), sink, sink); };
  bool ok = run({"generate", "--config", (root / "scene.cfg").string(), "--out", (root / "train").string()}) == 0 &&
            run({"generate", "--config", (root / "val.cfg").string(), "--out", (root / "val").string()}) == 0;
  ok = ok && run({"train", "--config", (root / "run.cfg").string(), "--out", (root / "a").string()}) == 0;
  ok = ok && run({"train", "--config", (root / "run.cfg").string(), "--out", (root / "b").string()}) == 0;
  if (!ok) return {false, "CLI runs failed: " + sink.str()};
  auto ma = RunManifest::read(root / "a" / "manifest.json");
  auto mb = RunManifest::read(root / "b" / "manifest.json");
  const bool same_manifest = ma.config_paths == mb.config_paths && ma.seed == mb.seed &&
                             ma.command == mb.command && ma.version == mb.version &&
                             ma.threads == 1 && mb.threads == 1;
  const auto ta = tree(root / "a"), tb = tree(root / "b");
  std::size_t bytes = 0;
  for (const auto& [k, v] : ta) bytes += v.size();
  const bool same_files = ta == tb && ta.count("train_log.csv") && ta.count("checkpoint/weights.sgt");
  return {same_manifest && same_files,
          std::to_string(ta.size()) + " files (" + std::to_string(bytes) +
              " bytes: log, checkpoints, alphas) " + (same_files ? "byte-identical" : "DIFFER") +
              "; manifests " + (same_manifest ? "match" : "differ") + " apart from timestamps"};
}

// ------------------------------------------------------------ training group

struct DeskRun {
  std::string gate;
  std::uint64_t seed = 0;
  double train_pckh = 0.0;
  double val_pckh = 0.0;
  double val_pckh_02 = 0.0;
  double val_error = 0.0;  // mean distance in heatmap pixels
  double final_loss = 0.0;
  double seconds = 0.0;
  std::optional<Network> net;
};

const std::vector<Sample>& desk_train() {
  static const std::vector<Sample> data = [] {
    SyntheticSceneSpec s;
    s.num_samples = 200;
    s.image_size = 64;
    s.keypoints = 4;
    s.seed = 1;
    return generate_samples(s);
  }();
  return data;
}

const std::vector<Sample>& desk_val() {
  static const std::vector<Sample> data = [] {
    SyntheticSceneSpec s;
    s.num_samples = 100;
    s.image_size = 64;
    s.keypoints = 4;
    s.seed = 2;
    return generate_samples(s);
  }();
  return data;
}

TrainConfig desk_train_config(std::uint64_t seed) {
  TrainConfig tc;
  tc.epochs = 60;
  tc.batch_size = 8;
  tc.lr.initial = 2.5e-4;
  tc.lr.final = 1e-5;
  tc.lr.drop_epochs = {40, 50, 55};
  tc.augmentation.flip_pairs = flip_pairs(4);
  tc.seed = seed;
  return tc;
}

double mean_error(Network& net, const std::vector<Sample>& samples) {
  double total = 0.0;
  int count = 0;
  NoGradGuard g;
  for (std::size_t b = 0; b < samples.size(); b += 16) {
    std::vector<const Sample*> batch;
    for (std::size_t i = b; i < std::min(samples.size(), b + 16); ++i) batch.push_back(&samples[i]);
    const auto pred = decode_batch(net.forward(stack_images(batch), Mode::kEval).back());
    for (std::size_t i = 0; i < batch.size(); ++i) {
      for (std::size_t k = 0; k < pred[i].size(); ++k) {
        const Keypoint& t = batch[i]->keypoints[k];
        if (!t.visible) continue;
        total += std::hypot(pred[i][k].x - t.x, pred[i][k].y - t.y);
        ++count;
      }
    }
  }
  return count ? total / count : 0.0;
}

DeskRun& desk_run(const std::string& gate, std::uint64_t seed) {
  static std::map<std::pair<std::string, std::uint64_t>, DeskRun> cache;
  auto key = std::make_pair(gate, seed);
  if (auto it = cache.find(key); it != cache.end()) return it->second;
  setenv("SGNET_THREADS", "1", 1);
  NetworkConfig c;
  c.num_stacks = 2;
  c.width = 32;
  c.keypoints = 4;
  c.input_size = 64;
  c.gate = GateSpec::parse(gate);
  c.seed = seed;
  DeskRun r;
  r.gate = gate;
  r.seed = seed;
  r.net.emplace(c);
  init_network(*r.net, seed);
  const auto t0 = std::chrono::steady_clock::now();
  const TrainLog log = train(*r.net, desk_train(), desk_val(), desk_train_config(seed));
  r.seconds = seconds_since(t0);
  r.train_pckh = evaluate(*r.net, desk_train()).mean;
  r.val_pckh = evaluate(*r.net, desk_val()).mean;
  r.val_pckh_02 = evaluate(*r.net, desk_val(), 0.2).mean;
  r.val_error = mean_error(*r.net, desk_val());
  for (double l : log.epochs.back().stack_loss) r.final_loss += l;

  const fs::path dir = g_artifacts / ("desk_" + gate.substr(0, gate.find(':')) + "_seed" + std::to_string(seed));
  fs::create_directories(dir);
  std::ofstream os(dir / "train_log.csv");
  log.write_csv(os);
  std::cout << "  run gate=" << gate << " seed=" << seed << ": train " << fixed(r.train_pckh)
            << ", held-out " << fixed(r.val_pckh) << " (@0.2: " << fixed(r.val_pckh_02)
            << ", mean error " << fixed(r.val_error, 3) << " px), final loss "
            << fixed(r.final_loss, 5) << ", " << fixed(r.seconds, 0) << " s\n"
            << std::flush;
  return cache.emplace(key, std::move(r)).first->second;
}

Outcome desk_learning() {
  const DeskRun& r = desk_run("learnable_per_channel", 0);
  const bool ok = r.train_pckh >= 0.95 && r.val_pckh >= 0.80 && r.seconds <= 1800.0;
  return {ok, "train PCKh@0.5 " + fixed(r.train_pckh) + " (>= 0.95), held-out " +
                  fixed(r.val_pckh) + " (>= 0.80), " + fixed(r.seconds, 0) +
                  " s single-threaded (<= 1800)"};
}

Outcome gating_order() {
  double learn = 0.0, fixed1 = 0.0, learn02 = 0.0, fixed02 = 0.0;
  double learn_err = 0.0, fixed_err = 0.0, learn_loss = 0.0, fixed_loss = 0.0;
  std::string per_seed;
  for (std::uint64_t seed : {0, 1, 2}) {
    const DeskRun& a = desk_run("learnable_per_channel", seed);
    const DeskRun& b = desk_run("fixed:1", seed);
    learn += a.val_pckh / 3;
    fixed1 += b.val_pckh / 3;
    learn02 += a.val_pckh_02 / 3;
    fixed02 += b.val_pckh_02 / 3;
    learn_err += a.val_error / 3;
    fixed_err += b.val_error / 3;
    learn_loss += a.final_loss / 3;
    fixed_loss += b.final_loss / 3;
    per_seed += " seed" + std::to_string(seed) + " " + fixed(a.val_pckh) + "/" + fixed(b.val_pckh) + ";";
  }
  return {learn >= fixed1, "held-out PCKh@0.5 learnable per-channel vs fixed 1:" + per_seed +
                               " mean " + fixed(learn) + " vs " + fixed(fixed1) +
                               " (PCKh@0.2 means " + fixed(learn02) + " vs " + fixed(fixed02) +
                               "; held-out error " + fixed(learn_err, 3) + " vs " + fixed(fixed_err, 3) +
                               " px; final train loss " + fixed(learn_loss, 4) + " vs " +
                               fixed(fixed_loss, 4) + ")"};
}

Outcome alpha_clustering() {
  DeskRun& r = desk_run("learnable_per_channel", 0);
  const auto records = alpha_snapshot(*r.net);
  const auto values = all_alphas(records);
  const double frac = fraction_within(values, 0.1);
  fs::create_directories(g_artifacts);
  {
    std::ofstream os(g_artifacts / "alpha.csv");
    write_alpha_csv(os, records);
  }
  const std::vector<Histogram> h{alpha_histogram(records)};
  {
    std::ofstream os(g_artifacts / "alpha_histogram.csv");
    write_histogram_csv(os, h);
  }
  double lo = 1e300, hi = -1e300;
  for (double v : values) lo = std::min(lo, v), hi = std::max(hi, v);
  return {frac >= 0.5 && !values.empty(),
          fixed(100 * frac, 1) + "% of " + std::to_string(values.size()) +
              " alphas in [-0.1, 0.1] (range " + fixed(lo) + " .. " + fixed(hi) +
              "); histogram at " + (g_artifacts / "alpha_histogram.csv").string()};
}

Outcome feature_distribution() {
  DeskRun& r = desk_run("learnable_per_channel", 0);
  std::vector<const Sample*> probe;
  for (int i = 0; i < 16; ++i) probe.push_back(&desk_val()[i]);
  const auto stats = feature_stats(*r.net, stack_images(probe));
  std::ofstream os(g_artifacts / "feature_stats.csv");
  write_histogram_csv(os, flatten(stats));
  double pre = 0.0, post = 0.0;
  int higher = 0;
  for (const auto& s : stats) {
    pre += s.pre_within / stats.size();
    post += s.post_within / stats.size();
    higher += s.post_within > s.pre_within;
  }
  return {higher == static_cast<int>(stats.size()) && !stats.empty(),
          "fraction of shortcut values in [-0.1, 0.1]: post-scaling " + fixed(post) +
              " vs pre-scaling " + fixed(pre) + " (block mean); higher in " +
              std::to_string(higher) + "/" + std::to_string(stats.size()) + " blocks"};
}

}  // namespace

int main(int argc, char** argv) {
  std::string group = "all";
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--group" && i + 1 < argc) {
      group = argv[++i];
    } else if (a == "--artifacts" && i + 1 < argc) {
      g_artifacts = argv[++i];
    } else {
      std::cerr << "usage: acceptance [--group fast|training|all] [--artifacts DIR]\n";
      return 1;
    }
  }
  if (group != "fast" && group != "training" && group != "all") {
    std::cerr << "unknown group " << group << '\n';
    return 1;
  }
  fs::create_directories(g_artifacts);

  const std::vector<Criterion> criteria{
      {1, "gradient soundness", "fast", gradient_soundness},
      {2, "gate identity at init", "fast", gate_identity},
      {3, "heatmap loss oracle", "fast", loss_oracle},
      {4, "cost accounting", "fast", cost_accounting},
      {5, "PCKh oracle", "fast", pckh_oracle},
      {6, "desk-scale learning", "training", desk_learning},
      {7, "gating-mode ordering", "training", gating_order},
      {8, "alpha clustering", "training", alpha_clustering},
      {9, "aggregation checks", "fast", aggregation_checks},
      {10, "reproducibility", "fast", reproducibility},
  };
  int failed = 0;
  auto report = [&](const std::string& label, const Outcome& o) {
    std::cout << (o.pass ? "PASS" : "FAIL") << "  " << label << ": " << o.detail << '\n'
              << std::flush;
    failed += !o.pass;
  };
  for (const auto& c : criteria) {
    if (group != "all" && c.group != group) continue;
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report("criterion " + std::to_string(c.id) + " (" + c.name + ")", o);
  }
  if (group != "fast") {
    Outcome o;
    try {
      o = feature_distribution();
    } catch (const std::exception& e) {
      o = {false, std::string("exception: ") + e.what()};
    }
    report("supplementary (feature distribution after training)", o);
  }
  return failed == 0 ? 0 : 1;
}
