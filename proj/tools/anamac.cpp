#include <CLI11.hpp>
#include <fstream>
#include <iostream>
#include <random>
#include <sstream>

#include "anamac/bench.hpp"
#include "anamac/config.hpp"
#include "anamac/executor.hpp"
#include "anamac/lowering.hpp"
#include "anamac/matmul.hpp"
#include "anamac/partition.hpp"
#include "anamac/tensor_io.hpp"
#include "anamac/train.hpp"

using namespace anamac;

namespace {

void write_text(const std::string& path, const std::string& text) {
  if (path.empty() || path == "-") {
    std::cout << text;
    return;
  }
  std::ofstream out(path);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path);
  out << text;
}

std::array<std::size_t, 2> parse_pair(const std::string& v) {
  const auto x = v.find('x');
  if (x == std::string::npos) return {std::stoul(v), 1};
  return {std::stoul(v.substr(0, x)), std::stoul(v.substr(x + 1))};
}

// "c_in=9,c_out=16,k=32,s=6,l=128"; 2-d extents as "k=2x2,l=5x7".
ConvSpec parse_conv_spec(const std::string& text) {
  ConvSpec spec;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ',')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw Error(ErrorCode::ParseError, "expected key=value, got " + item);
    const auto key = item.substr(0, eq), value = item.substr(eq + 1);
    if (key == "c_in") spec.in_channels = std::stoul(value);
    else if (key == "c_out") spec.out_channels = std::stoul(value);
    else if (key == "k") spec.kernel = parse_pair(value);
    else if (key == "s") spec.stride = parse_pair(value);
    else if (key == "l") {
      spec.extent = parse_pair(value);
      spec.dims = value.find('x') == std::string::npos ? 1 : 2;
    } else {
      throw Error(ErrorCode::ParseError, "unknown conv key " + key);
    }
  }
  if (spec.dims == 2) {
    // A scalar kernel or stride applies to both axes.
    if (spec.kernel[1] == 1 && spec.kernel[0] != 1) spec.kernel[1] = spec.kernel[0];
    if (spec.stride[1] == 1 && spec.stride[0] != 1) spec.stride[1] = spec.stride[0];
  }
  spec.validate();
  return spec;
}

ChipConfig chip_config(const std::string& path) {
  return path.empty() ? ChipConfig::defaults() : ChipConfig::load(path);
}

std::string tensor_csv(const Tensor& t) {
  const std::size_t rows = t.dim(0), cols = t.size() / rows;
  const auto v = t.to_float();
  std::string out;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      out += std::to_string(static_cast<long long>(v[r * cols + c]));
      out += c + 1 < cols ? "," : "\n";
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Behavioral simulator of an analog matrix-multiply accelerator"};
  app.require_subcommand(1);
  std::string chip_cfg;
  app.add_option("--chip-config", chip_cfg, "chip key=value file (default: shipped chip_default.cfg)");

  // matmul
  auto* mm = app.add_subcommand("matmul", "random quantized matmul through the full pipeline");
  std::size_t n = 300, m = 300, batch = 4, chips = 1, workers = 0;
  std::uint64_t seed = 1;
  bool is_signed = false, noiseless = false, explain = false;
  std::string backend_name = "chip", trace_path, out_path, graph_path;
  mm->add_option("--n", n, "input dimension");
  mm->add_option("--m", m, "output dimension");
  mm->add_option("--batch", batch, "batch entries");
  mm->add_option("--seed", seed, "operand and noise seed");
  mm->add_option("--chips", chips, "simulated chips");
  mm->add_option("--workers", workers, "executor threads (0: automatic)");
  mm->add_flag("--signed", is_signed, "signed weights");
  mm->add_flag("--noiseless", noiseless, "disable all noise and use gain 1");
  mm->add_option("--backend", backend_name, "software or chip")->check(CLI::IsMember({"software", "chip"}));
  mm->add_flag("--explain", explain, "print the partition plan as JSON");
  mm->add_option("--trace", trace_path, "write the simulated execution trace CSV");
  mm->add_option("--graph", graph_path, "write the dependency graph JSON");
  mm->add_option("--out", out_path, "write outputs as CSV (default stdout)");

  // partition
  auto* part = app.add_subcommand("partition", "tile an N x M matmul onto synapse arrays");
  part->add_option("--n", n, "input dimension")->required();
  part->add_option("--m", m, "output dimension")->required();
  part->add_option("--chips", chips, "simulated chips");
  part->add_flag("--signed", is_signed, "signed weights");
  part->add_flag("--explain", explain, "print the full plan as JSON");

  // lower-conv
  auto* lower = app.add_subcommand("lower-conv", "unroll a convolution into a matmul");
  std::string conv_text;
  lower->add_option("--spec", conv_text, "e.g. c_in=1,c_out=16,k=32,s=6,l=128")->required();
  lower->add_flag("--signed", is_signed, "signed weights (128 usable rows)");
  lower->add_flag("--explain", explain, "print the matrix layout as JSON");

  // bench
  auto* bench = app.add_subcommand("bench", "MAC rate model");
  std::string scenario_name = "all", kind = "size";
  std::size_t bench_batch = 2000, bench_size = 256;
  bench->add_option("--scenario", scenario_name, "v1_1gbe, v2_1gbe, sim_8g or all");
  bench->add_option("--kind", kind, "size, batch or breakdown")->check(CLI::IsMember({"size", "batch", "breakdown"}));
  bench->add_option("--batch", bench_batch, "batch for size sweeps");
  bench->add_option("--size", bench_size, "matrix size for batch sweeps");
  bench->add_option("--out", out_path, "CSV output (default stdout)");

  // train-har
  auto* har = app.add_subcommand("train-har", "train the activity recognition model");
  std::string data_dir, pretrained, save_path;
  std::size_t epochs = 50, batch_size = 64;
  float lr = 0.05f;
  bool augment = false;
  std::string train_backend = "software";
  har->add_option("--data", data_dir, "dataset root (train/ and test/ inside)")->required();
  har->add_option("--backend", train_backend, "software or chip")->check(CLI::IsMember({"software", "chip"}));
  har->add_option("--epochs", epochs, "training epochs");
  har->add_option("--lr", lr, "SGD learning rate");
  har->add_option("--batch-size", batch_size, "minibatch size");
  har->add_option("--seed", seed, "initialization, shuffling and noise seed");
  har->add_option("--pretrained", pretrained, "model manifest to start from");
  har->add_option("--save", save_path, "write the trained model manifest here");
  har->add_flag("--augment", augment, "add stride-shifted copies of the training set");
  har->add_option("--out", out_path, "metrics CSV (epoch,split,accuracy)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (mm->parsed()) {
      ChipConfig cfg = noiseless ? ChipConfig::noiseless(1.0f) : chip_config(chip_cfg);
      std::mt19937_64 engine(seed);
      std::uniform_int_distribution<int> xd(0, kInputMax), wd(is_signed ? -kWeightMax : 0, kWeightMax);
      std::vector<std::uint8_t> xv(batch * n);
      std::vector<std::int8_t> wv(n * m);
      for (auto& v : xv) v = static_cast<std::uint8_t>(xd(engine));
      for (auto& v : wv) v = static_cast<std::int8_t>(wd(engine));
      const Tensor x(Shape{batch, n}, std::move(xv)), w(Shape{n, m}, std::move(wv));
      const auto plan = partition_matmul(n, m, is_signed, all_arrays(chips));
      if (explain) std::cerr << plan_to_json(plan) << "\n";
      Tensor y;
      if (backend_name == "software") {
        y = software_matmul(x, w, SoftwareMatmulOptions{is_signed, cfg.gain});
      } else {
        ResourceManager rm(cfg, chips);
        auto lease = rm.acquire_chips(chips);
        ExecutorOptions opt;
        opt.workers = workers;
        opt.run_seed = seed;
        opt.link = scenario(Scenario::sim_8g).link;
        const auto graph = build_graph(plan, w);
        if (!graph_path.empty()) write_text(graph_path, to_json(graph, 2) + "\n");
        const auto result = Executor(opt).run(graph, x, lease);
        if (!trace_path.empty()) write_text(trace_path, trace_to_csv(result.trace));
        y = result.output();
      }
      write_text(out_path, tensor_csv(y));
    } else if (part->parsed()) {
      const auto plan = partition_matmul(n, m, is_signed, all_arrays(chips));
      const auto [full, partial] = allocation_counts(plan);
      if (explain) {
        std::cout << plan_to_json(plan) << "\n";
      } else {
        std::cout << "tiles " << plan.tiles.size() << " (full " << full << ", partial " << partial << "), row ranges "
                  << plan.row_ranges() << ", column stripes " << plan.col_stripes() << "\n";
      }
    } else if (lower->parsed()) {
      const auto spec = parse_conv_spec(conv_text);
      std::optional<ExpansionPlan> plan;
      std::string note;
      if (spec.dims == 1) {
        try {
          plan = plan_expansion(spec, row_capacity(is_signed));
        } catch (const Error& e) {
          note = e.what();
        }
      }
      if (explain) {
        std::cout << lowering_to_json(spec, plan ? &*plan : nullptr) << "\n";
      } else {
        std::cout << "matrix " << spec.matrix_rows() << "x" << spec.out_channels << ", positions " << spec.positions();
        if (plan) std::cout << ", expansion copies " << plan->copies << ", runs " << plan->runs(spec.positions());
        std::cout << "\n";
      }
      if (!note.empty()) std::cerr << "no expansion: " << note << "\n";
    } else if (bench->parsed()) {
      std::vector<Scenario> list;
      if (scenario_name == "all") list = {Scenario::v1_1gbe, Scenario::v2_1gbe, Scenario::sim_8g};
      else list = {scenario_from_string(scenario_name)};
      std::string csv;
      for (auto id : list) {
        const auto s = scenario(id);
        if (kind == "breakdown") {
          const auto rows = utilization_breakdown(s, default_sizes(), bench_batch);
          auto text = breakdown_csv(rows);
          csv += csv.empty() ? text : text.substr(text.find('\n') + 1);
        } else {
          const auto rows = kind == "size" ? mac_rate_vs_size(s, default_sizes(), bench_batch)
                                           : mac_rate_vs_batch(s, default_batches(), bench_size);
          auto text = rate_csv(rows, s.name());
          csv += csv.empty() ? text : text.substr(text.find('\n') + 1);
        }
      }
      write_text(out_path, csv);
    } else if (har->parsed()) {
      auto data = load_har(data_dir);
      normalize_channels(data.train, data.test);
      Model model = pretrained.empty() ? har_model(seed) : load_model(pretrained);
      TrainOptions opt;
      opt.backend = backend_from_string(train_backend);
      opt.epochs = epochs;
      opt.lr = lr;
      opt.batch_size = batch_size;
      opt.seed = seed;
      opt.augment_stride_shift = augment;
      const ChipConfig cfg = chip_config(chip_cfg);
      opt.gain = cfg.gain;
      opt.software_noise = cfg.sigma_temporal;
      opt.exec.run_seed = seed;
      ResourceManager rm(cfg, 1);
      std::optional<ChipLease> lease;
      if (opt.backend == Backend::chip) lease = rm.acquire_chips(1);
      const auto metrics = train_model(model, data.train, data.test, opt, lease ? &*lease : nullptr);
      for (const auto& e : metrics) {
        std::cerr << "epoch " << e.epoch << " train " << e.train_accuracy << " test " << e.test.accuracy << "\n";
      }
      if (!metrics.empty()) {
        const auto recall = metrics.back().test.confusion.recall();
        std::cerr << "recall";
        for (auto r : recall) std::cerr << " " << r;
        std::cerr << "\n";
      }
      write_text(out_path, metrics_csv(metrics));
      if (!save_path.empty()) save_model(model, save_path);
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
