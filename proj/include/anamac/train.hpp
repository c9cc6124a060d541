#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "anamac/har.hpp"
#include "anamac/layers.hpp"

namespace anamac {

/// Counts with rows = true class and columns = predicted class.
struct ConfusionMatrix {
  std::size_t classes = 0;
  std::vector<std::size_t> counts;

  std::size_t at(std::size_t truth, std::size_t predicted) const { return counts[truth * classes + predicted]; }
  /// Diagonal over row sum; 0 for classes without samples.
  std::vector<double> recall() const;
  double accuracy() const;
};

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& labels,
                                 std::size_t classes);

struct TrainOptions {
  Backend backend = Backend::software;
  std::size_t epochs = 1;
  float lr = 0.05f;
  std::size_t batch_size = 64;
  std::uint64_t seed = 0;
  bool augment_stride_shift = false;
  double software_noise = 2.0;  // output LSB added per tile while training in software
  float gain = 1.0f / 64.0f;
  ExecutorOptions exec;         // chip backend; run seeds start at exec.run_seed
  std::size_t eval_batch = 256;
};

struct Evaluation {
  double accuracy = 0;
  ConfusionMatrix confusion;
};

struct EpochMetrics {
  std::size_t epoch = 0;
  double train_accuracy = 0;  // running accuracy of the training forward passes
  Evaluation test;
};

std::vector<int> predict(const Model& model, const Tensor& x, ForwardContext& ctx);

/// Noise-free software evaluation, or a chip evaluation with temporal noise
/// keyed by `run_seed`.
Evaluation evaluate(const Model& model, const Dataset& data, Backend backend, const TrainOptions& options,
                    ChipLease* lease, std::uint64_t run_seed = 0);

/// Minibatch SGD on softmax cross-entropy. The forward pass runs on the
/// selected backend, the backward pass through the float model.
std::vector<EpochMetrics> train_model(Model& model, const Dataset& train, const Dataset& test,
                                      const TrainOptions& options, ChipLease* lease = nullptr);

/// `epoch,split,accuracy`
std::string metrics_csv(const std::vector<EpochMetrics>& metrics);

/// JSON manifest plus one tensor file per layer next to it.
void save_model(const Model& model, const std::filesystem::path& manifest);
Model load_model(const std::filesystem::path& manifest);

}  // namespace anamac
