#include "anamac/train.hpp"

#include <charconv>
#include <cmath>
#include <numeric>
#include <random>

namespace anamac {
namespace {

std::string num(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::vector<std::size_t> shuffled(std::size_t n, std::uint64_t seed) {
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 engine(seed);
  for (std::size_t i = n; i > 1; --i) std::swap(idx[i - 1], idx[engine() % i]);
  return idx;
}

std::vector<int> argmax_rows(const Tensor& logits) {
  const std::size_t batch = logits.dim(0), n = logits.size() / batch;
  const auto v = logits.values<float>();
  std::vector<int> out(batch);
  for (std::size_t b = 0; b < batch; ++b) {
    std::size_t best = 0;
    for (std::size_t j = 1; j < n; ++j) {
      if (v[b * n + j] > v[b * n + best]) best = j;
    }
    out[b] = static_cast<int>(best);
  }
  return out;
}

}  // namespace

std::vector<double> ConfusionMatrix::recall() const {
  std::vector<double> r(classes, 0.0);
  for (std::size_t t = 0; t < classes; ++t) {
    std::size_t row = 0;
    for (std::size_t p = 0; p < classes; ++p) row += at(t, p);
    if (row > 0) r[t] = static_cast<double>(at(t, t)) / static_cast<double>(row);
  }
  return r;
}

double ConfusionMatrix::accuracy() const {
  std::size_t diag = 0, total = 0;
  for (std::size_t t = 0; t < classes; ++t) {
    for (std::size_t p = 0; p < classes; ++p) {
      total += at(t, p);
      if (t == p) diag += at(t, p);
    }
  }
  return total == 0 ? 0.0 : static_cast<double>(diag) / static_cast<double>(total);
}

ConfusionMatrix confusion_matrix(const std::vector<int>& predictions, const std::vector<int>& labels,
                                 std::size_t classes) {
  if (predictions.size() != labels.size()) {
    throw Error(ErrorCode::LengthMismatch, std::to_string(predictions.size()) + " predictions for " +
                                               std::to_string(labels.size()) + " labels");
  }
  ConfusionMatrix m;
  m.classes = classes;
  m.counts.assign(classes * classes, 0);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int t = labels[i], p = predictions[i];
    if (t < 0 || p < 0 || t >= static_cast<int>(classes) || p >= static_cast<int>(classes)) {
      throw Error(ErrorCode::LabelOutOfRange, "class index outside [0, " + std::to_string(classes) + ")");
    }
    ++m.counts[static_cast<std::size_t>(t) * classes + static_cast<std::size_t>(p)];
  }
  return m;
}

std::vector<int> predict(const Model& model, const Tensor& x, ForwardContext& ctx) {
  return argmax_rows(model_forward(model, x, ctx).logits);
}

Evaluation evaluate(const Model& model, const Dataset& data, Backend backend, const TrainOptions& options,
                    ChipLease* lease, std::uint64_t run_seed) {
  ForwardContext ctx;
  ctx.backend = backend;
  ctx.gain = options.gain;
  ctx.lease = lease;
  ctx.exec = options.exec;
  ctx.exec.run_seed = run_seed;
  std::vector<int> preds;
  for (std::size_t start = 0; start < data.size(); start += options.eval_batch) {
    std::vector<std::size_t> idx;
    for (std::size_t i = start; i < std::min(data.size(), start + options.eval_batch); ++i) idx.push_back(i);
    const auto p = predict(model, data.subset(idx).x, ctx);
    preds.insert(preds.end(), p.begin(), p.end());
  }
  Evaluation e;
  e.confusion = confusion_matrix(preds, data.labels, data.classes);
  e.accuracy = e.confusion.accuracy();
  return e;
}

std::vector<EpochMetrics> train_model(Model& model, const Dataset& train_in, const Dataset& test,
                                      const TrainOptions& options, ChipLease* lease) {
  if (options.batch_size == 0) throw Error(ErrorCode::InvalidParams, "batch size must be >= 1");
  if (options.backend == Backend::chip && lease == nullptr) {
    throw Error(ErrorCode::Unavailable, "chip training needs leased chips");
  }
  Dataset train = train_in;
  if (options.augment_stride_shift) {
    const auto& first = model.layers.front();
    if (first.kind != LayerKind::Conv1d) throw Error(ErrorCode::InvalidParams, "stride shift needs a conv input layer");
    train = augment_stride_shift(train_in, first.conv.stride[0]);
  }
  const std::size_t classes = model.classes();
  std::vector<EpochMetrics> metrics;
  std::uint64_t run_seed = options.exec.run_seed;
  for (std::size_t epoch = 1; epoch <= options.epochs; ++epoch) {
    NormalStream noise(mix_seed({options.seed, epoch, 0x6e6f697365ULL}));
    ForwardContext ctx;
    ctx.backend = options.backend;
    ctx.gain = options.gain;
    ctx.software_noise = options.software_noise;
    ctx.rng = &noise;
    ctx.lease = lease;
    ctx.exec = options.exec;
    ctx.exec.run_seed = run_seed;

    const auto order = shuffled(train.size(), mix_seed({options.seed, epoch}));
    std::size_t correct = 0;
    for (std::size_t start = 0; start < order.size(); start += options.batch_size) {
      const std::vector<std::size_t> idx(order.begin() + static_cast<std::ptrdiff_t>(start),
                                         order.begin() + static_cast<std::ptrdiff_t>(
                                                             std::min(order.size(), start + options.batch_size)));
      const Dataset batch = train.subset(idx);
      const auto fwd = model_forward(model, batch.x, ctx);
      const Tensor prob_tensor = softmax(fwd.logits);
      const auto probs = prob_tensor.values<float>();
      const auto preds = argmax_rows(fwd.logits);
      const std::size_t b = idx.size();
      std::vector<float> grad(probs.begin(), probs.end());
      for (std::size_t i = 0; i < b; ++i) {
        correct += preds[i] == batch.labels[i] ? 1 : 0;
        grad[i * classes + static_cast<std::size_t>(batch.labels[i])] -= 1.0f;
      }
      for (auto& g : grad) g /= static_cast<float>(b);
      model_backward_step(model, fwd, Tensor(Shape{b, classes}, std::move(grad)), options.lr);
    }
    run_seed = ctx.exec.run_seed;

    EpochMetrics m;
    m.epoch = epoch;
    m.train_accuracy = train.size() == 0 ? 0.0 : static_cast<double>(correct) / static_cast<double>(train.size());
    m.test = evaluate(model, test, options.backend, options, lease, mix_seed({options.seed, epoch, 0x74657374ULL}));
    metrics.push_back(std::move(m));
  }
  return metrics;
}

std::string metrics_csv(const std::vector<EpochMetrics>& metrics) {
  std::string out = "epoch,split,accuracy\n";
  for (const auto& m : metrics) {
    out += std::to_string(m.epoch) + ",train," + num(m.train_accuracy) + "\n";
    out += std::to_string(m.epoch) + ",test," + num(m.test.accuracy) + "\n";
  }
  return out;
}

}  // namespace anamac
