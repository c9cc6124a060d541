#pragma once

#include <algorithm>
#include <cmath>
#include <span>
#include <utility>
#include <cstdint>
#include <random>
#include <vector>

#include "anamac/limits.hpp"
#include "anamac/har.hpp"
#include "anamac/lowering.hpp"
#include "anamac/matmul.hpp"
#include "anamac/tensor.hpp"

namespace testutil {

using anamac::Dataset;
using anamac::DenseLayer;
using anamac::row_capacity;
using anamac::Shape;
using anamac::Tensor;

inline Tensor random_inputs(std::mt19937_64& rng, std::size_t rows, std::size_t cols, int max = 31) {
  std::uniform_int_distribution<int> d(0, max);
  std::vector<std::uint8_t> v(rows * cols);
  for (auto& x : v) x = static_cast<std::uint8_t>(d(rng));
  return Tensor(Shape{rows, cols}, std::move(v));
}

inline Tensor random_weights(std::mt19937_64& rng, std::size_t rows, std::size_t cols, bool is_signed,
                                     int max = 63) {
  std::uniform_int_distribution<int> d(is_signed ? -max : 0, max);
  std::vector<std::int8_t> v(rows * cols);
  for (auto& x : v) x = static_cast<std::int8_t>(d(rng));
  return Tensor(Shape{rows, cols}, std::move(v));
}

/// Brute-force integer product, no clamping.
inline std::vector<std::int64_t> int_matmul(const Tensor& x, const Tensor& w) {
  const auto xv = x.to_float();
  const auto wv = w.to_float();
  const std::size_t b = x.dim(0), n = x.dim(1), m = w.dim(1);
  std::vector<std::int64_t> y(b * m, 0);
  for (std::size_t i = 0; i < b; ++i)
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < m; ++j)
        y[i * m + j] += static_cast<std::int64_t>(xv[i * n + k]) * static_cast<std::int64_t>(wv[k * m + j]);
  return y;
}

inline std::int32_t clamp8(std::int64_t v) {
  return static_cast<std::int32_t>(std::clamp<std::int64_t>(v, anamac::kOutputMin, anamac::kOutputMax));
}

/// Small operands where no tile can clamp: inputs <= 3, |w| <= 3 and at most
/// 14 nonzero weights per column within each row range (|sum| <= 126).
inline std::pair<Tensor, Tensor> unclamped_operands(std::mt19937_64& rng, std::size_t b, std::size_t n,
                                                    std::size_t m, bool is_signed) {
  const std::size_t cap = row_capacity(is_signed);
  std::vector<std::uint8_t> xv(b * n);
  std::vector<std::int8_t> wv(n * m, 0);
  for (auto& v : xv) v = static_cast<std::uint8_t>(rng() % 4);
  for (std::size_t r0 = 0; r0 < n; r0 += cap) {
    const std::size_t rows = std::min(n, r0 + cap) - r0;
    for (std::size_t j = 0; j < m; ++j)
      for (int k = 0; k < 14; ++k) {
        const int mag = 1 + int(rng() % 3);
        wv[(r0 + rng() % rows) * m + j] = static_cast<std::int8_t>(is_signed && rng() % 2 ? -mag : mag);
      }
  }
  return {Tensor(Shape{b, n}, std::move(xv)), Tensor(Shape{n, m}, std::move(wv))};
}

inline Tensor random_kernel(std::mt19937_64& rng, const anamac::ConvSpec& spec, int max = 5) {
  std::vector<std::int8_t> v(anamac::element_count(spec.kernel_shape()));
  for (auto& x : v) x = static_cast<std::int8_t>(int(rng() % (2 * max + 1)) - max);
  return Tensor(spec.kernel_shape(), std::move(v));
}

inline Tensor random_input(std::mt19937_64& rng, const anamac::ConvSpec& spec, int max = 31) {
  std::vector<std::uint8_t> v(anamac::element_count(spec.input_shape()));
  for (auto& x : v) x = static_cast<std::uint8_t>(rng() % (max + 1));
  return Tensor(spec.input_shape(), std::move(v));
}

/// Gaussian clusters around random prototypes in [0.15, 0.85]^dim.
inline Dataset blobs(std::size_t classes, std::size_t dim, std::size_t per_class, float spread,
                     std::uint64_t seed, std::uint64_t sample_seed) {
  std::mt19937_64 proto_rng(seed), rng(sample_seed);
  std::uniform_real_distribution<float> u(0.15f, 0.85f);
  std::normal_distribution<float> n(0.0f, spread);
  std::vector<std::vector<float>> protos(classes, std::vector<float>(dim));
  for (auto& p : protos)
    for (auto& v : p) v = u(proto_rng);
  Dataset d;
  d.classes = classes;
  std::vector<float> x;
  for (std::size_t i = 0; i < per_class * classes; ++i) {
    const std::size_t c = i % classes;
    for (std::size_t k = 0; k < dim; ++k) x.push_back(std::clamp(protos[c][k] + n(rng), 0.0f, 1.0f));
    d.labels.push_back(static_cast<int>(c));
  }
  d.x = Tensor(Shape{per_class * classes, dim}, std::move(x));
  return d;
}

inline DenseLayer random_dense(std::mt19937_64& rng, std::size_t in, std::size_t out) {
  std::normal_distribution<float> n(0.0f, 0.5f);
  DenseLayer l;
  l.in = in;
  l.out = out;
  l.weights.resize(in * out);
  for (auto& w : l.weights) w = n(rng);
  return l;
}

inline Tensor random_float(std::mt19937_64& rng, std::size_t rows, std::size_t cols, float lo = 0.0f,
                           float hi = 1.0f) {
  std::uniform_real_distribution<float> u(lo, hi);
  std::vector<float> v(rows * cols);
  for (auto& f : v) f = u(rng);
  return Tensor(Shape{rows, cols}, std::move(v));
}

/// Mean softmax cross-entropy of y = x W in double precision.
inline double ce_loss(const std::vector<double>& x, const std::vector<double>& w, const std::vector<int>& labels,
                      std::size_t b, std::size_t n, std::size_t m) {
  double loss = 0;
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> y(m, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < m; ++j) y[j] += x[i * n + k] * w[k * m + j];
    const double mx = *std::max_element(y.begin(), y.end());
    double z = 0;
    for (auto v : y) z += std::exp(v - mx);
    loss += std::log(z) + mx - y[static_cast<std::size_t>(labels[i])];
  }
  return loss / static_cast<double>(b);
}

inline double max_rel_error(std::span<const float> got, const std::vector<double>& want) {
  double err = 0, scale = 0;
  for (std::size_t i = 0; i < want.size(); ++i) {
    err = std::max(err, std::abs(double(got[i]) - want[i]));
    scale = std::max(scale, std::abs(want[i]));
  }
  return err / std::max(scale, 1e-12);
}

/// Largest relative error of matmul_backward against central differences of
/// the float cross-entropy loss, for one random small layer.
inline double gradient_check_error(std::mt19937_64& rng) {
  const std::size_t b = 1 + rng() % 5, n = 1 + rng() % 6, m = 2 + rng() % 4;
  const auto l = random_dense(rng, n, m);
  const auto x = random_float(rng, b, n);
  std::vector<int> labels(b);
  for (auto& v : labels) v = static_cast<int>(rng() % m);
  anamac::ForwardContext ctx;
  const auto f = anamac::matmul_forward(x, l, ctx);

  std::vector<double> xd(x.values<float>().begin(), x.values<float>().end());
  std::vector<double> wd(l.weights.begin(), l.weights.end());
  // dL/dy of the float model, then the layer's backward.
  std::vector<float> gy(b * m);
  for (std::size_t i = 0; i < b; ++i) {
    std::vector<double> y(m, 0.0);
    for (std::size_t k = 0; k < n; ++k)
      for (std::size_t j = 0; j < m; ++j) y[j] += xd[i * n + k] * wd[k * m + j];
    const double mx = *std::max_element(y.begin(), y.end());
    double z = 0;
    for (auto v : y) z += std::exp(v - mx);
    for (std::size_t j = 0; j < m; ++j)
      gy[i * m + j] = float((std::exp(y[j] - mx) / z - (int(j) == labels[i] ? 1.0 : 0.0)) / double(b));
  }
  const auto g = anamac::matmul_backward(Tensor(Shape{b, m}, gy), f.state, l);

  const double eps = 1e-3;
  std::vector<double> fw(n * m), fx(b * n);
  for (std::size_t i = 0; i < wd.size(); ++i) {
    auto wp = wd, wm = wd;
    wp[i] += eps;
    wm[i] -= eps;
    fw[i] = (ce_loss(xd, wp, labels, b, n, m) - ce_loss(xd, wm, labels, b, n, m)) / (2 * eps);
  }
  for (std::size_t i = 0; i < xd.size(); ++i) {
    auto xp = xd, xm = xd;
    xp[i] += eps;
    xm[i] -= eps;
    fx[i] = (ce_loss(xp, wd, labels, b, n, m) - ce_loss(xm, wd, labels, b, n, m)) / (2 * eps);
  }
  return std::max(max_rel_error(g.grad_w.values<float>(), fw), max_rel_error(g.grad_x.values<float>(), fx));
}

}  // namespace testutil
