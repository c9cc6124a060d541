#include "anamac/lowering.hpp"

#include <cmath>
#include <json.hpp>

namespace anamac {
namespace {

std::size_t used(const ConvSpec& spec, const std::array<std::size_t, 2>& v, std::size_t axis) {
  return axis < spec.dims ? v[axis] : 1;
}

void require_shape(const Tensor& t, const Shape& want, const char* what) {
  if (t.shape() != want) {
    throw Error(ErrorCode::ShapeMismatch,
                std::string(what) + " has shape " + shape_string(t.shape()) + ", expected " + shape_string(want));
  }
}

void require_same_dtype(std::span<const Tensor> ts) {
  for (const auto& t : ts) {
    if (t.dtype() != ts.front().dtype()) throw Error(ErrorCode::DTypeMismatch, "copy blocks differ in dtype");
  }
}

}  // namespace

void ConvSpec::validate() const {
  if (dims != 1 && dims != 2) throw Error(ErrorCode::InvalidParams, "conv dims must be 1 or 2");
  if (in_channels == 0 || out_channels == 0) throw Error(ErrorCode::InvalidParams, "channels must be >= 1");
  for (std::size_t a = 0; a < dims; ++a) {
    if (kernel[a] == 0 || stride[a] == 0) throw Error(ErrorCode::InvalidParams, "kernel and stride must be >= 1");
    if (extent[a] < kernel[a]) {
      throw Error(ErrorCode::EmptyOutput, "kernel " + std::to_string(kernel[a]) + " exceeds extent " +
                                              std::to_string(extent[a]));
    }
  }
}

std::size_t ConvSpec::output_extent(std::size_t axis) const {
  if (axis >= dims) return 1;
  if (extent[axis] < kernel[axis]) return 0;
  return (extent[axis] - kernel[axis]) / stride[axis] + 1;
}

std::size_t ConvSpec::positions() const { return output_extent(0) * output_extent(1); }

std::size_t ConvSpec::taps() const { return used(*this, kernel, 0) * used(*this, kernel, 1); }

Shape ConvSpec::kernel_shape() const {
  Shape s{out_channels, in_channels, kernel[0]};
  if (dims == 2) s.push_back(kernel[1]);
  return s;
}

Shape ConvSpec::input_shape() const {
  Shape s{in_channels, extent[0]};
  if (dims == 2) s.push_back(extent[1]);
  return s;
}

Shape ConvSpec::output_shape() const {
  Shape s{out_channels, output_extent(0)};
  if (dims == 2) s.push_back(output_extent(1));
  return s;
}

ConvSpec ConvSpec::conv1d(std::size_t c_in, std::size_t c_out, std::size_t k, std::size_t s, std::size_t length) {
  ConvSpec spec;
  spec.dims = 1;
  spec.in_channels = c_in;
  spec.out_channels = c_out;
  spec.kernel = {k, 1};
  spec.stride = {s, 1};
  spec.extent = {length, 1};
  return spec;
}

ConvSpec ConvSpec::conv2d(std::size_t c_in, std::size_t c_out, std::array<std::size_t, 2> k,
                          std::array<std::size_t, 2> s, std::array<std::size_t, 2> extent) {
  ConvSpec spec;
  spec.dims = 2;
  spec.in_channels = c_in;
  spec.out_channels = c_out;
  spec.kernel = k;
  spec.stride = s;
  spec.extent = extent;
  return spec;
}

std::size_t OutputDescriptor::positions() const {
  std::size_t p = 1;
  for (auto e : spatial) p *= e;
  return p;
}

Tensor OutputDescriptor::to_output(const Tensor& matmul_result) const {
  const auto p = positions();
  require_shape(matmul_result, Shape{p, out_channels}, "matmul result");
  Shape shape{out_channels};
  shape.insert(shape.end(), spatial.begin(), spatial.end());
  return dispatch_dtype(matmul_result.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = matmul_result.values<T>();
    std::vector<T> out(src.size());
    for (std::size_t pos = 0; pos < p; ++pos) {
      for (std::size_t o = 0; o < out_channels; ++o) out[o * p + pos] = src[pos * out_channels + o];
    }
    return Tensor(shape, std::move(out));
  });
}

Tensor unroll_kernel(const ConvSpec& spec, const Tensor& kernel) {
  spec.validate();
  require_shape(kernel, spec.kernel_shape(), "kernel");
  const std::size_t k1 = used(spec, spec.kernel, 0), k2 = used(spec, spec.kernel, 1);
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  return dispatch_dtype(kernel.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = kernel.values<T>();
    std::vector<T> w(spec.matrix_rows() * cout);
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t t1 = 0; t1 < k1; ++t1) {
          for (std::size_t t2 = 0; t2 < k2; ++t2) {
            const std::size_t row = (t1 * k2 + t2) * cin + c;
            w[row * cout + o] = src[((o * cin + c) * k1 + t1) * k2 + t2];
          }
        }
      }
    }
    return Tensor(Shape{spec.matrix_rows(), cout}, std::move(w));
  });
}

Tensor roll_kernel(const ConvSpec& spec, const Tensor& matrix) {
  spec.validate();
  require_shape(matrix, Shape{spec.matrix_rows(), spec.out_channels}, "weight matrix");
  const std::size_t k1 = used(spec, spec.kernel, 0), k2 = used(spec, spec.kernel, 1);
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  return dispatch_dtype(matrix.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = matrix.values<T>();
    std::vector<T> k(src.size());
    for (std::size_t o = 0; o < cout; ++o) {
      for (std::size_t c = 0; c < cin; ++c) {
        for (std::size_t t1 = 0; t1 < k1; ++t1) {
          for (std::size_t t2 = 0; t2 < k2; ++t2) {
            k[((o * cin + c) * k1 + t1) * k2 + t2] = src[((t1 * k2 + t2) * cin + c) * cout + o];
          }
        }
      }
    }
    return Tensor(spec.kernel_shape(), std::move(k));
  });
}

Tensor gather_inputs(const ConvSpec& spec, const Tensor& input) {
  spec.validate();
  require_shape(input, spec.input_shape(), "input");
  const std::size_t k1 = used(spec, spec.kernel, 0), k2 = used(spec, spec.kernel, 1);
  const std::size_t s1 = used(spec, spec.stride, 0), s2 = used(spec, spec.stride, 1);
  const std::size_t l1 = used(spec, spec.extent, 0), l2 = used(spec, spec.extent, 1);
  const std::size_t o1 = spec.output_extent(0), o2 = spec.output_extent(1);
  const std::size_t cin = spec.in_channels, rows = spec.matrix_rows();
  return dispatch_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = input.values<T>();
    std::vector<T> x(o1 * o2 * rows);
    for (std::size_t p1 = 0; p1 < o1; ++p1) {
      for (std::size_t p2 = 0; p2 < o2; ++p2) {
        T* dst = x.data() + (p1 * o2 + p2) * rows;
        for (std::size_t t1 = 0; t1 < k1; ++t1) {
          for (std::size_t t2 = 0; t2 < k2; ++t2) {
            for (std::size_t c = 0; c < cin; ++c) {
              dst[(t1 * k2 + t2) * cin + c] = src[(c * l1 + p1 * s1 + t1) * l2 + p2 * s2 + t2];
            }
          }
        }
      }
    }
    return Tensor(Shape{o1 * o2, rows}, std::move(x));
  });
}

LoweredConv lower_conv(const ConvSpec& spec, const Tensor& kernel, const Tensor& input) {
  LoweredConv out;
  out.weights = unroll_kernel(spec, kernel);
  out.inputs = gather_inputs(spec, input);
  out.output.out_channels = spec.out_channels;
  for (std::size_t a = 0; a < spec.dims; ++a) out.output.spatial.push_back(spec.output_extent(a));
  return out;
}

Tensor direct_conv(const ConvSpec& spec, const Tensor& kernel, const Tensor& input) {
  spec.validate();
  require_shape(kernel, spec.kernel_shape(), "kernel");
  require_shape(input, spec.input_shape(), "input");
  const auto kv = kernel.to_float();
  const auto iv = input.to_float();
  const std::size_t k1 = used(spec, spec.kernel, 0), k2 = used(spec, spec.kernel, 1);
  const std::size_t s1 = used(spec, spec.stride, 0), s2 = used(spec, spec.stride, 1);
  const std::size_t l1 = used(spec, spec.extent, 0), l2 = used(spec, spec.extent, 1);
  const std::size_t o1 = spec.output_extent(0), o2 = spec.output_extent(1);
  const std::size_t cin = spec.in_channels, cout = spec.out_channels;
  std::vector<std::int32_t> y(cout * o1 * o2);
  for (std::size_t o = 0; o < cout; ++o) {
    for (std::size_t p1 = 0; p1 < o1; ++p1) {
      for (std::size_t p2 = 0; p2 < o2; ++p2) {
        std::int64_t acc = 0;
        for (std::size_t c = 0; c < cin; ++c) {
          for (std::size_t t1 = 0; t1 < k1; ++t1) {
            for (std::size_t t2 = 0; t2 < k2; ++t2) {
              acc += std::llround(kv[((o * cin + c) * k1 + t1) * k2 + t2]) *
                     std::llround(iv[(c * l1 + p1 * s1 + t1) * l2 + p2 * s2 + t2]);
            }
          }
        }
        y[(o * o1 + p1) * o2 + p2] = static_cast<std::int32_t>(acc);
      }
    }
  }
  return Tensor(spec.output_shape(), std::move(y));
}

ExpansionPlan plan_expansion(const ConvSpec& spec, std::size_t cap_rows, std::size_t cap_cols) {
  spec.validate();
  if (spec.dims != 1) throw Error(ErrorCode::InvalidParams, "expansion applies to 1-d convolutions");
  const std::size_t block_rows = spec.kernel[0] * spec.in_channels;
  if (block_rows > cap_rows || spec.out_channels > cap_cols) {
    throw Error(ErrorCode::KernelTooLarge, "unrolled kernel " + std::to_string(block_rows) + "x" +
                                               std::to_string(spec.out_channels) + " exceeds " +
                                               std::to_string(cap_rows) + "x" + std::to_string(cap_cols));
  }
  ExpansionPlan plan;
  plan.row_offset_per_copy = spec.stride[0] * spec.in_channels;
  plan.col_offset_per_copy = spec.out_channels;
  plan.block_rows = block_rows;
  plan.block_cols = spec.out_channels;
  plan.copies = std::min((cap_rows - block_rows) / plan.row_offset_per_copy + 1, cap_cols / spec.out_channels);
  plan.packed_rows = (plan.copies - 1) * plan.row_offset_per_copy + block_rows;
  plan.packed_cols = plan.copies * plan.block_cols;
  return plan;
}

Tensor pack_expanded(const ExpansionPlan& plan, std::span<const Tensor> copy_blocks) {
  if (copy_blocks.size() != 1 && copy_blocks.size() != plan.copies) {
    throw Error(ErrorCode::ShapeMismatch, "need 1 or " + std::to_string(plan.copies) + " copy blocks");
  }
  require_same_dtype(copy_blocks);
  for (const auto& b : copy_blocks) require_shape(b, Shape{plan.block_rows, plan.block_cols}, "copy block");
  return dispatch_dtype(copy_blocks.front().dtype(), [&](auto tag) {
    using T = decltype(tag);
    std::vector<T> packed(plan.packed_rows * plan.packed_cols);
    for (std::size_t c = 0; c < plan.copies; ++c) {
      const auto src = copy_blocks[copy_blocks.size() == 1 ? 0 : c].values<T>();
      const std::size_t r0 = c * plan.row_offset_per_copy, c0 = c * plan.col_offset_per_copy;
      for (std::size_t i = 0; i < plan.block_rows; ++i) {
        for (std::size_t j = 0; j < plan.block_cols; ++j) {
          packed[(r0 + i) * plan.packed_cols + c0 + j] = src[i * plan.block_cols + j];
        }
      }
    }
    return Tensor(Shape{plan.packed_rows, plan.packed_cols}, std::move(packed));
  });
}

Tensor expanded_windows(const ExpansionPlan& plan, const ConvSpec& spec, const Tensor& input) {
  spec.validate();
  require_shape(input, spec.input_shape(), "input");
  const std::size_t cin = spec.in_channels, length = spec.extent[0];
  const std::size_t runs = plan.runs(spec.positions());
  return dispatch_dtype(input.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = input.values<T>();
    std::vector<T> w(runs * plan.packed_rows);
    for (std::size_t r = 0; r < runs; ++r) {
      const std::size_t t0 = r * plan.copies * spec.stride[0];
      for (std::size_t j = 0; j < plan.packed_rows; ++j) {
        const std::size_t t = t0 + j / cin;
        if (t < length) w[r * plan.packed_rows + j] = src[(j % cin) * length + t];
      }
    }
    return Tensor(Shape{runs, plan.packed_rows}, std::move(w));
  });
}

Tensor unpack_expanded(const ExpansionPlan& plan, const ConvSpec& spec, const Tensor& run_outputs) {
  const std::size_t positions = spec.positions(), cout = spec.out_channels;
  require_shape(run_outputs, Shape{plan.runs(positions), plan.packed_cols}, "expanded result");
  return dispatch_dtype(run_outputs.dtype(), [&](auto tag) {
    using T = decltype(tag);
    const auto src = run_outputs.values<T>();
    std::vector<T> y(positions * cout);
    for (std::size_t p = 0; p < positions; ++p) {
      const std::size_t r = p / plan.copies, c = p % plan.copies;
      for (std::size_t o = 0; o < cout; ++o) y[p * cout + o] = src[r * plan.packed_cols + c * cout + o];
    }
    return Tensor(Shape{positions, cout}, std::move(y));
  });
}

Tensor execute_expanded(const ExpansionPlan& plan, const ConvSpec& spec, std::span<const Tensor> copy_blocks,
                        const Tensor& input, const MatmulFn& matmul) {
  const Tensor packed = pack_expanded(plan, copy_blocks);
  const Tensor windows = expanded_windows(plan, spec, input);
  return unpack_expanded(plan, spec, matmul(windows, packed));
}

std::string lowering_to_json(const ConvSpec& spec, const ExpansionPlan* plan, int indent) {
  using nlohmann::json;
  json root;
  root["dims"] = spec.dims;
  root["in_channels"] = spec.in_channels;
  root["out_channels"] = spec.out_channels;
  root["kernel"] = std::vector<std::size_t>(spec.kernel.begin(), spec.kernel.begin() + spec.dims);
  root["stride"] = std::vector<std::size_t>(spec.stride.begin(), spec.stride.begin() + spec.dims);
  root["extent"] = std::vector<std::size_t>(spec.extent.begin(), spec.extent.begin() + spec.dims);
  root["output_shape"] = spec.output_shape();
  root["matrix"] = {{"rows", spec.matrix_rows()}, {"cols", spec.out_channels}, {"row_index", "tap * in_channels + channel"}};
  root["positions"] = spec.positions();
  if (plan != nullptr) {
    json copies = json::array();
    for (std::size_t c = 0; c < plan->copies; ++c) {
      copies.push_back({{"rows", {c * plan->row_offset_per_copy, c * plan->row_offset_per_copy + plan->block_rows}},
                        {"cols", {c * plan->col_offset_per_copy, (c + 1) * plan->col_offset_per_copy}}});
    }
    root["expansion"] = {{"copies", plan->copies},
                         {"row_offset_per_copy", plan->row_offset_per_copy},
                         {"col_offset_per_copy", plan->col_offset_per_copy},
                         {"packed_rows", plan->packed_rows},
                         {"packed_cols", plan->packed_cols},
                         {"runs", plan->runs(spec.positions())},
                         {"placements", std::move(copies)}};
  }
  return root.dump(indent);
}

}  // namespace anamac
