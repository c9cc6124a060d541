#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <type_traits>
#include <variant>
#include <vector>

#include "anamac/error.hpp"

namespace anamac {

enum class DType : std::uint8_t { f32 = 0, i32 = 1, u8 = 2, i8 = 3 };

std::string_view to_string(DType dtype);
std::size_t dtype_size(DType dtype);

template <class T>
struct dtype_of;
template <>
struct dtype_of<float> : std::integral_constant<DType, DType::f32> {};
template <>
struct dtype_of<std::int32_t> : std::integral_constant<DType, DType::i32> {};
template <>
struct dtype_of<std::uint8_t> : std::integral_constant<DType, DType::u8> {};
template <>
struct dtype_of<std::int8_t> : std::integral_constant<DType, DType::i8> {};

template <class T>
concept TensorElement = requires { dtype_of<T>::value; };

using Shape = std::vector<std::size_t>;

inline constexpr std::size_t kMaxRank = 8;

/// Calls f(T{}) with the element type matching `dtype`.
template <class F>
decltype(auto) dispatch_dtype(DType dtype, F&& f) {
  switch (dtype) {
    case DType::f32: return f(float{});
    case DType::i32: return f(std::int32_t{});
    case DType::u8: return f(std::uint8_t{});
    case DType::i8: break;
  }
  return f(std::int8_t{});
}

/// Product of extents; 1 for a rank-0 shape.
std::size_t element_count(const Shape& shape);
std::string shape_string(const Shape& shape);

/// Dense row-major tensor. The buffer is immutable and shared between
/// reshaped views of the same data.
class Tensor {
 public:
  using Storage = std::variant<std::vector<float>, std::vector<std::int32_t>,
                               std::vector<std::uint8_t>, std::vector<std::int8_t>>;

  Tensor();

  template <TensorElement T>
  Tensor(Shape shape, std::vector<T> data)
      : Tensor(std::move(shape), Storage(std::move(data))) {}

  template <TensorElement T>
  static Tensor zeros(Shape shape) {
    std::vector<T> data(element_count(shape));
    return Tensor(std::move(shape), std::move(data));
  }

  DType dtype() const;
  const Shape& shape() const { return shape_; }
  std::size_t rank() const { return shape_.size(); }
  std::size_t size() const { return element_count(shape_); }
  std::size_t dim(std::size_t axis) const;

  template <TensorElement T>
  std::span<const T> values() const {
    const auto* vec = std::get_if<std::vector<T>>(storage_.get());
    if (vec == nullptr) {
      throw Error(ErrorCode::DTypeMismatch,
                  "tensor holds " + std::string(to_string(dtype())) + ", requested " +
                      std::string(to_string(dtype_of<T>::value)));
    }
    return {vec->data(), vec->size()};
  }

  /// Copies the values out as float regardless of dtype.
  std::vector<float> to_float() const;

  /// Raw little-endian-agnostic byte view of the buffer (host order).
  std::span<const std::byte> bytes() const;

  /// Metadata-only change of shape.
  Tensor reshape(Shape new_shape) const;

  /// Bit-exact comparison of dtype, shape and payload (NaN payloads included).
  bool operator==(const Tensor& other) const;

 private:
  Tensor(Shape shape, Storage storage);

  Shape shape_;
  std::shared_ptr<const Storage> storage_;
};

}  // namespace anamac
