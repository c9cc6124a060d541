#include "anamac/tensor.hpp"

#include <cstring>
#include <sstream>

namespace anamac {

std::string_view to_string(DType dtype) {
  switch (dtype) {
    case DType::f32: return "f32";
    case DType::i32: return "i32";
    case DType::u8: return "u8";
    case DType::i8: return "i8";
  }
  return "?";
}

std::size_t dtype_size(DType dtype) {
  switch (dtype) {
    case DType::f32:
    case DType::i32: return 4;
    case DType::u8:
    case DType::i8: return 1;
  }
  return 0;
}

std::size_t element_count(const Shape& shape) {
  std::size_t n = 1;
  for (auto extent : shape) n *= extent;
  return n;
}

std::string shape_string(const Shape& shape) {
  std::ostringstream os;
  os << '[';
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i != 0) os << ',';
    os << shape[i];
  }
  os << ']';
  return os.str();
}

Tensor::Tensor() : Tensor(Shape{}, Storage(std::vector<float>(1, 0.0f))) {}

Tensor::Tensor(Shape shape, Storage storage)
    : shape_(std::move(shape)), storage_(std::make_shared<const Storage>(std::move(storage))) {
  if (shape_.size() > kMaxRank) {
    throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(shape_.size()) + " > 8");
  }
  const std::size_t len = std::visit([](const auto& v) { return v.size(); }, *storage_);
  if (len != element_count(shape_)) {
    throw Error(ErrorCode::ShapeMismatch, "buffer of " + std::to_string(len) +
                                              " elements does not match shape " +
                                              shape_string(shape_));
  }
}

DType Tensor::dtype() const {
  return static_cast<DType>(storage_->index());
}

std::size_t Tensor::dim(std::size_t axis) const {
  if (axis >= shape_.size()) {
    throw Error(ErrorCode::ShapeMismatch,
                "axis " + std::to_string(axis) + " out of range for " + shape_string(shape_));
  }
  return shape_[axis];
}

std::vector<float> Tensor::to_float() const {
  return std::visit(
      [](const auto& v) {
        std::vector<float> out(v.size());
        for (std::size_t i = 0; i < v.size(); ++i) out[i] = static_cast<float>(v[i]);
        return out;
      },
      *storage_);
}

std::span<const std::byte> Tensor::bytes() const {
  return std::visit(
      [](const auto& v) { return std::as_bytes(std::span(v.data(), v.size())); }, *storage_);
}

Tensor Tensor::reshape(Shape new_shape) const {
  if (element_count(new_shape) != element_count(shape_)) {
    throw Error(ErrorCode::ShapeMismatch,
                "cannot reshape " + shape_string(shape_) + " to " + shape_string(new_shape));
  }
  if (new_shape.size() > kMaxRank) {
    throw Error(ErrorCode::RankTooLarge, "rank " + std::to_string(new_shape.size()) + " > 8");
  }
  Tensor out = *this;
  out.shape_ = std::move(new_shape);
  return out;
}

bool Tensor::operator==(const Tensor& other) const {
  if (dtype() != other.dtype() || shape_ != other.shape_) return false;
  const auto a = bytes();
  const auto b = other.bytes();
  return a.size() == b.size() && (a.empty() || std::memcmp(a.data(), b.data(), a.size()) == 0);
}

}  // namespace anamac
