#include "faec/numerics/buffer.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "faec/errors.hpp"

namespace faec {

std::size_t shape_size(const Shape& shape) {
  if (shape.empty()) return 0;
  return std::accumulate(shape.begin(), shape.end(), std::size_t{1}, std::multiplies<>());
}

std::string shape_string(const Shape& shape) {
  std::string out = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) out += "x";
    out += std::to_string(shape[i]);
  }
  return out + "]";
}

RealBuffer::RealBuffer(Shape shape, double fill)
    : shape_(std::move(shape)), data_(shape_size(shape_), fill) {
  for (auto d : shape_) {
    if (d == 0) throw ConfigError("RealBuffer: zero dimension in shape " + shape_string(shape_));
  }
}

RealBuffer::RealBuffer(Shape shape, std::vector<double> data)
    : shape_(std::move(shape)), data_(std::move(data)) {
  if (data_.size() != shape_size(shape_)) {
    throw ConfigError("RealBuffer: " + std::to_string(data_.size()) +
                      " values do not fill shape " + shape_string(shape_));
  }
}

std::size_t RealBuffer::rows() const {
  if (shape_.size() <= 1) return shape_.empty() ? 0 : 1;
  return shape_[0];
}

std::size_t RealBuffer::cols() const {
  if (shape_.empty()) return 0;
  if (shape_.size() == 1) return shape_[0];
  return data_.size() / shape_[0];
}

void RealBuffer::fill(double value) { std::fill(data_.begin(), data_.end(), value); }

void RealBuffer::reshape(Shape shape) {
  if (shape_size(shape) != data_.size()) {
    throw ConfigError("RealBuffer::reshape: " + shape_string(shape_) + " -> " +
                      shape_string(shape));
  }
  shape_ = std::move(shape);
}

bool RealBuffer::all_finite() const {
  return std::all_of(data_.begin(), data_.end(), [](double v) { return std::isfinite(v); });
}

Parameter::Parameter(std::string name_, Shape shape)
    : name(std::move(name_)), value(shape), grad(shape), adam_m(shape), adam_v(std::move(shape)) {}

}  // namespace faec
