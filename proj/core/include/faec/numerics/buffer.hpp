#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <string>
#include <vector>

namespace faec {

using Shape = std::vector<std::size_t>;

std::size_t shape_size(const Shape& shape);
std::string shape_string(const Shape& shape);

// Dense row-major binary64 array. Rank 1 buffers are treated as a single row
// by the matrix helpers.
class RealBuffer {
 public:
  RealBuffer() = default;
  explicit RealBuffer(Shape shape, double fill = 0.0);
  RealBuffer(Shape shape, std::vector<double> data);

  static RealBuffer matrix(std::size_t rows, std::size_t cols, double fill = 0.0) {
    return RealBuffer({rows, cols}, fill);
  }

  const Shape& shape() const { return shape_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  std::size_t rows() const;
  std::size_t cols() const;

  double* data() { return data_.data(); }
  const double* data() const { return data_.data(); }
  std::span<double> span() { return data_; }
  std::span<const double> span() const { return data_; }
  std::vector<double>& values() { return data_; }
  const std::vector<double>& values() const { return data_; }

  double& operator[](std::size_t i) { return data_[i]; }
  double operator[](std::size_t i) const { return data_[i]; }
  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols() + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols() + c]; }

  std::span<double> row(std::size_t r) { return std::span(data_).subspan(r * cols(), cols()); }
  std::span<const double> row(std::size_t r) const {
    return std::span(data_).subspan(r * cols(), cols());
  }

  void fill(double value);
  // Same data, new shape of equal element count.
  void reshape(Shape shape);
  bool all_finite() const;

  friend bool operator==(const RealBuffer&, const RealBuffer&) = default;

 private:
  Shape shape_;
  std::vector<double> data_;
};

using Complex = std::complex<double>;
// Complex samples stored as (re, im) pairs; std::complex guarantees the layout.
using ComplexBuffer = std::vector<Complex>;

// Trainable tensor plus its gradient and Adam moment estimates, all one shape.
struct Parameter {
  Parameter() = default;
  Parameter(std::string name, Shape shape);

  std::string name;
  RealBuffer value;
  RealBuffer grad;
  RealBuffer adam_m;
  RealBuffer adam_v;

  const Shape& shape() const { return value.shape(); }
  std::size_t size() const { return value.size(); }
  void zero_grad() { grad.fill(0.0); }
};

}  // namespace faec
